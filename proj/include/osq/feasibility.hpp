// Copyright 2026 The osq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OSQ_FEASIBILITY_HPP
#define OSQ_FEASIBILITY_HPP

#include <optional>
#include <string>
#include <vector>

#include "osq/json_io.hpp"
#include "osq/linalg.hpp"

namespace osq {

/// Affine-PSD feasibility instance: does the affine set
///   { offset + sum_i t_i basis[i] : t real }
/// intersect the PSD cone? basis elements are Hermitian and linearly
/// independent (Gram matrix nonsingular at 1e-10), offset is Hermitian.
struct AffinePsdProblem {
  Eigen::Index dim = 0;
  std::vector<Mat> basis;
  Mat offset;

  /// Throws invalid-input on any violated structural invariant.
  void validate() const;
};

enum class CertStatus { Feasible, Infeasible, Undecided };

std::string to_string(CertStatus s);

/// Certificate for an AffinePsdProblem decision.
///  - Feasible: witness is in the affine set (projection residual <= tol)
///    and PSD at tol.
///  - Infeasible: separator F has unit Frobenius norm, is PSD at tol,
///    satisfies |<F, basis[i]>| <= tol for all i, and <F, offset> <=
///    -tol * tr(F). The last bound makes a verified Feasible and a verified
///    Infeasible certificate mutually exclusive: it implies every affine
///    point has min eigenvalue strictly below -tol.
///  - Undecided carries no claim.
struct ConeCertificate {
  CertStatus status = CertStatus::Undecided;
  std::optional<Mat> witness;
  std::optional<Mat> separator;
  long iterations = 0;
  double residual = 0.0;

  Json to_json() const;
  static ConeCertificate from_json(const Json& j);
};

struct SolveOptions {
  double tol = 1e-9;
  /// Dykstra iteration budget before the smoothed fallback engages.
  long dykstra_iters = 400;
  /// Evaluation budget for the smoothed min-eigenvalue maximization.
  long smooth_evals = 20000;
  /// Stop the margin ascent early once an affine point with min eigenvalue
  /// >= this value is found (0 disables early stopping).
  double stop_when_above = 0.0;
};

/// Decides feasibility. Dykstra alternating projections run first; if they
/// neither find a PSD affine point nor produce a verifiable separator from
/// the averaged normal directions, a smoothed max-min-eigenvalue ascent
/// (log-sum-exp softening, L-BFGS, beta continuation) decides via its primal
/// point (witness) or its stationary softmax density (separator). Every
/// returned certificate has passed verify_certificate; on verification
/// failure the status degrades to Undecided. Fully deterministic.
ConeCertificate solve_feasibility(const AffinePsdProblem& prob, const SolveOptions& opt = {});

/// Independent re-check of a certificate's invariants. Returns false for
/// Undecided or on any violated bound; never throws on tampered content.
bool verify_certificate(const AffinePsdProblem& prob, const ConeCertificate& cert, double tol);

/// Result of the smoothed concave maximization of
///   f(t) = lambda_min(offset + sum_i t_i basis[i]).
/// Guarantees lower <= sup f <= upper with both bounds certified: `lower` is
/// the exact min eigenvalue at `t`, and `upper` comes from a PSD unit-trace
/// density orthogonal to the basis (lambda_min(X) <= <F, X> for all affine X).
struct MarginResult {
  Eigen::VectorXd t;
  double lower = 0.0;
  double upper = 0.0;
  Mat density;  // PSD, unit trace, orthogonal to basis within 1e-12
  long evals = 0;
};

/// target_gap: stop when upper - lower <= target_gap.
/// stop_when_above: stop as soon as lower >= this (HUGE_VAL disables).
MarginResult maximize_margin(const AffinePsdProblem& prob, double target_gap,
                             double stop_when_above, long max_evals);

}  // namespace osq

#endif  // OSQ_FEASIBILITY_HPP
