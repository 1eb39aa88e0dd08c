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

#ifndef OSQ_TENSOR_HPP
#define OSQ_TENSOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osq/feasibility.hpp"
#include "osq/json_io.hpp"
#include "osq/linalg.hpp"
#include "osq/opsys.hpp"
#include "osq/quotient.hpp"

namespace osq {

/// Element of M_p(S (x) T), stored as coefficient blocks against the product
/// basis. Slot order everywhere: S first, T second, level last, so the
/// assembled matrix lives in M_{dim(S) * dim(T) * p}.
struct TensorElement {
  MatOpSys s;
  MatOpSys t;
  Eigen::Index level = 1;
  std::vector<Mat> coeff;  // |S|*|T| blocks of p x p, (i, j) at i*|T|+j

  /// sum_{i,j} s.basis[i] (x) t.basis[j] (x) coeff[i*|T|+j].
  Mat assemble() const;

  /// Throws invalid-input on shape violations.
  void validate() const;

  /// Coefficients of an ambient matrix; throws domain error when x is not in
  /// span(S) (x) span(T) (x) M_p within 1e-9 relative.
  static TensorElement from_ambient(const MatOpSys& s, const MatOpSys& t, const Mat& x,
                                    Eigen::Index p);
};

/// Membership in the minimal tensor cone at level p: positivity of the
/// assembled matrix (every pair of states applied slotwise yields a PSD
/// compression, and ambient PSD is exactly that condition here since both
/// factors sit inside matrix algebras). Feasible carries the assembled
/// matrix, Infeasible the bottom-eigenvector projector.
ConeCertificate min_tensor_membership(const TensorElement& x, double tol);

/// Witness that eps * unit + x lies in the maximal tensor cone at level p:
///   eps * 1_S (x) 1_T (x) I_p + x = alpha (P (x) Q) alpha*
/// with P in M_k(S)_+, Q in M_m(T)_+ and alpha a p x (k*m) scale matrix
/// (cone generators per the max-cone description; sums of such terms fold
/// into one by enlarging k and m with direct sums).
struct MaxConeWitness {
  Eigen::Index k = 1;
  Eigen::Index m = 1;
  double eps = 0.0;
  Mat p;      // member of M_k(S)_+, ambient (dim(S)*k) square
  Mat q;      // member of M_m(T)_+
  Mat alpha;  // level x (k*m)
  double recon_residual = 0.0;

  Json to_json() const;
};

/// Nonconvex search for a max-cone witness at fixed factor levels (k, m).
/// Penalized least-squares over (P, Q, alpha) with PSD-violation penalty
/// continuation, then a projection polish; a returned witness has been
/// re-verified: P and Q pass ambient_cone_membership at tol and the
/// reconstruction residual is <= tol * max(1, ||target||). nullopt means the
/// search failed, which decides nothing.
std::optional<MaxConeWitness> max_tensor_inner_search(const TensorElement& x, Eigen::Index k,
                                                      Eigen::Index m, double eps, int restarts,
                                                      std::uint64_t seed, double tol);

/// Coefficient data for an element of M_p(W_n (x) T), T a system inside M_b:
/// 1 (x) A11 + sum_{i != j} e_ij (x) A_ij with every block in M_p(T)
/// (validated through block_coefficients at 1e-9 relative).
struct WnMaxData {
  int n = 0;
  MatOpSys t;
  Eigen::Index p = 1;
  Mat a11;                   // (b*p) x (b*p)
  std::vector<Mat> offdiag;  // n*n entries, (i,j) at i*n+j, diagonal ignored
};

/// T-constrained lift test for the maximal cone: Feasible iff a PSD
/// R in M_n (x) M_p(T) exists with R_ij = A_ij for i != j and
/// sum_i R_ii = n * (A11 + eps * 1_T (x) I_p). Lift directions run over
/// (E_ii - E_{i+1,i+1}) (x) T-basis (x) herm_basis(p), so every affine point
/// keeps its blocks inside M_p(T). Feasibility is monotone in eps.
ConeCertificate wn_max_membership(const WnMaxData& d, double eps, double tol,
                                  const SolveOptions& opt = {});

/// Same data over the tridiagonal quotient: 1 (x) S0 + sum u_i (x) S_i with
/// S0, S_i in M_p(T).
struct SnMaxData {
  int n = 0;
  MatOpSys t;
  Eigen::Index p = 1;
  Mat s0;
  std::vector<Mat> band;  // S_1 .. S_{n-1}
};

/// Tridiagonal T-constrained lift for eps * unit + x: Feasible iff a PSD
/// block-tridiagonal R in M_n (x) M_p(T) exists with R_{i,i+1} = S_i, zero
/// off-band blocks, and sum_i R_ii = S0 + n * eps * unit (diagonal blocks
/// S0 / n + eps * unit each, matching the representative of x + eps * unit).
ConeCertificate sn_max_membership(const SnMaxData& d, double eps, double tol,
                                  const SolveOptions& opt = {});

/// One sampled instance of a lifting experiment.
struct LiftInstance {
  long id = 0;
  std::uint64_t seed = 0;
  std::string status;      // "feasible" or "counterexample-candidate"
  double eps_star = -1.0;  // smallest grid eps found feasible; -1 when none
  Json certificates;       // per-eps certificate JSON, keyed by eps
};

struct LiftReport {
  std::string op;  // "pstar" or "ps"
  Json params;
  std::vector<LiftInstance> instances;
  long counterexample_candidates = 0;
  bool consistent = true;  // zero candidates

  Json to_json() const;
};

/// Samples `samples` strictly interior (margin ~1e-6, certified via
/// cone_boundary_shift) W_n-type elements with blocks in M_p(T) and tests the
/// T-constrained lift on the ascending eps grid. An instance is a
/// counterexample candidate when the lift is not Feasible at the smallest
/// grid eps. Grid defaults to {1e-2, 1e-4, 1e-6} when empty.
LiftReport pstar_check(const MatOpSys& t, int n, Eigen::Index p, long samples,
                       std::vector<double> eps_grid, std::uint64_t seed);

/// The tridiagonal variant over S_{n-1} = T_n / J_n.
LiftReport ps_check(const MatOpSys& t, int n, Eigen::Index p, long samples,
                    std::vector<double> eps_grid, std::uint64_t seed);

/// Min/max comparison experiments. Buckets are evidence grades, never
/// theorems: the search brackets, it does not decide.
///  - ee:    elements of E_n (x) E_n at level p; min members get a max-cone
///           inner search, plus planted max elements and min-refuted shifts.
///  - ww:    W_n (x) W_n coefficient data; doubly constrained lift decides
///           certified-in-both, unitary-pair evaluation refutes in min.
///  - uu_vv: max members of U_n (x) U_n re-tested inside V_n (x) V_n.
enum class GapMode { EE, WW, UUVV };

GapMode parse_gap_mode(const std::string& name);
std::string to_string(GapMode m);

struct GapInstance {
  long id = 0;
  std::uint64_t seed = 0;
  std::string bucket;  // "certified-in-both", "refuted-in-min", "unresolved"
  Json detail;         // witnesses / certificates for replay
};

struct GapReport {
  std::string mode;
  Json params;
  std::vector<GapInstance> instances;
  long certified_in_both = 0;
  long refuted_in_min = 0;
  long unresolved = 0;
  /// No instance may carry contradictory evidence (a verified min refutation
  /// together with a verified max witness); false is a release blocker.
  bool consistent = true;

  Json to_json() const;
};

/// Caps: n <= 4, p <= 2 (invalid-input above). Deterministic in (mode, n, p,
/// samples, seed).
GapReport gap_search(GapMode mode, int n, Eigen::Index p, long samples, std::uint64_t seed);

}  // namespace osq

#endif  // OSQ_TENSOR_HPP
