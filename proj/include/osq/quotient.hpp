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

#ifndef OSQ_QUOTIENT_HPP
#define OSQ_QUOTIENT_HPP

#include <optional>

#include "osq/opsys.hpp"
#include "osq/rng.hpp"

namespace osq {

/// Kernel of a quotient: a Hermitian-spanned subspace of the parent system
/// span, closed under the involution, not containing the unit.
struct KernelSubspace {
  MatOpSys parent;
  std::vector<Mat> basis;  // hermitian, linearly independent

  /// Checks containment in the parent span, hermiticity, independence, and
  /// that the unit keeps distance >= 1e-6 from the kernel span.
  void validate() const;
};

struct Quotient {
  KernelSubspace kernel;

  const MatOpSys& parent() const { return kernel.parent; }
};

/// J_n: trace-zero diagonal matrices, spanned by E_ii - E_{i+1,i+1}. Valid
/// for parents containing the diagonal (Mn, Tn).
Quotient trace_zero_diagonal_quotient(const MatOpSys& parent);

/// Element of M_p(parent/J) carried by a representative in M_p(parent span).
/// The representative need not be Hermitian (norms are defined for all
/// elements); cone queries require hermiticity.
struct QuotientElement {
  Quotient quo;
  Eigen::Index level = 1;  // p
  Mat rep;                 // (parent.dim * p) square, system slot first

  /// Throws if the representative leaves M_p(parent span).
  void validate() const;
};

/// D-cone membership: exists K in M_p(J) Hermitian with rep + K PSD. The
/// affine directions are kernel (x) Hermitian-basis(M_p); certificates are
/// the feasibility engine's.
ConeCertificate d_cone_membership(const QuotientElement& x, double tol,
                                  const SolveOptions& opt = {});

/// Archimedean probe: D-cone membership of eps * unit + x; eps must be > 0.
/// The result is reported as the pair (eps, certificate) by callers.
ConeCertificate c_cone_membership(const QuotientElement& x, double eps, double tol,
                                  const SolveOptions& opt = {});

struct NormResult {
  double value = 0.0;
  double lo = 0.0;      // certified lower bound
  double hi = 0.0;      // certified upper bound
  long probes = 0;
  long iterations = 0;
  bool converged = false;  // hi - lo <= tol reached
};

/// Quotient norm via bisection over t of C-cone probes (eps = tol) on the
/// 2x2 bordered element [[t*unit, x], [x*, t*unit]] at level 2p. Probe
/// certificates are mined for certified threshold bounds (the probe family
/// moves along the ambient identity, so a witness min-eigenvalue mu at probe
/// t certifies threshold <= t + eps - mu and a separator with normalized
/// pairing rho certifies threshold >= t + eps - rho), which typically
/// collapses the bracket in one or two probes.
NormResult quotient_norm(const QuotientElement& x, double tol);

struct BoundaryShift {
  double lambda_star = 0.0;  // min { l : l * unit + x in the cone }
  double lo = 0.0, hi = 0.0;
};

/// Distance-to-cone along the order unit, computed from the certified
/// two-sided bounds of the margin maximization on the D-cone problem.
BoundaryShift cone_boundary_shift(const QuotientElement& x, double tol, long max_evals = 60000);

/// Coefficient data for an element 1 (x) A11 + sum_{i != j} e_ij (x) A_ij of
/// M_p(M_n / J_n). offdiag is row-major n x n with the diagonal ignored;
/// A_ji must equal A_ij* within 1e-12.
struct WnElement {
  int n = 0;
  Eigen::Index p = 1;
  Mat a11;
  std::vector<Mat> offdiag;  // n*n entries of p x p, (i,j) at i*n+j
};

/// The element as a QuotientElement over M_n / J_n with representative
/// I (x) A11 + sum E_ij (x) A_ij.
QuotientElement wn_element(const WnElement& w);

/// Minimal-lift membership: Feasible iff a PSD R in M_n (x) M_p exists with
/// R_ij = A_ij for i != j and sum_i R_ii = n * A11 (the Feasible witness is
/// such an R). Identical to D-cone membership of wn_element.
ConeCertificate wn_min_membership(const WnElement& w, double tol, const SolveOptions& opt = {});

/// Coefficient data for 1 (x) S0 + sum_{i=1}^{n-1} (u_i (x) S_i + u_i* (x) S_i*)
/// over the tridiagonal quotient T_n / J_n.
struct SnElement {
  int n = 0;
  Eigen::Index p = 1;
  Mat s0;
  std::vector<Mat> s;  // S_1 .. S_{n-1}
};

QuotientElement sn_element(const SnElement& e);

/// Tridiagonal minimal lift: Feasible iff a PSD tridiagonal-block R exists
/// with R_{i,i+1} = S_i, zero off-band blocks, and sum_i R_ii = S0.
ConeCertificate sn_min_membership(const SnElement& e, double tol, const SolveOptions& opt = {});

struct RefutationWitness {
  std::vector<Mat> unitaries;  // u_1 .. u_n, r x r
  long trial = 0;
  double min_eig = 0.0;
  Mat evaluated;  // 1_r (x) A11 + sum (1/n) (u_i u_j*) (x) A_ij

  Json to_json() const;
};

/// Randomized refutation of minimal-lift membership: samples Haar unitary
/// collections and evaluates 1_r (x) A11 + sum_{i != j} (1/n) u_i u_j* (x) A_ij;
/// a min eigenvalue < -tol refutes. Returns the first refuting witness, or
/// nullopt after `trials` attempts. Never refutes a Feasible element.
std::optional<RefutationWitness> unitary_refute(const WnElement& w, Eigen::Index r,
                                                long trials, std::uint64_t seed, double tol);

/// Factorization data for a positive x = sum_{i,j} u_i u_j* (x) A_ij: columns
/// satisfy x = sum_k Y_k Y_k* with Y_k = sum_i u_i (x) X_ik. The residual
/// measures the coefficient-space reconstruction error
/// sqrt(sum_{i != j} ||(XX*)_ij - A_ij||^2 + ||sum_i (XX*)_ii - sum_i A_ii||^2).
struct FreeFactorization {
  ConeCertificate lift;  // the minimal-lift certificate; Feasible on success
  Eigen::Index n = 0, p = 1;
  Mat x;  // (n*p) x (n*p) factor of the lift witness; empty when not Feasible
  double residual = 0.0;
};

/// full is row-major n x n blocks A_ij (diagonal included, Hermitian
/// structure A_ji = A_ij* enforced at 1e-12). The minimal-lift membership
/// uses A11 := (1/n) sum_i A_ii; when Infeasible or Undecided the
/// certificate is returned with an empty factor.
FreeFactorization free_factorization(int n, Eigen::Index p, const std::vector<Mat>& full, double tol);

}  // namespace osq

#endif  // OSQ_QUOTIENT_HPP
