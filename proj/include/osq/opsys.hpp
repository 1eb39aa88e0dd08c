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

#ifndef OSQ_OPSYS_HPP
#define OSQ_OPSYS_HPP

#include <string>
#include <vector>

#include "osq/feasibility.hpp"
#include "osq/linalg.hpp"

namespace osq {

/// The named concrete operator systems.
///  - Mn: all of M_n.
///  - Tn: tridiagonal matrices in M_n.
///  - En: matrices with all diagonal entries equal.
///  - Vn: direct sums b_1 (+) ... (+) b_{n-1} of 2x2 blocks inside
///        M_{2(n-1)} with the diagonal link b_k(2,2) = b_{k+1}(1,1).
///  - Un: the Vn sums with every block diagonal entry equal.
enum class SystemKind { Mn, Tn, En, Un, Vn };

SystemKind parse_system_kind(const std::string& name);
std::string to_string(SystemKind k);

/// Unital involution-closed subspace of an ambient matrix algebra, carried by
/// a Hermitian basis. Basis order is stable and documented per system.
struct MatOpSys {
  SystemKind kind = SystemKind::Mn;
  int n = 0;
  Eigen::Index dim = 0;        // ambient dimension
  std::vector<Mat> basis;      // hermitian, linearly independent
  std::string name;            // e.g. "M3"

  Mat unit() const { return Mat::Identity(dim, dim); }
};

/// Builds a named system; n >= 2. Basis sizes: Mn -> n^2, Tn -> 3n-2,
/// En -> n^2-n+1, Vn -> 3n-2, Un -> 2n-1.
MatOpSys make_system(SystemKind kind, int n);

struct SpanCheck {
  bool in_span = false;
  Eigen::VectorXcd coeffs;  // least-squares coefficients against the basis
  double residual = 0.0;    // Frobenius distance to the span
};

/// Least-squares membership of an ambient matrix in the system span.
/// in_span iff residual <= 1e-9 * max(||x||, 1e-6).
SpanCheck subspace_membership(const MatOpSys& s, const Mat& x);

struct BlockCoeffs {
  std::vector<Mat> blocks;  // one p x p block per basis element
  double residual = 0.0;    // Frobenius distance of x to span (x) M_p
};

/// Level-p coefficients: minimizes ||x - sum_i basis[i] (x) C_i||_F over
/// complex p x p blocks C_i. x is (dim*p) x (dim*p), system slot first.
BlockCoeffs block_coefficients(const MatOpSys& s, const Mat& x, Eigen::Index p);

/// Element of M_p(S), stored as coefficient blocks against the system basis.
struct BlockElement {
  MatOpSys sys;
  Eigen::Index level = 1;
  std::vector<Mat> blocks;

  /// sum_i basis[i] (x) blocks[i], a (dim*level) x (dim*level) matrix.
  Mat assemble() const;

  /// Hermitian iff every coefficient block is (basis elements are Hermitian).
  bool is_hermitian(double tol = 1e-12) const;

  static BlockElement from_ambient(const MatOpSys& s, const Mat& x, Eigen::Index p);
};

/// Membership of a Hermitian element in the level-p cone
/// M_p(S)_+ = PSD(ambient (x) M_p) intersected with the span. Certificates:
/// Feasible carries the assembled matrix as witness; Infeasible carries the
/// bottom-eigenvector projector as separator.
ConeCertificate ambient_cone_membership(const BlockElement& x, double tol);

/// Hermitian basis of M_p in the stable order used across the toolkit:
/// E_aa (a = 0..p-1), then for a < b the pair (E_ab + E_ba), i(E_ab - E_ba).
std::vector<Mat> herm_basis(Eigen::Index p);

}  // namespace osq

#endif  // OSQ_OPSYS_HPP
