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

#ifndef OSQ_LINALG_HPP
#define OSQ_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "osq/error.hpp"

namespace osq {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Hermitian matrix with the symmetry enforced structurally: construction
/// mirrors the upper triangle onto the lower and zeroes diagonal imaginary
/// parts, so stored entries satisfy a(i,j) == conj(a(j,i)) exactly.
class HermMat {
 public:
  /// Validates near-hermiticity (||A - A*|| <= herm_tol * max(1, ||A||)),
  /// then stores the exact Hermitian average (A + A*)/2.
  static HermMat from(const Mat& a, double herm_tol = 1e-12);

  /// Stores (A + A*)/2 without validation. For internal exact results.
  static HermMat mirror(const Mat& a);

  const Mat& raw() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  explicit HermMat(Mat m) : m_(std::move(m)) {}
  Mat m_;
};

/// Real Hilbert-Schmidt pairing Re tr(A* B).
double hs_inner(const Mat& a, const Mat& b);

/// Complex Hilbert-Schmidt pairing tr(A* B).
Cplx hs_inner_c(const Mat& a, const Mat& b);

struct PsdResult {
  bool is_psd;
  double min_eig;
};

/// PSD test: is_psd iff the smallest eigenvalue is >= -tol.
PsdResult psd_check(const Mat& h, double tol);
PsdResult psd_check(const HermMat& h, double tol);

/// Sorted eigenvalues (ascending) of a Hermitian matrix.
RVec herm_eigenvalues(const Mat& h);

/// Kronecker product, first argument in the slow (outer) slot.
Mat kron(const Mat& a, const Mat& b);

/// Contract the first tensor slot of h acting on C^a (x) C^b: the result is
/// b x b with r(p,q) = sum_i h(i*b+p, i*b+q).
Mat partial_trace_left(const Mat& h, Eigen::Index a, Eigen::Index b);

/// Contract the second tensor slot: a x a with r(i,j) = sum_p h(i*b+p, j*b+p).
Mat partial_trace_right(const Mat& h, Eigen::Index a, Eigen::Index b);

/// Factor H = X X* for PSD H (eigenvalues below 0 clipped; H must pass
/// psd_check at tol, else a domain error carrying the offending eigenvalue).
Mat psd_factor(const Mat& h, double tol);

/// Orthogonal projection onto the PSD cone (eigenvalue clipping).
Mat psd_project(const Mat& h);

/// Hermitian partial matrix with block-banded specified pattern. The scalar
/// dimension is nblocks * block. Entries outside the band, or inside the band
/// but unmasked, are absent (stored as zero). The block diagonal is always
/// specified.
struct PartialBandedMat {
  Eigen::Index nblocks = 0;
  Eigen::Index block = 1;
  Eigen::Index bandwidth = 1;  // in blocks
  Mat entries;                 // dim x dim, absent blocks zeroed
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;  // nblocks x nblocks

  Eigen::Index dim() const { return nblocks * block; }

  /// Validates shape, mask symmetry, mandatory diagonal, bandedness, and
  /// hermiticity of specified blocks; zeroes absent blocks exactly.
  static PartialBandedMat make(Eigen::Index nblocks, Eigen::Index block, Eigen::Index bandwidth,
                               const Mat& entries,
                               const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask);
};

/// PSD completion of a bandwidth-1 partial matrix by the sequential Schur
/// sweep y(i,k) := y(i,j) pinv(y(j,j)) y(j,k) with j = k-1, blockwise, after
/// zero-filling absent band blocks. Pseudo-inverse cutoff 1e-10 * ||y(j,j)||.
/// Succeeds iff all block diagonals and all fully specified consecutive 2x2
/// principal blocks are PSD at tol (else a domain error naming the block).
/// The result agrees exactly (bitwise) with every specified entry.
HermMat tridiag_psd_complete(const PartialBandedMat& p, double tol);

}  // namespace osq

#endif  // OSQ_LINALG_HPP
