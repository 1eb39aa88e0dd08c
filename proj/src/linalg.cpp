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

#include "osq/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

namespace osq {

namespace {

Mat hermitian_average(const Mat& a) {
  Mat h = (a + a.adjoint()) / 2.0;
  // IEEE addition is commutative, so the average is Hermitian except possibly
  // for signed zeros on the diagonal imaginary part; force those.
  for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) = Cplx(h(i, i).real(), 0.0);
  return h;
}

}  // namespace

HermMat HermMat::from(const Mat& a, double herm_tol) {
  if (a.rows() != a.cols()) fail_invalid("HermMat: matrix not square");
  double dev = (a - a.adjoint()).norm();
  if (dev > herm_tol * std::max(1.0, a.norm()))
    fail_invalid("HermMat: input not hermitian within tolerance");
  return HermMat(hermitian_average(a));
}

HermMat HermMat::mirror(const Mat& a) {
  if (a.rows() != a.cols()) fail_invalid("HermMat: matrix not square");
  return HermMat(hermitian_average(a));
}

double hs_inner(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace().real(); }

Cplx hs_inner_c(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace(); }

RVec herm_eigenvalues(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

PsdResult psd_check(const Mat& h, double tol) {
  if (h.rows() != h.cols()) fail_invalid("psd_check: matrix not square");
  if (h.rows() == 0) return {true, 0.0};
  double min_eig = herm_eigenvalues(hermitian_average(h)).minCoeff();
  return {min_eig >= -tol, min_eig};
}

PsdResult psd_check(const HermMat& h, double tol) { return psd_check(h.raw(), tol); }

Mat kron(const Mat& a, const Mat& b) {
  Mat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Mat partial_trace_left(const Mat& h, Eigen::Index a, Eigen::Index b) {
  if (h.rows() != a * b || h.cols() != a * b) fail_invalid("partial_trace_left: dimension mismatch");
  Mat r = Mat::Zero(b, b);
  for (Eigen::Index i = 0; i < a; ++i) r += h.block(i * b, i * b, b, b);
  return r;
}

Mat partial_trace_right(const Mat& h, Eigen::Index a, Eigen::Index b) {
  if (h.rows() != a * b || h.cols() != a * b) fail_invalid("partial_trace_right: dimension mismatch");
  Mat r = Mat::Zero(a, a);
  for (Eigen::Index i = 0; i < a; ++i)
    for (Eigen::Index j = 0; j < a; ++j) {
      Cplx s = 0.0;
      for (Eigen::Index p = 0; p < b; ++p) s += h(i * b + p, j * b + p);
      r(i, j) = s;
    }
  return r;
}

Mat psd_factor(const Mat& h, double tol) {
  PsdResult pr = psd_check(h, tol);
  if (!pr.is_psd) {
    std::ostringstream os;
    os << "psd_factor: matrix not PSD at tol (min eigenvalue " << pr.min_eig << ")";
    fail_domain(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_average(h));
  RVec lam = es.eigenvalues();
  Mat x(h.rows(), h.cols());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    x.col(k) = es.eigenvectors().col(k) * std::sqrt(std::max(0.0, lam(k)));
  return x;
}

Mat psd_project(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_average(h));
  RVec lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

PartialBandedMat PartialBandedMat::make(
    Eigen::Index nblocks, Eigen::Index block, Eigen::Index bandwidth, const Mat& entries,
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
  if (nblocks < 1 || block < 1 || bandwidth < 0) fail_invalid("PartialBandedMat: bad shape");
  Eigen::Index d = nblocks * block;
  if (entries.rows() != d || entries.cols() != d) fail_invalid("PartialBandedMat: entries dimension mismatch");
  if (mask.rows() != nblocks || mask.cols() != nblocks) fail_invalid("PartialBandedMat: mask dimension mismatch");

  PartialBandedMat p;
  p.nblocks = nblocks;
  p.block = block;
  p.bandwidth = bandwidth;
  p.mask = mask;
  p.entries = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < nblocks; ++i) {
    if (!mask(i, i)) fail_invalid("PartialBandedMat: diagonal blocks must be specified");
    for (Eigen::Index j = 0; j < nblocks; ++j) {
      if (mask(i, j) != mask(j, i)) fail_invalid("PartialBandedMat: mask not symmetric");
      if (mask(i, j) && std::abs(i - j) > bandwidth)
        fail_invalid("PartialBandedMat: specified block outside the band");
      if (mask(i, j)) p.entries.block(i * block, j * block, block, block) = entries.block(i * block, j * block, block, block);
    }
  }
  double dev = (p.entries - p.entries.adjoint()).norm();
  if (dev > 1e-12 * std::max(1.0, p.entries.norm()))
    fail_invalid("PartialBandedMat: specified entries not hermitian-consistent");
  // The stored entries are the canonical specified values; make them exactly
  // Hermitian so completions can agree with them bitwise.
  p.entries = hermitian_average(p.entries);
  return p;
}

namespace {

/// Moore-Penrose pseudo-inverse of a Hermitian block, eigenvalues below
/// 1e-10 * spectral norm treated as zero.
Mat herm_pinv(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_average(h));
  RVec lam = es.eigenvalues();
  double cutoff = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), 0.0);
  RVec inv(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) inv(k) = std::abs(lam(k)) > cutoff ? 1.0 / lam(k) : 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

HermMat tridiag_psd_complete(const PartialBandedMat& p, double tol) {
  if (p.bandwidth > 1) fail_invalid("tridiag_psd_complete: bandwidth must be <= 1");
  Eigen::Index n = p.nblocks, b = p.block;
  auto blk = [&](const Mat& m, Eigen::Index i, Eigen::Index j) { return m.block(i * b, j * b, b, b); };

  for (Eigen::Index i = 0; i < n; ++i) {
    PsdResult d = psd_check(Mat(blk(p.entries, i, i)), tol);
    if (!d.is_psd) {
      std::ostringstream os;
      os << "tridiag_psd_complete: diagonal block " << i << " not PSD (min eigenvalue " << d.min_eig << ")";
      fail_domain(os.str());
    }
  }
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (p.bandwidth < 1 || !p.mask(i, i + 1)) continue;
    Mat two(2 * b, 2 * b);
    two.topLeftCorner(b, b) = blk(p.entries, i, i);
    two.topRightCorner(b, b) = blk(p.entries, i, i + 1);
    two.bottomLeftCorner(b, b) = blk(p.entries, i + 1, i);
    two.bottomRightCorner(b, b) = blk(p.entries, i + 1, i + 1);
    PsdResult d = psd_check(two, tol);
    if (!d.is_psd) {
      std::ostringstream os;
      os << "tridiag_psd_complete: principal 2x2 block at " << i << " not PSD (min eigenvalue " << d.min_eig << ")";
      fail_domain(os.str());
    }
  }

  // Absent band blocks fill with zero (the Schur fill across an empty cut),
  // then distances 2..n-1 fill through the j = k-1 pivot.
  Mat y = p.entries;
  for (Eigen::Index dist = 2; dist < n; ++dist) {
    for (Eigen::Index i = 0; i + dist < n; ++i) {
      Eigen::Index k = i + dist, j = k - 1;
      Mat fill = blk(y, i, j) * herm_pinv(blk(y, j, j)) * blk(y, j, k);
      y.block(i * b, k * b, b, b) = fill;
      y.block(k * b, i * b, b, b) = fill.adjoint();
    }
  }
  // Restore specified entries bitwise (the sweep never writes inside the band,
  // but the mirroring above could touch rounding on the adjoint side).
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (p.mask(i, j)) y.block(i * b, j * b, b, b) = p.entries.block(i * b, j * b, b, b);
  return HermMat::mirror(y);
}

}  // namespace osq
