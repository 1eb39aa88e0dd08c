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

#include "osq/opsys.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace osq {

SystemKind parse_system_kind(const std::string& name) {
  if (name == "Mn" || name == "M") return SystemKind::Mn;
  if (name == "Tn" || name == "T") return SystemKind::Tn;
  if (name == "En" || name == "E") return SystemKind::En;
  if (name == "Un" || name == "U") return SystemKind::Un;
  if (name == "Vn" || name == "V") return SystemKind::Vn;
  fail_invalid("unknown system kind: " + name);
}

std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::Mn: return "Mn";
    case SystemKind::Tn: return "Tn";
    case SystemKind::En: return "En";
    case SystemKind::Un: return "Un";
    case SystemKind::Vn: return "Vn";
  }
  return "?";
}

std::vector<Mat> herm_basis(Eigen::Index p) {
  std::vector<Mat> b;
  b.reserve(static_cast<std::size_t>(p * p));
  for (Eigen::Index a = 0; a < p; ++a) {
    Mat e = Mat::Zero(p, p);
    e(a, a) = 1.0;
    b.push_back(e);
  }
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index c = a + 1; c < p; ++c) {
      Mat x = Mat::Zero(p, p), y = Mat::Zero(p, p);
      x(a, c) = 1.0;
      x(c, a) = 1.0;
      y(a, c) = Cplx(0.0, 1.0);
      y(c, a) = Cplx(0.0, -1.0);
      b.push_back(x);
      b.push_back(y);
    }
  return b;
}

namespace {

Mat unit_at(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

Mat sym_at(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

Mat asym_at(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
  Mat e = Mat::Zero(d, d);
  e(i, j) = Cplx(0.0, 1.0);
  e(j, i) = Cplx(0.0, -1.0);
  return e;
}

}  // namespace

MatOpSys make_system(SystemKind kind, int n) {
  // The paired-block systems live in M_{2(n-1)} and need n >= 2; the
  // concrete-subspace families degenerate gracefully to scalars at n = 1.
  const int least = (kind == SystemKind::Vn || kind == SystemKind::Un) ? 2 : 1;
  if (n < least) fail_invalid("make_system: size too small for this family");
  MatOpSys s;
  s.kind = kind;
  s.n = n;
  s.name = to_string(kind) + std::to_string(n);
  switch (kind) {
    case SystemKind::Mn: {
      s.dim = n;
      for (Eigen::Index i = 0; i < n; ++i) s.basis.push_back(unit_at(n, i, i));
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          s.basis.push_back(sym_at(n, i, j));
          s.basis.push_back(asym_at(n, i, j));
        }
      break;
    }
    case SystemKind::Tn: {
      s.dim = n;
      for (Eigen::Index i = 0; i < n; ++i) s.basis.push_back(unit_at(n, i, i));
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        s.basis.push_back(sym_at(n, i, i + 1));
        s.basis.push_back(asym_at(n, i, i + 1));
      }
      break;
    }
    case SystemKind::En: {
      s.dim = n;
      s.basis.push_back(Mat::Identity(n, n));
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
          s.basis.push_back(sym_at(n, i, j));
          s.basis.push_back(asym_at(n, i, j));
        }
      break;
    }
    case SystemKind::Vn: {
      Eigen::Index d = 2 * (n - 1);
      s.dim = d;
      // Linked diagonal chain: block k's (2,2) equals block k+1's (1,1).
      s.basis.push_back(unit_at(d, 0, 0));
      for (Eigen::Index k = 1; k + 1 < n; ++k) {
        Mat e = Mat::Zero(d, d);
        e(2 * k - 1, 2 * k - 1) = 1.0;
        e(2 * k, 2 * k) = 1.0;
        s.basis.push_back(e);
      }
      s.basis.push_back(unit_at(d, d - 1, d - 1));
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        s.basis.push_back(sym_at(d, 2 * k, 2 * k + 1));
        s.basis.push_back(asym_at(d, 2 * k, 2 * k + 1));
      }
      break;
    }
    case SystemKind::Un: {
      Eigen::Index d = 2 * (n - 1);
      s.dim = d;
      s.basis.push_back(Mat::Identity(d, d));
      for (Eigen::Index k = 0; k + 1 < n; ++k) {
        s.basis.push_back(sym_at(d, 2 * k, 2 * k + 1));
        s.basis.push_back(asym_at(d, 2 * k, 2 * k + 1));
      }
      break;
    }
  }
  return s;
}

SpanCheck subspace_membership(const MatOpSys& s, const Mat& x) {
  if (x.rows() != s.dim || x.cols() != s.dim) fail_invalid("subspace_membership: dimension mismatch");
  Eigen::Index k = static_cast<Eigen::Index>(s.basis.size());
  Mat gram(k, k);
  Eigen::VectorXcd rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    rhs(i) = hs_inner_c(s.basis[i], x);
    for (Eigen::Index j = 0; j < k; ++j) gram(i, j) = hs_inner_c(s.basis[i], s.basis[j]);
  }
  SpanCheck r;
  r.coeffs = gram.ldlt().solve(rhs);
  Mat recon = Mat::Zero(s.dim, s.dim);
  for (Eigen::Index i = 0; i < k; ++i) recon += r.coeffs(i) * s.basis[i];
  r.residual = (x - recon).norm();
  r.in_span = r.residual <= 1e-9 * std::max(x.norm(), 1e-6);
  return r;
}

BlockCoeffs block_coefficients(const MatOpSys& s, const Mat& x, Eigen::Index p) {
  if (p < 1) fail_invalid("block_coefficients: level must be >= 1");
  if (x.rows() != s.dim * p || x.cols() != s.dim * p)
    fail_invalid("block_coefficients: dimension mismatch");
  Eigen::Index k = static_cast<Eigen::Index>(s.basis.size());
  Mat gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) gram(i, j) = hs_inner_c(s.basis[i], s.basis[j]);
  Eigen::PartialPivLU<Mat> lu(gram);

  // Pair the system slot against each basis element: t_i = (B_i^* (x) I) : x.
  Mat rhs(k, p * p);
  for (Eigen::Index i = 0; i < k; ++i) {
    Mat t = Mat::Zero(p, p);
    for (Eigen::Index r = 0; r < s.dim; ++r)
      for (Eigen::Index c = 0; c < s.dim; ++c) {
        Cplx w = std::conj(s.basis[i](r, c));
        if (w != Cplx(0.0, 0.0)) t += w * x.block(r * p, c * p, p, p);
      }
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) rhs(i, a * p + b) = t(a, b);
  }
  Mat sol = lu.solve(rhs);

  BlockCoeffs out;
  out.blocks.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    Mat c(p, p);
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b) c(a, b) = sol(i, a * p + b);
    out.blocks.push_back(c);
  }
  Mat recon = Mat::Zero(s.dim * p, s.dim * p);
  for (Eigen::Index i = 0; i < k; ++i) recon += kron(s.basis[i], out.blocks[i]);
  out.residual = (x - recon).norm();
  return out;
}

Mat BlockElement::assemble() const {
  if (blocks.size() != sys.basis.size()) fail_invalid("BlockElement: block count mismatch");
  Mat m = Mat::Zero(sys.dim * level, sys.dim * level);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].rows() != level || blocks[i].cols() != level)
      fail_invalid("BlockElement: block dimension mismatch");
    m += kron(sys.basis[i], blocks[i]);
  }
  return m;
}

bool BlockElement::is_hermitian(double tol) const {
  for (const Mat& b : blocks)
    if ((b - b.adjoint()).norm() > tol * std::max(1.0, b.norm())) return false;
  return true;
}

BlockElement BlockElement::from_ambient(const MatOpSys& s, const Mat& x, Eigen::Index p) {
  BlockCoeffs c = block_coefficients(s, x, p);
  if (c.residual > 1e-9 * std::max(x.norm(), 1e-6))
    fail_domain("BlockElement::from_ambient: matrix not in the system span");
  BlockElement e;
  e.sys = s;
  e.level = p;
  e.blocks = std::move(c.blocks);
  return e;
}

ConeCertificate ambient_cone_membership(const BlockElement& x, double tol) {
  if (!x.is_hermitian()) fail_invalid("ambient_cone_membership: element not hermitian");
  Mat m = HermMat::mirror(x.assemble()).raw();
  ConeCertificate cert;
  cert.iterations = 1;
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  double lam = es.eigenvalues().minCoeff();
  if (lam >= -tol) {
    cert.status = CertStatus::Feasible;
    cert.witness = m;
    cert.residual = std::max(0.0, -lam);
  } else {
    cert.status = CertStatus::Infeasible;
    Mat v = es.eigenvectors().col(0);
    cert.separator = HermMat::mirror(v * v.adjoint()).raw();
    cert.residual = -lam;
  }
  return cert;
}

}  // namespace osq
