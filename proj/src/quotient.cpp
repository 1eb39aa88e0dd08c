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

#include "osq/quotient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "osq/error.hpp"
#include "osq/json_io.hpp"

namespace osq {

namespace {

// Least-squares distance of x to span{basis} (complex coefficients).
double span_distance(const std::vector<Mat>& basis, const Mat& x) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  if (k == 0) return x.norm();
  Mat gram(k, k);
  Eigen::VectorXcd rhs(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) gram(i, j) = hs_inner_c(basis[i], basis[j]);
    rhs(i) = hs_inner_c(basis[i], x);
  }
  Eigen::VectorXcd c = gram.ldlt().solve(rhs);
  Mat recon = Mat::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < k; ++i) recon += c(i) * basis[i];
  return (x - recon).norm();
}

}  // namespace

void KernelSubspace::validate() const {
  if (basis.empty()) fail_invalid("kernel basis is empty");
  const Eigen::Index d = parent.dim;
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const Mat& k = basis[j];
    if (k.rows() != d || k.cols() != d) fail_invalid("kernel element has wrong dimension");
    if ((k - k.adjoint()).norm() > 1e-12 * std::max(1.0, k.norm()))
      fail_invalid("kernel element is not hermitian");
    if (!subspace_membership(parent, k).in_span)
      fail_invalid("kernel element leaves the parent span");
  }
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) gram(i, j) = hs_inner(basis[i], basis[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) <= 1e-10 * std::max(1.0, es.eigenvalues()(m - 1)))
    fail_invalid("kernel basis is not linearly independent");
  const Mat unit = parent.unit();
  if (span_distance(basis, unit) < 1e-6 * std::max(1.0, unit.norm()))
    fail_invalid("kernel contains the order unit");
}

Quotient trace_zero_diagonal_quotient(const MatOpSys& parent) {
  if (parent.kind != SystemKind::Mn && parent.kind != SystemKind::Tn)
    fail_domain("trace-zero diagonal kernel requires a full or tridiagonal parent");
  const Eigen::Index d = parent.dim;
  KernelSubspace ker;
  ker.parent = parent;
  for (Eigen::Index i = 0; i + 1 < d; ++i) {
    Mat k = Mat::Zero(d, d);
    k(i, i) = Cplx(1, 0);
    k(i + 1, i + 1) = Cplx(-1, 0);
    ker.basis.push_back(k);
  }
  ker.validate();
  return Quotient{std::move(ker)};
}

void QuotientElement::validate() const {
  quo.kernel.validate();
  const Eigen::Index d = quo.parent().dim;
  if (level < 1) fail_invalid("level must be >= 1");
  if (rep.rows() != d * level || rep.cols() != d * level)
    fail_invalid("representative has wrong dimension");
  BlockCoeffs bc = block_coefficients(quo.parent(), rep, level);
  if (bc.residual > 1e-9 * std::max(1.0, rep.norm()))
    fail_invalid("representative leaves the matrix level of the parent span");
}

namespace {

// Directions K_j (x) F_m spanning M_p(J) as a real vector space.
std::vector<Mat> lift_directions(const Quotient& quo, Eigen::Index p) {
  std::vector<Mat> dirs;
  const std::vector<Mat> fm = herm_basis(p);
  dirs.reserve(quo.kernel.basis.size() * fm.size());
  for (const Mat& k : quo.kernel.basis)
    for (const Mat& f : fm) dirs.push_back(kron(k, f));
  return dirs;
}

AffinePsdProblem d_cone_problem(const QuotientElement& x) {
  x.validate();
  HermMat h = HermMat::from(x.rep);  // cone queries need hermitian elements
  AffinePsdProblem prob;
  prob.dim = x.rep.rows();
  prob.offset = h.raw();
  prob.basis = lift_directions(x.quo, x.level);
  return prob;
}

}  // namespace

ConeCertificate d_cone_membership(const QuotientElement& x, double tol, const SolveOptions& opt) {
  if (!(tol > 0)) fail_invalid("tol must be > 0");
  SolveOptions o = opt;
  o.tol = tol;
  return solve_feasibility(d_cone_problem(x), o);
}

ConeCertificate c_cone_membership(const QuotientElement& x, double eps, double tol,
                                  const SolveOptions& opt) {
  if (!(eps > 0)) fail_invalid("archimedean eps must be > 0");
  QuotientElement shifted = x;
  shifted.rep = x.rep + eps * Mat::Identity(x.rep.rows(), x.rep.cols());
  return d_cone_membership(shifted, tol, opt);
}

namespace {

// Bordered element [[0, x], [x*, 0]] of M_{2p}(parent span), system slot first.
Mat bordered_rep(const QuotientElement& x) {
  const Eigen::Index d = x.quo.parent().dim;
  const Eigen::Index p = x.level;
  Mat b = Mat::Zero(d * 2 * p, d * 2 * p);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      b.block(r * 2 * p, c * 2 * p + p, p, p) = x.rep.block(r * p, c * p, p, p);
      b.block(r * 2 * p + p, c * 2 * p, p, p) = x.rep.block(c * p, r * p, p, p).adjoint();
    }
  }
  return b;
}

}  // namespace

NormResult quotient_norm(const QuotientElement& x, double tol) {
  if (!(tol > 0)) fail_invalid("tol must be > 0");
  x.validate();
  const double eps = tol;

  AffinePsdProblem prob;
  prob.offset = bordered_rep(x);
  prob.dim = prob.offset.rows();
  prob.basis = lift_directions(x.quo, 2 * x.level);

  // Norm = min { t : bordered + t * I reaches PSD through M_{2p}(J) }, and the
  // spectral norm of any representative bounds it from above.
  RVec spec = herm_eigenvalues(HermMat::mirror(prob.offset).raw());
  const double sigma = std::max(std::abs(spec(0)), std::abs(spec(spec.size() - 1)));

  NormResult res;
  res.lo = 0.0;
  res.hi = sigma + eps;
  const Mat eye = Mat::Identity(prob.dim, prob.dim);
  const Mat base = prob.offset;
  const double inf = std::numeric_limits<double>::infinity();

  for (int round = 0; round < 24 && res.hi - res.lo > tol; ++round) {
    const double t = 0.5 * (res.lo + res.hi);
    prob.offset = base + (t + eps) * eye;
    MarginResult mm = maximize_margin(prob, tol / 4, inf, 60000);
    // The probe family moves along the identity, so the PSD-reachability
    // threshold t* satisfies t + eps - upper <= t* <= t + eps - lower.
    res.lo = std::max(res.lo, t + eps - mm.upper);
    res.hi = std::min(res.hi, t + eps - mm.lower);
    res.probes += 1;
    res.iterations += mm.evals;
  }
  if (res.hi < res.lo) {  // certified bounds can cross by at most solver slack
    const double mid = 0.5 * (res.lo + res.hi);
    res.lo = res.hi = mid;
  }
  res.converged = (res.hi - res.lo) <= tol;
  res.value = std::max(0.0, 0.5 * (res.lo + res.hi));
  return res;
}

BoundaryShift cone_boundary_shift(const QuotientElement& x, double tol, long max_evals) {
  if (!(tol > 0)) fail_invalid("tol must be > 0");
  AffinePsdProblem prob = d_cone_problem(x);
  MarginResult mm =
      maximize_margin(prob, tol / 2, std::numeric_limits<double>::infinity(), max_evals);
  BoundaryShift out;
  out.lo = -mm.upper;
  out.hi = -mm.lower;
  out.lambda_star = 0.5 * (out.lo + out.hi);
  return out;
}

namespace {

WnElement canonical_wn(const WnElement& w) {
  if (w.n < 2) fail_invalid("minimal-lift elements need n >= 2");
  if (w.p < 1) fail_invalid("level must be >= 1");
  const Eigen::Index n = w.n, p = w.p;
  if (w.a11.rows() != p || w.a11.cols() != p) fail_invalid("A11 has wrong dimension");
  if (static_cast<Eigen::Index>(w.offdiag.size()) != n * n)
    fail_invalid("off-diagonal table must have n*n entries");
  WnElement c = w;
  c.a11 = HermMat::from(w.a11).raw();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Mat& a = w.offdiag[i * n + j];
      if (i == j) {
        c.offdiag[i * n + j] = Mat::Zero(p, p);
        continue;
      }
      if (a.rows() != p || a.cols() != p) fail_invalid("off-diagonal block has wrong dimension");
      const Mat& b = w.offdiag[j * n + i];
      if ((a - b.adjoint()).norm() > 1e-12 * std::max(1.0, a.norm()))
        fail_invalid("off-diagonal table is not hermitian (A_ji != A_ij*)");
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Mat avg = 0.5 * (w.offdiag[i * n + j] + w.offdiag[j * n + i].adjoint());
      c.offdiag[i * n + j] = avg;
      c.offdiag[j * n + i] = avg.adjoint();
    }
  return c;
}

}  // namespace

QuotientElement wn_element(const WnElement& w) {
  WnElement c = canonical_wn(w);
  const Eigen::Index n = c.n, p = c.p;
  QuotientElement el;
  el.quo = trace_zero_diagonal_quotient(make_system(SystemKind::Mn, c.n));
  el.level = p;
  el.rep = Mat::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i) {
    el.rep.block(i * p, i * p, p, p) = c.a11;
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) el.rep.block(i * p, j * p, p, p) = c.offdiag[i * n + j];
  }
  return el;
}

ConeCertificate wn_min_membership(const WnElement& w, double tol, const SolveOptions& opt) {
  return d_cone_membership(wn_element(w), tol, opt);
}

QuotientElement sn_element(const SnElement& e) {
  if (e.n < 2) fail_invalid("tridiagonal elements need n >= 2");
  if (e.p < 1) fail_invalid("level must be >= 1");
  const Eigen::Index n = e.n, p = e.p;
  if (e.s0.rows() != p || e.s0.cols() != p) fail_invalid("S0 has wrong dimension");
  if (static_cast<Eigen::Index>(e.s.size()) != n - 1)
    fail_invalid("band table must have n-1 entries");
  Mat s0 = HermMat::from(e.s0).raw();
  QuotientElement el;
  el.quo = trace_zero_diagonal_quotient(make_system(SystemKind::Tn, e.n));
  el.level = p;
  el.rep = Mat::Zero(n * p, n * p);
  for (Eigen::Index i = 0; i < n; ++i)
    el.rep.block(i * p, i * p, p, p) = s0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const Mat& si = e.s[static_cast<std::size_t>(i)];
    if (si.rows() != p || si.cols() != p) fail_invalid("band block has wrong dimension");
    el.rep.block(i * p, (i + 1) * p, p, p) = si;
    el.rep.block((i + 1) * p, i * p, p, p) = si.adjoint();
  }
  return el;
}

ConeCertificate sn_min_membership(const SnElement& e, double tol, const SolveOptions& opt) {
  return d_cone_membership(sn_element(e), tol, opt);
}

Json RefutationWitness::to_json() const {
  Json j;
  j["trial"] = trial;
  j["min_eig"] = min_eig;
  Json us = Json::array();
  for (const Mat& u : unitaries) us.push_back(matrix_to_json(u));
  j["unitaries"] = std::move(us);
  j["evaluated"] = matrix_to_json(evaluated);
  return j;
}

std::optional<RefutationWitness> unitary_refute(const WnElement& w, Eigen::Index r, long trials,
                                                std::uint64_t seed, double tol) {
  if (r < 1) fail_invalid("unitary size must be >= 1");
  if (trials < 1) fail_invalid("trials must be >= 1");
  if (!(tol > 0)) fail_invalid("tol must be > 0");
  WnElement c = canonical_wn(w);
  const Eigen::Index n = c.n, p = c.p;
  Rng rng(seed);
  const double scale = 1.0 / static_cast<double>(n);
  for (long trial = 0; trial < trials; ++trial) {
    std::vector<Mat> us;
    us.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) us.push_back(rng.haar_unitary(r));
    Mat m = kron(Mat::Identity(r, r), c.a11);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        m += scale * kron(us[static_cast<std::size_t>(i)] *
                              us[static_cast<std::size_t>(j)].adjoint(),
                          c.offdiag[i * n + j]);
      }
    RVec ev = herm_eigenvalues(HermMat::mirror(m).raw());
    if (ev(0) < -tol) {
      RefutationWitness wit;
      wit.unitaries = std::move(us);
      wit.trial = trial;
      wit.min_eig = ev(0);
      wit.evaluated = std::move(m);
      return wit;
    }
  }
  return std::nullopt;
}

FreeFactorization free_factorization(int n, Eigen::Index p, const std::vector<Mat>& full,
                                     double tol) {
  if (n < 2) fail_invalid("factorization needs n >= 2");
  if (p < 1) fail_invalid("level must be >= 1");
  if (static_cast<Eigen::Index>(full.size()) != static_cast<Eigen::Index>(n) * n)
    fail_invalid("coefficient table must have n*n entries");
  const Eigen::Index nn = n;
  std::vector<Mat> canon(full.size());
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j < nn; ++j) {
      const Mat& a = full[i * nn + j];
      if (a.rows() != p || a.cols() != p) fail_invalid("coefficient block has wrong dimension");
      const Mat& b = full[j * nn + i];
      if ((a - b.adjoint()).norm() > 1e-12 * std::max(1.0, a.norm()))
        fail_invalid("coefficient table is not hermitian (A_ji != A_ij*)");
    }
  }
  for (Eigen::Index i = 0; i < nn; ++i)
    for (Eigen::Index j = i; j < nn; ++j) {
      Mat avg = 0.5 * (full[i * nn + j] + full[j * nn + i].adjoint());
      canon[i * nn + j] = avg;
      canon[j * nn + i] = avg.adjoint();
    }

  Mat a11 = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < nn; ++i) a11 += canon[i * nn + i];
  a11 /= static_cast<double>(n);

  WnElement w;
  w.n = n;
  w.p = p;
  w.a11 = a11;
  w.offdiag = canon;
  for (Eigen::Index i = 0; i < nn; ++i) w.offdiag[i * nn + i] = Mat::Zero(p, p);

  FreeFactorization out;
  out.n = nn;
  out.p = p;
  out.lift = wn_min_membership(w, tol);
  if (out.lift.status != CertStatus::Feasible) return out;

  const Mat& rlift = *out.lift.witness;
  out.x = psd_factor(HermMat::mirror(rlift).raw(), tol);
  Mat recon = out.x * out.x.adjoint();
  double sq = 0.0;
  Mat trace_sum = Mat::Zero(p, p);
  Mat trace_ref = Mat::Zero(p, p);
  for (Eigen::Index i = 0; i < nn; ++i) {
    trace_sum += recon.block(i * p, i * p, p, p);
    trace_ref += canon[i * nn + i];
    for (Eigen::Index j = 0; j < nn; ++j) {
      if (i == j) continue;
      sq += (recon.block(i * p, j * p, p, p) - canon[i * nn + j]).squaredNorm();
    }
  }
  sq += (trace_sum - trace_ref).squaredNorm();
  out.residual = std::sqrt(sq);
  return out;
}

}  // namespace osq
