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

#include "osq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <utility>

#include "osq/error.hpp"
#include "osq/rng.hpp"

namespace osq {

namespace {

Mat herm_avg(const Mat& m) { return (m + m.adjoint()) / 2.0; }

std::string eps_key(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", eps);
  return buf;
}

/// Basis of span(S) (x) span(T), pairs (i, j) at i*|T|+j. The product of two
/// Hermitian independent families is Hermitian and independent, so the result
/// is a valid system carrier for block_coefficients / ambient_cone_membership.
MatOpSys product_system(const MatOpSys& s, const MatOpSys& t) {
  MatOpSys prod;
  prod.kind = s.kind;
  prod.n = s.n;
  prod.dim = s.dim * t.dim;
  prod.name = s.name + "(x)" + t.name;
  prod.basis.reserve(s.basis.size() * t.basis.size());
  for (const Mat& a : s.basis)
    for (const Mat& b : t.basis) prod.basis.push_back(kron(a, b));
  return prod;
}

/// Coordinate space for one factor of a max-cone witness: Hermitian elements
/// of M_k(S) parametrized by real coordinates against kron(S-basis, herm(k)).
struct FactorSpace {
  Eigen::Index dim = 0;     // ambient dim(S) * k
  std::vector<Mat> basis;   // hermitian, independent
  Eigen::PartialPivLU<Mat> gram_lu;

  static FactorSpace make(const MatOpSys& sys, Eigen::Index k) {
    FactorSpace f;
    f.dim = sys.dim * k;
    const std::vector<Mat> hb = herm_basis(k);
    f.basis.reserve(sys.basis.size() * hb.size());
    for (const Mat& a : sys.basis)
      for (const Mat& h : hb) f.basis.push_back(kron(a, h));
    const Eigen::Index nb = static_cast<Eigen::Index>(f.basis.size());
    Mat gram(nb, nb);
    for (Eigen::Index i = 0; i < nb; ++i)
      for (Eigen::Index j = 0; j < nb; ++j) gram(i, j) = hs_inner_c(f.basis[i], f.basis[j]);
    f.gram_lu = Eigen::PartialPivLU<Mat>(gram);
    return f;
  }

  Mat build(const Eigen::VectorXd& c, Eigen::Index off) const {
    Mat m = Mat::Zero(dim, dim);
    for (std::size_t u = 0; u < basis.size(); ++u) m += c[off + static_cast<Eigen::Index>(u)] * basis[u];
    return m;
  }

  /// Least-squares coordinates of a Hermitian ambient matrix; rebuild(coords)
  /// is the orthogonal projection onto the span.
  Eigen::VectorXd coords(const Mat& x) const {
    const Eigen::Index nb = static_cast<Eigen::Index>(basis.size());
    Mat rhs(nb, 1);
    for (Eigen::Index u = 0; u < nb; ++u) rhs(u, 0) = hs_inner_c(basis[u], x);
    Mat sol = gram_lu.solve(rhs);
    Eigen::VectorXd out(nb);
    for (Eigen::Index u = 0; u < nb; ++u) out[u] = sol(u, 0).real();
    return out;
  }
};

/// Z = P (x) Q reordered so the two ambient slots lead and the two witness
/// levels trail: Z[((r*b+u)*k+g)*m+h, ((s*b+v)*k+g')*m+h'] =
/// P(r*k+g, s*k+g') * Q(u*m+h, v*m+h').
Mat factor_product(const Mat& p, const Mat& q, Eigen::Index a, Eigen::Index b, Eigen::Index k,
                   Eigen::Index m) {
  const Eigen::Index d = a * b * k * m;
  Mat z(d, d);
  for (Eigen::Index r = 0; r < a; ++r)
    for (Eigen::Index u = 0; u < b; ++u)
      for (Eigen::Index g = 0; g < k; ++g)
        for (Eigen::Index h = 0; h < m; ++h) {
          const Eigen::Index row = ((r * b + u) * k + g) * m + h;
          for (Eigen::Index s = 0; s < a; ++s)
            for (Eigen::Index v = 0; v < b; ++v)
              for (Eigen::Index g2 = 0; g2 < k; ++g2)
                for (Eigen::Index h2 = 0; h2 < m; ++h2)
                  z(row, ((s * b + v) * k + g2) * m + h2) =
                      p(r * k + g, s * k + g2) * q(u * m + h, v * m + h2);
        }
  return z;
}

/// R = (I_{ab} (x) alpha) Z (I_{ab} (x) alpha)* for Z indexed as in
/// factor_product; the result lives in M_{a*b*p}.
Mat compress_levels(const Mat& z, const Mat& alpha, Eigen::Index ab, Eigen::Index km,
                    Eigen::Index p) {
  Mat r(ab * p, ab * p);
  for (Eigen::Index w = 0; w < ab; ++w)
    for (Eigen::Index w2 = 0; w2 < ab; ++w2)
      r.block(w * p, w2 * p, p, p) = alpha * z.block(w * km, w2 * km, km, km) * alpha.adjoint();
  return r;
}

// ---------------------------------------------------------------------------
// Local L-BFGS (two-loop recursion, Armijo backtracking). The feasibility
// module keeps its own copy tuned for the smoothed margin; this one serves
// the nonconvex witness search and stays private to the tensor module.
// ---------------------------------------------------------------------------

using ObjFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = 0.0;
  long evals = 0;
};

MinimizeResult lbfgs_minimize(const ObjFn& fn, Eigen::VectorXd x, long max_iters, double gtol) {
  const std::size_t mem = 8;
  std::deque<Eigen::VectorXd> ss, ys;
  std::deque<double> rr;
  Eigen::VectorXd g(x.size());
  double f = fn(x, &g);
  long evals = 1;
  for (long it = 0; it < max_iters; ++it) {
    if (g.norm() <= gtol || f <= 1e-24) break;
    Eigen::VectorXd q = g;
    std::vector<double> al(ss.size(), 0.0);
    for (std::size_t i = ss.size(); i-- > 0;) {
      al[i] = rr[i] * ss[i].dot(q);
      q -= al[i] * ys[i];
    }
    if (!ss.empty()) {
      const double yy = ys.back().squaredNorm();
      const double sy = ss.back().dot(ys.back());
      if (yy > 0.0 && sy > 0.0) q *= sy / yy;
    }
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double beta = rr[i] * ys[i].dot(q);
      q += (al[i] - beta) * ss[i];
    }
    Eigen::VectorXd d = -q;
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      d = -g;
      gd = -g.squaredNorm();
    }
    double step = 1.0;
    bool ok = false;
    Eigen::VectorXd xn, gn(x.size());
    double fn_val = 0.0;
    for (int bt = 0; bt < 40; ++bt) {
      xn = x + step * d;
      fn_val = fn(xn, &gn);
      ++evals;
      if (fn_val <= f + 1e-4 * step * gd) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rr.push_back(1.0 / sy);
      if (ss.size() > mem) {
        ss.pop_front();
        ys.pop_front();
        rr.pop_front();
      }
    }
    x = std::move(xn);
    f = fn_val;
    g = gn;
  }
  return {std::move(x), f, evals};
}

// ---------------------------------------------------------------------------
// Witness search objective. Coordinates: P over FactorSpace(S, k), Q over
// FactorSpace(T, m), alpha as interleaved re/im of a p x (k*m) matrix.
// f = ||A Z A* - G||^2 + rho * (||P_||^2 + ||Q_||^2), P_ the negative part.
// ---------------------------------------------------------------------------

struct SearchSpace {
  Eigen::Index a = 0, b = 0, p = 1, k = 1, m = 1;
  FactorSpace fp, fq;
  Mat target;
  double rho = 1.0;

  Eigen::Index np() const { return static_cast<Eigen::Index>(fp.basis.size()); }
  Eigen::Index nq() const { return static_cast<Eigen::Index>(fq.basis.size()); }
  Eigen::Index na() const { return 2 * p * k * m; }
  Eigen::Index ntot() const { return np() + nq() + na(); }

  Mat alpha_of(const Eigen::VectorXd& th) const {
    const Eigen::Index km = k * m, off = np() + nq();
    Mat al(p, km);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < km; ++c)
        al(r, c) = Cplx(th[off + 2 * (r * km + c)], th[off + 2 * (r * km + c) + 1]);
    return al;
  }

  double eval(const Eigen::VectorXd& th, Eigen::VectorXd* grad) const {
    const Eigen::Index ab = a * b, km = k * m;
    const Mat pm = fp.build(th, 0);
    const Mat qm = fq.build(th, np());
    const Mat al = alpha_of(th);
    const Mat z = factor_product(pm, qm, a, b, k, m);
    const Mat r = compress_levels(z, al, ab, km, p);
    const Mat delta = r - target;
    double f = delta.squaredNorm();

    Eigen::SelfAdjointEigenSolver<Mat> esp(pm), esq(qm);
    Mat pneg = Mat::Zero(pm.rows(), pm.cols()), qneg = Mat::Zero(qm.rows(), qm.cols());
    double pen = 0.0;
    for (Eigen::Index i = 0; i < esp.eigenvalues().size(); ++i) {
      const double lam = esp.eigenvalues()[i];
      if (lam < 0.0) {
        pen += lam * lam;
        pneg += lam * (esp.eigenvectors().col(i) * esp.eigenvectors().col(i).adjoint());
      }
    }
    for (Eigen::Index i = 0; i < esq.eigenvalues().size(); ++i) {
      const double lam = esq.eigenvalues()[i];
      if (lam < 0.0) {
        pen += lam * lam;
        qneg += lam * (esq.eigenvectors().col(i) * esq.eigenvectors().col(i).adjoint());
      }
    }
    f += rho * pen;

    if (grad != nullptr) {
      grad->setZero(ntot());
      // Pairing matrix against dZ: M = 2 A* Delta A, same index layout as Z.
      Mat mbig(ab * km, ab * km);
      for (Eigen::Index w = 0; w < ab; ++w)
        for (Eigen::Index w2 = 0; w2 < ab; ++w2)
          mbig.block(w * km, w2 * km, km, km) =
              2.0 * al.adjoint() * delta.block(w * p, w2 * p, p, p) * al;

      Mat tp = Mat::Zero(a * k, a * k);
      Mat tq = Mat::Zero(b * m, b * m);
      for (Eigen::Index rI = 0; rI < a; ++rI)
        for (Eigen::Index sI = 0; sI < a; ++sI)
          for (Eigen::Index u = 0; u < b; ++u)
            for (Eigen::Index v = 0; v < b; ++v)
              for (Eigen::Index g = 0; g < k; ++g)
                for (Eigen::Index g2 = 0; g2 < k; ++g2)
                  for (Eigen::Index h = 0; h < m; ++h)
                    for (Eigen::Index h2 = 0; h2 < m; ++h2) {
                      const Cplx mval = mbig(((rI * b + u) * k + g) * m + h,
                                             ((sI * b + v) * k + g2) * m + h2);
                      tp(rI * k + g, sI * k + g2) += mval * std::conj(qm(u * m + h, v * m + h2));
                      tq(u * m + h, v * m + h2) += mval * std::conj(pm(rI * k + g, sI * k + g2));
                    }
      tp += rho * 2.0 * pneg;
      tq += rho * 2.0 * qneg;
      for (Eigen::Index u = 0; u < np(); ++u) (*grad)[u] = hs_inner(fp.basis[u], tp);
      for (Eigen::Index u = 0; u < nq(); ++u) (*grad)[np() + u] = hs_inner(fq.basis[u], tq);

      // Wirtinger gradient for alpha: sum of diagonal p x km blocks of
      // 2 Delta (I (x) alpha) Z.
      Mat az(ab * p, ab * km);
      for (Eigen::Index w = 0; w < ab; ++w)
        for (Eigen::Index w2 = 0; w2 < ab; ++w2)
          az.block(w * p, w2 * km, p, km) = al * z.block(w * km, w2 * km, km, km);
      Mat ga = Mat::Zero(p, km);
      Mat big = 2.0 * delta * az;
      for (Eigen::Index w = 0; w < ab; ++w) ga += big.block(w * p, w * km, p, km);
      const Eigen::Index off = np() + nq();
      for (Eigen::Index rI = 0; rI < p; ++rI)
        for (Eigen::Index c = 0; c < km; ++c) {
          (*grad)[off + 2 * (rI * km + c)] = 2.0 * ga(rI, c).real();
          (*grad)[off + 2 * (rI * km + c) + 1] = 2.0 * ga(rI, c).imag();
        }
    }
    return f;
  }
};

/// Alternating projection polish: pull a nearly feasible factor onto
/// span intersect PSD, returning the span-side iterate (exactly in span).
Mat polish_factor(const FactorSpace& f, Mat x, int rounds) {
  for (int i = 0; i < rounds; ++i) {
    x = psd_project(herm_avg(x));
    x = f.build(f.coords(x), 0);
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// TensorElement
// ---------------------------------------------------------------------------

void TensorElement::validate() const {
  if (s.basis.empty() || t.basis.empty()) fail_invalid("TensorElement: empty factor system");
  if (level < 1) fail_invalid("TensorElement: level must be >= 1");
  if (coeff.size() != s.basis.size() * t.basis.size())
    fail_invalid("TensorElement: coefficient count mismatch");
  for (const Mat& c : coeff)
    if (c.rows() != level || c.cols() != level)
      fail_invalid("TensorElement: coefficient block dimension mismatch");
}

Mat TensorElement::assemble() const {
  validate();
  const Eigen::Index nt = static_cast<Eigen::Index>(t.basis.size());
  Mat m = Mat::Zero(s.dim * t.dim * level, s.dim * t.dim * level);
  for (std::size_t i = 0; i < s.basis.size(); ++i)
    for (std::size_t j = 0; j < t.basis.size(); ++j)
      m += kron(s.basis[i], kron(t.basis[j], coeff[i * static_cast<std::size_t>(nt) + j]));
  return m;
}

TensorElement TensorElement::from_ambient(const MatOpSys& s, const MatOpSys& t, const Mat& x,
                                          Eigen::Index p) {
  const MatOpSys prod = product_system(s, t);
  BlockElement be = BlockElement::from_ambient(prod, x, p);
  TensorElement e;
  e.s = s;
  e.t = t;
  e.level = p;
  e.coeff = std::move(be.blocks);
  return e;
}

ConeCertificate min_tensor_membership(const TensorElement& x, double tol) {
  x.validate();
  BlockElement be;
  be.sys = product_system(x.s, x.t);
  be.level = x.level;
  be.blocks = x.coeff;
  return ambient_cone_membership(be, tol);
}

// ---------------------------------------------------------------------------
// Max-cone witness search
// ---------------------------------------------------------------------------

Json MaxConeWitness::to_json() const {
  Json j;
  j["k"] = k;
  j["m"] = m;
  j["eps"] = eps;
  j["p"] = matrix_to_json(p);
  j["q"] = matrix_to_json(q);
  j["alpha"] = matrix_to_json(alpha);
  j["recon_residual"] = recon_residual;
  return j;
}

std::optional<MaxConeWitness> max_tensor_inner_search(const TensorElement& x, Eigen::Index k,
                                                      Eigen::Index m, double eps, int restarts,
                                                      std::uint64_t seed, double tol) {
  x.validate();
  if (k < 1 || m < 1) fail_invalid("max_tensor_inner_search: factor levels must be >= 1");
  if (eps < 0.0) fail_invalid("max_tensor_inner_search: eps must be >= 0");
  if (restarts < 1) fail_invalid("max_tensor_inner_search: restarts must be >= 1");
  if (!(tol > 0.0)) fail_invalid("max_tensor_inner_search: tol must be > 0");

  SearchSpace sp;
  sp.a = x.s.dim;
  sp.b = x.t.dim;
  sp.p = x.level;
  sp.k = k;
  sp.m = m;
  sp.fp = FactorSpace::make(x.s, k);
  sp.fq = FactorSpace::make(x.t, m);
  const Eigen::Index d = sp.a * sp.b * sp.p;
  Mat g0 = x.assemble() + eps * Mat::Identity(d, d);
  sp.target = HermMat::from(g0, 1e-9).raw();
  const double gscale = std::max(1.0, sp.target.norm());
  const double rho_unit = std::max(1.0, gscale * gscale);

  const Eigen::VectorXd id_p = sp.fp.coords(Mat::Identity(sp.fp.dim, sp.fp.dim));
  const Eigen::VectorXd id_q = sp.fq.coords(Mat::Identity(sp.fq.dim, sp.fq.dim));
  const Eigen::Index km = k * m;

  Rng root(seed);
  for (int rst = 0; rst < restarts; ++rst) {
    Rng rng(root.derive(static_cast<std::uint64_t>(rst)));
    Eigen::VectorXd th(sp.ntot());
    for (Eigen::Index u = 0; u < sp.np(); ++u) th[u] = id_p[u] + 0.35 * rng.gaussian();
    for (Eigen::Index u = 0; u < sp.nq(); ++u) th[sp.np() + u] = id_q[u] + 0.35 * rng.gaussian();
    {
      Mat al(sp.p, km);
      for (Eigen::Index r = 0; r < sp.p; ++r)
        for (Eigen::Index c = 0; c < km; ++c) al(r, c) = rng.cgaussian() / std::sqrt(double(km));
      const Mat pm = sp.fp.build(th, 0);
      const Mat qm = sp.fq.build(th, sp.np());
      const Mat z = factor_product(pm, qm, sp.a, sp.b, k, m);
      const Mat r0 = compress_levels(z, al, sp.a * sp.b, km, sp.p);
      const double rn = std::max(r0.norm(), 1e-12);
      al *= std::sqrt(gscale / rn);
      const Eigen::Index off = sp.np() + sp.nq();
      for (Eigen::Index r = 0; r < sp.p; ++r)
        for (Eigen::Index c = 0; c < km; ++c) {
          th[off + 2 * (r * km + c)] = al(r, c).real();
          th[off + 2 * (r * km + c) + 1] = al(r, c).imag();
        }
    }

    const double stages[] = {1.0, 8.0, 64.0, 512.0, 4096.0};
    for (std::size_t st = 0; st < sizeof(stages) / sizeof(stages[0]); ++st) {
      sp.rho = stages[st] * rho_unit;
      const long iters = (st + 1 == sizeof(stages) / sizeof(stages[0])) ? 300 : 160;
      ObjFn fn = [&sp](const Eigen::VectorXd& v, Eigen::VectorXd* gr) { return sp.eval(v, gr); };
      MinimizeResult res = lbfgs_minimize(fn, th, iters, 1e-11 * rho_unit);
      th = res.x;
    }

    Mat pm = polish_factor(sp.fp, sp.fp.build(th, 0), 25);
    Mat qm = polish_factor(sp.fq, sp.fq.build(th, sp.np()), 25);

    // Refit alpha against the polished factors.
    const Mat z = factor_product(pm, qm, sp.a, sp.b, k, m);
    const Eigen::Index na = sp.na();
    ObjFn afn = [&](const Eigen::VectorXd& av, Eigen::VectorXd* gr) {
      Mat al(sp.p, km);
      for (Eigen::Index r = 0; r < sp.p; ++r)
        for (Eigen::Index c = 0; c < km; ++c)
          al(r, c) = Cplx(av[2 * (r * km + c)], av[2 * (r * km + c) + 1]);
      const Mat rr = compress_levels(z, al, sp.a * sp.b, km, sp.p);
      const Mat delta = rr - sp.target;
      if (gr != nullptr) {
        Mat az(sp.a * sp.b * sp.p, sp.a * sp.b * km);
        for (Eigen::Index w = 0; w < sp.a * sp.b; ++w)
          for (Eigen::Index w2 = 0; w2 < sp.a * sp.b; ++w2)
            az.block(w * sp.p, w2 * km, sp.p, km) = al * z.block(w * km, w2 * km, km, km);
        Mat ga = Mat::Zero(sp.p, km);
        Mat big = 2.0 * delta * az;
        for (Eigen::Index w = 0; w < sp.a * sp.b; ++w)
          ga += big.block(w * sp.p, w * km, sp.p, km);
        gr->setZero(na);
        for (Eigen::Index r = 0; r < sp.p; ++r)
          for (Eigen::Index c = 0; c < km; ++c) {
            (*gr)[2 * (r * km + c)] = 2.0 * ga(r, c).real();
            (*gr)[2 * (r * km + c) + 1] = 2.0 * ga(r, c).imag();
          }
      }
      return delta.squaredNorm();
    };
    Eigen::VectorXd av = th.segment(sp.np() + sp.nq(), na);
    av = lbfgs_minimize(afn, av, 120, 1e-13 * rho_unit).x;
    Mat al(sp.p, km);
    for (Eigen::Index r = 0; r < sp.p; ++r)
      for (Eigen::Index c = 0; c < km; ++c)
        al(r, c) = Cplx(av[2 * (r * km + c)], av[2 * (r * km + c) + 1]);

    // Independent re-verification; a failed check just burns the restart.
    BlockElement bp;
    bp.sys = x.s;
    bp.level = k;
    bp.blocks = block_coefficients(x.s, pm, k).blocks;
    for (Mat& blk : bp.blocks) blk = herm_avg(blk);
    BlockElement bq;
    bq.sys = x.t;
    bq.level = m;
    bq.blocks = block_coefficients(x.t, qm, m).blocks;
    for (Mat& blk : bq.blocks) blk = herm_avg(blk);
    pm = bp.assemble();
    qm = bq.assemble();
    const Mat recon = compress_levels(factor_product(pm, qm, sp.a, sp.b, k, m), al,
                                      sp.a * sp.b, km, sp.p);
    const double res = (recon - sp.target).norm();
    // The interior shift moves the target off the fixed-(k, m) compression
    // set by up to eps * sqrt(d), so the budget scales with eps; a success
    // still places x within 2 eps sqrt(d) + tol of the cone.
    if (res > eps * std::sqrt(static_cast<double>(d)) + tol * std::max(1.0, sp.target.norm()))
      continue;
    if (ambient_cone_membership(bp, tol).status != CertStatus::Feasible) continue;
    if (ambient_cone_membership(bq, tol).status != CertStatus::Feasible) continue;

    MaxConeWitness w;
    w.k = k;
    w.m = m;
    w.eps = eps;
    w.p = pm;
    w.q = qm;
    w.alpha = al;
    w.recon_residual = res;
    return w;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// T-constrained lifts
// ---------------------------------------------------------------------------

namespace {

void require_block_in_span(const MatOpSys& t, const Mat& blk, Eigen::Index p, const char* what) {
  if (blk.rows() != t.dim * p || blk.cols() != t.dim * p)
    fail_invalid(std::string(what) + ": block dimension mismatch");
  BlockCoeffs c = block_coefficients(t, blk, p);
  if (c.residual > 1e-9 * std::max(1.0, blk.norm()))
    fail_invalid(std::string(what) + ": block outside the constraint system span");
}

std::vector<Mat> constrained_lift_directions(int n, const MatOpSys& t, Eigen::Index p) {
  std::vector<Mat> dirs;
  const std::vector<Mat> hb = herm_basis(p);
  dirs.reserve(static_cast<std::size_t>(n - 1) * t.basis.size() * hb.size());
  for (int a = 0; a + 1 < n; ++a) {
    Mat ka = Mat::Zero(n, n);
    ka(a, a) = 1.0;
    ka(a + 1, a + 1) = -1.0;
    for (const Mat& tb : t.basis)
      for (const Mat& h : hb) dirs.push_back(kron(ka, kron(tb, h)));
  }
  return dirs;
}

}  // namespace

ConeCertificate wn_max_membership(const WnMaxData& d, double eps, double tol,
                                  const SolveOptions& opt) {
  if (d.n < 2) fail_invalid("wn_max_membership: n must be >= 2");
  if (d.p < 1) fail_invalid("wn_max_membership: level must be >= 1");
  if (d.t.basis.empty()) fail_invalid("wn_max_membership: empty constraint system");
  if (eps < 0.0) fail_invalid("wn_max_membership: eps must be >= 0");
  if (d.offdiag.size() != static_cast<std::size_t>(d.n) * static_cast<std::size_t>(d.n))
    fail_invalid("wn_max_membership: offdiag must hold n*n blocks");
  if (!subspace_membership(d.t, d.t.unit()).in_span)
    fail_invalid("wn_max_membership: constraint system is not unital");
  require_block_in_span(d.t, herm_avg(d.a11), d.p, "wn_max_membership");

  const Eigen::Index bp = d.t.dim * d.p;
  AffinePsdProblem prob;
  prob.dim = d.n * bp;
  prob.offset = Mat::Zero(prob.dim, prob.dim);
  const Mat diag = herm_avg(d.a11) + eps * Mat::Identity(bp, bp);
  for (int i = 0; i < d.n; ++i) prob.offset.block(i * bp, i * bp, bp, bp) = diag;
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.n; ++j) {
      if (i == j) continue;
      const Mat& aij = d.offdiag[static_cast<std::size_t>(i) * d.n + j];
      const Mat& aji = d.offdiag[static_cast<std::size_t>(j) * d.n + i];
      if ((aji - aij.adjoint()).norm() > 1e-12 * std::max(1.0, aij.norm()))
        fail_invalid("wn_max_membership: offdiag blocks must satisfy A_ji = A_ij*");
      require_block_in_span(d.t, (aij + aji.adjoint()) / 2.0, d.p, "wn_max_membership");
      if (i < j) {
        const Mat avg = (aij + aji.adjoint()) / 2.0;
        prob.offset.block(i * bp, j * bp, bp, bp) = avg;
        prob.offset.block(j * bp, i * bp, bp, bp) = avg.adjoint();
      }
    }
  prob.basis = constrained_lift_directions(d.n, d.t, d.p);
  SolveOptions o = opt;
  o.tol = tol;
  return solve_feasibility(prob, o);
}

ConeCertificate sn_max_membership(const SnMaxData& d, double eps, double tol,
                                  const SolveOptions& opt) {
  if (d.n < 2) fail_invalid("sn_max_membership: n must be >= 2");
  if (d.p < 1) fail_invalid("sn_max_membership: level must be >= 1");
  if (d.t.basis.empty()) fail_invalid("sn_max_membership: empty constraint system");
  if (eps < 0.0) fail_invalid("sn_max_membership: eps must be >= 0");
  if (d.band.size() != static_cast<std::size_t>(d.n - 1))
    fail_invalid("sn_max_membership: band must hold n-1 blocks");
  if (!subspace_membership(d.t, d.t.unit()).in_span)
    fail_invalid("sn_max_membership: constraint system is not unital");
  require_block_in_span(d.t, herm_avg(d.s0), d.p, "sn_max_membership");
  for (const Mat& blk : d.band) {
    require_block_in_span(d.t, (blk + blk.adjoint()) / 2.0, d.p, "sn_max_membership");
    require_block_in_span(d.t, herm_avg(Cplx(0.0, 1.0) * (blk - blk.adjoint())), d.p,
                          "sn_max_membership");
  }

  const Eigen::Index bp = d.t.dim * d.p;
  AffinePsdProblem prob;
  prob.dim = d.n * bp;
  prob.offset = Mat::Zero(prob.dim, prob.dim);
  const Mat diag = herm_avg(d.s0) / double(d.n) + eps * Mat::Identity(bp, bp);
  for (int i = 0; i < d.n; ++i) prob.offset.block(i * bp, i * bp, bp, bp) = diag;
  for (int i = 0; i + 1 < d.n; ++i) {
    prob.offset.block(i * bp, (i + 1) * bp, bp, bp) = d.band[static_cast<std::size_t>(i)];
    prob.offset.block((i + 1) * bp, i * bp, bp, bp) =
        d.band[static_cast<std::size_t>(i)].adjoint();
  }
  prob.basis = constrained_lift_directions(d.n, d.t, d.p);
  SolveOptions o = opt;
  o.tol = tol;
  return solve_feasibility(prob, o);
}

// ---------------------------------------------------------------------------
// Lifting experiments
// ---------------------------------------------------------------------------

Json LiftReport::to_json() const {
  Json arr = Json::array();
  for (const LiftInstance& in : instances) {
    Json j;
    j["id"] = in.id;
    j["seed"] = in.seed;
    j["status"] = in.status;
    j["eps_star"] = in.eps_star;
    j["certificates"] = in.certificates;
    arr.push_back(std::move(j));
  }
  Json j;
  j["op"] = op;
  j["params"] = params;
  j["instances"] = std::move(arr);
  j["counterexample_candidates"] = counterexample_candidates;
  j["consistent"] = consistent;
  return j;
}

namespace {

std::vector<double> normalize_grid(std::vector<double> grid) {
  if (grid.empty()) grid = {1e-2, 1e-4, 1e-6};
  for (double e : grid)
    if (!(e > 0.0)) fail_invalid("lift experiment: eps grid entries must be > 0");
  std::sort(grid.begin(), grid.end());
  return grid;
}

void check_lift_params(const MatOpSys& t, int n, Eigen::Index p, long samples) {
  if (n < 2) fail_invalid("lift experiment: n must be >= 2");
  if (p < 1) fail_invalid("lift experiment: level must be >= 1");
  if (samples < 1) fail_invalid("lift experiment: samples must be >= 1");
  if (t.basis.empty()) fail_invalid("lift experiment: empty constraint system");
  if (!subspace_membership(t, t.unit()).in_span)
    fail_invalid("lift experiment: constraint system is not unital");
}

Json lift_params_json(const MatOpSys& t, int n, Eigen::Index p, long samples,
                      const std::vector<double>& grid, std::uint64_t seed) {
  Json j;
  j["system"] = t.name;
  j["n"] = n;
  j["p"] = p;
  j["samples"] = samples;
  j["seed"] = seed;
  j["eps_grid"] = grid;
  return j;
}

}  // namespace

LiftReport pstar_check(const MatOpSys& t, int n, Eigen::Index p, long samples,
                       std::vector<double> eps_grid, std::uint64_t seed) {
  check_lift_params(t, n, p, samples);
  const std::vector<double> grid = normalize_grid(std::move(eps_grid));
  LiftReport rep;
  rep.op = "pstar";
  rep.params = lift_params_json(t, n, p, samples, grid, seed);

  Rng root(seed);
  const Eigen::Index level = t.dim * p;
  for (long id = 0; id < samples; ++id) {
    const std::uint64_t sd = root.derive(static_cast<std::uint64_t>(id));
    Rng rng(sd);
    Mat a11 = Mat::Zero(level, level);
    for (const Mat& tb : t.basis) a11 += kron(tb, rng.gaussian_hermitian(p));
    std::vector<Mat> off(static_cast<std::size_t>(n) * static_cast<std::size_t>(n),
                         Mat::Zero(level, level));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Mat g = Mat::Zero(level, level);
        for (const Mat& tb : t.basis) g += kron(tb, rng.gaussian_matrix(p, p));
        off[static_cast<std::size_t>(i) * n + j] = g;
        off[static_cast<std::size_t>(j) * n + i] = g.adjoint();
      }

    // Interiorize past the finest grid value: certified distance to the
    // minimal cone along the unit, plus slack, so a lift failure at every
    // eps signals a genuine gap rather than a boundary graze.
    WnElement w{n, level, a11, off};
    const BoundaryShift bs = cone_boundary_shift(wn_element(w), 1e-6, 20000);
    a11 += (bs.hi + 2.0 * grid.front()) * Mat::Identity(level, level);

    WnMaxData data{n, t, p, a11, off};
    LiftInstance in;
    in.id = id;
    in.seed = sd;
    in.eps_star = -1.0;
    in.certificates = Json::object();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const ConeCertificate cert = wn_max_membership(data, grid[gi], 1e-8);
      in.certificates[eps_key(grid[gi])] = cert.to_json();
      if (cert.status == CertStatus::Feasible) {
        in.eps_star = grid[gi];
        break;  // feasibility is monotone in eps
      }
    }
    // A candidate resists the lift at every grid value despite sitting
    // strictly inside the minimal cone.
    in.status = in.eps_star > 0.0 ? "feasible" : "counterexample-candidate";
    if (in.eps_star <= 0.0) ++rep.counterexample_candidates;
    rep.instances.push_back(std::move(in));
  }
  rep.consistent = rep.counterexample_candidates == 0;
  return rep;
}

LiftReport ps_check(const MatOpSys& t, int n, Eigen::Index p, long samples,
                    std::vector<double> eps_grid, std::uint64_t seed) {
  check_lift_params(t, n, p, samples);
  const std::vector<double> grid = normalize_grid(std::move(eps_grid));
  LiftReport rep;
  rep.op = "ps";
  rep.params = lift_params_json(t, n, p, samples, grid, seed);

  Rng root(seed);
  const Eigen::Index level = t.dim * p;
  for (long id = 0; id < samples; ++id) {
    const std::uint64_t sd = root.derive(static_cast<std::uint64_t>(id));
    Rng rng(sd);
    Mat s0 = Mat::Zero(level, level);
    for (const Mat& tb : t.basis) s0 += kron(tb, rng.gaussian_hermitian(p));
    std::vector<Mat> band(static_cast<std::size_t>(n - 1));
    for (int i = 0; i + 1 < n; ++i) {
      Mat g = Mat::Zero(level, level);
      for (const Mat& tb : t.basis) g += kron(tb, rng.gaussian_matrix(p, p));
      band[static_cast<std::size_t>(i)] = g;
    }

    SnElement se{n, level, s0, band};
    const BoundaryShift bs = cone_boundary_shift(sn_element(se), 1e-6, 20000);
    s0 += double(n) * (bs.hi + 2.0 * grid.front()) * Mat::Identity(level, level);

    SnMaxData data{n, t, p, s0, band};
    LiftInstance in;
    in.id = id;
    in.seed = sd;
    in.eps_star = -1.0;
    in.certificates = Json::object();
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const ConeCertificate cert = sn_max_membership(data, grid[gi], 1e-8);
      in.certificates[eps_key(grid[gi])] = cert.to_json();
      if (cert.status == CertStatus::Feasible) {
        in.eps_star = grid[gi];
        break;
      }
    }
    in.status = in.eps_star > 0.0 ? "feasible" : "counterexample-candidate";
    if (in.eps_star <= 0.0) ++rep.counterexample_candidates;
    rep.instances.push_back(std::move(in));
  }
  rep.consistent = rep.counterexample_candidates == 0;
  return rep;
}

// ---------------------------------------------------------------------------
// Gap search
// ---------------------------------------------------------------------------

GapMode parse_gap_mode(const std::string& name) {
  if (name == "ee") return GapMode::EE;
  if (name == "ww") return GapMode::WW;
  if (name == "uu-vv" || name == "uu_vv") return GapMode::UUVV;
  fail_invalid("unknown gap mode: " + name);
}

std::string to_string(GapMode m) {
  switch (m) {
    case GapMode::EE:
      return "ee";
    case GapMode::WW:
      return "ww";
    case GapMode::UUVV:
      return "uu-vv";
  }
  fail_invalid("unknown gap mode");
}

Json GapReport::to_json() const {
  Json arr = Json::array();
  for (const GapInstance& in : instances) {
    Json j;
    j["id"] = in.id;
    j["seed"] = in.seed;
    j["bucket"] = in.bucket;
    j["detail"] = in.detail;
    arr.push_back(std::move(j));
  }
  Json j;
  j["mode"] = mode;
  j["params"] = params;
  j["instances"] = std::move(arr);
  j["buckets"] = Json{{"certified_in_both", certified_in_both},
                      {"refuted_in_min", refuted_in_min},
                      {"unresolved", unresolved}};
  j["consistent"] = consistent;
  return j;
}

namespace {

/// Interior member of M_k(S)+ with margin ~0.3, sampled in coefficient space.
Mat interior_factor_sample(const MatOpSys& sys, Eigen::Index k, Rng& rng) {
  Mat x = Mat::Zero(sys.dim * k, sys.dim * k);
  for (const Mat& b : sys.basis) x += kron(b, rng.gaussian_hermitian(k));
  const double lam = herm_eigenvalues(x).minCoeff();
  return x + (0.3 + std::max(0.0, -lam)) * Mat::Identity(sys.dim * k, sys.dim * k);
}

void bucket_count(GapReport& rep, const std::string& bucket) {
  if (bucket == "certified-in-both")
    ++rep.certified_in_both;
  else if (bucket == "refuted-in-min")
    ++rep.refuted_in_min;
  else
    ++rep.unresolved;
}

void gap_ee(GapReport& rep, int n, Eigen::Index p, long samples, Rng& root) {
  const MatOpSys sys = make_system(SystemKind::En, n);
  const Eigen::Index nb = static_cast<Eigen::Index>(sys.basis.size());
  for (long id = 0; id < samples; ++id) {
    const std::uint64_t sd = root.derive(100 + static_cast<std::uint64_t>(id));
    Rng rng(sd);
    GapInstance in;
    in.id = id;
    in.seed = sd;
    in.detail = Json::object();
    const int variant = static_cast<int>(id % 3);

    if (variant == 0) {
      // Planted max-cone element: must come back certified in both cones.
      const Mat pm = interior_factor_sample(sys, 2, rng);
      const Mat qm = interior_factor_sample(sys, 2, rng);
      Mat al(p, 4);
      for (Eigen::Index r = 0; r < p; ++r)
        for (Eigen::Index c = 0; c < 4; ++c) al(r, c) = rng.cgaussian() / 2.0;
      const Mat recon = compress_levels(factor_product(pm, qm, sys.dim, sys.dim, 2, 2), al,
                                        sys.dim * sys.dim, 4, p);
      TensorElement x = TensorElement::from_ambient(sys, sys, recon, p);
      for (Mat& c : x.coeff) c = herm_avg(c);
      const ConeCertificate minc = min_tensor_membership(x, 1e-9);
      const double eps = 1e-6 * std::max(1.0, recon.norm());
      const auto wit =
          max_tensor_inner_search(x, 2, 2, eps, 5, rng.derive(11), 1e-6);
      in.detail["variant"] = "planted";
      in.detail["min"] = minc.to_json();
      if (wit.has_value()) in.detail["max_witness"] = wit->to_json();
      const bool minok = minc.status == CertStatus::Feasible;
      if (minok && wit.has_value())
        in.bucket = "certified-in-both";
      else
        in.bucket = "unresolved";
      if (!minok && wit.has_value()) rep.consistent = false;
    } else if (variant == 1) {
      // Shifted interior member of the minimal cone; inner search brackets.
      TensorElement x;
      x.s = sys;
      x.t = sys;
      x.level = p;
      x.coeff.resize(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb));
      for (Mat& c : x.coeff) c = rng.gaussian_hermitian(p);
      const double lam = herm_eigenvalues(x.assemble()).minCoeff();
      const double delta = 1e-6 * std::max(1.0, std::abs(lam));
      x.coeff[0] += (delta - lam) * Mat::Identity(p, p);
      const ConeCertificate minc = min_tensor_membership(x, 1e-9);
      const double eps = 0.05 * std::max(1.0, x.assemble().norm());
      const auto wit =
          max_tensor_inner_search(x, 2, 2, eps, 4, rng.derive(13), 1e-6);
      in.detail["variant"] = "boundary";
      in.detail["eps"] = eps;
      in.detail["min"] = minc.to_json();
      if (wit.has_value()) in.detail["max_witness"] = wit->to_json();
      const bool minok = minc.status == CertStatus::Feasible;
      in.bucket = (minok && wit.has_value()) ? "certified-in-both" : "unresolved";
      if (!minok && wit.has_value()) rep.consistent = false;
    } else {
      // Negative shift: refuted in min (hence everywhere) by an eigenvector.
      TensorElement x;
      x.s = sys;
      x.t = sys;
      x.level = p;
      x.coeff.resize(static_cast<std::size_t>(nb) * static_cast<std::size_t>(nb));
      for (Mat& c : x.coeff) c = rng.gaussian_hermitian(p);
      const double lam = herm_eigenvalues(x.assemble()).minCoeff();
      const double delta = 0.01 * std::max(1.0, std::abs(lam));
      x.coeff[0] += (-lam - delta) * Mat::Identity(p, p);
      const ConeCertificate minc = min_tensor_membership(x, 1e-9);
      in.detail["variant"] = "refuted";
      in.detail["min"] = minc.to_json();
      in.detail["min_eig"] = herm_eigenvalues(x.assemble()).minCoeff();
      in.bucket =
          minc.status == CertStatus::Infeasible ? "refuted-in-min" : "unresolved";
    }
    bucket_count(rep, in.bucket);
    rep.instances.push_back(std::move(in));
  }
}

/// Coefficient data for an element of W_n (x) W_n at level p.
struct WwData {
  int n = 0;
  Eigen::Index p = 1;
  Mat c00;
  std::vector<Mat> left;   // n*n blocks, (i,j) at i*n+j, diagonal zero
  std::vector<Mat> right;  // same for the second slot
  std::vector<Mat> both;   // n^4 blocks, ((i,j),(k,l)) at ((i*n+j)*n+k)*n+l
};

Mat ww_assemble(const WwData& w) {
  const int n = w.n;
  const Eigen::Index d = static_cast<Eigen::Index>(n) * n * w.p;
  Mat rep = Mat::Zero(d, d);
  Mat in = Mat::Identity(n, n);
  rep += kron(in, kron(in, w.c00));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      Mat eij = Mat::Zero(n, n);
      eij(i, j) = 1.0;
      rep += kron(eij, kron(in, w.left[static_cast<std::size_t>(i) * n + j]));
      rep += kron(in, kron(eij, w.right[static_cast<std::size_t>(i) * n + j]));
      for (int k2 = 0; k2 < n; ++k2)
        for (int l = 0; l < n; ++l) {
          if (k2 == l) continue;
          Mat ekl = Mat::Zero(n, n);
          ekl(k2, l) = 1.0;
          rep += kron(eij, kron(ekl, w.both[((static_cast<std::size_t>(i) * n + j) * n +
                                             static_cast<std::size_t>(k2)) *
                                                n +
                                            l]));
        }
    }
  return rep;
}

/// Affine problem for the doubly constrained lift R in M_n (x) M_n (x) M_p:
/// off/off blocks fixed, slotwise diagonal sums fixed. The sampled data is
/// already a valid offset (each diagonal position carries the average value).
AffinePsdProblem ww_lift_problem(const WwData& w) {
  const int n = w.n;
  AffinePsdProblem prob;
  prob.dim = static_cast<Eigen::Index>(n) * n * w.p;
  prob.offset = ww_assemble(w);
  const std::vector<Mat> hb = herm_basis(w.p);
  const std::vector<Mat> full = herm_basis(n);
  std::vector<Mat> ks;
  for (int a = 0; a + 1 < n; ++a) {
    Mat ka = Mat::Zero(n, n);
    ka(a, a) = 1.0;
    ka(a + 1, a + 1) = -1.0;
    ks.push_back(ka);
  }
  Mat e00 = Mat::Zero(n, n);
  e00(0, 0) = 1.0;
  std::vector<Mat> offd;  // hermitian off-diagonal basis of M_n
  for (const Mat& b : full)
    if (std::abs(b.diagonal().sum()) < 1e-14 && b.cwiseAbs().diagonal().maxCoeff() < 1e-14)
      offd.push_back(b);
  for (const Mat& ka : ks)
    for (const Mat& b : full)
      for (const Mat& h : hb) prob.basis.push_back(kron(ka, kron(b, h)));
  for (const Mat& b : offd)
    for (const Mat& kc : ks)
      for (const Mat& h : hb) prob.basis.push_back(kron(b, kron(kc, h)));
  for (const Mat& kc : ks)
    for (const Mat& h : hb) prob.basis.push_back(kron(e00, kron(kc, h)));
  return prob;
}

void gap_ww(GapReport& rep, int n, Eigen::Index p, long samples, Rng& root) {
  for (long id = 0; id < samples; ++id) {
    const std::uint64_t sd = root.derive(200 + static_cast<std::uint64_t>(id));
    Rng rng(sd);
    GapInstance in;
    in.id = id;
    in.seed = sd;
    in.detail = Json::object();

    WwData w;
    w.n = n;
    w.p = p;
    w.c00 = rng.gaussian_hermitian(p);
    w.left.assign(static_cast<std::size_t>(n) * n, Mat::Zero(p, p));
    w.right.assign(static_cast<std::size_t>(n) * n, Mat::Zero(p, p));
    w.both.assign(static_cast<std::size_t>(n) * n * n * n, Mat::Zero(p, p));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Mat g = rng.gaussian_matrix(p, p) * 0.35;
        w.left[static_cast<std::size_t>(i) * n + j] = g;
        w.left[static_cast<std::size_t>(j) * n + i] = g.adjoint();
        g = rng.gaussian_matrix(p, p) * 0.35;
        w.right[static_cast<std::size_t>(i) * n + j] = g;
        w.right[static_cast<std::size_t>(j) * n + i] = g.adjoint();
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        if (i > j) continue;  // representatives i < j; partners set below
        for (int k2 = 0; k2 < n; ++k2)
          for (int l = 0; l < n; ++l) {
            if (k2 == l) continue;
            Mat g = rng.gaussian_matrix(p, p) * 0.2;
            w.both[((static_cast<std::size_t>(i) * n + j) * n + static_cast<std::size_t>(k2)) *
                       n +
                   l] = g;
            w.both[((static_cast<std::size_t>(j) * n + i) * n + static_cast<std::size_t>(l)) *
                       n +
                   k2] = g.adjoint();
          }
      }

    AffinePsdProblem prob = ww_lift_problem(w);
    const MarginResult mm = maximize_margin(prob, 1e-5, HUGE_VAL, 20000);
    const bool want_feasible = (id % 2 == 0);
    if (want_feasible) {
      const double tau = 1e-6 - mm.lower;
      w.c00 += tau * Mat::Identity(p, p);
      prob.offset = ww_assemble(w);
      SolveOptions so;
      so.tol = 1e-8;
      const ConeCertificate cert = solve_feasibility(prob, so);
      in.detail["variant"] = "lift";
      in.detail["margin_lo"] = mm.lower + tau;
      in.detail["margin_hi"] = mm.upper + tau;
      in.detail["lift"] = cert.to_json();
      in.bucket =
          cert.status == CertStatus::Feasible ? "certified-in-both" : "unresolved";
    } else {
      const double tau = -mm.upper - 0.02 * std::max(1.0, std::abs(mm.upper));
      w.c00 += tau * Mat::Identity(p, p);
      in.detail["variant"] = "refute";
      in.detail["lift_margin_hi"] = mm.upper + tau;
      // The lift is infeasible; look for a unitary-pair refutation of the
      // minimal cone (slotwise evaluations are jointly positive on it).
      bool refuted = false;
      for (Eigen::Index r = 2; r <= 4 && !refuted; ++r) {
        for (long trial = 0; trial < 40 && !refuted; ++trial) {
          std::vector<Mat> us, vs;
          for (int i = 0; i < n; ++i) us.push_back(rng.haar_unitary(r));
          for (int i = 0; i < n; ++i) vs.push_back(rng.haar_unitary(r));
          Mat ir = Mat::Identity(r, r);
          Mat m = kron(ir, kron(ir, w.c00));
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
              if (i == j) continue;
              const Mat uij = us[static_cast<std::size_t>(i)] *
                              us[static_cast<std::size_t>(j)].adjoint() / double(n);
              const Mat vij = vs[static_cast<std::size_t>(i)] *
                              vs[static_cast<std::size_t>(j)].adjoint() / double(n);
              m += kron(uij, kron(ir, w.left[static_cast<std::size_t>(i) * n + j]));
              m += kron(ir, kron(vij, w.right[static_cast<std::size_t>(i) * n + j]));
              for (int k2 = 0; k2 < n; ++k2)
                for (int l = 0; l < n; ++l) {
                  if (k2 == l) continue;
                  const Mat vkl = vs[static_cast<std::size_t>(k2)] *
                                  vs[static_cast<std::size_t>(l)].adjoint() / double(n);
                  m += kron(uij, kron(vkl, w.both[((static_cast<std::size_t>(i) * n + j) * n +
                                                   static_cast<std::size_t>(k2)) *
                                                      n +
                                                  l]));
                }
            }
          const double lam = herm_eigenvalues(herm_avg(m)).minCoeff();
          if (lam < -1e-8 * std::max(1.0, m.norm())) {
            refuted = true;
            Json ju = Json::array(), jv = Json::array();
            for (const Mat& u : us) ju.push_back(matrix_to_json(u));
            for (const Mat& v : vs) jv.push_back(matrix_to_json(v));
            in.detail["refutation"] =
                Json{{"r", r}, {"trial", trial}, {"min_eig", lam}, {"u", ju}, {"v", jv}};
          }
        }
      }
      in.bucket = refuted ? "refuted-in-min" : "unresolved";
    }
    bucket_count(rep, in.bucket);
    rep.instances.push_back(std::move(in));
  }
}

void gap_uu_vv(GapReport& rep, int n, Eigen::Index p, long samples, Rng& root) {
  const MatOpSys us = make_system(SystemKind::Un, n);
  const MatOpSys vs = make_system(SystemKind::Vn, n);
  for (long id = 0; id < samples; ++id) {
    const std::uint64_t sd = root.derive(300 + static_cast<std::uint64_t>(id));
    Rng rng(sd);
    GapInstance in;
    in.id = id;
    in.seed = sd;
    in.detail = Json::object();

    const Mat pm = interior_factor_sample(us, 2, rng);
    const Mat qm = interior_factor_sample(us, 2, rng);
    Mat al(p, 4);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < 4; ++c) al(r, c) = rng.cgaussian() / 2.0;
    const Mat recon = compress_levels(factor_product(pm, qm, us.dim, us.dim, 2, 2), al,
                                      us.dim * us.dim, 4, p);
    MaxConeWitness uw;
    uw.k = 2;
    uw.m = 2;
    uw.eps = 0.0;
    uw.p = pm;
    uw.q = qm;
    uw.alpha = al;
    uw.recon_residual = 0.0;
    in.detail["u_witness"] = uw.to_json();

    // Re-test the same ambient element against the larger system pair.
    TensorElement xv = TensorElement::from_ambient(vs, vs, recon, p);
    for (Mat& c : xv.coeff) c = herm_avg(c);
    const ConeCertificate minc = min_tensor_membership(xv, 1e-9);
    const double eps = 1e-6 * std::max(1.0, recon.norm());
    const auto wit = max_tensor_inner_search(xv, 2, 2, eps, 5, rng.derive(17), 1e-6);
    in.detail["min"] = minc.to_json();
    if (wit.has_value()) in.detail["max_witness"] = wit->to_json();
    const bool minok = minc.status == CertStatus::Feasible;
    in.bucket = (minok && wit.has_value()) ? "certified-in-both" : "unresolved";
    if (!minok && wit.has_value()) rep.consistent = false;
    bucket_count(rep, in.bucket);
    rep.instances.push_back(std::move(in));
  }
}

}  // namespace

GapReport gap_search(GapMode mode, int n, Eigen::Index p, long samples, std::uint64_t seed) {
  if (n < 2 || n > 4) fail_invalid("gap_search: n must be in [2, 4]");
  if (p < 1 || p > 2) fail_invalid("gap_search: level must be in [1, 2]");
  if (samples < 1) fail_invalid("gap_search: samples must be >= 1");
  GapReport rep;
  rep.mode = to_string(mode);
  rep.params = Json{{"mode", to_string(mode)}, {"n", n}, {"p", p}, {"samples", samples},
                    {"seed", seed}};
  Rng root(seed);
  switch (mode) {
    case GapMode::EE:
      gap_ee(rep, n, p, samples, root);
      break;
    case GapMode::WW:
      gap_ww(rep, n, p, samples, root);
      break;
    case GapMode::UUVV:
      gap_uu_vv(rep, n, p, samples, root);
      break;
  }
  return rep;
}

}  // namespace osq
