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

#include "osq/feasibility.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace osq {

void AffinePsdProblem::validate() const {
  if (dim < 1) fail_invalid("AffinePsdProblem: dim must be >= 1");
  if (offset.rows() != dim || offset.cols() != dim) fail_invalid("AffinePsdProblem: offset dimension mismatch");
  if ((offset - offset.adjoint()).norm() > 1e-12 * std::max(1.0, offset.norm()))
    fail_invalid("AffinePsdProblem: offset not hermitian");
  for (const Mat& b : basis) {
    if (b.rows() != dim || b.cols() != dim) fail_invalid("AffinePsdProblem: basis dimension mismatch");
    if ((b - b.adjoint()).norm() > 1e-12 * std::max(1.0, b.norm()))
      fail_invalid("AffinePsdProblem: basis element not hermitian");
  }
  if (!basis.empty()) {
    Eigen::Index k = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) g(i, j) = hs_inner(basis[i], basis[j]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
    double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (lo <= 1e-10 * std::max(1.0, hi))
      fail_invalid("AffinePsdProblem: basis not linearly independent (Gram nonsingularity at 1e-10)");
  }
}

std::string to_string(CertStatus s) {
  switch (s) {
    case CertStatus::Feasible: return "Feasible";
    case CertStatus::Infeasible: return "Infeasible";
    default: return "Undecided";
  }
}

Json ConeCertificate::to_json() const {
  Json j;
  j["status"] = to_string(status);
  j["iterations"] = iterations;
  j["residual"] = residual;
  if (witness) j["witness"] = matrix_to_json(*witness);
  if (separator) j["separator"] = matrix_to_json(*separator);
  return j;
}

ConeCertificate ConeCertificate::from_json(const Json& j) {
  ConeCertificate c;
  std::string s = j.at("status").get<std::string>();
  if (s == "Feasible") c.status = CertStatus::Feasible;
  else if (s == "Infeasible") c.status = CertStatus::Infeasible;
  else if (s == "Undecided") c.status = CertStatus::Undecided;
  else fail_invalid("certificate json: unknown status");
  c.iterations = j.value("iterations", 0L);
  c.residual = j.value("residual", 0.0);
  if (j.contains("witness")) c.witness = matrix_from_json(j.at("witness"));
  if (j.contains("separator")) c.separator = matrix_from_json(j.at("separator"));
  return c;
}

namespace {

/// Precomputed affine-set machinery: projection, coordinates, and exact
/// orthogonalization against the basis via the Gram factorization.
struct AffineOps {
  const AffinePsdProblem& prob;
  Eigen::LLT<Eigen::MatrixXd> gram_llt;
  Eigen::Index k;

  explicit AffineOps(const AffinePsdProblem& p) : prob(p), k(static_cast<Eigen::Index>(p.basis.size())) {
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) g(i, j) = hs_inner(p.basis[i], p.basis[j]);
    if (k > 0) gram_llt.compute(g);
  }

  Eigen::VectorXd pairings(const Mat& x) const {
    Eigen::VectorXd c(k);
    for (Eigen::Index i = 0; i < k; ++i) c(i) = hs_inner(prob.basis[i], x);
    return c;
  }

  Eigen::VectorXd coords(const Mat& x) const {
    if (k == 0) return Eigen::VectorXd(0);
    return gram_llt.solve(pairings(x - prob.offset));
  }

  Mat assemble(const Eigen::VectorXd& t) const {
    Mat m = prob.offset;
    for (Eigen::Index i = 0; i < k; ++i) m += t(i) * prob.basis[i];
    return m;
  }

  Mat project(const Mat& x) const { return assemble(coords(x)); }

  /// Subtract the basis component so that <result, basis[i]> = 0 exactly
  /// (up to the Gram solve's floating-point error).
  Mat orthogonalize(const Mat& f) const {
    if (k == 0) return f;
    Eigen::VectorXd s = gram_llt.solve(pairings(f));
    Mat r = f;
    for (Eigen::Index i = 0; i < k; ++i) r -= s(i) * prob.basis[i];
    return r;
  }
};

/// Separator post-processing: alternating projections between the
/// basis-orthogonal subspace and the PSD cone, renormalized each round.
/// Orthogonality is exact after every orthogonalize, so the only residual to
/// drive down is the PSD violation; the best iterate is kept. When the
/// identity's basis-orthogonal component is positive definite, a small
/// multiple of it repairs the violation exactly (Weyl) without moving any
/// pairing, which shortcuts the slow tangential tail of the alternation.
/// Returns nullopt if the iteration collapses toward zero.
std::optional<Mat> polish_separator(const AffineOps& ops, Mat f) {
  const Eigen::Index d = f.rows();
  const Mat repair = HermMat::mirror(ops.orthogonalize(Mat::Identity(d, d))).raw();
  const double repair_floor =
      repair.norm() > 1e-300 ? herm_eigenvalues(repair).minCoeff() : 0.0;

  std::optional<Mat> best;
  double best_viol = std::numeric_limits<double>::infinity();
  Mat window_f;
  double window_viol = -1.0;
  for (int round = 0; round < 600; ++round) {
    f = HermMat::mirror(ops.orthogonalize(f)).raw();
    if (repair_floor > 1e-6) {
      const double lam = herm_eigenvalues(f).minCoeff();
      const double c = 1.05 * std::max(0.0, -lam) / repair_floor;
      if (c > 0.0 && c * repair.norm() <= 0.05 * f.norm()) f += c * repair;
    }
    const double n = f.norm();
    if (!(n > 1e-300)) return best;
    f /= n;
    const double viol = std::max(0.0, -herm_eigenvalues(f).minCoeff());
    if (viol < best_viol) {
      best_viol = viol;
      best = f;
      if (viol <= 1e-13) break;
    }
    // A slow linear tail means the violation decays along one dominant mode;
    // an Aitken jump across a 25-round window lands at its fixed point. The
    // jump stays inside the basis-orthogonal subspace (it is a combination of
    // two orthogonalized iterates), so only positivity needs re-polishing.
    if (round % 25 == 0) {
      const double contraction = window_viol > 0.0 && viol > 0.0 ? viol / window_viol : 1.0;
      if (contraction < 0.999 && viol < window_viol) {
        f = (f - contraction * window_f) / (1.0 - contraction);
        window_viol = -1.0;
      } else {
        window_f = f;
        window_viol = viol;
      }
    }
    f = psd_project(f);
  }
  return best;
}

struct EvalCache {
  Mat m;            // assembled affine point
  RVec lam;         // ascending eigenvalues
  Mat vec;          // eigenvectors
  double lambda_min = 0.0;
};

EvalCache eval_point(const AffineOps& ops, const Eigen::VectorXd& t) {
  EvalCache e;
  e.m = ops.assemble(t);
  Eigen::SelfAdjointEigenSolver<Mat> es(HermMat::mirror(e.m).raw());
  e.lam = es.eigenvalues();
  e.vec = es.eigenvectors();
  e.lambda_min = e.lam.minCoeff();
  return e;
}

/// Smoothed objective: f_beta(t) = -log(tr exp(-beta M(t))) / beta, a concave
/// lower approximation of lambda_min(M(t)) within log(dim)/beta.
struct SmoothEval {
  double f = 0.0;
  Eigen::VectorXd grad;
  Mat density;  // softmax density, PSD with unit trace
};

SmoothEval smooth_eval(const AffineOps& ops, const EvalCache& e, double beta) {
  SmoothEval s;
  Eigen::Index d = e.lam.size();
  RVec w(d);
  double z = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    w(i) = std::exp(-beta * (e.lam(i) - e.lambda_min));
    z += w(i);
  }
  s.f = e.lambda_min - std::log(z) / beta;
  s.density = e.vec * (w / z).asDiagonal() * e.vec.adjoint();
  s.grad = ops.pairings(s.density);
  return s;
}

}  // namespace

MarginResult maximize_margin(const AffinePsdProblem& prob, double target_gap,
                             double stop_when_above, long max_evals) {
  prob.validate();
  AffineOps ops(prob);
  Eigen::Index k = ops.k, d = prob.dim;
  MarginResult res;
  res.t = Eigen::VectorXd::Zero(k);

  if (k == 0) {
    EvalCache e = eval_point(ops, res.t);
    res.lower = res.upper = e.lambda_min;
    res.density = e.vec.col(0) * e.vec.col(0).adjoint();
    res.evals = 1;
    return res;
  }

  Eigen::VectorXd t = Eigen::VectorXd::Zero(k);
  EvalCache e = eval_point(ops, t);
  long evals = 1;
  Eigen::VectorXd best_t = t;
  double best_lambda = e.lambda_min;

  double spread = std::max(e.lam.maxCoeff() - e.lambda_min, 1e-6);
  double beta = 8.0 / spread;
  double gap_goal = std::max(target_gap, 1e-13);
  double beta_max = std::min(1e13, 16.0 * std::log(std::max<double>(d, 2)) / gap_goal);

  double upper = std::numeric_limits<double>::infinity();
  Mat upper_density = Mat::Identity(d, d) / static_cast<double>(d);

  // The bound lambda_min(X) <= <F, X> / tr(F) on the whole affine family
  // needs F basis-orthogonal and genuinely PSD; a dirty F certifies nothing,
  // so the refresh is skipped unless the polish gets the violation negligible.
  auto refresh_upper = [&](const Mat& density) {
    std::optional<Mat> f = polish_separator(ops, density);
    if (!f) return;
    if (-herm_eigenvalues(*f).minCoeff() > 1e-12) return;
    double tr = f->trace().real();
    if (!(tr > 1e-300)) return;
    double u = hs_inner(*f, prob.offset) / tr;
    if (u < upper) {
      upper = u;
      upper_density = *f / tr;
    }
  };

  const int mem = 8;
  bool done = false;
  while (!done) {
    // L-BFGS ascent on the current smoothing level.
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    SmoothEval se = smooth_eval(ops, e, beta);
    double gtol = std::max(1e-12, 0.005 / beta);
    for (int it = 0; it < 80 && !done; ++it) {
      if (best_lambda >= stop_when_above) { done = true; break; }
      Eigen::VectorXd g = -se.grad;  // gradient of the (minimized) -f
      if (g.norm() <= gtol) break;

      // Two-loop recursion.
      Eigen::VectorXd q = g;
      std::vector<double> alpha(s_hist.size());
      for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
        alpha[i] = rho_hist[i] * s_hist[i].dot(q);
        q -= alpha[i] * y_hist[i];
      }
      if (!s_hist.empty()) {
        double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        q *= gamma;
      } else {
        q *= 1.0 / std::max(1.0, g.norm()) / beta;
      }
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        double bcoef = rho_hist[i] * y_hist[i].dot(q);
        q += (alpha[i] - bcoef) * s_hist[i];
      }
      Eigen::VectorXd dir = -q;
      double slope = g.dot(dir);
      if (!(slope < 0.0)) {
        dir = -g;
        slope = -g.squaredNorm();
      }

      // Armijo backtracking.
      double step = 1.0;
      double f0 = -se.f;
      Eigen::VectorXd t_new;
      EvalCache e_new;
      SmoothEval se_new;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        t_new = t + step * dir;
        e_new = eval_point(ops, t_new);
        ++evals;
        se_new = smooth_eval(ops, e_new, beta);
        if (e_new.lambda_min > best_lambda) {
          best_lambda = e_new.lambda_min;
          best_t = t_new;
        }
        if (-se_new.f <= f0 + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
        if (evals >= max_evals) break;
      }
      if (!accepted) break;

      Eigen::VectorXd s_vec = t_new - t;
      Eigen::VectorXd y_vec = (-se_new.grad) - (-se.grad);
      double sy = s_vec.dot(y_vec);
      if (sy > 1e-12 * s_vec.norm() * y_vec.norm()) {
        s_hist.push_back(s_vec);
        y_hist.push_back(y_vec);
        rho_hist.push_back(1.0 / sy);
        if (static_cast<int>(s_hist.size()) > mem) {
          s_hist.pop_front();
          y_hist.pop_front();
          rho_hist.pop_front();
        }
      }
      t = t_new;
      e = e_new;
      se = se_new;
      if (evals >= max_evals || t.norm() > 1e9) { done = true; break; }
    }

    refresh_upper(se.density);
    if (best_lambda >= stop_when_above) break;
    if (upper - best_lambda <= target_gap) break;
    if (evals >= max_evals) break;
    if (beta >= beta_max) break;
    beta = std::min(beta * 8.0, beta_max);
  }

  res.t = best_t;
  res.lower = best_lambda;
  res.upper = std::max(upper, best_lambda);
  res.density = upper_density;
  res.evals = evals;
  return res;
}

namespace {

ConeCertificate decide_trivial(const AffinePsdProblem& prob, double tol) {
  ConeCertificate cert;
  Eigen::SelfAdjointEigenSolver<Mat> es(HermMat::mirror(prob.offset).raw());
  double lam = es.eigenvalues().minCoeff();
  cert.iterations = 1;
  if (lam >= -tol) {
    cert.status = CertStatus::Feasible;
    cert.witness = prob.offset;
    cert.residual = std::max(0.0, -lam);
  } else {
    cert.status = CertStatus::Infeasible;
    Mat v = es.eigenvectors().col(0);
    cert.separator = HermMat::mirror(v * v.adjoint()).raw();
    cert.residual = -lam;
  }
  return cert;
}

}  // namespace

ConeCertificate solve_feasibility(const AffinePsdProblem& prob, const SolveOptions& opt) {
  prob.validate();
  double tol = opt.tol;
  if (!(tol > 0.0)) fail_invalid("solve_feasibility: tol must be positive");

  auto finish = [&](ConeCertificate cert) {
    if (cert.status != CertStatus::Undecided && !verify_certificate(prob, cert, tol)) {
      // A certificate that does not survive re-verification is withdrawn.
      ConeCertificate undecided;
      undecided.iterations = cert.iterations;
      undecided.residual = cert.residual;
      return undecided;
    }
    return cert;
  };

  if (prob.basis.empty()) return finish(decide_trivial(prob, tol));

  AffineOps ops(prob);
  long iters = 0;

  // Phase 1: Dykstra alternating projections between the affine set and the
  // PSD cone. The affine iterate is exactly in the affine set each round.
  Mat x = prob.offset;
  Mat p = Mat::Zero(prob.dim, prob.dim), q = Mat::Zero(prob.dim, prob.dim);
  std::deque<Mat> normal_dirs;
  double prev_gap = std::numeric_limits<double>::infinity();
  for (long it = 0; it < opt.dykstra_iters; ++it) {
    ++iters;
    Mat y = psd_project(x + p);
    p = x + p - y;
    Mat x_new = ops.project(y + q);
    q = y + q - x_new;
    x = HermMat::mirror(x_new).raw();

    double lam = herm_eigenvalues(x).minCoeff();
    if (lam >= -tol) {
      ConeCertificate cert;
      cert.status = CertStatus::Feasible;
      cert.witness = x;
      cert.iterations = iters;
      cert.residual = std::max(0.0, -lam);
      return finish(cert);
    }

    normal_dirs.push_back(y - x);
    if (static_cast<long>(normal_dirs.size()) > 50) normal_dirs.pop_front();

    if ((it + 1) % 50 == 0) {
      double gap = (x - y).norm();
      bool plateaued = gap > 10.0 * tol && gap > 0.99 * prev_gap;
      prev_gap = gap;
      if (plateaued) {
        Mat avg = Mat::Zero(prob.dim, prob.dim);
        for (const Mat& d : normal_dirs) avg += d;
        avg /= static_cast<double>(normal_dirs.size());
        if (auto sep = polish_separator(ops, avg)) {
          ConeCertificate cert;
          cert.status = CertStatus::Infeasible;
          cert.separator = *sep;
          cert.iterations = iters;
          cert.residual = gap;
          if (verify_certificate(prob, cert, tol)) return cert;
        }
      }
    }
  }

  // Phase 2: smoothed max-min-eigenvalue ascent, warm-started at Dykstra's
  // affine iterate, deciding through certified primal/dual bounds.
  AffinePsdProblem warm = prob;
  warm.offset = x;  // same affine set, shifted parametrization
  MarginResult mr = maximize_margin(warm, tol / 4.0, tol, opt.smooth_evals);
  ConeCertificate cert;
  cert.iterations = iters + mr.evals;
  if (mr.lower >= -tol) {
    cert.status = CertStatus::Feasible;
    AffineOps warm_ops(warm);
    cert.witness = HermMat::mirror(warm_ops.assemble(mr.t)).raw();
    cert.residual = std::max(0.0, -mr.lower);
    return finish(cert);
  }
  if (mr.upper <= -tol) {
    if (auto sep = polish_separator(ops, mr.density)) {
      cert.status = CertStatus::Infeasible;
      cert.separator = *sep;
      cert.residual = -mr.upper;
      return finish(cert);
    }
  }
  cert.status = CertStatus::Undecided;
  cert.residual = mr.upper - mr.lower;
  return cert;
}

bool verify_certificate(const AffinePsdProblem& prob, const ConeCertificate& cert, double tol) {
  try {
    prob.validate();
    if (!(tol > 0.0)) return false;
    AffineOps ops(prob);
    if (cert.status == CertStatus::Feasible) {
      if (!cert.witness) return false;
      const Mat& w = *cert.witness;
      if (w.rows() != prob.dim || w.cols() != prob.dim) return false;
      if ((w - w.adjoint()).norm() > 1e-10 * std::max(1.0, w.norm())) return false;
      double affine_residual = (w - ops.project(w)).norm();
      if (affine_residual > tol * std::max(1.0, w.norm())) return false;
      return psd_check(w, tol).is_psd;
    }
    if (cert.status == CertStatus::Infeasible) {
      if (!cert.separator) return false;
      const Mat& f = *cert.separator;
      if (f.rows() != prob.dim || f.cols() != prob.dim) return false;
      if ((f - f.adjoint()).norm() > 1e-10 * std::max(1.0, f.norm())) return false;
      double fn = f.norm();
      if (fn < 0.9 || fn > 1.1) return false;  // unit Frobenius convention
      if (!psd_check(f, tol).is_psd) return false;
      Eigen::VectorXd pr = ops.pairings(f);
      for (Eigen::Index i = 0; i < pr.size(); ++i)
        if (std::abs(pr(i)) > tol * std::max(1.0, prob.basis[i].norm())) return false;
      double tr = f.trace().real();
      return hs_inner(f, prob.offset) <= -tol * tr;
    }
    return false;
  } catch (const Error&) {
    return false;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace osq
