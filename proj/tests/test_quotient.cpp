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

#include <doctest.h>

#include <cmath>

#include "osq/quotient.hpp"
#include "osq/rng.hpp"

using namespace osq;

namespace {

QuotientElement q_element(SystemKind kind, int n, const Mat& rep) {
  QuotientElement x;
  x.quo = trace_zero_diagonal_quotient(make_system(kind, n));
  x.level = rep.rows() / n;
  x.rep = rep;
  return x;
}

Mat unit_rep(int n, int i, int j) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("trace-zero diagonal kernel has dimension n-1") {
  for (int n = 2; n <= 4; ++n) {
    Quotient q = trace_zero_diagonal_quotient(make_system(SystemKind::Mn, n));
    CHECK(q.kernel.basis.size() == static_cast<std::size_t>(n - 1));
    for (const Mat& k : q.kernel.basis) {
      CHECK(std::abs(k.trace()) < 1e-14);
      CHECK((k - k.adjoint()).norm() < 1e-14);
      // Diagonal only.
      CHECK((k - Mat(k.diagonal().asDiagonal())).norm() < 1e-14);
    }
    CHECK_NOTHROW(trace_zero_diagonal_quotient(make_system(SystemKind::Tn, n)));
  }
  CHECK_THROWS_AS(trace_zero_diagonal_quotient(make_system(SystemKind::En, 3)), Error);
}

TEST_CASE("zero-diagonal symmetric elements are not d-feasible") {
  // [[t, 1], [1, -t]] has determinant -(t^2 + 1) for every diagonal shift.
  ConeCertificate c =
      d_cone_membership(q_element(SystemKind::Mn, 2, unit_rep(2, 0, 1) + unit_rep(2, 1, 0)), 1e-9);
  CHECK(c.status == CertStatus::Infeasible);
  REQUIRE(c.separator.has_value());
}

TEST_CASE("negative unit stays infeasible under small smoothing") {
  QuotientElement x = q_element(SystemKind::Mn, 2, -Mat::Identity(2, 2));
  ConeCertificate c = c_cone_membership(x, 0.5, 1e-9);
  CHECK(c.status == CertStatus::Infeasible);
  // And a shift past the unit flips it.
  ConeCertificate d = c_cone_membership(x, 1.5, 1e-9);
  CHECK(d.status == CertStatus::Feasible);
}

TEST_CASE("kernel directions are d-feasible in both signs") {
  for (int n = 2; n <= 4; ++n) {
    Mat e = unit_rep(n, 0, 0) - Mat::Identity(n, n) / static_cast<double>(n);
    ConeCertificate plus = d_cone_membership(q_element(SystemKind::Mn, n, e), 1e-8);
    ConeCertificate minus = d_cone_membership(q_element(SystemKind::Mn, n, -e), 1e-8);
    CHECK(plus.status == CertStatus::Feasible);
    CHECK(minus.status == CertStatus::Feasible);
  }
}

TEST_CASE("off-diagonal unit has quotient norm 1/n") {
  NormResult r2 = quotient_norm(q_element(SystemKind::Mn, 2, unit_rep(2, 0, 1)), 1e-7);
  CHECK(r2.converged);
  CHECK(std::abs(r2.value - 0.5) < 1e-6);
  CHECK(r2.lo <= 0.5 + 1e-7);
  CHECK(r2.hi >= 0.5 - 1e-7);

  NormResult r3 = quotient_norm(q_element(SystemKind::Mn, 3, unit_rep(3, 1, 2)), 1e-7);
  CHECK(std::abs(r3.value - 1.0 / 3.0) < 1e-6);
}

TEST_CASE("norm vanishes exactly on the kernel") {
  Mat k = unit_rep(3, 0, 0) - unit_rep(3, 1, 1);
  NormResult r = quotient_norm(q_element(SystemKind::Mn, 3, k), 1e-7);
  CHECK(r.value < 1e-6);
}

TEST_CASE("boundary shift locates the cone boundary") {
  // lambda I + [[0,1],[1,0]] + diag(t,-t) is PSD first at lambda = 1, t = 0.
  QuotientElement x = q_element(SystemKind::Mn, 2, unit_rep(2, 0, 1) + unit_rep(2, 1, 0));
  BoundaryShift s = cone_boundary_shift(x, 1e-7);
  CHECK(std::abs(s.lambda_star - 1.0) < 1e-5);
  CHECK(s.lo <= s.lambda_star);
  CHECK(s.hi >= s.lambda_star);

  // The unit itself sits at shift -1 (it can absorb its own negation).
  QuotientElement u = q_element(SystemKind::Mn, 2, Mat::Identity(2, 2));
  BoundaryShift su = cone_boundary_shift(u, 1e-7);
  CHECK(std::abs(su.lambda_star + 1.0) < 1e-5);
}

TEST_CASE("minimal-lift membership matches the n=2 determinant rule") {
  // Constraint: [[r, a],[conj(a), 2 - r]] PSD for some r; possible iff
  // max_r r(2-r) = 1 >= |a|^2, i.e. |a| <= 1 at A11 = 1.
  auto make = [](double a) {
    WnElement w;
    w.n = 2;
    w.p = 1;
    w.a11 = Mat::Identity(1, 1);
    w.offdiag.assign(4, Mat::Zero(1, 1));
    w.offdiag[1](0, 0) = a;
    w.offdiag[2](0, 0) = a;
    return w;
  };
  CHECK(wn_min_membership(make(0.9), 1e-9).status == CertStatus::Feasible);
  CHECK(wn_min_membership(make(1.2), 1e-9).status == CertStatus::Infeasible);
}

TEST_CASE("unitary refutation finds a 1-dimensional witness") {
  WnElement w;
  w.n = 2;
  w.p = 1;
  w.a11 = Mat::Identity(1, 1);
  w.offdiag.assign(4, Mat::Zero(1, 1));
  w.offdiag[1](0, 0) = 1.2;
  w.offdiag[2](0, 0) = 1.2;
  // Evaluated at phases u, v: 1 + 1.2 cos(arg(u conj(v))), minimum -0.2.
  auto wit = unitary_refute(w, 1, 400, 17, 1e-9);
  REQUIRE(wit.has_value());
  CHECK(wit->min_eig < 0.0);
  CHECK(wit->min_eig >= -0.2 - 1e-12);
  // The stored evaluation matches its eigenvalue claim.
  RVec ev = herm_eigenvalues(HermMat::mirror(wit->evaluated).raw());
  CHECK(std::abs(ev(0) - wit->min_eig) < 1e-12);
  CHECK(wit->unitaries.size() == 2);

  // A feasible element admits no refutation.
  w.offdiag[1](0, 0) = 0.5;
  w.offdiag[2](0, 0) = 0.5;
  CHECK_FALSE(unitary_refute(w, 2, 200, 17, 1e-9).has_value());
}

TEST_CASE("tridiagonal minimal lift matches the n=2 rule") {
  auto make = [](double s1) {
    SnElement e;
    e.n = 2;
    e.p = 1;
    e.s0 = 2.0 * Mat::Identity(1, 1);
    e.s.assign(1, s1 * Mat::Identity(1, 1));
    return e;
  };
  CHECK(sn_min_membership(make(0.9), 1e-9).status == CertStatus::Feasible);
  CHECK(sn_min_membership(make(1.2), 1e-9).status == CertStatus::Infeasible);
}

TEST_CASE("tridiagonal lift agrees with a direct shift search") {
  // n = 3, scalar level: representative diag(S0/3 + t1, S0/3 + t2 - t1,
  // S0/3 - t2) with bands (s1, s2). Compare the solver against a dense grid
  // over (t1, t2) whenever the grid is decisive.
  Rng rng(23);
  int checked = 0;
  for (int rep = 0; rep < 24; ++rep) {
    const double s0 = 3.0;
    const double s1 = 1.6 * (rng.uniform() - 0.5) * 2.0;
    const double s2 = 1.6 * (rng.uniform() - 0.5) * 2.0;
    double best = -1e9;
    // The smallest eigenvalue is concave in (t1, t2), so the grid maximum
    // under-estimates the true optimum by at most the grid error (~0.06).
    for (double t1 = -2.0; t1 <= 2.0; t1 += 0.04) {
      for (double t2 = -2.0; t2 <= 2.0; t2 += 0.04) {
        Mat m(3, 3);
        m << s0 / 3 + t1, s1, 0, s1, s0 / 3 + t2 - t1, s2, 0, s2, s0 / 3 - t2;
        best = std::max(best, herm_eigenvalues(m).minCoeff());
      }
    }
    if (std::abs(best) < 6e-2) continue;  // inside the grid error band
    SnElement e;
    e.n = 3;
    e.p = 1;
    e.s0 = s0 * Mat::Identity(1, 1);
    e.s = {s1 * Mat::Identity(1, 1), s2 * Mat::Identity(1, 1)};
    ConeCertificate c = sn_min_membership(e, 1e-9);
    CHECK(c.status == (best >= 0 ? CertStatus::Feasible : CertStatus::Infeasible));
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("exact cone members stay members after smoothing") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    Mat g = rng.gaussian_hermitian(3);
    QuotientElement x = q_element(SystemKind::Mn, 3, g);
    ConeCertificate d = d_cone_membership(x, 1e-9);
    if (d.status != CertStatus::Feasible) continue;
    ConeCertificate c = c_cone_membership(x, 1e-6, 1e-9);
    CHECK(c.status == CertStatus::Feasible);
  }
}

TEST_CASE("smoothed boundary members lift exactly") {
  // Proximinality probe: push a random element onto the cone boundary, then
  // check that the smoothed certificate implies the exact one.
  Rng rng(37);
  for (int rep = 0; rep < 4; ++rep) {
    Mat g = rng.gaussian_hermitian(3);
    QuotientElement x = q_element(SystemKind::Mn, 3, g);
    BoundaryShift s = cone_boundary_shift(x, 1e-8);
    QuotientElement b = x;
    b.rep = x.rep + s.hi * Mat::Identity(3, 3);
    ConeCertificate c = c_cone_membership(b, 1e-7, 1e-9);
    if (c.status != CertStatus::Feasible) continue;
    ConeCertificate d = d_cone_membership(b, 1e-5);
    CHECK(d.status == CertStatus::Feasible);
  }
}

TEST_CASE("factorization reproduces prescribed blocks") {
  Rng rng(41);
  const int n = 3;
  const Eigen::Index p = 2;
  Mat y = rng.gaussian_matrix(n * p, n * p);
  Mat full = y * y.adjoint();
  std::vector<Mat> blocks(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) blocks[static_cast<std::size_t>(i * n + j)] = full.block(i * p, j * p, p, p);

  FreeFactorization f = free_factorization(n, p, blocks, 1e-9);
  REQUIRE(f.lift.status == CertStatus::Feasible);
  CHECK(f.residual <= 1e-8);
  // x reproduces the off-diagonal data and the diagonal block sum.
  Mat recon = f.x * f.x.adjoint();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      CHECK((recon.block(i * p, j * p, p, p) - full.block(i * p, j * p, p, p)).norm() < 1e-7);
    }

  // A non-hermitian table is rejected.
  blocks[1] = Mat::Identity(p, p);
  blocks[static_cast<std::size_t>(n)] = 2.0 * Mat::Identity(p, p);
  CHECK_THROWS_AS(free_factorization(n, p, blocks, 1e-9), Error);
}
