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

#include "osq/opsys.hpp"
#include "osq/rng.hpp"

using namespace osq;

TEST_CASE("named systems have the expected span dimensions") {
  struct Row {
    SystemKind kind;
    int n;
    std::size_t span;
    Eigen::Index ambient;
  };
  const Row rows[] = {
      {SystemKind::Mn, 3, 9, 3},  {SystemKind::Tn, 3, 7, 3},  {SystemKind::En, 3, 7, 3},
      {SystemKind::Vn, 3, 7, 4},  {SystemKind::Un, 3, 5, 4},  {SystemKind::Mn, 2, 4, 2},
      {SystemKind::Tn, 4, 10, 4}, {SystemKind::En, 4, 13, 4}, {SystemKind::Vn, 4, 10, 6},
      {SystemKind::Un, 4, 7, 6},
  };
  for (const Row& r : rows) {
    MatOpSys s = make_system(r.kind, r.n);
    CHECK(s.basis.size() == r.span);
    CHECK(s.dim == r.ambient);
    // Hermitian basis, pairwise orthogonal, unit inside the span.
    for (std::size_t a = 0; a < s.basis.size(); ++a) {
      CHECK((s.basis[a] - s.basis[a].adjoint()).norm() < 1e-14);
      for (std::size_t b = a + 1; b < s.basis.size(); ++b)
        CHECK(std::abs(hs_inner(s.basis[a], s.basis[b])) < 1e-12);
    }
    CHECK(subspace_membership(s, s.unit()).in_span);
  }
}

TEST_CASE("system kinds parse and print") {
  CHECK(parse_system_kind("Mn") == SystemKind::Mn);
  CHECK(parse_system_kind("Un") == SystemKind::Un);
  CHECK(to_string(SystemKind::Vn) == "Vn");
  CHECK_THROWS_AS(parse_system_kind("Zn"), Error);
  CHECK_THROWS_AS(make_system(SystemKind::Mn, 0), Error);
}

TEST_CASE("span membership separates banded from full") {
  MatOpSys tn = make_system(SystemKind::Tn, 3);
  CHECK(subspace_membership(tn, tn.basis[2]).in_span);
  Mat corner = Mat::Zero(3, 3);
  corner(0, 2) = corner(2, 0) = 1.0;  // outside the band
  SpanCheck sc = subspace_membership(tn, corner);
  CHECK_FALSE(sc.in_span);
  CHECK(sc.residual > 0.5);
}

TEST_CASE("block coefficients recover planted blocks") {
  Rng rng(5);
  MatOpSys en = make_system(SystemKind::En, 3);
  const Eigen::Index p = 2;
  std::vector<Mat> planted;
  Mat x = Mat::Zero(en.dim * p, en.dim * p);
  for (const Mat& b : en.basis) {
    Mat blk = rng.gaussian_matrix(p, p);
    planted.push_back(blk);
    x += kron(b, blk);
  }
  BlockCoeffs bc = block_coefficients(en, x, p);
  REQUIRE(bc.blocks.size() == planted.size());
  CHECK(bc.residual < 1e-10);
  for (std::size_t m = 0; m < planted.size(); ++m)
    CHECK((bc.blocks[m] - planted[m]).norm() < 1e-10);

  // Perturbing off the span shows up in the residual: an unequal diagonal
  // leaves M_p(E_3), whose diagonal blocks all agree.
  Mat off = Mat::Zero(en.dim * p, en.dim * p);
  off.block(0, 0, p, p) = Mat::Identity(p, p);
  BlockCoeffs bad = block_coefficients(en, x + off, p);
  CHECK(bad.residual > 0.5);
}

TEST_CASE("block elements assemble and split consistently") {
  Rng rng(6);
  MatOpSys un = make_system(SystemKind::Un, 3);
  const Eigen::Index p = 2;
  Mat x = Mat::Zero(un.dim * p, un.dim * p);
  for (const Mat& b : un.basis) x += kron(b, rng.gaussian_matrix(p, p));
  BlockElement e = BlockElement::from_ambient(un, x, p);
  CHECK((e.assemble() - x).norm() < 1e-10);

  Mat h = x + x.adjoint();
  BlockElement he = BlockElement::from_ambient(un, h, p);
  CHECK(he.is_hermitian(1e-10));

  Mat corner = Mat::Zero(un.dim * p, un.dim * p);
  corner(0, (un.dim - 1) * p) = 1.0;
  CHECK_THROWS_AS(BlockElement::from_ambient(un, x + corner, p), Error);
}

TEST_CASE("ambient cone membership certifies both directions") {
  Rng rng(8);
  MatOpSys tn = make_system(SystemKind::Tn, 3);
  const Eigen::Index p = 2;
  Mat g = Mat::Zero(tn.dim * p, tn.dim * p);
  for (const Mat& b : tn.basis) {
    Mat blk = rng.gaussian_matrix(p, p);
    g += kron(b, blk + blk.adjoint());
  }
  const double lo = herm_eigenvalues(g).minCoeff();

  // Shift into the cone: the unit is in every span.
  Mat inside = g + (1.0 - lo) * Mat::Identity(g.rows(), g.cols());
  ConeCertificate cin = ambient_cone_membership(BlockElement::from_ambient(tn, inside, p), 1e-9);
  CHECK(cin.status == CertStatus::Feasible);
  REQUIRE(cin.witness.has_value());
  CHECK((*cin.witness - HermMat::mirror(inside).raw()).norm() < 1e-9);

  // Shift out of the cone: separator is a unit rank-one eigenprojector.
  Mat outside = g - (1.0 + std::abs(lo)) * Mat::Identity(g.rows(), g.cols());
  ConeCertificate cout = ambient_cone_membership(BlockElement::from_ambient(tn, outside, p), 1e-9);
  CHECK(cout.status == CertStatus::Infeasible);
  REQUIRE(cout.separator.has_value());
  CHECK(std::abs(cout.separator->norm() - 1.0) < 1e-9);
  CHECK(hs_inner(*cout.separator, HermMat::mirror(outside).raw()) < 0);
}

TEST_CASE("hermitian level basis spans p^2 directions") {
  const std::vector<Mat> hb = herm_basis(3);
  CHECK(hb.size() == 9);
  for (std::size_t a = 0; a < hb.size(); ++a) {
    CHECK((hb[a] - hb[a].adjoint()).norm() < 1e-14);
    for (std::size_t b = a + 1; b < hb.size(); ++b)
      CHECK(std::abs(hs_inner(hb[a], hb[b])) < 1e-14);
  }
}
