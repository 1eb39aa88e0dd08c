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

#include "osq/duality.hpp"
#include "osq/rng.hpp"

using namespace osq;

namespace {

// Random value table for a dual element at the given level.
DualElement random_dual(const MatOpSys& sys, Eigen::Index level, Rng& rng) {
  DualElement g;
  g.sys = sys;
  g.level = level;
  for (std::size_t m = 0; m < sys.basis.size(); ++m) g.vals.push_back(rng.gaussian_hermitian(level));
  return g;
}

// Zeroes the pairing against the trace-zero diagonal kernel: replaces every
// diagonal value by the average, so g(E_ii) agree for all i.
void annihilate_diagonal(DualElement& g, int n) {
  Mat avg = Mat::Zero(g.level, g.level);
  for (int i = 0; i < n; ++i) avg += g.vals[static_cast<std::size_t>(i)];
  avg /= static_cast<double>(n);
  for (int i = 0; i < n; ++i) g.vals[static_cast<std::size_t>(i)] = avg;
}

}  // namespace

TEST_CASE("the normalized trace is a state") {
  for (int n = 2; n <= 3; ++n) {
    DualElement tr = trace_state(make_system(SystemKind::Mn, n));
    ConeCertificate c = dual_cone_membership(tr, 1e-9);
    CHECK(c.status == CertStatus::Feasible);
  }
}

TEST_CASE("transpose values are positive but not completely positive") {
  DualElement t = transpose_pattern(2);
  ConeCertificate c = dual_cone_membership(t, 1e-9);
  CHECK(c.status == CertStatus::Infeasible);
  REQUIRE(c.separator.has_value());
}

TEST_CASE("dual members pair nonnegatively with cone members") {
  Rng rng(13);
  MatOpSys tn = make_system(SystemKind::Tn, 3);
  int feasible_seen = 0;
  for (int rep = 0; rep < 12 && feasible_seen < 5; ++rep) {
    DualElement g = random_dual(tn, 1, rng);
    // Pull toward the trace state so a fair share lands in the dual cone.
    DualElement tr = trace_state(tn);
    for (std::size_t m = 0; m < g.vals.size(); ++m) g.vals[m] = 0.25 * g.vals[m] + tr.vals[m];
    ConeCertificate c = dual_cone_membership(g, 1e-9);
    if (c.status != CertStatus::Feasible) continue;
    ++feasible_seen;
    for (int probe = 0; probe < 40; ++probe) {
      Mat h = Mat::Zero(tn.dim, tn.dim);
      for (const Mat& b : tn.basis) h += rng.gaussian() * b;
      const double lo = herm_eigenvalues(h).minCoeff();
      Mat member = h - (lo - 0.1) * Mat::Identity(tn.dim, tn.dim);
      Mat val = g.value_of(member);
      CHECK(herm_eigenvalues(HermMat::mirror(val).raw()).minCoeff() > -1e-7);
    }
  }
  CHECK(feasible_seen >= 1);
}

TEST_CASE("quotient dual requires the kernel annihilator") {
  Rng rng(19);
  MatOpSys mn = make_system(SystemKind::Mn, 3);
  DualElement g = random_dual(mn, 1, rng);
  g.vals[0](0, 0) += 10.0;  // unbalanced diagonal pairs nontrivially with the kernel
  CHECK(diagonal_kernel_residual(g) > 1e-6);
  CHECK_THROWS_AS(quotient_dual_cone_membership(g, 1e-9), Error);

  annihilate_diagonal(g, 3);
  CHECK(diagonal_kernel_residual(g) < 1e-12);
  ConeCertificate c = quotient_dual_cone_membership(g, 1e-9);
  CHECK(c.status != CertStatus::Undecided);  // balanced tables are decidable
}

TEST_CASE("dual of the full quotient lands in the equal-diagonal system") {
  // The normalized trace maps to the equal-diagonal unit at scale 1/n.
  const int n = 3;
  DualElement tr = trace_state(make_system(SystemKind::Mn, n));
  Mat x = dual_iso_wd_to_en(tr);
  CHECK((x - Mat::Identity(n, n) / static_cast<double>(n)).norm() < 1e-14);

  // Round trip at level 2 on annihilating tables.
  Rng rng(29);
  MatOpSys mn = make_system(SystemKind::Mn, n);
  for (int rep = 0; rep < 5; ++rep) {
    DualElement g = random_dual(mn, 2, rng);
    annihilate_diagonal(g, n);
    Mat img = dual_iso_wd_to_en(g);
    DualElement back = dual_iso_wd_to_en_inverse(img, n, 2);
    REQUIRE(back.vals.size() == g.vals.size());
    double worst = 0.0;
    for (std::size_t m = 0; m < g.vals.size(); ++m)
      worst = std::max(worst, (back.vals[m] - g.vals[m]).norm());
    CHECK(worst <= 1e-12);
    // And the other orientation.
    Mat img2 = dual_iso_wd_to_en(back);
    CHECK((img2 - img).norm() <= 1e-12);
  }
}

TEST_CASE("dual of the tridiagonal system lands in the linked-block system") {
  const int n = 3;
  Rng rng(31);
  MatOpSys tn = make_system(SystemKind::Tn, n);
  for (int rep = 0; rep < 5; ++rep) {
    DualElement g = random_dual(tn, 2, rng);
    Mat img = dual_iso_tn(g);
    DualElement back = dual_iso_tn_inverse(img, n, 2);
    double worst = 0.0;
    for (std::size_t m = 0; m < g.vals.size(); ++m)
      worst = std::max(worst, (back.vals[m] - g.vals[m]).norm());
    CHECK(worst <= 1e-12);
  }

  // Corner layout: block k holds values at E_kk, E_{k,k+1}, E_{k+1,k+1}.
  DualElement d = random_dual(tn, 1, rng);
  Mat img = dual_iso_tn(d);
  CHECK(std::abs(img(0, 0) - d.vals[0](0, 0)) < 1e-14);
  CHECK(std::abs(img(1, 1) - d.vals[1](0, 0)) < 1e-14);
  CHECK(std::abs(img(2, 2) - d.vals[1](0, 0)) < 1e-14);  // linked chain entry
  CHECK(std::abs(img(3, 3) - d.vals[2](0, 0)) < 1e-14);
}

TEST_CASE("dual of the tridiagonal quotient lands in the equal-block system") {
  const int n = 3;
  Rng rng(37);
  MatOpSys tn = make_system(SystemKind::Tn, n);

  // The uniform diagonal state maps to a positive element.
  DualElement s = random_dual(tn, 1, rng);
  for (int i = 0; i < n; ++i) s.vals[static_cast<std::size_t>(i)] = Mat::Identity(1, 1) / 3.0;
  for (std::size_t m = static_cast<std::size_t>(n); m < s.vals.size(); ++m)
    s.vals[m] = Mat::Zero(1, 1);
  Mat img = dual_iso_sn(s);
  CHECK(herm_eigenvalues(img).minCoeff() > 0);

  for (int rep = 0; rep < 5; ++rep) {
    DualElement g = random_dual(tn, 2, rng);
    annihilate_diagonal(g, n);
    Mat im1 = dual_iso_sn(g);
    DualElement back = dual_iso_sn_inverse(im1, n, 2);
    double worst = 0.0;
    for (std::size_t m = 0; m < g.vals.size(); ++m)
      worst = std::max(worst, (back.vals[m] - g.vals[m]).norm());
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("coi map names parse and print") {
  CoiMapSpec a = parse_coi_map("wd-en:3");
  CHECK(a.kind == CoiMapKind::WdToEn);
  CHECK(a.n == 3);
  CHECK(coi_map_name(a) == "wd-en:3");
  CHECK(parse_coi_map("identity:En:2").kind == CoiMapKind::Identity);
  CHECK(parse_coi_map("transpose:2").kind == CoiMapKind::Transpose);
  CHECK(parse_coi_map("tnd-vn:4").kind == CoiMapKind::TndToVn);
  CHECK(parse_coi_map("snd-un:2").kind == CoiMapKind::SndToUn);
  CHECK(parse_coi_map("en-mn:2").kind == CoiMapKind::EnIntoMn);
  CHECK_THROWS_AS(parse_coi_map("bogus:2"), Error);
}

TEST_CASE("identity maps verify and the transpose fails completeness") {
  CoiReport ok = verify_coi(parse_coi_map("identity:En:2"), 2, 20, 3, 1e-8);
  CHECK(ok.pass);
  CHECK(ok.members_checked > 0);
  CHECK(ok.nonmembers_checked > 0);

  // The transpose is an order isomorphism at level 1 only.
  CoiReport lvl1 = verify_coi(parse_coi_map("transpose:2"), 1, 20, 3, 1e-8);
  CHECK(lvl1.pass);
  CoiReport lvl2 = verify_coi(parse_coi_map("transpose:2"), 2, 40, 3, 1e-8);
  CHECK_FALSE(lvl2.pass);
  // The failure report pins the level and carries the offending element.
  REQUIRE(!lvl2.failures.empty());
  CHECK(lvl2.failures[0].level == 2);
}

TEST_CASE("dual isomorphisms verify as complete order isomorphisms") {
  CoiReport wd = verify_coi(parse_coi_map("wd-en:2"), 2, 15, 5, 1e-8);
  CHECK(wd.pass);
  CoiReport tnd = verify_coi(parse_coi_map("tnd-vn:2"), 2, 15, 5, 1e-8);
  CHECK(tnd.pass);
  CoiReport snd = verify_coi(parse_coi_map("snd-un:2"), 2, 15, 5, 1e-8);
  CHECK(snd.pass);
  CoiReport emb = verify_coi(parse_coi_map("en-mn:2"), 2, 15, 5, 1e-8);
  CHECK(emb.pass);
}

TEST_CASE("coi reports serialize their tallies") {
  CoiReport r = verify_coi(parse_coi_map("identity:Un:2"), 1, 10, 7, 1e-8);
  Json j = r.to_json();
  CHECK(j.at("map") == "identity:Un:2");
  CHECK(j.at("pass") == r.pass);
  CHECK(j.at("members_checked").get<long>() == r.members_checked);
}
