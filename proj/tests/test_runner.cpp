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

#include <string>

#include "osq/json_io.hpp"
#include "osq/linalg.hpp"
#include "osq/rng.hpp"
#include "osq/runner.hpp"

using namespace osq;

namespace {

Json psd_input_3() {
  Mat m(3, 3);
  m << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  return matrix_to_json(m);
}

}  // namespace

TEST_CASE("reports embed tool, config, and result") {
  Json cfg{{"op", "membership"}, {"system", "Mn"}, {"n", 3}, {"input", psd_input_3()}};
  RunResult r = run_config(cfg);
  CHECK(r.report.at("tool").at("name") == "osq");
  CHECK(r.report.at("tool").contains("version"));
  CHECK(r.report.at("config").at("op") == "membership");
  CHECK(r.report.at("config").at("cone") == "ambient");  // default echoed back
  CHECK(r.report.at("result").at("status") == "Feasible");
  // Timestamps live in the sidecar, never in the report.
  CHECK(r.meta.contains("timestamp_utc"));
  CHECK(r.report.dump().find("timestamp") == std::string::npos);
  REQUIRE(r.certificates.size() == 1);
  CHECK(r.certificates[0].first == "certificate");
}

TEST_CASE("identical configs produce identical report bytes") {
  Json cfg{{"op", "membership"}, {"system", "Tn"}, {"n", 3},
           {"cone", "d"},        {"input", psd_input_3()}};
  RunResult a = run_config(cfg);
  RunResult b = run_config(cfg);
  CHECK(dump_report(a.report) == dump_report(b.report));

  Json gap{{"op", "gap-search"}, {"mode", "ee"}, {"n", 2}, {"p", 1}, {"samples", 3}, {"seed", 5}};
  RunResult c = run_config(gap);
  RunResult d = run_config(gap);
  CHECK(dump_report(c.report) == dump_report(d.report));
}

TEST_CASE("norm op reproduces the off-diagonal unit value") {
  Json cfg{{"op", "norm"}, {"system", "Mn"}, {"n", 3}, {"element", "e12"}};
  RunResult r = run_config(cfg);
  const double v = r.report.at("result").at("norm").get<double>();
  CHECK(std::abs(v - 1.0 / 3.0) <= 1e-6);
  CHECK(r.report.at("result").at("converged").get<bool>());
}

TEST_CASE("invalid configs raise input errors") {
  auto code_of = [](const Json& cfg) {
    try {
      run_config(cfg);
    } catch (const Error& e) {
      return exit_code_for(e.code());
    }
    return 0;
  };
  CHECK(code_of(Json{{"op", "unknown-op"}}) == 2);
  CHECK(code_of(Json{{"op", "norm"}}) == 2);                                      // missing fields
  CHECK(code_of(Json{{"op", "norm"}, {"system", "En"}, {"n", 3}, {"element", "e12"}}) == 2);
  CHECK(code_of(Json{{"op", "norm"}, {"system", "Mn"}, {"n", 3}, {"element", "e11"}}) == 2);
  CHECK(code_of(Json{{"op", "membership"}, {"system", "Mn"}, {"n", 3},
                     {"cone", "q"}, {"input", psd_input_3()}}) == 2);
  CHECK(code_of(Json::array()) == 2);
}

TEST_CASE("infeasible completions surface as data errors naming the block") {
  Mat e = Mat::Zero(3, 3);
  e.diagonal().setConstant(1.0);
  e(0, 1) = e(1, 0) = 3.0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(3, 3);
  mask.setConstant(false);
  mask.diagonal().setConstant(true);
  mask(0, 1) = mask(1, 0) = true;
  PartialBandedMat p = PartialBandedMat::make(3, 1, 1, e, mask);

  Json cfg{{"op", "complete"}, {"input", partial_to_json(p)}};
  try {
    run_config(cfg);
    FAIL("expected a domain error");
  } catch (const Error& err) {
    CHECK(exit_code_for(err.code()) == 2);
    CHECK(std::string(err.what()).find("block at 0") != std::string::npos);
  }

  // The feasible sibling completes and reports the witness spectrum.
  e(0, 1) = e(1, 0) = 0.5;
  PartialBandedMat ok = PartialBandedMat::make(3, 1, 1, e, mask);
  RunResult r = run_config(Json{{"op", "complete"}, {"input", partial_to_json(ok)}});
  CHECK(r.report.at("result").at("min_eig").get<double>() >= -1e-9);
  Mat done = matrix_from_json(r.report.at("result").at("completed"));
  CHECK(std::abs(done(0, 1) - Cplx(0.5, 0.0)) == 0.0);
}

TEST_CASE("dual op evaluates value tables") {
  // Normalized trace on M2: values 1/2, 1/2, 0, 0 against the fixed basis.
  Json vals = Json::array();
  Mat half = 0.5 * Mat::Identity(1, 1);
  vals.push_back(matrix_to_json(half));
  vals.push_back(matrix_to_json(half));
  vals.push_back(matrix_to_json(Mat::Zero(1, 1)));
  vals.push_back(matrix_to_json(Mat::Zero(1, 1)));
  Json cfg{{"op", "dual"}, {"system", "Mn"}, {"n", 2}, {"values", vals}, {"quotient", true}};
  RunResult r = run_config(cfg);
  CHECK(r.report.at("result").at("status") == "Feasible");
}

TEST_CASE("coi op returns the verification report") {
  Json cfg{{"op", "coi-verify"}, {"map", "wd-en:2"}, {"levels", 1}, {"samples", 5}, {"seed", 3}};
  RunResult r = run_config(cfg);
  CHECK(r.report.at("result").at("pass").get<bool>());
  CHECK(r.report.at("config").at("tol").get<double>() == 1e-8);  // default echoed
}

TEST_CASE("lift ops emit replayable certificates") {
  Json cfg{{"op", "pstar"}, {"T", "Mn:2"}, {"n", 2}, {"p", 1}, {"samples", 2}, {"seed", 7}};
  RunResult r = run_config(cfg);
  CHECK(r.report.at("result").at("counterexample_candidates").get<long>() == 0);
  CHECK(r.report.at("config").at("eps_grid").is_array());
  CHECK(!r.certificates.empty());
  CHECK(r.certificates[0].first.rfind("instance-000-eps-", 0) == 0);
}

TEST_CASE("factorize op returns the factor and its lift") {
  Rng rng(61);
  const int n = 2;
  Mat y = rng.gaussian_matrix(n, n);
  Mat full = y * y.adjoint();
  Json blocks = Json::array();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) blocks.push_back(matrix_to_json(full.block(i, j, 1, 1)));
  Json cfg{{"op", "factorize"}, {"n", n}, {"p", 1}, {"input", Json{{"blocks", blocks}}}};
  RunResult r = run_config(cfg);
  CHECK(r.report.at("result").at("status") == "Feasible");
  CHECK(r.report.at("result").at("residual").get<double>() <= 1e-8);
  CHECK(r.report.at("result").contains("factor"));
}
