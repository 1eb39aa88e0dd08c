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

// Command-line front end. Builds one JSON config per subcommand and hands it
// to the shared library through the C interface; everything mathematical
// happens behind osq_run.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "osq/osq.h"

namespace {

using Json = nlohmann::json;

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return Json::parse(ss.str());
}

void write_text_file(const std::filesystem::path& path, const char* text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  out << text;
}

struct Ctx {
  Json config;
  std::string out_dir;
};

int emit(const Ctx& ctx) {
  osq_result* r = osq_run(ctx.config.dump().c_str());
  if (r == nullptr) {
    std::cerr << "error: out of memory\n";
    return 4;
  }
  const int code = osq_result_code(r);
  if (code != OSQ_OK) {
    const char* msg = osq_result_error(r);
    std::cerr << "error: " << (msg != nullptr ? msg : "unknown failure") << "\n";
    osq_result_free(r);
    return code;
  }
  if (ctx.out_dir.empty()) {
    std::cout << osq_result_report(r);
  } else {
    namespace fs = std::filesystem;
    const fs::path dir(ctx.out_dir);
    fs::create_directories(dir / "certificates");
    write_text_file(dir / "report.json", osq_result_report(r));
    write_text_file(dir / "meta.json", osq_result_meta(r));
    for (size_t i = 0; i < osq_result_cert_count(r); ++i) {
      const std::string name = osq_result_cert_name(r, i);
      write_text_file(dir / "certificates" / (name + ".json"), osq_result_cert_json(r, i));
    }
    std::cerr << "report: " << (dir / "report.json").string() << "\n";
  }
  osq_result_free(r);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified cone computations for matrix operator systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", osq_version());

  Ctx ctx;

  // norm
  std::string nm_system = "Mn", nm_element, nm_input;
  int nm_n = 0;
  double nm_tol = 1e-8;
  CLI::App* nm = app.add_subcommand("norm", "quotient norm with certified bounds");
  nm->add_option("--system", nm_system, "parent system: Mn or Tn")->capture_default_str();
  nm->add_option("--n", nm_n, "parent size")->required();
  nm->add_option("--element", nm_element, "unit element name such as e12 (one-based)");
  nm->add_option("--input", nm_input, "matrix JSON file with a representative");
  nm->add_option("--out", ctx.out_dir, "output directory");
  nm->add_option("--tol", nm_tol, "bracket width target")->capture_default_str();
  nm->callback([&] {
    ctx.config = Json{{"op", "norm"}, {"system", nm_system}, {"n", nm_n}, {"tol", nm_tol}};
    if (!nm_element.empty()) ctx.config["element"] = nm_element;
    if (!nm_input.empty()) ctx.config["input"] = read_json_file(nm_input);
  });

  // membership
  std::string mb_system = "Mn", mb_cone = "ambient", mb_input;
  int mb_n = 0;
  double mb_tol = 1e-8, mb_eps = 1e-6;
  CLI::App* mb = app.add_subcommand("membership", "cone membership with certificate");
  mb->add_option("--system", mb_system, "system: Mn, Tn, En, Un, Vn")->capture_default_str();
  mb->add_option("--n", mb_n, "system size")->required();
  mb->add_option("--cone", mb_cone, "ambient, d, or c")->capture_default_str();
  mb->add_option("--input", mb_input, "matrix JSON file with the element")->required();
  mb->add_option("--eps", mb_eps, "smoothing for the c cone")->capture_default_str();
  mb->add_option("--out", ctx.out_dir, "output directory");
  mb->add_option("--tol", mb_tol, "certificate tolerance")->capture_default_str();
  mb->callback([&] {
    ctx.config = Json{{"op", "membership"}, {"system", mb_system}, {"n", mb_n},
                      {"cone", mb_cone},    {"tol", mb_tol},       {"eps", mb_eps},
                      {"input", read_json_file(mb_input)}};
  });

  // dual
  std::string du_system = "Mn", du_input;
  int du_n = 0;
  bool du_quotient = false;
  double du_tol = 1e-9;
  CLI::App* du = app.add_subcommand("dual", "dual cone membership of a value table");
  du->add_option("--system", du_system, "system: Mn, Tn, En, Un, Vn")->capture_default_str();
  du->add_option("--n", du_n, "system size")->required();
  du->add_option("--input", du_input, "JSON file: value matrices per basis element")->required();
  du->add_flag("--quotient", du_quotient, "test against the quotient dual (Mn, Tn parents)");
  du->add_option("--out", ctx.out_dir, "output directory");
  du->add_option("--tol", du_tol, "certificate tolerance")->capture_default_str();
  du->callback([&] {
    Json v = read_json_file(du_input);
    if (v.is_object() && v.contains("values")) v = v.at("values");
    ctx.config = Json{{"op", "dual"},     {"system", du_system},      {"n", du_n},
                      {"values", v},      {"quotient", du_quotient},  {"tol", du_tol}};
  });

  // coi-verify
  std::string cv_map;
  int cv_levels = 2;
  long cv_samples = 50;
  std::uint64_t cv_seed = 1;
  double cv_tol = 1e-8;
  CLI::App* cv = app.add_subcommand("coi-verify", "sampled complete order isomorphism check");
  cv->add_option("--map", cv_map, "map name, e.g. wd-en:3, tnd-vn:3, snd-un:3, transpose:2")
      ->required();
  cv->add_option("--levels", cv_levels, "check levels 1..L")->capture_default_str();
  cv->add_option("--samples", cv_samples, "samples per direction")->capture_default_str();
  cv->add_option("--seed", cv_seed, "rng seed")->capture_default_str();
  cv->add_option("--out", ctx.out_dir, "output directory");
  cv->add_option("--tol", cv_tol, "margin tolerance")->capture_default_str();
  cv->callback([&] {
    ctx.config = Json{{"op", "coi-verify"}, {"map", cv_map},   {"levels", cv_levels},
                      {"samples", cv_samples}, {"seed", cv_seed}, {"tol", cv_tol}};
  });

  // complete
  std::string cp_input;
  double cp_tol = 1e-9;
  CLI::App* cp = app.add_subcommand("complete", "PSD completion of a banded partial matrix");
  cp->add_option("--input", cp_input, "partial matrix JSON file")->required();
  cp->add_option("--out", ctx.out_dir, "output directory");
  cp->add_option("--tol", cp_tol, "PSD tolerance")->capture_default_str();
  cp->callback([&] {
    ctx.config = Json{{"op", "complete"}, {"input", read_json_file(cp_input)}, {"tol", cp_tol}};
  });

  // pstar / ps
  auto add_lift = [&](const char* name, const char* help) {
    struct LiftFlags {
      std::string t;
      int n = 2;
      int p = 1;
      long samples = 50;
      std::uint64_t seed = 1;
      std::vector<double> eps;
    };
    auto flags = std::make_shared<LiftFlags>();
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--T", flags->t, "constraint system descriptor, e.g. Mn:2")->required();
    sub->add_option("--n", flags->n, "quotient size")->capture_default_str();
    sub->add_option("--p", flags->p, "level")->capture_default_str();
    sub->add_option("--samples", flags->samples, "instances")->capture_default_str();
    sub->add_option("--seed", flags->seed, "rng seed")->capture_default_str();
    sub->add_option("--eps", flags->eps, "eps grid (default 1e-2 1e-4 1e-6)");
    sub->add_option("--out", ctx.out_dir, "output directory");
    sub->callback([&, flags, name] {
      ctx.config = Json{{"op", name},       {"T", flags->t},
                        {"n", flags->n},    {"p", flags->p},
                        {"samples", flags->samples}, {"seed", flags->seed}};
      if (!flags->eps.empty()) ctx.config["eps_grid"] = flags->eps;
    });
    return sub;
  };
  add_lift("pstar", "prescribed-lift experiment over Mn/Jn tensor a constraint system");
  add_lift("ps", "prescribed-lift experiment over the tridiagonal quotient");

  // gap-search
  std::string gs_mode;
  int gs_n = 2, gs_p = 1;
  long gs_samples = 10;
  std::uint64_t gs_seed = 1;
  CLI::App* gs = app.add_subcommand("gap-search", "min/max tensor cone comparison experiment");
  gs->add_option("--mode", gs_mode, "ee, ww, or uu-vv")->required();
  gs->add_option("--n", gs_n, "system size")->capture_default_str();
  gs->add_option("--p", gs_p, "level")->capture_default_str();
  gs->add_option("--samples", gs_samples, "instances")->capture_default_str();
  gs->add_option("--seed", gs_seed, "rng seed")->capture_default_str();
  gs->add_option("--out", ctx.out_dir, "output directory");
  gs->callback([&] {
    ctx.config = Json{{"op", "gap-search"}, {"mode", gs_mode},       {"n", gs_n},
                      {"p", gs_p},          {"samples", gs_samples}, {"seed", gs_seed}};
  });

  // factorize
  std::string fz_input;
  int fz_n = 2, fz_p = 1;
  double fz_tol = 1e-8;
  CLI::App* fz = app.add_subcommand("factorize", "positive element factorization through the lift");
  fz->add_option("--input", fz_input, "JSON file: {\"blocks\": [n*n matrices]}")->required();
  fz->add_option("--n", fz_n, "block grid size")->capture_default_str();
  fz->add_option("--p", fz_p, "block level")->capture_default_str();
  fz->add_option("--out", ctx.out_dir, "output directory");
  fz->add_option("--tol", fz_tol, "lift tolerance")->capture_default_str();
  fz->callback([&] {
    Json in = read_json_file(fz_input);
    if (in.is_array()) in = Json{{"blocks", in}};
    ctx.config = Json{{"op", "factorize"}, {"n", fz_n}, {"p", fz_p}, {"tol", fz_tol},
                      {"input", in}};
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    return emit(ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
