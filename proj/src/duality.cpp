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

#include "osq/duality.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "osq/error.hpp"
#include "osq/json_io.hpp"

namespace osq {

void DualElement::validate() const {
  if (level < 1) fail_invalid("dual element level must be >= 1");
  if (vals.size() != sys.basis.size())
    fail_invalid("dual element must record one value per basis element");
  for (const Mat& v : vals) {
    if (v.rows() != level || v.cols() != level)
      fail_invalid("dual element value has wrong dimension");
    if ((v - v.adjoint()).norm() > 1e-12 * std::max(1.0, v.norm()))
      fail_invalid("dual element violates hermitian symmetry (g_ji != g_ij^*)");
  }
}

Mat DualElement::value_of(const Mat& x) const {
  SpanCheck sc = subspace_membership(sys, x);
  if (!sc.in_span) fail_invalid("value_of: argument leaves the system span");
  Mat out = Mat::Zero(level, level);
  for (std::size_t m = 0; m < vals.size(); ++m)
    out += sc.coeffs(static_cast<Eigen::Index>(m)) * vals[m];
  return out;
}

DualElement trace_state(const MatOpSys& sys) {
  DualElement g;
  g.sys = sys;
  g.level = 1;
  for (const Mat& b : sys.basis) {
    Mat v(1, 1);
    v(0, 0) = b.trace() / static_cast<double>(sys.dim);
    g.vals.push_back(v);
  }
  return g;
}

DualElement zero_functional(const MatOpSys& sys, Eigen::Index level) {
  DualElement g;
  g.sys = sys;
  g.level = level;
  g.vals.assign(sys.basis.size(), Mat::Zero(level, level));
  return g;
}

DualElement transpose_pattern(int n) {
  MatOpSys sys = make_system(SystemKind::Mn, n);
  DualElement g;
  g.sys = sys;
  g.level = sys.dim;
  for (const Mat& b : sys.basis) g.vals.push_back(b.transpose());
  return g;
}

namespace {

// Affine realization of the Choi feasibility problem for one (system, level):
// the constraint data depends only on the pair, so one builder serves many
// value tables.
class ChoiProblemBuilder {
 public:
  ChoiProblemBuilder(const MatOpSys& sys, Eigen::Index level) : sys_(sys), level_(level) {
    const Eigen::Index d = sys.dim, k = level;
    const auto nb = static_cast<Eigen::Index>(sys.basis.size());
    cd_ = d * k;
    hb_ = herm_basis(cd_);
    fb_ = herm_basis(k);
    const auto cols = static_cast<Eigen::Index>(hb_.size());
    const Eigen::Index rows = nb * k * k;
    a_.resize(rows, cols);
    for (Eigen::Index u = 0; u < cols; ++u) {
      for (Eigen::Index m = 0; m < nb; ++m) {
        Mat lm = pairing(sys.basis[static_cast<std::size_t>(m)], hb_[static_cast<std::size_t>(u)]);
        for (Eigen::Index t = 0; t < k * k; ++t)
          a_(m * k * k + t, u) = hs_inner(fb_[static_cast<std::size_t>(t)], lm);
      }
    }
    svd_.compute(a_, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Eigen::Index rank = [&] {
      const auto& s = svd_.singularValues();
      const double cut = 1e-10 * std::max(1.0, s.size() ? s(0) : 0.0);
      Eigen::Index r = 0;
      while (r < s.size() && s(r) > cut) ++r;
      return r;
    }();
    for (Eigen::Index c = rank; c < cols; ++c) {
      Mat dir = Mat::Zero(cd_, cd_);
      for (Eigen::Index u = 0; u < cols; ++u)
        dir += svd_.matrixV()(u, c) * hb_[static_cast<std::size_t>(u)];
      null_dirs_.push_back(HermMat::mirror(dir).raw());
    }
    rank_ = rank;
  }

  // L_m(C) = sum_rs (B_m)_rs C.block(r,s): the induced map's value on B_m.
  Mat pairing(const Mat& b, const Mat& c) const {
    const Eigen::Index k = level_;
    Mat out = Mat::Zero(k, k);
    for (Eigen::Index r = 0; r < sys_.dim; ++r)
      for (Eigen::Index s = 0; s < sys_.dim; ++s) {
        Cplx w = b(r, s);
        if (w != Cplx(0.0, 0.0)) out += w * c.block(r * k, s * k, k, k);
      }
    return out;
  }

  AffinePsdProblem build(const std::vector<Mat>& vals) const {
    const Eigen::Index k = level_;
    const auto nb = static_cast<Eigen::Index>(sys_.basis.size());
    Eigen::VectorXd b(nb * k * k);
    for (Eigen::Index m = 0; m < nb; ++m)
      for (Eigen::Index t = 0; t < k * k; ++t)
        b(m * k * k + t) =
            hs_inner(fb_[static_cast<std::size_t>(t)], vals[static_cast<std::size_t>(m)]);
    Eigen::VectorXd z0 = svd_.solve(b);
    if ((a_ * z0 - b).norm() > 1e-9 * std::max(1.0, b.norm()))
      throw Error(ErrorCode::Internal, "choi constraint system unsolvable");
    Mat c0 = Mat::Zero(cd_, cd_);
    for (Eigen::Index u = 0; u < z0.size(); ++u)
      c0 += z0(u) * hb_[static_cast<std::size_t>(u)];
    AffinePsdProblem prob;
    prob.dim = cd_;
    prob.offset = HermMat::mirror(c0).raw();
    prob.basis = null_dirs_;
    return prob;
  }

 private:
  MatOpSys sys_;
  Eigen::Index level_;
  Eigen::Index cd_ = 0;
  Eigen::Index rank_ = 0;
  std::vector<Mat> hb_, fb_;
  Eigen::MatrixXd a_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
  std::vector<Mat> null_dirs_;
};

}  // namespace

ConeCertificate dual_cone_membership(const DualElement& g, double tol, const SolveOptions& opt) {
  if (!(tol > 0)) fail_invalid("tol must be > 0");
  g.validate();
  ChoiProblemBuilder builder(g.sys, g.level);
  SolveOptions o = opt;
  o.tol = tol;
  return solve_feasibility(builder.build(g.vals), o);
}

double diagonal_kernel_residual(const DualElement& g) {
  g.validate();
  if (g.sys.kind != SystemKind::Mn && g.sys.kind != SystemKind::Tn)
    fail_domain("no trace-zero diagonal kernel in this parent");
  // Basis layout for Mn/Tn puts E_ii at indices 0..d-1.
  double res = 0.0;
  for (Eigen::Index i = 0; i + 1 < g.sys.dim; ++i)
    res = std::max(res, (g.vals[static_cast<std::size_t>(i)] -
                         g.vals[static_cast<std::size_t>(i + 1)])
                            .norm());
  return res;
}

namespace {

double table_scale(const DualElement& g) {
  double s = 1.0;
  for (const Mat& v : g.vals) s = std::max(s, v.norm());
  return s;
}

void require_annihilator(const DualElement& g) {
  if (diagonal_kernel_residual(g) > 1e-9 * table_scale(g))
    fail_domain("dual element does not annihilate the trace-zero diagonals");
}

}  // namespace

ConeCertificate quotient_dual_cone_membership(const DualElement& g, double tol,
                                              const SolveOptions& opt) {
  require_annihilator(g);
  return dual_cone_membership(g, tol, opt);
}

namespace {

// Index of sym(i,j) in the Mn basis (asym follows at +1).
Eigen::Index mn_sym_index(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  Eigen::Index off = 0;
  for (Eigen::Index a = 0; a < i; ++a) off += n - 1 - a;
  off += j - i - 1;
  return n + 2 * off;
}

// g(E_ij) and g(E_ji) for i < j from the sym/asym values.
std::pair<Mat, Mat> unit_values(const Mat& vsym, const Mat& vasym) {
  const Cplx im(0.0, 1.0);
  return {0.5 * (vsym - im * vasym), 0.5 * (vsym + im * vasym)};
}

}  // namespace

Mat dual_iso_wd_to_en(const DualElement& g) {
  g.validate();
  if (g.sys.kind != SystemKind::Mn) fail_invalid("dual_iso_wd_to_en: parent must be a full system");
  require_annihilator(g);
  const Eigen::Index n = g.sys.dim, p = g.level;
  Mat x = Mat::Zero(n * p, n * p);
  const Mat& d = g.vals[0];  // = g(unit)/n by annihilation
  for (Eigen::Index i = 0; i < n; ++i) x.block(i * p, i * p, p, p) = d;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::Index s = mn_sym_index(n, i, j);
      auto [eij, eji] = unit_values(g.vals[static_cast<std::size_t>(s)],
                                    g.vals[static_cast<std::size_t>(s + 1)]);
      x.block(i * p, j * p, p, p) = eij;
      x.block(j * p, i * p, p, p) = eji;
    }
  return x;
}

DualElement dual_iso_wd_to_en_inverse(const Mat& x, int n, Eigen::Index level) {
  MatOpSys en = make_system(SystemKind::En, n);
  BlockElement be = BlockElement::from_ambient(en, x, level);  // domain error off-span
  (void)be;
  MatOpSys mn = make_system(SystemKind::Mn, n);
  DualElement g;
  g.sys = mn;
  g.level = level;
  g.vals.assign(mn.basis.size(), Mat::Zero(level, level));
  const Eigen::Index p = level;
  const Mat d = x.block(0, 0, p, p);
  for (Eigen::Index i = 0; i < n; ++i) g.vals[static_cast<std::size_t>(i)] = d;
  const Cplx im(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::Index s = mn_sym_index(n, i, j);
      Mat eij = x.block(i * p, j * p, p, p);
      Mat eji = x.block(j * p, i * p, p, p);
      g.vals[static_cast<std::size_t>(s)] = eij + eji;
      g.vals[static_cast<std::size_t>(s + 1)] = im * (eij - eji);
    }
  return g;
}

namespace {

// Corner-block image shared by the T_n-dual isomorphisms: block k carries
// [[g(E_kk), g(E_{k,k+1})], [g(E_{k+1,k}), g(E_{k+1,k+1})]].
Mat corner_block_image(const DualElement& g) {
  const Eigen::Index n = g.sys.dim, p = g.level;
  const Eigen::Index d = 2 * (n - 1);
  Mat x = Mat::Zero(d * p, d * p);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const Eigen::Index r0 = 2 * k * p, r1 = (2 * k + 1) * p;
    x.block(r0, r0, p, p) = g.vals[static_cast<std::size_t>(k)];
    x.block(r1, r1, p, p) = g.vals[static_cast<std::size_t>(k + 1)];
    auto [lo, hi] = unit_values(g.vals[static_cast<std::size_t>(n + 2 * k)],
                                g.vals[static_cast<std::size_t>(n + 2 * k + 1)]);
    x.block(r0, r1, p, p) = lo;
    x.block(r1, r0, p, p) = hi;
  }
  return x;
}

DualElement corner_block_inverse(const Mat& x, int n, Eigen::Index level) {
  MatOpSys tn = make_system(SystemKind::Tn, n);
  DualElement g;
  g.sys = tn;
  g.level = level;
  g.vals.assign(tn.basis.size(), Mat::Zero(level, level));
  const Eigen::Index p = level;
  g.vals[0] = x.block(0, 0, p, p);
  for (Eigen::Index k = 1; k < n; ++k) {
    const Eigen::Index r = (2 * k - 1) * p;
    g.vals[static_cast<std::size_t>(k)] = x.block(r, r, p, p);
  }
  const Cplx im(0.0, 1.0);
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    Mat lo = x.block(2 * k * p, (2 * k + 1) * p, p, p);
    Mat hi = x.block((2 * k + 1) * p, 2 * k * p, p, p);
    g.vals[static_cast<std::size_t>(n + 2 * k)] = lo + hi;
    g.vals[static_cast<std::size_t>(n + 2 * k + 1)] = im * (lo - hi);
  }
  return g;
}

}  // namespace

Mat dual_iso_tn(const DualElement& g) {
  g.validate();
  if (g.sys.kind != SystemKind::Tn)
    fail_invalid("dual_iso_tn: parent must be a tridiagonal system");
  return corner_block_image(g);
}

DualElement dual_iso_tn_inverse(const Mat& x, int n, Eigen::Index level) {
  MatOpSys vn = make_system(SystemKind::Vn, n);
  BlockElement be = BlockElement::from_ambient(vn, x, level);  // domain error off-span
  (void)be;
  return corner_block_inverse(x, n, level);
}

Mat dual_iso_sn(const DualElement& g) {
  g.validate();
  if (g.sys.kind != SystemKind::Tn)
    fail_invalid("dual_iso_sn: parent must be a tridiagonal system");
  require_annihilator(g);
  return corner_block_image(g);
}

DualElement dual_iso_sn_inverse(const Mat& x, int n, Eigen::Index level) {
  MatOpSys un = make_system(SystemKind::Un, n);
  BlockElement be = BlockElement::from_ambient(un, x, level);  // domain error off-span
  (void)be;
  return corner_block_inverse(x, n, level);
}

CoiMapSpec parse_coi_map(const std::string& name) {
  std::vector<std::string> tok;
  std::stringstream ss(name);
  std::string part;
  while (std::getline(ss, part, ':')) tok.push_back(part);
  if (tok.empty()) fail_invalid("empty map name");
  CoiMapSpec spec;
  auto need_n = [&](std::size_t idx) {
    if (tok.size() <= idx) fail_invalid("map name missing size: " + name);
    spec.n = std::stoi(tok[idx]);
    if (spec.n < 2) fail_invalid("map size must be >= 2");
  };
  if (tok[0] == "identity") {
    spec.kind = CoiMapKind::Identity;
    if (tok.size() != 3) fail_invalid("identity map name is identity:<kind>:<n>");
    spec.domain_kind = parse_system_kind(tok[1]);
    need_n(2);
  } else if (tok[0] == "transpose") {
    spec.kind = CoiMapKind::Transpose;
    need_n(1);
  } else if (tok[0] == "wd-en") {
    spec.kind = CoiMapKind::WdToEn;
    need_n(1);
  } else if (tok[0] == "tnd-vn") {
    spec.kind = CoiMapKind::TndToVn;
    need_n(1);
  } else if (tok[0] == "snd-un") {
    spec.kind = CoiMapKind::SndToUn;
    need_n(1);
  } else if (tok[0] == "en-mn") {
    spec.kind = CoiMapKind::EnIntoMn;
    need_n(1);
  } else {
    fail_invalid("unknown map name: " + name);
  }
  return spec;
}

std::string coi_map_name(const CoiMapSpec& spec) {
  switch (spec.kind) {
    case CoiMapKind::Identity:
      return "identity:" + to_string(spec.domain_kind) + ":" + std::to_string(spec.n);
    case CoiMapKind::Transpose: return "transpose:" + std::to_string(spec.n);
    case CoiMapKind::WdToEn: return "wd-en:" + std::to_string(spec.n);
    case CoiMapKind::TndToVn: return "tnd-vn:" + std::to_string(spec.n);
    case CoiMapKind::SndToUn: return "snd-un:" + std::to_string(spec.n);
    case CoiMapKind::EnIntoMn: return "en-mn:" + std::to_string(spec.n);
  }
  return "?";
}

namespace {

// Carrier for verify_coi samples: concrete ambient matrix or dual value table.
struct CoiElem {
  Mat ambient;
  std::vector<Mat> table;
  bool is_table() const { return !table.empty(); }
};

Json elem_json(const CoiElem& e) {
  Json j;
  if (e.is_table()) {
    Json t = Json::array();
    for (const Mat& v : e.table) t.push_back(matrix_to_json(v));
    j["table"] = std::move(t);
  } else {
    j["ambient"] = matrix_to_json(e.ambient);
  }
  return j;
}

Eigen::VectorXd vec_carrier(const CoiElem& e) {
  std::vector<double> out;
  auto push = [&](const Mat& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(m(r, c).real());
        out.push_back(m(r, c).imag());
      }
  };
  if (e.is_table())
    for (const Mat& v : e.table) push(v);
  else
    push(e.ambient);
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

struct SideDesc {
  bool dual = false;
  bool quot = false;   // dual side restricted to the diagonal-kernel annihilator
  MatOpSys sys;        // concrete system, or the predual parent for dual sides
};

// Real basis of the side's hermitian span at level 1 (used for rank checks).
std::vector<CoiElem> side_basis(const SideDesc& sd) {
  std::vector<CoiElem> out;
  const auto nb = sd.sys.basis.size();
  if (!sd.dual) {
    for (const Mat& b : sd.sys.basis) out.push_back({b, {}});
    return out;
  }
  Mat one = Mat::Identity(1, 1);
  if (sd.quot) {
    CoiElem u;
    u.table.assign(nb, Mat::Zero(1, 1));
    for (Eigen::Index i = 0; i < sd.sys.dim; ++i) u.table[static_cast<std::size_t>(i)] = one;
    out.push_back(std::move(u));
    for (std::size_t m = static_cast<std::size_t>(sd.sys.dim); m < nb; ++m) {
      CoiElem e;
      e.table.assign(nb, Mat::Zero(1, 1));
      e.table[m] = one;
      out.push_back(std::move(e));
    }
  } else {
    for (std::size_t m = 0; m < nb; ++m) {
      CoiElem e;
      e.table.assign(nb, Mat::Zero(1, 1));
      e.table[m] = one;
      out.push_back(std::move(e));
    }
  }
  return out;
}

Mat concrete_span_sample(const MatOpSys& sys, Eigen::Index k, Rng& rng) {
  Mat x = Mat::Zero(sys.dim * k, sys.dim * k);
  for (const Mat& b : sys.basis) x += kron(b, rng.gaussian_hermitian(k));
  return x;
}

std::vector<Mat> dual_span_sample(const SideDesc& sd, Eigen::Index k, Rng& rng) {
  std::vector<Mat> t;
  t.reserve(sd.sys.basis.size());
  for (std::size_t m = 0; m < sd.sys.basis.size(); ++m) t.push_back(rng.gaussian_hermitian(k));
  if (sd.quot) {
    Mat avg = Mat::Zero(k, k);
    for (Eigen::Index i = 0; i < sd.sys.dim; ++i) avg += t[static_cast<std::size_t>(i)];
    avg /= static_cast<double>(sd.sys.dim);
    for (Eigen::Index i = 0; i < sd.sys.dim; ++i) t[static_cast<std::size_t>(i)] = avg;
  }
  return t;
}

// Value table of a sampled cp map: derived from a random PSD Choi matrix,
// cyclically averaged when the annihilator is required.
std::vector<Mat> dual_member_sample(const SideDesc& sd, Eigen::Index k, Rng& rng) {
  const Eigen::Index d = sd.sys.dim;
  Mat g = rng.gaussian_matrix(d * k, d * k);
  Mat c = g * g.adjoint() / static_cast<double>(d * k);
  if (sd.quot) {
    Mat perm = Mat::Zero(d, d);
    for (Eigen::Index r = 0; r < d; ++r) perm((r + 1) % d, r) = 1.0;
    Mat pk = kron(perm, Mat::Identity(k, k));
    Mat acc = c;
    Mat cur = c;
    for (Eigen::Index s = 1; s < d; ++s) {
      cur = pk * cur * pk.adjoint();
      acc += cur;
    }
    c = acc / static_cast<double>(d);
  }
  std::vector<Mat> t;
  for (const Mat& b : sd.sys.basis) {
    Mat v = Mat::Zero(k, k);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index s = 0; s < d; ++s) {
        Cplx w = b(r, s);
        if (w != Cplx(0.0, 0.0)) v += w * c.block(r * k, s * k, k, k);
      }
    t.push_back(HermMat::mirror(v).raw());
  }
  return t;
}

DualElement table_element(const SideDesc& sd, Eigen::Index k, std::vector<Mat> t) {
  DualElement g;
  g.sys = sd.sys;
  g.level = k;
  g.vals = std::move(t);
  return g;
}

}  // namespace

Json CoiReport::to_json() const {
  Json j;
  j["map"] = map;
  j["levels"] = levels;
  j["samples"] = samples;
  j["seed"] = seed;
  j["tol"] = tol;
  j["members_checked"] = members_checked;
  j["nonmembers_checked"] = nonmembers_checked;
  j["unresolved"] = unresolved;
  j["pass"] = pass;
  Json fs = Json::array();
  for (const CoiFailure& f : failures) {
    Json e;
    e["direction"] = f.direction;
    e["level"] = f.level;
    e["note"] = f.note;
    e["domain_margin"] = f.domain_margin;
    e["image_margin"] = f.image_margin;
    e["element"] = f.element;
    e["image"] = f.image;
    fs.push_back(std::move(e));
  }
  j["failures"] = std::move(fs);
  return j;
}

CoiReport verify_coi(const CoiMapSpec& spec, int levels, long samples, std::uint64_t seed,
                     double tol) {
  if (levels < 1) fail_invalid("levels must be >= 1");
  if (samples < 1) fail_invalid("samples must be >= 1");
  if (!(tol > 0)) fail_invalid("tol must be > 0");

  SideDesc dom, cod;
  bool injection_only = false;
  std::function<CoiElem(const CoiElem&, Eigen::Index)> fwd, inv;
  const int n = spec.n;

  switch (spec.kind) {
    case CoiMapKind::Identity: {
      dom.sys = make_system(spec.domain_kind, n);
      cod = dom;
      fwd = inv = [](const CoiElem& e, Eigen::Index) { return e; };
      break;
    }
    case CoiMapKind::Transpose: {
      dom.sys = make_system(SystemKind::Mn, n);
      cod = dom;
      auto tr = [d = dom.sys.dim](const CoiElem& e, Eigen::Index k) {
        Mat out = Mat::Zero(e.ambient.rows(), e.ambient.cols());
        for (Eigen::Index u = 0; u < d; ++u)
          for (Eigen::Index v = 0; v < d; ++v)
            out.block(u * k, v * k, k, k) = e.ambient.block(v * k, u * k, k, k);
        return CoiElem{out, {}};
      };
      fwd = inv = tr;
      break;
    }
    case CoiMapKind::WdToEn:
    case CoiMapKind::EnIntoMn: {
      dom.dual = true;
      dom.quot = true;
      dom.sys = make_system(SystemKind::Mn, n);
      cod.sys = make_system(spec.kind == CoiMapKind::WdToEn ? SystemKind::En : SystemKind::Mn, n);
      injection_only = (spec.kind == CoiMapKind::EnIntoMn);
      fwd = [sd = dom](const CoiElem& e, Eigen::Index k) {
        return CoiElem{dual_iso_wd_to_en(table_element(sd, k, e.table)), {}};
      };
      inv = [n](const CoiElem& e, Eigen::Index k) {
        return CoiElem{Mat(), dual_iso_wd_to_en_inverse(e.ambient, n, k).vals};
      };
      break;
    }
    case CoiMapKind::TndToVn: {
      dom.dual = true;
      dom.sys = make_system(SystemKind::Tn, n);
      cod.sys = make_system(SystemKind::Vn, n);
      fwd = [sd = dom](const CoiElem& e, Eigen::Index k) {
        return CoiElem{dual_iso_tn(table_element(sd, k, e.table)), {}};
      };
      inv = [n](const CoiElem& e, Eigen::Index k) {
        return CoiElem{Mat(), dual_iso_tn_inverse(e.ambient, n, k).vals};
      };
      break;
    }
    case CoiMapKind::SndToUn: {
      dom.dual = true;
      dom.quot = true;
      dom.sys = make_system(SystemKind::Tn, n);
      cod.sys = make_system(SystemKind::Un, n);
      fwd = [sd = dom](const CoiElem& e, Eigen::Index k) {
        return CoiElem{dual_iso_sn(table_element(sd, k, e.table)), {}};
      };
      inv = [n](const CoiElem& e, Eigen::Index k) {
        return CoiElem{Mat(), dual_iso_sn_inverse(e.ambient, n, k).vals};
      };
      break;
    }
  }

  // Bijectivity on spans: the forward map must be injective on the domain's
  // real span and, unless it is a declared injection, match the codomain's
  // span dimension.
  {
    std::vector<CoiElem> basis = side_basis(dom);
    std::vector<Eigen::VectorXd> cols;
    for (const CoiElem& b : basis) cols.push_back(vec_carrier(fwd(b, 1)));
    Eigen::MatrixXd m(cols.front().size(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      m.col(static_cast<Eigen::Index>(c)) = cols[c];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0)))
      fail_invalid("verify_coi: map is not injective on the domain span");
    const std::size_t cod_dim = cod.dual ? side_basis(cod).size() : cod.sys.basis.size();
    if (!injection_only && basis.size() != cod_dim)
      fail_invalid("verify_coi: map is not bijective between the spans");
  }

  CoiReport rep;
  rep.map = coi_map_name(spec);
  rep.levels = levels;
  rep.samples = samples;
  rep.seed = seed;
  rep.tol = tol;

  SolveOptions sopt;
  sopt.dykstra_iters = 50;

  // Tri-state cone test on a carrier: +1 member, -1 certified non-member,
  // 0 unresolved. margin reports the certified eigenvalue bound.
  auto test_side = [&](const SideDesc& sd, const CoiElem& e, Eigen::Index k,
                       double* margin) -> int {
    if (!sd.dual) {
      RVec ev = herm_eigenvalues(HermMat::mirror(e.ambient).raw());
      *margin = ev(0);
      if (ev(0) >= -tol) return 1;
      return -1;
    }
    ConeCertificate cert = sd.quot
                               ? quotient_dual_cone_membership(table_element(sd, k, e.table), tol, sopt)
                               : dual_cone_membership(table_element(sd, k, e.table), tol, sopt);
    *margin = cert.status == CertStatus::Infeasible ? -cert.residual : cert.residual;
    if (cert.status == CertStatus::Feasible) return 1;
    if (cert.status == CertStatus::Infeasible) return -1;
    return 0;
  };

  // Sound member / non-member construction per side. Returns status +1/-1
  // with the element, or 0 when construction failed (dual rejection loop).
  auto draw = [&](const SideDesc& sd, Eigen::Index k, bool member, long idx, Rng& rng,
                  CoiElem* out) -> bool {
    if (!sd.dual) {
      Mat y;
      if (idx == 0 && member) {
        y = Mat::Zero(sd.sys.dim * k, sd.sys.dim * k);  // unit probe below
      } else if (idx == 2 && member && sd.sys.kind == SystemKind::Mn && k >= 2) {
        // Entangled probe: catches maps that are positive but not completely.
        const Eigen::Index q = std::min<Eigen::Index>(sd.sys.dim, k);
        y = Mat::Zero(sd.sys.dim * k, sd.sys.dim * k);
        for (Eigen::Index u = 0; u < q; ++u)
          for (Eigen::Index v = 0; v < q; ++v) y((u * k) + u, (v * k) + v) = 1.0;
        y *= static_cast<double>(sd.sys.dim);
      } else {
        y = concrete_span_sample(sd.sys, k, rng);
      }
      RVec ev = herm_eigenvalues(HermMat::mirror(y).raw());
      const double lo = ev(0), spread = ev(ev.size() - 1) - ev(0);
      const Eigen::Index dim = sd.sys.dim * k;
      if (member) {
        const double margin = 0.25 * (1.0 + std::abs(lo));
        out->ambient = y + (margin - lo) * Mat::Identity(dim, dim);
      } else {
        const double depth = 0.25 * (1.0 + spread);
        out->ambient = y - (lo + depth) * Mat::Identity(dim, dim);
      }
      return true;
    }
    if (member) {
      if (idx == 0) {
        DualElement st = trace_state(sd.sys);
        out->table.clear();
        for (const Mat& v : st.vals) out->table.push_back(kron(v, Mat::Identity(k, k)));
      } else {
        out->table = dual_member_sample(sd, k, rng);
      }
      return true;
    }
    for (int attempt = 0; attempt < 6; ++attempt) {
      std::vector<Mat> t = dual_span_sample(sd, k, rng);
      DualElement cand = table_element(sd, k, t);
      ConeCertificate cert = sd.quot ? quotient_dual_cone_membership(cand, tol, sopt)
                                     : dual_cone_membership(cand, tol, sopt);
      if (cert.status == CertStatus::Infeasible) {
        out->table = std::move(t);
        return true;
      }
    }
    return false;
  };

  auto run_direction = [&](const char* name, const SideDesc& from, const SideDesc& to,
                           const std::function<CoiElem(const CoiElem&, Eigen::Index)>& map,
                           Eigen::Index k, Rng& rng) {
    for (long s = 0; s < samples; ++s) {
      const bool member = (s % 2 == 0);
      CoiElem e;
      if (!draw(from, k, member, s, rng, &e)) {
        rep.unresolved += 1;
        continue;
      }
      CoiElem img = map(e, k);
      double margin = 0.0;
      int st = test_side(to, img, k, &margin);
      if (member) {
        if (st == -1) {
          CoiFailure f;
          f.direction = name;
          f.level = k;
          f.note = "cone member mapped to a certified non-member";
          f.image_margin = margin;
          f.element = elem_json(e);
          f.image = elem_json(img);
          rep.failures.push_back(std::move(f));
        } else if (st == 1) {
          rep.members_checked += 1;
        } else {
          rep.unresolved += 1;
        }
      } else {
        // A non-member may only fail soundly: the image must be certainly
        // inside the cone (strictly positive or a verified witness).
        const bool image_certainly_member = to.dual ? (st == 1) : (st == 1 && margin > tol);
        if (image_certainly_member) {
          CoiFailure f;
          f.direction = name;
          f.level = k;
          f.note = "certified non-member mapped into the cone";
          f.image_margin = margin;
          f.element = elem_json(e);
          f.image = elem_json(img);
          rep.failures.push_back(std::move(f));
        } else if (st == -1) {
          rep.nonmembers_checked += 1;
        } else {
          rep.unresolved += 1;
        }
      }
    }
  };

  Rng root(seed);
  for (Eigen::Index k = 1; k <= levels; ++k) {
    Rng rf(root.derive(static_cast<std::uint64_t>(2 * k)));
    run_direction("forward", dom, cod, fwd, k, rf);
    Rng ri(root.derive(static_cast<std::uint64_t>(2 * k + 1)));
    // For an injection the inverse is tested on the image span: codomain
    // samples are drawn by pushing domain samples forward.
    if (!injection_only) {
      run_direction("inverse", cod, dom, inv, k, ri);
    } else {
      for (long s = 0; s < samples; ++s) {
        const bool member = (s % 2 == 0);
        CoiElem e;
        if (!draw(dom, k, member, s, ri, &e)) {
          rep.unresolved += 1;
          continue;
        }
        CoiElem img = fwd(e, k);
        double img_margin = 0.0;
        int img_st = test_side(cod, img, k, &img_margin);
        if (img_st == 0) {
          rep.unresolved += 1;
          continue;
        }
        CoiElem back = inv(img, k);
        double dom_margin = 0.0;
        int dom_st = test_side(dom, back, k, &dom_margin);
        if (dom_st == 0) {
          rep.unresolved += 1;
        } else if (img_st == 1 && dom_st == -1 && img_margin > tol) {
          CoiFailure f;
          f.direction = "inverse";
          f.level = k;
          f.note = "image in the cone but preimage certified outside";
          f.domain_margin = dom_margin;
          f.image_margin = img_margin;
          f.element = elem_json(img);
          f.image = elem_json(back);
          rep.failures.push_back(std::move(f));
        } else if (img_st == -1 && dom_st == 1) {
          CoiFailure f;
          f.direction = "inverse";
          f.level = k;
          f.note = "image certified outside but preimage in the cone";
          f.domain_margin = dom_margin;
          f.image_margin = img_margin;
          f.element = elem_json(img);
          f.image = elem_json(back);
          rep.failures.push_back(std::move(f));
        } else {
          (img_st == 1 ? rep.members_checked : rep.nonmembers_checked) += 1;
        }
      }
    }
  }

  rep.pass = rep.failures.empty();
  return rep;
}

}  // namespace osq
