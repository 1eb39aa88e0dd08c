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

// Release gate. Each check prints exactly one [PASS]/[FAIL] line; any
// failure exits nonzero, and a certificate-soundness failure exits 3.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "osq/duality.hpp"
#include "osq/feasibility.hpp"
#include "osq/linalg.hpp"
#include "osq/opsys.hpp"
#include "osq/quotient.hpp"
#include "osq/rng.hpp"
#include "osq/tensor.hpp"

using namespace osq;

namespace {

struct Gate {
  int failures = 0;
  bool blocker = false;

  void run(int id, const std::string& title, const std::function<bool(std::string&)>& body,
           bool blocks_release = false) {
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d. %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", id, title.c_str(), secs,
                detail.empty() ? "" : " :: ", detail.c_str());
    std::fflush(stdout);
    if (!ok) {
      ++failures;
      if (blocks_release) blocker = true;
    }
  }
};

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

// Criterion 1: every off-diagonal unit of M_n/J_n has norm 1/n, n = 2..6.
bool check_norm_law(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 2; n <= 6; ++n) {
    const double want = 1.0 / n;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        NormResult r = quotient_norm(q_element(SystemKind::Mn, n, unit_rep(n, i, j)), 5e-7);
        if (std::abs(r.value - want) > 1e-6) {
          std::ostringstream os;
          os << "n=" << n << " e" << i + 1 << j + 1 << " value " << r.value << " wants " << want;
          detail = os.str();
          return false;
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > 30.0) {
    detail = "runtime " + std::to_string(secs) + "s exceeds 30s";
    return false;
  }
  return true;
}

// Criterion 2: E_ii - (1/n) I collapses to the order unit's ray in both signs.
bool check_unit_collapse(std::string& detail) {
  for (int n = 2; n <= 6; ++n) {
    for (int i = 0; i < n; ++i) {
      Mat e = unit_rep(n, i, i) - Mat::Identity(n, n) / static_cast<double>(n);
      for (double sgn : {1.0, -1.0}) {
        ConeCertificate c = d_cone_membership(q_element(SystemKind::Mn, n, sgn * e), 1e-8);
        if (c.status != CertStatus::Feasible) {
          std::ostringstream os;
          os << "n=" << n << " i=" << i + 1 << " sign " << sgn << ": " << to_string(c.status);
          detail = os.str();
          return false;
        }
      }
    }
  }
  return true;
}

// Criterion 3: the minimal-lift test never disagrees with a unitary
// refutation, and solidly infeasible cases are refuted at small unitary size.
bool check_refutation_agreement(std::string& detail) {
  Rng root(2024);
  long feasible = 0, infeasible = 0, refuted = 0, contradictions = 0, undecided = 0;
  for (long id = 0; id < 500; ++id) {
    Rng rng(root.derive(static_cast<std::uint64_t>(id)));
    const int n = 2 + static_cast<int>(id % 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>((id / 3) % 2);

    WnElement w;
    w.n = n;
    w.p = p;
    w.a11 = rng.gaussian_hermitian(p);
    w.offdiag.assign(static_cast<std::size_t>(n) * n, Mat::Zero(p, p));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        Mat g = 0.8 * rng.gaussian_matrix(p, p);
        w.offdiag[static_cast<std::size_t>(i * n + j)] = g;
        w.offdiag[static_cast<std::size_t>(j * n + i)] = g.adjoint();
      }

    // Center the element on the cone boundary, then push it a solid margin
    // to the planted side. Shifting A11 by c moves the element by c * unit.
    BoundaryShift bs = cone_boundary_shift(wn_element(w), 1e-6, 30000);
    const double scale = 1.0 + std::abs(bs.hi);
    const bool plant_feasible = (id % 2 == 0);
    const double c = plant_feasible ? bs.hi + 0.30 * scale : bs.lo - 0.35 * scale;
    w.a11 += c * Mat::Identity(p, p);

    ConeCertificate cert = wn_min_membership(w, 1e-9);
    auto refute = [&]() -> bool {
      for (Eigen::Index r = 1; r <= 4; ++r)
        if (unitary_refute(w, r, 50, root.derive(7000 + static_cast<std::uint64_t>(id)), 1e-9)
                .has_value())
          return true;
      return false;
    };
    if (cert.status == CertStatus::Feasible) {
      ++feasible;
      if (refute()) ++contradictions;
    } else if (cert.status == CertStatus::Infeasible) {
      ++infeasible;
      if (refute()) ++refuted;
    } else {
      ++undecided;
    }
  }
  std::ostringstream os;
  os << feasible << " feasible, " << infeasible << " infeasible, " << refuted << " refuted, "
     << contradictions << " contradictions, " << undecided << " undecided";
  detail = os.str();
  if (contradictions != 0) return false;
  if (infeasible == 0) return false;
  return refuted >= static_cast<long>(std::ceil(0.95 * static_cast<double>(infeasible)));
}

// Criterion 4: prescribed-lift search over full matrix algebras M_p finds a
// lift for every min-positive sample at every grid epsilon down to 1e-6.
bool check_pstar(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  long candidates = 0, total = 0;
  for (int p = 1; p <= 2; ++p) {
    MatOpSys t = make_system(SystemKind::Mn, p);
    for (int n = 2; n <= 4; ++n) {
      LiftReport rep = pstar_check(t, n, p, 50, {1e-2, 1e-4, 1e-6}, 40000 + 10 * n + p);
      candidates += rep.counterexample_candidates;
      total += static_cast<long>(rep.instances.size());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream os;
  os << total << " instances, " << candidates << " candidates, " << secs << "s";
  detail = os.str();
  if (secs > 300.0) return false;
  return candidates == 0 && total == 300;
}

// Criterion 5: the three dual identifications verify as complete order
// isomorphisms and round trip to working precision.
bool check_dual_isos(std::string& detail) {
  Rng rng(555);
  for (int n = 2; n <= 4; ++n) {
    for (const std::string stem : {"wd-en", "tnd-vn", "snd-un"}) {
      const std::string name = stem + ":" + std::to_string(n);
      CoiReport rep = verify_coi(parse_coi_map(name), 2, 200, 99, 1e-8);
      if (!rep.pass) {
        detail = name + " failed verification (" + std::to_string(rep.failures.size()) +
                 " failures)";
        return false;
      }
    }
    // Round trips on random (annihilating) tables at levels 1 and 2.
    MatOpSys mn = make_system(SystemKind::Mn, n);
    MatOpSys tn = make_system(SystemKind::Tn, n);
    for (Eigen::Index lvl = 1; lvl <= 2; ++lvl) {
      auto table = [&](const MatOpSys& sys, bool annihilate) {
        DualElement g;
        g.sys = sys;
        g.level = lvl;
        for (std::size_t m = 0; m < sys.basis.size(); ++m)
          g.vals.push_back(rng.gaussian_hermitian(lvl));
        if (annihilate) {
          Mat avg = Mat::Zero(lvl, lvl);
          for (int i = 0; i < n; ++i) avg += g.vals[static_cast<std::size_t>(i)];
          avg /= static_cast<double>(n);
          for (int i = 0; i < n; ++i) g.vals[static_cast<std::size_t>(i)] = avg;
        }
        return g;
      };
      auto worst_diff = [](const DualElement& a, const DualElement& b) {
        double w = 0.0;
        for (std::size_t m = 0; m < a.vals.size(); ++m)
          w = std::max(w, (a.vals[m] - b.vals[m]).norm());
        return w;
      };
      DualElement g1 = table(mn, true);
      if (worst_diff(dual_iso_wd_to_en_inverse(dual_iso_wd_to_en(g1), n, lvl), g1) > 1e-12) {
        detail = "wd-en round trip exceeded 1e-12";
        return false;
      }
      DualElement g2 = table(tn, false);
      if (worst_diff(dual_iso_tn_inverse(dual_iso_tn(g2), n, lvl), g2) > 1e-12) {
        detail = "tnd-vn round trip exceeded 1e-12";
        return false;
      }
      DualElement g3 = table(tn, true);
      if (worst_diff(dual_iso_sn_inverse(dual_iso_sn(g3), n, lvl), g3) > 1e-12) {
        detail = "snd-un round trip exceeded 1e-12";
        return false;
      }
    }
  }
  return true;
}

// Criterion 6: banded completion solves every feasible instance exactly on
// the specified entries and rejects planted non-PSD data by naming a block.
bool check_completion(std::string& detail) {
  Rng root(666);
  long done = 0, rejected = 0;
  for (long id = 0; id < 200; ++id) {
    Rng rng(root.derive(static_cast<std::uint64_t>(id)));
    const Eigen::Index b = (id % 2 == 0) ? 1 : 2;
    const Eigen::Index nb = 2 + static_cast<Eigen::Index>(rng.uniform() * (8 / b - 1.99));
    const Eigen::Index d = nb * b;

    // Mask a random PSD matrix down to the band: always completable.
    Mat g = rng.gaussian_matrix(d, d);
    Mat full = g * g.adjoint() + 0.05 * Mat::Identity(d, d);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(nb, nb);
    mask.setConstant(false);
    Mat entries = Mat::Zero(d, d);
    for (Eigen::Index i = 0; i < nb; ++i) {
      mask(i, i) = true;
      entries.block(i * b, i * b, b, b) = full.block(i * b, i * b, b, b);
      if (i + 1 < nb && rng.uniform() < 0.8) {
        mask(i, i + 1) = mask(i + 1, i) = true;
        entries.block(i * b, (i + 1) * b, b, b) = full.block(i * b, (i + 1) * b, b, b);
        entries.block((i + 1) * b, i * b, b, b) = full.block((i + 1) * b, i * b, b, b);
      }
    }
    PartialBandedMat part = PartialBandedMat::make(nb, b, 1, entries, mask);
    HermMat y = tridiag_psd_complete(part, 1e-9);
    if (!psd_check(y, 1e-9).is_psd) {
      detail = "completion " + std::to_string(id) + " is not PSD at 1e-9";
      return false;
    }
    bool exact = true;
    for (Eigen::Index i = 0; i < nb; ++i)
      for (Eigen::Index j = 0; j < nb; ++j)
        if (mask(i, j) &&
            (y.raw().block(i * b, j * b, b, b) - entries.block(i * b, j * b, b, b)).norm() != 0.0)
          exact = false;
    if (!exact) {
      detail = "completion " + std::to_string(id) + " altered a specified entry";
      return false;
    }
    ++done;
  }

  for (long id = 0; id < 200; ++id) {
    Rng rng(root.derive(100000 + static_cast<std::uint64_t>(id)));
    const Eigen::Index b = (id % 2 == 0) ? 1 : 2;
    const Eigen::Index nb = 2 + static_cast<Eigen::Index>(rng.uniform() * (8 / b - 1.99));
    const Eigen::Index d = nb * b;
    Mat entries = Mat::Zero(d, d);
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(nb, nb);
    mask.setConstant(false);
    for (Eigen::Index i = 0; i < nb; ++i) {
      mask(i, i) = true;
      entries.block(i * b, i * b, b, b) = Mat::Identity(b, b);
    }
    // Plant one band entry too large for its principal 2x2 block.
    const Eigen::Index k = static_cast<Eigen::Index>(rng.uniform() * (nb - 1));
    Mat band = rng.gaussian_matrix(b, b);
    band *= (1.5 + rng.uniform()) / std::sqrt(std::max(1e-12, band.squaredNorm() / b));
    entries.block(k * b, (k + 1) * b, b, b) = band;
    entries.block((k + 1) * b, k * b, b, b) = band.adjoint();
    mask(k, k + 1) = mask(k + 1, k) = true;

    PartialBandedMat part = PartialBandedMat::make(nb, b, 1, entries, mask);
    try {
      tridiag_psd_complete(part, 1e-9);
      detail = "planted instance " + std::to_string(id) + " was not rejected";
      return false;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DomainError) {
        detail = "planted instance " + std::to_string(id) + " raised the wrong error class";
        return false;
      }
      // The message must name a block index whose principal block really is
      // indefinite in the input data.
      const std::string msg = e.what();
      std::size_t pos = msg.find("block at ");
      if (pos != std::string::npos) {
        pos += 9;
      } else {
        pos = msg.find("block ");
        if (pos == std::string::npos) {
          detail = "error did not name a block: " + msg;
          return false;
        }
        pos += 6;
      }
      const Eigen::Index named = std::strtol(msg.c_str() + pos, nullptr, 10);
      if (named < 0 || named + 1 >= nb) {
        detail = "error named an out-of-range block: " + msg;
        return false;
      }
      Mat principal(2 * b, 2 * b);
      principal << entries.block(named * b, named * b, b, b),
          entries.block(named * b, (named + 1) * b, b, b),
          entries.block((named + 1) * b, named * b, b, b),
          entries.block((named + 1) * b, (named + 1) * b, b, b);
      if (herm_eigenvalues(principal).minCoeff() >= 0) {
        detail = "error named a PSD block: " + msg;
        return false;
      }
      ++rejected;
    }
  }
  detail = std::to_string(done) + " completed, " + std::to_string(rejected) + " rejected";
  return done == 200 && rejected == 200;
}

// Criterion 7: smoothed membership at the boundary implies exact membership.
bool check_proximinality(std::string& detail) {
  Rng root(777);
  long verified = 0, lifted = 0, probes = 0;
  for (long id = 0; id < 200; ++id) {
    Rng rng(root.derive(static_cast<std::uint64_t>(id)));
    const int n = 2 + static_cast<int>(id % 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>((id / 3) % 3);
    Mat g = rng.gaussian_hermitian(n * p);
    QuotientElement x = q_element(SystemKind::Mn, n, g);
    BoundaryShift bs = cone_boundary_shift(x, 1e-8, 60000);
    QuotientElement b = x;
    b.rep = g + bs.hi * Mat::Identity(n * p, n * p);
    ++probes;
    ConeCertificate c = c_cone_membership(b, 1e-7, 1e-9);
    if (c.status != CertStatus::Feasible) continue;
    ++verified;
    ConeCertificate d = d_cone_membership(b, 1e-5);
    if (d.status == CertStatus::Feasible) ++lifted;
  }
  std::ostringstream os;
  os << probes << " probes, " << verified << " smoothed-feasible, " << lifted << " lifted";
  detail = os.str();
  return verified > 100 && lifted == verified;
}

// Criterion 8: prescribed positive data factors through the lift.
bool check_factorization(std::string& detail) {
  Rng root(888);
  long ok = 0;
  for (long id = 0; id < 100; ++id) {
    Rng rng(root.derive(static_cast<std::uint64_t>(id)));
    const int n = 2 + static_cast<int>(id % 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>((id / 3) % 3);
    Mat y = rng.gaussian_matrix(n * p, n * p);
    Mat full = y * y.adjoint() + 0.01 * Mat::Identity(n * p, n * p);
    std::vector<Mat> blocks(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        blocks[static_cast<std::size_t>(i * n + j)] = full.block(i * p, j * p, p, p);
    FreeFactorization f = free_factorization(n, p, blocks, 1e-9);
    if (f.lift.status != CertStatus::Feasible) {
      detail = "instance " + std::to_string(id) + " did not lift";
      return false;
    }
    if (f.residual > 1e-8) {
      detail = "instance " + std::to_string(id) + " residual " + std::to_string(f.residual);
      return false;
    }
    ++ok;
  }
  detail = std::to_string(ok) + " instances factored";
  return ok == 100;
}

// Criterion 9: every emitted certificate re-verifies against its problem.
bool check_certificate_soundness(std::string& detail) {
  Rng root(999);
  long emitted = 0, verified = 0;
  std::vector<AffinePsdProblem> probs;

  // Random affine problems across dimensions and direction counts.
  for (long id = 0; id < 120; ++id) {
    Rng rng(root.derive(static_cast<std::uint64_t>(id)));
    AffinePsdProblem p;
    p.dim = 2 + static_cast<Eigen::Index>(id % 5);
    p.offset = rng.gaussian_hermitian(p.dim);
    const int dirs = static_cast<int>(id % 4);
    for (int k = 0; k < dirs; ++k) p.basis.push_back(rng.gaussian_hermitian(p.dim));
    probs.push_back(std::move(p));
  }
  // Quotient cone problems, rebuilt from public pieces.
  for (long id = 0; id < 120; ++id) {
    Rng rng(root.derive(5000 + static_cast<std::uint64_t>(id)));
    const int n = 2 + static_cast<int>(id % 3);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(id % 2);
    Quotient quo = trace_zero_diagonal_quotient(make_system(SystemKind::Mn, n));
    AffinePsdProblem prob;
    prob.dim = n * p;
    prob.offset = HermMat::from(rng.gaussian_hermitian(n * p)).raw();
    for (const Mat& k : quo.kernel.basis)
      for (const Mat& f : herm_basis(p)) prob.basis.push_back(kron(k, f));
    probs.push_back(std::move(prob));
  }

  for (const AffinePsdProblem& p : probs) {
    ConeCertificate cert = solve_feasibility(p);
    if (cert.status == CertStatus::Undecided) continue;
    ++emitted;
    if (verify_certificate(p, cert, 1e-7)) ++verified;
  }
  std::ostringstream os;
  os << verified << "/" << emitted << " certificates verified";
  detail = os.str();
  return emitted > 150 && verified == emitted;
}

// Criterion 10: the tensor-gap experiment is accepted on bookkeeping
// soundness only; no separation claim is checked or made.
bool check_gap_bookkeeping(std::string& detail) {
  struct RunSpec {
    GapMode mode;
    int n;
    Eigen::Index p;
    long samples;
    std::uint64_t seed;
  };
  const RunSpec specs[] = {
      {GapMode::EE, 2, 1, 8, 1010},  {GapMode::EE, 3, 1, 4, 1011},
      {GapMode::WW, 2, 1, 6, 1012},  {GapMode::UUVV, 2, 1, 6, 1013},
      {GapMode::UUVV, 3, 1, 3, 1014},
  };
  long with_witness = 0;
  for (const RunSpec& s : specs) {
    GapReport rep = gap_search(s.mode, s.n, s.p, s.samples, s.seed);
    if (!rep.consistent) {
      detail = to_string(s.mode) + " n=" + std::to_string(s.n) + " inconsistent";
      return false;
    }
    if (rep.certified_in_both + rep.refuted_in_min + rep.unresolved !=
        static_cast<long>(rep.instances.size())) {
      detail = to_string(s.mode) + " bucket totals do not add up";
      return false;
    }
    for (const GapInstance& in : rep.instances) {
      // Sandwich invariant: an instance carrying an accepted max-side
      // witness must never sit in the min-refuted bucket.
      const bool has_max = in.detail.contains("max_witness") || in.detail.contains("lift");
      if (has_max) {
        ++with_witness;
        if (in.bucket == "refuted-in-min") {
          detail = to_string(s.mode) + " instance " + std::to_string(in.id) +
                   " is max-certified and min-refuted";
          return false;
        }
      }
      if (in.bucket == "certified-in-both" && !has_max) {
        detail = to_string(s.mode) + " instance " + std::to_string(in.id) +
                 " certified without a witness";
        return false;
      }
    }
  }
  detail = std::to_string(with_witness) + " witnesses checked; separation is not claimed";
  return with_witness > 0;
}

}  // namespace

int main() {
  Gate gate;
  gate.run(1, "off-diagonal units have quotient norm 1/n (n = 2..6, 30s budget)", check_norm_law);
  gate.run(2, "diagonal units collapse onto the order unit (n = 2..6)", check_unit_collapse);
  gate.run(3, "minimal lift agrees with unitary refutation on 500 instances",
           check_refutation_agreement);
  gate.run(4, "full matrix algebras pass the prescribed-lift property (300 instances)",
           check_pstar);
  gate.run(5, "dual identifications verify at levels 1-2 with 200 samples", check_dual_isos);
  gate.run(6, "banded completion: 200 feasible solved exactly, 200 planted rejected",
           check_completion);
  gate.run(7, "smoothed boundary membership lifts exactly (200 probes)", check_proximinality);
  gate.run(8, "positive block data factors through the lift (100 instances)", check_factorization);
  gate.run(9, "all emitted certificates re-verify independently", check_certificate_soundness,
           /*blocks_release=*/true);
  gate.run(10, "tensor-gap bookkeeping is sound (no separation claimed)", check_gap_bookkeeping);

  if (gate.blocker) return 3;
  return gate.failures == 0 ? 0 : 1;
}
