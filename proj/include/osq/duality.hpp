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

#ifndef OSQ_DUALITY_HPP
#define OSQ_DUALITY_HPP

#include <string>
#include <vector>

#include "osq/opsys.hpp"
#include "osq/rng.hpp"

namespace osq {

/// Level-k element G = [g_ij] of the dual of a represented system: the block
/// of functionals is recorded through its evaluations vals[m] = [g_ij(B_m)]
/// on the system basis. Hermitian symmetry (g_ji = adjoint functional of
/// g_ij) is equivalent to every vals[m] being Hermitian.
struct DualElement {
  MatOpSys sys;
  Eigen::Index level = 1;
  std::vector<Mat> vals;  // vals[m] is level x level

  /// Invalid-input error on shape or hermitian-symmetry violation.
  void validate() const;
  /// Evaluation on a span element: sum of coeff_m * vals[m].
  Mat value_of(const Mat& x) const;
};

/// The faithful state delta = normalized trace restricted to the system
/// (the canonical dual order unit), at level 1.
DualElement trace_state(const MatOpSys& sys);

DualElement zero_functional(const MatOpSys& sys, Eigen::Index level);

/// The transpose pattern on M_n at level n: g_ij(X) = X_ji, i.e.
/// vals[m] = transpose of B_m. Positive but not completely positive for
/// n >= 2; the canonical dual-cone non-member.
DualElement transpose_pattern(int n);

/// Dual-cone membership as completely-positive-map feasibility: Feasible iff
/// a PSD Choi matrix C in M_d (x) M_level exists whose induced map on the
/// ambient algebra restricts on the system basis to the recorded values
/// (Arveson extension turns cp on the subsystem into cp on the ambient).
/// The witness is the Choi matrix; the separator refutes every such
/// extension.
ConeCertificate dual_cone_membership(const DualElement& g, double tol,
                                     const SolveOptions& opt = {});

/// Evaluations on the trace-zero diagonal kernel; a dual element represents
/// a functional on the quotient exactly when these vanish.
double diagonal_kernel_residual(const DualElement& g);

/// Dual cone of the quotient by the trace-zero diagonals (Mn or Tn parents):
/// the quotient's cp maps are the parent's cp maps that kill the kernel, so
/// this validates annihilation (domain error on failure) and defers to
/// dual_cone_membership.
ConeCertificate quotient_dual_cone_membership(const DualElement& g, double tol,
                                              const SolveOptions& opt = {});

/// Dual of M_n/J_n onto E_n: shared diagonal block g(unit)/n, (i,j) block
/// g(e_ij). Input must annihilate the kernel (domain error otherwise);
/// output is the ambient matrix of an M_level(E_n) element. Round-trip with
/// the inverse is the identity.
Mat dual_iso_wd_to_en(const DualElement& g);
DualElement dual_iso_wd_to_en_inverse(const Mat& x, int n, Eigen::Index level);

/// Dual of T_n onto V_n: direct sum of the 2x2 corner blocks
/// [[g(E_kk), g(E_{k,k+1})], [g(E_{k+1,k}), g(E_{k+1,k+1})]].
Mat dual_iso_tn(const DualElement& g);
DualElement dual_iso_tn_inverse(const Mat& x, int n, Eigen::Index level);

/// Dual of T_n/J_n onto U_n: the same corner-block formula, which lands in
/// U_n exactly when the input annihilates the kernel (domain error
/// otherwise).
Mat dual_iso_sn(const DualElement& g);
DualElement dual_iso_sn_inverse(const Mat& x, int n, Eigen::Index level);

enum class CoiMapKind {
  Identity,   // identity on a named system
  Transpose,  // blockwise transpose on M_n; order iso, not a complete one
  WdToEn,     // dual of M_n/J_n -> E_n
  TndToVn,    // dual of T_n -> V_n
  SndToUn,    // dual of T_n/J_n -> U_n
  EnIntoMn,   // dual of M_n/J_n -> M_n through the coordinate carrier;
              // complete order injection onto the E_n span
};

struct CoiMapSpec {
  CoiMapKind kind = CoiMapKind::Identity;
  SystemKind domain_kind = SystemKind::En;  // Identity only
  int n = 2;
};

/// Names: "identity:<kind>:<n>", "transpose:<n>", "wd-en:<n>", "tnd-vn:<n>",
/// "snd-un:<n>", "en-mn:<n>".
CoiMapSpec parse_coi_map(const std::string& name);
std::string coi_map_name(const CoiMapSpec& spec);

struct CoiFailure {
  std::string direction;  // "forward" or "inverse"
  Eigen::Index level = 1;
  std::string note;
  double domain_margin = 0.0;
  double image_margin = 0.0;
  Json element;
  Json image;
};

struct CoiReport {
  std::string map;
  int levels = 0;
  long samples = 0;
  std::uint64_t seed = 0;
  double tol = 0.0;
  long members_checked = 0;
  long nonmembers_checked = 0;
  long unresolved = 0;  // solver could not certify either way; never a failure
  std::vector<CoiFailure> failures;
  bool pass = true;

  Json to_json() const;
};

/// Samples cone members (by construction, with sound positivity) and
/// certified non-members of M_k(domain) for k = 1..levels and checks that
/// the map and its inverse both preserve cone status. A recorded failure is
/// a sound counterexample: both the element's status and its image's
/// contradicting status are certified. Bijectivity on spans is checked up
/// front (EnIntoMn is checked as an injection and tested onto its image).
CoiReport verify_coi(const CoiMapSpec& spec, int levels, long samples, std::uint64_t seed,
                     double tol);

}  // namespace osq

#endif  // OSQ_DUALITY_HPP
