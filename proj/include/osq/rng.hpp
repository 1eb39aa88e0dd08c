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

#ifndef OSQ_RNG_HPP
#define OSQ_RNG_HPP

#include <cstdint>
#include <random>

#include "osq/linalg.hpp"

namespace osq {

/// Deterministic random source. Gaussians are Box-Muller over the raw
/// mt19937_64 stream so that byte-identical output does not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1).
  double uniform();

  /// Standard normal.
  double gaussian();

  /// Standard complex normal, E|z|^2 = 1.
  Cplx cgaussian();

  Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Random Hermitian with independent Gaussian entries (GUE-like scaling).
  Mat gaussian_hermitian(Eigen::Index dim);

  /// Haar-distributed unitary: QR of a complex Gaussian matrix with the R
  /// diagonal phases normalized away.
  Mat haar_unitary(Eigen::Index dim);

  /// Stream-splitting: derive an independent seed for a sub-task.
  std::uint64_t derive(std::uint64_t stream);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 step, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace osq

#endif  // OSQ_RNG_HPP
