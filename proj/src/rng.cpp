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

#include "osq/rng.hpp"

#include <Eigen/QR>
#include <cmath>

namespace osq {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

Cplx Rng::cgaussian() {
  double re = gaussian();
  double im = gaussian();
  return Cplx(re, im) / std::sqrt(2.0);
}

Mat Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cgaussian();
  return m;
}

Mat Rng::gaussian_hermitian(Eigen::Index dim) {
  Mat g = gaussian_matrix(dim, dim);
  return (g + g.adjoint()) / std::sqrt(2.0);
}

Mat Rng::haar_unitary(Eigen::Index dim) {
  Mat g = gaussian_matrix(dim, dim);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < dim; ++i) {
    Cplx d = r(i, i);
    double a = std::abs(d);
    q.col(i) *= (a > 0.0) ? d / a : Cplx(1.0, 0.0);
  }
  return q;
}

std::uint64_t Rng::derive(std::uint64_t stream) {
  std::uint64_t s = eng_() ^ (0x517cc1b727220a95ull * (stream + 1));
  return splitmix64(s);
}

}  // namespace osq
