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

#include "osq/json_io.hpp"

namespace osq {

Json matrix_to_json(const Mat& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json rrow = Json::array(), irow = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(rrow);
    im.push_back(irow);
  }
  Json j;
  j["dim"] = m.rows();
  if (m.cols() != m.rows()) j["cols"] = m.cols();
  j["re"] = re;
  j["im"] = im;
  return j;
}

Mat matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("re"))
    fail_invalid("matrix json: need object with dim and re");
  Eigen::Index rows = j.at("dim").get<Eigen::Index>();
  Eigen::Index cols = j.contains("cols") ? j.at("cols").get<Eigen::Index>() : rows;
  if (rows < 0 || cols < 0) fail_invalid("matrix json: negative dimension");
  const Json& re = j.at("re");
  const Json* im = j.contains("im") ? &j.at("im") : nullptr;
  if (!re.is_array() || static_cast<Eigen::Index>(re.size()) != rows)
    fail_invalid("matrix json: re has wrong row count");
  if (im && (!im->is_array() || static_cast<Eigen::Index>(im->size()) != rows))
    fail_invalid("matrix json: im has wrong row count");
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& rrow = re.at(i);
    if (!rrow.is_array() || static_cast<Eigen::Index>(rrow.size()) != cols)
      fail_invalid("matrix json: re row has wrong length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      double a = rrow.at(k).get<double>();
      double b = 0.0;
      if (im) {
        const Json& irow = im->at(i);
        if (!irow.is_array() || static_cast<Eigen::Index>(irow.size()) != cols)
          fail_invalid("matrix json: im row has wrong length");
        b = irow.at(k).get<double>();
      }
      m(i, k) = Cplx(a, b);
    }
  }
  return m;
}

Json partial_to_json(const PartialBandedMat& p) {
  Json j = matrix_to_json(p.entries);
  j["block"] = p.block;
  j["bandwidth"] = p.bandwidth;
  Json mask = Json::array();
  Eigen::Index b = p.block;
  for (Eigen::Index i = 0; i < p.dim(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < p.dim(); ++k) row.push_back(p.mask(i / b, k / b) ? 1 : 0);
    mask.push_back(row);
  }
  j["mask"] = mask;
  return j;
}

PartialBandedMat partial_from_json(const Json& j) {
  Mat entries = matrix_from_json(j);
  if (entries.rows() != entries.cols()) fail_invalid("partial json: matrix not square");
  Eigen::Index d = entries.rows();
  Eigen::Index block = j.contains("block") ? j.at("block").get<Eigen::Index>() : 1;
  Eigen::Index bandwidth = j.contains("bandwidth") ? j.at("bandwidth").get<Eigen::Index>() : 1;
  if (block < 1 || d % block != 0) fail_invalid("partial json: block size does not divide dim");
  Eigen::Index nb = d / block;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(nb, nb);
  if (j.contains("mask")) {
    const Json& mj = j.at("mask");
    if (!mj.is_array() || static_cast<Eigen::Index>(mj.size()) != d)
      fail_invalid("partial json: mask has wrong row count");
    for (Eigen::Index ib = 0; ib < nb; ++ib)
      for (Eigen::Index jb = 0; jb < nb; ++jb) {
        bool first = mj.at(ib * block).at(jb * block).get<int>() != 0;
        for (Eigen::Index a = 0; a < block; ++a)
          for (Eigen::Index b = 0; b < block; ++b) {
            bool v = mj.at(ib * block + a).at(jb * block + b).get<int>() != 0;
            if (v != first) fail_invalid("partial json: mask not block-aligned");
          }
        mask(ib, jb) = first;
      }
  } else {
    // Default: everything inside the band specified.
    for (Eigen::Index ib = 0; ib < nb; ++ib)
      for (Eigen::Index jb = 0; jb < nb; ++jb) mask(ib, jb) = std::abs(ib - jb) <= bandwidth;
  }
  return PartialBandedMat::make(nb, block, bandwidth, entries, mask);
}

std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace osq
