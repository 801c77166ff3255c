// Copyright (c) 2026 The SASN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sasn/parameters.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.h"
#include "sasn/error.h"

namespace sasn {

namespace {

Tensor make_tensor(std::string name, Eigen::Index rows, Eigen::Index cols,
                   bool is_bias = false) {
  return Tensor{std::move(name), Eigen::MatrixXd::Zero(rows, cols),
                Eigen::MatrixXd::Zero(rows, cols), is_bias};
}

}  // namespace

ParameterStore::ParameterStore(int d_a, int d_r)
    : d_a_(d_a),
      d_r_(d_r),
      tensors_{make_tensor("tdnn1_w", kHiddenDim, 200),
               make_tensor("tdnn1_b", kHiddenDim, 1, true),
               make_tensor("tdnn2_w", kHiddenDim, 3 * kHiddenDim),
               make_tensor("tdnn2_b", kHiddenDim, 1, true),
               make_tensor("tdnn3_w", kHiddenDim, 3 * kHiddenDim),
               make_tensor("tdnn3_b", kHiddenDim, 1, true),
               make_tensor("attn_w1", kHiddenDim, std::max(d_a, 0)),
               make_tensor("attn_w2", std::max(d_a, 0), std::max(d_r, 0)),
               make_tensor("attn_w3", kHiddenDim, 1),
               make_tensor("sim_w", 1, 1),
               make_tensor("sim_b", 1, 1)} {
  if (d_a < 1 || d_r < 1)
    throw Error("attention dimensions must be positive (d_a=" + std::to_string(d_a) +
                ", d_r=" + std::to_string(d_r) + ")");
}

void ParameterStore::zero_grad() {
  for (Tensor& t : tensors_) t.grad.setZero();
}

std::int64_t ParameterStore::size(bool include_biases) const {
  std::int64_t n = 0;
  for (const Tensor& t : tensors_)
    if (include_biases || !t.is_bias) n += t.size();
  return n;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (d_a_ != other.d_a_ || d_r_ != other.d_r_) return false;
  for (std::size_t i = 0; i < kNumTensors; ++i) {
    const auto& a = tensors_[i].value;
    const auto& b = other.tensors_[i].value;
    if (std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) != 0) return false;
  }
  return true;
}

ParameterStore init_parameters(int d_a, int d_r, Rng& rng) {
  ParameterStore params(d_a, d_r);
  for (Tensor& t : params.tensors().first(9)) {
    if (t.is_bias) continue;
    const double fan_sum = static_cast<double>(t.value.rows() + t.value.cols());
    const double s = std::sqrt(6.0 / fan_sum);
    for (Eigen::Index c = 0; c < t.value.cols(); ++c)
      for (Eigen::Index r = 0; r < t.value.rows(); ++r) t.value(r, c) = rng.uniform(-s, s);
  }
  params.sim_w() = kInitialSimWeight;
  params.sim_b() = kInitialSimBias;
  return params;
}

void sgd_step(ParameterStore& params, double lr) {
  for (const Tensor& t : params.tensors())
    if (!t.grad.allFinite()) throw Error("non-finite gradient in tensor " + t.name);
  for (Tensor& t : params.tensors()) t.value -= lr * t.grad;
  params.sim_w() = std::max(params.sim_w(), kMinSimWeight);
}

std::string serialize_checkpoint(const ParameterStore& params) {
  std::ostringstream out(std::ios::binary);
  out.write("SASN", 4);
  out.put(static_cast<char>(kCheckpointVersion));
  internal::write_u32_le(out, static_cast<std::uint32_t>(params.d_a()));
  internal::write_u32_le(out, static_cast<std::uint32_t>(params.d_r()));
  for (const Tensor& t : params.tensors())
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) internal::write_f64_le(out, t.value(r, c));
  return std::move(out).str();
}

ParameterStore deserialize_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  const std::string what = "checkpoint";
  char magic[4];
  internal::read_exact(in, magic, 4, what);
  if (std::memcmp(magic, "SASN", 4) != 0) throw Error("bad checkpoint magic");
  char version = 0;
  internal::read_exact(in, &version, 1, what);
  if (static_cast<std::uint8_t>(version) != kCheckpointVersion)
    throw Error("unsupported checkpoint version " +
                std::to_string(static_cast<int>(static_cast<std::uint8_t>(version))));
  const auto d_a = static_cast<int>(internal::read_u32_le(in, what));
  const auto d_r = static_cast<int>(internal::read_u32_le(in, what));
  ParameterStore params(d_a, d_r);
  for (Tensor& t : params.tensors()) {
    for (Eigen::Index r = 0; r < t.value.rows(); ++r)
      for (Eigen::Index c = 0; c < t.value.cols(); ++c) t.value(r, c) = internal::read_f64_le(in, what);
    if (!t.value.allFinite()) throw Error("non-finite value in checkpoint tensor " + t.name);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error("trailing bytes in checkpoint");
  if (params.sim_w() <= 0.0) throw Error("checkpoint has non-positive sim_w");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  const std::string bytes = serialize_checkpoint(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace sasn
