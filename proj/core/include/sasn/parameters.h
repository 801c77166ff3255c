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

#ifndef SASN_PARAMETERS_H_
#define SASN_PARAMETERS_H_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "sasn/rng.h"

namespace sasn {

inline constexpr int kHiddenDim = 512;
inline constexpr int kEmbeddingDim = 2 * kHiddenDim;

/// One trainable tensor and its gradient (same shape).
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool is_bias = false;

  Eigen::Index size() const { return value.size(); }
};

/// All trainable tensors of the network. Tensors are kept in a fixed order
/// (the checkpoint order):
///   tdnn1_w 512x200, tdnn1_b 512, tdnn2_w 512x1536, tdnn2_b 512,
///   tdnn3_w 512x1536, tdnn3_b 512, attn_w1 512xd_a, attn_w2 d_a x d_r,
///   attn_w3 512x1, sim_w 1x1, sim_b 1x1.
class ParameterStore {
 public:
  static constexpr std::size_t kNumTensors = 11;

  /// Zero-valued store with the shapes implied by (d_a, d_r).
  ParameterStore(int d_a, int d_r);

  int d_a() const { return d_a_; }
  int d_r() const { return d_r_; }

  // layer in [0, 3)
  Tensor& tdnn_weight(int layer) { return tensors_[2 * layer]; }
  const Tensor& tdnn_weight(int layer) const { return tensors_[2 * layer]; }
  Tensor& tdnn_bias(int layer) { return tensors_[2 * layer + 1]; }
  const Tensor& tdnn_bias(int layer) const { return tensors_[2 * layer + 1]; }
  Tensor& attn_w1() { return tensors_[6]; }
  const Tensor& attn_w1() const { return tensors_[6]; }
  Tensor& attn_w2() { return tensors_[7]; }
  const Tensor& attn_w2() const { return tensors_[7]; }
  Tensor& attn_w3() { return tensors_[8]; }
  const Tensor& attn_w3() const { return tensors_[8]; }

  double& sim_w() { return tensors_[9].value(0, 0); }
  double sim_w() const { return tensors_[9].value(0, 0); }
  double& sim_b() { return tensors_[10].value(0, 0); }
  double sim_b() const { return tensors_[10].value(0, 0); }
  double& sim_w_grad() { return tensors_[9].grad(0, 0); }
  double& sim_b_grad() { return tensors_[10].grad(0, 0); }

  std::span<Tensor> tensors() { return tensors_; }
  std::span<const Tensor> tensors() const { return tensors_; }

  void zero_grad();

  /// Number of scalars, optionally leaving out the three TDNN bias vectors.
  std::int64_t size(bool include_biases = true) const;

  /// Values (not gradients) compare equal bit for bit.
  bool same_values(const ParameterStore& other) const;

 private:
  int d_a_;
  int d_r_;
  std::array<Tensor, kNumTensors> tensors_;
};

inline constexpr double kInitialSimWeight = 10.0;
inline constexpr double kInitialSimBias = -5.0;
inline constexpr double kMinSimWeight = 1e-6;

/// Weights uniform in [-s, s] with s = sqrt(6 / (fan_in + fan_out)),
/// biases zero, sim_w = 10, sim_b = -5.
ParameterStore init_parameters(int d_a, int d_r, Rng& rng);

/// p <- p - lr * g for every tensor, then sim_w <- max(sim_w, 1e-6).
/// Throws (without touching any value) if a gradient is not finite.
void sgd_step(ParameterStore& params, double lr);

// Checkpoint: "SASN", version byte 1, d_a and d_r as uint32 LE, then every
// tensor in store order as float64 LE, row-major.
inline constexpr std::uint8_t kCheckpointVersion = 1;
std::string serialize_checkpoint(const ParameterStore& params);
ParameterStore deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace sasn

#endif  // SASN_PARAMETERS_H_
