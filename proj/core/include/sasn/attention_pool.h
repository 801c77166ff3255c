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

#ifndef SASN_ATTENTION_POOL_H_
#define SASN_ATTENTION_POOL_H_

#include <Eigen/Core>

#include <string_view>

#include "sasn/parameters.h"

namespace sasn {

enum class AttentionMode { kSingle, kDouble };

AttentionMode parse_attention_mode(std::string_view name);
std::string_view to_string(AttentionMode mode);

inline constexpr double kNormEpsilon = 1e-12;

/// Softmax over each column, with max subtraction.
Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores);

/// Gradient of column_softmax given its output and dL/doutput.
Eigen::MatrixXd column_softmax_backward(const Eigen::MatrixXd& probs,
                                        const Eigen::MatrixXd& grad_probs);

/// x(:, c) / sqrt(||x(:, c)||^2 + 1e-12) for every column.
Eigen::MatrixXd column_normalize(const Eigen::MatrixXd& x);

Eigen::MatrixXd column_normalize_backward(const Eigen::MatrixXd& x,
                                          const Eigen::MatrixXd& grad_out);

/// x / sqrt((||x||_F^2 + 1e-12) / cols): the root-mean-square column norm
/// becomes 1 while the relative column norms are kept.
Eigen::MatrixXd rms_normalize(const Eigen::MatrixXd& x);

Eigen::MatrixXd rms_normalize_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_out);

/// First attention layer:
///   scores = ReLU(H^T W1) W2          (T' x d_r)
///   A      = column-wise softmax(scores)
///   E      = column-normalized H A    (512 x d_r)
struct SingleAttention {
  Eigen::MatrixXd projection;  // H^T W1, before ReLU
  Eigen::MatrixXd scores;
  Eigen::MatrixXd weights;     // A_single
  Eigen::MatrixXd pooled;      // H A, before normalization
  Eigen::MatrixXd heads;       // E_single
};

SingleAttention single_attention(const Eigen::MatrixXd& h, const ParameterStore& params);

/// Accumulates W1/W2 gradients and returns dL/dH. `grad_weights` is an
/// extra gradient on A_single (from the redundancy penalty); it may be
/// empty.
Eigen::MatrixXd single_attention_backward(const SingleAttention& fwd,
                                          const Eigen::MatrixXd& h,
                                          const Eigen::MatrixXd& grad_heads,
                                          const Eigen::MatrixXd& grad_weights,
                                          ParameterStore& params);

/// Second attention layer: one softmax weight per head from E^T W3, each
/// head scaled by its weight (the weights broadcast over all 512 rows), then
/// the whole matrix rescaled to unit RMS column norm.
///
/// A per-column rescale here would cancel the head weights exactly
/// (E_double == E_single, no gradient reaching W3). With uniform weights
/// (W3 = 0, or d_r = 1) the output still equals E_single.
struct DoubleAttention {
  Eigen::VectorXd scores;   // E_single^T W3, length d_r
  Eigen::VectorXd weights;  // A_double
  Eigen::MatrixXd scaled;   // E_single with column c scaled by weights(c)
  Eigen::MatrixXd heads;    // E_double
};

DoubleAttention double_attention(const Eigen::MatrixXd& e_single, const ParameterStore& params);

/// Accumulates the W3 gradient and returns dL/dE_single.
Eigen::MatrixXd double_attention_backward(const DoubleAttention& fwd,
                                          const Eigen::MatrixXd& e_single,
                                          const Eigen::MatrixXd& grad_heads,
                                          ParameterStore& params);

/// Per-row mean and population std over the head axis, concatenated:
/// e = [mean(E, heads); sqrt(var(E, heads) + 1e-12)], length 1024.
Eigen::VectorXd stats_pool(const Eigen::MatrixXd& heads);

Eigen::MatrixXd stats_pool_backward(const Eigen::MatrixXd& heads,
                                    const Eigen::VectorXd& grad_embedding);

/// ||A^T A - I||_F^2.
double attention_penalty(const Eigen::MatrixXd& weights);

/// d/dA of attention_penalty: 4 A (A^T A - I).
Eigen::MatrixXd attention_penalty_grad(const Eigen::MatrixXd& weights);

}  // namespace sasn

#endif  // SASN_ATTENTION_POOL_H_
