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

#include "sasn/encoder.h"

#include <string>

#include "sasn/error.h"

namespace sasn {

const TdnnConfig& TdnnConfig::standard() {
  static const TdnnConfig config{{
      TdnnLayerSpec{{-2, -1, 0, 1, 2}, kNumMelBins, kHiddenDim},
      TdnnLayerSpec{{-2, 0, 2}, kHiddenDim, kHiddenDim},
      TdnnLayerSpec{{-3, 0, 3}, kHiddenDim, kHiddenDim},
  }};
  return config;
}

int TdnnConfig::receptive_field(int num_layers) const {
  int field = 1;
  for (int l = 0; l < num_layers; ++l) field += layers[l].span();
  return field;
}

Eigen::MatrixXd splice(const Eigen::MatrixXd& x, std::span<const int> offsets) {
  if (offsets.empty()) throw Error("splice needs at least one offset");
  const int lo = offsets.front(), hi = offsets.back();
  const Eigen::Index out_cols = x.cols() - (hi - lo);
  if (out_cols < 1)
    throw Error("input of " + std::to_string(x.cols()) +
                " frames is too short for offset span " + std::to_string(hi - lo));
  const Eigen::Index d = x.rows();
  Eigen::MatrixXd out(d * static_cast<Eigen::Index>(offsets.size()), out_cols);
  for (std::size_t k = 0; k < offsets.size(); ++k)
    out.middleRows(static_cast<Eigen::Index>(k) * d, d) = x.middleCols(offsets[k] - lo, out_cols);
  return out;
}

Eigen::MatrixXd splice_backward(const Eigen::MatrixXd& grad_spliced,
                                std::span<const int> offsets, Eigen::Index input_cols) {
  const int lo = offsets.front();
  const Eigen::Index d = grad_spliced.rows() / static_cast<Eigen::Index>(offsets.size());
  const Eigen::Index out_cols = grad_spliced.cols();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(d, input_cols);
  for (std::size_t k = 0; k < offsets.size(); ++k)
    grad.middleCols(offsets[k] - lo, out_cols) +=
        grad_spliced.middleRows(static_cast<Eigen::Index>(k) * d, d);
  return grad;
}

Eigen::MatrixXd tdnn_forward(const FeatureMatrix& features, const ParameterStore& params,
                             TdnnCache* cache) {
  return tdnn_forward(features.values(), params, cache);
}

Eigen::MatrixXd tdnn_forward(const Eigen::MatrixXd& features, const ParameterStore& params,
                             TdnnCache* cache) {
  const TdnnConfig& config = TdnnConfig::standard();
  if (features.cols() < config.receptive_field())
    throw Error("input below receptive field: " + std::to_string(features.cols()) +
                " frames < " + std::to_string(config.receptive_field()));
  if (features.rows() != config.layers[0].input_dim)
    throw Error("expected " + std::to_string(config.layers[0].input_dim) + "-dim features");
  if (cache) cache->input_cols = features.cols();

  Eigen::MatrixXd h = features;
  for (int l = 0; l < 3; ++l) {
    Eigen::MatrixXd spliced = splice(h, config.layers[l].offsets);
    h.noalias() = params.tdnn_weight(l).value * spliced;
    h.colwise() += params.tdnn_bias(l).value.col(0);
    h = h.cwiseMax(0.0);
    if (cache) {
      cache->spliced[l] = std::move(spliced);
      cache->activation[l] = h;
    }
  }
  return h;
}

Eigen::MatrixXd tdnn_backward(const TdnnCache& cache, const Eigen::MatrixXd& grad_h,
                              ParameterStore& params, bool train_biases) {
  const TdnnConfig& config = TdnnConfig::standard();
  Eigen::MatrixXd grad = grad_h;
  for (int l = 2; l >= 0; --l) {
    // ReLU mask; units exactly at zero get no gradient.
    grad = (cache.activation[l].array() > 0.0).select(grad, 0.0);
    params.tdnn_weight(l).grad.noalias() += grad * cache.spliced[l].transpose();
    if (train_biases) params.tdnn_bias(l).grad.col(0) += grad.rowwise().sum();
    const Eigen::Index input_cols = l == 0 ? cache.input_cols : cache.activation[l - 1].cols();
    Eigen::MatrixXd grad_spliced = params.tdnn_weight(l).value.transpose() * grad;
    grad = splice_backward(grad_spliced, config.layers[l].offsets, input_cols);
  }
  return grad;
}

std::int64_t param_count(int d_a, int d_r, bool include_biases) {
  if (d_a < 1 || d_r < 1) throw Error("attention dimensions must be positive");
  const TdnnConfig& config = TdnnConfig::standard();
  std::int64_t total = 0;
  for (const TdnnLayerSpec& layer : config.layers) {
    total += static_cast<std::int64_t>(layer.spliced_dim()) * layer.output_dim;
    if (include_biases) total += layer.output_dim;
  }
  total += static_cast<std::int64_t>(kHiddenDim) * d_a;  // W1
  total += static_cast<std::int64_t>(d_a) * d_r;         // W2
  total += kHiddenDim;                                   // W3
  total += 2;                                            // w, b
  return total;
}

}  // namespace sasn
