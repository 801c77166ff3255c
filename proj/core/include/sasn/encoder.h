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

#ifndef SASN_ENCODER_H_
#define SASN_ENCODER_H_

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sasn/features.h"
#include "sasn/parameters.h"

namespace sasn {

struct TdnnLayerSpec {
  std::vector<int> offsets;  // ascending frame offsets spliced together
  int input_dim = 0;         // per-frame input dimension before splicing
  int output_dim = kHiddenDim;

  int spliced_dim() const { return input_dim * static_cast<int>(offsets.size()); }
  int span() const { return offsets.back() - offsets.front(); }
};

/// Layer 1 splices t-2..t+2 (200 -> 512), layer 2 {t-2, t, t+2}
/// (1536 -> 512), layer 3 {t-3, t, t+3} (1536 -> 512).
struct TdnnConfig {
  std::array<TdnnLayerSpec, 3> layers;

  static const TdnnConfig& standard();

  /// Frames of input seen by one output frame after `num_layers` layers.
  int receptive_field(int num_layers = 3) const;
};

/// Splices columns of x: output column t stacks x(:, t + o - min_offset) for
/// every offset o. Output has x.rows() * |offsets| rows and
/// x.cols() - (max - min) columns.
Eigen::MatrixXd splice(const Eigen::MatrixXd& x, std::span<const int> offsets);

/// Adjoint of splice: scatters a gradient on the spliced matrix back onto
/// an input of `input_cols` columns.
Eigen::MatrixXd splice_backward(const Eigen::MatrixXd& grad_spliced,
                                std::span<const int> offsets,
                                Eigen::Index input_cols);

struct TdnnCache {
  std::array<Eigen::MatrixXd, 3> spliced;     // layer inputs after splicing
  std::array<Eigen::MatrixXd, 3> activation;  // post-ReLU outputs
  Eigen::Index input_cols = 0;
};

/// Three rounds of splice -> affine -> ReLU. Returns H (512 x (T - 14)).
/// Throws if T < 15.
Eigen::MatrixXd tdnn_forward(const FeatureMatrix& features,
                             const ParameterStore& params,
                             TdnnCache* cache = nullptr);

/// Raw-matrix variant used by tests that probe input gradients.
Eigen::MatrixXd tdnn_forward(const Eigen::MatrixXd& features,
                             const ParameterStore& params,
                             TdnnCache* cache = nullptr);

/// Accumulates weight (and, if `train_biases`, bias) gradients for dL/dH.
/// Returns dL/dfeatures.
Eigen::MatrixXd tdnn_backward(const TdnnCache& cache, const Eigen::MatrixXd& grad_h,
                              ParameterStore& params, bool train_biases = true);

/// Closed-form number of trainable scalars for the whole model.
std::int64_t param_count(int d_a, int d_r, bool include_biases = true);

}  // namespace sasn

#endif  // SASN_ENCODER_H_
