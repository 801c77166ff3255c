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

#ifndef SASN_MODEL_H_
#define SASN_MODEL_H_

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "sasn/attention_pool.h"
#include "sasn/encoder.h"
#include "sasn/features.h"
#include "sasn/gradcheck.h"
#include "sasn/parameters.h"
#include "sasn/scoring_loss.h"

namespace sasn {

struct ModelConfig {
  AttentionMode mode = AttentionMode::kSingle;
  double alpha = 0.1;  // weight of the redundancy penalty
  bool include_biases = true;
};

/// Everything the backward pass needs for one utterance.
struct UtteranceTrace {
  TdnnCache tdnn;
  Eigen::MatrixXd frames;  // H
  SingleAttention single;
  std::optional<DoubleAttention> second;
  Eigen::VectorXd embedding;
  double penalty = 0.0;

  const Eigen::MatrixXd& heads() const { return second ? second->heads : single.heads; }
};

UtteranceTrace forward_utterance(const Eigen::MatrixXd& features, const ParameterStore& params,
                                 AttentionMode mode);

/// Accumulates parameter gradients for one utterance given dL/de and the
/// weight applied to its redundancy penalty. Returns dL/dfeatures.
Eigen::MatrixXd backward_utterance(const UtteranceTrace& trace, const Eigen::VectorXd& grad_embedding,
                                   double penalty_weight, ParameterStore& params,
                                   bool train_biases);

/// 1024-dim utterance embedding.
Eigen::VectorXd embed(const FeatureMatrix& features, const ParameterStore& params,
                      AttentionMode mode);

struct BatchLoss {
  double loss = 0.0;     // total, including alpha * penalty
  double penalty = 0.0;  // mean redundancy penalty over the batch
  Eigen::MatrixXd similarity;
};

/// Loss of a speaker-major batch of N * M feature matrices.
BatchLoss batch_loss(std::span<const FeatureMatrix> inputs, int speakers, int utterances,
                     const ParameterStore& params, const ModelConfig& config);

/// Same, and overwrites the gradients in `params` with dLoss/dparams.
BatchLoss batch_loss_and_grad(std::span<const FeatureMatrix> inputs, int speakers,
                              int utterances, ParameterStore& params, const ModelConfig& config);

/// Finite-difference check of the full loss on a small random batch.
/// Features are standard normal draws; initialization and probes share one
/// generator seeded with `seed`.
struct LossCheckSpec {
  int d_a = 16;
  int d_r = 3;
  ModelConfig model;
  int speakers = 2;
  int utterances = 2;
  Eigen::Index frames = 20;
  double eps = 1e-5;
  std::size_t probes = 200;
  std::uint64_t seed = 1;
};

GradCheckReport check_loss_gradient(const LossCheckSpec& spec);

}  // namespace sasn

#endif  // SASN_MODEL_H_
