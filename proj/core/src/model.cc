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

#include "sasn/model.h"

#include <vector>

#include "sasn/error.h"
#include "sasn/rng.h"

namespace sasn {

UtteranceTrace forward_utterance(const Eigen::MatrixXd& features, const ParameterStore& params,
                                 AttentionMode mode) {
  UtteranceTrace trace;
  trace.frames = tdnn_forward(features, params, &trace.tdnn);
  trace.single = single_attention(trace.frames, params);
  trace.penalty = attention_penalty(trace.single.weights);
  if (mode == AttentionMode::kDouble) trace.second = double_attention(trace.single.heads, params);
  trace.embedding = stats_pool(trace.heads());
  return trace;
}

Eigen::MatrixXd backward_utterance(const UtteranceTrace& trace, const Eigen::VectorXd& grad_embedding,
                                   double penalty_weight, ParameterStore& params,
                                   bool train_biases) {
  Eigen::MatrixXd grad_heads = stats_pool_backward(trace.heads(), grad_embedding);
  if (trace.second)
    grad_heads = double_attention_backward(*trace.second, trace.single.heads, grad_heads, params);
  Eigen::MatrixXd grad_weights;
  if (penalty_weight != 0.0)
    grad_weights = penalty_weight * attention_penalty_grad(trace.single.weights);
  const Eigen::MatrixXd grad_h =
      single_attention_backward(trace.single, trace.frames, grad_heads, grad_weights, params);
  return tdnn_backward(trace.tdnn, grad_h, params, train_biases);
}

Eigen::VectorXd embed(const FeatureMatrix& features, const ParameterStore& params,
                      AttentionMode mode) {
  return forward_utterance(features.values(), params, mode).embedding;
}

namespace {

void check_batch_shape(std::span<const FeatureMatrix> inputs, int speakers, int utterances) {
  if (speakers < 2 || utterances < 2) throw Error("batch needs N >= 2 and M >= 2");
  if (inputs.size() != static_cast<std::size_t>(speakers) * utterances)
    throw Error("expected " + std::to_string(speakers * utterances) + " inputs, got " +
                std::to_string(inputs.size()));
}

}  // namespace

BatchLoss batch_loss(std::span<const FeatureMatrix> inputs, int speakers, int utterances,
                     const ParameterStore& params, const ModelConfig& config) {
  check_batch_shape(inputs, speakers, utterances);
  EmbeddingBatch batch{speakers, utterances, {}};
  double penalty = 0.0;
  for (const FeatureMatrix& x : inputs) {
    const UtteranceTrace trace = forward_utterance(x.values(), params, config.mode);
    batch.embeddings.push_back(trace.embedding);
    penalty += trace.penalty;
  }
  penalty /= static_cast<double>(inputs.size());
  BatchLoss out;
  out.similarity = similarity_matrix(batch, params).scores;
  out.penalty = penalty;
  out.loss = ge2e_loss(out.similarity, utterances, penalty, config.alpha);
  return out;
}

BatchLoss batch_loss_and_grad(std::span<const FeatureMatrix> inputs, int speakers,
                              int utterances, ParameterStore& params, const ModelConfig& config) {
  check_batch_shape(inputs, speakers, utterances);
  std::vector<UtteranceTrace> traces;
  traces.reserve(inputs.size());
  EmbeddingBatch batch{speakers, utterances, {}};
  double penalty = 0.0;
  for (const FeatureMatrix& x : inputs) {
    traces.push_back(forward_utterance(x.values(), params, config.mode));
    batch.embeddings.push_back(traces.back().embedding);
    penalty += traces.back().penalty;
  }
  const double count = static_cast<double>(inputs.size());
  penalty /= count;

  const SimilarityMatrix sim = similarity_matrix(batch, params);
  BatchLoss out;
  out.similarity = sim.scores;
  out.penalty = penalty;
  out.loss = ge2e_loss(sim.scores, utterances, penalty, config.alpha);

  params.zero_grad();
  const Eigen::MatrixXd grad_scores = ge2e_loss_grad(sim.scores, utterances);
  const std::vector<Eigen::VectorXd> grad_embeddings =
      similarity_backward(batch, sim, grad_scores, params);
  for (std::size_t u = 0; u < traces.size(); ++u)
    backward_utterance(traces[u], grad_embeddings[u], config.alpha / count, params,
                       config.include_biases);
  return out;
}

GradCheckReport check_loss_gradient(const LossCheckSpec& spec) {
  Rng rng(spec.seed);
  ParameterStore params = init_parameters(spec.d_a, spec.d_r, rng);
  std::vector<FeatureMatrix> inputs;
  for (int u = 0; u < spec.speakers * spec.utterances; ++u) {
    Eigen::MatrixXd x(kNumMelBins, spec.frames);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    inputs.emplace_back(std::move(x));
  }
  batch_loss_and_grad(inputs, spec.speakers, spec.utterances, params, spec.model);
  return finite_diff_check(
      [&](const ParameterStore& p) {
        return batch_loss(inputs, spec.speakers, spec.utterances, p, spec.model).loss;
      },
      params, spec.eps, spec.probes, rng);
}

}  // namespace sasn
