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

#include "sasn/scoring_loss.h"

#include <cmath>
#include <string>

#include "sasn/error.h"

namespace sasn {

void EmbeddingBatch::validate() const {
  if (speakers < 2 || utterances < 2)
    throw Error("batch needs at least 2 speakers x 2 utterances");
  if (embeddings.size() != static_cast<std::size_t>(speakers) * utterances)
    throw Error("batch size does not match N x M");
  for (const auto& e : embeddings)
    if (e.size() != embeddings.front().size()) throw Error("embedding sizes differ");
}

Eigen::VectorXd centroid(std::span<const Eigen::VectorXd> embeddings) {
  if (embeddings.empty()) throw Error("centroid of an empty set");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(embeddings.front().size());
  for (const auto& e : embeddings) sum += e;
  return sum / static_cast<double>(embeddings.size());
}

Eigen::VectorXd leave_one_out_centroid(std::span<const Eigen::VectorXd> embeddings,
                                       std::size_t excluded) {
  if (embeddings.size() < 2) throw Error("cannot exclude from singleton");
  if (excluded >= embeddings.size()) throw Error("excluded index out of range");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(embeddings.front().size());
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    if (i != excluded) sum += embeddings[i];
  return sum / static_cast<double>(embeddings.size() - 1);
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return u.dot(v) / (u.norm() * v.norm() + kCosineEpsilon);
}

namespace {

// d cos(u, v) / du, with D = |u||v| + eps.
Eigen::VectorXd cosine_grad_first(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm(), nv = v.norm();
  const double denom = nu * nv + kCosineEpsilon;
  const double dot = u.dot(v);
  return v / denom - u * (dot * nv / (nu * denom * denom));
}

// Off-target entries of a row, summed in ascending column order. GE2E
// gradient rows store minus this sum in the target column, so summing a row
// as off_target_sum + target cancels exactly and dL/db is exactly zero.
double off_target_sum(const Eigen::Ref<const Eigen::RowVectorXd>& row, Eigen::Index target) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k)
    if (k != target) sum += row(k);
  return sum;
}

}  // namespace

SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch, double w, double b) {
  batch.validate();
  const int n = batch.speakers, m = batch.utterances;
  SimilarityMatrix sim;
  sim.scores.resize(n * m, n);
  sim.cosines.resize(n * m, n);
  for (int k = 0; k < n; ++k) {
    sim.centroids.push_back(centroid(batch.speaker(k)));
    if (sim.centroids.back().norm() == 0.0)
      throw Error("zero-norm centroid for speaker " + std::to_string(k));
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd& e = batch.at(j, i);
      if (e.norm() == 0.0)
        throw Error("zero-norm embedding at (" + std::to_string(j) + "," + std::to_string(i) + ")");
      const int row = j * m + i;
      for (int k = 0; k < n; ++k) {
        double c;
        if (k == j) {
          const Eigen::VectorXd loo = leave_one_out_centroid(batch.speaker(j), i);
          if (loo.norm() == 0.0)
            throw Error("zero-norm leave-one-out centroid at (" + std::to_string(j) + "," +
                        std::to_string(i) + ")");
          c = cosine(e, loo);
        } else {
          c = cosine(e, sim.centroids[k]);
        }
        sim.cosines(row, k) = c;
        sim.scores(row, k) = w * c + b;
      }
    }
  }
  return sim;
}

std::vector<Eigen::VectorXd> similarity_backward(const EmbeddingBatch& batch,
                                                 const SimilarityMatrix& sim,
                                                 const Eigen::MatrixXd& grad_scores,
                                                 ParameterStore& params) {
  const int n = batch.speakers, m = batch.utterances;
  const double w = params.sim_w();
  params.sim_w_grad() += grad_scores.cwiseProduct(sim.cosines).sum();
  for (Eigen::Index r = 0; r < grad_scores.rows(); ++r) {
    const Eigen::Index own = r / m;
    params.sim_b_grad() += off_target_sum(grad_scores.row(r), own) + grad_scores(r, own);
  }

  std::vector<Eigen::VectorXd> grads(batch.embeddings.size(),
                                     Eigen::VectorXd::Zero(batch.embeddings.front().size()));
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      const int row = j * m + i;
      const Eigen::VectorXd& e = batch.at(j, i);
      for (int k = 0; k < n; ++k) {
        const double g = w * grad_scores(row, k);
        if (g == 0.0) continue;
        if (k == j) {
          const Eigen::VectorXd loo = leave_one_out_centroid(batch.speaker(j), i);
          grads[row] += g * cosine_grad_first(e, loo);
          const Eigen::VectorXd grad_c = g * cosine_grad_first(loo, e) / (m - 1.0);
          for (int other = 0; other < m; ++other)
            if (other != i) grads[j * m + other] += grad_c;
        } else {
          grads[row] += g * cosine_grad_first(e, sim.centroids[k]);
          const Eigen::VectorXd grad_c = g * cosine_grad_first(sim.centroids[k], e) / m;
          for (int other = 0; other < m; ++other) grads[k * m + other] += grad_c;
        }
      }
    }
  }
  return grads;
}

double ge2e_row_loss(const Eigen::Ref<const Eigen::RowVectorXd>& row, Eigen::Index target) {
  // (top - s_t) + log(1 + sum_{k != top} exp(s_k - top)); keeps full
  // precision when the target dominates the row.
  Eigen::Index arg = 0;
  const double top = row.maxCoeff(&arg);
  double rest = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k)
    if (k != arg) rest += std::exp(row(k) - top);
  return (top - row(target)) + std::log1p(rest);
}

double ge2e_loss(const Eigen::MatrixXd& scores, int utterances_per_speaker, double penalty,
                 double alpha) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r)
    total += ge2e_row_loss(scores.row(r), r / utterances_per_speaker);
  return total + alpha * penalty;
}

Eigen::MatrixXd ge2e_loss_grad(const Eigen::MatrixXd& scores, int utterances_per_speaker) {
  Eigen::MatrixXd grad(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double top = scores.row(r).maxCoeff();
    Eigen::RowVectorXd p = (scores.row(r).array() - top).exp().matrix();
    p /= p.sum();
    grad.row(r) = p;
    // p_t - 1 written as -sum_{k != t} p_k; avoids cancellation when p_t ~ 1.
    const Eigen::Index target = r / utterances_per_speaker;
    grad(r, target) = -off_target_sum(p, target);
  }
  return grad;
}

}  // namespace sasn
