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

#ifndef SASN_SCORING_LOSS_H_
#define SASN_SCORING_LOSS_H_

#include <Eigen/Core>

#include <span>
#include <vector>

#include "sasn/parameters.h"

namespace sasn {

inline constexpr double kCosineEpsilon = 1e-12;

/// N speakers x M utterances, stored speaker-major: embedding (j, i) lives at
/// index j * M + i.
struct EmbeddingBatch {
  int speakers = 0;
  int utterances = 0;
  std::vector<Eigen::VectorXd> embeddings;

  const Eigen::VectorXd& at(int j, int i) const { return embeddings[j * utterances + i]; }
  std::span<const Eigen::VectorXd> speaker(int j) const {
    return std::span<const Eigen::VectorXd>(embeddings).subspan(
        static_cast<std::size_t>(j) * utterances, static_cast<std::size_t>(utterances));
  }
  void validate() const;
};

Eigen::VectorXd centroid(std::span<const Eigen::VectorXd> embeddings);

/// Mean of all embeddings except index `excluded`. Needs at least two.
Eigen::VectorXd leave_one_out_centroid(std::span<const Eigen::VectorXd> embeddings,
                                       std::size_t excluded);

/// u.v / (|u| |v| + 1e-12)
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// S(j*M + i, k) = w cos(e_ji, c_k) + b, using the leave-one-out centroid
/// of speaker j when k == j.
struct SimilarityMatrix {
  Eigen::MatrixXd scores;   // (N M) x N
  Eigen::MatrixXd cosines;  // same shape, before scaling
  std::vector<Eigen::VectorXd> centroids;  // full centroids c_k
};

SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch, double w, double b);
inline SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch,
                                          const ParameterStore& params) {
  return similarity_matrix(batch, params.sim_w(), params.sim_b());
}

/// Backward of similarity_matrix: accumulates dL/dw and dL/db into
/// `params` and returns dL/de_ji in batch order.
std::vector<Eigen::VectorXd> similarity_backward(const EmbeddingBatch& batch,
                                                 const SimilarityMatrix& sim,
                                                 const Eigen::MatrixXd& grad_scores,
                                                 ParameterStore& params);

/// -S(ji, j) + log sum_k exp(S(ji, k)) for one row.
double ge2e_row_loss(const Eigen::Ref<const Eigen::RowVectorXd>& row, Eigen::Index target);

/// Sum of the per-utterance terms plus alpha * penalty. `penalty` is
/// already averaged over the batch.
double ge2e_loss(const Eigen::MatrixXd& scores, int utterances_per_speaker,
                 double penalty, double alpha);

/// dL/dS for ge2e_loss (the penalty term does not depend on S).
Eigen::MatrixXd ge2e_loss_grad(const Eigen::MatrixXd& scores, int utterances_per_speaker);

}  // namespace sasn

#endif  // SASN_SCORING_LOSS_H_
