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

#include "sasn/attention_pool.h"

#include <cmath>
#include <string>

#include "sasn/error.h"

namespace sasn {

AttentionMode parse_attention_mode(std::string_view name) {
  if (name == "single") return AttentionMode::kSingle;
  if (name == "double") return AttentionMode::kDouble;
  throw Error("unknown attention mode '" + std::string(name) + "' (expected single|double)");
}

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::kSingle ? "single" : "double";
}

Eigen::MatrixXd column_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const double top = scores.col(c).maxCoeff();
    out.col(c) = (scores.col(c).array() - top).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

Eigen::MatrixXd column_softmax_backward(const Eigen::MatrixXd& probs,
                                        const Eigen::MatrixXd& grad_probs) {
  // ds = p * (g - <p, g>) per column
  const Eigen::RowVectorXd inner = probs.cwiseProduct(grad_probs).colwise().sum();
  return probs.cwiseProduct(grad_probs - Eigen::MatrixXd::Ones(probs.rows(), 1) * inner);
}

Eigen::MatrixXd column_normalize(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    out.col(c) = x.col(c) / std::sqrt(x.col(c).squaredNorm() + kNormEpsilon);
  return out;
}

Eigen::MatrixXd column_normalize_backward(const Eigen::MatrixXd& x,
                                          const Eigen::MatrixXd& grad_out) {
  Eigen::MatrixXd grad(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double n = std::sqrt(x.col(c).squaredNorm() + kNormEpsilon);
    const double proj = x.col(c).dot(grad_out.col(c));
    grad.col(c) = grad_out.col(c) / n - x.col(c) * (proj / (n * n * n));
  }
  return grad;
}

Eigen::MatrixXd rms_normalize(const Eigen::MatrixXd& x) {
  const double cols = static_cast<double>(x.cols());
  return x / std::sqrt((x.squaredNorm() + kNormEpsilon) / cols);
}

Eigen::MatrixXd rms_normalize_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& grad_out) {
  // y = x sqrt(n) / r with r = sqrt(|x|_F^2 + eps)
  const double cols = static_cast<double>(x.cols());
  const double r = std::sqrt(x.squaredNorm() + kNormEpsilon);
  const double scale = std::sqrt(cols);
  const double proj = x.cwiseProduct(grad_out).sum();
  return scale * (grad_out / r - x * (proj / (r * r * r)));
}

SingleAttention single_attention(const Eigen::MatrixXd& h, const ParameterStore& params) {
  if (h.cols() < 1) throw Error("attention needs at least one frame");
  SingleAttention out;
  out.projection.noalias() = h.transpose() * params.attn_w1().value;
  out.scores.noalias() = out.projection.cwiseMax(0.0) * params.attn_w2().value;
  out.weights = column_softmax(out.scores);
  out.pooled.noalias() = h * out.weights;
  out.heads = column_normalize(out.pooled);
  return out;
}

Eigen::MatrixXd single_attention_backward(const SingleAttention& fwd, const Eigen::MatrixXd& h,
                                          const Eigen::MatrixXd& grad_heads,
                                          const Eigen::MatrixXd& grad_weights,
                                          ParameterStore& params) {
  const Eigen::MatrixXd grad_pooled = column_normalize_backward(fwd.pooled, grad_heads);
  Eigen::MatrixXd grad_h = grad_pooled * fwd.weights.transpose();
  Eigen::MatrixXd grad_a = h.transpose() * grad_pooled;
  if (grad_weights.size() != 0) grad_a += grad_weights;
  const Eigen::MatrixXd grad_scores = column_softmax_backward(fwd.weights, grad_a);

  const Eigen::MatrixXd relu = fwd.projection.cwiseMax(0.0);
  params.attn_w2().grad.noalias() += relu.transpose() * grad_scores;
  Eigen::MatrixXd grad_proj = grad_scores * params.attn_w2().value.transpose();
  grad_proj = (fwd.projection.array() > 0.0).select(grad_proj, 0.0);
  params.attn_w1().grad.noalias() += h * grad_proj;
  grad_h.noalias() += params.attn_w1().value * grad_proj.transpose();
  return grad_h;
}

DoubleAttention double_attention(const Eigen::MatrixXd& e_single, const ParameterStore& params) {
  DoubleAttention out;
  out.scores = e_single.transpose() * params.attn_w3().value.col(0);
  out.weights = column_softmax(out.scores);
  out.scaled = e_single * out.weights.asDiagonal();
  out.heads = rms_normalize(out.scaled);
  return out;
}

Eigen::MatrixXd double_attention_backward(const DoubleAttention& fwd,
                                          const Eigen::MatrixXd& e_single,
                                          const Eigen::MatrixXd& grad_heads,
                                          ParameterStore& params) {
  const Eigen::MatrixXd grad_scaled = rms_normalize_backward(fwd.scaled, grad_heads);
  Eigen::MatrixXd grad_e = grad_scaled * fwd.weights.asDiagonal();
  const Eigen::VectorXd grad_weights =
      e_single.cwiseProduct(grad_scaled).colwise().sum().transpose();
  const Eigen::VectorXd grad_scores = column_softmax_backward(fwd.weights, grad_weights);
  params.attn_w3().grad.col(0).noalias() += e_single * grad_scores;
  grad_e.noalias() += params.attn_w3().value.col(0) * grad_scores.transpose();
  return grad_e;
}

Eigen::VectorXd stats_pool(const Eigen::MatrixXd& heads) {
  if (heads.cols() < 1) throw Error("stats pooling needs at least one head");
  const Eigen::Index rows = heads.rows();
  const Eigen::VectorXd mean = heads.rowwise().mean();
  const Eigen::MatrixXd centered = heads.colwise() - mean;
  const Eigen::VectorXd var =
      centered.rowwise().squaredNorm() / static_cast<double>(heads.cols());
  Eigen::VectorXd e(2 * rows);
  e.head(rows) = mean;
  e.tail(rows) = (var.cwiseMax(0.0).array() + kNormEpsilon).sqrt().matrix();
  return e;
}

Eigen::MatrixXd stats_pool_backward(const Eigen::MatrixXd& heads,
                                    const Eigen::VectorXd& grad_embedding) {
  const Eigen::Index rows = heads.rows();
  const double n = static_cast<double>(heads.cols());
  const Eigen::VectorXd mean = heads.rowwise().mean();
  const Eigen::MatrixXd centered = heads.colwise() - mean;
  const Eigen::VectorXd std =
      ((centered.rowwise().squaredNorm() / n).array() + kNormEpsilon).sqrt().matrix();
  // d mean / dE = 1/n; d std / dE = (E - mean) / (n std)
  Eigen::MatrixXd grad = centered.array().colwise() *
                         (grad_embedding.tail(rows).array() / (n * std.array()));
  grad.colwise() += grad_embedding.head(rows) / n;
  return grad;
}

double attention_penalty(const Eigen::MatrixXd& weights) {
  const Eigen::Index d = weights.cols();
  const Eigen::MatrixXd gram = weights.transpose() * weights - Eigen::MatrixXd::Identity(d, d);
  return gram.squaredNorm();
}

Eigen::MatrixXd attention_penalty_grad(const Eigen::MatrixXd& weights) {
  const Eigen::Index d = weights.cols();
  const Eigen::MatrixXd gram = weights.transpose() * weights - Eigen::MatrixXd::Identity(d, d);
  return 4.0 * weights * gram;
}

}  // namespace sasn
