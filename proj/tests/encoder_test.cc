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

#include <gtest/gtest.h>

#include <vector>

#include "sasn/error.h"
#include "sasn/gradcheck.h"
#include "sasn/parameters.h"
#include "grad_test_util.h"
#include "test_util.h"

namespace sasn {
namespace {

using testing::random_normal;

ParameterStore random_params(std::uint64_t seed, bool random_biases = true) {
  Rng rng(seed);
  ParameterStore p = init_parameters(8, 2, rng);
  if (random_biases)
    for (int l = 0; l < 3; ++l)
      for (Eigen::Index i = 0; i < p.tdnn_bias(l).size(); ++i)
        p.tdnn_bias(l).value.data()[i] = 0.1 * rng.normal();
  return p;
}

// Straight loops over the layer definitions, no splice helper.
Eigen::MatrixXd oracle_tdnn(const Eigen::MatrixXd& x, const ParameterStore& p) {
  const std::vector<std::vector<int>> offsets = {{-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}};
  Eigen::MatrixXd in = x;
  for (int l = 0; l < 3; ++l) {
    const int lo = -offsets[l].front(), hi = offsets[l].back();
    const Eigen::Index cols = in.cols() - lo - hi;
    Eigen::MatrixXd out(512, cols);
    const Eigen::MatrixXd& w = p.tdnn_weight(l).value;
    for (Eigen::Index t = 0; t < cols; ++t)
      for (int r = 0; r < 512; ++r) {
        double acc = p.tdnn_bias(l).value(r, 0);
        for (std::size_t o = 0; o < offsets[l].size(); ++o)
          for (Eigen::Index d = 0; d < in.rows(); ++d)
            acc += w(r, static_cast<Eigen::Index>(o) * in.rows() + d) * in(d, t + lo + offsets[l][o]);
        out(r, t) = std::max(acc, 0.0);
      }
    in = out;
  }
  return in;
}

TEST(TdnnConfig, LayersAndReceptiveFields) {
  const TdnnConfig& c = TdnnConfig::standard();
  EXPECT_EQ(c.layers[0].spliced_dim(), 200);
  EXPECT_EQ(c.layers[1].spliced_dim(), 1536);
  EXPECT_EQ(c.layers[2].spliced_dim(), 1536);
  EXPECT_EQ(c.receptive_field(1), 5);
  EXPECT_EQ(c.receptive_field(2), 9);
  EXPECT_EQ(c.receptive_field(3), 15);
}

TEST(Splice, WidthAndRows) {
  Rng rng(1);
  const std::vector<int> wide = {-2, 0, 2};
  EXPECT_EQ(splice(random_normal(3, 9, rng), wide).cols(), 5);
  const std::vector<int> ctx = {-2, -1, 0, 1, 2};
  const Eigen::MatrixXd s = splice(random_normal(40, 10, rng), ctx);
  EXPECT_EQ(s.rows(), 200);
  EXPECT_EQ(s.cols(), 6);
}

TEST(Splice, SingleZeroOffsetIsIdentity) {
  Rng rng(2);
  const Eigen::MatrixXd x = random_normal(5, 7, rng);
  const std::vector<int> id = {0};
  EXPECT_EQ(splice(x, id), x);
}

TEST(Splice, StacksOffsetColumns) {
  Rng rng(3);
  const Eigen::MatrixXd x = random_normal(4, 12, rng);
  const std::vector<int> offs = {-3, 0, 3};
  const Eigen::MatrixXd s = splice(x, offs);
  for (Eigen::Index t = 0; t < s.cols(); ++t)
    for (int o = 0; o < 3; ++o)
      EXPECT_EQ(s.block(4 * o, t, 4, 1), x.col(t + 3 * o));
}

TEST(Splice, TooShortInputIsAnError) {
  Rng rng(4);
  const std::vector<int> offs = {-2, 0, 2};
  EXPECT_THROW(splice(random_normal(2, 4, rng), offs), Error);
}

TEST(Splice, BackwardIsTheAdjoint) {
  Rng rng(5);
  const std::vector<int> offs = {-2, 0, 2};
  const Eigen::MatrixXd x = random_normal(6, 11, rng);
  const Eigen::MatrixXd g = random_normal(18, 7, rng);
  const double lhs = (splice(x, offs).array() * g.array()).sum();
  const double rhs = (x.array() * splice_backward(g, offs, 11).array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST(TdnnForward, OutputWidthIsInputMinusFourteen) {
  const ParameterStore p = random_params(6);
  Rng rng(6);
  for (int t = 15; t <= 60; ++t) {
    const Eigen::MatrixXd h = tdnn_forward(FeatureMatrix(random_normal(40, t, rng)), p);
    EXPECT_EQ(h.rows(), 512);
    EXPECT_EQ(h.cols(), t - 14) << t;
  }
  EXPECT_EQ(tdnn_forward(FeatureMatrix(random_normal(40, 180, rng)), p).cols(), 166);
}

TEST(TdnnForward, BelowReceptiveFieldIsAnError) {
  const ParameterStore p = random_params(7);
  Rng rng(7);
  try {
    tdnn_forward(FeatureMatrix(random_normal(40, 14, rng)), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("input below receptive field"), std::string::npos);
  }
}

TEST(TdnnForward, MatchesLoopOracleAndIsNonNegative) {
  const ParameterStore p = random_params(8);
  Rng rng(8);
  const Eigen::MatrixXd x = random_normal(40, 24, rng);
  const Eigen::MatrixXd h = tdnn_forward(x, p);
  const Eigen::MatrixXd expect = oracle_tdnn(x, p);
  ASSERT_EQ(h.cols(), expect.cols());
  EXPECT_LE((h - expect).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GE(h.minCoeff(), 0.0);
}

TEST(TdnnForward, ZeroInputZeroBiasesGivesZero) {
  const ParameterStore p = random_params(9, /*random_biases=*/false);
  const Eigen::MatrixXd h = tdnn_forward(FeatureMatrix(Eigen::MatrixXd::Zero(40, 30)), p);
  EXPECT_TRUE(h.isZero(0.0));
}

TEST(TdnnForward, TranslationEquivariant) {
  const ParameterStore p = random_params(10);
  Rng rng(10);
  const Eigen::MatrixXd x = random_normal(40, 50, rng);
  const Eigen::MatrixXd h = tdnn_forward(x, p);
  for (int k : {1, 3, 10}) {
    const Eigen::MatrixXd hk = tdnn_forward(Eigen::MatrixXd(x.rightCols(50 - k)), p);
    EXPECT_LE((hk - h.rightCols(hk.cols())).cwiseAbs().maxCoeff(), 1e-12) << k;
  }
}

// Scalar readout sum(R .* H) for gradient checks.
struct Readout {
  Eigen::MatrixXd weights;
  double operator()(const Eigen::MatrixXd& h) const { return (weights.array() * h.array()).sum(); }
};

TEST(TdnnBackward, InputGradientMatchesFiniteDifferences) {
  ParameterStore p = random_params(11);
  Rng rng(11);
  Eigen::MatrixXd x = random_normal(40, 20, rng);
  TdnnCache cache;
  const Eigen::MatrixXd h = tdnn_forward(x, p, &cache);
  const Readout readout{random_normal(h.rows(), h.cols(), rng)};
  p.zero_grad();
  const Eigen::MatrixXd grad_x = tdnn_backward(cache, readout.weights, p);
  const GradCheckReport r = finite_diff_check(
      [&](const Eigen::MatrixXd& in) { return readout(tdnn_forward(in, p)); }, x, grad_x, 1e-5,
      200, rng);
  EXPECT_LT(r.max_relative_error, 1e-5) << r.worst()->index;
}

TEST(TdnnBackward, ParameterGradientsMatchFiniteDifferences) {
  ParameterStore p = random_params(12);
  Rng rng(12);
  const Eigen::MatrixXd x = random_normal(40, 20, rng);
  TdnnCache cache;
  const Eigen::MatrixXd h = tdnn_forward(x, p, &cache);
  const Readout readout{random_normal(h.rows(), h.cols(), rng)};
  p.zero_grad();
  tdnn_backward(cache, readout.weights, p);
  const GradCheckReport r = finite_diff_check(
      [&](const ParameterStore& q) { return readout(tdnn_forward(x, q)); }, p, 1e-5, 200, rng);
  const testing::KinkFilteredReport f =
      testing::filter_kinks(r, 1e-5, testing::param_slot(p), [&] {
        TdnnCache c;
        tdnn_forward(x, p, &c);
        testing::ReluPattern pattern;
        for (const Eigen::MatrixXd& a : c.activation) testing::append_pattern(pattern, a);
        return pattern;
      });
  EXPECT_LT(f.max_smooth_error, 1e-5) << f.worst;
  EXPECT_LE(f.kinks, 10u);
}

TEST(TdnnBackward, FrozenBiasesGetNoGradient) {
  ParameterStore p = random_params(13);
  Rng rng(13);
  TdnnCache cache;
  const Eigen::MatrixXd h = tdnn_forward(random_normal(40, 20, rng), p, &cache);
  p.zero_grad();
  tdnn_backward(cache, Eigen::MatrixXd::Ones(h.rows(), h.cols()), p, /*train_biases=*/false);
  for (int l = 0; l < 3; ++l) {
    EXPECT_TRUE(p.tdnn_bias(l).grad.isZero(0.0));
    EXPECT_FALSE(p.tdnn_weight(l).grad.isZero(0.0));
  }
}

TEST(ParamCount, ClosedFormValues) {
  EXPECT_EQ(param_count(512, 5, true), 102400 + 786432 * 2 + 512 * 3 + 512 * 512 + 512 * 5 + 512 + 2);
  EXPECT_EQ(param_count(512, 5, true), 1942018);
  EXPECT_EQ(param_count(512, 5, false), 1940482);
}

TEST(ParamCount, MatchesStoreSize) {
  for (auto [da, dr] : {std::pair{512, 5}, {512, 10}, {512, 20}, {16, 3}, {1, 1}}) {
    const ParameterStore p(da, dr);
    EXPECT_EQ(param_count(da, dr, true), p.size(true));
    EXPECT_EQ(param_count(da, dr, false), p.size(false));
    EXPECT_EQ(p.size(true) - p.size(false), 1536);
  }
}

}  // namespace
}  // namespace sasn
