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


#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <fstream>
#include <iterator>
#include <set>

#include "sasn/error.h"
#include "sasn/gradcheck.h"
#include "sasn/parameters.h"
#include "sasn/rng.h"
#include "test_util.h"

namespace sasn {
namespace {

// ----- Rng ------------------------------------------------------------------

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    differs |= x != c.uniform();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, RangesAndMoments) {
  Rng rng(1);
  double sum = 0.0, sq = 0.0;
  std::set<std::size_t> seen;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const std::size_t k = rng.index(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

// ----- init_parameters ------------------------------------------------------

TEST(InitParameters, ShapesFollowDimensions) {
  Rng rng(1);
  const ParameterStore p = init_parameters(512, 5, rng);
  const std::pair<const char*, std::pair<int, int>> expected[] = {
      {"tdnn1_w", {512, 200}}, {"tdnn1_b", {512, 1}},   {"tdnn2_w", {512, 1536}},
      {"tdnn2_b", {512, 1}},   {"tdnn3_w", {512, 1536}}, {"tdnn3_b", {512, 1}},
      {"attn_w1", {512, 512}}, {"attn_w2", {512, 5}},    {"attn_w3", {512, 1}},
      {"sim_w", {1, 1}},       {"sim_b", {1, 1}}};
  ASSERT_EQ(p.tensors().size(), std::size(expected));
  for (std::size_t i = 0; i < std::size(expected); ++i) {
    const Tensor& t = p.tensors()[i];
    EXPECT_EQ(t.name, expected[i].first);
    EXPECT_EQ(t.value.rows(), expected[i].second.first) << t.name;
    EXPECT_EQ(t.value.cols(), expected[i].second.second) << t.name;
    EXPECT_EQ(t.grad.rows(), t.value.rows());
    EXPECT_EQ(t.grad.cols(), t.value.cols());
  }
}

TEST(InitParameters, GlorotBoundsZeroBiasesAndSimulationScalars) {
  Rng rng(2);
  const ParameterStore p = init_parameters(16, 3, rng);
  EXPECT_EQ(p.sim_w(), 10.0);
  EXPECT_EQ(p.sim_b(), -5.0);
  for (const Tensor& t : p.tensors()) {
    if (t.name.starts_with("sim_")) continue;
    if (t.is_bias) {
      EXPECT_TRUE(t.value.isZero(0.0)) << t.name;
      continue;
    }
    const double s = std::sqrt(6.0 / static_cast<double>(t.value.rows() + t.value.cols()));
    EXPECT_LE(t.value.cwiseAbs().maxCoeff(), s) << t.name;
    // Roughly uniform: the largest magnitude gets close to the bound.
    EXPECT_GT(t.value.cwiseAbs().maxCoeff(), 0.9 * s) << t.name;
  }
}

TEST(InitParameters, DeterministicPerSeed) {
  Rng a(7), b(7), c(8);
  const ParameterStore pa = init_parameters(16, 3, a);
  EXPECT_TRUE(pa.same_values(init_parameters(16, 3, b)));
  EXPECT_FALSE(pa.same_values(init_parameters(16, 3, c)));
}

TEST(InitParameters, TinyAttentionDimensionsAreInitialized) {
  Rng rng(3);
  const ParameterStore p = init_parameters(1, 1, rng);
  EXPECT_NE(p.attn_w2().value(0, 0), 0.0);
}

TEST(InitParameters, RejectsNonPositiveDimensions) {
  Rng rng(1);
  EXPECT_THROW(init_parameters(0, 5, rng), Error);
  EXPECT_THROW(init_parameters(16, -1, rng), Error);
}

// ----- sgd_step -------------------------------------------------------------

TEST(SgdStep, Arithmetic) {
  ParameterStore p(4, 2);
  p.sim_w() = 10.0;
  p.attn_w1().value(0, 0) = 1.0;
  p.attn_w1().grad(0, 0) = 0.5;
  sgd_step(p, 0.01);
  EXPECT_EQ(p.attn_w1().value(0, 0), 0.995);
}

TEST(SgdStep, ZeroGradientIsIdentity) {
  Rng rng(4);
  ParameterStore p = init_parameters(8, 2, rng);
  const ParameterStore before = p;
  p.zero_grad();
  sgd_step(p, 0.01);
  EXPECT_TRUE(p.same_values(before));
}

TEST(SgdStep, ClampsSimWeight) {
  ParameterStore p(4, 2);
  p.sim_w() = 0.1;
  p.sim_w_grad() = 30.0;  // 0.1 - 0.01 * 30 = -0.2
  sgd_step(p, 0.01);
  EXPECT_EQ(p.sim_w(), 1e-6);
}

TEST(SgdStep, SimWeightStaysPositiveUnderRandomUpdates) {
  Rng rng(5);
  ParameterStore p = init_parameters(4, 2, rng);
  for (int i = 0; i < 200; ++i) {
    p.sim_w_grad() = rng.normal() * 500.0;
    sgd_step(p, 0.01);
    ASSERT_GT(p.sim_w(), 0.0);
  }
}

TEST(SgdStep, StepThenNegativeStepRestores) {
  Rng rng(6);
  ParameterStore p = init_parameters(8, 3, rng);
  p.sim_w() = 50.0;  // far from the clamp
  const ParameterStore before = p;
  for (Tensor& t : p.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) t.grad.data()[i] = rng.normal();
  sgd_step(p, 0.01);
  sgd_step(p, -0.01);
  for (std::size_t i = 0; i < p.tensors().size(); ++i)
    EXPECT_LE((p.tensors()[i].value - before.tensors()[i].value).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SgdStep, NonFiniteGradientNamesTensorAndUpdatesNothing) {
  Rng rng(7);
  ParameterStore p = init_parameters(8, 3, rng);
  for (Tensor& t : p.tensors()) t.grad.setConstant(1.0);
  p.attn_w2().grad(1, 1) = std::numeric_limits<double>::infinity();
  const ParameterStore before = p;
  try {
    sgd_step(p, 0.1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("attn_w2"), std::string::npos);
  }
  EXPECT_TRUE(p.same_values(before));
}

// ----- finite_diff_check ----------------------------------------------------

TEST(FiniteDiffCheck, RelativeErrorDefinition) {
  EXPECT_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-13), 1e-13 / 1e-12);
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
}

// Sum of p^2 over ~1.6M scalars is ~2000, whose double ulp alone would put
// ~1e-8 of noise on each central difference. Accumulating in long double
// and returning the offset from the starting value keeps the loss exact
// enough for the quadratic to show its O(eps^2) truncation error only.
long double sum_of_squares(const ParameterStore& s) {
  long double sum = 0.0L;
  for (const Tensor& t : s.tensors())
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const long double v = t.value.data()[i];
      sum += v * v;
    }
  return sum;
}

TEST(FiniteDiffCheck, SumOfSquaresIsExact) {
  Rng rng(8);
  ParameterStore p = init_parameters(8, 2, rng);
  for (Tensor& t : p.tensors()) t.grad = 2.0 * t.value;
  const long double base = sum_of_squares(p);
  auto loss = [base](const ParameterStore& s) {
    return static_cast<double>(sum_of_squares(s) - base);
  };
  const ParameterStore before = p;
  const GradCheckReport r = finite_diff_check(loss, p, 1e-5, 300, rng);
  EXPECT_EQ(r.probes.size(), 300u);
  EXPECT_LT(r.max_relative_error, 1e-8);
  EXPECT_TRUE(p.same_values(before));  // probes restore values
}

TEST(FiniteDiffCheck, DetectsAWrongGradient) {
  Rng rng(9);
  ParameterStore p = init_parameters(4, 2, rng);
  for (Tensor& t : p.tensors()) t.grad = 3.0 * t.value;  // should be 2x
  const GradCheckReport r = finite_diff_check(
      [](const ParameterStore& s) {
        double sum = 0.0;
        for (const Tensor& t : s.tensors()) sum += t.value.squaredNorm();
        return sum;
      },
      p, 1e-5, 50, rng);
  EXPECT_GT(r.max_relative_error, 0.3);
  ASSERT_NE(r.worst(), nullptr);
}

TEST(FiniteDiffCheck, ZeroProbesGiveEmptyReport) {
  Rng rng(10);
  ParameterStore p = init_parameters(4, 2, rng);
  const GradCheckReport r =
      finite_diff_check([](const ParameterStore&) { return 0.0; }, p, 1e-5, 0, rng);
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.worst(), nullptr);
  EXPECT_EQ(r.max_relative_error, 0.0);

  Eigen::MatrixXd x(0, 0);
  EXPECT_TRUE(finite_diff_check([](const Eigen::MatrixXd&) { return 0.0; }, x, x, 1e-5, 10, rng)
                  .empty());
}

TEST(FiniteDiffCheck, MatrixOverload) {
  Rng rng(11);
  Eigen::MatrixXd x = testing::random_normal(3, 4, rng);
  const Eigen::MatrixXd analytic = x.array().cos().matrix();
  const GradCheckReport r = finite_diff_check(
      [](const Eigen::MatrixXd& m) { return m.array().sin().sum(); }, x, analytic, 1e-5, 40, rng);
  EXPECT_LT(r.max_relative_error, 1e-8);
}

// ----- checkpoints ----------------------------------------------------------

TEST(Checkpoint, RoundTripIsByteIdentical) {
  Rng rng(12);
  const ParameterStore p = init_parameters(16, 3, rng);
  const std::string bytes = serialize_checkpoint(p);
  const ParameterStore q = deserialize_checkpoint(bytes);
  EXPECT_TRUE(q.same_values(p));
  EXPECT_EQ(serialize_checkpoint(q), bytes);

  testing::TempDir dir;
  save_checkpoint(dir / "a.ckpt", p);
  save_checkpoint(dir / "b.ckpt", load_checkpoint(dir / "a.ckpt"));
  std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
            std::string(std::istreambuf_iterator<char>(b), {}));
}

TEST(Checkpoint, LayoutIsHeaderThenRowMajorTensors) {
  ParameterStore p(2, 3);
  p.sim_w() = 1.5;
  p.tdnn_weight(0).value(0, 1) = 0.25;  // second value written
  const std::string bytes = serialize_checkpoint(p);
  EXPECT_EQ(bytes.substr(0, 4), "SASN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes.substr(5, 4), std::string("\x02\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(9, 4), std::string("\x03\x00\x00\x00", 4));
  EXPECT_EQ(bytes.size(), 13u + 8u * static_cast<std::size_t>(p.size()));
  double v;
  std::memcpy(&v, bytes.data() + 13 + 8, 8);  // little-endian host
  EXPECT_EQ(v, 0.25);
}

TEST(Checkpoint, RejectsCorruptInput) {
  Rng rng(13);
  const std::string good = serialize_checkpoint(init_parameters(4, 2, rng));
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bad), Error);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(deserialize_checkpoint(bad), Error);
  EXPECT_THROW(deserialize_checkpoint(good.substr(0, good.size() - 1)), Error);
  EXPECT_THROW(deserialize_checkpoint(good + "x"), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt"), Error);
}

}  // namespace
}  // namespace sasn
