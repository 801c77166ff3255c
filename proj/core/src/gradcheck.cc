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

#include "sasn/gradcheck.h"

#include <algorithm>
#include <cmath>

namespace sasn {

const GradientProbe* GradCheckReport::worst() const {
  if (probes.empty()) return nullptr;
  return &*std::max_element(probes.begin(), probes.end(),
                            [](const GradientProbe& a, const GradientProbe& b) {
                              return a.relative_error < b.relative_error;
                            });
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

namespace {

template <typename Loss>
GradientProbe probe_coordinate(const Loss& loss, double& slot, double analytic,
                               double eps) {
  const double saved = slot;
  slot = saved + eps;
  const double plus = loss();
  slot = saved - eps;
  const double minus = loss();
  slot = saved;
  GradientProbe probe;
  probe.analytic = analytic;
  probe.numeric = (plus - minus) / (2.0 * eps);
  probe.relative_error = relative_error(probe.analytic, probe.numeric);
  return probe;
}

void record(GradCheckReport& report, GradientProbe probe) {
  report.max_relative_error = std::max(report.max_relative_error, probe.relative_error);
  report.probes.push_back(std::move(probe));
}

}  // namespace

GradCheckReport finite_diff_check(
    const std::function<double(const ParameterStore&)>& loss_fn,
    ParameterStore& params, double eps, std::size_t n_probe, Rng& rng) {
  GradCheckReport report;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < params.tensors().size(); ++i)
    if (params.tensors()[i].size() > 0) candidates.push_back(i);
  if (candidates.empty()) return report;

  for (std::size_t p = 0; p < n_probe; ++p) {
    Tensor& t = params.tensors()[candidates[rng.index(candidates.size())]];
    const auto idx = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(t.size())));
    GradientProbe probe = probe_coordinate([&] { return loss_fn(params); },
                                           t.value.data()[idx], t.grad.data()[idx], eps);
    probe.tensor = t.name;
    probe.index = idx;
    record(report, std::move(probe));
  }
  return report;
}

GradCheckReport finite_diff_check(
    const std::function<double(const Eigen::MatrixXd&)>& loss_fn,
    Eigen::MatrixXd& x, const Eigen::MatrixXd& analytic, double eps,
    std::size_t n_probe, Rng& rng) {
  GradCheckReport report;
  if (x.size() == 0) return report;
  for (std::size_t p = 0; p < n_probe; ++p) {
    const auto idx = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(x.size())));
    GradientProbe probe = probe_coordinate([&] { return loss_fn(x); }, x.data()[idx],
                                           analytic.data()[idx], eps);
    probe.tensor = "input";
    probe.index = idx;
    record(report, std::move(probe));
  }
  return report;
}

}  // namespace sasn
