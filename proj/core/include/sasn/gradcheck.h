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

#ifndef SASN_GRADCHECK_H_
#define SASN_GRADCHECK_H_

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sasn/parameters.h"
#include "sasn/rng.h"

namespace sasn {

struct GradientProbe {
  std::string tensor;
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradientProbe> probes;
  double max_relative_error = 0.0;

  bool empty() const { return probes.empty(); }
  const GradientProbe* worst() const;
};

/// |a - n| / max(|a|, |n|, 1e-12).
double relative_error(double analytic, double numeric);

/// Compares the gradients already stored in `params` against central
/// differences (loss(p + eps) - loss(p - eps)) / (2 eps) on `n_probe`
/// coordinates. Each probe picks a tensor uniformly, then a coordinate
/// within it. Values are restored before returning.
GradCheckReport finite_diff_check(
    const std::function<double(const ParameterStore&)>& loss_fn,
    ParameterStore& params, double eps, std::size_t n_probe, Rng& rng);

/// Same check for a free matrix argument (e.g. a layer input).
GradCheckReport finite_diff_check(
    const std::function<double(const Eigen::MatrixXd&)>& loss_fn,
    Eigen::MatrixXd& x, const Eigen::MatrixXd& analytic, double eps,
    std::size_t n_probe, Rng& rng);

}  // namespace sasn

#endif  // SASN_GRADCHECK_H_
