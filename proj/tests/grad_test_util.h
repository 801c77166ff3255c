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


#ifndef SASN_TESTS_GRAD_TEST_UTIL_H_
#define SASN_TESTS_GRAD_TEST_UTIL_H_

#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sasn/gradcheck.h"
#include "sasn/parameters.h"

namespace sasn::testing {

/// Sign pattern of every ReLU input in a forward pass.
using ReluPattern = std::vector<bool>;

/// Central differences are only meaningful where the loss is smooth over
/// [p - eps, p + eps]. A probe whose ReLU pattern differs at either end
/// straddles a kink; those are set aside and counted.
struct KinkFilteredReport {
  double max_smooth_error = 0.0;
  std::size_t smooth = 0;
  std::size_t kinks = 0;
  std::string worst;
};

/// `slot` maps a probe to the scalar it perturbed; `pattern` re-runs the
/// forward pass on the current state.
inline KinkFilteredReport filter_kinks(const GradCheckReport& report, double eps,
                                       const std::function<double&(const GradientProbe&)>& slot,
                                       const std::function<ReluPattern()>& pattern) {
  KinkFilteredReport out;
  const ReluPattern base = pattern();
  for (const GradientProbe& probe : report.probes) {
    double& v = slot(probe);
    const double saved = v;
    v = saved + eps;
    const bool kink_plus = pattern() != base;
    v = saved - eps;
    const bool kink_minus = pattern() != base;
    v = saved;
    if (kink_plus || kink_minus) {
      ++out.kinks;
      continue;
    }
    ++out.smooth;
    if (probe.relative_error >= out.max_smooth_error) {
      out.max_smooth_error = probe.relative_error;
      std::ostringstream s;
      s.precision(17);
      s << probe.tensor << '[' << probe.index << "] analytic=" << probe.analytic
        << " numeric=" << probe.numeric;
      out.worst = s.str();
    }
  }
  return out;
}

inline std::function<double&(const GradientProbe&)> param_slot(ParameterStore& params) {
  return [&params](const GradientProbe& probe) -> double& {
    for (Tensor& t : params.tensors())
      if (t.name == probe.tensor) return t.value.data()[probe.index];
    throw std::out_of_range(probe.tensor);
  };
}

inline std::function<double&(const GradientProbe&)> matrix_slot(Eigen::MatrixXd& x) {
  return [&x](const GradientProbe& probe) -> double& { return x.data()[probe.index]; };
}

template <typename Matrix>
void append_pattern(ReluPattern& out, const Matrix& pre_activation) {
  for (Eigen::Index i = 0; i < pre_activation.size(); ++i)
    out.push_back(pre_activation.data()[i] > 0.0);
}

}  // namespace sasn::testing

#endif  // SASN_TESTS_GRAD_TEST_UTIL_H_
