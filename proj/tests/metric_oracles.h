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


#ifndef SASN_TESTS_METRIC_ORACLES_H_
#define SASN_TESTS_METRIC_ORACLES_H_

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "sasn/metrics.h"
#include "sasn/rng.h"

namespace sasn::testing {

struct SweepResult {
  double eer = 0.0;
  double min_dcf = 0.0;
};

/// Tries every threshold between any two scores (not just neighbours)
/// plus +-infinity, counting accepts directly.
inline SweepResult threshold_sweep_oracle(const TrialScoreSet& s, double p_target = 0.01) {
  std::vector<double> all = s.target;
  all.insert(all.end(), s.impostor.begin(), s.impostor.end());
  std::vector<double> thresholds = {-std::numeric_limits<double>::infinity(),
                                    std::numeric_limits<double>::infinity()};
  for (double a : all)
    for (double b : all)
      if (a < b) thresholds.push_back(a + (b - a) / 2.0);

  // Rates are compared as exact fractions over n_target * n_impostor.
  const long long nt = static_cast<long long>(s.target.size());
  const long long ni = static_cast<long long>(s.impostor.size());
  SweepResult out;
  long long best_gap = 2 * nt * ni + 1, best_sum = 0;
  double best_far = 0.0, best_frr = 0.0;
  out.min_dcf = 1.0;
  for (double t : thresholds) {
    int accepted_impostors = 0, rejected_targets = 0;
    for (double x : s.impostor) accepted_impostors += x >= t;
    for (double x : s.target) rejected_targets += x < t;
    const double far = static_cast<double>(accepted_impostors) / static_cast<double>(s.impostor.size());
    const double frr = static_cast<double>(rejected_targets) / static_cast<double>(s.target.size());
    const long long far_n = accepted_impostors * nt, frr_n = rejected_targets * ni;
    const long long gap = std::llabs(far_n - frr_n), sum = far_n + frr_n;
    if (gap < best_gap || (gap == best_gap && sum < best_sum)) {
      best_gap = gap;
      best_sum = sum;
      best_far = far;
      best_frr = frr;
    }
    out.min_dcf = std::min(out.min_dcf, p_target * frr + (1.0 - p_target) * far);
  }
  out.eer = (best_far + best_frr) / 2.0;
  return out;
}

/// Random set of 2..20 trials (at least one per side) drawn from two
/// overlapping normals; distinct unless `distinct` is false.
inline TrialScoreSet random_trial_set(Rng& rng, bool distinct = true) {
  TrialScoreSet s;
  const std::size_t n = 2 + rng.index(19);
  const std::size_t nt = 1 + rng.index(n - 1), ni = n - nt;
  const double shift = rng.uniform(-1.0, 3.0);
  auto draw = [&](double mean) {
    // Coarse grid when ties are wanted.
    const double x = mean + rng.normal();
    return distinct ? x : std::round(2.0 * x) / 2.0;
  };
  for (std::size_t i = 0; i < nt; ++i) s.target.push_back(draw(shift));
  for (std::size_t i = 0; i < ni; ++i) s.impostor.push_back(draw(0.0));
  return s;
}

}  // namespace sasn::testing

#endif  // SASN_TESTS_METRIC_ORACLES_H_
