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

#ifndef SASN_METRICS_H_
#define SASN_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace sasn {

struct TrialScoreSet {
  std::vector<double> target;
  std::vector<double> impostor;

  /// Throws if either list is empty or holds a non-finite score.
  void validate() const;
};

/// One operating point. A trial is accepted iff score >= threshold.
struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  // accepted impostors / impostors
  double frr = 0.0;  // rejected targets / targets
  double tpr = 0.0;  // 1 - frr
  std::size_t accepted_impostors = 0;
  std::size_t rejected_targets = 0;
};

/// Operating points for thresholds -inf, the midpoints between consecutive
/// distinct scores, and +inf, in increasing threshold order (so FAR and TPR
/// are non-increasing along the curve).
std::vector<RocPoint> roc_points(const TrialScoreSet& scores);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Point minimizing |FAR - FRR| (ties go to smaller FAR + FRR); returns
/// (FAR + FRR) / 2 there. The comparison uses exact integer counts, so
/// equal rates tie even when their floating-point differences do not.
EerResult equal_error_rate(const TrialScoreSet& scores);
inline double eer(const TrialScoreSet& scores) { return equal_error_rate(scores).eer; }

inline constexpr double kDefaultTargetPrior = 0.01;

/// min over operating points of p FRR + (1 - p) FAR.
double min_dcf(const TrialScoreSet& scores, double p_target = kDefaultTargetPrior);

/// Trapezoidal area under (FAR, TPR).
double auc(const TrialScoreSet& scores);

/// Fraction of (target, impostor) pairs ordered correctly, ties count 1/2.
/// Quadratic; used as an independent check of auc().
double auc_pairwise_oracle(const TrialScoreSet& scores);

struct MetricReport {
  double eer = 0.0;
  double min_dcf = 0.0;
  double auc = 0.0;
  double eer_threshold = 0.0;
};

MetricReport compute_metrics(const TrialScoreSet& scores,
                             double p_target = kDefaultTargetPrior);

/// "EER=<r> minDCF=<r> AUC=<r>", six decimals, rates in [0, 1].
std::string format_report(const MetricReport& report);

// Score file: one "label\tscore" line per trial, label in {target, impostor}.
void write_score_file(const std::filesystem::path& path, const TrialScoreSet& scores);
TrialScoreSet read_score_file(const std::filesystem::path& path);

}  // namespace sasn

#endif  // SASN_METRICS_H_
