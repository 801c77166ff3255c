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

#include "sasn/metrics.h"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "sasn/error.h"

namespace sasn {

void TrialScoreSet::validate() const {
  if (target.empty()) throw Error("no target trials");
  if (impostor.empty()) throw Error("no impostor trials");
  auto finite = [](double s) { return std::isfinite(s); };
  if (!std::all_of(target.begin(), target.end(), finite) ||
      !std::all_of(impostor.begin(), impostor.end(), finite))
    throw Error("non-finite trial score");
}

std::vector<RocPoint> roc_points(const TrialScoreSet& scores) {
  scores.validate();
  // (score, is_target), ascending by score.
  std::vector<std::pair<double, bool>> trials;
  trials.reserve(scores.target.size() + scores.impostor.size());
  for (double s : scores.target) trials.emplace_back(s, true);
  for (double s : scores.impostor) trials.emplace_back(s, false);
  std::sort(trials.begin(), trials.end());

  const double n_target = static_cast<double>(scores.target.size());
  const double n_impostor = static_cast<double>(scores.impostor.size());
  std::size_t rejected_targets = 0, rejected_impostors = 0;
  auto point = [&](double threshold) {
    RocPoint p;
    p.threshold = threshold;
    p.far = static_cast<double>(scores.impostor.size() - rejected_impostors) / n_impostor;
    p.frr = static_cast<double>(rejected_targets) / n_target;
    p.tpr = 1.0 - p.frr;
    p.accepted_impostors = scores.impostor.size() - rejected_impostors;
    p.rejected_targets = rejected_targets;
    return p;
  };

  std::vector<RocPoint> curve;
  curve.push_back(point(-std::numeric_limits<double>::infinity()));
  std::size_t i = 0;
  while (i < trials.size()) {
    // Raise the threshold past every trial tied at this score.
    const double score = trials[i].first;
    for (; i < trials.size() && trials[i].first == score; ++i)
      ++(trials[i].second ? rejected_targets : rejected_impostors);
    const double threshold = i < trials.size() ? 0.5 * (score + trials[i].first)
                                               : std::numeric_limits<double>::infinity();
    curve.push_back(point(threshold));
  }
  return curve;
}

EerResult equal_error_rate(const TrialScoreSet& scores) {
  const std::vector<RocPoint> curve = roc_points(scores);
  // FAR and FRR scaled by n_target * n_impostor.
  const auto n_t = static_cast<std::int64_t>(scores.target.size());
  const auto n_i = static_cast<std::int64_t>(scores.impostor.size());
  auto far_scaled = [&](const RocPoint& p) { return static_cast<std::int64_t>(p.accepted_impostors) * n_t; };
  auto frr_scaled = [&](const RocPoint& p) { return static_cast<std::int64_t>(p.rejected_targets) * n_i; };
  const RocPoint* best = &curve.front();
  for (const RocPoint& p : curve) {
    const std::int64_t gap = std::abs(far_scaled(p) - frr_scaled(p));
    const std::int64_t best_gap = std::abs(far_scaled(*best) - frr_scaled(*best));
    if (gap < best_gap ||
        (gap == best_gap && far_scaled(p) + frr_scaled(p) < far_scaled(*best) + frr_scaled(*best)))
      best = &p;
  }
  return {(best->far + best->frr) / 2.0, best->threshold};
}

double min_dcf(const TrialScoreSet& scores, double p_target) {
  double best = std::numeric_limits<double>::infinity();
  for (const RocPoint& p : roc_points(scores))
    best = std::min(best, p_target * p.frr + (1.0 - p_target) * p.far);
  return best;
}

double auc(const TrialScoreSet& scores) {
  const std::vector<RocPoint> curve = roc_points(scores);
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    area += (curve[k - 1].far - curve[k].far) * 0.5 * (curve[k - 1].tpr + curve[k].tpr);
  return area;
}

double auc_pairwise_oracle(const TrialScoreSet& scores) {
  scores.validate();
  double wins = 0.0;
  for (double t : scores.target)
    for (double s : scores.impostor) wins += t > s ? 1.0 : (t == s ? 0.5 : 0.0);
  return wins / (static_cast<double>(scores.target.size()) * scores.impostor.size());
}

MetricReport compute_metrics(const TrialScoreSet& scores, double p_target) {
  MetricReport report;
  const EerResult e = equal_error_rate(scores);
  report.eer = e.eer;
  report.eer_threshold = e.threshold;
  report.min_dcf = min_dcf(scores, p_target);
  report.auc = auc(scores);
  return report;
}

std::string format_report(const MetricReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "EER=%.6f minDCF=%.6f AUC=%.6f", report.eer, report.min_dcf,
                report.auc);
  return buf;
}

void write_score_file(const std::filesystem::path& path, const TrialScoreSet& scores) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write score file: " + path.string());
  char buf[64];
  auto line = [&](const char* label, double s) {
    std::snprintf(buf, sizeof(buf), "%.17g", s);
    out << label << '\t' << buf << '\n';
  };
  for (double s : scores.target) line("target", s);
  for (double s : scores.impostor) line("impostor", s);
  if (!out) throw Error("failed writing score file: " + path.string());
}

TrialScoreSet read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open score file: " + path.string());
  TrialScoreSet scores;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected label<TAB>score");
    const std::string label = line.substr(0, tab);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(line.substr(tab + 1), &used);
      if (tab + 1 + used != line.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad score");
    }
    if (label == "target")
      scores.target.push_back(value);
    else if (label == "impostor")
      scores.impostor.push_back(value);
    else
      throw Error(path.string() + ":" + std::to_string(lineno) + ": unknown label '" + label + "'");
  }
  return scores;
}

}  // namespace sasn
