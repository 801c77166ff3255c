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

#ifndef SASN_TRAINER_H_
#define SASN_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sasn/attention_pool.h"
#include "sasn/features.h"
#include "sasn/metrics.h"
#include "sasn/model.h"
#include "sasn/parameters.h"
#include "sasn/rng.h"

namespace sasn {

struct ManifestEntry {
  std::string speaker;
  std::filesystem::path path;
};

/// Utterance list, JSON-lines on disk: {"speaker": "<id>", "path": "<wav>"}.
/// Relative paths are resolved against the manifest's directory.
class Manifest {
 public:
  Manifest() = default;
  /// Throws on duplicate paths.
  explicit Manifest(std::vector<ManifestEntry> entries);

  static Manifest read(const std::filesystem::path& path);
  /// Paths are written relative to `path`'s directory when possible.
  void write(const std::filesystem::path& path) const;

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  /// Speaker id -> paths, both sorted.
  std::map<std::string, std::vector<std::filesystem::path>> by_speaker() const;

 private:
  std::vector<ManifestEntry> entries_;
};

/// Training hyperparameters. Config files are "key = value" lines using
/// these field names ('#' starts a comment); N, M and L are accepted as
/// aliases for the first three.
struct TrainConfig {
  int speakers_per_batch = 4;      // N
  int utterances_per_speaker = 3;  // M
  int crop_frames = 60;            // L
  int d_a = 512;
  int d_r = 5;
  AttentionMode mode = AttentionMode::kSingle;
  double lr = 0.01;
  double alpha = 0.1;
  int steps = 300;
  std::uint64_t seed = 1;
  bool include_biases = true;

  void validate() const;
  ModelConfig model() const { return {mode, alpha, include_biases}; }

  static TrainConfig parse(const std::string& text);
  static TrainConfig read(const std::filesystem::path& path);
  std::string to_string() const;
};

struct Utterance {
  std::string speaker;
  std::filesystem::path path;
  FeatureMatrix features;
};

/// Featurized manifest, grouped by speaker (sorted by id, then path).
class FeatureBank {
 public:
  static FeatureBank load(const Manifest& manifest);

  void add(Utterance utterance);
  const std::map<std::string, std::vector<Utterance>>& speakers() const { return speakers_; }
  std::size_t size() const;

 private:
  std::map<std::string, std::vector<Utterance>> speakers_;
};

struct BatchInputs {
  int speakers = 0;
  int utterances = 0;
  std::vector<FeatureMatrix> crops;       // speaker-major, N * M
  std::vector<std::string> speaker_ids;  // length N
};

/// Samples N speakers without replacement among those with at least one
/// utterance of >= L frames, then M utterances per speaker (with
/// replacement only if the speaker has fewer than M), each cropped to L
/// frames at a uniformly random start.
BatchInputs assemble_batch(const FeatureBank& bank, const TrainConfig& config, Rng& rng);

/// Forward, backward and one SGD update. Returns the loss before the
/// update; throws without updating if it is not finite.
double train_step(const BatchInputs& batch, ParameterStore& params, const TrainConfig& config);

struct TrainResult {
  ParameterStore params;
  std::vector<double> losses;
};

using TrainProgress = std::function<void(int step, double loss)>;

/// Initializes from config.seed and runs config.steps steps.
TrainResult train(const FeatureBank& bank, const TrainConfig& config,
                  const TrainProgress& progress = {});

struct EvaluationResult {
  TrialScoreSet trials;
  MetricReport report;
  std::vector<std::string> warnings;
};

/// Per speaker, the first half of the utterances (by sorted path, at least
/// one) are averaged into an enrollment centroid and the rest are tests.
/// Every (test, centroid) pair is scored as w cos(e, c) + b. Speakers with
/// fewer than two utterances are skipped with a warning.
EvaluationResult evaluate(const FeatureBank& bank, const ParameterStore& params,
                          const TrainConfig& config);

/// w cos(e_test, centroid(enroll)) + b over whole utterances.
double verification_score(std::span<const FeatureMatrix> enroll, const FeatureMatrix& test,
                          const ParameterStore& params, AttentionMode mode);

struct SynthResult {
  Manifest all;
  Manifest train;  // first half of each speaker's utterances
  Manifest eval;   // second half
  // Cosine similarity of per-band mean log-mel profiles.
  double min_within_cosine = 0.0;
  double mean_within_cosine = 0.0;
  double mean_across_cosine = 0.0;
};

/// Writes a toy corpus under `out_dir`: each speaker is a fixed random
/// 40-band spectral template, each utterance Gaussian noise filtered by that
/// template with per-utterance jitter and a slow amplitude envelope.
/// Writes manifest.jsonl, train.jsonl and eval.jsonl alongside the WAVs.
/// Throws unless every same-speaker pair of profiles has cosine > 0.9 and
/// the mean within-speaker cosine exceeds the mean across speakers.
SynthResult synth_dataset(int n_speakers, int utts_per_speaker, double seconds, Rng& rng,
                          const std::filesystem::path& out_dir);

}  // namespace sasn

#endif  // SASN_TRAINER_H_
