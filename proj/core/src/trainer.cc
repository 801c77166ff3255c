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

#include "sasn/trainer.h"

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "sasn/error.h"
#include "sasn/scoring_loss.h"

namespace sasn {

// ---------------------------------------------------------------------------
// Manifest

Manifest::Manifest(std::vector<ManifestEntry> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const ManifestEntry& e : entries_) {
    if (e.speaker.empty()) throw Error("manifest entry with empty speaker id");
    if (!seen.insert(e.path.lexically_normal().string()).second)
      throw Error("duplicate manifest path: " + e.path.string());
  }
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("speaker") || !obj.contains("path") ||
        !obj["speaker"].is_string() || !obj["path"].is_string())
      throw Error(where + ": expected {\"speaker\": ..., \"path\": ...}");
    std::filesystem::path p = obj["path"].get<std::string>();
    if (p.is_relative()) p = (base / p).lexically_normal();
    entries.push_back({obj["speaker"].get<std::string>(), p});
  }
  return Manifest(std::move(entries));
}

void Manifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest: " + path.string());
  const std::filesystem::path base = path.parent_path();
  for (const ManifestEntry& e : entries_) {
    std::filesystem::path p = e.path.lexically_relative(base);
    if (p.empty() || *p.begin() == "..") p = e.path;
    out << nlohmann::json{{"speaker", e.speaker}, {"path", p.generic_string()}}.dump() << '\n';
  }
  if (!out) throw Error("failed writing manifest: " + path.string());
}

std::map<std::string, std::vector<std::filesystem::path>> Manifest::by_speaker() const {
  std::map<std::string, std::vector<std::filesystem::path>> groups;
  for (const ManifestEntry& e : entries_) groups[e.speaker].push_back(e.path);
  for (auto& [speaker, paths] : groups) std::sort(paths.begin(), paths.end());
  return groups;
}

// ---------------------------------------------------------------------------
// TrainConfig

void TrainConfig::validate() const {
  if (speakers_per_batch < 2) throw Error("config: speakers_per_batch must be >= 2");
  if (utterances_per_speaker < 2) throw Error("config: utterances_per_speaker must be >= 2");
  if (crop_frames < 15) throw Error("config: crop_frames must be >= 15");
  if (d_a < 1 || d_r < 1) throw Error("config: d_a and d_r must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("config: lr must be > 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("config: alpha must be >= 0");
  if (steps < 1) throw Error("config: steps must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) throw Error("config: bad value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config: bad boolean for " + key + ": '" + value + "'");
}

}  // namespace

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "speakers_per_batch" || key == "N")
      cfg.speakers_per_batch = parse_number<int>(key, value);
    else if (key == "utterances_per_speaker" || key == "M")
      cfg.utterances_per_speaker = parse_number<int>(key, value);
    else if (key == "crop_frames" || key == "L")
      cfg.crop_frames = parse_number<int>(key, value);
    else if (key == "d_a")
      cfg.d_a = parse_number<int>(key, value);
    else if (key == "d_r")
      cfg.d_r = parse_number<int>(key, value);
    else if (key == "mode")
      cfg.mode = parse_attention_mode(value);
    else if (key == "lr")
      cfg.lr = parse_number<double>(key, value);
    else if (key == "alpha")
      cfg.alpha = parse_number<double>(key, value);
    else if (key == "steps")
      cfg.steps = parse_number<int>(key, value);
    else if (key == "seed")
      cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "include_biases")
      cfg.include_biases = parse_bool(key, value);
    else
      throw Error("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string TrainConfig::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << "speakers_per_batch = " << speakers_per_batch << '\n'
      << "utterances_per_speaker = " << utterances_per_speaker << '\n'
      << "crop_frames = " << crop_frames << '\n'
      << "d_a = " << d_a << '\n'
      << "d_r = " << d_r << '\n'
      << "mode = " << sasn::to_string(mode) << '\n'
      << "lr = " << lr << '\n'
      << "alpha = " << alpha << '\n'
      << "steps = " << steps << '\n'
      << "seed = " << seed << '\n'
      << "include_biases = " << (include_biases ? "true" : "false") << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Features and batches

FeatureBank FeatureBank::load(const Manifest& manifest) {
  FeatureBank bank;
  for (const auto& [speaker, paths] : manifest.by_speaker())
    for (const auto& path : paths)
      bank.add({speaker, path, compute_features(load_wav(path))});
  return bank;
}

void FeatureBank::add(Utterance utterance) {
  auto& list = speakers_[utterance.speaker];
  list.push_back(std::move(utterance));
  std::sort(list.begin(), list.end(),
            [](const Utterance& a, const Utterance& b) { return a.path < b.path; });
}

std::size_t FeatureBank::size() const {
  std::size_t n = 0;
  for (const auto& [speaker, list] : speakers_) n += list.size();
  return n;
}

BatchInputs assemble_batch(const FeatureBank& bank, const TrainConfig& config, Rng& rng) {
  const int n = config.speakers_per_batch, m = config.utterances_per_speaker;
  const int length = config.crop_frames;

  std::vector<std::pair<std::string, std::vector<const FeatureMatrix*>>> usable;
  for (const auto& [speaker, list] : bank.speakers()) {
    std::vector<const FeatureMatrix*> long_enough;
    for (const Utterance& u : list)
      if (u.features.frame_count() >= length) long_enough.push_back(&u.features);
    if (!long_enough.empty()) usable.emplace_back(speaker, std::move(long_enough));
  }
  if (static_cast<int>(usable.size()) < n)
    throw Error("need " + std::to_string(n) + " speakers with an utterance of >= " +
                std::to_string(length) + " frames, found " + std::to_string(usable.size()) +
                " (short by " + std::to_string(n - static_cast<int>(usable.size())) + ")");

  // Partial Fisher-Yates over speaker indices.
  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  for (int j = 0; j < n; ++j) std::swap(order[j], order[j + rng.index(order.size() - j)]);

  BatchInputs batch;
  batch.speakers = n;
  batch.utterances = m;
  for (int j = 0; j < n; ++j) {
    const auto& [speaker, utts] = usable[order[j]];
    batch.speaker_ids.push_back(speaker);
    std::vector<std::size_t> picks;
    if (static_cast<int>(utts.size()) >= m) {
      std::vector<std::size_t> idx(utts.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (int i = 0; i < m; ++i) std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
      picks.assign(idx.begin(), idx.begin() + m);
    } else {
      for (int i = 0; i < m; ++i) picks.push_back(rng.index(utts.size()));
    }
    for (std::size_t p : picks) {
      const FeatureMatrix& f = *utts[p];
      const int start = static_cast<int>(rng.index(static_cast<std::size_t>(f.frame_count() - length + 1)));
      batch.crops.push_back(crop_segment(f, length, start));
    }
  }
  return batch;
}

double train_step(const BatchInputs& batch, ParameterStore& params, const TrainConfig& config) {
  const BatchLoss result =
      batch_loss_and_grad(batch.crops, batch.speakers, batch.utterances, params, config.model());
  if (!std::isfinite(result.loss)) throw Error("non-finite training loss");
  sgd_step(params, config.lr);
  return result.loss;
}

TrainResult train(const FeatureBank& bank, const TrainConfig& config,
                  const TrainProgress& progress) {
  config.validate();
  Rng rng(config.seed);
  TrainResult result{init_parameters(config.d_a, config.d_r, rng), {}};
  result.losses.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 0; step < config.steps; ++step) {
    const BatchInputs batch = assemble_batch(bank, config, rng);
    const double loss = train_step(batch, result.params, config);
    result.losses.push_back(loss);
    if (progress) progress(step, loss);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation

double verification_score(std::span<const FeatureMatrix> enroll, const FeatureMatrix& test,
                          const ParameterStore& params, AttentionMode mode) {
  if (enroll.empty()) throw Error("no enrollment utterances");
  std::vector<Eigen::VectorXd> enrolled;
  for (const FeatureMatrix& f : enroll) enrolled.push_back(embed(f, params, mode));
  return params.sim_w() * cosine(embed(test, params, mode), centroid(enrolled)) + params.sim_b();
}

EvaluationResult evaluate(const FeatureBank& bank, const ParameterStore& params,
                          const TrainConfig& config) {
  EvaluationResult result;
  struct Enrolled {
    std::string speaker;
    Eigen::VectorXd centroid;
    std::vector<Eigen::VectorXd> tests;
  };
  std::vector<Enrolled> speakers;
  for (const auto& [speaker, list] : bank.speakers()) {
    if (list.size() < 2) {
      result.warnings.push_back("speaker " + speaker + " has fewer than 2 utterances; skipped");
      continue;
    }
    const std::size_t n_enroll = std::max<std::size_t>(1, list.size() / 2);
    std::vector<Eigen::VectorXd> enroll;
    Enrolled e{speaker, {}, {}};
    for (std::size_t i = 0; i < list.size(); ++i) {
      Eigen::VectorXd emb = embed(list[i].features, params, config.mode);
      (i < n_enroll ? enroll : e.tests).push_back(std::move(emb));
    }
    e.centroid = centroid(enroll);
    speakers.push_back(std::move(e));
  }
  for (const Enrolled& test_speaker : speakers)
    for (const Eigen::VectorXd& t : test_speaker.tests)
      for (const Enrolled& model : speakers) {
        const double s = params.sim_w() * cosine(t, model.centroid) + params.sim_b();
        (model.speaker == test_speaker.speaker ? result.trials.target : result.trials.impostor)
            .push_back(s);
      }
  if (result.trials.target.empty() || result.trials.impostor.empty())
    throw Error("evaluation produced an empty trial set (need >= 2 speakers with >= 2 utterances)");
  result.report = compute_metrics(result.trials);
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr double kBandJitterDb = 1.5;
constexpr double kTargetRms = 0.1;

// Band gain in dB at `hz`, linear in mel between band centers.
double band_gain_db(const std::vector<double>& band_db, double hz) {
  const double m = hz_to_mel(hz);
  if (m <= hz_to_mel(mel_center_hz(0))) return band_db.front();
  for (int k = 1; k < kNumMelBins; ++k) {
    const double hi = hz_to_mel(mel_center_hz(k));
    if (m <= hi) {
      const double lo = hz_to_mel(mel_center_hz(k - 1));
      const double w = (m - lo) / (hi - lo);
      return (1.0 - w) * band_db[k - 1] + w * band_db[k];
    }
  }
  return band_db.back();
}

std::vector<double> synth_utterance(const std::vector<double>& template_db, double seconds,
                                    Rng& rng) {
  const auto n = static_cast<int>(std::llround(seconds * kSampleRate));
  std::vector<double> band_db(kNumMelBins);
  for (int k = 0; k < kNumMelBins; ++k) band_db[k] = template_db[k] + kBandJitterDb * rng.normal();

  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  const int bins = n / 2 + 1;
  auto* spec = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins));
  fftw_plan fwd = fftw_plan_dft_r2c_1d(n, x.data(), spec, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  for (int k = 0; k < bins; ++k) {
    const double hz = static_cast<double>(k) * kSampleRate / n;
    const double g = std::pow(10.0, band_gain_db(band_db, hz) / 20.0) / n;
    spec[k][0] *= g;
    spec[k][1] *= g;
  }
  fftw_plan inv = fftw_plan_dft_c2r_1d(n, spec, x.data(), FFTW_ESTIMATE);
  fftw_execute(inv);
  fftw_destroy_plan(inv);
  fftw_free(spec);

  const double env_rate = rng.uniform(2.0, 5.0);
  const double env_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int t = 0; t < n; ++t) {
    const double env = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * env_rate * t / kSampleRate + env_phase);
    x[t] = x[t] * env + 1e-3 * rng.normal();
  }
  double energy = 0.0;
  for (double v : x) energy += v * v;
  const double rms = std::sqrt(energy / n);
  if (rms > 0.0)
    for (double& v : x) v *= kTargetRms / rms;
  return x;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm() + 1e-300);
}

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
  return buf;
}

}  // namespace

SynthResult synth_dataset(int n_speakers, int utts_per_speaker, double seconds, Rng& rng,
                          const std::filesystem::path& out_dir) {
  if (n_speakers < 1 || utts_per_speaker < 1) throw Error("synth: counts must be >= 1");
  if (!(seconds * kSampleRate >= kFrameLength)) throw Error("synth: duration shorter than one frame");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::vector<ManifestEntry> all, train_entries, eval_entries;
  std::vector<std::vector<Eigen::VectorXd>> profiles(n_speakers);
  for (int s = 0; s < n_speakers; ++s) {
    std::vector<double> template_db(kNumMelBins);
    for (double& g : template_db) g = rng.uniform(-24.0, 0.0);
    const std::string speaker = numbered("spk", s);
    std::filesystem::create_directories(out_dir / speaker, ec);
    if (ec) throw Error("cannot create directory under " + out_dir.string() + ": " + ec.message());
    for (int u = 0; u < utts_per_speaker; ++u) {
      const std::filesystem::path path = out_dir / speaker / (numbered("utt", u) + ".wav");
      write_wav(path, synth_utterance(template_db, seconds, rng));
      const FeatureMatrix features = compute_features(load_wav(path));
      profiles[s].push_back(features.values().rowwise().mean());
      ManifestEntry entry{speaker, path};
      all.push_back(entry);
      (u < (utts_per_speaker + 1) / 2 ? train_entries : eval_entries).push_back(entry);
    }
  }

  SynthResult result{Manifest(all), Manifest(train_entries), Manifest(eval_entries)};
  double within_sum = 0.0, across_sum = 0.0;
  int within_n = 0, across_n = 0;
  result.min_within_cosine = 1.0;
  for (int s = 0; s < n_speakers; ++s)
    for (int u = 0; u < utts_per_speaker; ++u)
      for (int t = s; t < n_speakers; ++t)
        for (int v = (t == s ? u + 1 : 0); v < utts_per_speaker; ++v) {
          const double r = cosine_similarity(profiles[s][u], profiles[t][v]);
          if (s == t) {
            within_sum += r;
            ++within_n;
            result.min_within_cosine = std::min(result.min_within_cosine, r);
          } else {
            across_sum += r;
            ++across_n;
          }
        }
  result.mean_within_cosine = within_n ? within_sum / within_n : 1.0;
  result.mean_across_cosine = across_n ? across_sum / across_n : 0.0;
  if (within_n > 0 && (result.min_within_cosine <= 0.9 ||
                       (across_n > 0 && result.mean_within_cosine <= result.mean_across_cosine)))
    throw Error("synthetic corpus self-check failed: within-speaker profile cosine " +
                std::to_string(result.min_within_cosine) + ", across " +
                std::to_string(result.mean_across_cosine));

  result.all.write(out_dir / "manifest.jsonl");
  result.train.write(out_dir / "train.jsonl");
  result.eval.write(out_dir / "eval.jsonl");
  return result;
}

}  // namespace sasn
