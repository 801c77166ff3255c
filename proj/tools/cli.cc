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

#include "cli.h"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>

#include "sasn/encoder.h"
#include "sasn/error.h"
#include "sasn/features.h"
#include "sasn/gradcheck.h"
#include "sasn/model.h"
#include "sasn/parameters.h"
#include "sasn/trainer.h"

namespace sasn::cli {

namespace {

constexpr double kGradCheckEps = 1e-5;
constexpr std::size_t kGradCheckProbes = 200;
constexpr double kGradCheckLimit = 1e-4;

TrainConfig load_config(const std::string& path) {
  TrainConfig cfg = path.empty() ? TrainConfig{} : TrainConfig::read(path);
  if (const char* env = std::getenv("SASN_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Error("SASN_SEED is not an integer: " + std::string(env));
    cfg.seed = seed;
  }
  return cfg;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Options {
  std::string wav, out, manifest, config, checkpoint, test, scores;
  std::vector<std::string> enroll;
  int speakers = 4, utts = 8;
  double seconds = 3.0, threshold = 0.0;
  std::optional<std::uint64_t> seed;
};

int featurize(const Options& o, std::ostream& out) {
  const FeatureMatrix features = compute_features(load_wav(o.wav));
  write_feature_cache(o.out, features);
  out << "frames=" << features.frame_count() << '\n';
  return 0;
}

int synth_data(const Options& o, std::ostream& out) {
  Rng rng(o.seed.value_or(1));
  const SynthResult r = synth_dataset(o.speakers, o.utts, o.seconds, rng, o.out);
  out << "wrote " << r.all.entries().size() << " utterances to " << o.out
      << " (within-speaker cosine=" << fixed(r.mean_within_cosine, 4)
      << ", across cosine=" << fixed(r.mean_across_cosine, 4) << ")\n";
  return 0;
}

int train_cmd(const Options& o, std::ostream& out) {
  const TrainConfig cfg = load_config(o.config);
  const FeatureBank bank = FeatureBank::load(Manifest::read(o.manifest));
  const TrainResult result = train(bank, cfg, [&](int step, double loss) {
    if (step == 0 || (step + 1) % 25 == 0 || step + 1 == cfg.steps)
      out << "step " << step + 1 << " loss " << fixed(loss) << '\n';
  });
  save_checkpoint(o.checkpoint, result.params);
  return 0;
}

int evaluate_cmd(const Options& o, std::ostream& out, std::ostream& err) {
  const TrainConfig cfg = load_config(o.config);
  const ParameterStore params = load_checkpoint(o.checkpoint);
  const EvaluationResult result = evaluate(FeatureBank::load(Manifest::read(o.manifest)), params, cfg);
  for (const std::string& w : result.warnings) err << "warning: " << w << '\n';
  if (!o.scores.empty()) write_score_file(o.scores, result.trials);
  out << format_report(result.report) << '\n';
  err << "threshold at EER: " << fixed(result.report.eer_threshold) << " ("
      << result.trials.target.size() << " target, " << result.trials.impostor.size()
      << " impostor trials)\n";
  return 0;
}

int embed_cmd(const Options& o) {
  const TrainConfig cfg = load_config(o.config);
  const ParameterStore params = load_checkpoint(o.checkpoint);
  const Manifest manifest = Manifest::read(o.manifest);
  std::ofstream file(o.out);
  if (!file) throw Error("cannot write embeddings: " + o.out);
  for (const auto& [speaker, paths] : manifest.by_speaker()) {
    for (const auto& path : paths) {
      const Eigen::VectorXd e = embed(compute_features(load_wav(path)), params, cfg.mode);
      file << speaker << '/' << path.stem().string();
      for (Eigen::Index k = 0; k < e.size(); ++k) file << '\t' << full_precision(e(k));
      file << '\n';
    }
  }
  if (!file) throw Error("failed writing embeddings: " + o.out);
  return 0;
}

int verify_cmd(const Options& o, std::ostream& out) {
  const TrainConfig cfg = load_config(o.config);
  const ParameterStore params = load_checkpoint(o.checkpoint);
  std::vector<FeatureMatrix> enroll;
  for (const std::string& wav : o.enroll) enroll.push_back(compute_features(load_wav(wav)));
  const double score =
      verification_score(enroll, compute_features(load_wav(o.test)), params, cfg.mode);
  out << "score=" << fixed(score) << " decision=" << (score >= o.threshold ? "accept" : "reject")
      << '\n';
  return 0;
}

int grad_check_cmd(const Options& o, std::ostream& out) {
  const TrainConfig cfg = load_config(o.config);
  LossCheckSpec spec;
  if (!o.config.empty()) {
    spec.d_a = cfg.d_a;
    spec.d_r = cfg.d_r;
    spec.model = cfg.model();
  }
  spec.seed = o.seed ? *o.seed : cfg.seed;
  spec.eps = kGradCheckEps;
  spec.probes = kGradCheckProbes;
  const GradCheckReport report = check_loss_gradient(spec);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max_relative_error=%.3e probes=%zu mode=%s",
                report.max_relative_error, report.probes.size(),
                std::string(to_string(spec.model.mode)).c_str());
  out << buf << '\n';
  if (const GradientProbe* w = report.worst())
    out << "worst: " << w->tensor << '[' << w->index << "] analytic=" << full_precision(w->analytic)
        << " numeric=" << full_precision(w->numeric) << '\n';
  return report.max_relative_error < kGradCheckLimit ? 0 : 1;
}

int param_count_cmd(const Options& o, std::ostream& out) {
  const TrainConfig cfg = load_config(o.config);
  out << param_count(cfg.d_a, cfg.d_r, cfg.include_biases) << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-attentive TDNN speaker verification", "sasn"};
  app.require_subcommand(1);
  Options o;

  auto* featurize_app = app.add_subcommand("featurize", "Write log-mel features of a WAV file");
  featurize_app->add_option("--wav", o.wav, "Input WAV (PCM16 mono 16 kHz)")->required();
  featurize_app->add_option("--out", o.out, "Output feature cache (SASF)")->required();

  auto* synth_app = app.add_subcommand("synth-data", "Generate a synthetic speaker corpus");
  synth_app->add_option("--speakers", o.speakers, "Number of speakers")->check(CLI::PositiveNumber);
  synth_app->add_option("--utts", o.utts, "Utterances per speaker")->check(CLI::PositiveNumber);
  synth_app->add_option("--seconds", o.seconds, "Utterance duration")->check(CLI::PositiveNumber);
  synth_app->add_option("--out", o.out, "Output directory")->required();
  synth_app->add_option("--seed", o.seed, "Random seed (default 1)");

  auto* train_app = app.add_subcommand("train", "Train a model");
  train_app->add_option("--manifest", o.manifest, "Training manifest (JSON lines)")->required();
  train_app->add_option("--config", o.config, "Config file (key = value)")->required();
  train_app->add_option("--out-checkpoint", o.checkpoint, "Checkpoint to write")->required();

  auto* eval_app = app.add_subcommand("evaluate", "Score enrollment/test trials and report metrics");
  eval_app->add_option("--manifest", o.manifest, "Evaluation manifest")->required();
  eval_app->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  eval_app->add_option("--config", o.config, "Config file")->required();
  eval_app->add_option("--scores", o.scores, "Also write trial scores (label<TAB>score)");

  auto* embed_app = app.add_subcommand("embed", "Write utterance embeddings");
  embed_app->add_option("--manifest", o.manifest, "Manifest of utterances")->required();
  embed_app->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  embed_app->add_option("--out", o.out, "Output file (tab-separated)")->required();
  embed_app->add_option("--config", o.config, "Config file (attention mode)");

  auto* verify_app = app.add_subcommand("verify", "Score one test utterance against an enrollment");
  verify_app->add_option("--enroll", o.enroll, "Enrollment WAVs")->required()->expected(1, -1);
  verify_app->add_option("--test", o.test, "Test WAV")->required();
  verify_app->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required();
  verify_app->add_option("--threshold", o.threshold, "Accept iff score >= threshold (default 0)");
  verify_app->add_option("--config", o.config, "Config file (attention mode)");

  auto* grad_app = app.add_subcommand("grad-check", "Finite-difference check of the full loss");
  grad_app->add_option("--config", o.config, "Config file (default: d_a=16, d_r=3, single)");
  grad_app->add_option("--seed", o.seed, "Random seed (default: config seed)");

  auto* count_app = app.add_subcommand("param-count", "Print the number of trainable parameters");
  count_app->add_option("--config", o.config, "Config file");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    if (*featurize_app) return featurize(o, out);
    if (*synth_app) return synth_data(o, out);
    if (*train_app) return train_cmd(o, out);
    if (*eval_app) return evaluate_cmd(o, out, err);
    if (*embed_app) return embed_cmd(o);
    if (*verify_app) return verify_cmd(o, out);
    if (*grad_app) return grad_check_cmd(o, out);
    if (*count_app) return param_count_cmd(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace sasn::cli
