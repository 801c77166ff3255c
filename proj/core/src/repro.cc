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

#include "sasn/repro.h"

#include <sstream>

#include "sasn/encoder.h"

namespace sasn {

namespace {

std::string with_commas(std::int64_t v) {
  std::string digits = std::to_string(v);
  for (int i = static_cast<int>(digits.size()) - 3; i > 0; i -= 3) digits.insert(i, ",");
  return digits;
}

}  // namespace

std::string emit_repro_tables() {
  const TdnnConfig& tdnn = TdnnConfig::standard();
  std::ostringstream md;
  md << "# Reproduction tables\n\n"
     << "Generated by `sasn_repro_tables`; do not edit by hand.\n\n"
     << "## Parameter count (d_a = 512)\n\n"
     << "| d_r | with TDNN biases | without TDNN biases |\n"
     << "|----:|-----------------:|--------------------:|\n";
  for (int d_r : {5, 10, 20})
    md << "| " << d_r << " | " << with_commas(param_count(512, d_r, true)) << " | "
       << with_commas(param_count(512, d_r, false)) << " |\n";

  md << "\n## TDNN receptive field\n\n"
     << "| layer | offsets | spliced in x out | cumulative context |\n"
     << "|------:|:--------|-----------------:|-------------------:|\n";
  for (int l = 0; l < 3; ++l) {
    const TdnnLayerSpec& layer = tdnn.layers[l];
    md << "| " << l + 1 << " | {";
    for (std::size_t k = 0; k < layer.offsets.size(); ++k)
      md << (k ? ", " : "") << layer.offsets[k];
    md << "} | " << layer.spliced_dim() << "x" << layer.output_dim << " | "
       << tdnn.receptive_field(l + 1) << " |\n";
  }

  md << "\n## Frame-level output width\n\n"
     << "| input frames T | output frames T' |\n"
     << "|---------------:|-----------------:|\n";
  // Widths come from running the encoder, not from the closed form.
  const ParameterStore zeros(512, 5);
  for (int t : {15, 180, 300, 600}) {
    const Eigen::MatrixXd h = tdnn_forward(Eigen::MatrixXd::Zero(kNumMelBins, t), zeros);
    md << "| " << t << " | " << h.cols() << " |\n";
  }
  return md.str();
}

}  // namespace sasn
