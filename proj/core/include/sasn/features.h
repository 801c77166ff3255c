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

#ifndef SASN_FEATURES_H_
#define SASN_FEATURES_H_

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sasn {

// Front-end constants. The network consumes 40 log-mel energies per 25 ms
// frame with a 10 ms hop at 16 kHz.
inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameLength = 400;
inline constexpr int kFrameShift = 160;
inline constexpr int kFftSize = 512;
inline constexpr int kNumFftBins = kFftSize / 2 + 1;
inline constexpr int kNumMelBins = 40;
inline constexpr double kLogEnergyFloor = 1e-10;

struct AudioSignal {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate = kSampleRate;
};

/// 40 x T matrix of log-mel energies, one column per frame.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  /// Throws sasn::Error unless the matrix has 40 rows, at least one column
  /// and only finite entries.
  explicit FeatureMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const { return values_; }
  int frame_count() const { return static_cast<int>(values_.cols()); }

  bool operator==(const FeatureMatrix& other) const {
    return values_ == other.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

// Reads a RIFF/WAVE file. Only PCM 16-bit mono 16 kHz is accepted; anything
// else is an error (there is no resampling or down-mixing).
AudioSignal load_wav(const std::filesystem::path& path);

// Writes PCM 16-bit mono. Samples are clamped to the int16 range.
void write_wav(const std::filesystem::path& path,
               std::span<const double> samples, int sample_rate = kSampleRate);

/// Number of frames produced by frame_signal for `num_samples` samples,
/// or 0 when the signal is shorter than one window.
int num_frames(std::size_t num_samples);

/// Splits the signal into Hamming-windowed frames. Returns a
/// kFrameLength x F matrix; column i holds samples [160 i, 160 i + 400).
Eigen::MatrixXd frame_signal(const AudioSignal& signal);

/// Hamming window of kFrameLength points.
const Eigen::VectorXd& hamming_window();

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filterbank, kNumMelBins x kNumFftBins. Filter k rises from
/// edge k to edge k+1 and falls to edge k+2, with 42 edges equally spaced on
/// the mel scale between 0 Hz and Nyquist.
const Eigen::MatrixXd& mel_filterbank();

/// Center frequency (Hz) of mel filter k.
double mel_center_hz(int k);

/// Power spectrum of each frame, zero-padded to kFftSize points.
/// Returns kNumFftBins x F.
Eigen::MatrixXd power_spectrum(const Eigen::MatrixXd& frames);

/// log(max(filterbank * |DFT|^2, 1e-10)) per frame.
FeatureMatrix log_mel(const Eigen::MatrixXd& frames);

/// frame_signal followed by log_mel.
FeatureMatrix compute_features(const AudioSignal& signal);

/// Contiguous 40 x length slice starting at column `start`.
FeatureMatrix crop_segment(const FeatureMatrix& features, int length,
                           int start);

// Feature cache: "SASF", uint32 LE frame count, then 40*T float64 LE in
// column-major order.
void write_feature_cache(const std::filesystem::path& path,
                         const FeatureMatrix& features);
FeatureMatrix read_feature_cache(const std::filesystem::path& path);

}  // namespace sasn

#endif  // SASN_FEATURES_H_
