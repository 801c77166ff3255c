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

#include "sasn/features.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "binary_io.h"
#include "sasn/error.h"

namespace sasn {

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values)
    : values_(std::move(values)) {
  if (values_.rows() != kNumMelBins)
    throw Error("feature matrix must have " + std::to_string(kNumMelBins) +
                " rows, got " + std::to_string(values_.rows()));
  if (values_.cols() < 1) throw Error("feature matrix has no frames");
  if (!values_.allFinite()) throw Error("feature matrix has non-finite entries");
}

namespace {

std::uint32_t tag(const char* s) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

// r2c plan shared by all calls. fftw_execute_dft_r2c on other arrays is
// thread-safe; only planning is not, and that happens once.
class RealFft {
 public:
  RealFft() {
    in_ = fftw_alloc_real(kFftSize);
    out_ = fftw_alloc_complex(kNumFftBins);
    plan_ = fftw_plan_dft_r2c_1d(kFftSize, in_, out_,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void execute(double* in, fftw_complex* out) const {
    fftw_execute_dft_r2c(plan_, in, out);
  }

 private:
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

const RealFft& real_fft() {
  static const RealFft fft;
  return fft;
}

}  // namespace

AudioSignal load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open wav file: " + path.string());
  const std::string what = "wav file " + path.string();
  using internal::read_u16_le;
  using internal::read_u32_le;

  if (read_u32_le(in, what) != tag("RIFF")) throw Error("not a RIFF file: " + path.string());
  read_u32_le(in, what);
  if (read_u32_le(in, what) != tag("WAVE")) throw Error("not a WAVE file: " + path.string());

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (true) {
    const std::uint32_t id = read_u32_le(in, what);
    const std::uint32_t size = read_u32_le(in, what);
    if (id == tag("fmt ")) {
      if (size < 16) throw Error("malformed fmt chunk in " + path.string());
      const std::uint16_t format = read_u16_le(in, what);
      channels = read_u16_le(in, what);
      rate = read_u32_le(in, what);
      read_u32_le(in, what);  // byte rate
      read_u16_le(in, what);  // block align
      bits = read_u16_le(in, what);
      in.seekg(size - 16 + (size & 1), std::ios::cur);
      if (format != 1) throw Error("unsupported codec (expected PCM): " + path.string());
      if (channels != 1)
        throw Error("unsupported channel count " + std::to_string(channels) + ": " +
                    path.string());
      if (bits != 16)
        throw Error("unsupported bit depth " + std::to_string(bits) + ": " + path.string());
      if (rate != static_cast<std::uint32_t>(kSampleRate))
        throw Error("unsupported sample rate " + std::to_string(rate) + ": " +
                    path.string());
      have_fmt = true;
    } else if (id == tag("data")) {
      if (!have_fmt) throw Error("data chunk before fmt chunk in " + path.string());
      AudioSignal signal;
      signal.sample_rate = static_cast<int>(rate);
      const std::size_t n = size / 2;
      std::vector<char> raw(n * 2);
      internal::read_exact(in, raw.data(), raw.size(), what);
      signal.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto lo = static_cast<unsigned char>(raw[2 * i]);
        const auto hi = static_cast<unsigned char>(raw[2 * i + 1]);
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
        signal.samples[i] = static_cast<double>(v) / 32768.0;
      }
      if (signal.samples.empty()) throw Error("wav file has no samples: " + path.string());
      return signal;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
      if (!in) throw Error("no data chunk in " + path.string());
    }
  }
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write wav file: " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  auto put16 = [&out](std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  out.write("RIFF", 4);
  internal::write_u32_le(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  internal::write_u32_le(out, 16);
  put16(1);
  put16(1);
  internal::write_u32_le(out, static_cast<std::uint32_t>(sample_rate));
  internal::write_u32_le(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put16(2);
  put16(16);
  out.write("data", 4);
  internal::write_u32_le(out, data_bytes);
  for (double x : samples) {
    const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
    put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  if (!out) throw Error("failed writing wav file: " + path.string());
}

int num_frames(std::size_t num_samples) {
  if (num_samples < static_cast<std::size_t>(kFrameLength)) return 0;
  return 1 + static_cast<int>((num_samples - kFrameLength) / kFrameShift);
}

const Eigen::VectorXd& hamming_window() {
  static const Eigen::VectorXd window = [] {
    Eigen::VectorXd w(kFrameLength);
    for (int n = 0; n < kFrameLength; ++n)
      w(n) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (kFrameLength - 1));
    return w;
  }();
  return window;
}

Eigen::MatrixXd frame_signal(const AudioSignal& signal) {
  const int frames = num_frames(signal.samples.size());
  if (frames == 0) throw Error("utterance too short");
  const Eigen::VectorXd& window = hamming_window();
  Eigen::MatrixXd out(kFrameLength, frames);
  for (int f = 0; f < frames; ++f) {
    const double* start = signal.samples.data() + static_cast<std::size_t>(f) * kFrameShift;
    out.col(f) = Eigen::Map<const Eigen::VectorXd>(start, kFrameLength).cwiseProduct(window);
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

double mel_edge(int i) {
  const double top = hz_to_mel(kSampleRate / 2.0);
  return top * i / (kNumMelBins + 1);
}

}  // namespace

double mel_center_hz(int k) { return mel_to_hz(mel_edge(k + 1)); }

const Eigen::MatrixXd& mel_filterbank() {
  static const Eigen::MatrixXd bank = [] {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(kNumMelBins, kNumFftBins);
    for (int k = 0; k < kNumMelBins; ++k) {
      const double left = mel_edge(k), center = mel_edge(k + 1), right = mel_edge(k + 2);
      for (int bin = 0; bin < kNumFftBins; ++bin) {
        const double mel = hz_to_mel(static_cast<double>(bin) * kSampleRate / kFftSize);
        if (mel > left && mel <= center)
          w(k, bin) = (mel - left) / (center - left);
        else if (mel > center && mel < right)
          w(k, bin) = (right - mel) / (right - center);
      }
    }
    return w;
  }();
  return bank;
}

Eigen::MatrixXd power_spectrum(const Eigen::MatrixXd& frames) {
  if (frames.rows() > kFftSize) throw Error("frame longer than FFT size");
  const Eigen::Index count = frames.cols();
  Eigen::MatrixXd power(kNumFftBins, count);
  std::vector<double> buffer(kFftSize);
  std::vector<fftw_complex> spectrum(kNumFftBins);
  for (Eigen::Index f = 0; f < count; ++f) {
    std::fill(buffer.begin(), buffer.end(), 0.0);
    std::copy(frames.col(f).data(), frames.col(f).data() + frames.rows(), buffer.begin());
    real_fft().execute(buffer.data(), spectrum.data());
    for (int bin = 0; bin < kNumFftBins; ++bin)
      power(bin, f) = spectrum[bin][0] * spectrum[bin][0] + spectrum[bin][1] * spectrum[bin][1];
  }
  return power;
}

FeatureMatrix log_mel(const Eigen::MatrixXd& frames) {
  if (frames.cols() < 1) throw Error("no frames to featurize");
  Eigen::MatrixXd energies = mel_filterbank() * power_spectrum(frames);
  return FeatureMatrix(energies.cwiseMax(kLogEnergyFloor).array().log().matrix());
}

FeatureMatrix compute_features(const AudioSignal& signal) {
  return log_mel(frame_signal(signal));
}

FeatureMatrix crop_segment(const FeatureMatrix& features, int length, int start) {
  if (length < 15) throw Error("crop length below receptive field (15 frames)");
  if (features.frame_count() < length) throw Error("segment shorter than requested crop");
  if (start < 0 || start + length > features.frame_count())
    throw Error("crop start " + std::to_string(start) + " out of range");
  return FeatureMatrix(features.values().middleCols(start, length));
}

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature cache: " + path.string());
  out.write("SASF", 4);
  internal::write_u32_le(out, static_cast<std::uint32_t>(features.frame_count()));
  const Eigen::MatrixXd& v = features.values();
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index r = 0; r < v.rows(); ++r) internal::write_f64_le(out, v(r, c));
  if (!out) throw Error("failed writing feature cache: " + path.string());
}

FeatureMatrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature cache: " + path.string());
  const std::string what = "feature cache " + path.string();
  char magic[4];
  internal::read_exact(in, magic, 4, what);
  if (std::memcmp(magic, "SASF", 4) != 0) throw Error("bad feature cache magic: " + path.string());
  const std::uint32_t frames = internal::read_u32_le(in, what);
  Eigen::MatrixXd v(kNumMelBins, frames);
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) = internal::read_f64_le(in, what);
  return FeatureMatrix(std::move(v));
}

}  // namespace sasn
