// Copyright 2026 The odas-cpp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odas/audio_io.hpp"
#include "odas/config.hpp"
#include "odas/fft.hpp"
#include "odas/geometry.hpp"
#include "odas/types.hpp"

namespace odas {

// Minima-controlled recursive averaging noise tracker, one state per
// (channel, bin). The first update initializes every estimate with that
// frame's power spectrum.
class NoiseEstimate {
 public:
  NoiseEstimate(const McraConfig& cfg, std::size_t n_channels,
                std::size_t n_bins);

  void update(const SpectralFrame& frame);
  void update_channel(std::size_t channel, std::span<const Complex> bins);

  // Stationary noise power lambda_d.
  std::span<const double> noise(std::size_t channel) const {
    return lambda_[channel];
  }
  std::span<const double> speech_probability(std::size_t channel) const {
    return p_[channel];
  }
  std::size_t n_channels() const { return lambda_.size(); }
  std::size_t n_bins() const { return n_bins_; }
  bool initialized(std::size_t channel) const { return frames_[channel] > 0; }

 private:
  McraConfig cfg_;
  std::size_t n_bins_;
  std::vector<Signal> lambda_;
  std::vector<Signal> smoothed_;
  std::vector<Signal> minimum_;
  std::vector<Signal> running_min_;
  std::vector<Signal> p_;
  std::vector<std::size_t> frames_;
};

// Per-bin gain xi / (1 + xi) with xi = max(|X|^2 / lambda - 1, 0).
double snr_weight(double power, double noise);

// Circular cross-correlation per pair; index 0 is lag 0, negative lags wrap.
struct CrossCorrelations {
  int interpolation_rate = 1;
  std::size_t length = 0;
  std::vector<Signal> values;  // one per pair

  double at(std::size_t pair, int lag) const {
    return values[pair][wrap(lag)];
  }
  double& at(std::size_t pair, int lag) { return values[pair][wrap(lag)]; }
  std::size_t wrap(int lag) const {
    const auto n = static_cast<std::ptrdiff_t>(length);
    return static_cast<std::size_t>(((lag % n) + n) % n);
  }
};

// GCC-PHAT through an inverse FFT. The phase-transformed cross spectrum
// conj(X_i) X_j / (|X_i||X_j| + eps) is zero-padded to frame_size * rate bins
// before the inverse transform, so the peak lag is the delay of mic j
// relative to mic i in interpolated samples. Values are normalized so two
// identical channels give 1 at lag 0, up to a
// tiny regularizer in the denominator.
class GccPhat {
 public:
  GccPhat(std::size_t frame_size, int interpolation_rate,
          std::vector<MicPair> pairs);

  // noise == nullptr disables the SNR weighting.
  CrossCorrelations compute(const SpectralFrame& frame,
                            const NoiseEstimate* noise);

  const std::vector<MicPair>& pairs() const { return pairs_; }

 private:
  std::size_t frame_size_;
  int rate_;
  std::vector<MicPair> pairs_;
  RealFft fft_;
  Spectrum padded_;
  std::vector<Signal> weights_;
  std::vector<Signal> mags_;
};

struct PotentialDoa {
  Vec3 direction = Vec3::UnitZ();
  double power = 0.0;  // mean steered correlation per pair, clamped at 0
  std::size_t frame_index = 0;
  int rank = 1;
  std::size_t grid_index = 0;  // index into the fine grid
};

struct ScanCounters {
  std::uint64_t frames = 0;
  std::uint64_t pairs_computed = 0;
  std::uint64_t coarse_points = 0;
  std::uint64_t fine_points = 0;

  ScanCounters& operator+=(const ScanCounters& o) {
    frames += o.frames;
    pairs_computed += o.pairs_computed;
    coarse_points += o.coarse_points;
    fine_points += o.fine_points;
    return *this;
  }
};

// Steered response power over precomputed tables. Each (pair, point) term is
// the maximum correlation inside that entry's lag window; only pairs whose
// microphones both see the point contribute.
double steered_power(const CrossCorrelations& cc, const PairTable& table,
                     std::size_t point);

// Everything the scanner needs, built once per geometry.
struct ScanSetup {
  ScanGrid coarse;
  ScanGrid fine;
  PairTable coarse_table;  // windows widened over each coarse cell
  PairTable fine_table;
  RefinementMap refinement;
};

ScanSetup make_scan_setup(std::span<const MicSpec> mics,
                          const std::vector<MicPair>& pairs, int coarse_level,
                          int fine_level, bool half_sphere,
                          const TableParams& params);

class SrpScanner {
 public:
  SrpScanner(std::shared_ptr<const ScanSetup> setup, bool hierarchical);

  // Repeats n_potential times: scan (coarse then fine, or fine only), emit
  // the argmax, then clear the winning TDOAs (+-1 lag) in every visible pair
  // so the next scan finds another source. cc is consumed.
  std::vector<PotentialDoa> scan(CrossCorrelations cc, int n_potential,
                                 std::size_t frame_index,
                                 ScanCounters* counters = nullptr) const;

  const ScanSetup& setup() const { return *setup_; }
  bool hierarchical() const { return hierarchical_; }

 private:
  std::shared_ptr<const ScanSetup> setup_;
  bool hierarchical_;
};

// Full localization stage: noise tracking, GCC-PHAT and SRP scan.
class Localizer {
 public:
  // cache_dir, when non-empty, stores and reuses the fine and coarse tables.
  explicit Localizer(const PipelineConfig& cfg, const std::string& cache_dir = "");

  std::vector<PotentialDoa> process(const SpectralFrame& frame);

  const NoiseEstimate& noise() const { return noise_; }
  const ScanCounters& counters() const { return counters_; }
  const ScanSetup& setup() const { return scanner_.setup(); }
  const std::vector<MicPair>& pairs() const { return gcc_.pairs(); }

 private:
  Localizer(const PipelineConfig& cfg, std::shared_ptr<const ScanSetup> setup);

  SslConfig ssl_;
  NoiseEstimate noise_;
  GccPhat gcc_;
  SrpScanner scanner_;
  ScanCounters counters_;
};

}  // namespace odas
