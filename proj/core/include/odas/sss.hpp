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
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "odas/audio_io.hpp"
#include "odas/config.hpp"
#include "odas/ssl.hpp"
#include "odas/types.hpp"

namespace odas {

// Microphones whose field of view contains `direction` (closed test, so a
// direction exactly on the boundary is included). Falls back to the full
// array when nothing qualifies and sets *fell_back.
std::vector<int> select_subarray(std::span<const MicSpec> mics,
                                 const Vec3& direction,
                                 bool* fell_back = nullptr);

// Index of the microphone in `members` closest to the centroid of `mics`.
int reference_mic(std::span<const MicSpec> mics, std::span<const int> members);

struct SteeringTarget {
  int track_id = 0;
  Vec3 direction = Vec3::UnitX();
  std::vector<int> subarray;
  int reference = 0;
  // delays[n]: samples by which subarray[n] lags the reference mic,
  // fs * (p_ref - p_m) . d / c.
  std::vector<double> delays;
};

SteeringTarget make_steering_target(std::span<const MicSpec> mics, int track_id,
                                    const Vec3& direction, double fs_hz,
                                    double speed_of_sound, bool use_subarray);

// Y(k) = 1/|S| sum_m X_m(k) exp(+j 2 pi k tau_m / N) over the subarray.
Spectrum delay_and_sum(const SpectralFrame& frame, const SteeringTarget& target);

using CMatrix = Eigen::MatrixXcd;

// Per-bin demixing matrices (targets x mics) of geometric source separation.
struct DemixState {
  std::vector<CMatrix> W;
  std::vector<int> track_ids;  // row order of every W
  double step_size = 0.01;
  double constraint_weight = 0.5;
  std::uint64_t resets = 0;
};

// Geometric source separation over the full array. Each frame the outputs
// are computed with the current demixing matrices, then every bin takes one
// normalized gradient step on
//   ||R_yy - diag(R_yy)||^2 + lambda ||W A - I||^2,
// where A holds the steering vectors of the targets. Matrices start at the
// full-array delay-and-sum rows A^H / M.
class GssSeparator {
 public:
  GssSeparator(std::vector<MicSpec> mics, double fs_hz, double speed_of_sound,
               std::size_t frame_size, double step_size,
               double constraint_weight);

  // Separates `frame` and adapts. Output order follows `targets`.
  std::vector<Spectrum> step(const SpectralFrame& frame,
                             std::span<const SteeringTarget> targets);

  // Separates with the current matrices, leaving the state untouched.
  std::vector<Spectrum> apply(const SpectralFrame& frame) const;

  // Rebuilds the steering matrices for `targets`. The demixing matrices are
  // reset when the set of track ids changes and kept otherwise. step() calls
  // this itself.
  void set_targets(std::span<const SteeringTarget> targets);

  // sum over bins of ||W A - I||_F^2 for the last targets seen.
  double constraint_residual() const;

  const DemixState& state() const { return state_; }

 private:
  CMatrix steering(std::size_t bin, std::span<const SteeringTarget> targets) const;
  void reset_to_steering();

  std::vector<MicSpec> mics_;
  double fs_hz_;
  double speed_of_sound_;
  std::size_t frame_size_;
  std::size_t n_bins_;
  int reference_;
  DemixState state_;
  std::vector<CMatrix> A_;
};

// Single-channel log-spectral-amplitude gain per bin, clamped to
// [G_min, 1]. Interference = stationary noise + leakage * sum of competing
// output powers. `memory` carries the decision-directed state between
// frames and may be empty on the first call.
struct PostfilterMemory {
  Signal gain;   // previous gains
  Signal gamma;  // previous posterior SNR
};

Signal postfilter_gains(std::span<const Complex> separated,
                        std::span<const double> noise,
                        std::span<const Spectrum> competing,
                        const PostfilterConfig& cfg, PostfilterMemory& memory);

Spectrum apply_gains(std::span<const Complex> spectrum, std::span<const double> gains);

// Separation stage: steering, DAS or GSS, optional post-filter.
class Separator {
 public:
  struct Target {
    int track_id = 0;
    Vec3 direction = Vec3::UnitX();
  };
  struct Output {
    int track_id = 0;
    Spectrum separated;
    Spectrum postfiltered;  // equals separated when the post-filter is off
    Signal gains;           // post-filter gain per bin, all 1 when off
    std::vector<int> subarray;
  };

  explicit Separator(const PipelineConfig& cfg);

  std::vector<Output> process(const SpectralFrame& frame,
                              std::span<const Target> targets);

  std::uint64_t mic_channels_used() const { return mic_channels_used_; }
  std::uint64_t subarray_fallbacks() const { return fallbacks_; }
  std::uint64_t gss_resets() const { return gss_.state().resets; }
  GssSeparator& gss() { return gss_; }

 private:
  struct TrackMemory {
    NoiseEstimate noise;
    PostfilterMemory postfilter;
  };

  PipelineConfig cfg_;
  GssSeparator gss_;
  std::map<int, TrackMemory> memory_;
  std::uint64_t mic_channels_used_ = 0;
  std::uint64_t fallbacks_ = 0;
};

}  // namespace odas
