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
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odas/config.hpp"
#include "odas/geometry.hpp"
#include "odas/ssl.hpp"
#include "odas/types.hpp"

namespace odas {

// Unit vector for azimuth (from +x toward +y) and elevation (toward +z).
Vec3 direction_from_az_el(double az_deg, double el_deg);
Vec3 random_unit_vector(std::mt19937_64& rng, bool upper_half = false);

// ---- reference arrays ------------------------------------------------------

// Eight microphones on the four vertical faces of a 0.1 m cube turned 45
// degrees about z, two per face at heights +-0.04 m, facing outward.
std::vector<MicSpec> cube_array(double fov_deg = 180.0);
// n omnidirectional microphones on a horizontal circle.
std::vector<MicSpec> circular_array(int n, double radius_m);
// Two horizontal squares of four omnidirectional microphones at z = +-0.05 m,
// the upper one rotated 45 degrees.
std::vector<MicSpec> open_array_8();

// ---- directivity -----------------------------------------------------------

enum class DirectivityModel { kNone, kOccluding };

inline constexpr double kOccludedGainDb = -30.0;

// Amplitude gain of `mic` for a wave arriving from `direction`. kOccluding
// uses a raised cosine 0.5 (1 + cos(pi theta / fov)) inside the field of view
// and a -30 dB floor outside it; omnidirectional microphones always get 1.
double directivity_gain(const MicSpec& mic, const Vec3& direction,
                        DirectivityModel model);

// ---- scenes ----------------------------------------------------------------

enum class SignalKind { kWhite, kTone, kSpeechShaped };

struct Keyframe {
  double time_s = 0.0;
  double az_deg = 0.0;
  double el_deg = 0.0;
};

// Piecewise-linear path in (azimuth, elevation); a single keyframe is a
// fixed source.
struct Trajectory {
  std::vector<Keyframe> keyframes;

  Vec3 direction_at(double time_s) const;
  bool fixed() const { return keyframes.size() <= 1; }
};

struct SceneSource {
  SignalKind kind = SignalKind::kWhite;
  double tone_hz = 1000.0;
  double level_db = -20.0;  // signal power re a unit-variance signal
  Trajectory trajectory;
  // Activity intervals [start, end) in seconds; empty means always on.
  std::vector<std::pair<double, double>> active;
  // Seed for this source's signal; derived from the scene seed when unset.
  std::optional<std::uint64_t> seed;

  bool active_at(double time_s) const;
};

struct Scene {
  std::vector<SceneSource> sources;
  std::vector<MicSpec> mics;
  DirectivityModel directivity = DirectivityModel::kNone;
  int fs_hz = 16000;
  double speed_of_sound_mps = 343.0;
  double noise_floor_db = -40.0;  // per-mic white noise power
  double duration_s = 1.0;
  std::uint64_t seed = 1;
  // Framing used for the per-frame ground truth.
  int frame_size = 512;
  int hop_size = 256;
};

struct SourceTruth {
  int source = 0;
  Vec3 direction = Vec3::UnitX();
  bool active = true;
};

struct FrameTruth {
  std::size_t frame_index = 0;
  std::vector<SourceTruth> sources;
};

struct Rendering {
  std::vector<Signal> mix;                          // [mic][sample]
  std::vector<std::vector<Signal>> contributions;   // [source][mic][sample]
  std::vector<Signal> noise;                        // [mic][sample]
  std::vector<FrameTruth> truth;
};

// Free-field far-field rendering. Fixed sources are delayed exactly with a
// circular fractional shift over the whole signal; moving sources use a
// windowed-sinc read at a per-sample delay.
Rendering render(const Scene& scene);

// Source waveform before propagation (level applied, activity gated).
Signal source_signal(const SceneSource& source, int fs_hz, std::size_t n_samples,
                     std::uint64_t seed);

Scene parse_scene(std::string_view json_text);
Scene load_scene(const std::string& path);
std::string serialize_scene(const Scene& scene);

// One JSON object per line: {"frame":k,"sources":[{"index":i,"x":..,"y":..,"z":..}]}.
std::string serialize_truth(std::span<const FrameTruth> truth);

// ---- measurement oracles ---------------------------------------------------

struct ExhaustiveScan {
  std::size_t index = 0;
  Vec3 direction = Vec3::UnitZ();
  double power = 0.0;        // best steered sum divided by the pair count
  std::vector<double> map;   // steered sum at every grid point
};

// Steered power at every point of `grid` without hierarchy, then argmax
// (lowest index on ties).
ExhaustiveScan oracle_exhaustive_scan(const CrossCorrelations& cc,
                                      const ScanGrid& grid,
                                      const PairTable& table);

inline constexpr double kSirCapDb = 80.0;

// Least-squares projection of `output` onto all `references`; the SIR of
// `target` is the energy of its projected component over the energy of the
// others, in dB, capped at +-80.
double measure_sir(std::span<const double> output,
                   std::span<const Signal> references, std::size_t target);

double signal_power(std::span<const double> x);
double power_db(double power);

// One-dimensional expectation-maximization fit with quantile initialization.
GaussianMixture fit_gmm(std::span<const double> samples, int n_components,
                        int max_iterations = 200);

struct PowerSamples {
  std::vector<double> active;
  std::vector<double> diffuse;
};

// SRP powers from single-source scenes cycling through the open, circular and
// cube arrays at 0..20 dB SNR. Each scene has 1 s of noise, then 2 s of a
// white or speech-shaped source. Potential DOAs within 10 degrees of the
// source are active samples; those before the onset or more than 30 degrees
// away are diffuse.
PowerSamples collect_power_samples(int n_scenes, std::uint64_t seed);

}  // namespace odas
