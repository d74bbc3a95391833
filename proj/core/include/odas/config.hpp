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

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "odas/types.hpp"

namespace odas {

// Raised for any problem with a configuration document. path() names the
// offending field ("general.mics[3].fov_deg"), or is empty for syntax errors,
// in which case offset() holds the byte position of the failure.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message,
              std::size_t offset = 0);
  const std::string& path() const { return path_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::size_t offset_;
};

struct RawInputConfig {
  int sample_rate_hz = 16000;
  int bits_per_sample = 16;
  int n_channels = 8;
  int hop_size_samples = 256;

  bool operator==(const RawInputConfig&) const = default;
};

struct MicSpec {
  Vec3 position_m = Vec3::Zero();
  Vec3 orientation = Vec3::UnitZ();
  double fov_deg = 360.0;
  // Position uncertainty (standard deviation, meters). Widens the TDOA search
  // window of every pair this microphone belongs to.
  double sigma_pos_m = 0.0;

  bool omnidirectional() const { return fov_deg >= 360.0; }
  bool operator==(const MicSpec&) const = default;
};

struct GeneralConfig {
  int frame_size_samples = 512;
  int hop_size_samples = 256;
  int fs_processing_hz = 16000;
  double speed_of_sound_mps = 343.0;
  double speed_of_sound_uncertainty_mps = 0.0;
  std::vector<MicSpec> mics;

  bool operator==(const GeneralConfig&) const = default;
};

struct McraConfig {
  double alpha_s = 0.8;
  double alpha_p = 0.2;
  double alpha_d = 0.95;
  int L_window = 150;
  double delta = 5.0;

  bool operator==(const McraConfig&) const = default;
};

enum class HalfSphereMode { kAuto, kOn, kOff };

struct SslConfig {
  int n_potential_doas = 4;
  int interpolation_rate = 1;
  int coarse_level = 2;
  int fine_level = 4;
  HalfSphereMode scan_half_sphere = HalfSphereMode::kAuto;
  bool snr_weighting = true;
  bool hierarchical = true;
  bool prune_pairs = true;

  bool operator==(const SslConfig&) const = default;
};

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;

  double pdf(double x) const;
  bool operator==(const GaussianMixture&) const = default;
};

struct SstConfig {
  double sigma_pos = 0.02;
  double sigma_vel = 0.2;
  double measurement_sigma = 0.05;
  double initial_velocity_sigma = 0.3;
  GaussianMixture gmm_active;
  GaussianMixture gmm_diffuse;
  double p_false = 0.1;
  double p_new = 0.1;
  double probability_floor = 0.3;
  double activity_forgetting = 0.9;
  int n_confirm = 7;
  int n_forget = 50;
  int max_tracks = 4;

  SstConfig();
  bool operator==(const SstConfig&) const = default;
};

enum class SeparationMethod { kDelayAndSum, kGss };

struct PostfilterConfig {
  bool enabled = false;
  double leakage = 0.25;
  double gain_min_db = -20.0;
  double alpha_dd = 0.9;

  bool operator==(const PostfilterConfig&) const = default;
};

struct SssConfig {
  SeparationMethod method = SeparationMethod::kDelayAndSum;
  bool use_subarray = true;
  double gss_step_size = 0.01;
  double gss_constraint_weight = 0.5;
  PostfilterConfig postfilter;
  int output_bits_per_sample = 16;
  // Fixed target directions; when non-empty, tracking is bypassed and these
  // are beamformed every frame.
  std::vector<Vec3> fixed_targets;

  bool operator==(const SssConfig&) const = default;
};

struct PipelineConfig {
  RawInputConfig raw;
  std::vector<int> mapping;
  GeneralConfig general;
  McraConfig mcra;
  SslConfig ssl;
  SstConfig sst;
  SssConfig sss;

  // Resolved from ssl.scan_half_sphere and the geometry at parse time.
  bool half_sphere() const;

  bool operator==(const PipelineConfig&) const = default;
};

inline constexpr double kPlanarityEpsilonM = 1e-4;

// True iff every microphone lies within eps of the least-squares plane
// through all positions. Fewer than three microphones are always planar.
bool detect_planarity(std::span<const MicSpec> mics,
                      double eps = kPlanarityEpsilonM);

PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

// Throws ConfigError for the first violated constraint.
void validate_config(const PipelineConfig& cfg);

}  // namespace odas
