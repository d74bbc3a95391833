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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "odas/config.hpp"
#include "odas/ssl.hpp"
#include "odas/types.hpp"

namespace odas {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Constant-velocity state in Cartesian coordinates: [position; velocity].
struct KalmanState {
  Vec6 x = Vec6::Zero();
  Mat6 P = Mat6::Identity();

  Vec3 position() const { return x.head<3>(); }
  Vec3 velocity() const { return x.tail<3>(); }
};

// Q = diag(sigma_pos^2 dt I3, sigma_vel^2 dt I3).
Mat6 process_noise(double sigma_pos, double sigma_vel, double dt);

// x <- F x, P <- F P F^T + Q with F = [I dt*I; 0 I].
KalmanState kalman_predict(const KalmanState& s, double dt, const Mat6& Q);

// Linear update with H = [I3 0] and a Joseph-form covariance update. Throws
// Error if the innovation covariance is not positive definite.
KalmanState kalman_update(const KalmanState& s, const Vec3& z, const Mat3& R);

// Innovation covariance H P H^T + R.
Mat3 innovation_covariance(const KalmanState& s, const Mat3& R);

struct TrackedSource {
  int id = 0;                    // output id, 0 while provisional
  std::uint64_t serial = 0;      // unique for every track ever created
  KalmanState state;
  double activity = 0.0;
  int frames_since_observed = 0;
  int consecutive_support = 0;

  bool confirmed() const { return id != 0; }
  Vec3 direction() const { return state.position().normalized(); }
};

struct PowerModels {
  GaussianMixture active;
  GaussianMixture diffuse;
  double p_false = 0.1;
  double p_new = 0.1;

  static PowerModels from_config(const SstConfig& cfg);
};

// Density (per steradian) of observing `observation` given a track whose
// predicted position and innovation covariance are known: an isotropic
// Gaussian in the angle between the observation and the predicted direction,
// with per-axis variance trace(S) / 3.
double spatial_likelihood(const Vec3& observation, const KalmanState& predicted,
                          const Mat3& R);

enum class Hypothesis { kTrack, kNew, kFalse };

struct ObservationAssignment {
  Hypothesis kind = Hypothesis::kFalse;
  int track = -1;              // index into the track list for kTrack
  double probability = 0.0;    // posterior of the chosen hypothesis
};

struct Assignment {
  std::vector<ObservationAssignment> observations;
  // posteriors[o] = [P(track_0 | o), ..., P(track_{T-1} | o), P(new | o), P(false | o)]
  std::vector<std::vector<double>> posteriors;
};

// Tracks must already be predicted to the observation time. Observation o
// and track t are paired best-first by posterior; pairings below `floor` are
// rejected. Leftover observations become new sources when the new-source
// likelihood beats the false-detection likelihood.
Assignment assign(std::span<const PotentialDoa> observations,
                  std::span<const TrackedSource> tracks,
                  const PowerModels& models, const Mat3& R, double floor);

// Multi-source tracker: predict, assign, update, then manage birth,
// confirmation and deletion.
class Tracker {
 public:
  Tracker(const SstConfig& cfg, double dt);

  const std::vector<TrackedSource>& step(std::span<const PotentialDoa> observations);

  const std::vector<TrackedSource>& tracks() const { return tracks_; }
  std::vector<TrackedSource> confirmed() const;
  const Assignment& last_assignment() const { return last_; }
  double dt() const { return dt_; }

 private:
  TrackedSource spawn(const PotentialDoa& obs, double probability);

  SstConfig cfg_;
  double dt_;
  Mat6 Q_;
  Mat3 R_;
  PowerModels models_;
  std::vector<TrackedSource> tracks_;
  Assignment last_;
  int next_id_ = 1;
  std::uint64_t next_serial_ = 1;
};

}  // namespace odas
