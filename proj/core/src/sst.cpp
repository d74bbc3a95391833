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

#include "odas/sst.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace odas {

Mat6 process_noise(double sigma_pos, double sigma_vel, double dt) {
  Mat6 q = Mat6::Zero();
  q.topLeftCorner<3, 3>() = Mat3::Identity() * sigma_pos * sigma_pos * dt;
  q.bottomRightCorner<3, 3>() = Mat3::Identity() * sigma_vel * sigma_vel * dt;
  return q;
}

KalmanState kalman_predict(const KalmanState& s, double dt, const Mat6& Q) {
  if (!(dt > 0.0)) throw Error("kalman_predict: dt must be positive");
  Mat6 F = Mat6::Identity();
  F.topRightCorner<3, 3>() = Mat3::Identity() * dt;
  KalmanState out;
  out.x = F * s.x;
  out.P = F * s.P * F.transpose() + Q;
  out.P = 0.5 * (out.P + out.P.transpose());
  return out;
}

Mat3 innovation_covariance(const KalmanState& s, const Mat3& R) {
  return s.P.topLeftCorner<3, 3>() + R;
}

KalmanState kalman_update(const KalmanState& s, const Vec3& z, const Mat3& R) {
  const Mat3 S = innovation_covariance(s, R);
  Eigen::LLT<Mat3> llt(S);
  if (llt.info() != Eigen::Success) {
    throw Error("kalman_update: innovation covariance is not positive definite");
  }
  // K = P H^T S^-1; P H^T is the left 6x3 block of P.
  const Eigen::Matrix<double, 6, 3> PHt = s.P.leftCols<3>();
  const Eigen::Matrix<double, 6, 3> K = llt.solve(PHt.transpose()).transpose();
  KalmanState out;
  out.x = s.x + K * (z - s.x.head<3>());
  Eigen::Matrix<double, 6, 6> IKH = Mat6::Identity();
  IKH.leftCols<3>() -= K;
  out.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
  out.P = 0.5 * (out.P + out.P.transpose());
  return out;
}

PowerModels PowerModels::from_config(const SstConfig& cfg) {
  return PowerModels{cfg.gmm_active, cfg.gmm_diffuse, cfg.p_false, cfg.p_new};
}

double spatial_likelihood(const Vec3& observation, const KalmanState& predicted,
                          const Mat3& R) {
  const double var = innovation_covariance(predicted, R).trace() / 3.0;
  const double theta = angle_between(observation, predicted.position());
  return std::exp(-0.5 * theta * theta / var) / (2.0 * kPi * var);
}

Assignment assign(std::span<const PotentialDoa> observations,
                  std::span<const TrackedSource> tracks,
                  const PowerModels& models, const Mat3& R, double floor) {
  const std::size_t n_obs = observations.size();
  const std::size_t n_tracks = tracks.size();
  const double uniform = 1.0 / (4.0 * kPi);
  const double p_track =
      n_tracks > 0 ? (1.0 - models.p_false - models.p_new) / static_cast<double>(n_tracks)
                   : 0.0;

  Assignment out;
  out.observations.resize(n_obs);
  out.posteriors.assign(n_obs, std::vector<double>(n_tracks + 2, 0.0));
  std::vector<double> l_new(n_obs), l_false(n_obs);

  for (std::size_t o = 0; o < n_obs; ++o) {
    const PotentialDoa& obs = observations[o];
    const double active = models.active.pdf(obs.power);
    const double diffuse = models.diffuse.pdf(obs.power);
    std::vector<double>& post = out.posteriors[o];
    for (std::size_t t = 0; t < n_tracks; ++t) {
      post[t] = p_track * active *
                spatial_likelihood(obs.direction, tracks[t].state, R);
    }
    l_new[o] = models.p_new * active * uniform;
    l_false[o] = models.p_false * diffuse * uniform;
    post[n_tracks] = l_new[o];
    post[n_tracks + 1] = l_false[o];
    double total = 0.0;
    for (double v : post) total += v;
    if (total > 0.0) {
      for (double& v : post) v /= total;
    } else {
      post[n_tracks + 1] = 1.0;
    }
  }

  // Best-first pairing; ties fall back to observation rank, then track order.
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t o = 0; o < n_obs; ++o) {
    for (std::size_t t = 0; t < n_tracks; ++t) {
      if (out.posteriors[o][t] >= floor) {
        candidates.emplace_back(out.posteriors[o][t], o, t);
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<bool> obs_taken(n_obs, false), track_taken(n_tracks, false);
  for (const auto& [prob, o, t] : candidates) {
    if (obs_taken[o] || track_taken[t]) continue;
    obs_taken[o] = track_taken[t] = true;
    out.observations[o] = {Hypothesis::kTrack, static_cast<int>(t), prob};
  }

  for (std::size_t o = 0; o < n_obs; ++o) {
    if (obs_taken[o]) continue;
    const double denom = l_new[o] + l_false[o];
    const double p_new = denom > 0.0 ? l_new[o] / denom : 0.0;
    if (p_new > 0.5) {
      out.observations[o] = {Hypothesis::kNew, -1, p_new};
    } else {
      out.observations[o] = {Hypothesis::kFalse, -1, 1.0 - p_new};
    }
  }
  return out;
}

Tracker::Tracker(const SstConfig& cfg, double dt)
    : cfg_(cfg),
      dt_(dt),
      Q_(process_noise(cfg.sigma_pos, cfg.sigma_vel, dt)),
      R_(Mat3::Identity() * cfg.measurement_sigma * cfg.measurement_sigma),
      models_(PowerModels::from_config(cfg)) {
  if (!(dt > 0.0)) throw Error("Tracker: dt must be positive");
}

TrackedSource Tracker::spawn(const PotentialDoa& obs, double probability) {
  TrackedSource t;
  t.serial = next_serial_++;
  t.state.x.head<3>() = obs.direction.normalized();
  t.state.x.tail<3>().setZero();
  t.state.P = Mat6::Zero();
  t.state.P.topLeftCorner<3, 3>() = R_;
  t.state.P.bottomRightCorner<3, 3>() = Mat3::Identity() *
                                        cfg_.initial_velocity_sigma *
                                        cfg_.initial_velocity_sigma;
  t.activity = (1.0 - cfg_.activity_forgetting) * probability;
  t.consecutive_support = 1;
  return t;
}

const std::vector<TrackedSource>& Tracker::step(
    std::span<const PotentialDoa> observations) {
  for (auto& t : tracks_) t.state = kalman_predict(t.state, dt_, Q_);

  last_ = assign(observations, tracks_, models_, R_, cfg_.probability_floor);

  const double beta = cfg_.activity_forgetting;
  std::vector<bool> supported(tracks_.size(), false);
  for (std::size_t o = 0; o < observations.size(); ++o) {
    const auto& a = last_.observations[o];
    if (a.kind != Hypothesis::kTrack) continue;
    auto& t = tracks_[static_cast<std::size_t>(a.track)];
    t.state = kalman_update(t.state, observations[o].direction, R_);
    t.activity = beta * t.activity + (1.0 - beta) * a.probability;
    t.frames_since_observed = 0;
    ++t.consecutive_support;
    supported[static_cast<std::size_t>(a.track)] = true;
  }
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    if (supported[i]) continue;
    tracks_[i].activity *= beta;
    ++tracks_[i].frames_since_observed;
    tracks_[i].consecutive_support = 0;
  }

  // Provisional tracks die on their first miss; confirmed ones after n_forget.
  std::erase_if(tracks_, [&](const TrackedSource& t) {
    return t.confirmed() ? t.frames_since_observed > cfg_.n_forget
                         : t.frames_since_observed > 0;
  });

  for (std::size_t o = 0; o < observations.size(); ++o) {
    const auto& a = last_.observations[o];
    if (a.kind == Hypothesis::kNew) {
      tracks_.push_back(spawn(observations[o], a.probability));
    }
  }

  for (auto& t : tracks_) {
    if (!t.confirmed() && t.consecutive_support >= cfg_.n_confirm) {
      t.id = next_id_++;
    }
  }

  while (tracks_.size() > static_cast<std::size_t>(cfg_.max_tracks)) {
    auto weakest = std::min_element(
        tracks_.begin(), tracks_.end(),
        [](const TrackedSource& a, const TrackedSource& b) {
          if (a.activity != b.activity) return a.activity < b.activity;
          return a.serial > b.serial;  // newest goes first on ties
        });
    tracks_.erase(weakest);
  }
  return tracks_;
}

std::vector<TrackedSource> Tracker::confirmed() const {
  std::vector<TrackedSource> out;
  for (const auto& t : tracks_) {
    if (t.confirmed()) out.push_back(t);
  }
  return out;
}

}  // namespace odas
