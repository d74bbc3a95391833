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

#include "odas/sss.hpp"

#include <algorithm>
#include <cmath>

namespace odas {

std::vector<int> select_subarray(std::span<const MicSpec> mics,
                                 const Vec3& direction, bool* fell_back) {
  std::vector<int> out;
  for (std::size_t m = 0; m < mics.size(); ++m) {
    if (mic_sees(mics[m], direction)) out.push_back(static_cast<int>(m));
  }
  const bool empty = out.empty();
  if (fell_back != nullptr) *fell_back = empty;
  if (empty) {
    for (std::size_t m = 0; m < mics.size(); ++m) out.push_back(static_cast<int>(m));
  }
  return out;
}

int reference_mic(std::span<const MicSpec> mics, std::span<const int> members) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& m : mics) centroid += m.position_m;
  centroid /= static_cast<double>(mics.size());
  int best = members.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (int m : members) {
    const double d = (mics[static_cast<std::size_t>(m)].position_m - centroid).norm();
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

SteeringTarget make_steering_target(std::span<const MicSpec> mics, int track_id,
                                    const Vec3& direction, double fs_hz,
                                    double speed_of_sound, bool use_subarray) {
  SteeringTarget t;
  t.track_id = track_id;
  t.direction = direction.normalized();
  if (use_subarray) {
    t.subarray = select_subarray(mics, t.direction);
  } else {
    for (std::size_t m = 0; m < mics.size(); ++m) t.subarray.push_back(static_cast<int>(m));
  }
  t.reference = reference_mic(mics, t.subarray);
  const Vec3& p_ref = mics[static_cast<std::size_t>(t.reference)].position_m;
  for (int m : t.subarray) {
    const Vec3& p = mics[static_cast<std::size_t>(m)].position_m;
    t.delays.push_back(fs_hz * (p_ref - p).dot(t.direction) / speed_of_sound);
  }
  return t;
}

Spectrum delay_and_sum(const SpectralFrame& frame, const SteeringTarget& target) {
  const std::size_t n_bins = frame.n_bins();
  const double n = static_cast<double>(frame.frame_size);
  Spectrum out(n_bins, Complex(0.0, 0.0));
  const double scale = 1.0 / static_cast<double>(target.subarray.size());
  for (std::size_t s = 0; s < target.subarray.size(); ++s) {
    const Spectrum& x = frame.bins[static_cast<std::size_t>(target.subarray[s])];
    const double tau = target.delays[s];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double phase = 2.0 * kPi * static_cast<double>(k) * tau / n;
      out[k] += x[k] * std::polar(1.0, phase);
    }
  }
  for (auto& v : out) v *= scale;
  return out;
}

// ---------------------------------------------------------------------------

GssSeparator::GssSeparator(std::vector<MicSpec> mics, double fs_hz,
                           double speed_of_sound, std::size_t frame_size,
                           double step_size, double constraint_weight)
    : mics_(std::move(mics)),
      fs_hz_(fs_hz),
      speed_of_sound_(speed_of_sound),
      frame_size_(frame_size),
      n_bins_(frame_size / 2 + 1) {
  std::vector<int> all(mics_.size());
  for (std::size_t m = 0; m < all.size(); ++m) all[m] = static_cast<int>(m);
  reference_ = reference_mic(mics_, all);
  state_.step_size = step_size;
  state_.constraint_weight = constraint_weight;
}

CMatrix GssSeparator::steering(std::size_t bin,
                               std::span<const SteeringTarget> targets) const {
  const std::size_t n_mics = mics_.size();
  CMatrix A(static_cast<Eigen::Index>(n_mics), static_cast<Eigen::Index>(targets.size()));
  const Vec3& p_ref = mics_[static_cast<std::size_t>(reference_)].position_m;
  for (std::size_t s = 0; s < targets.size(); ++s) {
    const Vec3 d = targets[s].direction.normalized();
    for (std::size_t m = 0; m < n_mics; ++m) {
      const double tau = fs_hz_ * (p_ref - mics_[m].position_m).dot(d) / speed_of_sound_;
      const double phase = -2.0 * kPi * static_cast<double>(bin) * tau /
                           static_cast<double>(frame_size_);
      A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(s)) = std::polar(1.0, phase);
    }
  }
  return A;
}

void GssSeparator::reset_to_steering() {
  state_.W.resize(n_bins_);
  for (std::size_t k = 0; k < n_bins_; ++k) {
    state_.W[k] = A_[k].adjoint() / static_cast<double>(A_[k].rows());
  }
}

void GssSeparator::set_targets(std::span<const SteeringTarget> targets) {
  A_.resize(n_bins_);
  for (std::size_t k = 0; k < n_bins_; ++k) A_[k] = steering(k, targets);
  std::vector<int> ids;
  for (const auto& t : targets) ids.push_back(t.track_id);
  // Same sources in the same order: keep adapting; the constraint term pulls
  // the rows toward the new directions.
  if (ids != state_.track_ids || state_.W.empty()) {
    state_.track_ids = ids;
    reset_to_steering();
  }
}

std::vector<Spectrum> GssSeparator::apply(const SpectralFrame& frame) const {
  const std::size_t n_out = state_.track_ids.size();
  std::vector<Spectrum> out(n_out, Spectrum(n_bins_));
  Eigen::VectorXcd x(static_cast<Eigen::Index>(mics_.size()));
  for (std::size_t k = 0; k < n_bins_ && n_out > 0; ++k) {
    for (std::size_t m = 0; m < mics_.size(); ++m) x(static_cast<Eigen::Index>(m)) = frame.bins[m][k];
    const Eigen::VectorXcd y = state_.W[k] * x;
    for (std::size_t s = 0; s < n_out; ++s) out[s][k] = y(static_cast<Eigen::Index>(s));
  }
  return out;
}

std::vector<Spectrum> GssSeparator::step(const SpectralFrame& frame,
                                         std::span<const SteeringTarget> targets) {
  if (frame.n_channels() != mics_.size()) {
    throw Error("GssSeparator: channel count mismatch");
  }
  if (targets.empty()) {
    state_.track_ids.clear();
    state_.W.clear();
    return {};
  }
  set_targets(targets);
  std::vector<Spectrum> out = apply(frame);

  double in_power = 0.0;
  double out_power = 0.0;
  for (std::size_t m = 0; m < mics_.size(); ++m) {
    for (const auto& v : frame.bins[m]) in_power += std::norm(v);
  }
  in_power /= static_cast<double>(mics_.size());
  for (const auto& o : out) {
    for (const auto& v : o) out_power += std::norm(v);
  }
  if (out_power > 1e3 * in_power && in_power > 0.0) {
    ++state_.resets;
    reset_to_steering();
    out = apply(frame);
  }

  const double mu = state_.step_size;
  if (mu == 0.0) return out;
  const double lambda = state_.constraint_weight;
  const auto n_out = static_cast<Eigen::Index>(targets.size());
  Eigen::VectorXcd x(static_cast<Eigen::Index>(mics_.size()));
  for (std::size_t k = 0; k < n_bins_; ++k) {
    for (std::size_t m = 0; m < mics_.size(); ++m) x(static_cast<Eigen::Index>(m)) = frame.bins[m][k];
    CMatrix& W = state_.W[k];
    const CMatrix& A = A_[k];
    const Eigen::VectorXcd y = W * x;

    CMatrix grad = 2.0 * lambda * (W * A - CMatrix::Identity(n_out, n_out)) * A.adjoint();
    const double rxx = x.squaredNorm();
    if (rxx > 1e-20) {
      CMatrix E = y * y.adjoint();
      E.diagonal().setZero();
      grad += (4.0 / (rxx * rxx)) * (E * y) * x.adjoint();
    }
    W -= mu * grad;
  }
  return out;
}

double GssSeparator::constraint_residual() const {
  double r = 0.0;
  for (std::size_t k = 0; k < state_.W.size(); ++k) {
    const auto s = A_[k].cols();
    r += (state_.W[k] * A_[k] - CMatrix::Identity(s, s)).squaredNorm();
  }
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// E1(v) = -Ei(-v) for v > 0.
double exp_integral_e1(double v) { return -std::expint(-v); }

}  // namespace

Signal postfilter_gains(std::span<const Complex> separated,
                        std::span<const double> noise,
                        std::span<const Spectrum> competing,
                        const PostfilterConfig& cfg, PostfilterMemory& memory) {
  const std::size_t n = separated.size();
  const double g_min = std::pow(10.0, cfg.gain_min_db / 20.0);
  const bool first = memory.gain.size() != n;
  if (first) {
    memory.gain.assign(n, 1.0);
    memory.gamma.assign(n, 1.0);
  }
  Signal gains(n, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double power = std::norm(separated[k]);
    double interference = noise.empty() ? 0.0 : noise[k];
    for (const auto& c : competing) interference += cfg.leakage * std::norm(c[k]);

    double g = 1.0;
    double gamma = 0.0;
    if (interference > 0.0) {
      gamma = power / interference;
      const double ml = std::max(gamma - 1.0, 0.0);
      const double xi =
          first ? ml
                : cfg.alpha_dd * memory.gain[k] * memory.gain[k] * memory.gamma[k] +
                      (1.0 - cfg.alpha_dd) * ml;
      if (xi <= 1e-12) {
        g = g_min;
      } else {
        const double v = std::max(xi * gamma / (1.0 + xi), 1e-12);
        g = xi / (1.0 + xi) * std::exp(0.5 * exp_integral_e1(v));
      }
    } else {
      gamma = power > 0.0 ? 1e12 : 0.0;
    }
    g = std::clamp(g, g_min, 1.0);
    gains[k] = g;
    memory.gain[k] = g;
    memory.gamma[k] = gamma;
  }
  return gains;
}

Spectrum apply_gains(std::span<const Complex> spectrum, std::span<const double> gains) {
  Spectrum out(spectrum.size());
  for (std::size_t k = 0; k < spectrum.size(); ++k) out[k] = spectrum[k] * gains[k];
  return out;
}

// ---------------------------------------------------------------------------

Separator::Separator(const PipelineConfig& cfg)
    : cfg_(cfg),
      gss_(cfg.general.mics, cfg.general.fs_processing_hz,
           cfg.general.speed_of_sound_mps,
           static_cast<std::size_t>(cfg.general.frame_size_samples),
           cfg.sss.gss_step_size, cfg.sss.gss_constraint_weight) {}

std::vector<Separator::Output> Separator::process(const SpectralFrame& frame,
                                                  std::span<const Target> targets) {
  const auto& g = cfg_.general;
  std::vector<SteeringTarget> steering;
  for (const auto& t : targets) {
    SteeringTarget st = make_steering_target(
        g.mics, t.track_id, t.direction, g.fs_processing_hz,
        g.speed_of_sound_mps, cfg_.sss.use_subarray);
    if (cfg_.sss.use_subarray) {
      bool fell_back = false;
      select_subarray(g.mics, st.direction, &fell_back);
      if (fell_back) ++fallbacks_;
    }
    steering.push_back(std::move(st));
  }

  std::vector<Output> out(targets.size());
  if (cfg_.sss.method == SeparationMethod::kGss) {
    auto separated = gss_.step(frame, steering);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out[i].separated = std::move(separated[i]);
      mic_channels_used_ += g.mics.size();
    }
  } else {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      out[i].separated = delay_and_sum(frame, steering[i]);
      mic_channels_used_ += steering[i].subarray.size();
    }
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out[i].track_id = targets[i].track_id;
    out[i].subarray = steering[i].subarray;
  }

  // Forget memories of tracks that are gone.
  std::erase_if(memory_, [&](const auto& kv) {
    return std::none_of(targets.begin(), targets.end(),
                        [&](const Target& t) { return t.track_id == kv.first; });
  });

  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!cfg_.sss.postfilter.enabled) {
      out[i].postfiltered = out[i].separated;
      out[i].gains.assign(out[i].separated.size(), 1.0);
      continue;
    }
    auto it = memory_.find(out[i].track_id);
    if (it == memory_.end()) {
      it = memory_
               .emplace(out[i].track_id,
                        TrackMemory{NoiseEstimate(cfg_.mcra, 1, frame.n_bins()), {}})
               .first;
    }
    it->second.noise.update_channel(0, out[i].separated);
    std::vector<Spectrum> competing;
    for (std::size_t j = 0; j < out.size(); ++j) {
      if (j != i) competing.push_back(out[j].separated);
    }
    out[i].gains = postfilter_gains(out[i].separated, it->second.noise.noise(0),
                                    competing, cfg_.sss.postfilter,
                                    it->second.postfilter);
    out[i].postfiltered = apply_gains(out[i].separated, out[i].gains);
  }
  return out;
}

}  // namespace odas
