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

#include "odas/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace odas {

NoiseEstimate::NoiseEstimate(const McraConfig& cfg, std::size_t n_channels,
                             std::size_t n_bins)
    : cfg_(cfg),
      n_bins_(n_bins),
      lambda_(n_channels, Signal(n_bins, 0.0)),
      smoothed_(n_channels, Signal(n_bins, 0.0)),
      minimum_(n_channels, Signal(n_bins, 0.0)),
      running_min_(n_channels, Signal(n_bins, 0.0)),
      p_(n_channels, Signal(n_bins, 0.0)),
      frames_(n_channels, 0) {}

void NoiseEstimate::update(const SpectralFrame& frame) {
  if (frame.n_channels() != lambda_.size()) {
    throw Error("NoiseEstimate: channel count mismatch");
  }
  for (std::size_t c = 0; c < frame.n_channels(); ++c) {
    update_channel(c, frame.bins[c]);
  }
}

void NoiseEstimate::update_channel(std::size_t c,
                                   std::span<const Complex> bins) {
  if (bins.size() != n_bins_) throw Error("NoiseEstimate: bin count mismatch");
  Signal& lambda = lambda_[c];
  Signal& s = smoothed_[c];
  Signal& smin = minimum_[c];
  Signal& stmp = running_min_[c];
  Signal& p = p_[c];

  if (frames_[c] == 0) {
    for (std::size_t k = 0; k < n_bins_; ++k) {
      const double power = std::norm(bins[k]);
      lambda[k] = s[k] = smin[k] = stmp[k] = power;
      p[k] = 0.0;
    }
    ++frames_[c];
    return;
  }

  const bool restart_window =
      frames_[c] % static_cast<std::size_t>(cfg_.L_window) == 0;
  for (std::size_t k = 0; k < n_bins_; ++k) {
    const double power = std::norm(bins[k]);
    s[k] = cfg_.alpha_s * s[k] + (1.0 - cfg_.alpha_s) * power;
    smin[k] = std::min(smin[k], s[k]);
    stmp[k] = std::min(stmp[k], s[k]);
    if (restart_window) {
      smin[k] = std::min(stmp[k], s[k]);
      stmp[k] = s[k];
    }
    const double present = s[k] > cfg_.delta * smin[k] ? 1.0 : 0.0;
    p[k] = cfg_.alpha_p * p[k] + (1.0 - cfg_.alpha_p) * present;
    const double alpha = cfg_.alpha_d + (1.0 - cfg_.alpha_d) * p[k];
    lambda[k] = alpha * lambda[k] + (1.0 - alpha) * power;
  }
  ++frames_[c];
}

double snr_weight(double power, double noise) {
  if (noise <= 0.0) return power > 0.0 ? 1.0 : 0.0;
  const double xi = std::max(power / noise - 1.0, 0.0);
  return xi / (1.0 + xi);
}

// ---------------------------------------------------------------------------

GccPhat::GccPhat(std::size_t frame_size, int interpolation_rate,
                 std::vector<MicPair> pairs)
    : frame_size_(frame_size),
      rate_(interpolation_rate),
      pairs_(std::move(pairs)),
      fft_(frame_size * static_cast<std::size_t>(interpolation_rate)),
      padded_(fft_.bins()) {
  if (interpolation_rate < 1) {
    throw Error("GccPhat: interpolation_rate must be >= 1");
  }
}

CrossCorrelations GccPhat::compute(const SpectralFrame& frame,
                                   const NoiseEstimate* noise) {
  const std::size_t n_bins = frame_size_ / 2 + 1;
  if (frame.n_bins() != n_bins) throw Error("GccPhat: frame size mismatch");
  const double eps = 1e-12 * static_cast<double>(frame_size_);

  // SNR weights per channel; the PHAT normalization itself is per pair.
  weights_.resize(frame.n_channels());
  mags_.resize(frame.n_channels());
  for (std::size_t c = 0; c < frame.n_channels(); ++c) {
    weights_[c].resize(n_bins);
    mags_[c].resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double mag = std::abs(frame.bins[c][k]);
      mags_[c][k] = mag;
      weights_[c][k] =
          noise != nullptr ? snr_weight(mag * mag, noise->noise(c)[k]) : 1.0;
    }
  }

  CrossCorrelations out;
  out.interpolation_rate = rate_;
  out.length = fft_.size();
  out.values.resize(pairs_.size(), Signal(fft_.size(), 0.0));
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const auto i = static_cast<std::size_t>(pairs_[p].i);
    const auto j = static_cast<std::size_t>(pairs_[p].j);
    const Spectrum& xi = frame.bins[i];
    const Spectrum& xj = frame.bins[j];
    std::fill(padded_.begin(), padded_.end(), Complex(0.0, 0.0));
    for (std::size_t k = 0; k < n_bins; ++k) {
      padded_[k] = weights_[i][k] * weights_[j][k] * std::conj(xi[k]) * xj[k] /
                   (mags_[i][k] * mags_[j][k] + eps);
    }
    // The original Nyquist bin appears once in the full spectrum; once it is
    // no longer the last bin the inverse counts it twice.
    if (rate_ > 1) padded_[n_bins - 1] *= 0.5;
    fft_.inverse(padded_, out.values[p]);
    for (double& v : out.values[p]) v *= static_cast<double>(rate_);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double window_max(const CrossCorrelations& cc, std::size_t pair,
                  const LagWindow& w) {
  double best = cc.at(pair, w.lo);
  for (int lag = w.lo + 1; lag <= w.hi; ++lag) {
    best = std::max(best, cc.at(pair, lag));
  }
  return best;
}

}  // namespace

double steered_power(const CrossCorrelations& cc, const PairTable& table,
                     std::size_t point) {
  double sum = 0.0;
  for (std::size_t p = 0; p < table.pairs.size(); ++p) {
    const std::size_t k = table.index(p, point);
    if (!table.visible[k]) continue;
    sum += window_max(cc, p, table.window[k]);
  }
  return sum;
}

ScanSetup make_scan_setup(std::span<const MicSpec> mics,
                          const std::vector<MicPair>& pairs, int coarse_level,
                          int fine_level, bool half_sphere,
                          const TableParams& params) {
  ScanSetup s;
  s.coarse = build_icosphere(coarse_level, half_sphere);
  s.fine = build_icosphere(fine_level, half_sphere);
  s.fine_table = tdoa_table(mics, s.fine, pairs, params);
  s.refinement = refinement_neighbors(s.coarse, s.fine);
  s.coarse_table = widen_to_cells(tdoa_table(mics, s.coarse, pairs, params),
                                  s.fine_table, s.refinement);
  return s;
}

SrpScanner::SrpScanner(std::shared_ptr<const ScanSetup> setup,
                       bool hierarchical)
    : setup_(std::move(setup)), hierarchical_(hierarchical) {}

std::vector<PotentialDoa> SrpScanner::scan(CrossCorrelations cc,
                                           int n_potential,
                                           std::size_t frame_index,
                                           ScanCounters* counters) const {
  const ScanSetup& s = *setup_;
  const double n_pairs =
      std::max<double>(1.0, static_cast<double>(s.fine_table.pairs.size()));
  std::vector<PotentialDoa> out;
  double previous = std::numeric_limits<double>::infinity();

  for (int rank = 1; rank <= n_potential; ++rank) {
    std::size_t best = 0;
    double best_power = -std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t point) {
      const double e = steered_power(cc, s.fine_table, point);
      // Strict comparison: ties go to the lowest index visited first.
      if (e > best_power) {
        best_power = e;
        best = point;
      }
    };

    if (hierarchical_) {
      std::size_t coarse_best = 0;
      double coarse_power = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < s.coarse.size(); ++c) {
        const double e = steered_power(cc, s.coarse_table, c);
        if (e > coarse_power) {
          coarse_power = e;
          coarse_best = c;
        }
      }
      const auto& hood = s.refinement.neighbors[coarse_best];
      for (int f : hood) consider(static_cast<std::size_t>(f));
      if (counters != nullptr) {
        counters->coarse_points += s.coarse.size();
        counters->fine_points += hood.size();
      }
    } else {
      for (std::size_t f = 0; f < s.fine.size(); ++f) consider(f);
      if (counters != nullptr) counters->fine_points += s.fine.size();
    }

    PotentialDoa doa;
    doa.direction = s.fine.points[best];
    doa.grid_index = best;
    doa.rank = rank;
    doa.frame_index = frame_index;
    // Clearing only lowers correlations, so powers are non-increasing; the
    // clamp guards the floating-point edge.
    doa.power = std::min(previous, std::max(0.0, best_power / n_pairs));
    previous = doa.power;
    out.push_back(doa);

    for (std::size_t p = 0; p < s.fine_table.pairs.size(); ++p) {
      const std::size_t k = s.fine_table.index(p, best);
      if (!s.fine_table.visible[k]) continue;
      const LagWindow& w = s.fine_table.window[k];
      for (int lag = w.lo - 1; lag <= w.hi + 1; ++lag) {
        double& v = cc.at(p, lag);
        v = std::min(v, 0.0);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string hex_key(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(key));
  return buf;
}

PairTable cached_table(std::span<const MicSpec> mics, const ScanGrid& grid,
                       const std::vector<MicPair>& pairs,
                       const TableParams& params, const std::string& cache_dir) {
  if (cache_dir.empty()) return tdoa_table(mics, grid, pairs, params);
  const std::uint64_t key = table_cache_key(mics, grid, params);
  const std::string path =
      (std::filesystem::path(cache_dir) / ("tdoa_" + hex_key(key) + ".bin"))
          .string();
  if (auto t = load_table_cache(path, key, grid); t && t->pairs == pairs) {
    return std::move(*t);
  }
  PairTable t = tdoa_table(mics, grid, pairs, params);
  std::filesystem::create_directories(cache_dir);
  save_table_cache(path, key, grid, t);
  return t;
}

std::shared_ptr<const ScanSetup> build_setup(const PipelineConfig& cfg,
                                             const std::string& cache_dir) {
  const auto& mics = cfg.general.mics;
  const bool half = cfg.half_sphere();
  TableParams params;
  params.fs_hz = cfg.general.fs_processing_hz;
  params.speed_of_sound = cfg.general.speed_of_sound_mps;
  params.speed_uncertainty = cfg.general.speed_of_sound_uncertainty_mps;
  params.interpolation_rate = cfg.ssl.interpolation_rate;

  auto s = std::make_shared<ScanSetup>();
  s->coarse = build_icosphere(cfg.ssl.coarse_level, half);
  s->fine = build_icosphere(cfg.ssl.fine_level, half);
  const std::vector<MicPair> pairs =
      cfg.ssl.prune_pairs ? select_pairs(mics, s->fine) : all_pairs(mics.size());
  s->fine_table = cached_table(mics, s->fine, pairs, params, cache_dir);
  s->refinement = refinement_neighbors(s->coarse, s->fine);
  s->coarse_table =
      widen_to_cells(cached_table(mics, s->coarse, pairs, params, cache_dir),
                     s->fine_table, s->refinement);
  return s;
}

}  // namespace

Localizer::Localizer(const PipelineConfig& cfg, const std::string& cache_dir)
    : Localizer(cfg, build_setup(cfg, cache_dir)) {}

Localizer::Localizer(const PipelineConfig& cfg,
                     std::shared_ptr<const ScanSetup> setup)
    : ssl_(cfg.ssl),
      noise_(cfg.mcra, cfg.general.mics.size(),
             static_cast<std::size_t>(cfg.general.frame_size_samples) / 2 + 1),
      gcc_(static_cast<std::size_t>(cfg.general.frame_size_samples),
           cfg.ssl.interpolation_rate, setup->fine_table.pairs),
      scanner_(setup, cfg.ssl.hierarchical) {}

std::vector<PotentialDoa> Localizer::process(const SpectralFrame& frame) {
  noise_.update(frame);
  CrossCorrelations cc =
      gcc_.compute(frame, ssl_.snr_weighting ? &noise_ : nullptr);
  ScanCounters local;
  local.frames = 1;
  local.pairs_computed = gcc_.pairs().size();
  auto doas = scanner_.scan(std::move(cc), ssl_.n_potential_doas,
                            frame.frame_index, &local);
  counters_ += local;
  return doas;
}

}  // namespace odas
