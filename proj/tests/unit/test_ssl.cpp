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

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "odas/audio_io.hpp"
#include "odas/harness.hpp"
#include "odas/ssl.hpp"
#include "support/oracles.hpp"

using namespace odas;

namespace {

constexpr std::size_t kN = 512;

Spectrum naive_dft(const Signal& x) {
  Spectrum X(x.size() / 2 + 1);
  for (std::size_t k = 0; k < X.size(); ++k) {
    for (std::size_t t = 0; t < x.size(); ++t) {
      X[k] += x[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(x.size()));
    }
  }
  return X;
}

Signal naive_idft(const Spectrum& X, std::size_t n) {
  Signal x(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double acc = X[0].real();
    for (std::size_t k = 1; k < X.size(); ++k) {
      const double w = (2 * k == n) ? 1.0 : 2.0;
      acc += w * (X[k] * std::polar(1.0, 2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(n))).real();
    }
    x[t] = acc / static_cast<double>(n);
  }
  return x;
}

Signal white(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Signal x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

SpectralFrame two_channel_frame(const Spectrum& a, const Spectrum& b) {
  SpectralFrame f;
  f.fs_hz = 16000;
  f.frame_size = static_cast<int>(kN);
  f.bins = {a, b};
  return f;
}

int gcc_argmax(const CrossCorrelations& cc, int max_lag) {
  int best = 0;
  for (int l = -max_lag; l <= max_lag; ++l) {
    if (cc.at(0, l) > cc.at(0, best)) best = l;
  }
  return best;
}

}  // namespace

TEST_CASE("GCC-PHAT recovers integer circular delays like plain cross-correlation") {
  const Signal x = white(kN, 1);
  for (int d : {-7, -1, 0, 3, 12}) {
    Signal y(kN);
    for (std::size_t t = 0; t < kN; ++t) {
      y[t] = x[(t + kN - static_cast<std::size_t>((d + static_cast<int>(kN)) % static_cast<int>(kN))) % kN];
    }
    GccPhat gcc(kN, 1, {MicPair{0, 1}});
    const auto cc = gcc.compute(two_channel_frame(naive_dft(x), naive_dft(y)), nullptr);
    CHECK(gcc_argmax(cc, 20) == d);
    CHECK(oracle::xcorr_argmax(x, y, 20) == d);
  }
}

TEST_CASE("interpolated GCC-PHAT resolves half-sample delays") {
  const Signal x = white(kN, 2);
  const Spectrum X = naive_dft(x);
  Spectrum Y(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) {
    Y[k] = X[k] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k) * 0.5 / static_cast<double>(kN));
  }
  Y.back() = X.back();  // keep the Nyquist bin real
  GccPhat gcc(kN, 2, {MicPair{0, 1}});
  const auto cc = gcc.compute(two_channel_frame(X, Y), nullptr);
  CHECK(cc.length == 2 * kN);
  CHECK(gcc_argmax(cc, 40) == 1);
  const Signal y = naive_idft(Y, kN);
  CHECK(oracle::xcorr_argmax(oracle::upsample(x, 2), oracle::upsample(y, 2), 40) == 1);
}

TEST_CASE("identical channels correlate to exactly one at lag zero") {
  const Spectrum X = naive_dft(white(kN, 3));
  for (int rate : {1, 2, 4}) {
    GccPhat gcc(kN, rate, {MicPair{0, 1}});
    const auto cc = gcc.compute(two_channel_frame(X, X), nullptr);
    CHECK(cc.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(gcc_argmax(cc, 10) == 0);
  }
}

TEST_CASE("SNR weight") {
  CHECK(snr_weight(1.0, 1.0) == 0.0);
  CHECK(snr_weight(0.5, 1.0) == 0.0);
  CHECK(snr_weight(3.0, 1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(snr_weight(1.0, 0.0) == 1.0);
}

TEST_CASE("steered power equals a first-principles SRP at every grid point") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.3, 1.0);
  for (int rate : {1, 2}) {
    auto mics = cube_array(180.0);
    mics[2].sigma_pos_m = 0.004;
    const ScanGrid grid = build_icosphere(3, false);
    const auto pairs = select_pairs(mics, grid);
    TableParams params;
    params.interpolation_rate = rate;
    params.speed_uncertainty = 10.0;
    const PairTable table = tdoa_table(mics, grid, pairs, params);
    CrossCorrelations cc;
    cc.interpolation_rate = rate;
    cc.length = kN * static_cast<std::size_t>(rate);
    cc.values.assign(pairs.size(), Signal(cc.length));
    for (auto& v : cc.values)
      for (auto& s : v) s = u(rng);
    const auto expected = oracle::naive_srp(cc, grid.points, mics, pairs, 16000.0, 343.0, 10.0, rate);
    const ExhaustiveScan scan = oracle_exhaustive_scan(cc, grid, table);
    for (std::size_t q = 0; q < grid.size(); ++q) {
      CHECK(std::abs(steered_power(cc, table, q) - expected[q]) < 1e-9);
      CHECK(std::abs(scan.map[q] - expected[q]) < 1e-9);
    }
  }
}

TEST_CASE("scanner finds a rendered source and then a second one after clearing") {
  Scene scene;
  scene.mics = open_array_8();
  scene.duration_s = 0.5;
  scene.noise_floor_db = -60.0;
  scene.seed = 8;
  for (auto [az, el] : {std::pair{40.0, 20.0}, std::pair{-120.0, 10.0}}) {
    SceneSource s;
    s.trajectory.keyframes = {Keyframe{0.0, az, el}};
    scene.sources.push_back(s);
  }
  const Rendering r = render(scene);
  const auto frames = stft(r.mix, kN, 256, 16000);
  const auto pairs = all_pairs(scene.mics.size());
  auto setup = std::make_shared<const ScanSetup>(
      make_scan_setup(scene.mics, pairs, 2, 4, false, TableParams{}));
  const SrpScanner scanner(setup, true);
  GccPhat gcc(kN, 1, pairs);
  const auto doas = scanner.scan(gcc.compute(frames[20], nullptr), 2, 20);
  REQUIRE(doas.size() == 2);
  const Vec3 a = direction_from_az_el(40.0, 20.0), b = direction_from_az_el(-120.0, 10.0);
  auto deg = [](const Vec3& x, const Vec3& y) { return rad_to_deg(angle_between(x, y)); };
  const bool order_ab = deg(doas[0].direction, a) < deg(doas[0].direction, b);
  CHECK(deg(doas[0].direction, order_ab ? a : b) < 6.0);
  CHECK(deg(doas[1].direction, order_ab ? b : a) < 6.0);
  CHECK(doas[0].rank == 1);
  CHECK(doas[1].rank == 2);
  CHECK(doas[0].power >= 0.0);
  CHECK(doas[0].power <= 1.0);
}

TEST_CASE("hierarchical and exhaustive scans agree on a clean source") {
  Scene scene;
  scene.mics = open_array_8();
  scene.duration_s = 0.3;
  scene.noise_floor_db = -50.0;
  SceneSource s;
  s.trajectory.keyframes = {Keyframe{0.0, 75.0, -30.0}};
  scene.sources.push_back(s);
  const auto frames = stft(render(scene).mix, kN, 256, 16000);
  const auto pairs = all_pairs(8);
  auto setup = std::make_shared<const ScanSetup>(
      make_scan_setup(scene.mics, pairs, 2, 4, false, TableParams{}));
  GccPhat gcc(kN, 1, pairs);
  const auto cc = gcc.compute(frames[10], nullptr);
  const ExhaustiveScan oracle = oracle_exhaustive_scan(cc, setup->fine, setup->fine_table);
  ScanCounters hc, ec;
  const auto h = SrpScanner(setup, true).scan(cc, 1, 10, &hc);
  const auto e = SrpScanner(setup, false).scan(cc, 1, 10, &ec);
  CHECK(h[0].grid_index == oracle.index);
  CHECK(e[0].grid_index == oracle.index);
  CHECK(e[0].power == doctest::Approx(oracle.power));
  CHECK(hc.coarse_points == 162);
  CHECK(hc.fine_points < 2562 / 4);
  CHECK(ec.fine_points == 2562);
}

TEST_CASE("noise tracker initializes from the first frame and follows a level change") {
  McraConfig cfg;
  NoiseEstimate est(cfg, 1, kN / 2 + 1);
  CHECK_FALSE(est.initialized(0));
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 1.0);
  auto frame = [&](double level) {
    Spectrum X(kN / 2 + 1);
    for (auto& v : X) v = Complex(g(rng), g(rng)) * level;
    return X;
  };
  const Spectrum first = frame(1.0);
  est.update_channel(0, first);
  CHECK(est.initialized(0));
  for (std::size_t k = 0; k < first.size(); ++k) CHECK(est.noise(0)[k] == doctest::Approx(std::norm(first[k])));
  for (int i = 0; i < 2000; ++i) est.update_channel(0, frame(1.0));
  double mean = 0.0;
  for (std::size_t k = 1; k + 1 < first.size(); ++k) mean += est.noise(0)[k];
  mean /= static_cast<double>(first.size() - 2);
  CHECK(mean == doctest::Approx(2.0).epsilon(0.15));
  // A 10 dB drop is followed within a few minimum-search windows.
  for (int i = 0; i < 4 * cfg.L_window; ++i) est.update_channel(0, frame(std::sqrt(0.1)));
  mean = 0.0;
  for (std::size_t k = 1; k + 1 < first.size(); ++k) mean += est.noise(0)[k];
  mean /= static_cast<double>(first.size() - 2);
  CHECK(mean == doctest::Approx(0.2).epsilon(0.15));
  for (double p : est.speech_probability(0)) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}
