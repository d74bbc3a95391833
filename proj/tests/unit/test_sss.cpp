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
#include <random>
#include <vector>

#include "doctest.h"
#include "odas/audio_io.hpp"
#include "odas/harness.hpp"
#include "odas/sss.hpp"

using namespace odas;

namespace {

constexpr std::size_t kN = 512;

SpectralFrame random_frame(std::size_t mics, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralFrame f;
  f.fs_hz = 16000;
  f.frame_size = static_cast<int>(kN);
  f.bins.assign(mics, Spectrum(kN / 2 + 1));
  for (auto& ch : f.bins)
    for (auto& v : ch) v = Complex(g(rng), g(rng));
  return f;
}

double max_abs_diff(const Spectrum& a, const Spectrum& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST_CASE("subarray selection on the cube and its fallback") {
  const auto cube = cube_array(180.0);
  bool fell_back = true;
  const auto sub = select_subarray(cube, Vec3(-1, 0, 0), &fell_back);
  CHECK(sub.size() == 4);
  CHECK_FALSE(fell_back);
  for (int m : sub) CHECK(cube[static_cast<std::size_t>(m)].orientation.x() < 0.0);

  auto narrow = cube_array(10.0);
  const auto all = select_subarray(narrow, Vec3(0, 0, 1), &fell_back);
  CHECK(fell_back);
  CHECK(all.size() == narrow.size());
}

TEST_CASE("reference microphone is the member nearest the array centroid") {
  std::vector<MicSpec> mics(4);
  mics[0].position_m = Vec3(0.3, 0, 0);
  mics[1].position_m = Vec3(-0.1, 0, 0);
  mics[2].position_m = Vec3(-0.1, 0.02, 0);
  mics[3].position_m = Vec3(-0.1, -0.02, 0);
  const std::vector<int> members = {0, 2, 3};
  const int ref = reference_mic(mics, members);
  CHECK((ref == 2 || ref == 3));
  const std::vector<int> all = {0, 1, 2, 3};
  CHECK(reference_mic(mics, all) == 1);
}

TEST_CASE("delay-and-sum aligns a rendered plane wave on the reference microphone") {
  Scene scene;
  scene.mics = circular_array(8, 0.1);
  scene.duration_s = 1.0;
  scene.noise_floor_db = -120.0;
  SceneSource s;
  s.trajectory.keyframes = {Keyframe{0.0, 33.0, 12.0}};
  scene.sources.push_back(s);
  const Rendering r = render(scene);
  const auto target = make_steering_target(scene.mics, 1, direction_from_az_el(33.0, 12.0), 16000.0,
                                           343.0, false);
  const auto frames = stft(r.contributions[0], kN, 256, 16000);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 5; i + 5 < frames.size(); ++i) {
    const Spectrum y = delay_and_sum(frames[i], target);
    const Spectrum& x = frames[i].bins[static_cast<std::size_t>(target.reference)];
    for (std::size_t k = 1; k < y.size(); ++k) {
      err += std::norm(y[k] - x[k]);
      ref += std::norm(x[k]);
    }
  }
  CHECK(10.0 * std::log10(ref / err) > 20.0);
  CHECK(target.delays.size() == 8);
  for (std::size_t n = 0; n < target.subarray.size(); ++n) {
    if (target.subarray[n] == target.reference) CHECK(target.delays[n] == 0.0);
  }
}

TEST_CASE("GSS with zero step size reproduces full-array delay-and-sum") {
  const auto mics = open_array_8();
  GssSeparator gss(mics, 16000.0, 343.0, kN, 0.0, 0.5);
  const std::vector<SteeringTarget> targets = {
      make_steering_target(mics, 4, direction_from_az_el(10.0, 20.0), 16000.0, 343.0, false)};
  for (unsigned i = 0; i < 3; ++i) {
    const SpectralFrame f = random_frame(8, i);
    const auto out = gss.step(f, targets);
    REQUIRE(out.size() == 1);
    CHECK(max_abs_diff(out[0], delay_and_sum(f, targets[0])) < 1e-12);
  }
  CHECK(gss.constraint_residual() < 1e-20);
}

TEST_CASE("GSS keeps its matrices when only directions change and resets on new ids") {
  const auto mics = open_array_8();
  GssSeparator gss(mics, 16000.0, 343.0, kN, 0.01, 0.5);
  auto targets = [&](int id_b, double az_a) {
    return std::vector<SteeringTarget>{
        make_steering_target(mics, 1, direction_from_az_el(az_a, 10.0), 16000.0, 343.0, false),
        make_steering_target(mics, id_b, direction_from_az_el(100.0, 10.0), 16000.0, 343.0, false)};
  };
  const auto t0 = targets(2, 0.0);
  const double initial = [&] {
    GssSeparator fresh(mics, 16000.0, 343.0, kN, 0.0, 0.5);
    fresh.set_targets(t0);
    return fresh.constraint_residual();
  }();
  for (unsigned i = 0; i < 20; ++i) gss.step(random_frame(8, 100 + i), t0);
  const auto adapted = gss.state().W;
  CHECK(gss.state().track_ids == std::vector<int>{1, 2});

  gss.set_targets(targets(2, 3.0));
  CHECK(gss.state().W == adapted);

  gss.set_targets(targets(3, 0.0));
  CHECK(gss.state().W != adapted);
  CHECK(gss.state().track_ids == std::vector<int>{1, 3});
  CHECK(gss.constraint_residual() == doctest::Approx(initial).epsilon(1e-9));
}

TEST_CASE("GSS rejects a frame with the wrong channel count") {
  const auto mics = open_array_8();
  GssSeparator gss(mics, 16000.0, 343.0, kN, 0.01, 0.5);
  const std::vector<SteeringTarget> t = {
      make_steering_target(mics, 1, Vec3(1, 0, 0), 16000.0, 343.0, false)};
  CHECK_THROWS_AS(gss.step(random_frame(4, 1), t), Error);
  CHECK(gss.step(random_frame(8, 1), {}).empty());
}

TEST_CASE("post-filter gains stay within their bounds") {
  PostfilterConfig cfg;
  cfg.enabled = true;
  const std::size_t bins = kN / 2 + 1;
  const double gmin = std::pow(10.0, cfg.gain_min_db / 20.0);

  PostfilterMemory mem;
  const Spectrum clean(bins, Complex(1.0, 0.0));
  const Signal no_noise(bins, 0.0);
  auto g = postfilter_gains(clean, no_noise, {}, cfg, mem);
  for (double v : g) CHECK(v == 1.0);

  PostfilterMemory mem2;
  const Signal loud_noise(bins, 1e4);
  for (int i = 0; i < 20; ++i) g = postfilter_gains(clean, loud_noise, {}, cfg, mem2);
  for (double v : g) CHECK(v == doctest::Approx(gmin));

  PostfilterMemory mem3;
  const Signal unit_noise(bins, 1.0);
  const std::vector<Spectrum> competitor = {Spectrum(bins, Complex(30.0, 0.0))};
  Signal with, without;
  for (int i = 0; i < 20; ++i) {
    with = postfilter_gains(Spectrum(bins, Complex(3.0, 0.0)), unit_noise, competitor, cfg, mem3);
  }
  PostfilterMemory mem4;
  for (int i = 0; i < 20; ++i) {
    without = postfilter_gains(Spectrum(bins, Complex(3.0, 0.0)), unit_noise, {}, cfg, mem4);
  }
  for (std::size_t k = 0; k < bins; ++k) {
    CHECK(with[k] >= gmin - 1e-12);
    CHECK(with[k] <= without[k]);
    CHECK(without[k] <= 1.0);
  }
  const Spectrum y = apply_gains(clean, with);
  CHECK(y[3] == Complex(with[3], 0.0));
}

TEST_CASE("separator counts beamformed channels and reports unit gains without post-filter") {
  PipelineConfig cfg;
  cfg.general.mics = cube_array(180.0);
  cfg.raw.n_channels = 8;
  cfg.mapping = {0, 1, 2, 3, 4, 5, 6, 7};
  Separator sep(cfg);
  const std::vector<Separator::Target> targets = {{1, Vec3(-1, 0, 0)}, {2, Vec3(0, 0, 1)}};
  const auto out = sep.process(random_frame(8, 9), targets);
  REQUIRE(out.size() == 2);
  CHECK(out[0].subarray.size() == 4);
  CHECK(sep.mic_channels_used() == out[0].subarray.size() + out[1].subarray.size());
  for (const auto& o : out) {
    for (double g : o.gains) CHECK(g == 1.0);
    CHECK(o.postfiltered == o.separated);
  }
}
