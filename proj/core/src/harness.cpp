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

#include "odas/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include "json.hpp"

#include "odas/audio_io.hpp"
#include "odas/fft.hpp"

namespace odas {

using json = nlohmann::json;

Vec3 direction_from_az_el(double az_deg, double el_deg) {
  const double az = deg_to_rad(az_deg);
  const double el = deg_to_rad(el_deg);
  return Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
              std::sin(el));
}

Vec3 random_unit_vector(std::mt19937_64& rng, bool upper_half) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    const double norm = v.norm();
    if (norm < 1e-9) continue;
    v /= norm;
    if (upper_half) v.z() = std::abs(v.z());
    return v;
  }
}

std::vector<MicSpec> cube_array(double fov_deg) {
  std::vector<MicSpec> mics;
  const double s = 1.0 / std::sqrt(2.0);
  const Vec3 normals[4] = {Vec3(s, s, 0), Vec3(-s, s, 0), Vec3(-s, -s, 0),
                           Vec3(s, -s, 0)};
  for (const Vec3& n : normals) {
    for (double z : {0.04, -0.04}) {
      MicSpec m;
      m.position_m = 0.05 * n + Vec3(0, 0, z);
      m.orientation = n;
      m.fov_deg = fov_deg;
      mics.push_back(m);
    }
  }
  return mics;
}

std::vector<MicSpec> circular_array(int n, double radius_m) {
  std::vector<MicSpec> mics;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    MicSpec m;
    m.position_m = Vec3(radius_m * std::cos(a), radius_m * std::sin(a), 0.0);
    m.orientation = Vec3::UnitZ();
    mics.push_back(m);
  }
  return mics;
}

std::vector<MicSpec> open_array_8() {
  std::vector<MicSpec> mics;
  for (int layer = 0; layer < 2; ++layer) {
    const double z = layer == 0 ? 0.05 : -0.05;
    const double offset = layer == 0 ? kPi / 4.0 : 0.0;
    for (int i = 0; i < 4; ++i) {
      const double a = offset + kPi / 2.0 * i;
      MicSpec m;
      m.position_m = Vec3(0.1 * std::cos(a), 0.1 * std::sin(a), z);
      m.orientation = Vec3::UnitZ();
      mics.push_back(m);
    }
  }
  return mics;
}

double directivity_gain(const MicSpec& mic, const Vec3& direction,
                        DirectivityModel model) {
  if (model == DirectivityModel::kNone || mic.omnidirectional()) return 1.0;
  const double theta = rad_to_deg(angle_between(mic.orientation, direction));
  if (theta <= mic.fov_deg / 2.0) {
    return 0.5 * (1.0 + std::cos(kPi * theta / mic.fov_deg));
  }
  return std::pow(10.0, kOccludedGainDb / 20.0);
}

Vec3 Trajectory::direction_at(double time_s) const {
  if (keyframes.empty()) return Vec3::UnitX();
  if (keyframes.size() == 1 || time_s <= keyframes.front().time_s) {
    return direction_from_az_el(keyframes.front().az_deg, keyframes.front().el_deg);
  }
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    const Keyframe& a = keyframes[i - 1];
    const Keyframe& b = keyframes[i];
    if (time_s <= b.time_s) {
      const double span = b.time_s - a.time_s;
      const double u = span > 0.0 ? (time_s - a.time_s) / span : 1.0;
      return direction_from_az_el(a.az_deg + u * (b.az_deg - a.az_deg),
                                  a.el_deg + u * (b.el_deg - a.el_deg));
    }
  }
  return direction_from_az_el(keyframes.back().az_deg, keyframes.back().el_deg);
}

bool SceneSource::active_at(double time_s) const {
  if (active.empty()) return true;
  return std::any_of(active.begin(), active.end(), [&](const auto& iv) {
    return time_s >= iv.first && time_s < iv.second;
  });
}

namespace {

constexpr int kSincHalfWidth = 24;
constexpr double kSincBeta = 8.0;

// Band-limited read of x at fractional position t (zero outside).
double sinc_read(const Signal& x, double t) {
  const auto base = static_cast<std::ptrdiff_t>(std::floor(t));
  const double frac = t - static_cast<double>(base);
  const double i0_beta = std::cyl_bessel_i(0.0, kSincBeta);
  double acc = 0.0;
  for (int k = -kSincHalfWidth + 1; k <= kSincHalfWidth; ++k) {
    const std::ptrdiff_t idx = base + k;
    if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(x.size())) continue;
    const double u = static_cast<double>(k) - frac;
    const double r = u / kSincHalfWidth;
    if (std::abs(r) >= 1.0) continue;
    const double w = std::cyl_bessel_i(0.0, kSincBeta * std::sqrt(1.0 - r * r)) / i0_beta;
    const double sinc = std::abs(u) < 1e-12 ? 1.0 : std::sin(kPi * u) / (kPi * u);
    acc += x[static_cast<std::size_t>(idx)] * sinc * w;
  }
  return acc;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Signal source_signal(const SceneSource& source, int fs_hz, std::size_t n_samples,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal s(n_samples, 0.0);
  switch (source.kind) {
    case SignalKind::kWhite:
      for (auto& v : s) v = normal(rng);
      break;
    case SignalKind::kTone: {
      std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
      const double p0 = phase(rng);
      for (std::size_t n = 0; n < n_samples; ++n) {
        s[n] = std::sqrt(2.0) *
               std::sin(2.0 * kPi * source.tone_hz * static_cast<double>(n) / fs_hz + p0);
      }
      break;
    }
    case SignalKind::kSpeechShaped: {
      // Low-pass tilted noise with a random syllabic envelope (100 ms
      // segments, -26..0 dB, raised-cosine crossfades).
      double y = 0.0;
      for (auto& v : s) {
        y = 0.7 * y + normal(rng);
        v = y;
      }
      const auto seg = static_cast<std::size_t>(fs_hz / 10);
      std::uniform_real_distribution<double> gain_db(-26.0, 0.0);
      const std::size_t n_seg = n_samples / seg + 2;
      std::vector<double> gains(n_seg);
      for (auto& g : gains) g = std::pow(10.0, gain_db(rng) / 20.0);
      for (std::size_t n = 0; n < n_samples; ++n) {
        const std::size_t i = n / seg;
        const double u = static_cast<double>(n % seg) / static_cast<double>(seg);
        const double w = 0.5 - 0.5 * std::cos(kPi * u);
        s[n] *= (1.0 - w) * gains[i] + w * gains[i + 1];
      }
      break;
    }
  }
  const double p = signal_power(s);
  const double scale = p > 0.0 ? std::sqrt(std::pow(10.0, source.level_db / 10.0) / p) : 0.0;
  for (auto& v : s) v *= scale;

  if (!source.active.empty()) {
    const double ramp = 0.005 * fs_hz;
    for (std::size_t n = 0; n < n_samples; ++n) {
      const double t = static_cast<double>(n) / fs_hz;
      double g = 0.0;
      for (const auto& [a, b] : source.active) {
        if (t < a || t >= b) continue;
        const double into = (t - a) * fs_hz;
        const double left = (b - t) * fs_hz;
        g = std::min({1.0, into / ramp, left / ramp});
      }
      s[n] *= g;
    }
  }
  return s;
}

Rendering render(const Scene& scene) {
  const auto n = static_cast<std::size_t>(std::llround(scene.duration_s * scene.fs_hz));
  const std::size_t n_mics = scene.mics.size();
  const double fs = scene.fs_hz;
  const double c = scene.speed_of_sound_mps;
  Rendering out;
  out.mix.assign(n_mics, Signal(n, 0.0));
  out.noise.assign(n_mics, Signal(n, 0.0));

  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const SceneSource& src = scene.sources[s];
    const std::uint64_t seed = src.seed ? *src.seed : mix_seed(scene.seed, s + 1);
    const Signal sig = source_signal(src, scene.fs_hz, n, seed);
    std::vector<Signal> contrib(n_mics, Signal(n, 0.0));

    if (src.trajectory.fixed() && n > 0) {
      const Vec3 d = src.trajectory.direction_at(0.0);
      RealFft fft(n);
      Spectrum spec(fft.bins());
      Spectrum shifted(fft.bins());
      fft.forward(sig, spec);
      for (std::size_t m = 0; m < n_mics; ++m) {
        // x_m(t) = s(t + p_m . d / c): a delay of -fs p_m . d / c samples.
        const double delay = -fs * scene.mics[m].position_m.dot(d) / c;
        const double g = directivity_gain(scene.mics[m], d, scene.directivity);
        for (std::size_t k = 0; k < spec.size(); ++k) {
          const double phase = -2.0 * kPi * static_cast<double>(k) * delay / static_cast<double>(n);
          shifted[k] = g * spec[k] * std::polar(1.0, phase);
        }
        fft.inverse(shifted, contrib[m]);
      }
    } else {
      for (std::size_t t = 0; t < n; ++t) {
        const Vec3 d = src.trajectory.direction_at(static_cast<double>(t) / fs);
        for (std::size_t m = 0; m < n_mics; ++m) {
          const double advance = fs * scene.mics[m].position_m.dot(d) / c;
          const double g = directivity_gain(scene.mics[m], d, scene.directivity);
          contrib[m][t] = g * sinc_read(sig, static_cast<double>(t) + advance);
        }
      }
    }
    out.contributions.push_back(std::move(contrib));
  }

  std::mt19937_64 rng(mix_seed(scene.seed, 0));
  std::normal_distribution<double> normal(0.0, std::sqrt(std::pow(10.0, scene.noise_floor_db / 10.0)));
  for (std::size_t m = 0; m < n_mics; ++m) {
    for (auto& v : out.noise[m]) v = normal(rng);
  }
  for (std::size_t m = 0; m < n_mics; ++m) {
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (const auto& contrib : out.contributions) acc += contrib[m][t];
      out.mix[m][t] = acc + out.noise[m][t];
    }
  }

  const auto N = static_cast<std::size_t>(scene.frame_size);
  const auto hop = static_cast<std::size_t>(scene.hop_size);
  for (std::size_t k = 0; n >= N && k <= (n - N) / hop; ++k) {
    FrameTruth ft;
    ft.frame_index = k;
    const double t = (static_cast<double>(k * hop) + static_cast<double>(N) / 2.0) / fs;
    for (std::size_t s = 0; s < scene.sources.size(); ++s) {
      ft.sources.push_back(SourceTruth{static_cast<int>(s),
                                       scene.sources[s].trajectory.direction_at(t),
                                       scene.sources[s].active_at(t)});
    }
    out.truth.push_back(std::move(ft));
  }
  return out;
}

// ---- scene files -------------------------------------------------------------

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw Error("scene: " + where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw Error("scene: unknown key " + where + (where.empty() ? "" : ".") + it.key());
    }
  }
}

Vec3 read_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw Error("scene: " + where + " must be [x,y,z]");
  return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

const char* kind_name(SignalKind k) {
  switch (k) {
    case SignalKind::kWhite: return "white";
    case SignalKind::kTone: return "tone";
    case SignalKind::kSpeechShaped: return "speech";
  }
  return "white";
}

}  // namespace

Scene parse_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(std::string("scene: syntax error at byte ") + std::to_string(e.byte));
  }
  check_keys(doc, {"fs_hz", "speed_of_sound_mps", "noise_floor_db", "duration_s",
                   "seed", "frame_size", "hop_size", "directivity", "array",
                   "mics", "sources"},
             "");
  try {
    Scene sc;
    sc.fs_hz = doc.value("fs_hz", sc.fs_hz);
    sc.speed_of_sound_mps = doc.value("speed_of_sound_mps", sc.speed_of_sound_mps);
    sc.noise_floor_db = doc.value("noise_floor_db", sc.noise_floor_db);
    sc.duration_s = doc.value("duration_s", sc.duration_s);
    sc.seed = doc.value("seed", sc.seed);
    sc.frame_size = doc.value("frame_size", sc.frame_size);
    sc.hop_size = doc.value("hop_size", sc.hop_size);
    const std::string dir = doc.value("directivity", std::string("none"));
    if (dir == "none") {
      sc.directivity = DirectivityModel::kNone;
    } else if (dir == "occluding") {
      sc.directivity = DirectivityModel::kOccluding;
    } else {
      throw Error("scene: directivity must be \"none\" or \"occluding\"");
    }
    if (doc.contains("array") == doc.contains("mics")) {
      throw Error("scene: exactly one of \"array\" and \"mics\" is required");
    }
    if (doc.contains("array")) {
      const std::string a = doc["array"].get<std::string>();
      if (a == "cube") {
        sc.mics = cube_array();
      } else if (a == "open8") {
        sc.mics = open_array_8();
      } else if (a == "circular8") {
        sc.mics = circular_array(8, 0.05);
      } else if (a == "circular16") {
        sc.mics = circular_array(16, 0.1);
      } else {
        throw Error("scene: unknown array preset " + a);
      }
    } else {
      for (const auto& m : doc["mics"]) {
        check_keys(m, {"position_m", "orientation", "fov_deg", "sigma_pos_m"}, "mics[]");
        MicSpec mic;
        mic.position_m = read_vec3(m.at("position_m"), "position_m");
        if (m.contains("orientation")) mic.orientation = read_vec3(m["orientation"], "orientation");
        mic.fov_deg = m.value("fov_deg", mic.fov_deg);
        mic.sigma_pos_m = m.value("sigma_pos_m", mic.sigma_pos_m);
        sc.mics.push_back(mic);
      }
    }
    for (const auto& s : doc.value("sources", json::array())) {
      check_keys(s, {"signal", "tone_hz", "level_db", "trajectory", "active", "seed"},
                 "sources[]");
      SceneSource src;
      const std::string kind = s.value("signal", std::string("white"));
      if (kind == "white") {
        src.kind = SignalKind::kWhite;
      } else if (kind == "tone") {
        src.kind = SignalKind::kTone;
      } else if (kind == "speech") {
        src.kind = SignalKind::kSpeechShaped;
      } else {
        throw Error("scene: unknown signal " + kind);
      }
      src.tone_hz = s.value("tone_hz", src.tone_hz);
      src.level_db = s.value("level_db", src.level_db);
      for (const auto& kf : s.at("trajectory")) {
        check_keys(kf, {"t", "az_deg", "el_deg"}, "trajectory[]");
        src.trajectory.keyframes.push_back(
            Keyframe{kf.value("t", 0.0), kf.at("az_deg").get<double>(), kf.value("el_deg", 0.0)});
      }
      if (src.trajectory.keyframes.empty()) throw Error("scene: empty trajectory");
      for (const auto& iv : s.value("active", json::array())) {
        src.active.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
      }
      if (s.contains("seed")) src.seed = s["seed"].get<std::uint64_t>();
      sc.sources.push_back(std::move(src));
    }
    if (sc.fs_hz <= 0 || sc.duration_s < 0.0 || sc.mics.empty() || sc.hop_size <= 0 ||
        sc.frame_size < sc.hop_size || sc.speed_of_sound_mps <= 0.0) {
      throw Error("scene: invalid numeric field");
    }
    return sc;
  } catch (const json::exception& e) {
    throw Error(std::string("scene: ") + e.what());
  }
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scene file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

std::string serialize_scene(const Scene& sc) {
  json mics = json::array();
  for (const auto& m : sc.mics) {
    mics.push_back({{"position_m", vec3_json(m.position_m)},
                    {"orientation", vec3_json(m.orientation)},
                    {"fov_deg", m.fov_deg},
                    {"sigma_pos_m", m.sigma_pos_m}});
  }
  json sources = json::array();
  for (const auto& s : sc.sources) {
    json traj = json::array();
    for (const auto& kf : s.trajectory.keyframes) {
      traj.push_back({{"t", kf.time_s}, {"az_deg", kf.az_deg}, {"el_deg", kf.el_deg}});
    }
    json active = json::array();
    for (const auto& [a, b] : s.active) active.push_back({a, b});
    json j{{"signal", kind_name(s.kind)},
           {"tone_hz", s.tone_hz},
           {"level_db", s.level_db},
           {"trajectory", traj},
           {"active", active}};
    if (s.seed) j["seed"] = *s.seed;
    sources.push_back(j);
  }
  const json doc{{"fs_hz", sc.fs_hz},
                 {"speed_of_sound_mps", sc.speed_of_sound_mps},
                 {"noise_floor_db", sc.noise_floor_db},
                 {"duration_s", sc.duration_s},
                 {"seed", sc.seed},
                 {"frame_size", sc.frame_size},
                 {"hop_size", sc.hop_size},
                 {"directivity", sc.directivity == DirectivityModel::kOccluding ? "occluding" : "none"},
                 {"mics", mics},
                 {"sources", sources}};
  return doc.dump(2) + "\n";
}

std::string serialize_truth(std::span<const FrameTruth> truth) {
  std::string out;
  for (const auto& ft : truth) {
    json srcs = json::array();
    for (const auto& s : ft.sources) {
      if (!s.active) continue;
      srcs.push_back({{"index", s.source},
                      {"x", s.direction.x()},
                      {"y", s.direction.y()},
                      {"z", s.direction.z()}});
    }
    out += json{{"frame", ft.frame_index}, {"sources", srcs}}.dump();
    out += '\n';
  }
  return out;
}

// ---- oracles -----------------------------------------------------------------

ExhaustiveScan oracle_exhaustive_scan(const CrossCorrelations& cc,
                                      const ScanGrid& grid,
                                      const PairTable& table) {
  ExhaustiveScan out;
  out.map.assign(grid.size(), 0.0);
  for (std::size_t q = 0; q < grid.size(); ++q) {
    double sum = 0.0;
    for (std::size_t p = 0; p < table.pairs.size(); ++p) {
      const std::size_t idx = table.index(p, q);
      if (table.visible[idx] == 0) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int lag = table.window[idx].lo; lag <= table.window[idx].hi; ++lag) {
        best = std::max(best, cc.at(p, lag));
      }
      sum += best;
    }
    out.map[q] = sum;
  }
  const auto it = std::max_element(out.map.begin(), out.map.end());
  out.index = static_cast<std::size_t>(it - out.map.begin());
  out.direction = grid.points[out.index];
  out.power = table.pairs.empty() ? 0.0 : *it / static_cast<double>(table.pairs.size());
  return out;
}

double signal_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double power_db(double power) { return 10.0 * std::log10(std::max(power, 1e-300)); }

double measure_sir(std::span<const double> output, std::span<const Signal> references,
                   std::size_t target) {
  const auto K = static_cast<Eigen::Index>(references.size());
  const std::size_t n = output.size();
  Eigen::MatrixXd G(K, K);
  Eigen::VectorXd b(K);
  for (Eigen::Index i = 0; i < K; ++i) {
    const Signal& ri = references[static_cast<std::size_t>(i)];
    b(i) = std::inner_product(ri.begin(), ri.begin() + static_cast<std::ptrdiff_t>(n),
                              output.begin(), 0.0);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Signal& rj = references[static_cast<std::size_t>(j)];
      G(i, j) = G(j, i) = std::inner_product(
          ri.begin(), ri.begin() + static_cast<std::ptrdiff_t>(n), rj.begin(), 0.0);
    }
  }
  const double ridge = 1e-12 * std::max(G.trace() / static_cast<double>(K), 1e-300);
  G.diagonal().array() += ridge;
  const Eigen::VectorXd coef = G.ldlt().solve(b);

  double e_target = 0.0;
  double e_interf = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double interf = 0.0;
    for (Eigen::Index i = 0; i < K; ++i) {
      const double v = coef(i) * references[static_cast<std::size_t>(i)][t];
      if (static_cast<std::size_t>(i) == target) {
        e_target += v * v;
      } else {
        interf += v;
      }
    }
    e_interf += interf * interf;
  }
  if (e_interf <= 0.0) return kSirCapDb;
  if (e_target <= 0.0) return -kSirCapDb;
  return std::clamp(10.0 * std::log10(e_target / e_interf), -kSirCapDb, kSirCapDb);
}

GaussianMixture fit_gmm(std::span<const double> samples, int n_components,
                        int max_iterations) {
  if (samples.empty() || n_components < 1) throw Error("fit_gmm: no samples");
  const auto K = static_cast<std::size_t>(n_components);
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double var = 0.0;
  for (double x : sorted) var += (x - mean) * (x - mean);
  var = std::max(var / n, 1e-10);
  const double var_floor = 1e-6 * var + 1e-12;

  GaussianMixture g;
  for (std::size_t k = 0; k < K; ++k) {
    const auto q = static_cast<std::size_t>((static_cast<double>(k) + 0.5) / static_cast<double>(K) * (n - 1));
    g.weights.push_back(1.0 / static_cast<double>(K));
    g.means.push_back(sorted[q]);
    g.variances.push_back(var / static_cast<double>(K * K));
  }

  std::vector<double> resp(sorted.size() * K);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    double ll = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double d = sorted[i] - g.means[k];
        const double p = g.weights[k] * std::exp(-0.5 * d * d / g.variances[k]) /
                         std::sqrt(2.0 * kPi * g.variances[k]);
        resp[i * K + k] = p;
        total += p;
      }
      total = std::max(total, 1e-300);
      ll += std::log(total);
      for (std::size_t k = 0; k < K; ++k) resp[i * K + k] /= total;
    }
    for (std::size_t k = 0; k < K; ++k) {
      double nk = 0.0;
      double mk = 0.0;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        nk += resp[i * K + k];
        mk += resp[i * K + k] * sorted[i];
      }
      if (nk < 1e-12) continue;
      mk /= nk;
      double vk = 0.0;
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double d = sorted[i] - mk;
        vk += resp[i * K + k] * d * d;
      }
      g.weights[k] = nk / n;
      g.means[k] = mk;
      g.variances[k] = std::max(vk / nk, var_floor);
    }
    if (std::abs(ll - prev_ll) < 1e-9 * std::abs(ll)) break;
    prev_ll = ll;
  }
  const double wsum = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
  for (auto& w : g.weights) w /= wsum;
  return g;
}

PowerSamples collect_power_samples(int n_scenes, std::uint64_t seed) {
  PowerSamples out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> snr(0.0, 20.0);
  for (int i = 0; i < n_scenes; ++i) {
    PipelineConfig cfg;
    Scene sc;
    switch (i % 3) {
      case 0: sc.mics = open_array_8(); break;
      case 1: sc.mics = circular_array(8, 0.05); break;
      default:
        sc.mics = cube_array();
        sc.directivity = DirectivityModel::kOccluding;
        break;
    }
    cfg.raw.n_channels = static_cast<int>(sc.mics.size());
    for (std::size_t m = 0; m < sc.mics.size(); ++m) cfg.mapping.push_back(static_cast<int>(m));
    cfg.general.mics = sc.mics;
    sc.duration_s = 3.0;
    sc.seed = rng();
    sc.noise_floor_db = -20.0 - snr(rng);

    SceneSource src;
    src.kind = i % 2 == 1 ? SignalKind::kSpeechShaped : SignalKind::kWhite;
    src.level_db = -20.0;
    const Vec3 d = random_unit_vector(rng, cfg.half_sphere());
    src.trajectory.keyframes = {
        Keyframe{0.0, rad_to_deg(std::atan2(d.y(), d.x())), rad_to_deg(std::asin(d.z()))}};
    src.active = {{1.0, 3.0}};
    sc.sources = {src};

    const Rendering r = render(sc);
    const auto N = static_cast<std::size_t>(cfg.general.frame_size_samples);
    const auto hop = static_cast<std::size_t>(cfg.general.hop_size_samples);
    Localizer loc(cfg);
    for (const auto& f : stft(r.mix, N, hop, sc.fs_hz)) {
      const auto doas = loc.process(f);
      const double t = (static_cast<double>(f.frame_index * hop) + static_cast<double>(N) / 2.0) / sc.fs_hz;
      const bool on = t > 1.05 && t < 2.95;
      const bool off = t > 0.3 && t < 0.95;
      for (const auto& p : doas) {
        const double err = rad_to_deg(angle_between(p.direction, d));
        if (on && err < 10.0) {
          out.active.push_back(p.power);
        } else if (off || (on && err > 30.0)) {
          out.diffuse.push_back(p.power);
        }
      }
    }
  }
  return out;
}

}  // namespace odas
