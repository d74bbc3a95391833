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

#include "odas/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "json.hpp"

namespace odas {

using nlohmann::json;

ConfigError::ConfigError(std::string path, const std::string& message,
                         std::size_t offset)
    : Error(path.empty() ? message : path + ": " + message),
      path_(std::move(path)),
      offset_(offset) {}

double GaussianMixture::pdf(double x) const {
  double p = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d = x - means[i];
    p += weights[i] * std::exp(-0.5 * d * d / variances[i]) /
         std::sqrt(2.0 * kPi * variances[i]);
  }
  return p;
}

// Mixtures fitted by EM to SRP power histograms of the synthetic harness
// (`odas calibrate --scenes 60 --seed 7`).
SstConfig::SstConfig()
    : gmm_active{{0.3692, 0.6308}, {0.0588, 0.4191}, {0.002077, 0.03951}},
      gmm_diffuse{{0.5298, 0.4702}, {0.002458, 0.01486}, {2.536e-6, 7.914e-5}} {}

bool PipelineConfig::half_sphere() const {
  switch (ssl.scan_half_sphere) {
    case HalfSphereMode::kOn:
      return true;
    case HalfSphereMode::kOff:
      return false;
    case HalfSphereMode::kAuto:
      break;
  }
  if (!detect_planarity(general.mics)) return false;
  if (general.mics.size() < 3) return false;
  // The half-sphere grid keeps z >= 0, so it only applies when the array
  // plane is horizontal.
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& m : general.mics) centroid += m.position_m;
  centroid /= static_cast<double>(general.mics.size());
  for (const auto& m : general.mics) {
    if (std::abs(m.position_m.z() - centroid.z()) > kPlanarityEpsilonM) {
      return false;
    }
  }
  return true;
}

bool detect_planarity(std::span<const MicSpec> mics, double eps) {
  if (mics.size() < 3) return true;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& m : mics) centroid += m.position_m;
  centroid /= static_cast<double>(mics.size());
  Eigen::MatrixXd centered(mics.size(), 3);
  for (std::size_t i = 0; i < mics.size(); ++i) {
    centered.row(static_cast<Eigen::Index>(i)) =
        (mics[i].position_m - centroid).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::Vector3d normal = svd.matrixV().col(2);
  for (const auto& m : mics) {
    if (std::abs((m.position_m - centroid).dot(normal)) > eps) return false;
  }
  return true;
}

namespace {

// Walks a JSON object while tracking the dotted path used in error messages
// and rejecting keys that the schema does not know.
class Node {
 public:
  Node(const json& value, std::string path)
      : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& value() const { return value_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(path_, message);
  }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    for (auto it = value_.begin(); it != value_.end(); ++it) {
      if (std::find(allowed.begin(), allowed.end(), it.key()) ==
          allowed.end()) {
        throw ConfigError(child_path(it.key()), "unknown key");
      }
    }
  }

  bool has(std::string_view key) const {
    return value_.contains(std::string(key));
  }

  Node child(std::string_view key) const {
    auto it = value_.find(std::string(key));
    if (it == value_.end()) {
      throw ConfigError(child_path(key), "missing mandatory field");
    }
    return Node(*it, child_path(key));
  }

  Node at(std::size_t i) const {
    return Node(value_.at(i), path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t size() const { return value_.size(); }

  int as_int() const {
    if (!value_.is_number_integer()) fail("expected an integer");
    const auto v = value_.get<std::int64_t>();
    if (v < std::numeric_limits<int>::min() ||
        v > std::numeric_limits<int>::max()) {
      fail("integer out of range");
    }
    return static_cast<int>(v);
  }

  double as_double() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  bool as_bool() const {
    if (!value_.is_boolean()) fail("expected a boolean");
    return value_.get<bool>();
  }

  std::string as_string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  Vec3 as_vec3() const {
    if (!value_.is_array() || value_.size() != 3) {
      fail("expected an array of 3 numbers");
    }
    return Vec3(at(0).as_double(), at(1).as_double(), at(2).as_double());
  }

  std::vector<double> as_double_list() const {
    if (!value_.is_array()) fail("expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).as_double());
    return out;
  }

  template <typename T>
  void read(std::string_view key, T& out) const {
    if (!has(key)) return;
    const Node c = child(key);
    if constexpr (std::is_same_v<T, int>) {
      out = c.as_int();
    } else if constexpr (std::is_same_v<T, double>) {
      out = c.as_double();
    } else if constexpr (std::is_same_v<T, bool>) {
      out = c.as_bool();
    }
  }

 private:
  std::string child_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json& value_;
  std::string path_;
};

RawInputConfig read_raw(const Node& n) {
  n.expect_object(
      {"sample_rate_hz", "bits_per_sample", "n_channels", "hop_size_samples"});
  RawInputConfig r;
  r.sample_rate_hz = n.child("sample_rate_hz").as_int();
  r.bits_per_sample = n.child("bits_per_sample").as_int();
  r.n_channels = n.child("n_channels").as_int();
  n.read("hop_size_samples", r.hop_size_samples);
  return r;
}

MicSpec read_mic(const Node& n) {
  n.expect_object({"position_m", "orientation", "fov_deg", "sigma_pos_m"});
  MicSpec m;
  m.position_m = n.child("position_m").as_vec3();
  if (n.has("orientation")) m.orientation = n.child("orientation").as_vec3();
  n.read("fov_deg", m.fov_deg);
  n.read("sigma_pos_m", m.sigma_pos_m);
  return m;
}

GeneralConfig read_general(const Node& n) {
  n.expect_object({"frame_size_samples", "hop_size_samples", "fs_processing_hz",
                   "speed_of_sound_mps", "speed_of_sound_uncertainty_mps",
                   "mics"});
  GeneralConfig g;
  n.read("frame_size_samples", g.frame_size_samples);
  n.read("hop_size_samples", g.hop_size_samples);
  n.read("fs_processing_hz", g.fs_processing_hz);
  n.read("speed_of_sound_mps", g.speed_of_sound_mps);
  n.read("speed_of_sound_uncertainty_mps", g.speed_of_sound_uncertainty_mps);
  const Node mics = n.child("mics");
  if (!mics.value().is_array()) mics.fail("expected an array of microphones");
  for (std::size_t i = 0; i < mics.size(); ++i) {
    g.mics.push_back(read_mic(mics.at(i)));
  }
  return g;
}

McraConfig read_mcra(const Node& n) {
  n.expect_object({"alpha_s", "alpha_p", "alpha_d", "L_window", "delta"});
  McraConfig m;
  n.read("alpha_s", m.alpha_s);
  n.read("alpha_p", m.alpha_p);
  n.read("alpha_d", m.alpha_d);
  n.read("L_window", m.L_window);
  n.read("delta", m.delta);
  return m;
}

SslConfig read_ssl(const Node& n) {
  n.expect_object({"n_potential_doas", "interpolation_rate", "coarse_level",
                   "fine_level", "scan_half_sphere", "snr_weighting",
                   "hierarchical", "prune_pairs"});
  SslConfig s;
  n.read("n_potential_doas", s.n_potential_doas);
  n.read("interpolation_rate", s.interpolation_rate);
  n.read("coarse_level", s.coarse_level);
  n.read("fine_level", s.fine_level);
  if (n.has("scan_half_sphere")) {
    const Node h = n.child("scan_half_sphere");
    if (h.value().is_boolean()) {
      s.scan_half_sphere = h.as_bool() ? HalfSphereMode::kOn : HalfSphereMode::kOff;
    } else if (h.value().is_string() && h.as_string() == "auto") {
      s.scan_half_sphere = HalfSphereMode::kAuto;
    } else {
      h.fail("expected true, false or \"auto\"");
    }
  }
  n.read("snr_weighting", s.snr_weighting);
  n.read("hierarchical", s.hierarchical);
  n.read("prune_pairs", s.prune_pairs);
  return s;
}

GaussianMixture read_gmm(const Node& n) {
  n.expect_object({"weights", "means", "variances"});
  GaussianMixture g;
  g.weights = n.child("weights").as_double_list();
  g.means = n.child("means").as_double_list();
  g.variances = n.child("variances").as_double_list();
  return g;
}

SstConfig read_sst(const Node& n) {
  n.expect_object({"sigma_pos", "sigma_vel", "measurement_sigma",
                   "initial_velocity_sigma", "gmm_active", "gmm_diffuse",
                   "p_false", "p_new", "probability_floor",
                   "activity_forgetting", "n_confirm", "n_forget",
                   "max_tracks"});
  SstConfig s;
  n.read("sigma_pos", s.sigma_pos);
  n.read("sigma_vel", s.sigma_vel);
  n.read("measurement_sigma", s.measurement_sigma);
  n.read("initial_velocity_sigma", s.initial_velocity_sigma);
  if (n.has("gmm_active")) s.gmm_active = read_gmm(n.child("gmm_active"));
  if (n.has("gmm_diffuse")) s.gmm_diffuse = read_gmm(n.child("gmm_diffuse"));
  n.read("p_false", s.p_false);
  n.read("p_new", s.p_new);
  n.read("probability_floor", s.probability_floor);
  n.read("activity_forgetting", s.activity_forgetting);
  n.read("n_confirm", s.n_confirm);
  n.read("n_forget", s.n_forget);
  n.read("max_tracks", s.max_tracks);
  return s;
}

SssConfig read_sss(const Node& n) {
  n.expect_object({"method", "use_subarray", "gss_step_size",
                   "gss_constraint_weight", "postfilter", "output",
                   "fixed_targets"});
  SssConfig s;
  if (n.has("method")) {
    const Node m = n.child("method");
    const std::string v = m.as_string();
    if (v == "delay_and_sum") {
      s.method = SeparationMethod::kDelayAndSum;
    } else if (v == "gss") {
      s.method = SeparationMethod::kGss;
    } else {
      m.fail("expected \"delay_and_sum\" or \"gss\"");
    }
  }
  n.read("use_subarray", s.use_subarray);
  n.read("gss_step_size", s.gss_step_size);
  n.read("gss_constraint_weight", s.gss_constraint_weight);
  if (n.has("postfilter")) {
    const Node p = n.child("postfilter");
    p.expect_object({"enabled", "leakage", "gain_min_db", "alpha_dd"});
    p.read("enabled", s.postfilter.enabled);
    p.read("leakage", s.postfilter.leakage);
    p.read("gain_min_db", s.postfilter.gain_min_db);
    p.read("alpha_dd", s.postfilter.alpha_dd);
  }
  if (n.has("output")) {
    const Node o = n.child("output");
    o.expect_object({"bits_per_sample"});
    o.read("bits_per_sample", s.output_bits_per_sample);
  }
  if (n.has("fixed_targets")) {
    const Node t = n.child("fixed_targets");
    if (!t.value().is_array()) t.fail("expected an array of directions");
    for (std::size_t i = 0; i < t.size(); ++i) {
      s.fixed_targets.push_back(t.at(i).as_vec3());
    }
  }
  return s;
}

bool valid_bit_depth(int bits) {
  return bits == 8 || bits == 16 || bits == 24 || bits == 32;
}

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

void require_open_unit(double v, const std::string& path) {
  require(v > 0.0 && v < 1.0, path, "must lie in (0, 1)");
}

void require_unit_norm(const Vec3& v, const std::string& path) {
  require(std::abs(v.norm() - 1.0) <= 1e-6, path, "must have unit norm");
}

void validate_gmm(const GaussianMixture& g, const std::string& path) {
  require(!g.weights.empty(), path + ".weights", "must not be empty");
  require(g.means.size() == g.weights.size(), path + ".means",
          "length must match weights");
  require(g.variances.size() == g.weights.size(), path + ".variances",
          "length must match weights");
  double total = 0.0;
  for (std::size_t i = 0; i < g.weights.size(); ++i) {
    const std::string idx = "[" + std::to_string(i) + "]";
    require(g.weights[i] >= 0.0, path + ".weights" + idx, "must be >= 0");
    require(g.variances[i] > 0.0, path + ".variances" + idx, "must be > 0");
    total += g.weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-6, path + ".weights", "must sum to 1");
}

json mixture_to_json(const GaussianMixture& g) {
  return json{{"weights", g.weights}, {"means", g.means},
              {"variances", g.variances}};
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

void validate_config(const PipelineConfig& cfg) {
  const auto& raw = cfg.raw;
  require(raw.sample_rate_hz > 0, "raw.sample_rate_hz", "must be positive");
  require(valid_bit_depth(raw.bits_per_sample), "raw.bits_per_sample",
          "must be one of 8, 16, 24, 32");
  require(raw.n_channels > 0, "raw.n_channels", "must be positive");
  require(raw.hop_size_samples > 0, "raw.hop_size_samples", "must be positive");

  require(!cfg.mapping.empty(), "mapping", "must select at least one channel");
  std::set<int> seen;
  for (std::size_t i = 0; i < cfg.mapping.size(); ++i) {
    const std::string p = "mapping[" + std::to_string(i) + "]";
    const int c = cfg.mapping[i];
    require(c >= 0 && c < raw.n_channels, p,
            "channel index " + std::to_string(c) + " out of range for " +
                std::to_string(raw.n_channels) + " channels");
    require(seen.insert(c).second, p, "duplicate channel index");
  }

  const auto& g = cfg.general;
  const int n = g.frame_size_samples;
  require(n >= 4 && (n & (n - 1)) == 0, "general.frame_size_samples",
          "must be a power of two >= 4");
  require(g.hop_size_samples > 0 && g.hop_size_samples <= n,
          "general.hop_size_samples", "must lie in (0, frame_size_samples]");
  require(g.fs_processing_hz > 0, "general.fs_processing_hz",
          "must be positive");
  require(g.speed_of_sound_mps > 0.0, "general.speed_of_sound_mps",
          "must be positive");
  require(g.speed_of_sound_uncertainty_mps >= 0.0 &&
              g.speed_of_sound_uncertainty_mps < g.speed_of_sound_mps,
          "general.speed_of_sound_uncertainty_mps",
          "must lie in [0, speed_of_sound_mps)");
  require(g.mics.size() == cfg.mapping.size(), "general.mics",
          "expected " + std::to_string(cfg.mapping.size()) +
              " microphones (one per mapped channel), got " +
              std::to_string(g.mics.size()));
  for (std::size_t i = 0; i < g.mics.size(); ++i) {
    const std::string p = "general.mics[" + std::to_string(i) + "]";
    const auto& m = g.mics[i];
    require_unit_norm(m.orientation, p + ".orientation");
    require(m.fov_deg > 0.0 && m.fov_deg <= 360.0, p + ".fov_deg",
            "must lie in (0, 360]");
    require(m.sigma_pos_m >= 0.0, p + ".sigma_pos_m", "must be >= 0");
  }

  const auto& mc = cfg.mcra;
  require_open_unit(mc.alpha_s, "mcra.alpha_s");
  require_open_unit(mc.alpha_p, "mcra.alpha_p");
  require_open_unit(mc.alpha_d, "mcra.alpha_d");
  require(mc.L_window > 0, "mcra.L_window", "must be positive");
  require(mc.delta > 0.0, "mcra.delta", "must be positive");

  const auto& s = cfg.ssl;
  require(s.n_potential_doas > 0, "ssl.n_potential_doas", "must be positive");
  require(s.interpolation_rate > 0, "ssl.interpolation_rate",
          "must be positive");
  require(s.coarse_level >= 0 && s.coarse_level <= 6, "ssl.coarse_level",
          "must lie in [0, 6]");
  require(s.fine_level >= 0 && s.fine_level <= 6, "ssl.fine_level",
          "must lie in [0, 6]");
  require(s.fine_level > s.coarse_level, "ssl.fine_level",
          "must be greater than ssl.coarse_level");

  const auto& t = cfg.sst;
  require(t.sigma_pos > 0.0, "sst.sigma_pos", "must be positive");
  require(t.sigma_vel > 0.0, "sst.sigma_vel", "must be positive");
  require(t.measurement_sigma > 0.0, "sst.measurement_sigma",
          "must be positive");
  require(t.initial_velocity_sigma > 0.0, "sst.initial_velocity_sigma",
          "must be positive");
  validate_gmm(t.gmm_active, "sst.gmm_active");
  validate_gmm(t.gmm_diffuse, "sst.gmm_diffuse");
  require_open_unit(t.p_false, "sst.p_false");
  require_open_unit(t.p_new, "sst.p_new");
  require(t.p_false + t.p_new < 1.0, "sst.p_new",
          "p_false + p_new must be < 1");
  require_open_unit(t.probability_floor, "sst.probability_floor");
  require_open_unit(t.activity_forgetting, "sst.activity_forgetting");
  require(t.n_confirm > 0, "sst.n_confirm", "must be positive");
  require(t.n_forget > 0, "sst.n_forget", "must be positive");
  require(t.max_tracks > 0, "sst.max_tracks", "must be positive");

  const auto& ss = cfg.sss;
  require(ss.gss_step_size >= 0.0, "sss.gss_step_size", "must be >= 0");
  require(ss.gss_constraint_weight >= 0.0, "sss.gss_constraint_weight",
          "must be >= 0");
  require(ss.postfilter.leakage >= 0.0, "sss.postfilter.leakage",
          "must be >= 0");
  require(ss.postfilter.gain_min_db < 0.0, "sss.postfilter.gain_min_db",
          "must be negative");
  require_open_unit(ss.postfilter.alpha_dd, "sss.postfilter.alpha_dd");
  require(valid_bit_depth(ss.output_bits_per_sample),
          "sss.output.bits_per_sample", "must be one of 8, 16, 24, 32");
  for (std::size_t i = 0; i < ss.fixed_targets.size(); ++i) {
    require_unit_norm(ss.fixed_targets[i],
                      "sss.fixed_targets[" + std::to_string(i) + "]");
  }
}

PipelineConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("syntax error at byte ") +
                              std::to_string(e.byte) + ": " + e.what(),
                      e.byte);
  }
  const Node root(doc, "");
  root.expect_object({"raw", "mapping", "general", "mcra", "ssl", "sst", "sss"});

  PipelineConfig cfg;
  cfg.raw = read_raw(root.child("raw"));
  const Node mapping = root.child("mapping");
  if (!mapping.value().is_array()) mapping.fail("expected an array");
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    cfg.mapping.push_back(mapping.at(i).as_int());
  }
  cfg.general = read_general(root.child("general"));
  if (root.has("mcra")) cfg.mcra = read_mcra(root.child("mcra"));
  if (root.has("ssl")) cfg.ssl = read_ssl(root.child("ssl"));
  if (root.has("sst")) cfg.sst = read_sst(root.child("sst"));
  if (root.has("sss")) cfg.sss = read_sss(root.child("sss"));
  validate_config(cfg);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open configuration file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
  json mics = json::array();
  for (const auto& m : cfg.general.mics) {
    mics.push_back(json{{"position_m", vec_to_json(m.position_m)},
                        {"orientation", vec_to_json(m.orientation)},
                        {"fov_deg", m.fov_deg},
                        {"sigma_pos_m", m.sigma_pos_m}});
  }
  json half;
  switch (cfg.ssl.scan_half_sphere) {
    case HalfSphereMode::kAuto:
      half = "auto";
      break;
    case HalfSphereMode::kOn:
      half = true;
      break;
    case HalfSphereMode::kOff:
      half = false;
      break;
  }
  json targets = json::array();
  for (const auto& t : cfg.sss.fixed_targets) targets.push_back(vec_to_json(t));

  const json doc{
      {"raw",
       {{"sample_rate_hz", cfg.raw.sample_rate_hz},
        {"bits_per_sample", cfg.raw.bits_per_sample},
        {"n_channels", cfg.raw.n_channels},
        {"hop_size_samples", cfg.raw.hop_size_samples}}},
      {"mapping", cfg.mapping},
      {"general",
       {{"frame_size_samples", cfg.general.frame_size_samples},
        {"hop_size_samples", cfg.general.hop_size_samples},
        {"fs_processing_hz", cfg.general.fs_processing_hz},
        {"speed_of_sound_mps", cfg.general.speed_of_sound_mps},
        {"speed_of_sound_uncertainty_mps",
         cfg.general.speed_of_sound_uncertainty_mps},
        {"mics", mics}}},
      {"mcra",
       {{"alpha_s", cfg.mcra.alpha_s},
        {"alpha_p", cfg.mcra.alpha_p},
        {"alpha_d", cfg.mcra.alpha_d},
        {"L_window", cfg.mcra.L_window},
        {"delta", cfg.mcra.delta}}},
      {"ssl",
       {{"n_potential_doas", cfg.ssl.n_potential_doas},
        {"interpolation_rate", cfg.ssl.interpolation_rate},
        {"coarse_level", cfg.ssl.coarse_level},
        {"fine_level", cfg.ssl.fine_level},
        {"scan_half_sphere", half},
        {"snr_weighting", cfg.ssl.snr_weighting},
        {"hierarchical", cfg.ssl.hierarchical},
        {"prune_pairs", cfg.ssl.prune_pairs}}},
      {"sst",
       {{"sigma_pos", cfg.sst.sigma_pos},
        {"sigma_vel", cfg.sst.sigma_vel},
        {"measurement_sigma", cfg.sst.measurement_sigma},
        {"initial_velocity_sigma", cfg.sst.initial_velocity_sigma},
        {"gmm_active", mixture_to_json(cfg.sst.gmm_active)},
        {"gmm_diffuse", mixture_to_json(cfg.sst.gmm_diffuse)},
        {"p_false", cfg.sst.p_false},
        {"p_new", cfg.sst.p_new},
        {"probability_floor", cfg.sst.probability_floor},
        {"activity_forgetting", cfg.sst.activity_forgetting},
        {"n_confirm", cfg.sst.n_confirm},
        {"n_forget", cfg.sst.n_forget},
        {"max_tracks", cfg.sst.max_tracks}}},
      {"sss",
       {{"method", cfg.sss.method == SeparationMethod::kGss ? "gss"
                                                            : "delay_and_sum"},
        {"use_subarray", cfg.sss.use_subarray},
        {"gss_step_size", cfg.sss.gss_step_size},
        {"gss_constraint_weight", cfg.sss.gss_constraint_weight},
        {"postfilter",
         {{"enabled", cfg.sss.postfilter.enabled},
          {"leakage", cfg.sss.postfilter.leakage},
          {"gain_min_db", cfg.sss.postfilter.gain_min_db},
          {"alpha_dd", cfg.sss.postfilter.alpha_dd}}},
        {"output", {{"bits_per_sample", cfg.sss.output_bits_per_sample}}},
        {"fixed_targets", targets}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace odas
