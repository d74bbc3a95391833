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

#include "odas/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace odas {

ScanGrid build_icosphere(int level, bool half_sphere) {
  if (level < 0 || level > 6) {
    throw Error("build_icosphere: level must lie in [0, 6], got " +
                std::to_string(level));
  }
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoints.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = midpoint(f[0], f[1]);
      const int bc = midpoint(f[1], f[2]);
      const int ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  ScanGrid grid;
  grid.level = level;
  grid.half_sphere = half_sphere;
  for (const auto& v : verts) {
    if (half_sphere && v.z() < -kHalfSphereEpsilon) continue;
    grid.points.push_back(v);
  }
  std::sort(grid.points.begin(), grid.points.end(),
            [](const Vec3& a, const Vec3& b) {
              return std::lexicographical_compare(a.data(), a.data() + 3,
                                                  b.data(), b.data() + 3);
            });
  return grid;
}

double ScanGrid::max_neighbor_spacing() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < points.size(); ++a) {
    double best = kPi;
    for (std::size_t b = 0; b < points.size(); ++b) {
      if (a == b) continue;
      best = std::min(best, angle_between(points[a], points[b]));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

bool mic_sees(const MicSpec& mic, const Vec3& direction) {
  if (mic.omnidirectional()) return true;
  return angle_between(mic.orientation, direction) <=
         deg_to_rad(mic.fov_deg) / 2.0 + 1e-9;
}

namespace {

// Directions closer than this to the edge of a field of view count as
// grazing for pair selection.
constexpr double kGrazingMarginRad = 1e-6;

bool sees_strictly(const MicSpec& mic, const Vec3& direction) {
  if (mic.omnidirectional()) return true;
  return angle_between(mic.orientation, direction) <
         deg_to_rad(mic.fov_deg) / 2.0 - kGrazingMarginRad;
}

}  // namespace

std::vector<MicPair> all_pairs(std::size_t n_mics) {
  std::vector<MicPair> out;
  for (std::size_t i = 0; i < n_mics; ++i) {
    for (std::size_t j = i + 1; j < n_mics; ++j) {
      out.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
  }
  return out;
}

std::vector<MicPair> select_pairs(std::span<const MicSpec> mics,
                                  const ScanGrid& grid) {
  if (mics.size() < 2) throw Error("select_pairs: need at least 2 microphones");
  std::vector<MicPair> out;
  for (const MicPair& p : all_pairs(mics.size())) {
    const auto& a = mics[static_cast<std::size_t>(p.i)];
    const auto& b = mics[static_cast<std::size_t>(p.j)];
    const bool shared = std::any_of(
        grid.points.begin(), grid.points.end(), [&](const Vec3& d) {
          return sees_strictly(a, d) && sees_strictly(b, d);
        });
    if (shared) out.push_back(p);
  }
  if (out.empty()) {
    throw Error(
        "select_pairs: no microphone pair shares a field of view; the array "
        "cannot localize");
  }
  return out;
}

int PairTable::max_lag() const {
  int m = 0;
  for (const auto& w : window) m = std::max({m, std::abs(w.lo), std::abs(w.hi)});
  return m;
}

PairTable tdoa_table(std::span<const MicSpec> mics, const ScanGrid& grid,
                     std::span<const MicPair> pairs, const TableParams& params) {
  if (params.interpolation_rate < 1) {
    throw Error("tdoa_table: interpolation_rate must be >= 1");
  }
  const double c = params.speed_of_sound;
  const double dc = params.speed_uncertainty;
  const double scale = params.fs_hz * params.interpolation_rate;

  PairTable t;
  t.pairs.assign(pairs.begin(), pairs.end());
  t.n_points = grid.size();
  t.interpolation_rate = params.interpolation_rate;
  const std::size_t n = pairs.size() * grid.size();
  t.tdoa.resize(n);
  t.lag.resize(n);
  t.window.resize(n);
  t.visible.resize(n);
  t.max_tdoa.resize(pairs.size());

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& mi = mics[static_cast<std::size_t>(pairs[p].i)];
    const auto& mj = mics[static_cast<std::size_t>(pairs[p].j)];
    const Vec3 baseline = mi.position_m - mj.position_m;
    t.max_tdoa[p] = baseline.norm() * scale / c;
    const double pos_slack =
        (mi.sigma_pos_m + mj.sigma_pos_m) * scale / (c - dc);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double path = baseline.dot(grid.points[g]) * scale;
      const double tau = path / c;
      const double a = path / (c + dc);
      const double b = path / (c - dc);
      const std::size_t k = t.index(p, g);
      t.tdoa[k] = tau;
      t.lag[k] = static_cast<int>(std::lround(tau));
      t.window[k] = {static_cast<int>(std::lround(std::min(a, b) - pos_slack)),
                     static_cast<int>(std::lround(std::max(a, b) + pos_slack))};
      t.visible[k] =
          mic_sees(mi, grid.points[g]) && mic_sees(mj, grid.points[g]) ? 1 : 0;
    }
  }
  return t;
}

RefinementMap refinement_neighbors(const ScanGrid& coarse, const ScanGrid& fine,
                                   double radius) {
  RefinementMap map;
  map.radius = radius >= 0.0 ? radius : 1.5 * coarse.max_neighbor_spacing();
  map.neighbors.resize(coarse.size());
  map.cells.resize(coarse.size());
  for (std::size_t f = 0; f < fine.size(); ++f) {
    std::size_t nearest = 0;
    double nearest_angle = kPi + 1.0;
    for (std::size_t c = 0; c < coarse.size(); ++c) {
      const double a = angle_between(coarse.points[c], fine.points[f]);
      if (a <= map.radius) map.neighbors[c].push_back(static_cast<int>(f));
      if (a < nearest_angle) {
        nearest_angle = a;
        nearest = c;
      }
    }
    map.cells[nearest].push_back(static_cast<int>(f));
  }
  return map;
}

PairTable widen_to_cells(const PairTable& coarse, const PairTable& fine,
                         const RefinementMap& map) {
  if (coarse.pairs != fine.pairs) {
    throw Error("widen_to_cells: coarse and fine tables use different pairs");
  }
  PairTable out = coarse;
  for (std::size_t p = 0; p < coarse.pairs.size(); ++p) {
    for (std::size_t c = 0; c < coarse.n_points; ++c) {
      LagWindow& w = out.window[out.index(p, c)];
      for (int f : map.cells[c]) {
        const LagWindow& fw = fine.window[fine.index(p, static_cast<std::size_t>(f))];
        w.lo = std::min(w.lo, fw.lo);
        w.hi = std::max(w.hi, fw.hi);
      }
    }
  }
  return out;
}

}  // namespace odas
