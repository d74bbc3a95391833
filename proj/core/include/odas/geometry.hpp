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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odas/config.hpp"
#include "odas/types.hpp"

namespace odas {

// Unit-sphere scan grid from a subdivided icosahedron. A full sphere at
// subdivision level n has 10 * 4^n + 2 points. Points are sorted
// lexicographically so tables built from a grid are reproducible.
struct ScanGrid {
  int level = 0;
  bool half_sphere = false;
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  // Largest angle between a point and its nearest neighbor, radians.
  double max_neighbor_spacing() const;
};

inline constexpr double kHalfSphereEpsilon = 1e-6;

ScanGrid build_icosphere(int level, bool half_sphere);

// Closed field-of-view test: angle(orientation, d) <= fov / 2.
bool mic_sees(const MicSpec& mic, const Vec3& direction);

struct MicPair {
  int i = 0;
  int j = 0;
  bool operator==(const MicPair&) const = default;
};

// Pairs (i < j) for which some grid direction lies strictly inside both
// microphones' fields of view. Cones that only touch along their boundary
// (opposite faces of a closed array) share no direct sound path and are
// dropped. Omnidirectional microphones keep every pair. Throws if nothing
// survives.
std::vector<MicPair> select_pairs(std::span<const MicSpec> mics,
                                  const ScanGrid& grid);
std::vector<MicPair> all_pairs(std::size_t n_mics);

// Inclusive lag range, in interpolated samples, searched for one
// (pair, direction) entry.
struct LagWindow {
  int lo = 0;
  int hi = 0;
  bool operator==(const LagWindow&) const = default;
};

struct TableParams {
  double fs_hz = 16000.0;
  double speed_of_sound = 343.0;
  double speed_uncertainty = 0.0;
  int interpolation_rate = 1;
};

// Per-pair, per-direction TDOAs. For pair (i, j) and direction d the TDOA is
// fs * rate * (p_i - p_j) . d / c, i.e. how many interpolated samples the
// wavefront reaches mic j after mic i. Entries are stored pair-major.
struct PairTable {
  std::vector<MicPair> pairs;
  std::size_t n_points = 0;
  int interpolation_rate = 1;
  std::vector<double> tdoa;          // unrounded
  std::vector<int> lag;              // nearest integer lag
  std::vector<LagWindow> window;     // lag window from c +- dc and sigma_pos
  std::vector<std::uint8_t> visible; // both mics see the direction
  std::vector<double> max_tdoa;      // per pair, |p_i - p_j| * fs * rate / c

  std::size_t index(std::size_t pair, std::size_t point) const {
    return pair * n_points + point;
  }
  // Largest |lag| any window can reach.
  int max_lag() const;

  bool operator==(const PairTable&) const = default;
};

PairTable tdoa_table(std::span<const MicSpec> mics, const ScanGrid& grid,
                     std::span<const MicPair> pairs, const TableParams& params);

// For every coarse point, the fine points within `radius` (radians). With a
// negative radius the default 1.5 x coarse.max_neighbor_spacing() is used.
struct RefinementMap {
  double radius = 0.0;
  std::vector<std::vector<int>> neighbors;  // coarse point -> fine indices
  std::vector<std::vector<int>> cells;      // coarse point -> fine points nearest to it
};

RefinementMap refinement_neighbors(const ScanGrid& coarse, const ScanGrid& fine,
                                   double radius = -1.0);

// Widens every coarse window to span the windows of the fine points in its
// cell, so a coarse point scores at least as high as any fine point it
// represents.
PairTable widen_to_cells(const PairTable& coarse, const PairTable& fine,
                         const RefinementMap& map);

// Binary table cache: "ODASTDOA", u32 version, u64 key, i32 level,
// u8 half_sphere, u32 n_points, u32 n_pairs, i32 interpolation_rate, then
// pairs (i32 i, i32 j), tdoa (f64), lag (i32), window (i32 lo, i32 hi),
// visible (u8), max_tdoa (f64); all little-endian, pair-major.
std::uint64_t table_cache_key(std::span<const MicSpec> mics,
                              const ScanGrid& grid, const TableParams& params);
void save_table_cache(const std::string& path, std::uint64_t key,
                      const ScanGrid& grid, const PairTable& table);
// nullopt if the file is absent or was built for another key.
std::optional<PairTable> load_table_cache(const std::string& path,
                                          std::uint64_t key,
                                          const ScanGrid& grid);

}  // namespace odas
