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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "odas/ssl.hpp"
#include "odas/types.hpp"

namespace odas {

inline constexpr int kProtocolVersion = 1;

// A source as published on the tracks stream. `tag` is "dynamic" for tracked
// sources and "static" for fixed targets.
struct SourceReport {
  int id = 0;
  std::string tag = "dynamic";
  Vec3 direction = Vec3::UnitX();
  double activity = 0.0;
};

// Fixed-point text with `decimals` digits; negative zero prints unsigned.
std::string format_fixed(double value, int decimals = 3);

// {"frame":k,"pot":[{"x":..,"y":..,"z":..,"E":..}]}
std::string potential_line(std::size_t frame, std::span<const PotentialDoa> doas);

// {"frame":k,"src":[{"id":..,"tag":"..","x":..,"y":..,"z":..,"activity":..}]}
std::string tracks_line(std::size_t frame, std::span<const SourceReport> sources);

enum class LineKind { kPotential, kTracks };

// Checks one line against the schema, including field order and number
// formatting. Throws Error describing the first violation.
LineKind validate_line(std::string_view line);

}  // namespace odas
