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

#include "odas/protocol.hpp"

#include <cstdio>
#include <regex>
#include <vector>

#include "json.hpp"

namespace odas {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

std::string potential_line(std::size_t frame, std::span<const PotentialDoa> doas) {
  std::string out = "{\"frame\":" + std::to_string(frame) + ",\"pot\":[";
  for (std::size_t i = 0; i < doas.size(); ++i) {
    const Vec3 d = doas[i].direction.normalized();
    if (i > 0) out += ',';
    out += "{\"x\":" + format_fixed(d.x()) + ",\"y\":" + format_fixed(d.y()) +
           ",\"z\":" + format_fixed(d.z()) + ",\"E\":" + format_fixed(doas[i].power) + "}";
  }
  out += "]}";
  return out;
}

std::string tracks_line(std::size_t frame, std::span<const SourceReport> sources) {
  std::string out = "{\"frame\":" + std::to_string(frame) + ",\"src\":[";
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const SourceReport& s = sources[i];
    const Vec3 d = s.direction.normalized();
    if (i > 0) out += ',';
    out += "{\"id\":" + std::to_string(s.id) + ",\"tag\":\"" + s.tag +
           "\",\"x\":" + format_fixed(d.x()) + ",\"y\":" + format_fixed(d.y()) +
           ",\"z\":" + format_fixed(d.z()) +
           ",\"activity\":" + format_fixed(s.activity) + "}";
  }
  out += "]}";
  return out;
}

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& why) {
  throw Error("protocol: " + why);
}

void expect_keys(const ojson& obj, const std::vector<std::string>& keys,
                 const std::string& where) {
  if (!obj.is_object()) invalid(where + " is not an object");
  if (obj.size() != keys.size()) invalid(where + " has wrong field count");
  std::size_t i = 0;
  for (auto it = obj.begin(); it != obj.end(); ++it, ++i) {
    if (it.key() != keys[i]) invalid(where + " field " + std::to_string(i) + " should be " + keys[i]);
  }
}

}  // namespace

LineKind validate_line(std::string_view line) {
  // Every real number is written with exactly three decimals and no sign on
  // zero.
  static const std::regex kNumber(R"re("(x|y|z|E|activity)":(-?[0-9]+(?:\.[0-9]+)?))re");
  static const std::regex kFixed(R"(-?(0|[1-9][0-9]*)\.[0-9]{3})");
  const std::string text(line);
  for (std::sregex_iterator it(text.begin(), text.end(), kNumber), end; it != end; ++it) {
    const std::string v = (*it)[2].str();
    if (!std::regex_match(v, kFixed)) invalid("number " + v + " is not fixed to 3 decimals");
    if (v == "-0.000") invalid("negative zero");
  }

  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    invalid(std::string("not JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.size() != 2) invalid("top level must have two fields");
  auto it = doc.begin();
  if (it.key() != "frame" || !it.value().is_number_unsigned()) invalid("first field must be an unsigned frame");
  ++it;
  const std::string kind = it.key();
  const ojson& items = it.value();
  if (!items.is_array()) invalid(kind + " must be an array");
  if (kind == "pot") {
    for (const auto& p : items) {
      expect_keys(p, {"x", "y", "z", "E"}, "pot entry");
      for (const auto& [k, v] : p.items()) {
        if (!v.is_number()) invalid("pot." + k + " must be a number");
      }
      if (p["E"].get<double>() < 0.0) invalid("pot.E must be non-negative");
    }
    return LineKind::kPotential;
  }
  if (kind == "src") {
    for (const auto& s : items) {
      expect_keys(s, {"id", "tag", "x", "y", "z", "activity"}, "src entry");
      if (!s["id"].is_number_integer() || s["id"].get<long long>() <= 0) invalid("src.id must be a positive integer");
      const auto& tag = s["tag"];
      if (!tag.is_string() || (tag != "dynamic" && tag != "static")) invalid("src.tag must be dynamic or static");
      for (const char* k : {"x", "y", "z", "activity"}) {
        if (!s[k].is_number()) invalid(std::string("src.") + k + " must be a number");
      }
      const double a = s["activity"].get<double>();
      if (a < 0.0 || a > 1.0) invalid("src.activity must be in [0,1]");
    }
    return LineKind::kTracks;
  }
  invalid("second field must be pot or src");
}

}  // namespace odas
