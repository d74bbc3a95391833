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

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "odas/geometry.hpp"

namespace odas {
namespace {

constexpr char kMagic[8] = {'O', 'D', 'A', 'S', 'T', 'D', 'O', 'A'};
constexpr std::uint32_t kVersion = 1;

class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void add(double v) { add_u64(std::bit_cast<std::uint64_t>(v)); }
  void add_u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    add_bytes(b, 8);
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}
  std::uint8_t u8() {
    if (pos_ >= data_.size()) throw Error("table cache " + path_ + " is truncated");
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::vector<char> data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t table_cache_key(std::span<const MicSpec> mics,
                              const ScanGrid& grid, const TableParams& params) {
  Fnv1a h;
  h.add_u64(mics.size());
  for (const auto& m : mics) {
    for (int k = 0; k < 3; ++k) h.add(m.position_m[k]);
    for (int k = 0; k < 3; ++k) h.add(m.orientation[k]);
    h.add(m.fov_deg);
    h.add(m.sigma_pos_m);
  }
  h.add_u64(static_cast<std::uint64_t>(grid.level));
  h.add_u64(grid.half_sphere ? 1 : 0);
  h.add(params.fs_hz);
  h.add(params.speed_of_sound);
  h.add(params.speed_uncertainty);
  h.add_u64(static_cast<std::uint64_t>(params.interpolation_rate));
  return h.value();
}

void save_table_cache(const std::string& path, std::uint64_t key,
                      const ScanGrid& grid, const PairTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write table cache " + path);
  Writer w(out);
  out.write(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u64(key);
  w.i32(grid.level);
  w.u8(grid.half_sphere ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(table.n_points));
  w.u32(static_cast<std::uint32_t>(table.pairs.size()));
  w.i32(table.interpolation_rate);
  for (const auto& p : table.pairs) {
    w.i32(p.i);
    w.i32(p.j);
  }
  for (double v : table.tdoa) w.f64(v);
  for (int v : table.lag) w.i32(v);
  for (const auto& win : table.window) {
    w.i32(win.lo);
    w.i32(win.hi);
  }
  for (auto v : table.visible) w.u8(v);
  for (double v : table.max_tdoa) w.f64(v);
  if (!out) throw Error("failed writing table cache " + path);
}

std::optional<PairTable> load_table_cache(const std::string& path,
                                          std::uint64_t key,
                                          const ScanGrid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::vector<char> data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) ||
      std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("table cache " + path + " has a bad magic number");
  }
  Reader r(std::vector<char>(data.begin() + sizeof(kMagic), data.end()), path);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error("table cache " + path + " has unsupported version " +
                std::to_string(version));
  }
  if (r.u64() != key) return std::nullopt;
  const int level = r.i32();
  const bool half = r.u8() != 0;
  if (level != grid.level || half != grid.half_sphere) return std::nullopt;

  PairTable t;
  t.n_points = r.u32();
  const std::size_t n_pairs = r.u32();
  t.interpolation_rate = r.i32();
  if (t.n_points != grid.size()) {
    throw Error("table cache " + path + " point count does not match the grid");
  }
  for (std::size_t p = 0; p < n_pairs; ++p) {
    MicPair mp;
    mp.i = r.i32();
    mp.j = r.i32();
    t.pairs.push_back(mp);
  }
  const std::size_t n = n_pairs * t.n_points;
  t.tdoa.resize(n);
  t.lag.resize(n);
  t.window.resize(n);
  t.visible.resize(n);
  t.max_tdoa.resize(n_pairs);
  for (auto& v : t.tdoa) v = r.f64();
  for (auto& v : t.lag) v = r.i32();
  for (auto& win : t.window) {
    win.lo = r.i32();
    win.hi = r.i32();
  }
  for (auto& v : t.visible) v = r.u8();
  for (auto& v : t.max_tdoa) v = r.f64();
  if (!r.at_end()) throw Error("table cache " + path + " has trailing bytes");
  return t;
}

}  // namespace odas
