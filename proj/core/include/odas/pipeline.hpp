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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "odas/config.hpp"
#include "odas/protocol.hpp"
#include "odas/sinks.hpp"
#include "odas/ssl.hpp"

namespace odas {

// Blocking bounded FIFO. push waits while full, pop waits while empty; after
// close() pushes fail and pops drain what is left.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw Error("BoundedQueue: zero capacity");
  }

  bool push(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    max_depth_ = std::max(max_depth_, items_.size());
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return v;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t max_depth() const {
    std::lock_guard lock(mu_);
    return max_depth_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  std::size_t max_depth_ = 0;
  bool closed_ = false;
};

using Clock = std::chrono::system_clock;

struct PotentialDoaSet {
  std::size_t frame_index = 0;
  Clock::time_point timestamp;
  std::vector<PotentialDoa> doas;
};

struct TrackedSourceSet {
  std::size_t frame_index = 0;
  Clock::time_point timestamp;
  std::vector<SourceReport> sources;
};

struct SeparatedChannel {
  int track_id = 0;
  Signal samples;  // next hop of time-domain output
};

struct SeparatedFrameSet {
  std::size_t frame_index = 0;
  Clock::time_point timestamp;
  std::vector<SeparatedChannel> channels;
};

struct Diagnostics {
  std::size_t frame_index = 0;
  Clock::time_point timestamp;
  std::string message;
};

using PipelineEvent =
    std::variant<PotentialDoaSet, TrackedSourceSet, SeparatedFrameSet, Diagnostics>;

// Byte stream feeding the pipeline.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  // Fills up to buf.size() bytes; returns 0 at end of stream.
  virtual std::size_t read(std::span<std::byte> buf) = 0;
};

// File path or "-" for standard input.
class FileSource : public ByteSource {
 public:
  explicit FileSource(const std::string& path);
  ~FileSource() override;
  FileSource(const FileSource&) = delete;
  FileSource& operator=(const FileSource&) = delete;
  std::size_t read(std::span<std::byte> buf) override;

 private:
  std::FILE* file_ = nullptr;
  bool owned_ = false;
};

class MemorySource : public ByteSource {
 public:
  explicit MemorySource(std::vector<std::byte> bytes) : bytes_(std::move(bytes)) {}
  std::size_t read(std::span<std::byte> buf) override;

 private:
  std::vector<std::byte> bytes_;
  std::size_t offset_ = 0;
};

struct PipelineSinks {
  LineSink* potential = nullptr;
  LineSink* tracks = nullptr;
  // Directory for separated_<id>.raw. Separation runs when this is set or
  // `separate` is true.
  std::string separated_dir;
  bool separate = false;
  std::function<void(const PipelineEvent&)> on_event;
};

struct RunOptions {
  bool threaded = true;
  std::size_t queue_capacity = 8;
  std::string cache_dir;
  const std::atomic<bool>* stop = nullptr;
};

struct RunReport {
  std::uint64_t frames = 0;
  std::uint64_t input_samples = 0;  // per channel, at the processing rate
  ScanCounters scan;
  std::uint64_t pairs_per_frame = 0;
  std::uint64_t tracks_confirmed = 0;
  std::uint64_t separated_outputs = 0;
  std::uint64_t mic_channels_beamformed = 0;
  std::uint64_t subarray_fallbacks = 0;
  std::uint64_t gss_resets = 0;
  std::uint64_t sink_drops = 0;
  std::size_t queue_capacity = 0;
  std::vector<std::size_t> queue_max_depth;
  double wall_seconds = 0.0;
  double audio_seconds = 0.0;
  double realtime_factor = 0.0;  // wall time / audio time

  std::string to_json() const;
};

// Decode, resample, STFT, localize, track (or use fixed targets), separate,
// emit. Each stage runs on its own thread when options.threaded is set;
// results are identical either way.
RunReport run_pipeline(const PipelineConfig& cfg, ByteSource& source,
                       const PipelineSinks& sinks, const RunOptions& options = {});

}  // namespace odas
