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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "odas/harness.hpp"
#include "odas/pipeline.hpp"

using namespace odas;

namespace {

class MemorySink : public LineSink {
 public:
  void write(std::string_view line) override { lines.emplace_back(line); }
  std::vector<std::string> lines;
};

PipelineConfig config_for(const std::vector<MicSpec>& mics) {
  PipelineConfig cfg;
  cfg.general.mics = mics;
  cfg.raw.n_channels = static_cast<int>(mics.size());
  cfg.mapping.clear();
  for (std::size_t i = 0; i < mics.size(); ++i) cfg.mapping.push_back(static_cast<int>(i));
  validate_config(cfg);
  return cfg;
}

std::vector<std::byte> scene_bytes(const PipelineConfig& cfg, double seconds, int fs = 16000) {
  Scene scene;
  scene.mics = cfg.general.mics;
  scene.duration_s = seconds;
  scene.fs_hz = fs;
  SceneSource s;
  s.kind = SignalKind::kSpeechShaped;
  s.trajectory.keyframes = {Keyframe{0.0, 50.0, 25.0}};
  scene.sources.push_back(s);
  return encode_raw(render(scene).mix, cfg.raw.bits_per_sample);
}

}  // namespace

TEST_CASE("bounded queue blocks producers at capacity and drains after close") {
  BoundedQueue<int> q(2);
  CHECK(q.push(1));
  CHECK(q.push(2));
  std::atomic<bool> third_done{false};
  std::thread producer([&] {
    q.push(3);
    third_done = true;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK_FALSE(third_done.load());
  CHECK(q.pop() == 1);
  producer.join();
  CHECK(third_done.load());
  CHECK(q.max_depth() == 2);
  q.close();
  CHECK_FALSE(q.push(4));
  CHECK(q.pop() == 2);
  CHECK(q.pop() == 3);
  CHECK_FALSE(q.pop().has_value());
}

TEST_CASE("one output line per analysis frame on each stream") {
  const PipelineConfig cfg = config_for(open_array_8());
  const auto bytes = scene_bytes(cfg, 1.0);
  MemorySink pot, src;
  PipelineSinks sinks;
  sinks.potential = &pot;
  sinks.tracks = &src;
  MemorySource input(bytes);
  const RunReport r = run_pipeline(cfg, input, sinks);
  const std::size_t expected = (16000 - 512) / 256 + 1;
  CHECK(r.frames == expected);
  CHECK(pot.lines.size() == expected);
  CHECK(src.lines.size() == expected);
  // The trailing partial hop (16000 = 62.5 x 256) is discarded.
  CHECK(r.input_samples == 62 * 256);
  CHECK(r.audio_seconds == doctest::Approx(62.0 * 256.0 / 16000.0));
  for (std::size_t k = 0; k < expected; ++k) {
    CHECK(pot.lines[k].rfind("{\"frame\":" + std::to_string(k) + ",", 0) == 0);
    CHECK(validate_line(pot.lines[k]) == LineKind::kPotential);
    CHECK(validate_line(src.lines[k]) == LineKind::kTracks);
  }
}

TEST_CASE("input ending inside a sample frame is an error") {
  const PipelineConfig cfg = config_for(circular_array(4, 0.05));
  auto bytes = scene_bytes(cfg, 0.1);
  bytes.resize(bytes.size() - 3);
  MemorySource input(bytes);
  try {
    run_pipeline(cfg, input, PipelineSinks{});
    FAIL("truncated input accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("inside a sample frame") != std::string::npos);
  }
}

TEST_CASE("a slow consumer never grows the queues beyond their capacity") {
  const PipelineConfig cfg = config_for(open_array_8());
  const auto bytes = scene_bytes(cfg, 1.0);
  std::size_t events = 0;
  PipelineSinks sinks;
  sinks.separate = true;
  sinks.on_event = [&](const PipelineEvent&) {
    ++events;
    std::this_thread::sleep_for(std::chrono::microseconds(300));
  };
  RunOptions opts;
  opts.queue_capacity = 3;
  MemorySource input(bytes);
  const RunReport r = run_pipeline(cfg, input, sinks, opts);
  CHECK(r.queue_capacity == 3);
  REQUIRE_FALSE(r.queue_max_depth.empty());
  for (std::size_t d : r.queue_max_depth) CHECK(d <= 3);
  CHECK(events >= 2 * r.frames);
}

TEST_CASE("fixed targets bypass tracking and are reported as static") {
  PipelineConfig cfg = config_for(open_array_8());
  cfg.sss.fixed_targets = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const auto bytes = scene_bytes(cfg, 0.5);
  MemorySink src;
  PipelineSinks sinks;
  sinks.tracks = &src;
  const auto dir = std::filesystem::temp_directory_path() / "odas_unit_fixed";
  std::filesystem::remove_all(dir);
  sinks.separated_dir = dir.string();
  MemorySource input(bytes);
  const RunReport r = run_pipeline(cfg, input, sinks);
  REQUIRE_FALSE(src.lines.empty());
  CHECK(src.lines[0].find(R"("id":1,"tag":"static","x":1.000,"y":0.000,"z":0.000,"activity":1.000)") !=
        std::string::npos);
  CHECK(src.lines[0].find(R"("id":2,"tag":"static")") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "separated_1.raw"));
  CHECK(std::filesystem::exists(dir / "separated_2.raw"));
  // Each stream covers the input timeline at the output sample width.
  CHECK(std::filesystem::file_size(dir / "separated_1.raw") >= 8000u * 2u - 512u);
  CHECK(r.separated_outputs == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("input at another sample rate is resampled to the processing rate") {
  PipelineConfig cfg = config_for(circular_array(4, 0.05));
  cfg.raw.sample_rate_hz = 48000;
  const auto bytes = scene_bytes(cfg, 1.0, 48000);
  MemorySource input(bytes);
  const RunReport r = run_pipeline(cfg, input, PipelineSinks{});
  // 187 whole input hops give 47872 / 3 = 15957.3 samples at 16 kHz; the
  // resampler flushes its tail and zero-pads to a whole hop of 256.
  const std::size_t resampled = (47872 / 3 + 255) / 256 * 256;
  CHECK(r.input_samples == resampled);
  CHECK(r.frames == (resampled - 512) / 256 + 1);
}

TEST_CASE("a raised stop flag ends the run early and cleanly") {
  const PipelineConfig cfg = config_for(circular_array(4, 0.05));
  const auto bytes = scene_bytes(cfg, 2.0);
  std::atomic<bool> stop{true};
  RunOptions opts;
  opts.stop = &stop;
  MemorySource input(bytes);
  const RunReport r = run_pipeline(cfg, input, PipelineSinks{}, opts);
  CHECK(r.frames < (32000 - 512) / 256 + 1);
}

TEST_CASE("threaded and single-thread runs give identical lines") {
  PipelineConfig cfg = config_for(open_array_8());
  cfg.sss.method = SeparationMethod::kGss;
  const auto bytes = scene_bytes(cfg, 1.5);
  auto run = [&](bool threaded) {
    MemorySink pot, src;
    PipelineSinks sinks;
    sinks.potential = &pot;
    sinks.tracks = &src;
    sinks.separate = true;
    RunOptions o;
    o.threaded = threaded;
    MemorySource in(bytes);
    run_pipeline(cfg, in, sinks, o);
    return std::pair{pot.lines, src.lines};
  };
  CHECK(run(true) == run(false));
}

TEST_CASE("report serializes to JSON with every counter") {
  RunReport r;
  r.frames = 3;
  r.queue_max_depth = {1, 2};
  const std::string j = r.to_json();
  for (const char* key : {"\"frames\"", "\"pairs_computed\"", "\"coarse_points\"", "\"fine_points\"",
                          "\"realtime_factor\"", "\"queue_max_depth\"", "\"sink_drops\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
}
