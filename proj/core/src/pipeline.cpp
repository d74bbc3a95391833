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

#include "odas/pipeline.hpp"

#include <cstring>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"
#include "odas/audio_io.hpp"
#include "odas/sss.hpp"
#include "odas/sst.hpp"

namespace odas {

FileSource::FileSource(const std::string& path) {
  if (path == "-") {
    file_ = stdin;
    return;
  }
  file_ = std::fopen(path.c_str(), "rb");
  if (file_ == nullptr) {
    throw Error("cannot open input " + path + ": " + std::strerror(errno));
  }
  owned_ = true;
}

FileSource::~FileSource() {
  if (owned_) std::fclose(file_);
}

std::size_t FileSource::read(std::span<std::byte> buf) {
  const std::size_t n = std::fread(buf.data(), 1, buf.size(), file_);
  if (n == 0 && std::ferror(file_)) throw Error("read error on input");
  return n;
}

std::size_t MemorySource::read(std::span<std::byte> buf) {
  const std::size_t n = std::min(buf.size(), bytes_.size() - offset_);
  std::memcpy(buf.data(), bytes_.data() + offset_, n);
  offset_ += n;
  return n;
}

std::string RunReport::to_json() const {
  const nlohmann::ordered_json j{
      {"frames", frames},
      {"input_samples", input_samples},
      {"pairs_per_frame", pairs_per_frame},
      {"pairs_computed", scan.pairs_computed},
      {"coarse_points", scan.coarse_points},
      {"fine_points", scan.fine_points},
      {"tracks_confirmed", tracks_confirmed},
      {"separated_outputs", separated_outputs},
      {"mic_channels_beamformed", mic_channels_beamformed},
      {"subarray_fallbacks", subarray_fallbacks},
      {"gss_resets", gss_resets},
      {"sink_drops", sink_drops},
      {"queue_capacity", queue_capacity},
      {"queue_max_depth", queue_max_depth},
      {"wall_seconds", wall_seconds},
      {"audio_seconds", audio_seconds},
      {"realtime_factor", realtime_factor}};
  return j.dump(2);
}

namespace {

// Everything known about one frame as it moves down the stages.
struct Bundle {
  SpectralFrame frame;
  std::vector<PotentialDoa> doas;
  std::vector<SourceReport> sources;
  std::vector<SeparatedChannel> separated;
  std::vector<std::string> diagnostics;
  bool final = false;  // end of stream: carries only flushed tails
};

// Raw bytes to spectral frames.
class FrontEnd {
 public:
  FrontEnd(const PipelineConfig& cfg, ByteSource& source, const std::atomic<bool>* stop)
      : cfg_(cfg),
        source_(source),
        stop_(stop),
        decoder_(cfg.raw, cfg.mapping),
        stft_(static_cast<std::size_t>(cfg.general.frame_size_samples),
              static_cast<std::size_t>(cfg.general.hop_size_samples), cfg.mapping.size(),
              cfg.general.fs_processing_hz) {
    if (cfg.raw.sample_rate_hz != cfg.general.fs_processing_hz) {
      resampler_.emplace(cfg.raw.sample_rate_hz, cfg.general.fs_processing_hz,
                         cfg.mapping.size(),
                         static_cast<std::size_t>(cfg.general.hop_size_samples));
    }
    const auto bytes = static_cast<std::size_t>(cfg.raw.bits_per_sample / 8);
    buffer_.resize(bytes * static_cast<std::size_t>(cfg.raw.n_channels) *
                   static_cast<std::size_t>(cfg.raw.hop_size_samples));
  }

  // Calls emit(SpectralFrame) for every frame; returns at end of input.
  template <typename Emit>
  void run(Emit&& emit) {
    std::size_t total = 0;
    for (;;) {
      if (stop_ != nullptr && stop_->load()) break;
      const std::size_t n = source_.read(buffer_);
      if (n == 0) break;
      total += n;
      for (auto& af : decoder_.push(std::span(buffer_.data(), n))) feed(af, emit);
    }
    if (decoder_.bytes_consumed() != total) {
      throw Error("decode: input ends inside a sample frame at byte " +
                  std::to_string(decoder_.bytes_consumed()));
    }
    if (resampler_) {
      for (auto& af : resampler_->flush()) to_stft(af, emit);
    }
  }

  std::uint64_t samples() const { return samples_; }

 private:
  template <typename Emit>
  void feed(const AudioFrame& af, Emit& emit) {
    if (resampler_) {
      for (auto& r : resampler_->push(af)) to_stft(r, emit);
    } else {
      to_stft(af, emit);
    }
  }

  template <typename Emit>
  void to_stft(const AudioFrame& af, Emit& emit) {
    samples_ += af.length();
    for (auto& sf : stft_.push(af)) emit(std::move(sf));
  }

  const PipelineConfig& cfg_;
  ByteSource& source_;
  const std::atomic<bool>* stop_;
  RawDecoder decoder_;
  std::optional<FrameResampler> resampler_;
  Stft stft_;
  std::vector<std::byte> buffer_;
  std::uint64_t samples_ = 0;
};

class TrackingStage {
 public:
  explicit TrackingStage(const PipelineConfig& cfg)
      : cfg_(cfg),
        tracker_(cfg.sst, static_cast<double>(cfg.general.hop_size_samples) /
                              cfg.general.fs_processing_hz) {}

  void process(Bundle& b) {
    if (!cfg_.sss.fixed_targets.empty()) {
      int id = 1;
      for (const Vec3& d : cfg_.sss.fixed_targets) {
        b.sources.push_back(SourceReport{id++, "static", d.normalized(), 1.0});
      }
      return;
    }
    tracker_.step(b.doas);
    for (const auto& t : tracker_.tracks()) {
      if (!t.confirmed()) continue;
      if (seen_.insert(t.id).second) ++confirmed_;
      b.sources.push_back(SourceReport{t.id, "dynamic", t.direction(),
                                       std::clamp(t.activity, 0.0, 1.0)});
    }
  }

  std::uint64_t confirmed() const { return confirmed_; }

 private:
  const PipelineConfig& cfg_;
  Tracker tracker_;
  std::set<int> seen_;
  std::uint64_t confirmed_ = 0;
};

class SeparationStage {
 public:
  explicit SeparationStage(const PipelineConfig& cfg) : cfg_(cfg), separator_(cfg) {}

  void process(Bundle& b) {
    std::vector<Separator::Target> targets;
    for (const auto& s : b.sources) targets.push_back({s.id, s.direction});
    const std::uint64_t fallbacks = separator_.subarray_fallbacks();
    const auto outputs = separator_.process(b.frame, targets);
    if (separator_.subarray_fallbacks() != fallbacks) {
      b.diagnostics.push_back("subarray empty for a target; using the full array");
    }

    // Tracks that disappeared: flush their synthesis tails.
    for (auto it = istft_.begin(); it != istft_.end();) {
      const bool alive = std::any_of(targets.begin(), targets.end(),
                                     [&](const auto& t) { return t.track_id == it->first; });
      if (alive) {
        ++it;
        continue;
      }
      b.separated.push_back({it->first, it->second.flush().channels[0]});
      it = istft_.erase(it);
    }

    const auto N = static_cast<std::size_t>(cfg_.general.frame_size_samples);
    const auto hop = static_cast<std::size_t>(cfg_.general.hop_size_samples);
    for (const auto& o : outputs) {
      auto it = istft_.find(o.track_id);
      if (it == istft_.end()) {
        it = istft_.emplace(o.track_id, Istft(N, hop, 1)).first;
        ++outputs_;
      }
      SpectralFrame mono;
      mono.frame_index = b.frame.frame_index;
      mono.fs_hz = b.frame.fs_hz;
      mono.frame_size = b.frame.frame_size;
      mono.bins.push_back(o.postfiltered);
      b.separated.push_back({o.track_id, it->second.push(mono).channels[0]});
    }
  }

  void finish(Bundle& b) {
    for (auto& [id, istft] : istft_) b.separated.push_back({id, istft.flush().channels[0]});
    istft_.clear();
  }

  const Separator& separator() const { return separator_; }
  std::uint64_t outputs() const { return outputs_; }

 private:
  const PipelineConfig& cfg_;
  Separator separator_;
  std::map<int, Istft> istft_;
  std::uint64_t outputs_ = 0;
};

class Emitter {
 public:
  Emitter(const PipelineConfig& cfg, const PipelineSinks& sinks)
      : cfg_(cfg), sinks_(sinks) {
    if (!sinks.separated_dir.empty()) {
      std::filesystem::create_directories(sinks.separated_dir);
    }
  }

  ~Emitter() {
    for (auto& [id, f] : files_) std::fclose(f);
  }

  void emit(const Bundle& b) {
    const auto now = Clock::now();
    if (!b.final) {
      if (sinks_.potential != nullptr) sinks_.potential->write(potential_line(b.frame.frame_index, b.doas));
      if (sinks_.tracks != nullptr) sinks_.tracks->write(tracks_line(b.frame.frame_index, b.sources));
      if (sinks_.on_event) {
        sinks_.on_event(PotentialDoaSet{b.frame.frame_index, now, b.doas});
        sinks_.on_event(TrackedSourceSet{b.frame.frame_index, now, b.sources});
      }
      last_index_ = b.frame.frame_index;
    }
    const std::size_t index = b.final ? last_index_ + 1 : b.frame.frame_index;
    if (!b.separated.empty()) {
      write_separated(b, index);
      if (sinks_.on_event) sinks_.on_event(SeparatedFrameSet{index, now, b.separated});
    }
    if (sinks_.on_event) {
      for (const auto& d : b.diagnostics) sinks_.on_event(Diagnostics{index, now, d});
    }
  }

  void flush() {
    if (sinks_.potential != nullptr) sinks_.potential->flush();
    if (sinks_.tracks != nullptr) sinks_.tracks->flush();
  }

 private:
  void write_separated(const Bundle& b, std::size_t index) {
    if (sinks_.separated_dir.empty()) return;
    const int bits = cfg_.sss.output_bits_per_sample;
    for (const auto& ch : b.separated) {
      auto it = files_.find(ch.track_id);
      if (it == files_.end()) {
        const auto path = std::filesystem::path(sinks_.separated_dir) /
                          ("separated_" + std::to_string(ch.track_id) + ".raw");
        std::FILE* f = std::fopen(path.c_str(), "wb");
        if (f == nullptr) throw Error("cannot open " + path.string());
        it = files_.emplace(ch.track_id, f).first;
        // Align every file with the input timeline.
        const std::size_t lead = index * static_cast<std::size_t>(cfg_.general.hop_size_samples);
        write_samples(it->second, std::vector<Signal>{Signal(lead, 0.0)}, bits);
      }
      write_samples(it->second, std::vector<Signal>{ch.samples}, bits);
    }
  }

  static void write_samples(std::FILE* f, const std::vector<Signal>& ch, int bits) {
    const auto bytes = encode_raw(ch, bits);
    if (std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size()) {
      throw Error("write failed on separated output");
    }
  }

  const PipelineConfig& cfg_;
  const PipelineSinks& sinks_;
  std::map<int, std::FILE*> files_;
  std::size_t last_index_ = 0;
};

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg, ByteSource& source,
                       const PipelineSinks& sinks, const RunOptions& options) {
  validate_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const bool separate = sinks.separate || !sinks.separated_dir.empty();

  FrontEnd front(cfg, source, options.stop);
  Localizer localizer(cfg, options.cache_dir);
  TrackingStage tracking(cfg);
  std::optional<SeparationStage> separation;
  if (separate) separation.emplace(cfg);
  Emitter emitter(cfg, sinks);
  RunReport report;
  report.queue_capacity = options.queue_capacity;

  auto ssl_step = [&](SpectralFrame&& sf) {
    Bundle b;
    b.doas = localizer.process(sf);
    b.frame = std::move(sf);
    return b;
  };

  if (!options.threaded) {
    front.run([&](SpectralFrame&& sf) {
      Bundle b = ssl_step(std::move(sf));
      tracking.process(b);
      if (separation) separation->process(b);
      emitter.emit(b);
      ++report.frames;
    });
    if (separation) {
      Bundle tail;
      tail.final = true;
      separation->finish(tail);
      emitter.emit(tail);
    }
  } else {
    BoundedQueue<SpectralFrame> q_spec(options.queue_capacity);
    BoundedQueue<Bundle> q_ssl(options.queue_capacity);
    BoundedQueue<Bundle> q_sst(options.queue_capacity);
    BoundedQueue<Bundle> q_out(options.queue_capacity);

    std::mutex err_mu;
    std::exception_ptr error;
    auto abort_all = [&](std::exception_ptr e) {
      {
        std::lock_guard lock(err_mu);
        if (!error) error = e;
      }
      q_spec.close();
      q_ssl.close();
      q_sst.close();
      q_out.close();
    };
    auto guarded = [&](auto&& body) {
      return [&, body]() mutable {
        try {
          body();
        } catch (...) {
          abort_all(std::current_exception());
        }
      };
    };

    std::vector<std::thread> threads;
    threads.emplace_back(guarded([&] {
      front.run([&](SpectralFrame&& sf) {
        if (!q_spec.push(std::move(sf))) throw Error("pipeline aborted");
      });
      q_spec.close();
    }));
    threads.emplace_back(guarded([&] {
      while (auto sf = q_spec.pop()) {
        if (!q_ssl.push(ssl_step(std::move(*sf)))) return;
      }
      q_ssl.close();
    }));
    threads.emplace_back(guarded([&] {
      while (auto b = q_ssl.pop()) {
        tracking.process(*b);
        if (!q_sst.push(std::move(*b))) return;
      }
      q_sst.close();
    }));
    threads.emplace_back(guarded([&] {
      while (auto b = q_sst.pop()) {
        if (separation) separation->process(*b);
        if (!q_out.push(std::move(*b))) return;
      }
      if (separation) {
        Bundle tail;
        tail.final = true;
        separation->finish(tail);
        q_out.push(std::move(tail));
      }
      q_out.close();
    }));

    try {
      while (auto b = q_out.pop()) {
        emitter.emit(*b);
        if (!b->final) ++report.frames;
      }
    } catch (...) {
      abort_all(std::current_exception());
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    report.queue_max_depth = {q_spec.max_depth(), q_ssl.max_depth(), q_sst.max_depth(),
                              q_out.max_depth()};
  }
  emitter.flush();

  const auto t1 = std::chrono::steady_clock::now();
  report.input_samples = front.samples();
  report.scan = localizer.counters();
  report.pairs_per_frame = localizer.pairs().size();
  report.tracks_confirmed = tracking.confirmed();
  if (separation) {
    report.separated_outputs = separation->outputs();
    report.mic_channels_beamformed = separation->separator().mic_channels_used();
    report.subarray_fallbacks = separation->separator().subarray_fallbacks();
    report.gss_resets = separation->separator().gss_resets();
  }
  if (sinks.potential != nullptr) report.sink_drops += sinks.potential->dropped();
  if (sinks.tracks != nullptr) report.sink_drops += sinks.tracks->dropped();
  report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.audio_seconds =
      static_cast<double>(report.input_samples) / cfg.general.fs_processing_hz;
  report.realtime_factor =
      report.audio_seconds > 0.0 ? report.wall_seconds / report.audio_seconds : 0.0;
  return report;
}

}  // namespace odas
