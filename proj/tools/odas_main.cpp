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

// Command line front end: run, simulate, bench, calibrate.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "odas/audio_io.hpp"
#include "odas/config.hpp"
#include "odas/harness.hpp"
#include "odas/pipeline.hpp"
#include "odas/sinks.hpp"

namespace {

using namespace odas;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void write_file(const std::string& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw Error("write failed: " + path);
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string input = "-";
  std::string doa_out;
  std::string tracks_out;
  std::string sep_out_dir;
  std::string cache_dir;
  bool counters = false;
  bool single_thread = false;
  std::size_t queue_capacity = 8;
};

int cmd_run(const RunArgs& a) {
  const PipelineConfig cfg = load_config(a.config);
  std::unique_ptr<LineSink> pot, src;
  if (!a.doa_out.empty()) pot = open_sink(a.doa_out);
  if (!a.tracks_out.empty()) src = open_sink(a.tracks_out);

  PipelineSinks sinks;
  sinks.potential = pot.get();
  sinks.tracks = src.get();
  sinks.separated_dir = a.sep_out_dir;

  RunOptions opts;
  opts.threaded = !a.single_thread;
  opts.queue_capacity = a.queue_capacity;
  opts.cache_dir = a.cache_dir;
  opts.stop = &g_stop;

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  FileSource input(a.input);
  const RunReport report = run_pipeline(cfg, input, sinks, opts);
  if (a.counters) std::cerr << report.to_json() << '\n';
  return 0;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::string out;
  std::string truth;
  int bits = 16;
};

int cmd_simulate(const SimulateArgs& a) {
  const Scene scene = load_scene(a.scene);
  const Rendering r = render(scene);
  const auto bytes = encode_raw(r.mix, a.bits);
  write_file(a.out, bytes.data(), bytes.size());
  const std::string truth = serialize_truth(r.truth);
  write_file(a.truth.empty() ? a.out + ".truth.jsonl" : a.truth, truth.data(), truth.size());
  std::fprintf(stderr, "wrote %zu channels x %zu samples (%d-bit) and %zu truth frames\n",
               r.mix.size(), r.mix.empty() ? std::size_t{0} : r.mix[0].size(), a.bits,
               r.truth.size());
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config;
  std::string input;
  std::string scene;
};

std::vector<std::byte> bench_input(const BenchArgs& a, const PipelineConfig& cfg) {
  if (!a.input.empty()) {
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw Error("cannot open " + a.input);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(buf.size());
    std::memcpy(out.data(), buf.data(), buf.size());
    return out;
  }
  Scene scene;
  if (!a.scene.empty()) {
    scene = load_scene(a.scene);
  } else {
    scene.mics = cfg.general.mics;
    scene.duration_s = 5.0;
    SceneSource s;
    s.kind = SignalKind::kSpeechShaped;
    s.trajectory.keyframes = {Keyframe{0.0, 30.0, 20.0}};
    scene.sources.push_back(s);
  }
  if (scene.mics.size() != static_cast<std::size_t>(cfg.raw.n_channels)) {
    throw Error("bench: scene has " + std::to_string(scene.mics.size()) +
                " microphones but the config expects " + std::to_string(cfg.raw.n_channels));
  }
  return encode_raw(render(scene).mix, cfg.raw.bits_per_sample);
}

int cmd_bench(const BenchArgs& a) {
  const PipelineConfig base = load_config(a.config);
  const auto bytes = bench_input(a, base);

  std::printf("%-9s %-12s %10s %12s %12s %12s %9s %8s\n", "pairs", "scan", "frames",
              "pairs/frame", "coarse/scan", "fine/scan", "wall s", "RTF");
  double pairs[2] = {0, 0};
  double points[2] = {0, 0};
  for (int prune = 1; prune >= 0; --prune) {
    for (int hier = 1; hier >= 0; --hier) {
      PipelineConfig cfg = base;
      cfg.ssl.prune_pairs = prune;
      cfg.ssl.hierarchical = hier;
      MemorySource src(bytes);
      const RunReport r = run_pipeline(cfg, src, PipelineSinks{}, RunOptions{});
      const double frames = static_cast<double>(std::max<std::uint64_t>(r.scan.frames, 1));
      const double scans = frames * cfg.ssl.n_potential_doas;
      const double pairs_pf = static_cast<double>(r.scan.pairs_computed) / frames;
      const double coarse = static_cast<double>(r.scan.coarse_points) / scans;
      const double fine = static_cast<double>(r.scan.fine_points) / scans;
      if (hier == 1) pairs[prune] = pairs_pf;
      if (prune == 1) points[hier] = coarse + fine;
      std::printf("%-9s %-12s %10llu %12.1f %12.1f %12.1f %9.3f %8.3f\n",
                  prune ? "pruned" : "all", hier ? "hierarchical" : "exhaustive",
                  static_cast<unsigned long long>(r.scan.frames), pairs_pf, coarse, fine,
                  r.wall_seconds, r.realtime_factor);
    }
  }
  std::printf("pair ratio (pruned / all): %.3f\n", pairs[0] > 0 ? pairs[1] / pairs[0] : 0.0);
  std::printf("points per scan ratio (hierarchical / exhaustive): %.3f\n",
              points[0] > 0 ? points[1] / points[0] : 0.0);
  return 0;
}

// ---- calibrate ---------------------------------------------------------------

int cmd_calibrate(int scenes, std::uint64_t seed) {
  const PowerSamples s = collect_power_samples(scenes, seed);
  const GaussianMixture active = fit_gmm(s.active, 2);
  const GaussianMixture diffuse = fit_gmm(s.diffuse, 2);
  auto print = [](const char* name, const GaussianMixture& g, std::size_t n) {
    std::printf("%s (%zu samples):\n", name, n);
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
      std::printf("  weight %.6g mean %.6g variance %.6g\n", g.weights[k], g.means[k],
                  g.variances[k]);
    }
  };
  print("active", active, s.active.size());
  print("diffuse", diffuse, s.diffuse.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"odas: sound source localization, tracking and separation"};
  app.require_subcommand(1);

  RunArgs run;
  auto* r = app.add_subcommand("run", "process a multichannel RAW stream");
  r->add_option("--config", run.config, "JSON configuration")->required();
  r->add_option("--input", run.input, "RAW PCM file, or - for stdin");
  r->add_option("--doa-out", run.doa_out, "potential DOA lines: file, tcp://host:port or -");
  r->add_option("--tracks-out", run.tracks_out, "tracked source lines: file, tcp://host:port or -");
  r->add_option("--sep-out-dir", run.sep_out_dir, "directory for separated_<id>.raw");
  r->add_flag("--counters", run.counters, "print run counters as JSON to stderr");
  r->add_flag("--single-thread", run.single_thread, "run all stages on one thread");
  r->add_option("--cache-dir", run.cache_dir, "directory for cached TDOA tables");
  r->add_option("--queue-capacity", run.queue_capacity, "frames buffered between stages")
      ->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "render a scene to RAW plus ground truth");
  s->add_option("--scene", sim.scene, "scene JSON")->required();
  s->add_option("--out", sim.out, "output RAW file")->required();
  s->add_option("--truth", sim.truth, "ground truth JSON lines (default <out>.truth.jsonl)");
  s->add_option("--bits", sim.bits, "sample width")->check(CLI::IsMember({8, 16, 24, 32}));

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "compare pair pruning and hierarchical scanning");
  b->add_option("--config", bench.config, "JSON configuration")->required();
  auto* bi = b->add_option("--input", bench.input, "RAW input (default: rendered scene)");
  b->add_option("--scene", bench.scene, "scene JSON to render as input")->excludes(bi);

  int scenes = 60;
  std::uint64_t seed = 7;
  auto* c = app.add_subcommand("calibrate", "fit the active and diffuse power mixtures");
  c->add_option("--scenes", scenes, "number of simulated scenes")->check(CLI::PositiveNumber);
  c->add_option("--seed", seed, "random seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*r) return cmd_run(run);
    if (*s) return cmd_simulate(sim);
    if (*b) return cmd_bench(bench);
    if (*c) return cmd_calibrate(scenes, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "odas: %s\n", e.what());
    return 1;
  }
  return 0;
}
