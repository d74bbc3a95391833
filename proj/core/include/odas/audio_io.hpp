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
#include <optional>
#include <span>
#include <vector>

#include "odas/config.hpp"
#include "odas/fft.hpp"
#include "odas/types.hpp"

namespace odas {

// channels x hop samples, each in [-1, 1].
struct AudioFrame {
  std::size_t frame_index = 0;
  int fs_hz = 0;
  std::vector<Signal> channels;

  std::size_t n_channels() const { return channels.size(); }
  std::size_t length() const {
    return channels.empty() ? 0 : channels.front().size();
  }
};

// channels x (frame_size / 2 + 1) complex bins.
struct SpectralFrame {
  std::size_t frame_index = 0;
  int fs_hz = 0;
  int frame_size = 0;
  std::vector<Spectrum> bins;

  std::size_t n_channels() const { return bins.size(); }
  std::size_t n_bins() const { return static_cast<std::size_t>(frame_size) / 2 + 1; }
};

// ---------------------------------------------------------------------------
// RAW PCM: headerless, interleaved, little-endian, signed integers.

// Incremental decoder. Bytes may arrive in arbitrary chunks; a frame is
// emitted each time raw.hop_size_samples complete sample frames are buffered.
class RawDecoder {
 public:
  RawDecoder(const RawInputConfig& raw, std::vector<int> mapping);

  std::vector<AudioFrame> push(std::span<const std::byte> bytes);

  std::size_t bytes_consumed() const { return bytes_consumed_; }

 private:
  RawInputConfig raw_;
  std::vector<int> mapping_;
  std::size_t bytes_per_sample_;
  std::vector<std::byte> pending_;
  std::vector<Signal> current_;
  std::size_t next_index_ = 0;
  std::size_t bytes_consumed_ = 0;
};

// Decodes a whole buffer; a trailing incomplete hop is discarded.
std::vector<AudioFrame> decode_raw(std::span<const std::byte> bytes,
                                   const RawInputConfig& raw,
                                   std::span<const int> mapping);

// Single-sample codecs, exposed for tests and the simulator.
double decode_sample(std::span<const std::byte> le_bytes, int bits);
void encode_sample(double value, int bits, std::span<std::byte> le_bytes);

// Interleaves frames and quantizes; values outside [-1, 1] saturate.
std::vector<std::byte> encode_raw(std::span<const AudioFrame> frames, int bits);
std::vector<std::byte> encode_raw(const std::vector<Signal>& channels, int bits);

// ---------------------------------------------------------------------------
// Resampling: windowed-sinc polyphase filter, 64 taps per phase, Kaiser
// window (beta = 8), for any rational ratio fs_out / fs_in.

class Resampler {
 public:
  static constexpr int kTapsPerPhase = 64;
  static constexpr double kKaiserBeta = 8.0;

  Resampler(int fs_in, int fs_out);

  // Appends every output sample whose filter support is fully available.
  void push(std::span<const double> in, Signal& out);
  // Feeds zeros past the end of the input so the output length becomes
  // ceil(n_in * fs_out / fs_in).
  void flush(Signal& out);

  bool identity() const { return up_ == down_; }

 private:
  void emit_ready(Signal& out, bool final);

  int up_ = 1;
  int down_ = 1;
  std::vector<double> taps_;  // up_ phases x kTapsPerPhase
  Signal history_;
  std::size_t history_offset_ = 0;  // absolute index of history_[0]
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
};

// Multi-channel resampler that re-chunks its output into frames of `hop`.
class FrameResampler {
 public:
  FrameResampler(int fs_in, int fs_out, std::size_t n_channels, std::size_t hop);

  std::vector<AudioFrame> push(const AudioFrame& frame);
  // Emits the remaining samples, zero-padding the last frame to `hop`.
  std::vector<AudioFrame> flush();

 private:
  std::vector<AudioFrame> drain(bool final);

  int fs_out_;
  std::size_t hop_;
  std::vector<Resampler> resamplers_;
  std::vector<Signal> buffered_;
  std::size_t next_index_ = 0;
};

std::vector<AudioFrame> resample(std::span<const AudioFrame> frames, int fs_in,
                                 int fs_out);

// ---------------------------------------------------------------------------
// STFT with a periodic Hann window. Frame k covers input samples
// [k * hop, k * hop + frame_size).

std::vector<double> periodic_hann(std::size_t n);

class Stft {
 public:
  Stft(std::size_t frame_size, std::size_t hop, std::size_t n_channels,
       int fs_hz);

  // Accepts chunks of any length; returns every frame completed by them.
  std::vector<SpectralFrame> push(const AudioFrame& chunk);

  const std::vector<double>& window() const { return window_; }

 private:
  std::size_t frame_size_;
  std::size_t hop_;
  int fs_hz_;
  std::vector<double> window_;
  std::vector<Signal> buffer_;
  std::size_t next_index_ = 0;
  RealFft fft_;
  Signal scratch_;
};

// Weighted overlap-add inverse. Each frame is inverse transformed, multiplied
// by the synthesis window and accumulated; every output sample is divided by
// the accumulated product of analysis and synthesis windows at that position.
class Istft {
 public:
  Istft(std::size_t frame_size, std::size_t hop, std::size_t n_channels);

  // Returns the hop samples finalized by this frame. Throws on a frame_index
  // gap.
  AudioFrame push(const SpectralFrame& frame);
  // Returns the frame_size - hop samples still pending after the last frame.
  AudioFrame flush();

 private:
  AudioFrame take(std::size_t count);

  std::size_t frame_size_;
  std::size_t hop_;
  std::vector<double> window_;
  std::vector<Signal> acc_;
  Signal norm_;
  std::optional<std::size_t> last_index_;
  std::size_t out_index_ = 0;
  int fs_hz_ = 0;
  RealFft fft_;
  Signal scratch_;
};

std::vector<SpectralFrame> stft(const std::vector<Signal>& channels,
                                std::size_t frame_size, std::size_t hop,
                                int fs_hz);
std::vector<Signal> istft(std::span<const SpectralFrame> frames,
                          std::size_t frame_size, std::size_t hop);

// Splits per-channel signals into consecutive hop-sized frames; the last
// frame is zero-padded.
std::vector<AudioFrame> to_frames(const std::vector<Signal>& channels,
                                  std::size_t hop, int fs_hz);
std::vector<Signal> concat_frames(std::span<const AudioFrame> frames);

}  // namespace odas
