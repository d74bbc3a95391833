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

#include "odas/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace odas {
namespace {

void check_bits(int bits) {
  if (bits != 8 && bits != 16 && bits != 24 && bits != 32) {
    throw Error("unsupported bit depth " + std::to_string(bits) +
                " (expected 8, 16, 24 or 32)");
  }
}

}  // namespace

double decode_sample(std::span<const std::byte> le_bytes, int bits) {
  check_bits(bits);
  const std::size_t nb = static_cast<std::size_t>(bits / 8);
  std::uint32_t u = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    u |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(le_bytes[b]))
         << (8 * b);
  }
  // Sign-extend from the top bit of the sample width.
  const int shift = 32 - bits;
  const auto s = static_cast<std::int32_t>(u << shift) >> shift;
  return static_cast<double>(s) / std::ldexp(1.0, bits - 1);
}

void encode_sample(double value, int bits, std::span<std::byte> le_bytes) {
  check_bits(bits);
  const double full = std::ldexp(1.0, bits - 1);
  const double lo = -full;
  const double hi = full - 1.0;
  double q = std::nearbyint(std::clamp(value, -1.0, 1.0) * full);
  q = std::clamp(q, lo, hi);
  const auto u = static_cast<std::uint32_t>(static_cast<std::int64_t>(q));
  for (std::size_t b = 0; b < static_cast<std::size_t>(bits / 8); ++b) {
    le_bytes[b] = static_cast<std::byte>((u >> (8 * b)) & 0xFFu);
  }
}

RawDecoder::RawDecoder(const RawInputConfig& raw, std::vector<int> mapping)
    : raw_(raw), mapping_(std::move(mapping)) {
  check_bits(raw_.bits_per_sample);
  bytes_per_sample_ = static_cast<std::size_t>(raw_.bits_per_sample / 8);
  for (int c : mapping_) {
    if (c < 0 || c >= raw_.n_channels) {
      throw Error("RawDecoder: mapped channel " + std::to_string(c) +
                  " out of range");
    }
  }
  current_.assign(mapping_.size(), Signal{});
}

std::vector<AudioFrame> RawDecoder::push(std::span<const std::byte> bytes) {
  std::vector<AudioFrame> out;
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  const std::size_t stride =
      bytes_per_sample_ * static_cast<std::size_t>(raw_.n_channels);
  const std::size_t hop = static_cast<std::size_t>(raw_.hop_size_samples);
  std::size_t pos = 0;
  while (pending_.size() - pos >= stride) {
    const std::span<const std::byte> sample_frame(pending_.data() + pos, stride);
    for (std::size_t m = 0; m < mapping_.size(); ++m) {
      const auto c = static_cast<std::size_t>(mapping_[m]);
      current_[m].push_back(decode_sample(
          sample_frame.subspan(c * bytes_per_sample_, bytes_per_sample_),
          raw_.bits_per_sample));
    }
    pos += stride;
    if (!current_.empty() && current_.front().size() == hop) {
      AudioFrame f;
      f.frame_index = next_index_++;
      f.fs_hz = raw_.sample_rate_hz;
      f.channels = std::move(current_);
      current_.assign(mapping_.size(), Signal{});
      out.push_back(std::move(f));
    }
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
  bytes_consumed_ += pos;
  return out;
}

std::vector<AudioFrame> decode_raw(std::span<const std::byte> bytes,
                                   const RawInputConfig& raw,
                                   std::span<const int> mapping) {
  RawDecoder dec(raw, std::vector<int>(mapping.begin(), mapping.end()));
  return dec.push(bytes);
}

std::vector<std::byte> encode_raw(const std::vector<Signal>& channels,
                                  int bits) {
  check_bits(bits);
  const std::size_t nb = static_cast<std::size_t>(bits / 8);
  const std::size_t n = channels.empty() ? 0 : channels.front().size();
  std::vector<std::byte> out(n * channels.size() * nb);
  std::size_t pos = 0;
  for (std::size_t t = 0; t < n; ++t) {
    for (const auto& ch : channels) {
      encode_sample(ch[t], bits, std::span<std::byte>(out.data() + pos, nb));
      pos += nb;
    }
  }
  return out;
}

std::vector<std::byte> encode_raw(std::span<const AudioFrame> frames,
                                  int bits) {
  return encode_raw(concat_frames(frames), bits);
}

// ---------------------------------------------------------------------------

Resampler::Resampler(int fs_in, int fs_out) {
  if (fs_in <= 0 || fs_out <= 0) {
    throw Error("Resampler: sample rates must be positive");
  }
  const int g = std::gcd(fs_in, fs_out);
  up_ = fs_out / g;
  down_ = fs_in / g;
  if (identity()) return;

  constexpr int half = kTapsPerPhase / 2;
  // Cutoff at 90% of the lower Nyquist frequency, in input-sample units.
  const double ratio = 0.9 * std::min(1.0, static_cast<double>(up_) / down_);
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
  taps_.assign(static_cast<std::size_t>(up_) * kTapsPerPhase, 0.0);
  for (int p = 0; p < up_; ++p) {
    const double frac = static_cast<double>(p) / up_;
    double* row = &taps_[static_cast<std::size_t>(p) * kTapsPerPhase];
    double sum = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const double tau = static_cast<double>(k - (half - 1)) - frac;
      const double x = ratio * tau;
      const double sinc = x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
      const double u = tau / half;
      const double w =
          std::abs(u) >= 1.0
              ? 0.0
              : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) /
                    i0_beta;
      row[k] = ratio * sinc * w;
      sum += row[k];
    }
    for (int k = 0; k < kTapsPerPhase; ++k) row[k] /= sum;
  }
}

void Resampler::emit_ready(Signal& out, bool final) {
  constexpr std::size_t half = kTapsPerPhase / 2;
  const std::size_t total_out =
      (n_in_ * static_cast<std::size_t>(up_) + static_cast<std::size_t>(down_) - 1) /
      static_cast<std::size_t>(down_);
  for (;;) {
    const std::size_t num = n_out_ * static_cast<std::size_t>(down_);
    const std::size_t i = num / static_cast<std::size_t>(up_);
    const std::size_t p = num % static_cast<std::size_t>(up_);
    if (final) {
      if (n_out_ >= total_out) break;
    } else if (i + half >= n_in_) {
      break;
    }
    const double* row = &taps_[p * kTapsPerPhase];
    double acc = 0.0;
    for (std::size_t k = 0; k < kTapsPerPhase; ++k) {
      // Input index i + k - (half - 1); anything outside the stream is zero.
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(i + k) -
                                 static_cast<std::ptrdiff_t>(half - 1);
      if (idx < static_cast<std::ptrdiff_t>(history_offset_)) continue;
      const auto rel = static_cast<std::size_t>(idx) - history_offset_;
      if (rel >= history_.size()) break;
      acc += row[k] * history_[rel];
    }
    out.push_back(acc);
    ++n_out_;
  }
  // Keep only what the next output can still reach.
  const std::size_t next_i =
      n_out_ * static_cast<std::size_t>(down_) / static_cast<std::size_t>(up_);
  const std::size_t keep_from = next_i >= half ? next_i - (half - 1) : 0;
  if (keep_from > history_offset_) {
    const std::size_t drop =
        std::min(keep_from - history_offset_, history_.size());
    history_.erase(history_.begin(), history_.begin() + static_cast<std::ptrdiff_t>(drop));
    history_offset_ += drop;
  }
}

void Resampler::push(std::span<const double> in, Signal& out) {
  if (identity()) {
    out.insert(out.end(), in.begin(), in.end());
    return;
  }
  history_.insert(history_.end(), in.begin(), in.end());
  n_in_ += in.size();
  emit_ready(out, false);
}

void Resampler::flush(Signal& out) {
  if (identity()) return;
  emit_ready(out, true);
}

FrameResampler::FrameResampler(int fs_in, int fs_out, std::size_t n_channels,
                               std::size_t hop)
    : fs_out_(fs_out), hop_(hop), buffered_(n_channels) {
  if (hop == 0) throw Error("FrameResampler: hop must be positive");
  for (std::size_t c = 0; c < n_channels; ++c) {
    resamplers_.emplace_back(fs_in, fs_out);
  }
}

std::vector<AudioFrame> FrameResampler::drain(bool final) {
  std::vector<AudioFrame> out;
  const std::size_t n = buffered_.empty() ? 0 : buffered_.front().size();
  std::size_t pos = 0;
  while (n - pos >= hop_ || (final && pos < n)) {
    AudioFrame f;
    f.frame_index = next_index_++;
    f.fs_hz = fs_out_;
    for (auto& ch : buffered_) {
      const std::size_t take = std::min(hop_, n - pos);
      Signal s(ch.begin() + static_cast<std::ptrdiff_t>(pos),
               ch.begin() + static_cast<std::ptrdiff_t>(pos + take));
      s.resize(hop_, 0.0);
      f.channels.push_back(std::move(s));
    }
    pos += std::min(hop_, n - pos);
    out.push_back(std::move(f));
  }
  for (auto& ch : buffered_) {
    ch.erase(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(pos));
  }
  return out;
}

std::vector<AudioFrame> FrameResampler::push(const AudioFrame& frame) {
  if (frame.n_channels() != buffered_.size()) {
    throw Error("FrameResampler: channel count mismatch");
  }
  for (std::size_t c = 0; c < buffered_.size(); ++c) {
    resamplers_[c].push(frame.channels[c], buffered_[c]);
  }
  return drain(false);
}

std::vector<AudioFrame> FrameResampler::flush() {
  for (std::size_t c = 0; c < buffered_.size(); ++c) {
    resamplers_[c].flush(buffered_[c]);
  }
  return drain(true);
}

std::vector<AudioFrame> resample(std::span<const AudioFrame> frames, int fs_in,
                                 int fs_out) {
  if (fs_in == fs_out) return {frames.begin(), frames.end()};
  if (frames.empty()) return {};
  FrameResampler r(fs_in, fs_out, frames.front().n_channels(),
                   frames.front().length());
  std::vector<AudioFrame> out;
  for (const auto& f : frames) {
    auto part = r.push(f);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  auto tail = r.flush();
  std::move(tail.begin(), tail.end(), std::back_inserter(out));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

Stft::Stft(std::size_t frame_size, std::size_t hop, std::size_t n_channels,
           int fs_hz)
    : frame_size_(frame_size),
      hop_(hop),
      fs_hz_(fs_hz),
      window_(periodic_hann(frame_size)),
      buffer_(n_channels),
      fft_(frame_size),
      scratch_(frame_size) {
  if (hop == 0 || hop > frame_size) {
    throw Error("Stft: hop must lie in (0, frame_size]");
  }
}

std::vector<SpectralFrame> Stft::push(const AudioFrame& chunk) {
  if (chunk.n_channels() != buffer_.size()) {
    throw Error("Stft: channel count mismatch");
  }
  for (std::size_t c = 0; c < buffer_.size(); ++c) {
    buffer_[c].insert(buffer_[c].end(), chunk.channels[c].begin(),
                      chunk.channels[c].end());
  }
  std::vector<SpectralFrame> out;
  while (!buffer_.empty() && buffer_.front().size() >= frame_size_) {
    SpectralFrame f;
    f.frame_index = next_index_++;
    f.fs_hz = fs_hz_;
    f.frame_size = static_cast<int>(frame_size_);
    f.bins.resize(buffer_.size());
    for (std::size_t c = 0; c < buffer_.size(); ++c) {
      for (std::size_t n = 0; n < frame_size_; ++n) {
        scratch_[n] = buffer_[c][n] * window_[n];
      }
      f.bins[c].resize(fft_.bins());
      fft_.forward(scratch_, f.bins[c]);
      buffer_[c].erase(buffer_[c].begin(),
                       buffer_[c].begin() + static_cast<std::ptrdiff_t>(hop_));
    }
    out.push_back(std::move(f));
  }
  return out;
}

Istft::Istft(std::size_t frame_size, std::size_t hop, std::size_t n_channels)
    : frame_size_(frame_size),
      hop_(hop),
      window_(periodic_hann(frame_size)),
      acc_(n_channels, Signal(frame_size, 0.0)),
      norm_(frame_size, 0.0),
      fft_(frame_size),
      scratch_(frame_size) {
  if (hop == 0 || hop > frame_size) {
    throw Error("Istft: hop must lie in (0, frame_size]");
  }
}

AudioFrame Istft::take(std::size_t count) {
  AudioFrame f;
  f.frame_index = out_index_++;
  f.fs_hz = fs_hz_;
  f.channels.resize(acc_.size());
  for (std::size_t c = 0; c < acc_.size(); ++c) {
    Signal& s = f.channels[c];
    s.resize(count);
    for (std::size_t n = 0; n < count; ++n) {
      s[n] = norm_[n] > 1e-10 ? acc_[c][n] / norm_[n] : 0.0;
    }
    std::shift_left(acc_[c].begin(), acc_[c].end(), static_cast<std::ptrdiff_t>(count));
    std::fill(acc_[c].end() - static_cast<std::ptrdiff_t>(count), acc_[c].end(), 0.0);
  }
  std::shift_left(norm_.begin(), norm_.end(), static_cast<std::ptrdiff_t>(count));
  std::fill(norm_.end() - static_cast<std::ptrdiff_t>(count), norm_.end(), 0.0);
  return f;
}

AudioFrame Istft::push(const SpectralFrame& frame) {
  if (frame.n_channels() != acc_.size()) {
    throw Error("Istft: channel count mismatch");
  }
  if (static_cast<std::size_t>(frame.frame_size) != frame_size_) {
    throw Error("Istft: frame size mismatch");
  }
  if (last_index_ && frame.frame_index != *last_index_ + 1) {
    throw Error("Istft: frame_index gap: expected " +
                std::to_string(*last_index_ + 1) + ", got " +
                std::to_string(frame.frame_index));
  }
  last_index_ = frame.frame_index;
  fs_hz_ = frame.fs_hz;
  for (std::size_t c = 0; c < acc_.size(); ++c) {
    fft_.inverse(frame.bins[c], scratch_);
    for (std::size_t n = 0; n < frame_size_; ++n) {
      acc_[c][n] += scratch_[n] * window_[n];
    }
  }
  for (std::size_t n = 0; n < frame_size_; ++n) {
    norm_[n] += window_[n] * window_[n];
  }
  return take(hop_);
}

AudioFrame Istft::flush() { return take(frame_size_ - hop_); }

std::vector<SpectralFrame> stft(const std::vector<Signal>& channels,
                                std::size_t frame_size, std::size_t hop,
                                int fs_hz) {
  Stft s(frame_size, hop, channels.size(), fs_hz);
  AudioFrame all;
  all.fs_hz = fs_hz;
  all.channels = channels;
  return s.push(all);
}

std::vector<Signal> istft(std::span<const SpectralFrame> frames,
                          std::size_t frame_size, std::size_t hop) {
  if (frames.empty()) return {};
  Istft inv(frame_size, hop, frames.front().n_channels());
  std::vector<AudioFrame> parts;
  for (const auto& f : frames) parts.push_back(inv.push(f));
  parts.push_back(inv.flush());
  return concat_frames(parts);
}

std::vector<AudioFrame> to_frames(const std::vector<Signal>& channels,
                                  std::size_t hop, int fs_hz) {
  std::vector<AudioFrame> out;
  const std::size_t n = channels.empty() ? 0 : channels.front().size();
  for (std::size_t pos = 0, k = 0; pos < n; pos += hop, ++k) {
    AudioFrame f;
    f.frame_index = k;
    f.fs_hz = fs_hz;
    for (const auto& ch : channels) {
      const std::size_t end = std::min(n, pos + hop);
      Signal s(ch.begin() + static_cast<std::ptrdiff_t>(pos),
               ch.begin() + static_cast<std::ptrdiff_t>(end));
      s.resize(hop, 0.0);
      f.channels.push_back(std::move(s));
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Signal> concat_frames(std::span<const AudioFrame> frames) {
  if (frames.empty()) return {};
  std::vector<Signal> out(frames.front().n_channels());
  for (const auto& f : frames) {
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c].insert(out[c].end(), f.channels[c].begin(), f.channels[c].end());
    }
  }
  return out;
}

}  // namespace odas
