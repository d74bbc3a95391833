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

#include "odas/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace odas {
namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct RealFft::Plans {
  double* time = nullptr;
  fftw_complex* freq = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  explicit Plans(std::size_t n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    time = fftw_alloc_real(n);
    freq = fftw_alloc_complex(n / 2 + 1);
    const int ni = static_cast<int>(n);
    // FFTW_ESTIMATE keeps plans, and therefore results, reproducible run to run.
    fwd = fftw_plan_dft_r2c_1d(ni, time, freq, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(ni, freq, time, FFTW_ESTIMATE);
  }

  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(time);
    fftw_free(freq);
  }
};

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2) throw Error("RealFft: size must be at least 2");
  plans_ = std::make_unique<Plans>(size);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(std::span<const double> in, std::span<Complex> out) {
  if (in.size() != size_ || out.size() != bins()) {
    throw Error("RealFft::forward: buffer size mismatch");
  }
  std::copy(in.begin(), in.end(), plans_->time);
  fftw_execute(plans_->fwd);
  for (std::size_t k = 0; k < bins(); ++k) {
    out[k] = Complex(plans_->freq[k][0], plans_->freq[k][1]);
  }
}

void RealFft::inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() != bins() || out.size() != size_) {
    throw Error("RealFft::inverse: buffer size mismatch");
  }
  for (std::size_t k = 0; k < bins(); ++k) {
    plans_->freq[k][0] = in[k].real();
    plans_->freq[k][1] = in[k].imag();
  }
  // c2r destroys its input; the copy above makes that harmless.
  fftw_execute(plans_->inv);
  const double scale = 1.0 / static_cast<double>(size_);
  for (std::size_t n = 0; n < size_; ++n) out[n] = plans_->time[n] * scale;
}

}  // namespace odas
