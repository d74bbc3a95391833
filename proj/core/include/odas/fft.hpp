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
#include <memory>
#include <span>

#include "odas/types.hpp"

namespace odas {

// Real-to-complex FFT of a fixed size backed by FFTW. Each instance owns its
// plans and scratch buffers, so one instance must not be shared between
// threads; separate instances may run concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // out.size() == bins(). Unnormalized: X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
  void forward(std::span<const double> in, std::span<Complex> out);

  // in.size() == bins(). Normalized by 1/N so inverse(forward(x)) == x.
  void inverse(std::span<const Complex> in, std::span<double> out);

 private:
  struct Plans;
  std::size_t size_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace odas
