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

// Independent reference implementations used as test oracles. They share no
// code with the library beyond plain data types.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "odas/config.hpp"
#include "odas/geometry.hpp"
#include "odas/ssl.hpp"

namespace oracle {

constexpr double kPi = 3.14159265358979323846;

// Lag l maximizing sum_n x[n] y[n + l] / sqrt(sum x^2 sum y^2), |l| <= max_lag.
inline int xcorr_argmax(const std::vector<double>& x, const std::vector<double>& y,
                        int max_lag) {
  double ex = 0.0, ey = 0.0;
  for (double v : x) ex += v * v;
  for (double v : y) ey += v * v;
  const double norm = std::sqrt(ex * ey);
  int best = 0;
  double best_v = -1e300;
  const auto n = static_cast<int>(x.size());
  for (int l = -max_lag; l <= max_lag; ++l) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const int j = i + l;
      if (j < 0 || j >= static_cast<int>(y.size())) continue;
      acc += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
    }
    acc /= norm;
    if (acc > best_v) {
      best_v = acc;
      best = l;
    }
  }
  return best;
}

// Band-limited periodic upsampling by zero-padding a naive DFT.
inline std::vector<double> upsample(const std::vector<double>& x, int rate) {
  const std::size_t n = x.size();
  const std::size_t m = n * static_cast<std::size_t>(rate);
  std::vector<std::complex<double>> X(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(n));
    }
    X[k] = acc;
  }
  std::vector<double> y(m, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      // Signed frequency index; the Nyquist bin is split evenly.
      const long kk = k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
      double w = 1.0;
      if (n % 2 == 0 && k == n / 2) w = 0.5;
      acc += w * X[k] * std::polar(1.0, 2.0 * kPi * static_cast<double>(kk) * static_cast<double>(t) / static_cast<double>(m));
      if (n % 2 == 0 && k == n / 2) {
        acc += w * X[k] * std::polar(1.0, -2.0 * kPi * static_cast<double>(kk) * static_cast<double>(t) / static_cast<double>(m));
      }
    }
    y[t] = acc.real() * static_cast<double>(rate) / static_cast<double>(m);
  }
  return y;
}

// Textbook constant-velocity Kalman filter on plain arrays.
struct TextbookKalman {
  std::array<double, 6> x{};
  std::array<std::array<double, 6>, 6> P{};

  void predict(double dt, double sp, double sv) {
    std::array<std::array<double, 6>, 6> F{};
    for (int i = 0; i < 6; ++i) F[i][i] = 1.0;
    for (int i = 0; i < 3; ++i) F[i][i + 3] = dt;
    std::array<double, 6> nx{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) nx[i] += F[i][j] * x[j];
    x = nx;
    auto FP = mul(F, P);
    auto Ft = transpose(F);
    P = mul(FP, Ft);
    for (int i = 0; i < 3; ++i) {
      P[i][i] += sp * sp * dt;
      P[i + 3][i + 3] += sv * sv * dt;
    }
  }

  void update(const std::array<double, 3>& z, const std::array<std::array<double, 3>, 3>& R) {
    std::array<std::array<double, 3>, 3> S{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) S[i][j] = P[i][j] + R[i][j];
    const auto Si = inverse3(S);
    // K = P H^T S^-1 (6x3)
    std::array<std::array<double, 3>, 6> K{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) K[i][j] += P[i][k] * Si[k][j];
    std::array<double, 3> y{};
    for (int i = 0; i < 3; ++i) y[i] = z[i] - x[i];
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) x[i] += K[i][j] * y[j];
    // Joseph form: (I - K H) P (I - K H)^T + K R K^T
    std::array<std::array<double, 6>, 6> A{};
    for (int i = 0; i < 6; ++i) A[i][i] = 1.0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) A[i][j] -= K[i][j];
    auto AP = mul(A, P);
    P = mul(AP, transpose(A));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) P[i][j] += K[i][a] * R[a][b] * K[j][b];
  }

  using M6 = std::array<std::array<double, 6>, 6>;
  static M6 mul(const M6& a, const M6& b) {
    M6 r{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 6; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
  }
  static M6 transpose(const M6& a) {
    M6 r{};
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) r[i][j] = a[j][i];
    return r;
  }
  static std::array<std::array<double, 3>, 3> inverse3(const std::array<std::array<double, 3>, 3>& m) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    std::array<std::array<double, 3>, 3> r{};
    r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
    return r;
  }
};

// Steered response power at every grid point from first principles: TDOA
// from geometry, lag window from c +- dc and position slack, visibility from
// an arccos field-of-view test, then a max over the window per pair.
inline std::vector<double> naive_srp(const odas::CrossCorrelations& cc,
                                     const std::vector<odas::Vec3>& points,
                                     const std::vector<odas::MicSpec>& mics,
                                     const std::vector<odas::MicPair>& pairs, double fs,
                                     double c, double dc, int rate) {
  auto sees = [](const odas::MicSpec& m, const odas::Vec3& d) {
    if (m.fov_deg >= 360.0) return true;
    const double cosang = std::clamp(m.orientation.normalized().dot(d.normalized()), -1.0, 1.0);
    return std::acos(cosang) <= m.fov_deg / 2.0 * kPi / 180.0 + 1e-9;
  };
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t q = 0; q < points.size(); ++q) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& mi = mics[static_cast<std::size_t>(pairs[p].i)];
      const auto& mj = mics[static_cast<std::size_t>(pairs[p].j)];
      if (!sees(mi, points[q]) || !sees(mj, points[q])) continue;
      double path = 0.0;
      for (int a = 0; a < 3; ++a) path += (mi.position_m[a] - mj.position_m[a]) * points[q][a];
      path *= fs * rate;
      const double slack = (mi.sigma_pos_m + mj.sigma_pos_m) * fs * rate / (c - dc);
      const double t1 = path / (c + dc);
      const double t2 = path / (c - dc);
      const long lo = std::lround(std::min(t1, t2) - slack);
      const long hi = std::lround(std::max(t1, t2) + slack);
      double best = -1e300;
      const auto n = static_cast<long>(cc.length);
      for (long l = lo; l <= hi; ++l) {
        const long w = ((l % n) + n) % n;
        best = std::max(best, cc.values[p][static_cast<std::size_t>(w)]);
      }
      out[q] += best;
    }
  }
  return out;
}

}  // namespace oracle
