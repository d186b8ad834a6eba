// Copyright 2026 The inertia_id Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "inertia_id/signal.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "inertia_id/common.h"

namespace inertia_id {

Biquad ButterworthLowpass(double cutoff_hz, double sample_hz) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_hz)) {
    throw Error(ErrorCode::kInvalidArgument, "cutoff must lie in (0, Nyquist)");
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_hz);
  const double q = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + q * k + k * k);
  Biquad f;
  f.b0 = k * k * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k * k - 1.0) * norm;
  f.a2 = (1.0 - q * k + k * k) * norm;
  return f;
}

namespace {

// Direct form II transposed, state initialised to the steady state of x[0].
void FilterInPlace(const Biquad& f, Eigen::VectorXd& x) {
  const double dc_gain = (f.b0 + f.b1 + f.b2) / (1.0 + f.a1 + f.a2);
  const double y0 = dc_gain * x(0);
  double z1 = y0 - f.b0 * x(0);
  double z2 = f.b2 * x(0) - f.a2 * y0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double in = x(i);
    const double out = f.b0 * in + z1;
    z1 = f.b1 * in - f.a1 * out + z2;
    z2 = f.b2 * in - f.a2 * out;
    x(i) = out;
  }
}

// Samples for the slowest pole's transient to decay by 1e-9.
Eigen::Index SettlingSamples(const Biquad& f) {
  const std::complex<double> disc = std::sqrt(std::complex<double>(f.a1 * f.a1 - 4.0 * f.a2));
  const double r = std::max(std::abs(0.5 * (-f.a1 + disc)), std::abs(0.5 * (-f.a1 - disc)));
  if (r <= 0.0) return 1;
  if (r >= 1.0) return std::numeric_limits<Eigen::Index>::max();
  return static_cast<Eigen::Index>(std::ceil(std::log(1e-9) / std::log(r)));
}

}  // namespace

Eigen::MatrixXd FiltFilt(const Biquad& filter, const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) return x;
  const Eigen::Index pad = std::min<Eigen::Index>(n - 1, std::max<Eigen::Index>(6, SettlingSamples(filter)));
  Eigen::MatrixXd out(n, x.cols());
  Eigen::VectorXd ext(n + 2 * pad);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    for (Eigen::Index i = 0; i < pad; ++i) {
      ext(i) = 2.0 * col(0) - col(pad - i);
      ext(n + pad + i) = 2.0 * col(n - 1) - col(n - 2 - i);
    }
    ext.segment(pad, n) = col;
    FilterInPlace(filter, ext);
    ext.reverseInPlace();
    FilterInPlace(filter, ext);
    ext.reverseInPlace();
    out.col(c) = ext.segment(pad, n);
  }
  return out;
}

Eigen::MatrixXd CentralDifference(const Eigen::MatrixXd& x, double dt) {
  const Eigen::Index n = x.rows();
  if (n < 3) throw Error(ErrorCode::kTooShort, "finite differences need >= 3 samples");
  Eigen::MatrixXd d(n, x.cols());
  const double inv = 1.0 / (2.0 * dt);
  d.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) * inv;
  d.row(n - 1) = (3.0 * x.row(n - 1) - 4.0 * x.row(n - 2) + x.row(n - 3)) * inv;
  d.middleRows(1, n - 2) = (x.bottomRows(n - 2) - x.topRows(n - 2)) * inv;
  return d;
}

}  // namespace inertia_id
