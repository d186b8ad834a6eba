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

// Small signal-processing helpers: zero-phase Butterworth smoothing and
// finite differences over time-major matrices (one row per sample).

#ifndef INERTIA_ID_SIGNAL_H_
#define INERTIA_ID_SIGNAL_H_

#include <Eigen/Core>

namespace inertia_id {

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1
};

// Second-order Butterworth low-pass via the bilinear transform with
// frequency pre-warping. Requires 0 < cutoff_hz < sample_hz / 2.
Biquad ButterworthLowpass(double cutoff_hz, double sample_hz);

// Forward-backward filtering of every column with odd-reflection padding
// long enough for the filter transient to die out (capped at n - 1),
// so the output has no phase lag.
Eigen::MatrixXd FiltFilt(const Biquad& filter, const Eigen::MatrixXd& x);

// Second-order central differences in the interior, second-order one-sided
// stencils at both ends. Needs at least 3 rows.
Eigen::MatrixXd CentralDifference(const Eigen::MatrixXd& x, double dt);

}  // namespace inertia_id

#endif  // INERTIA_ID_SIGNAL_H_
