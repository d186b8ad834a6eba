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

// Least-squares payload identification from a simulated wrist F/T sensor,
// and the MAE/NMAE metrics shared by every estimator.

#ifndef INERTIA_ID_CLASSICAL_H_
#define INERTIA_ID_CLASSICAL_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "inertia_id/rigidbody.h"
#include "inertia_id/simworld.h"
#include "json.hpp"

namespace inertia_id {

// Rows are grouped per sample: [fx fy fz tx ty tz] for sample 0, then 1, ...
struct StackedRegression {
  Eigen::MatrixXd y;                // 6N x 10
  Eigen::VectorXd w;                // 6N
  Eigen::VectorXd channel_weights;  // 6N; empty selects feasible WLS

  Eigen::Index num_samples() const { return y.rows() / 6; }
};

struct WrenchNoise {
  double force_std = 0.0;   // N
  double torque_std = 0.0;  // N m
  std::uint64_t seed = 0;
};

struct StackOptions {
  double cutoff_hz = 20.0;
  WrenchNoise noise;
};

// End-effector kinematics per sample, in the end-effector frame, from the
// recorded joint positions and velocities (20 Hz zero-phase smoothing, then
// central differences). Throws kTooShort below 5 samples.
std::vector<BodyKinematics> EndEffectorKinematics(const RolloutRecord& record,
                                                  const RobotModel& model,
                                                  double cutoff_hz = 20.0);

// Stacks regressor rows against the wrench an ideal wrist sensor would read
// while carrying `payload_ee` along those kinematics, plus optional noise.
StackedRegression StackFromRollout(const RolloutRecord& record, const RobotModel& model,
                                   const InertialParams& payload_ee,
                                   const StackOptions& options = StackOptions());

struct GroupErrors {
  std::array<double, 3> mae{};   // mass, com, inertia
  std::array<double, 3> nmae{};
};

struct EstimationReport {
  InertialParams phi_hat;  // frame of the regression (end effector)
  Vector10d phi_vector = Vector10d::Zero();
  ConsistencyReport consistency;
  int rank = 0;
  double wall_time = 0.0;  // s, solve only
  GroupErrors errors;      // filled by callers that know the ground truth
};

// Column-pivoted QR on the column-equilibrated stack. Throws kRankDeficient
// when the numerical rank is below 10.
EstimationReport OlsEstimate(const StackedRegression& s);

// Weighted LS with s.channel_weights, or, when those are empty, a two-stage
// feasible WLS weighting each of the six wrench channels by the inverse of
// its OLS residual variance.
EstimationReport WlsEstimate(const StackedRegression& s);

// Per-group MAE and NMAE over y = [m, c, diag(I_com)].
GroupErrors EvaluateEstimate(const Vector7d& y_hat, const Vector7d& y_true,
                             const Vector7d& y_scale);
GroupErrors EvaluateEstimate(const InertialParams& phi_hat, const InertialParams& phi_true,
                             const Vector7d& y_scale);

// Averages group errors over a batch.
GroupErrors MeanErrors(const std::vector<GroupErrors>& errors);

nlohmann::json ToJson(const GroupErrors& e);
nlohmann::json ToJson(const EstimationReport& r);

}  // namespace inertia_id

#endif  // INERTIA_ID_CLASSICAL_H_
