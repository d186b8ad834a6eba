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

// Shaking trajectory: a linearly decaying chirp under a Hann window on the
// end-effector x and y axes, streamed through damped-least-squares IK.

#ifndef INERTIA_ID_EXCITATION_H_
#define INERTIA_ID_EXCITATION_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "inertia_id/simworld.h"
#include "json.hpp"

namespace inertia_id {

struct ChirpConfig {
  double h_freq = 5.0;     // Hz, at t = 0
  double l_freq = 1.0;     // Hz, at t = t_total
  double amplitude = 0.0;  // m (configs give millimetres; see ChirpFromMillimetres)
  double t_total = 0.5;    // s
  double dt = 1e-3;        // s

  void Validate() const;
  // ceil(t_total / dt), guarded against round-off.
  int NumSamples() const;
};

// Builds a config from an amplitude in millimetres.
ChirpConfig ChirpFromMillimetres(double h_freq, double l_freq, double amplitude_mm,
                                 double t_total = 0.5, double dt = 1e-3);

// Defaults for the two shaken axes.
ChirpConfig DefaultChirpX();
ChirpConfig DefaultChirpY();

double HannWindow(double t, double t_total);
double ChirpFrequency(const ChirpConfig& cfg, double t);

// X_k = amplitude * sin(2 pi phi_k) * w(t_k), phi_k = dt * sum_{j<=k} f(t_j),
// for k = 0..NumSamples()-1 (plus t = t_total when `include_endpoint`).
std::vector<double> ChirpSignal(const ChirpConfig& cfg, bool include_endpoint = false);

struct TaskTrajectory {
  double dt = 1e-3;
  std::vector<Vector3d> targets;  // displacement from the hold pose, m

  std::size_t size() const { return targets.size(); }
};

// Throws kConfigMismatch when dt or t_total differ.
TaskTrajectory BuildTaskTrajectory(const ChirpConfig& cfg_x, const ChirpConfig& cfg_y);

struct IkConfig {
  double damping = 0.05;    // lambda
  double step_gain = 0.5;   // alpha_ik in (0, 1]
  int max_iter = 200;
  double tol = 1e-4;        // m

  void Validate() const;
};

// 3x4 Jacobian of the end-effector position.
Eigen::Matrix<double, 3, 4> PositionJacobian(const RobotModel& model, const Vector4d& q);

// One damped-least-squares update toward the absolute end-effector `target`.
Vector4d DlsIkStep(const RobotModel& model, const Vector4d& q, const Vector3d& target,
                   const IkConfig& ik);

struct IkResult {
  Vector4d q = Vector4d::Zero();
  double error = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Repeats DlsIkStep until |e| <= tol or max_iter.
IkResult SolveIk(const RobotModel& model, const Vector4d& q0, const Vector3d& target,
                 const IkConfig& ik);

// Streams the task trajectory through one IK step per tick starting at the
// model's hold pose; joint velocities are central differences of the result.
JointTrajectory JointTrajectoryFromTask(const RobotModel& model, const TaskTrajectory& task,
                                        const IkConfig& ik = IkConfig());

// Default shaking motion for `model` (both default chirps, default IK).
JointTrajectory DefaultExcitation(const RobotModel& model);

nlohmann::json ToJson(const ChirpConfig& cfg);
ChirpConfig ChirpConfigFromJson(const nlohmann::json& j);

// CSV columns t, x, y, z.
void WriteTaskTrajectoryCsv(const std::string& path, const TaskTrajectory& traj);
TaskTrajectory ReadTaskTrajectoryCsv(const std::string& path);

}  // namespace inertia_id

#endif  // INERTIA_ID_EXCITATION_H_
