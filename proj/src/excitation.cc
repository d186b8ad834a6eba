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

#include "inertia_id/excitation.h"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "inertia_id/signal.h"

namespace inertia_id {

void ChirpConfig::Validate() const {
  if (!(l_freq > 0.0 && h_freq >= l_freq)) {
    throw Error(ErrorCode::kInvalidArgument, "chirp needs h_freq >= l_freq > 0");
  }
  if (!(t_total > 0.0 && dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "chirp needs t_total > 0 and dt > 0");
  }
}

int ChirpConfig::NumSamples() const {
  return static_cast<int>(std::ceil(t_total / dt - 1e-9));
}

ChirpConfig ChirpFromMillimetres(double h_freq, double l_freq, double amplitude_mm,
                                 double t_total, double dt) {
  return {h_freq, l_freq, amplitude_mm * 1e-3, t_total, dt};
}

ChirpConfig DefaultChirpX() { return ChirpFromMillimetres(5.0, 1.0, -5.0); }
ChirpConfig DefaultChirpY() { return ChirpFromMillimetres(3.0, 1.0, 80.0); }

double HannWindow(double t, double t_total) {
  return 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / t_total));
}

double ChirpFrequency(const ChirpConfig& cfg, double t) {
  return cfg.h_freq - (cfg.h_freq - cfg.l_freq) * (t / cfg.t_total);
}

std::vector<double> ChirpSignal(const ChirpConfig& cfg, bool include_endpoint) {
  cfg.Validate();
  const int n = cfg.NumSamples() + (include_endpoint ? 1 : 0);
  std::vector<double> x(n);
  double phase = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = k == cfg.NumSamples() ? cfg.t_total : k * cfg.dt;
    phase += cfg.dt * ChirpFrequency(cfg, t);
    x[k] = cfg.amplitude * std::sin(2.0 * std::numbers::pi * phase) * HannWindow(t, cfg.t_total);
  }
  return x;
}

TaskTrajectory BuildTaskTrajectory(const ChirpConfig& cfg_x, const ChirpConfig& cfg_y) {
  if (std::abs(cfg_x.dt - cfg_y.dt) > 1e-15 || std::abs(cfg_x.t_total - cfg_y.t_total) > 1e-12) {
    throw Error(ErrorCode::kConfigMismatch, "x and y chirps need equal dt and t_total");
  }
  const auto x = ChirpSignal(cfg_x);
  const auto y = ChirpSignal(cfg_y);
  TaskTrajectory traj;
  traj.dt = cfg_x.dt;
  traj.targets.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) traj.targets[k] = {x[k], y[k], 0.0};
  return traj;
}

void IkConfig::Validate() const {
  if (!(damping > 0.0) || !(step_gain > 0.0 && step_gain <= 1.0) || max_iter < 1) {
    throw Error(ErrorCode::kInvalidArgument, "IK needs damping > 0 and step_gain in (0, 1]");
  }
}

Eigen::Matrix<double, 3, 4> PositionJacobian(const RobotModel& model, const Vector4d& q) {
  const auto frames = ForwardKinematics(model, q);
  const Vector3d p = frames[kNumJoints].origin;
  Eigen::Matrix<double, 3, 4> j;
  Matrix3d parent = Matrix3d::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    const Vector3d z = parent * model.links[i].axis;
    j.col(i) = z.cross(p - frames[i].origin);
    parent = frames[i].rotation;
  }
  return j;
}

Vector4d DlsIkStep(const RobotModel& model, const Vector4d& q, const Vector3d& target,
                   const IkConfig& ik) {
  const Vector3d e = target - EndEffectorPosition(model, q);
  const Eigen::Matrix<double, 3, 4> j = PositionJacobian(model, q);
  const Matrix4d a = j.transpose() * j + ik.damping * ik.damping * Matrix4d::Identity();
  return q + ik.step_gain * a.ldlt().solve(j.transpose() * e);
}

IkResult SolveIk(const RobotModel& model, const Vector4d& q0, const Vector3d& target,
                 const IkConfig& ik) {
  ik.Validate();
  IkResult r;
  r.q = q0;
  for (r.iterations = 0; r.iterations < ik.max_iter; ++r.iterations) {
    r.error = (target - EndEffectorPosition(model, r.q)).norm();
    if (r.error <= ik.tol) {
      r.converged = true;
      return r;
    }
    r.q = DlsIkStep(model, r.q, target, ik);
  }
  r.error = (target - EndEffectorPosition(model, r.q)).norm();
  r.converged = r.error <= ik.tol;
  return r;
}

JointTrajectory JointTrajectoryFromTask(const RobotModel& model, const TaskTrajectory& task,
                                        const IkConfig& ik) {
  ik.Validate();
  if (task.size() < 3) throw Error(ErrorCode::kTooShort, "task trajectory needs >= 3 samples");
  const Vector3d origin = EndEffectorPosition(model, model.hold_pose);
  JointTrajectory traj;
  traj.dt = task.dt;
  Eigen::MatrixXd q(task.size(), kNumJoints);
  Vector4d current = model.hold_pose;
  for (std::size_t k = 0; k < task.size(); ++k) {
    current = DlsIkStep(model, current, origin + task.targets[k], ik);
    q.row(k) = current.transpose();
  }
  const Eigen::MatrixXd qd = CentralDifference(q, task.dt);
  traj.q.resize(task.size());
  traj.qdot.resize(task.size());
  for (std::size_t k = 0; k < task.size(); ++k) {
    traj.q[k] = q.row(k).transpose();
    traj.qdot[k] = qd.row(k).transpose();
  }
  return traj;
}

JointTrajectory DefaultExcitation(const RobotModel& model) {
  return JointTrajectoryFromTask(model, BuildTaskTrajectory(DefaultChirpX(), DefaultChirpY()));
}

nlohmann::json ToJson(const ChirpConfig& cfg) {
  return {{"h_freq", cfg.h_freq},
          {"l_freq", cfg.l_freq},
          {"amplitude_mm", cfg.amplitude * 1e3},
          {"t_total", cfg.t_total},
          {"dt", cfg.dt}};
}

ChirpConfig ChirpConfigFromJson(const nlohmann::json& j) {
  ChirpConfig cfg = ChirpFromMillimetres(j.at("h_freq").get<double>(), j.at("l_freq").get<double>(),
                                         j.at("amplitude_mm").get<double>(),
                                         j.value("t_total", 0.5), j.value("dt", 1e-3));
  cfg.Validate();
  return cfg;
}

void WriteTaskTrajectoryCsv(const std::string& path, const TaskTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "t,x,y,z\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Vector3d& p = traj.targets[k];
    out << k * traj.dt << ',' << p.x() << ',' << p.y() << ',' << p.z() << '\n';
  }
}

TaskTrajectory ReadTaskTrajectoryCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  TaskTrajectory traj;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    int n = 0;
    while (n < 4 && std::getline(ss, cell, ',')) v[n++] = std::stod(cell);
    if (n != 4) throw Error(ErrorCode::kShapeMismatch, "task CSV row needs 4 columns");
    times.push_back(v[0]);
    traj.targets.emplace_back(v[1], v[2], v[3]);
  }
  if (times.size() >= 2) traj.dt = times[1] - times[0];
  return traj;
}

}  // namespace inertia_id
