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

// Forward-dynamics simulator for the 4-DOF arm under joint PD control, with
// an optional payload on the last link and a perturbed "pseudo-real" world.

#ifndef INERTIA_ID_SIMWORLD_H_
#define INERTIA_ID_SIMWORLD_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "inertia_id/common.h"
#include "inertia_id/rigidbody.h"
#include "json.hpp"

namespace inertia_id {

struct LinkSpec {
  InertialParams inertial;  // in the link's joint frame
  Vector3d axis = Vector3d::UnitZ();
  Vector3d offset = Vector3d::Zero();  // joint origin in the parent joint frame
};

struct RobotModel {
  std::array<LinkSpec, kNumJoints> links;
  Vector3d ee_offset = Vector3d::Zero();  // end-effector origin in link-4 frame
  Vector4d damping = Vector4d::Zero();
  Vector4d armature = Vector4d::Zero();  // reflected rotor inertia
  Vector4d kp = Vector4d::Zero();
  Vector4d kd = Vector4d::Zero();
  Vector3d gravity{0.0, 0.0, -9.81};
  double torque_limit = 40.0;
  Vector4d hold_pose = Vector4d::Zero();
  // Payload rigidly attached at the end effector, in the end-effector frame.
  std::optional<InertialParams> payload;

  // Stand-in for a humanoid's 4-DOF arm: pitch, roll, pitch, pitch joints with
  // link lengths 0.10, 0.25, 0.25, 0.05 m.
  static RobotModel Default();

  Vector4d LinkMasses() const;
  void Validate() const;
};

RobotModel AttachPayload(const RobotModel& model, const InertialParams& payload_ee);
RobotModel DetachPayload(const RobotModel& model);

struct JointState {
  Vector4d q = Vector4d::Zero();
  Vector4d qdot = Vector4d::Zero();
};

// Friction the nominal model does not represent: smoothed Coulomb plus extra
// viscous drag.
struct FrictionModel {
  Vector4d coulomb = Vector4d::Zero();
  Vector4d viscous_extra = Vector4d::Zero();
  double stiction_blend = 0.05;

  // Torque the friction exerts on the joints (opposes motion).
  Vector4d Torque(const Vector4d& qdot) const;
  bool IsZero() const { return coulomb.isZero(0.0) && viscous_extra.isZero(0.0); }
};

// A robot model plus the friction it experiences.
struct World {
  RobotModel model;
  FrictionModel friction;
};

struct Perturbation {
  Vector4d mass_scale = Vector4d::Ones();
  Vector4d damping_offset = Vector4d::Zero();
  FrictionModel friction;

  static Perturbation DefaultSurrogate();
};

// Throws kInvalidPerturbation when any perturbed link mass is not positive.
World MakePseudoReal(const RobotModel& model, const Perturbation& perturbation);

struct Frame {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d origin = Vector3d::Zero();
};

// Joint frames 1..4 followed by the end-effector frame, in world coordinates.
std::array<Frame, kNumJoints + 1> ForwardKinematics(const RobotModel& model,
                                                    const Vector4d& q);
Vector3d EndEffectorPosition(const RobotModel& model, const Vector4d& q);

// Precomputed per-link inertia (payload folded into link 4) for repeated
// dynamics evaluation.
class ArmDynamics {
 public:
  explicit ArmDynamics(const RobotModel& model);

  Matrix4d MassMatrix(const Vector4d& q) const;
  // Coriolis, centrifugal and gravity torques C(q, qdot) qdot + g(q).
  Vector4d BiasTorque(const Vector4d& q, const Vector4d& qdot) const;
  // Inverse dynamics (recursive Newton-Euler), without damping or armature.
  Vector4d InverseDynamics(const Vector4d& q, const Vector4d& qdot,
                           const Vector4d& qddot) const;
  // Solves M qddot = tau - bias - damping * qdot. `tau` is every torque that
  // acts on the joints apart from damping.
  Vector4d Accelerations(const JointState& state, const Vector4d& tau) const;
  // Total mechanical energy (kinetic + gravitational potential).
  double Energy(const JointState& state) const;

  const RobotModel& model() const { return model_; }

 private:
  struct LinkWorld {
    Vector3d z, origin, com;
    Matrix3d inertia;  // about the COM, world axes
  };
  std::array<LinkWorld, kNumJoints> Pose(const Vector4d& q) const;
  Matrix4d MassMatrixFromPose(const std::array<LinkWorld, kNumJoints>& links) const;
  Vector4d RneaFromPose(const std::array<LinkWorld, kNumJoints>& links,
                        const Vector4d& qdot, const Vector4d& qddot,
                        const Vector3d& base_acc) const;

  RobotModel model_;
  std::array<InertialParams, kNumJoints> link_params_;  // payload folded in
};

// q_ddot of the rigid arm, with the model's payload (if any) attached.
Vector4d ForwardDynamics(const RobotModel& model, const JointState& state,
                         const Vector4d& tau);
Vector4d ForwardDynamics(const RobotModel& model, const JointState& state,
                         const Vector4d& tau, const InertialParams& payload_ee);

Vector4d PdTorque(const RobotModel& model, const Vector4d& q_des,
                  const Vector4d& qdot_des, const JointState& state);

struct JointTrajectory {
  double dt = 1e-3;
  std::vector<Vector4d> q;
  std::vector<Vector4d> qdot;

  std::size_t size() const { return q.size(); }
};

struct RolloutSample {
  Vector4d q = Vector4d::Zero();
  Vector4d qdot = Vector4d::Zero();
  // Joint torque actually delivered: PD command plus friction and any
  // residual torque hook.
  Vector4d tau = Vector4d::Zero();
  Vector3d ee_pos = Vector3d::Zero();
};

struct RolloutRecord {
  double dt = 1e-3;
  std::vector<RolloutSample> samples;
  std::string payload_label;

  std::size_t size() const { return samples.size(); }
};

enum class Integrator { kSemiImplicitEuler, kRk4 };

// Correction added to the rigid-body dynamics; receives the state, the
// commanded PD torque and the record time.
using ResidualHook = std::function<Vector4d(const Vector4d& q, const Vector4d& qdot,
                                            const Vector4d& tau_cmd, double t)>;

struct SimConfig {
  double dt = 1e-3;
  Integrator integrator = Integrator::kSemiImplicitEuler;
  std::uint64_t seed = 0;
  // Encoder noise added to recorded q (not fed back); zero by default.
  double q_noise_std = 0.0;
  // Static hold at the first trajectory point before recording starts.
  double settle_time = 0.3;
  ResidualHook residual_hook;
  // Extra joint torque (e.g. a learned correction), added before the
  // dynamics solve so it sees the actual mass matrix, payload included.
  ResidualHook residual_torque_hook;

  void Validate() const;
};

// Tracks `trajectory` with the PD controller. The record has one sample per
// trajectory point. Throws kDiverged if any |qdot| exceeds 1e3 rad/s.
RolloutRecord Rollout(const World& world, const SimConfig& config,
                      const JointTrajectory& trajectory,
                      const std::optional<InertialParams>& payload_ee = std::nullopt,
                      const std::string& label = "");

nlohmann::json ToJson(const RobotModel& model);
RobotModel RobotModelFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const Perturbation& p);
Perturbation PerturbationFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const InertialParams& p);
InertialParams InertialParamsFromJson(const nlohmann::json& j);

// CSV columns: t, q1..q4, qd1..qd4, tau1..tau4, ex, ey, ez.
void WriteRolloutCsv(const std::string& path, const RolloutRecord& record);
RolloutRecord ReadRolloutCsv(const std::string& path);
// Compact binary container ("IIDR" magic, version, dt, label, samples).
void WriteRolloutBinary(const std::string& path, const RolloutRecord& record);
RolloutRecord ReadRolloutBinary(const std::string& path);
// CSV columns: t, q1..q4, qd1..qd4.
void WriteJointTrajectoryCsv(const std::string& path, const JointTrajectory& traj);
JointTrajectory ReadJointTrajectoryCsv(const std::string& path);

}  // namespace inertia_id

#endif  // INERTIA_ID_SIMWORLD_H_
