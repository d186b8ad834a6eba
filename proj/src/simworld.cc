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

#include "inertia_id/simworld.h"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace inertia_id {

namespace {

// Solid cylinder along the local z axis, used for the default link bodies.
InertialParams RodLink(double mass, const Vector3d& com, double radius, double length) {
  Matrix3d ic = Matrix3d::Zero();
  const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
  ic.diagonal() << transverse, transverse, 0.5 * mass * radius * radius;
  return InertialParams::FromComInertia(mass, com, ic);
}

Matrix3d JointRotation(const Vector3d& axis, double angle) {
  // Principal axes dominate; avoid the general Rodrigues path for them.
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Matrix3d r;
  if (axis == Vector3d::UnitX()) {
    r << 1, 0, 0, 0, c, -s, 0, s, c;
  } else if (axis == Vector3d::UnitY()) {
    r << c, 0, s, 0, 1, 0, -s, 0, c;
  } else if (axis == Vector3d::UnitZ()) {
    r << c, -s, 0, s, c, 0, 0, 0, 1;
  } else {
    r = AxisAngle(axis, angle);
  }
  return r;
}

}  // namespace

RobotModel RobotModel::Default() {
  RobotModel m;
  m.links[0] = {RodLink(0.6, {0.0, 0.0, -0.05}, 0.035, 0.10), Vector3d::UnitY(),
                Vector3d::Zero()};
  m.links[1] = {RodLink(1.2, {0.0, 0.0, -0.125}, 0.035, 0.25), Vector3d::UnitX(),
                {0.0, 0.0, -0.10}};
  m.links[2] = {RodLink(0.9, {0.0, 0.0, -0.125}, 0.03, 0.25), Vector3d::UnitY(),
                {0.0, 0.0, -0.25}};
  m.links[3] = {RodLink(0.35, {0.01, 0.0, -0.03}, 0.03, 0.05), Vector3d::UnitY(),
                {0.0, 0.0, -0.25}};
  m.ee_offset = {0.0, 0.0, -0.05};
  m.damping << 0.08, 0.08, 0.05, 0.05;
  m.armature << 0.02, 0.02, 0.01, 0.01;
  m.kp << 1200.0, 1200.0, 400.0, 250.0;
  m.kd << 25.0, 25.0, 8.0, 5.0;
  m.torque_limit = 40.0;
  m.hold_pose << -0.7, 0.0, -0.4, -0.6;
  return m;
}

Vector4d RobotModel::LinkMasses() const {
  Vector4d m;
  for (int i = 0; i < kNumJoints; ++i) m(i) = links[i].inertial.mass;
  return m;
}

void RobotModel::Validate() const {
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(links[i].inertial.mass >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "link mass must be non-negative");
    }
    if (std::abs(links[i].axis.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kInvalidArgument, "joint axis must be a unit vector");
    }
  }
  if ((damping.array() < 0.0).any() || (kp.array() < 0.0).any() ||
      (kd.array() < 0.0).any() || (armature.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "damping, gains and armature must be >= 0");
  }
}

RobotModel AttachPayload(const RobotModel& model, const InertialParams& payload_ee) {
  RobotModel out = model;
  out.payload = payload_ee;
  return out;
}

RobotModel DetachPayload(const RobotModel& model) {
  RobotModel out = model;
  out.payload.reset();
  return out;
}

Vector4d FrictionModel::Torque(const Vector4d& qdot) const {
  Vector4d t;
  for (int i = 0; i < kNumJoints; ++i) {
    const double smooth_sign =
        stiction_blend > 0.0 ? std::tanh(qdot(i) / stiction_blend)
                             : (qdot(i) > 0.0) - (qdot(i) < 0.0);
    t(i) = -coulomb(i) * smooth_sign - viscous_extra(i) * qdot(i);
  }
  return t;
}

Perturbation Perturbation::DefaultSurrogate() {
  Perturbation p;
  p.mass_scale << 1.12, 0.88, 1.10, 0.90;
  p.damping_offset << 0.03, 0.02, 0.04, 0.01;
  p.friction.coulomb << 0.10, 0.08, 0.05, 0.06;
  p.friction.viscous_extra << 0.01, 0.01, 0.005, 0.005;
  p.friction.stiction_blend = 0.05;
  return p;
}

World MakePseudoReal(const RobotModel& model, const Perturbation& perturbation) {
  World world{model, perturbation.friction};
  for (int i = 0; i < kNumJoints; ++i) {
    const double scale = perturbation.mass_scale(i);
    const double mass = model.links[i].inertial.mass * scale;
    if (!(mass > 0.0)) {
      throw Error(ErrorCode::kInvalidPerturbation,
                  "perturbed mass of link " + std::to_string(i + 1) + " is not positive");
    }
    world.model.links[i].inertial =
        InertialParams::FromVector(model.links[i].inertial.ToVector() * scale);
  }
  world.model.damping += perturbation.damping_offset;
  if ((world.model.damping.array() < 0.0).any() ||
      (perturbation.friction.coulomb.array() < 0.0).any() ||
      (perturbation.friction.viscous_extra.array() < 0.0).any() ||
      perturbation.friction.stiction_blend < 0.0) {
    throw Error(ErrorCode::kInvalidPerturbation, "damping and friction must be >= 0");
  }
  return world;
}

std::array<Frame, kNumJoints + 1> ForwardKinematics(const RobotModel& model,
                                                    const Vector4d& q) {
  std::array<Frame, kNumJoints + 1> frames;
  Matrix3d r = Matrix3d::Identity();
  Vector3d o = Vector3d::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    o += r * model.links[i].offset;
    r = r * JointRotation(model.links[i].axis, q(i));
    frames[i] = {r, o};
  }
  frames[kNumJoints] = {r, o + r * model.ee_offset};
  return frames;
}

Vector3d EndEffectorPosition(const RobotModel& model, const Vector4d& q) {
  return ForwardKinematics(model, q)[kNumJoints].origin;
}

ArmDynamics::ArmDynamics(const RobotModel& model) : model_(model) {
  model_.Validate();
  for (int i = 0; i < kNumJoints; ++i) link_params_[i] = model_.links[i].inertial;
  if (model_.payload) {
    const InertialParams in_link4 =
        TransformParams(*model_.payload, RigidTransform::Translation(model_.ee_offset));
    link_params_[kNumJoints - 1] = link_params_[kNumJoints - 1] + in_link4;
  }
}

std::array<ArmDynamics::LinkWorld, kNumJoints> ArmDynamics::Pose(const Vector4d& q) const {
  std::array<LinkWorld, kNumJoints> out;
  Matrix3d r = Matrix3d::Identity();
  Vector3d o = Vector3d::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    o += r * model_.links[i].offset;
    out[i].z = r * model_.links[i].axis;
    r = r * JointRotation(model_.links[i].axis, q(i));
    out[i].origin = o;
    out[i].com = o + r * link_params_[i].com;
    out[i].inertia = r * link_params_[i].InertiaAboutCom() * r.transpose();
  }
  return out;
}

Matrix4d ArmDynamics::MassMatrixFromPose(const std::array<LinkWorld, kNumJoints>& links) const {
  Matrix4d m = Matrix4d::Zero();
  // Column j: wrench needed to give the subtree outboard of joint j a unit
  // angular acceleration about z_j, projected onto every inboard joint axis.
  for (int j = kNumJoints - 1; j >= 0; --j) {
    const Vector3d& zj = links[j].z;
    const Vector3d& oj = links[j].origin;
    Vector3d force = Vector3d::Zero();
    Vector3d moment = Vector3d::Zero();  // about o_j
    for (int k = j; k < kNumJoints; ++k) {
      const Vector3d r = links[k].com - oj;
      const Vector3d f = link_params_[k].mass * zj.cross(r);
      force += f;
      moment += links[k].inertia * zj + r.cross(f);
    }
    for (int i = 0; i <= j; ++i) {
      const double v = links[i].z.dot(moment + (oj - links[i].origin).cross(force));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  m.diagonal() += model_.armature;
  return m;
}

Vector4d ArmDynamics::RneaFromPose(const std::array<LinkWorld, kNumJoints>& links,
                                   const Vector4d& qdot, const Vector4d& qddot,
                                   const Vector3d& base_acc) const {
  std::array<Vector3d, kNumJoints> w, dw, acc_com;
  Vector3d w_prev = Vector3d::Zero();
  Vector3d dw_prev = Vector3d::Zero();
  Vector3d a_prev = base_acc;  // linear acceleration of the previous joint origin
  Vector3d o_prev = Vector3d::Zero();
  for (int i = 0; i < kNumJoints; ++i) {
    const Vector3d d = links[i].origin - o_prev;
    const Vector3d a_origin = a_prev + dw_prev.cross(d) + w_prev.cross(w_prev.cross(d));
    w[i] = w_prev + links[i].z * qdot(i);
    dw[i] = dw_prev + links[i].z * qddot(i) + w_prev.cross(links[i].z * qdot(i));
    const Vector3d rc = links[i].com - links[i].origin;
    acc_com[i] = a_origin + dw[i].cross(rc) + w[i].cross(w[i].cross(rc));
    w_prev = w[i];
    dw_prev = dw[i];
    a_prev = a_origin;
    o_prev = links[i].origin;
  }

  Vector4d tau;
  Vector3d f_next = Vector3d::Zero();
  Vector3d n_next = Vector3d::Zero();  // about the next joint origin
  for (int i = kNumJoints - 1; i >= 0; --i) {
    const double m = link_params_[i].mass;
    const Vector3d rc = links[i].com - links[i].origin;
    const Vector3d f_link = m * acc_com[i];
    const Vector3d to_next =
        i + 1 < kNumJoints ? Vector3d(links[i + 1].origin - links[i].origin) : Vector3d::Zero();
    const Vector3d f = f_link + f_next;
    const Vector3d n = links[i].inertia * dw[i] + w[i].cross(links[i].inertia * w[i]) +
                       rc.cross(f_link) + n_next + to_next.cross(f_next);
    tau(i) = links[i].z.dot(n);
    f_next = f;
    n_next = n;
  }
  return tau;
}

Matrix4d ArmDynamics::MassMatrix(const Vector4d& q) const {
  return MassMatrixFromPose(Pose(q));
}

Vector4d ArmDynamics::BiasTorque(const Vector4d& q, const Vector4d& qdot) const {
  return RneaFromPose(Pose(q), qdot, Vector4d::Zero(), -model_.gravity);
}

Vector4d ArmDynamics::InverseDynamics(const Vector4d& q, const Vector4d& qdot,
                                      const Vector4d& qddot) const {
  return RneaFromPose(Pose(q), qdot, qddot, -model_.gravity);
}

Vector4d ArmDynamics::Accelerations(const JointState& state, const Vector4d& tau) const {
  const auto links = Pose(state.q);
  const Matrix4d m = MassMatrixFromPose(links);
  const Vector4d bias = RneaFromPose(links, state.qdot, Vector4d::Zero(), -model_.gravity);
  Eigen::LDLT<Matrix4d> ldlt(m);
  const Vector4d d = ldlt.vectorD();
  const double dmin = d.minCoeff();
  const double dmax = d.maxCoeff();
  // LDLT pivot ratio is a cheap lower bound on the condition number.
  if (!(dmin > 0.0) || dmax / dmin > 1e12) {
    throw Error(ErrorCode::kSingularMassMatrix, "mass matrix is singular or ill-conditioned");
  }
  return ldlt.solve(tau - bias - model_.damping.cwiseProduct(state.qdot));
}

double ArmDynamics::Energy(const JointState& state) const {
  const auto links = Pose(state.q);
  const Matrix4d m = MassMatrixFromPose(links);
  double potential = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    potential -= link_params_[i].mass * model_.gravity.dot(links[i].com);
  }
  return 0.5 * state.qdot.dot(m * state.qdot) + potential;
}

Vector4d ForwardDynamics(const RobotModel& model, const JointState& state,
                         const Vector4d& tau) {
  return ArmDynamics(model).Accelerations(state, tau);
}

Vector4d ForwardDynamics(const RobotModel& model, const JointState& state,
                         const Vector4d& tau, const InertialParams& payload_ee) {
  return ArmDynamics(AttachPayload(model, payload_ee)).Accelerations(state, tau);
}

Vector4d PdTorque(const RobotModel& model, const Vector4d& q_des,
                  const Vector4d& qdot_des, const JointState& state) {
  const Vector4d tau =
      model.kp.cwiseProduct(q_des - state.q) + model.kd.cwiseProduct(qdot_des - state.qdot);
  return tau.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
}

void SimConfig::Validate() const {
  if (!(dt > 0.0 && dt <= 0.01)) {
    throw Error(ErrorCode::kInvalidArgument, "dt must lie in (0, 0.01]");
  }
  if (settle_time < 0.0 || q_noise_std < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "settle_time and q_noise_std must be >= 0");
  }
}

RolloutRecord Rollout(const World& world, const SimConfig& config,
                      const JointTrajectory& trajectory,
                      const std::optional<InertialParams>& payload_ee,
                      const std::string& label) {
  config.Validate();
  if (trajectory.size() == 0 || trajectory.qdot.size() != trajectory.size()) {
    throw Error(ErrorCode::kInvalidArgument, "trajectory is empty or inconsistent");
  }
  if (std::abs(trajectory.dt - config.dt) > 1e-12) {
    throw Error(ErrorCode::kConfigMismatch, "trajectory dt differs from simulator dt");
  }

  const RobotModel model =
      payload_ee ? AttachPayload(world.model, *payload_ee) : DetachPayload(world.model);
  const ArmDynamics dyn(model);
  const FrictionModel& friction = world.friction;
  const bool has_friction = !friction.IsZero();
  const double dt = config.dt;

  auto accel = [&](const JointState& s, const Vector4d& tau_cmd, double t) {
    Vector4d tau = tau_cmd;
    if (has_friction) tau += friction.Torque(s.qdot);
    if (config.residual_torque_hook) tau += config.residual_torque_hook(s.q, s.qdot, tau_cmd, t);
    Vector4d qdd = dyn.Accelerations(s, tau);
    if (config.residual_hook) qdd += config.residual_hook(s.q, s.qdot, tau_cmd, t);
    return qdd;
  };

  auto step = [&](JointState& s, const Vector4d& tau_cmd, double t) {
    if (config.integrator == Integrator::kSemiImplicitEuler) {
      s.qdot += dt * accel(s, tau_cmd, t);
      s.q += dt * s.qdot;
    } else {
      const JointState s0 = s;
      const Vector4d k1v = accel(s0, tau_cmd, t);
      const Vector4d k1q = s0.qdot;
      JointState s1{s0.q + 0.5 * dt * k1q, s0.qdot + 0.5 * dt * k1v};
      const Vector4d k2v = accel(s1, tau_cmd, t + 0.5 * dt);
      const Vector4d k2q = s1.qdot;
      JointState s2{s0.q + 0.5 * dt * k2q, s0.qdot + 0.5 * dt * k2v};
      const Vector4d k3v = accel(s2, tau_cmd, t + 0.5 * dt);
      const Vector4d k3q = s2.qdot;
      JointState s3{s0.q + dt * k3q, s0.qdot + dt * k3v};
      const Vector4d k4v = accel(s3, tau_cmd, t + dt);
      const Vector4d k4q = s3.qdot;
      s.q = s0.q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      s.qdot = s0.qdot + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    if (!s.qdot.allFinite() || !s.q.allFinite() || s.qdot.cwiseAbs().maxCoeff() > 1e3) {
      throw Error(ErrorCode::kDiverged, "joint velocity exceeded 1e3 rad/s at t=" +
                                            std::to_string(t));
    }
  };

  JointState state{trajectory.q.front(), Vector4d::Zero()};
  const int settle_steps = static_cast<int>(std::lround(config.settle_time / dt));
  for (int k = 0; k < settle_steps; ++k) {
    const Vector4d tau_cmd = PdTorque(model, trajectory.q.front(), Vector4d::Zero(), state);
    step(state, tau_cmd, 0.0);
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  RolloutRecord record;
  record.dt = dt;
  record.payload_label = label;
  record.samples.reserve(trajectory.size());
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const Vector4d tau_cmd = PdTorque(model, trajectory.q[k], trajectory.qdot[k], state);
    RolloutSample sample;
    sample.q = state.q;
    if (config.q_noise_std > 0.0) {
      for (int i = 0; i < kNumJoints; ++i) sample.q(i) += config.q_noise_std * noise(rng);
    }
    sample.qdot = state.qdot;
    sample.tau = has_friction ? Vector4d(tau_cmd + friction.Torque(state.qdot)) : tau_cmd;
    if (config.residual_torque_hook) {
      sample.tau += config.residual_torque_hook(state.q, state.qdot, tau_cmd, t);
    }
    sample.ee_pos = EndEffectorPosition(model, state.q);
    record.samples.push_back(sample);
    step(state, tau_cmd, t);
  }
  return record;
}

}  // namespace inertia_id
