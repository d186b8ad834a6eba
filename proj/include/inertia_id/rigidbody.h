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

// Rigid-body inertial algebra: the 10-parameter linear regressor, composite
// objects built from primitive solids, frame changes of inertial parameters
// and physical-consistency auditing.

#ifndef INERTIA_ID_RIGIDBODY_H_
#define INERTIA_ID_RIGIDBODY_H_

#include <Eigen/Core>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "inertia_id/common.h"

namespace inertia_id {

using Matrix6x10 = Eigen::Matrix<double, 6, 10>;
using Vector10d = Eigen::Matrix<double, 10, 1>;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector7d = Eigen::Matrix<double, 7, 1>;

// Proper rigid transform p_parent = rotation * p_child + translation.
struct RigidTransform {
  Matrix3d rotation = Matrix3d::Identity();
  Vector3d translation = Vector3d::Zero();

  static RigidTransform Identity() { return {}; }
  static RigidTransform Translation(const Vector3d& t) {
    return {Matrix3d::Identity(), t};
  }

  Vector3d Apply(const Vector3d& p) const { return rotation * p + translation; }
  RigidTransform Inverse() const;
  RigidTransform operator*(const RigidTransform& other) const;
};

// Throws kInvalidRotation unless R is orthonormal with det +1 (to `tol`).
void ValidateRotation(const Matrix3d& rotation, double tol = 1e-9);

// Mass, centre of mass and rotational inertia of a body. `inertia` is taken
// about the origin of the body reference frame (not about the COM).
struct InertialParams {
  double mass = 0.0;
  Vector3d com = Vector3d::Zero();
  Matrix3d inertia = Matrix3d::Zero();

  // phi = [m, m*cx, m*cy, m*cz, Ixx, Ixy, Ixz, Iyy, Iyz, Izz].
  Vector10d ToVector() const;
  // Inverse of ToVector. A zero mass leaves the COM at the origin.
  static InertialParams FromVector(const Vector10d& phi);

  // Builds params from a COM-frame inertia tensor.
  static InertialParams FromComInertia(double mass, const Vector3d& com,
                                       const Matrix3d& inertia_about_com);

  Matrix3d InertiaAboutCom() const;
  Vector3d FirstMoment() const { return mass * com; }
};

InertialParams operator+(const InertialParams& a, const InertialParams& b);

// Gravity-augmented body kinematics expressed in the body frame: `lin_acc`
// already contains -g, so a body at rest reads +9.81 along the up axis.
struct BodyKinematics {
  Vector3d lin_acc = Vector3d::Zero();
  Vector3d ang_vel = Vector3d::Zero();
  Vector3d ang_acc = Vector3d::Zero();
};

struct Wrench {
  Vector3d force = Vector3d::Zero();
  Vector3d torque = Vector3d::Zero();

  Vector6d ToVector() const {
    Vector6d v;
    v << force, torque;
    return v;
  }
};

struct Cuboid {
  Vector3d dims = Vector3d::Ones();
};

// Cylinder with its axis along the local z axis, centred at the local origin.
struct Cylinder {
  double radius = 1.0;
  double height = 1.0;
};

// Negative density carves a hole out of an enclosing solid.
struct PrimitiveShape {
  std::variant<Cuboid, Cylinder> shape;
  double density = 0.0;
  RigidTransform pose;

  double Volume() const;
  // Signed inertial params expressed in the object frame.
  InertialParams Params() const;
  // Point-membership test in the object frame (used by numeric oracles).
  bool Contains(const Vector3d& p_object) const;
};

struct CompositeObject {
  std::string label;
  std::vector<PrimitiveShape> primitives;
  // Pose of the object frame relative to the end-effector frame.
  RigidTransform grasp_pose;
};

struct ConsistencyReport {
  bool mass_nonneg = true;
  Vector3d inertia_eigs = Vector3d::Zero();  // ascending, COM frame
  bool psd_ok = true;
  bool triangle_ok = true;
  int violation_count = 0;  // triangle violations when batched

  bool AllOk() const { return mass_nonneg && psd_ok && triangle_ok; }
};

// 6x10 regressor so that RegressorMatrix(kin) * phi = [f; tau], the
// Newton-Euler wrench about the body-frame origin.
Matrix6x10 RegressorMatrix(const BodyKinematics& kin);

// Throws kNonPositiveMass when the signed primitive masses sum to <= 0.
InertialParams CompositeInertia(const CompositeObject& object);

ConsistencyReport ConsistencyCheck(const InertialParams& params);
// Triangle test on an explicit principal-moment triple.
bool TriangleInequalityHolds(double i1, double i2, double i3);

// Batched audit; violation_count counts triangle failures, the flags are the
// conjunction over the batch.
ConsistencyReport ConsistencyAudit(std::span<const InertialParams> batch);

// Re-expresses params given in frame B in frame A, where `pose` maps B
// coordinates into A coordinates.
InertialParams TransformParams(const InertialParams& params,
                               const RigidTransform& pose);

// 7-vector [m, cx, cy, cz, Ixx, Iyy, Izz] with the diagonal of the COM-frame
// inertia; the estimator's target layout.
Vector7d TargetVector(const InertialParams& params);

Matrix3d Skew(const Vector3d& v);
Matrix3d AxisAngle(const Vector3d& axis, double angle);

}  // namespace inertia_id

#endif  // INERTIA_ID_RIGIDBODY_H_
