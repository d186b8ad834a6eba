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

#include "inertia_id/rigidbody.h"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace inertia_id {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonPositiveMass: return "NonPositiveMass";
    case ErrorCode::kInvalidRotation: return "InvalidRotation";
    case ErrorCode::kSingularMassMatrix: return "SingularMassMatrix";
    case ErrorCode::kDiverged: return "Diverged";
    case ErrorCode::kInvalidPerturbation: return "InvalidPerturbation";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kIllConditioned: return "IllConditioned";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Matrix3d Skew(const Vector3d& v) {
  Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

Matrix3d AxisAngle(const Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

RigidTransform RigidTransform::Inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

void ValidateRotation(const Matrix3d& rotation, double tol) {
  const double ortho_err =
      (rotation.transpose() * rotation - Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!std::isfinite(ortho_err) || ortho_err > tol) {
    throw Error(ErrorCode::kInvalidRotation,
                "rotation is not orthonormal (error " + std::to_string(ortho_err) + ")");
  }
  if (rotation.determinant() < 0.0) {
    throw Error(ErrorCode::kInvalidRotation, "rotation has determinant -1");
  }
}

namespace {

// |c|^2 I - c c^T, the point-mass inertia shape for a unit mass at c.
Matrix3d PointInertia(const Vector3d& c) {
  return c.squaredNorm() * Matrix3d::Identity() - c * c.transpose();
}

}  // namespace

Vector10d InertialParams::ToVector() const {
  Vector10d phi;
  const Vector3d h = mass * com;
  phi << mass, h.x(), h.y(), h.z(), inertia(0, 0), inertia(0, 1),
      inertia(0, 2), inertia(1, 1), inertia(1, 2), inertia(2, 2);
  return phi;
}

InertialParams InertialParams::FromVector(const Vector10d& phi) {
  InertialParams p;
  p.mass = phi(0);
  if (phi(0) != 0.0) p.com = phi.segment<3>(1) / phi(0);
  p.inertia << phi(4), phi(5), phi(6),
               phi(5), phi(7), phi(8),
               phi(6), phi(8), phi(9);
  return p;
}

InertialParams InertialParams::FromComInertia(double mass, const Vector3d& com,
                                              const Matrix3d& inertia_about_com) {
  InertialParams p;
  p.mass = mass;
  p.com = com;
  p.inertia = inertia_about_com + mass * PointInertia(com);
  return p;
}

Matrix3d InertialParams::InertiaAboutCom() const {
  return inertia - mass * PointInertia(com);
}

InertialParams operator+(const InertialParams& a, const InertialParams& b) {
  return InertialParams::FromVector(a.ToVector() + b.ToVector());
}

Matrix6x10 RegressorMatrix(const BodyKinematics& kin) {
  const Vector3d& a = kin.lin_acc;
  const Vector3d& w = kin.ang_vel;
  const Vector3d& dw = kin.ang_acc;

  // L(v) maps [Ixx, Ixy, Ixz, Iyy, Iyz, Izz] to I * v.
  auto inertia_map = [](const Vector3d& v) {
    Eigen::Matrix<double, 3, 6> l;
    l << v.x(), v.y(), v.z(), 0.0, 0.0, 0.0,
         0.0, v.x(), 0.0, v.y(), v.z(), 0.0,
         0.0, 0.0, v.x(), 0.0, v.y(), v.z();
    return l;
  };

  const Matrix3d skew_w = Skew(w);
  Matrix6x10 y = Matrix6x10::Zero();
  y.block<3, 1>(0, 0) = a;
  y.block<3, 3>(0, 1) = Skew(dw) + skew_w * skew_w;
  y.block<3, 3>(3, 1) = -Skew(a);
  y.block<3, 6>(3, 4) = inertia_map(dw) + skew_w * inertia_map(w);
  return y;
}

double PrimitiveShape::Volume() const {
  if (const auto* c = std::get_if<Cuboid>(&shape)) return c->dims.prod();
  const auto& cyl = std::get<Cylinder>(shape);
  return std::numbers::pi * cyl.radius * cyl.radius * cyl.height;
}

InertialParams PrimitiveShape::Params() const {
  const double m = density * Volume();
  Matrix3d ic = Matrix3d::Zero();
  if (const auto* c = std::get_if<Cuboid>(&shape)) {
    if ((c->dims.array() <= 0.0).any()) {
      throw Error(ErrorCode::kInvalidArgument, "cuboid dims must be positive");
    }
    const Vector3d d2 = c->dims.cwiseAbs2();
    ic.diagonal() << d2.y() + d2.z(), d2.x() + d2.z(), d2.x() + d2.y();
    ic *= m / 12.0;
  } else {
    const auto& cyl = std::get<Cylinder>(shape);
    if (cyl.radius <= 0.0 || cyl.height <= 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "cylinder radius/height must be positive");
    }
    const double r2 = cyl.radius * cyl.radius;
    const double h2 = cyl.height * cyl.height;
    ic.diagonal() << m * (3.0 * r2 + h2) / 12.0, m * (3.0 * r2 + h2) / 12.0,
        0.5 * m * r2;
  }
  return TransformParams(InertialParams::FromComInertia(m, Vector3d::Zero(), ic), pose);
}

bool PrimitiveShape::Contains(const Vector3d& p_object) const {
  const Vector3d p = pose.rotation.transpose() * (p_object - pose.translation);
  if (const auto* c = std::get_if<Cuboid>(&shape)) {
    return (p.cwiseAbs().array() <= 0.5 * c->dims.array()).all();
  }
  const auto& cyl = std::get<Cylinder>(shape);
  return std::abs(p.z()) <= 0.5 * cyl.height &&
         p.x() * p.x() + p.y() * p.y() <= cyl.radius * cyl.radius;
}

InertialParams CompositeInertia(const CompositeObject& object) {
  Vector10d phi = Vector10d::Zero();
  for (const auto& prim : object.primitives) {
    ValidateRotation(prim.pose.rotation);
    phi += prim.Params().ToVector();
  }
  if (!(phi(0) > 0.0)) {
    throw Error(ErrorCode::kNonPositiveMass,
                "object '" + object.label + "' has signed mass " + std::to_string(phi(0)));
  }
  return InertialParams::FromVector(phi);
}

bool TriangleInequalityHolds(double i1, double i2, double i3) {
  const double sum = i1 + i2 + i3;
  const double largest = std::max({i1, i2, i3});
  return sum - 2.0 * largest >= -1e-12;
}

ConsistencyReport ConsistencyCheck(const InertialParams& params) {
  ConsistencyReport report;
  report.mass_nonneg = params.mass >= 0.0;
  const Matrix3d ic = params.InertiaAboutCom();
  Eigen::SelfAdjointEigenSolver<Matrix3d> eig(0.5 * (ic + ic.transpose()),
                                              Eigen::EigenvaluesOnly);
  report.inertia_eigs = eig.eigenvalues();
  const Vector3d& s = report.inertia_eigs;
  report.psd_ok = (s.array() >= 0.0).all();
  report.triangle_ok = TriangleInequalityHolds(s(0), s(1), s(2));
  report.violation_count = report.triangle_ok ? 0 : 1;
  return report;
}

ConsistencyReport ConsistencyAudit(std::span<const InertialParams> batch) {
  ConsistencyReport total;
  for (const auto& p : batch) {
    const ConsistencyReport r = ConsistencyCheck(p);
    total.mass_nonneg = total.mass_nonneg && r.mass_nonneg;
    total.psd_ok = total.psd_ok && r.psd_ok;
    total.triangle_ok = total.triangle_ok && r.triangle_ok;
    total.violation_count += r.violation_count;
  }
  return total;
}

InertialParams TransformParams(const InertialParams& params,
                               const RigidTransform& pose) {
  ValidateRotation(pose.rotation);
  const Matrix3d& r = pose.rotation;
  const Matrix3d ic_rotated = r * params.InertiaAboutCom() * r.transpose();
  return InertialParams::FromComInertia(params.mass, pose.Apply(params.com), ic_rotated);
}

Vector7d TargetVector(const InertialParams& params) {
  Vector7d y;
  const Matrix3d ic = params.InertiaAboutCom();
  y << params.mass, params.com, ic(0, 0), ic(1, 1), ic(2, 2);
  return y;
}

}  // namespace inertia_id
