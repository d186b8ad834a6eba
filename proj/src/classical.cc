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

#include "inertia_id/classical.h"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <random>

#include "inertia_id/signal.h"

namespace inertia_id {

std::vector<BodyKinematics> EndEffectorKinematics(const RolloutRecord& record,
                                                  const RobotModel& model, double cutoff_hz) {
  const Eigen::Index n = static_cast<Eigen::Index>(record.size());
  if (n < 5) throw Error(ErrorCode::kTooShort, "need at least 5 samples");
  Eigen::MatrixXd q(n, 4), qd(n, 4);
  for (Eigen::Index k = 0; k < n; ++k) {
    q.row(k) = record.samples[k].q.transpose();
    qd.row(k) = record.samples[k].qdot.transpose();
  }
  const Biquad lp = ButterworthLowpass(cutoff_hz, 1.0 / record.dt);
  q = FiltFilt(lp, q);
  qd = FiltFilt(lp, qd);
  const Eigen::MatrixXd qdd = CentralDifference(qd, record.dt);

  std::vector<BodyKinematics> out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vector4d qk = q.row(k).transpose();
    const auto frames = ForwardKinematics(model, qk);
    Vector3d w = Vector3d::Zero();
    Vector3d dw = Vector3d::Zero();
    Vector3d acc = Vector3d::Zero();  // base joint origin is fixed
    Matrix3d parent = Matrix3d::Identity();
    for (int i = 0; i < kNumJoints; ++i) {
      const Vector3d z = parent * model.links[i].axis;
      const Vector3d wq = z * qd(k, i);
      dw += z * qdd(k, i) + w.cross(wq);
      w += wq;
      const Vector3d& o = frames[i].origin;
      const Vector3d& o_next = frames[i + 1].origin;
      const Vector3d d = o_next - o;
      acc += dw.cross(d) + w.cross(w.cross(d));
      parent = frames[i].rotation;
    }
    const Matrix3d rt = frames[kNumJoints].rotation.transpose();
    out[k].lin_acc = rt * (acc - model.gravity);
    out[k].ang_vel = rt * w;
    out[k].ang_acc = rt * dw;
  }
  return out;
}

StackedRegression StackFromRollout(const RolloutRecord& record, const RobotModel& model,
                                   const InertialParams& payload_ee,
                                   const StackOptions& options) {
  const auto kin = EndEffectorKinematics(record, model, options.cutoff_hz);
  const Eigen::Index n = static_cast<Eigen::Index>(kin.size());
  StackedRegression s;
  s.y.resize(6 * n, 10);
  s.w.resize(6 * n);
  const Vector10d phi = payload_ee.ToVector();
  std::mt19937_64 rng(options.noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Matrix6x10 yk = RegressorMatrix(kin[k]);
    s.y.middleRows<6>(6 * k) = yk;
    Vector6d wk = yk * phi;
    for (int c = 0; c < 6; ++c) {
      const double sd = c < 3 ? options.noise.force_std : options.noise.torque_std;
      if (sd > 0.0) wk(c) += sd * gauss(rng);
    }
    s.w.segment<6>(6 * k) = wk;
  }
  return s;
}

namespace {

struct SolveResult {
  Vector10d phi;
  int rank;
};

SolveResult SolveLeastSquares(const Eigen::MatrixXd& y, const Eigen::VectorXd& w) {
  if (y.rows() != w.rows() || y.cols() != 10) {
    throw Error(ErrorCode::kShapeMismatch, "stacked regressor must be 6N x 10");
  }
  if (y.rows() < 10) throw Error(ErrorCode::kRankDeficient, "fewer rows than parameters");
  // Equilibrate columns so the rank test is scale-free across mass, moment
  // and inertia columns.
  Eigen::VectorXd scale = y.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < scale.size(); ++c) {
    if (scale(c) == 0.0) throw Error(ErrorCode::kRankDeficient, "regressor column is zero");
  }
  const Eigen::MatrixXd ys = y * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ys);
  qr.setThreshold(1e-10);
  SolveResult r;
  r.rank = static_cast<int>(qr.rank());
  if (r.rank < 10) {
    throw Error(ErrorCode::kRankDeficient,
                "regressor rank " + std::to_string(r.rank) + " < 10; excitation too poor");
  }
  r.phi = qr.solve(w).cwiseQuotient(scale);
  return r;
}

EstimationReport MakeReport(const SolveResult& r, double seconds) {
  EstimationReport rep;
  rep.phi_vector = r.phi;
  rep.phi_hat = InertialParams::FromVector(r.phi);
  rep.consistency = ConsistencyCheck(rep.phi_hat);
  rep.rank = r.rank;
  rep.wall_time = seconds;
  return rep;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

EstimationReport OlsEstimate(const StackedRegression& s) {
  const auto start = std::chrono::steady_clock::now();
  const SolveResult r = SolveLeastSquares(s.y, s.w);
  return MakeReport(r, Seconds(start));
}

EstimationReport WlsEstimate(const StackedRegression& s) {
  const auto start = std::chrono::steady_clock::now();
  Eigen::VectorXd weights = s.channel_weights;
  if (weights.size() == 0) {
    const SolveResult pre = SolveLeastSquares(s.y, s.w);
    const Eigen::VectorXd resid = s.y * pre.phi - s.w;
    const Eigen::Index n = s.num_samples();
    weights.resize(s.w.size());
    for (int c = 0; c < 6; ++c) {
      double var = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) var += resid(6 * k + c) * resid(6 * k + c);
      var /= static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
      // Guard exact fits: a zero residual channel gets a large finite weight.
      const double wgt = 1.0 / std::max(var, 1e-24);
      for (Eigen::Index k = 0; k < n; ++k) weights(6 * k + c) = wgt;
    }
  }
  if (weights.size() != s.w.size()) {
    throw Error(ErrorCode::kShapeMismatch, "channel_weights must have 6N entries");
  }
  if ((weights.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "channel weights must be positive");
  }
  const Eigen::VectorXd root = weights.cwiseSqrt();
  const SolveResult r = SolveLeastSquares(root.asDiagonal() * s.y, root.cwiseProduct(s.w));
  return MakeReport(r, Seconds(start));
}

GroupErrors EvaluateEstimate(const Vector7d& y_hat, const Vector7d& y_true,
                             const Vector7d& y_scale) {
  if ((y_scale.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "y_scale must be positive");
  }
  const Vector7d abs_err = (y_hat - y_true).cwiseAbs();
  const Vector7d norm_err = abs_err.cwiseQuotient(y_scale);
  GroupErrors g;
  g.mae = {abs_err(0), abs_err.segment<3>(1).mean(), abs_err.segment<3>(4).mean()};
  g.nmae = {norm_err(0), norm_err.segment<3>(1).mean(), norm_err.segment<3>(4).mean()};
  return g;
}

GroupErrors EvaluateEstimate(const InertialParams& phi_hat, const InertialParams& phi_true,
                             const Vector7d& y_scale) {
  return EvaluateEstimate(TargetVector(phi_hat), TargetVector(phi_true), y_scale);
}

GroupErrors MeanErrors(const std::vector<GroupErrors>& errors) {
  GroupErrors mean;
  if (errors.empty()) return mean;
  for (const auto& e : errors) {
    for (int g = 0; g < 3; ++g) {
      mean.mae[g] += e.mae[g];
      mean.nmae[g] += e.nmae[g];
    }
  }
  for (int g = 0; g < 3; ++g) {
    mean.mae[g] /= static_cast<double>(errors.size());
    mean.nmae[g] /= static_cast<double>(errors.size());
  }
  return mean;
}

nlohmann::json ToJson(const GroupErrors& e) {
  return {{"mae", {{"mass", e.mae[0]}, {"com", e.mae[1]}, {"inertia", e.mae[2]}}},
          {"nmae", {{"mass", e.nmae[0]}, {"com", e.nmae[1]}, {"inertia", e.nmae[2]}}}};
}

nlohmann::json ToJson(const EstimationReport& r) {
  const ConsistencyReport& c = r.consistency;
  return {{"phi", std::vector<double>(r.phi_vector.data(), r.phi_vector.data() + 10)},
          {"rank", r.rank},
          {"wall_time_s", r.wall_time},
          {"consistency",
           {{"mass_nonneg", c.mass_nonneg},
            {"psd_ok", c.psd_ok},
            {"triangle_ok", c.triangle_ok},
            {"inertia_eigs", {c.inertia_eigs(0), c.inertia_eigs(1), c.inertia_eigs(2)}}}},
          {"errors", ToJson(r.errors)}};
}

}  // namespace inertia_id
