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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "inertia_id/object_catalog.h"
#include "test_util.h"

namespace inertia_id {
namespace {

TEST(ChirpTest, WindowZerosAndPeak) {
  for (const ChirpConfig& cfg : {DefaultChirpX(), DefaultChirpY(), ChirpFromMillimetres(7, 2, 13, 0.8)}) {
    const auto x = ChirpSignal(cfg, /*include_endpoint=*/true);
    EXPECT_EQ(x.front(), 0.0);
    EXPECT_NEAR(x.back(), 0.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(HannWindow(0.25, 0.5), 1.0);
}

TEST(ChirpTest, HannSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int i = 0; i < 1000; ++i) {
    const double t = u(rng);
    EXPECT_NEAR(HannWindow(t, 0.5), HannWindow(0.5 - t, 0.5), 1e-12);
  }
}

TEST(ChirpTest, BoundedByAmplitude) {
  for (const ChirpConfig& cfg : {DefaultChirpX(), DefaultChirpY()}) {
    for (double v : ChirpSignal(cfg, true)) EXPECT_LE(std::abs(v), std::abs(cfg.amplitude));
  }
}

TEST(ChirpTest, FrequencySweepsLinearly) {
  const ChirpConfig cfg = DefaultChirpX();
  EXPECT_DOUBLE_EQ(ChirpFrequency(cfg, 0.0), 5.0);
  EXPECT_DOUBLE_EQ(ChirpFrequency(cfg, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(ChirpFrequency(cfg, 0.25), 3.0);
}

// Instantaneous frequency from the spacing of successive zero crossings.
std::vector<double> ZeroCrossingFrequencies(const ChirpConfig& cfg) {
  const auto x = ChirpSignal(cfg);
  std::vector<double> crossings;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    if (x[k] == 0.0 || (x[k] > 0.0) != (x[k + 1] > 0.0)) {
      // Linear interpolation between samples k and k+1.
      const double frac = x[k] / (x[k] - x[k + 1]);
      crossings.push_back((static_cast<double>(k) + frac) * cfg.dt);
    }
  }
  std::vector<double> freqs;
  for (std::size_t i = 1; i < crossings.size(); ++i) {
    freqs.push_back(0.5 / (crossings[i] - crossings[i - 1]));
  }
  return freqs;
}

TEST(ChirpTest, ZeroCrossingFrequencyDecreases) {
  ChirpConfig cfg = DefaultChirpX();
  cfg.dt = 1e-5;
  auto f = ZeroCrossingFrequencies(cfg);
  ASSERT_GE(f.size(), 2u);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LT(f[i], f[i - 1]);
  EXPECT_LT(f.front(), 5.0);
  EXPECT_GT(f.back(), 1.0);

  // Over a longer horizon the estimates span nearly the whole sweep.
  cfg.t_total = 5.0;
  f = ZeroCrossingFrequencies(cfg);
  ASSERT_GE(f.size(), 20u);
  for (std::size_t i = 1; i < f.size(); ++i) EXPECT_LT(f[i], f[i - 1]);
  EXPECT_NEAR(f.front(), 5.0, 0.4);
  EXPECT_NEAR(f.back(), 1.0, 0.2);
}

TEST(ChirpTest, InvalidConfigs) {
  EXPECT_THROW(ChirpSignal(ChirpFromMillimetres(1.0, 5.0, 1.0)), Error);
  EXPECT_THROW(ChirpSignal(ChirpFromMillimetres(5.0, 0.0, 1.0)), Error);
  EXPECT_THROW(ChirpSignal(ChirpFromMillimetres(5.0, 1.0, 1.0, 0.0)), Error);
}

TEST(TaskTrajectoryTest, DefaultShape) {
  const TaskTrajectory t = BuildTaskTrajectory(DefaultChirpX(), DefaultChirpY());
  ASSERT_EQ(t.size(), 500u);
  EXPECT_TRUE(t.targets[0].isZero(0.0));
  double max_x = 0.0, max_y = 0.0;
  for (const auto& p : t.targets) {
    EXPECT_EQ(p.z(), 0.0);
    max_x = std::max(max_x, std::abs(p.x()));
    max_y = std::max(max_y, std::abs(p.y()));
  }
  EXPECT_LE(max_x, 0.005);
  EXPECT_LE(max_y, 0.080);
  EXPECT_GT(max_y, 0.04);
}

TEST(TaskTrajectoryTest, ZeroAmplitudeIsZero) {
  const TaskTrajectory t =
      BuildTaskTrajectory(ChirpFromMillimetres(5, 1, 0), ChirpFromMillimetres(3, 1, 0));
  for (const auto& p : t.targets) EXPECT_TRUE(p.isZero(0.0));
}

TEST(TaskTrajectoryTest, MismatchedConfigs) {
  ChirpConfig y = DefaultChirpY();
  y.dt = 2e-3;
  ExpectErrorCode(ErrorCode::kConfigMismatch, [&] { BuildTaskTrajectory(DefaultChirpX(), y); });
  y = DefaultChirpY();
  y.t_total = 0.6;
  ExpectErrorCode(ErrorCode::kConfigMismatch, [&] { BuildTaskTrajectory(DefaultChirpX(), y); });
}

TEST(TaskTrajectoryTest, CsvRoundTrip) {
  const TaskTrajectory t = BuildTaskTrajectory(DefaultChirpX(), DefaultChirpY());
  const auto path = std::filesystem::temp_directory_path() / "iid_task_traj.csv";
  WriteTaskTrajectoryCsv(path.string(), t);
  const TaskTrajectory r = ReadTaskTrajectoryCsv(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(r.size(), t.size());
  EXPECT_NEAR(r.dt, t.dt, 1e-15);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(r.targets[k], t.targets[k]);
}

TEST(ChirpConfigTest, JsonUsesMillimetres) {
  const auto j = ToJson(DefaultChirpY());
  EXPECT_DOUBLE_EQ(j.at("amplitude_mm").get<double>(), 80.0);
  const ChirpConfig c = ChirpConfigFromJson(j);
  EXPECT_DOUBLE_EQ(c.amplitude, 0.08);
  EXPECT_DOUBLE_EQ(c.h_freq, 3.0);
}

Eigen::Matrix<double, 3, 4> FdJacobian(const RobotModel& m, const Vector4d& q) {
  const double h = 1e-6;
  Eigen::Matrix<double, 3, 4> j;
  for (int i = 0; i < 4; ++i) {
    Vector4d dq = Vector4d::Zero();
    dq(i) = h;
    j.col(i) = (EndEffectorPosition(m, q + dq) - EndEffectorPosition(m, q - dq)) / (2 * h);
  }
  return j;
}

TEST(JacobianTest, MatchesFiniteDifferences) {
  const RobotModel m = RobotModel::Default();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.14, 3.14);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector4d q(u(rng), u(rng), u(rng), u(rng));
    EXPECT_LT((PositionJacobian(m, q) - FdJacobian(m, q)).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(JacobianTest, AxisThroughEndEffectorGivesZeroColumn) {
  // With the first joint turned into a yaw axis, the stretched arm hangs
  // along it and that joint cannot move the end effector.
  RobotModel m = RobotModel::Default();
  m.links[0].axis = Vector3d::UnitZ();
  const auto j = PositionJacobian(m, Vector4d::Zero());
  EXPECT_LT(j.col(0).norm(), 1e-15);
  EXPECT_GT(j.col(1).norm(), 0.1);
}

TEST(JacobianTest, ScalesWithGeometry) {
  const RobotModel m = RobotModel::Default();
  RobotModel big = m;
  for (auto& l : big.links) l.offset *= 2.0;
  big.ee_offset *= 2.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector4d q(u(rng), u(rng), u(rng), u(rng));
    EXPECT_LT((PositionJacobian(big, q) - 2.0 * PositionJacobian(m, q)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DlsTest, ZeroErrorIsIdentity) {
  const RobotModel m = RobotModel::Default();
  const Vector4d q(0.3, -0.2, 0.5, 0.1);
  EXPECT_EQ(DlsIkStep(m, q, EndEffectorPosition(m, q), IkConfig()), q);
}

TEST(DlsTest, ConvergesOnReachableTargets) {
  const RobotModel m = RobotModel::Default();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  int converged = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const Vector4d q_goal = m.hold_pose + Vector4d(u(rng), u(rng), u(rng), u(rng));
    const IkResult r = SolveIk(m, m.hold_pose, EndEffectorPosition(m, q_goal), IkConfig());
    if (r.converged) {
      ++converged;
      EXPECT_LE(r.error, 1e-4);
    }
  }
  EXPECT_GE(converged, 0.95 * trials);
}

TEST(DlsTest, BoundedAtSingularity) {
  // q = 0 stretches the arm straight down; push the target further out.
  const RobotModel m = RobotModel::Default();
  const Vector4d q = Vector4d::Zero();
  const Vector3d p = EndEffectorPosition(m, q);
  for (double lambda : {0.05, 0.01, 1e-3}) {
    IkConfig ik;
    ik.damping = lambda;
    for (double reach : {0.1, 10.0, 1e6}) {
      const Vector3d target = p + reach * Vector3d(0, 0, -1);
      const Vector4d step = DlsIkStep(m, q, target, ik) - q;
      ASSERT_TRUE(step.allFinite());
      EXPECT_LE(step.norm(), ik.step_gain * reach / (2.0 * lambda) * (1 + 1e-9));
    }
  }
}

TEST(DlsTest, SmallStepsReduceError) {
  const RobotModel m = RobotModel::Default();
  IkConfig ik;
  ik.step_gain = 0.1;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-3.0, 3.0), d(-0.3, 0.3);
  int trials = 0, reduced = 0;
  while (trials < 1000) {
    const Vector4d q(u(rng), u(rng), u(rng), u(rng));
    Eigen::JacobiSVD<Eigen::Matrix<double, 3, 4>> svd(PositionJacobian(m, q));
    if (svd.singularValues()(2) < 0.02) continue;  // full-rank trials only
    const Vector3d target =
        EndEffectorPosition(m, q + Vector4d(d(rng), d(rng), d(rng), d(rng)));
    const double e0 = (target - EndEffectorPosition(m, q)).norm();
    const double e1 = (target - EndEffectorPosition(m, DlsIkStep(m, q, target, ik))).norm();
    ++trials;
    if (e1 < e0) ++reduced;
  }
  EXPECT_GE(reduced, 990);
}

TEST(DlsTest, ContinuousInDamping) {
  const RobotModel m = RobotModel::Default();
  const Vector4d q(0.2, 0.1, -0.4, 0.3);
  const Vector3d target = EndEffectorPosition(m, q) + Vector3d(0.01, -0.02, 0.005);
  IkConfig a, b;
  a.damping = 0.05;
  b.damping = 0.05 + 1e-8;
  EXPECT_LT((DlsIkStep(m, q, target, a) - DlsIkStep(m, q, target, b)).norm(), 1e-6);
}

TEST(ExcitationTest, StartsAtHoldPose) {
  const RobotModel m = RobotModel::Default();
  const JointTrajectory j = DefaultExcitation(m);
  ASSERT_EQ(j.size(), 500u);
  EXPECT_LT((j.q[0] - m.hold_pose).norm(), 1e-12);
}

TEST(ExcitationTest, NominalArmTracksDefaultChirp) {
  const RobotModel m = RobotModel::Default();
  const JointTrajectory j = DefaultExcitation(m);
  const RolloutRecord r = Rollout({m, {}}, SimConfig(), j);
  double worst = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    worst = std::max(worst, (r.samples[k].q - j.q[k]).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 0.05);
  // And the command actually moves the end effector by the intended amount.
  double max_y = 0.0;
  const Vector3d p0 = EndEffectorPosition(m, m.hold_pose);
  for (const auto& q : j.q) max_y = std::max(max_y, std::abs(EndEffectorPosition(m, q).y() - p0.y()));
  EXPECT_GT(max_y, 0.03);
}

}  // namespace
}  // namespace inertia_id
