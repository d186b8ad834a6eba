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

#include "inertia_id/sysid.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "inertia_id/excitation.h"
#include "test_util.h"

namespace inertia_id {
namespace {

RolloutRecord ConstantRecord(const Vector4d& q, std::size_t n, double dt = 1e-3) {
  RolloutRecord r;
  r.dt = dt;
  r.samples.resize(n);
  for (auto& s : r.samples) s.q = q;
  return r;
}

TEST(TrajectoryMseTest, Formulas) {
  const RolloutRecord a = ConstantRecord(Vector4d(0.1, 0.2, 0.3, 0.4), 50);
  EXPECT_EQ(TrajectoryMse(a, a), 0.0);
  const RolloutRecord b = ConstantRecord(Vector4d(0.2, 0.3, 0.4, 0.5), 50);
  EXPECT_NEAR(TrajectoryMse(a, b), 0.01, 1e-15);
  EXPECT_EQ(TrajectoryMse(a, b), TrajectoryMse(b, a));
  // Only one joint off by 0.2: 0.04 / 4.
  const RolloutRecord c = ConstantRecord(Vector4d(0.1, 0.2, 0.3, 0.6), 50);
  EXPECT_NEAR(TrajectoryMse(a, c), 0.01, 1e-15);
}

TEST(TrajectoryMseTest, LengthMismatch) {
  const RolloutRecord a = ConstantRecord(Vector4d::Zero(), 50);
  ExpectErrorCode(ErrorCode::kLengthMismatch, [&] { TrajectoryMse(a, ConstantRecord(Vector4d::Zero(), 49)); });
  ExpectErrorCode(ErrorCode::kLengthMismatch,
                  [&] { TrajectoryMse(a, ConstantRecord(Vector4d::Zero(), 50, 2e-3)); });
}

TEST(SysIdParamsTest, VectorAndJsonRoundTrip) {
  SysIdParams p{Vector4d(0.1, 0.2, 0.3, 0.4), Vector4d(1.0, 2.0, 3.0, 4.0)};
  const SysIdParams v = SysIdParams::FromVector(p.ToVector());
  EXPECT_EQ(v.damping, p.damping);
  EXPECT_EQ(v.link_mass, p.link_mass);
  const SysIdParams j = SysIdParamsFromJson(ToJson(p));
  EXPECT_EQ(j.damping, p.damping);
  EXPECT_EQ(j.link_mass, p.link_mass);
  EXPECT_THROW(SysIdParams::FromVector(Eigen::VectorXd::Zero(7)), Error);
}

TEST(ApplyZetaTest, ScalesLinksAndKeepsCom) {
  const RobotModel m = RobotModel::Default();
  SysIdParams z = NominalZeta(m);
  EXPECT_EQ(z.link_mass, m.LinkMasses());
  z.damping = Vector4d(0.2, 0.1, 0.0, 0.3);
  z.link_mass *= 1.3;
  const RobotModel out = ApplyZeta(m, z);
  EXPECT_EQ(out.damping, z.damping);
  for (int i = 0; i < 4; ++i) {
    const auto& a = m.links[i].inertial;
    const auto& b = out.links[i].inertial;
    EXPECT_NEAR(b.mass, z.link_mass(i), 1e-12);
    EXPECT_LT((b.com - a.com).norm(), 1e-12);
    EXPECT_LT((b.inertia - 1.3 * a.inertia).norm(), 1e-12);
  }
  z.link_mass(2) = 0.0;
  EXPECT_THROW(ApplyZeta(m, z), Error);
}

TEST(PsoBoundsTest, BracketNominal) {
  const RobotModel m = RobotModel::Default();
  const PsoConfig c = DefaultSysIdPsoConfig(m, 7);
  const Eigen::VectorXd z = NominalZeta(m).ToVector();
  EXPECT_TRUE((z.array() >= c.lo.array()).all() && (z.array() <= c.hi.array()).all());
  EXPECT_EQ(c.hi.head<4>(), Eigen::VectorXd::Constant(4, 0.5));
  EXPECT_LT((c.lo.tail<4>() - 0.5 * m.LinkMasses()).norm(), 1e-15);
  EXPECT_EQ(*c.initial, z);
  EXPECT_EQ(c.seed, 7u);
}

class SysIdTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    nominal_ = new RobotModel(RobotModel::Default());
    commands_ = new std::vector<JointTrajectory>(SysIdExcitations(*nominal_));
  }
  static void TearDownTestSuite() {
    delete nominal_;
    delete commands_;
  }

  static Perturbation ParametricOnly() {
    Perturbation p = Perturbation::DefaultSurrogate();
    p.friction = FrictionModel{};
    return p;
  }

  static RobotModel* nominal_;
  static std::vector<JointTrajectory>* commands_;
};

RobotModel* SysIdTest::nominal_ = nullptr;
std::vector<JointTrajectory>* SysIdTest::commands_ = nullptr;

TEST_F(SysIdTest, ExcitationsAreReplayable) {
  ASSERT_EQ(commands_->size(), 5u);
  const World w{*nominal_, {}};
  for (const auto& c : *commands_) {
    ASSERT_EQ(c.size(), 500u);
    const RolloutRecord r = Rollout(w, SimConfig(), c);
    for (std::size_t k = 0; k < r.size(); ++k) {
      ASSERT_LT((r.samples[k].q - c.q[k]).cwiseAbs().maxCoeff(), 0.05);
    }
  }
}

TEST_F(SysIdTest, ObjectiveInvariantToRolloutOrder) {
  const TargetDataset data =
      CollectTargetDataset(MakePseudoReal(*nominal_, Perturbation::DefaultSurrogate()), SimConfig(), *commands_);
  TargetDataset shuffled = data;
  std::reverse(shuffled.commands.begin(), shuffled.commands.end());
  std::reverse(shuffled.rollouts.begin(), shuffled.rollouts.end());
  std::swap(shuffled.commands[0], shuffled.commands[2]);
  std::swap(shuffled.rollouts[0], shuffled.rollouts[2]);
  const SysIdParams z = NominalZeta(*nominal_);
  const double a = SysIdObjective(*nominal_, SimConfig(), data, z);
  const double b = SysIdObjective(*nominal_, SimConfig(), shuffled, z);
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(a, b, 1e-15 * a);
}

TEST_F(SysIdTest, DivergentReplayScoresInfinity) {
  RobotModel stiff = *nominal_;
  stiff.kp *= 1000.0;
  stiff.torque_limit = 1e12;  // the clamp would otherwise tame the instability
  SimConfig cfg;
  cfg.dt = 1e-2;
  JointTrajectory cmd;
  cmd.dt = cfg.dt;
  cmd.q.assign(50, stiff.hold_pose);
  cmd.qdot.assign(50, Vector4d::Zero());
  cmd.q[10](0) += 0.5;
  TargetDataset data;
  data.commands = {cmd};
  data.rollouts = {ConstantRecord(stiff.hold_pose, 50, cfg.dt)};
  EXPECT_EQ(SysIdObjective(stiff, cfg, data, NominalZeta(stiff)), std::numeric_limits<double>::infinity());
}

TEST_F(SysIdTest, ZeroGapStaysAtNominal) {
  const TargetDataset data = CollectTargetDataset({*nominal_, {}}, SimConfig(), *commands_);
  PsoConfig pso = DefaultSysIdPsoConfig(*nominal_, 1);
  pso.swarm_size = 8;
  pso.max_iters = 5;
  const SysIdResult r = Identify(*nominal_, SimConfig(), data, pso);
  EXPECT_EQ(r.pre_mse, 0.0);
  EXPECT_LE(r.post_mse, r.pre_mse);
  EXPECT_EQ(r.zeta.ToVector(), NominalZeta(*nominal_).ToVector());
}

TEST_F(SysIdTest, SingleParticleAtRestReturnsInitial) {
  const TargetDataset data =
      CollectTargetDataset(MakePseudoReal(*nominal_, ParametricOnly()), SimConfig(), *commands_);
  PsoConfig pso = DefaultSysIdPsoConfig(*nominal_, 3);
  pso.swarm_size = 1;
  pso.velocity_init = 0.0;
  pso.max_iters = 4;
  const SysIdResult r = Identify(*nominal_, SimConfig(), data, pso);
  EXPECT_EQ(r.zeta.ToVector(), NominalZeta(*nominal_).ToVector());
  EXPECT_EQ(r.post_mse, r.pre_mse);
}

TEST_F(SysIdTest, RecoversPlantedParameters) {
  const Perturbation p = ParametricOnly();
  const TargetDataset data = CollectTargetDataset(MakePseudoReal(*nominal_, p), SimConfig(), *commands_);
  const SysIdResult r = Identify(*nominal_, SimConfig(), data, DefaultSysIdPsoConfig(*nominal_, 1));
  const SysIdParams truth{nominal_->damping + p.damping_offset,
                          nominal_->LinkMasses().cwiseProduct(p.mass_scale)};
  const Eigen::VectorXd rel =
      (r.zeta.ToVector() - truth.ToVector()).cwiseQuotient(truth.ToVector()).cwiseAbs();
  EXPECT_LE(rel.maxCoeff(), 0.05) << rel.transpose();
  EXPECT_LT(r.post_mse, 1e-4);
  EXPECT_LE(r.post_mse, 0.01 * r.pre_mse);
  for (std::size_t i = 1; i < r.pso.history.size(); ++i) {
    EXPECT_LE(r.pso.history[i], r.pso.history[i - 1]);
  }
}

TEST_F(SysIdTest, FrictionLeavesFloor) {
  const TargetDataset data = CollectTargetDataset(
      MakePseudoReal(*nominal_, Perturbation::DefaultSurrogate()), SimConfig(), *commands_);
  PsoConfig pso = DefaultSysIdPsoConfig(*nominal_, 2);
  pso.max_iters = 100;
  const SysIdResult r = Identify(*nominal_, SimConfig(), data, pso);
  EXPECT_LT(r.post_mse, r.pre_mse);
  // No damping and mass setting reproduces Coulomb friction.
  EXPECT_GT(r.post_mse, 0.01 * r.pre_mse);
}

TEST(SysIdIoTest, HistoryCsv) {
  const auto path = std::filesystem::temp_directory_path() / "iid_history.csv";
  WriteHistoryCsv(path.string(), {3.0, 2.0, 0.5});
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "iteration,best_value");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  EXPECT_EQ(rows, 3);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace inertia_id
