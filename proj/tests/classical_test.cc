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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "inertia_id/excitation.h"
#include "inertia_id/object_catalog.h"

namespace inertia_id {
namespace {

class ClassicalTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    model_ = new RobotModel(RobotModel::Default());
    traj_ = new JointTrajectory(DefaultExcitation(*model_));
    catalog_ = new std::vector<CompositeObject>(DefaultCatalog());
  }
  static void TearDownTestSuite() {
    delete model_;
    delete traj_;
    delete catalog_;
  }

  static StackedRegression Stack(const std::string& label, const StackOptions& opt = {}) {
    const InertialParams p = *PayloadInEeFrame(FindObject(*catalog_, label));
    const auto rec = Rollout({*model_, {}}, SimConfig(), *traj_, p);
    return StackFromRollout(rec, *model_, p, opt);
  }

  static RobotModel* model_;
  static JointTrajectory* traj_;
  static std::vector<CompositeObject>* catalog_;
};

RobotModel* ClassicalTest::model_ = nullptr;
JointTrajectory* ClassicalTest::traj_ = nullptr;
std::vector<CompositeObject>* ClassicalTest::catalog_ = nullptr;

TEST_F(ClassicalTest, KinematicsMatchFiniteDifferences) {
  // Smooth analytic joint motion; the oracle differentiates FK positions.
  RolloutRecord rec;
  const int n = 400;
  const double dt = 1e-3;
  rec.dt = dt;
  auto q_of = [](double t) {
    return Vector4d(0.3 * std::sin(6 * t), -0.5 + 0.2 * std::cos(4 * t), 0.4 * std::sin(3 * t),
                    -0.8 + 0.3 * std::sin(5 * t + 0.3));
  };
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    RolloutSample s;
    s.q = q_of(t);
    s.qdot = (q_of(t + 1e-6) - q_of(t - 1e-6)) / 2e-6;
    rec.samples.push_back(s);
  }
  const auto kin = EndEffectorKinematics(rec, *model_);
  const double h = 1e-4;
  for (int k = 100; k < 300; k += 25) {
    const double t = k * dt;
    const Vector3d p0 = EndEffectorPosition(*model_, q_of(t));
    const Vector3d acc = (EndEffectorPosition(*model_, q_of(t + h)) - 2 * p0 +
                          EndEffectorPosition(*model_, q_of(t - h))) / (h * h);
    const Matrix3d r = ForwardKinematics(*model_, q_of(t))[4].rotation;
    const Vector3d expected = r.transpose() * (acc - model_->gravity);
    EXPECT_LT((kin[k].lin_acc - expected).norm(), 1e-3 * expected.norm()) << k;
    // Angular velocity from the rotation derivative.
    const Matrix3d rdot = (ForwardKinematics(*model_, q_of(t + h))[4].rotation -
                           ForwardKinematics(*model_, q_of(t - h))[4].rotation) / (2 * h);
    const Matrix3d wskew = r.transpose() * rdot;
    const Vector3d w(wskew(2, 1), wskew(0, 2), wskew(1, 0));
    EXPECT_LT((kin[k].ang_vel - w).norm(), 1e-4 * (1 + w.norm()));
  }
}

TEST_F(ClassicalTest, TooShortRecord) {
  RolloutRecord rec;
  rec.samples.resize(4);
  try {
    EndEffectorKinematics(rec, *model_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST_F(ClassicalTest, StaticPosesRecoverMassAndMoment) {
  const InertialParams p = *PayloadInEeFrame(FindObject(*catalog_, "Corner"));
  StackedRegression all;
  std::vector<Eigen::MatrixXd> ys;
  std::vector<Eigen::VectorXd> ws;
  for (const Vector4d& pose : {Vector4d(-0.7, 0, 0, -0.8), Vector4d(0.2, 0.5, 0.3, 0.4),
                               Vector4d(-0.3, -0.6, 1.0, 0.9)}) {
    RolloutRecord rec;
    rec.samples.assign(20, RolloutSample{pose, Vector4d::Zero(), {}, {}});
    const auto s = StackFromRollout(rec, *model_, p);
    ys.push_back(s.y.leftCols(4));
    ws.push_back(s.w);
  }
  Eigen::MatrixXd y(60 * 6 / 2 * 2, 4);
  Eigen::VectorXd w(y.rows());
  for (int i = 0; i < 3; ++i) {
    y.middleRows(120 * i, 120) = ys[i];
    w.segment(120 * i, 120) = ws[i];
  }
  const Eigen::Vector4d est = y.colPivHouseholderQr().solve(w);
  const Vector10d truth = p.ToVector();
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(est(c), truth(c), 1e-12 * (1 + std::abs(truth(c))));
  // A single static pose leaves the inertia columns unexcited.
  RolloutRecord rec;
  rec.samples.assign(20, RolloutSample{model_->hold_pose, Vector4d::Zero(), {}, {}});
  try {
    OlsEstimate(StackFromRollout(rec, *model_, p));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
  }
}

TEST_F(ClassicalTest, ChirpIsFullRankWithAndWithoutNoise) {
  EXPECT_EQ(OlsEstimate(Stack("Hammer")).rank, 10);
  StackOptions noisy;
  noisy.noise = {0.01, 0.01, 3};
  EXPECT_EQ(OlsEstimate(Stack("Hammer", noisy)).rank, 10);
}

TEST_F(ClassicalTest, NoiselessRecoveryIsExact) {
  // Corner has no symmetry-zero component in the end-effector frame.
  const InertialParams truth = *PayloadInEeFrame(FindObject(*catalog_, "Corner"));
  const auto s = Stack("Corner");
  for (const auto& r : {OlsEstimate(s), WlsEstimate(s)}) {
    for (int c = 0; c < 10; ++c) {
      const double t = truth.ToVector()(c);
      ASSERT_GT(std::abs(t), 1e-9);
      EXPECT_LE(std::abs(r.phi_vector(c) - t), 1e-6 * std::abs(t)) << c;
    }
  }
}

TEST_F(ClassicalTest, MatchesNormalEquationsAndResidualIsOrthogonal) {
  StackOptions opt;
  opt.noise = {0.05, 0.05, 9};
  const auto s = Stack("Barbell", opt);
  const auto r = OlsEstimate(s);
  // Normal equations on the equilibrated system keep the oracle well posed.
  const Eigen::VectorXd d = s.y.colwise().norm().cwiseInverse().transpose();
  const Eigen::MatrixXd ys = s.y * d.asDiagonal();
  const Eigen::VectorXd oracle =
      d.asDiagonal() * (ys.transpose() * ys).ldlt().solve(ys.transpose() * s.w);
  EXPECT_LT((r.phi_vector - oracle).norm(), 1e-8 * oracle.norm());
  const Eigen::VectorXd g = s.y.transpose() * (s.y * r.phi_vector - s.w);
  EXPECT_LT(g.norm(), 1e-8 * s.y.norm() * s.w.norm());
  EXPECT_LT(r.wall_time, 0.05);
}

TEST_F(ClassicalTest, UniformWeightsReduceToOls) {
  StackOptions opt;
  opt.noise = {0.05, 0.05, 10};
  auto s = Stack("Tee", opt);
  const auto ols = OlsEstimate(s);
  s.channel_weights = Eigen::VectorXd::Ones(s.w.size());
  const auto wls = WlsEstimate(s);
  EXPECT_LT((wls.phi_vector - ols.phi_vector).cwiseAbs().maxCoeff(),
            1e-10 * ols.phi_vector.cwiseAbs().maxCoeff());
  s.channel_weights(0) = -1.0;
  EXPECT_THROW(WlsEstimate(s), Error);
}

TEST_F(ClassicalTest, FeasibleWlsHelpsUnderHeteroscedasticNoise) {
  // Torque channels 10x noisier than force channels. OLS error equals the
  // efficient estimator's error plus independent noise, so a per-trial win
  // rate near 0.5 + asin(rho)/pi (about 0.7 here) is the ceiling; the mean
  // error gap is the sharper check.
  const InertialParams truth = *PayloadInEeFrame(FindObject(*catalog_, "Half and Half"));
  const auto rec = Rollout({*model_, {}}, SimConfig(), *traj_, truth);
  int wins = 0;
  double ols_sum = 0.0;
  double wls_sum = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    StackOptions opt;
    opt.noise = {0.05, 0.5, static_cast<std::uint64_t>(100 + trial)};
    const auto s = StackFromRollout(rec, *model_, truth, opt);
    const double ols = std::abs(OlsEstimate(s).phi_hat.mass - truth.mass);
    const double wls = std::abs(WlsEstimate(s).phi_hat.mass - truth.mass);
    wins += wls <= ols;
    ols_sum += ols;
    wls_sum += wls;
  }
  EXPECT_GE(wins, 35);
  EXPECT_LT(wls_sum, 0.7 * ols_sum);
}

TEST_F(ClassicalTest, ErrorShrinksWithNoise) {
  const CompositeObject& obj = FindObject(*catalog_, "Diagonal");
  const InertialParams p = *PayloadInEeFrame(obj);
  const auto rec = Rollout({*model_, {}}, SimConfig(), *traj_, p);
  const Vector7d scale = TargetScale(*catalog_);
  double previous = 1e300;
  for (double sigma : {0.1, 0.01, 0.001}) {
    double total = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
      StackOptions opt;
      opt.noise = {sigma, sigma, static_cast<std::uint64_t>(seed)};
      const auto r = OlsEstimate(StackFromRollout(rec, *model_, p, opt));
      const auto e = EvaluateEstimate(TransformParams(r.phi_hat, obj.grasp_pose.Inverse()),
                                      ObjectParams(obj), scale);
      total += e.nmae[0] + e.nmae[1] + e.nmae[2];
    }
    EXPECT_LT(total, previous) << sigma;
    previous = total;
  }
}

TEST_F(ClassicalTest, NoisyEstimatesViolateTriangleInequality) {
  std::mt19937_64 rng(1);
  int violations = 0;
  for (int i = 0; i < 40; ++i) {
    const InertialParams p = *PayloadInEeFrame(BuildObject(SampleFills(rng), "random"));
    const auto rec = Rollout({*model_, {}}, SimConfig(), *traj_, p);
    StackOptions opt;
    opt.noise = {0.05, 0.05, static_cast<std::uint64_t>(i)};
    violations += !OlsEstimate(StackFromRollout(rec, *model_, p, opt)).consistency.triangle_ok;
  }
  EXPECT_GT(violations, 0);
}

TEST(EvaluateTest, Formulas) {
  Vector7d y, scale;
  y << 1.0, 0.01, -0.02, 0.03, 1e-3, 2e-3, 3e-3;
  scale << 0.5, 0.1, 0.1, 0.1, 1e-3, 1e-3, 1e-3;
  const GroupErrors zero = EvaluateEstimate(y, y, scale);
  for (int g = 0; g < 3; ++g) {
    EXPECT_EQ(zero.mae[g], 0.0);
    EXPECT_EQ(zero.nmae[g], 0.0);
  }
  const GroupErrors unit = EvaluateEstimate(y + scale, y, scale);
  for (int g = 0; g < 3; ++g) EXPECT_NEAR(unit.nmae[g], 1.0, 1e-12);
  Vector7d hat = y;
  hat(0) = 1.1;
  const GroupErrors hand = EvaluateEstimate(hat, y, scale);
  EXPECT_NEAR(hand.mae[0], 0.1, 1e-12);
  EXPECT_NEAR(hand.nmae[0], 0.2, 1e-12);
  scale(2) = 0.0;
  EXPECT_THROW(EvaluateEstimate(y, y, scale), Error);
}

}  // namespace
}  // namespace inertia_id
