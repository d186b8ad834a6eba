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

#include "inertia_id/gp.h"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>

#include "inertia_id/excitation.h"
#include "inertia_id/object_catalog.h"
#include "test_util.h"

namespace inertia_id {
namespace {

std::array<GpHyper, kNumJoints> SameHyper(double variance, double lengthscale, double noise) {
  std::array<GpHyper, kNumJoints> h;
  h.fill({variance, lengthscale, noise});
  return h;
}

ResidualDataset RandomDataset(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  ResidualDataset d;
  d.features.resize(n, kGpFeatureDim);
  d.targets.resize(n, kNumJoints);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < kGpFeatureDim; ++c) d.features(i, c) = g(rng);
    for (int c = 0; c < kNumJoints; ++c) d.targets(i, c) = g(rng);
  }
  return d;
}

TEST(RbfTest, DiagonalSymmetryAndFormula) {
  const Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(13, -1.0, 2.0);
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(13, 0.5, -0.5);
  EXPECT_DOUBLE_EQ(RbfKernel(a, a, 2.5, 0.7), 2.5);
  EXPECT_EQ(RbfKernel(a, b, 2.5, 0.7), RbfKernel(b, a, 2.5, 0.7));
  EXPECT_NEAR(RbfKernel(a, b, 2.5, 0.7), 2.5 * std::exp(-(a - b).squaredNorm() / (2 * 0.49)), 1e-15);
  EXPECT_THROW(RbfKernel(a, Eigen::VectorXd::Zero(3), 1.0, 1.0), Error);
}

TEST(RbfTest, GramIsPositiveSemidefinite) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  for (double ell : {0.3, 1.0, 5.0}) {
    Eigen::MatrixXd z(50, kGpFeatureDim);
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g(rng);
    Eigen::MatrixXd k = RbfGram(z, 1.0, ell);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) EXPECT_NEAR(k(i, j), RbfKernel(z.row(i), z.row(j), 1.0, ell), 1e-12);
    }
    k.diagonal().array() += 1e-8;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0) << "ell " << ell;
  }
}

TEST(GpTest, SinglePointInterpolationLimit) {
  ResidualDataset d = RandomDataset(1, 2);
  const GpModel m = FitGpFixed(d, SameHyper(1.0, 1.0, 1e-6));
  const GpPrediction p = m.Predict(d.features.row(0).transpose());
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(p.mean(j), d.targets(0, j), 1e-5);
    EXPECT_NEAR(p.latent_variance(j), 1e-6, 1e-10);
    EXPECT_NEAR(p.variance(j), 2e-6, 1e-10);
  }
}

TEST(GpTest, RevertsToPriorFarAway) {
  const ResidualDataset d = RandomDataset(40, 3);
  const GpModel m = FitGpFixed(d, SameHyper(0.8, 1.0, 0.01));
  // Standardized inputs are O(1); 30 raw units is far beyond 10 lengthscales.
  const Eigen::VectorXd far = Eigen::VectorXd::Constant(kGpFeatureDim, 30.0);
  const GpPrediction p = m.Predict(far);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(p.mean(j), 0.0, 1e-12);
    EXPECT_NEAR(p.variance(j), 0.81, 1e-12);
  }
}

TEST(GpTest, MatchesDenseSolveOracle) {
  const ResidualDataset d = RandomDataset(60, 4);
  const std::array<GpHyper, kNumJoints> hyper = {
      GpHyper{1.0, 1.5, 0.1}, GpHyper{0.3, 2.0, 0.01}, GpHyper{2.0, 3.0, 0.5}, GpHyper{1.0, 2.5, 1e-3}};
  GpFeatureSet all;
  all.tau_cmd = true;
  const GpModel m = FitGpFixed(d, hyper, all);
  const Eigen::MatrixXd& z = m.inputs();
  // The model's standardization, reproduced independently.
  const Eigen::VectorXd mean = d.features.colwise().mean().transpose();
  Eigen::VectorXd scale(kGpFeatureDim);
  for (int c = 0; c < kGpFeatureDim; ++c) {
    scale(c) = std::sqrt((d.features.col(c).array() - mean(c)).square().mean());
  }
  const ResidualDataset q = RandomDataset(20, 5);
  for (int j = 0; j < 4; ++j) {
    const GpHyper& h = hyper[j];
    Eigen::MatrixXd k(60, 60);
    for (int a = 0; a < 60; ++a) {
      for (int b = 0; b < 60; ++b) k(a, b) = RbfKernel(z.row(a), z.row(b), h.variance, h.lengthscale);
    }
    k.diagonal().array() += h.noise_var + m.jitter(j) * h.variance;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    const Eigen::VectorXd alpha = lu.solve(d.targets.col(j));
    for (int i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd s = (q.features.row(i).transpose() - mean).cwiseQuotient(scale);
      Eigen::VectorXd ks(60);
      for (int a = 0; a < 60; ++a) ks(a) = RbfKernel(s, z.row(a), h.variance, h.lengthscale);
      const GpPrediction p = m.Predict(q.features.row(i).transpose());
      EXPECT_NEAR(p.mean(j), ks.dot(alpha), 1e-10);
      EXPECT_NEAR(p.latent_variance(j), h.variance - ks.dot(lu.solve(ks)), 1e-10);
    }
  }
}

TEST(GpTest, InterpolatesKnownFunction) {
  // Noiseless sin(q1) on a 15 x 15 grid over (q1, q2).
  const int g = 15;
  ResidualDataset d;
  d.features = Eigen::MatrixXd::Zero(g * g, kGpFeatureDim);
  d.targets.resize(g * g, kNumJoints);
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      const int r = a * g + b;
      d.features(r, 0) = -1.0 + 2.0 * a / (g - 1);
      d.features(r, 1) = -1.0 + 2.0 * b / (g - 1);
      d.targets.row(r).setConstant(std::sin(d.features(r, 0)));
    }
  }
  const GpModel m = FitGp(d);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  double sq = 0.0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(kGpFeatureDim);
    f(0) = u(rng);
    f(1) = u(rng);
    sq += std::pow(m.Mean(f)(0) - std::sin(f(0)), 2);
  }
  EXPECT_LE(std::sqrt(sq / n), 1e-3);
}

TEST(GpTest, OptimizerDoesNotLoseToInitialization) {
  ResidualDataset d = RandomDataset(80, 7);
  for (int i = 0; i < d.size(); ++i) d.targets(i, 0) = std::sin(d.features(i, 0)) + 0.1 * d.targets(i, 0);
  const GpModel fitted = FitGp(d);
  GpFitConfig off;
  off.optimize = false;
  const GpModel init = FitGp(d, off);
  for (int j = 0; j < 4; ++j) {
    const Eigen::VectorXd y = d.targets.col(j);
    EXPECT_GE(LogMarginalLikelihood(fitted.inputs(), y, fitted.hyper()[j]),
              LogMarginalLikelihood(init.inputs(), y, init.hyper()[j]));
  }
}

TEST(GpTest, VarianceNonNegativeAndShrinksWithRepeats) {
  const ResidualDataset base = RandomDataset(30, 8);
  const Eigen::VectorXd centre = base.features.colwise().mean().transpose();
  const GpModel m0 = FitGpFixed(base, SameHyper(1.0, 2.0, 0.05));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd f(kGpFeatureDim);
    for (int c = 0; c < kGpFeatureDim; ++c) f(c) = g(rng);
    EXPECT_GE(m0.Predict(f).latent_variance.minCoeff(), 0.0);
  }
  // Copies placed at the data centroid leave the standardization mean fixed.
  double previous = m0.Predict(centre).variance(0);
  for (int copies = 1; copies <= 5; ++copies) {
    ResidualDataset d = base;
    d.features.conservativeResize(30 + copies, Eigen::NoChange);
    d.targets.conservativeResize(30 + copies, Eigen::NoChange);
    for (int c = 0; c < copies; ++c) {
      d.features.row(30 + c) = centre.transpose();
      d.targets.row(30 + c).setZero();
    }
    const double v = FitGpFixed(d, SameHyper(1.0, 2.0, 0.05)).Predict(centre).variance(0);
    EXPECT_LT(v, previous) << copies;
    previous = v;
  }
}

TEST(GpTest, LinearInTargets) {
  const ResidualDataset a = RandomDataset(50, 10);
  ResidualDataset b = a, c = a;
  b.targets = RandomDataset(50, 11).targets;
  c.targets = 2.0 * a.targets - 0.7 * b.targets;
  const auto h = SameHyper(1.2, 1.7, 0.02);
  const GpModel ma = FitGpFixed(a, h), mb = FitGpFixed(b, h), mc = FitGpFixed(c, h);
  const ResidualDataset q = RandomDataset(30, 12);
  for (int i = 0; i < q.size(); ++i) {
    const Eigen::VectorXd f = q.features.row(i).transpose();
    EXPECT_LT((mc.Mean(f) - (2.0 * ma.Mean(f) - 0.7 * mb.Mean(f))).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GpTest, DeterministicAndJsonRoundTrip) {
  const ResidualDataset d = RandomDataset(70, 13);
  GpFitConfig cfg;
  cfg.seed = 5;
  const GpModel a = FitGp(d, cfg);
  const GpModel b = FitGp(d, cfg);
  const auto path = std::filesystem::temp_directory_path() / "iid_gp.json";
  SaveGp(path.string(), a);
  const GpModel c = LoadGp(path.string());
  std::filesystem::remove(path);
  const ResidualDataset q = RandomDataset(10, 14);
  for (int i = 0; i < q.size(); ++i) {
    const Eigen::VectorXd f = q.features.row(i).transpose();
    EXPECT_EQ(a.Predict(f).mean, b.Predict(f).mean);
    EXPECT_EQ(a.Predict(f).mean, c.Predict(f).mean);
    EXPECT_EQ(a.Predict(f).variance, c.Predict(f).variance);
  }
  EXPECT_EQ(c.feature_mask(), a.feature_mask());
}

TEST(GpTest, ErrorsAndLimits) {
  ExpectErrorCode(ErrorCode::kIllConditioned,
                  [] { FitGpFixed(RandomDataset(10, 15), SameHyper(-1.0, 1.0, 0.0)); });
  ExpectErrorCode(ErrorCode::kInvalidArgument, [] { FitGp(RandomDataset(5001, 16)); });
  ResidualDataset empty;
  empty.features.resize(0, kGpFeatureDim);
  empty.targets.resize(0, kNumJoints);
  ExpectErrorCode(ErrorCode::kInvalidArgument, [&] { FitGp(empty); });
  ResidualDataset bad = RandomDataset(5, 17);
  bad.targets(2, 1) = std::nan("");
  ExpectErrorCode(ErrorCode::kNonFinite, [&] { FitGp(bad); });
}

TEST(GpTest, EmptyModelPredictsPrior) {
  const GpModel m;
  const GpPrediction p = m.Predict(Eigen::VectorXd::Zero(kGpFeatureDim));
  EXPECT_TRUE(p.mean.isZero(0.0));
  const SimConfig cfg = AttachCorrection(SimConfig(), std::make_shared<GpModel>());
  EXPECT_FALSE(static_cast<bool>(cfg.residual_torque_hook));
}

TEST(GpTest, ResidualCsvRoundTrip) {
  const ResidualDataset d = RandomDataset(12, 18);
  const auto path = std::filesystem::temp_directory_path() / "iid_residuals.csv";
  WriteResidualCsv(path.string(), d);
  const ResidualDataset r = ReadResidualCsv(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(r.features, d.features);
  EXPECT_EQ(r.targets, d.targets);
}

// Friction-only reality gap on the free arm.
class GpWorldTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    nominal_ = new RobotModel(RobotModel::Default());
    Perturbation p;
    p.friction = Perturbation::DefaultSurrogate().friction;
    target_ = new World(MakePseudoReal(*nominal_, p));
    data_ = new TargetDataset(CollectTargetDataset(*target_, SimConfig(), SysIdExcitations(*nominal_)));
    residuals_ = new ResidualDataset(BuildResidualDataset({*nominal_, {}}, SimConfig(), *data_, 10));
    gp_ = new std::shared_ptr<const GpModel>(std::make_shared<GpModel>(FitGp(*residuals_)));
  }
  static void TearDownTestSuite() {
    delete nominal_;
    delete target_;
    delete data_;
    delete residuals_;
    delete gp_;
  }

  static RobotModel* nominal_;
  static World* target_;
  static TargetDataset* data_;
  static ResidualDataset* residuals_;
  static std::shared_ptr<const GpModel>* gp_;
};

RobotModel* GpWorldTest::nominal_ = nullptr;
World* GpWorldTest::target_ = nullptr;
TargetDataset* GpWorldTest::data_ = nullptr;
ResidualDataset* GpWorldTest::residuals_ = nullptr;
std::shared_ptr<const GpModel>* GpWorldTest::gp_ = nullptr;

TEST_F(GpWorldTest, ZeroGapGivesZeroResiduals) {
  const TargetDataset same = CollectTargetDataset({*nominal_, {}}, SimConfig(), data_->commands);
  const ResidualDataset r = BuildResidualDataset({*nominal_, {}}, SimConfig(), same, 1);
  EXPECT_EQ(r.size(), 5 * 498);
  EXPECT_LE(r.targets.cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(GpWorldTest, FrictionResidualsFollowVelocitySign) {
  const ResidualDataset r = BuildResidualDataset({*nominal_, {}}, SimConfig(), *data_, 1);
  for (int j = 0; j < 4; ++j) {
    const Eigen::ArrayXd qd = r.features.col(4 + j).array();
    if (qd.abs().maxCoeff() < 0.1) continue;  // joint barely moves
    const Eigen::ArrayXd s = qd.sign();
    const Eigen::ArrayXd y = r.targets.col(j).array();
    const double cov = ((s - s.mean()) * (y - y.mean())).mean();
    const double rho = cov / std::sqrt((s - s.mean()).square().mean() * (y - y.mean()).square().mean());
    EXPECT_GT(std::abs(rho), 0.5) << "joint " << j + 1;
  }
}

TEST_F(GpWorldTest, TrainingPointsWithinThreeSigma) {
  int inside = 0, total = 0;
  for (int i = 0; i < residuals_->size(); ++i) {
    const GpPrediction p = (*gp_)->Predict(residuals_->features.row(i).transpose());
    for (int j = 0; j < 4; ++j) {
      ++total;
      if (std::abs(p.mean(j) - residuals_->targets(i, j)) <= 3.0 * std::sqrt(p.variance(j))) ++inside;
    }
  }
  EXPECT_GE(inside, 0.95 * total);
}

TEST_F(GpWorldTest, CorrectionClosesTrainingGap) {
  const SimConfig corrected = AttachCorrection(SimConfig(), *gp_);
  double before = 0.0, after = 0.0;
  for (std::size_t i = 0; i < data_->size(); ++i) {
    before += TrajectoryMse(Rollout({*nominal_, {}}, SimConfig(), data_->commands[i]), data_->rollouts[i]);
    after += TrajectoryMse(Rollout({*nominal_, {}}, corrected, data_->commands[i]), data_->rollouts[i]);
  }
  EXPECT_GT(before, 0.0);
  EXPECT_LE(10.0 * after, before);
}

TEST_F(GpWorldTest, CorrectionGeneralizesToPayloads) {
  const SimConfig corrected = AttachCorrection(SimConfig(), *gp_);
  const auto catalog = DefaultCatalog();
  const JointTrajectory cmd = DefaultExcitation(*nominal_);
  int better = 0;
  for (int i = 0; i < 10; ++i) {
    const auto payload = PayloadInEeFrame(catalog[i]);
    const RolloutRecord truth = Rollout(*target_, SimConfig(), cmd, payload);
    const double plain = TrajectoryMse(Rollout({*nominal_, {}}, SimConfig(), cmd, payload), truth);
    const double fixed = TrajectoryMse(Rollout({*nominal_, {}}, corrected, cmd, payload), truth);
    if (fixed < plain) ++better;
  }
  EXPECT_GE(better, 8);
}

TEST_F(GpWorldTest, ZeroResidualModelLeavesSimulatorUnchanged) {
  ResidualDataset zero = *residuals_;
  zero.targets.setZero();
  const SimConfig corrected = AttachCorrection(SimConfig(), std::make_shared<GpModel>(FitGp(zero)));
  ASSERT_TRUE(static_cast<bool>(corrected.residual_torque_hook));
  const RolloutRecord a = Rollout({*nominal_, {}}, SimConfig(), data_->commands[0]);
  const RolloutRecord b = Rollout({*nominal_, {}}, corrected, data_->commands[0]);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_LE((a.samples[k].q - b.samples[k].q).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST_F(GpWorldTest, RejectsMismatchedDataset) {
  TargetDataset broken = *data_;
  broken.commands.pop_back();
  ExpectErrorCode(ErrorCode::kLengthMismatch,
                  [&] { BuildResidualDataset({*nominal_, {}}, SimConfig(), broken); });
}

}  // namespace
}  // namespace inertia_id
