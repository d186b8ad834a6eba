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

#include "inertia_id/pso.h"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "test_util.h"

namespace inertia_id {
namespace {

PsoConfig Box(int dim, double lo, double hi, std::uint64_t seed = 0) {
  PsoConfig c;
  c.lo = Eigen::VectorXd::Constant(dim, lo);
  c.hi = Eigen::VectorXd::Constant(dim, hi);
  c.seed = seed;
  return c;
}

double Rastrigin(const Eigen::VectorXd& x) {
  double f = 10.0 * static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    f += x(i) * x(i) - 10.0 * std::cos(2.0 * std::numbers::pi * x(i));
  }
  return f;
}

TEST(PsoTest, SphereConverges) {
  Eigen::VectorXd z0(8);
  z0 << 0.1, -0.3, 0.25, 0.0, 0.4, -0.45, 0.05, 0.3;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    PsoConfig c = Box(8, -1.0, 1.0, seed);
    c.max_iters = 200;
    c.tol = 0.0;  // run all 200 iterations
    const PsoResult r = PsoMinimize([&](const Eigen::VectorXd& z) { return (z - z0).squaredNorm(); }, c);
    EXPECT_LE((r.best - z0).cwiseAbs().maxCoeff(), 1e-3) << "seed " << seed;
    EXPECT_LE(r.iterations, 200);
  }
}

TEST(PsoTest, RastriginGlobalSearch) {
  // Canonical gbest settings; the swarm and budget are sized for the
  // 8-D multimodal landscape.
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PsoConfig c = Box(8, -5.12, 5.12, seed);
    c.swarm_size = 600;
    c.max_iters = 3000;
    c.patience = 200;
    const PsoResult r = PsoMinimize(Rastrigin, c);
    if (r.best_value <= 1.0) ++hits;
  }
  EXPECT_GE(hits, 18);
}

TEST(PsoTest, HistoryNonIncreasingAndParticlesInBounds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PsoConfig c = Box(3, -2.0, 3.0, seed);
    c.lo(1) = 0.5;
    c.max_iters = 100;
    c.threads = 1;
    bool inside = true;
    const PsoResult r = PsoMinimize(
        [&](const Eigen::VectorXd& z) {
          inside = inside && (z.array() >= c.lo.array()).all() && (z.array() <= c.hi.array()).all();
          return Rastrigin(z);
        },
        c);
    EXPECT_TRUE(inside);
    ASSERT_EQ(r.history.size(), static_cast<std::size_t>(r.iterations) + 1);
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
    EXPECT_EQ(r.history.back(), r.best_value);
  }
}

TEST(PsoTest, DeterministicAcrossThreadCounts) {
  PsoConfig c = Box(4, -5.12, 5.12, 42);
  c.max_iters = 50;
  c.threads = 1;
  const PsoResult a = PsoMinimize(Rastrigin, c);
  c.threads = 4;
  const PsoResult b = PsoMinimize(Rastrigin, c);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.history, b.history);
  c.seed = 43;
  EXPECT_NE(PsoMinimize(Rastrigin, c).best, a.best);
}

TEST(PsoTest, SingleParticleAtRestStaysPut) {
  PsoConfig c = Box(2, -1.0, 1.0);
  c.swarm_size = 1;
  c.velocity_init = 0.0;
  c.initial = Eigen::Vector2d(0.3, -0.7);
  c.max_iters = 30;
  const PsoResult r = PsoMinimize([](const Eigen::VectorXd& z) { return z.squaredNorm(); }, c);
  EXPECT_EQ(r.best, *c.initial);
}

TEST(PsoTest, NonFiniteValuesCountAsInfinity) {
  PsoConfig c = Box(2, -1.0, 1.0, 3);
  c.max_iters = 60;
  const PsoResult r = PsoMinimize(
      [](const Eigen::VectorXd& z) {
        return z(0) < 0.0 ? std::numeric_limits<double>::quiet_NaN() : (z - Eigen::Vector2d(0.5, 0.5)).squaredNorm();
      },
      c);
  EXPECT_TRUE(std::isfinite(r.best_value));
  EXPECT_GE(r.best(0), 0.0);
  EXPECT_LT(r.best_value, 1e-3);
}

TEST(PsoTest, StopsWhenStalled) {
  PsoConfig c = Box(2, -1.0, 1.0, 9);
  c.patience = 10;
  const PsoResult r = PsoMinimize([](const Eigen::VectorXd&) { return 1.0; }, c);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 10);
}

TEST(PsoTest, RejectsBadConfigs) {
  PsoConfig c = Box(2, 1.0, 1.0);
  EXPECT_THROW(PsoMinimize(Rastrigin, c), Error);
  c = Box(2, 0.0, 1.0);
  c.swarm_size = 0;
  EXPECT_THROW(PsoMinimize(Rastrigin, c), Error);
  c = Box(2, 0.0, 1.0);
  c.initial = Eigen::Vector3d::Zero();
  ExpectErrorCode(ErrorCode::kShapeMismatch, [&] { PsoMinimize(Rastrigin, c); });
}

}  // namespace
}  // namespace inertia_id
