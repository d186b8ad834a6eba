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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "inertia_id/common.h"
#include "inertia_id/parallel.h"

namespace inertia_id {

void PsoConfig::Validate() const {
  if (swarm_size < 1 || max_iters < 0) {
    throw Error(ErrorCode::kInvalidArgument, "swarm_size must be >= 1, max_iters >= 0");
  }
  if (lo.size() == 0 || lo.size() != hi.size() || (lo.array() >= hi.array()).any()) {
    throw Error(ErrorCode::kInvalidArgument, "PSO bounds need lo < hi componentwise");
  }
  if (initial && initial->size() != lo.size()) {
    throw Error(ErrorCode::kShapeMismatch, "initial point has the wrong dimension");
  }
}

PsoResult PsoMinimize(const Objective& objective, const PsoConfig& cfg) {
  cfg.Validate();
  const int n = cfg.swarm_size;
  const Eigen::Index dim = cfg.lo.size();
  const Eigen::VectorXd range = cfg.hi - cfg.lo;
  const Eigen::VectorXd vmax = cfg.velocity_clamp * range;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // One stream per particle, derived from the master seed.
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(n);
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::vector<std::uint64_t> seeds(n);
  {
    std::vector<std::uint32_t> raw(2 * n);
    seq.generate(raw.begin(), raw.end());
    for (int i = 0; i < n; ++i) {
      seeds[i] = (static_cast<std::uint64_t>(raw[2 * i]) << 32) | raw[2 * i + 1];
    }
  }
  for (int i = 0; i < n; ++i) rngs.emplace_back(seeds[i]);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Eigen::VectorXd> x(n), v(n), pbest(n);
  std::vector<double> fx(n, kInf), fbest(n, kInf);
  for (int i = 0; i < n; ++i) {
    x[i].resize(dim);
    v[i].resize(dim);
    for (Eigen::Index d = 0; d < dim; ++d) {
      x[i](d) = cfg.lo(d) + range(d) * unit(rngs[i]);
      v[i](d) = cfg.velocity_init * vmax(d) * (2.0 * unit(rngs[i]) - 1.0);
    }
  }
  if (cfg.initial) x[0] = cfg.initial->cwiseMax(cfg.lo).cwiseMin(cfg.hi);

  auto evaluate = [&] {
    ParallelFor(
        n,
        [&](int i) {
          const double f = objective(x[i]);
          fx[i] = std::isfinite(f) ? f : kInf;
        },
        cfg.threads);
  };

  PsoResult result;
  int g = 0;
  auto absorb = [&] {
    for (int i = 0; i < n; ++i) {
      if (fx[i] < fbest[i] || pbest[i].size() == 0) {
        fbest[i] = fx[i];
        pbest[i] = x[i];
      }
      if (fbest[i] < fbest[g]) g = i;
    }
    result.history.push_back(fbest[g]);
  };

  evaluate();
  absorb();
  for (int it = 0; it < cfg.max_iters; ++it) {
    for (int i = 0; i < n; ++i) {
      for (Eigen::Index d = 0; d < dim; ++d) {
        const double r1 = unit(rngs[i]);
        const double r2 = unit(rngs[i]);
        double vel = cfg.inertia_weight * v[i](d) + cfg.c1 * r1 * (pbest[i](d) - x[i](d)) +
                     cfg.c2 * r2 * (pbest[g](d) - x[i](d));
        vel = std::clamp(vel, -vmax(d), vmax(d));
        double pos = x[i](d) + vel;
        if (pos < cfg.lo(d)) {
          pos = cfg.lo(d);
          vel = 0.0;
        } else if (pos > cfg.hi(d)) {
          pos = cfg.hi(d);
          vel = 0.0;
        }
        v[i](d) = vel;
        x[i](d) = pos;
      }
    }
    evaluate();
    absorb();
    result.iterations = it + 1;
    const int h = static_cast<int>(result.history.size()) - 1;
    if (h >= cfg.patience) {
      const double past = result.history[h - cfg.patience];
      const double now = result.history[h];
      const double scale = std::max(std::abs(now), std::numeric_limits<double>::min());
      if (std::isfinite(past) && past - now < cfg.tol * scale) {
        result.converged = true;
        break;
      }
    }
  }
  result.best = pbest[g];
  result.best_value = fbest[g];
  return result;
}

}  // namespace inertia_id
