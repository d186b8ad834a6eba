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

// Global-best particle swarm optimisation on a box.

#ifndef INERTIA_ID_PSO_H_
#define INERTIA_ID_PSO_H_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace inertia_id {

struct PsoConfig {
  int swarm_size = 40;
  int max_iters = 300;
  double inertia_weight = 0.729;
  double c1 = 1.494;
  double c2 = 1.494;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  double velocity_clamp = 0.2;  // fraction of (hi - lo)
  // Initial speeds are drawn in +-velocity_init * clamp; 0 starts at rest.
  double velocity_init = 1.0;
  std::uint64_t seed = 0;
  // Stop when the best value improves by less than tol * max(|best|, tiny)
  // over `patience` iterations.
  double tol = 1e-8;
  int patience = 20;
  // Particle 0 starts here when set (e.g. the nominal parameters).
  std::optional<Eigen::VectorXd> initial;
  int threads = 0;  // objective evaluations in parallel; 0 = default

  void Validate() const;
};

struct PsoResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  std::vector<double> history;  // best value after initialisation and each iteration
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

// Minimises `objective` over [lo, hi]. Non-finite objective values count as
// +infinity. Deterministic for a given seed regardless of thread count.
PsoResult PsoMinimize(const Objective& objective, const PsoConfig& config);

}  // namespace inertia_id

#endif  // INERTIA_ID_PSO_H_
