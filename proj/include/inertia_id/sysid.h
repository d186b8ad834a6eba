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

// Simulator parameter identification: joint dampings and link masses fitted
// by particle swarm to rollouts recorded in the target world.

#ifndef INERTIA_ID_SYSID_H_
#define INERTIA_ID_SYSID_H_

#include <string>
#include <vector>

#include "inertia_id/pso.h"
#include "inertia_id/simworld.h"
#include "json.hpp"

namespace inertia_id {

// zeta = [d1..d4 (N m s/rad), m1..m4 (kg)].
struct SysIdParams {
  Vector4d damping = Vector4d::Zero();
  Vector4d link_mass = Vector4d::Ones();

  Eigen::VectorXd ToVector() const;
  static SysIdParams FromVector(const Eigen::VectorXd& zeta);
};

SysIdParams NominalZeta(const RobotModel& model);

// Replaces the dampings and rescales each link's inertial params to the new
// mass (COM kept, inertia scaled with the mass).
RobotModel ApplyZeta(const RobotModel& model, const SysIdParams& zeta);

// Mean over time and the four joints of the squared joint-position
// difference. Throws kLengthMismatch on differing length or dt.
double TrajectoryMse(const RolloutRecord& a, const RolloutRecord& b);

// Target-world rollouts together with the commands that produced them.
struct TargetDataset {
  std::vector<JointTrajectory> commands;
  std::vector<RolloutRecord> rollouts;

  std::size_t size() const { return rollouts.size(); }
  void Validate() const;
};

// Five replayable shaking motions: the default chirp pair plus four variants
// with other amplitudes and sweep ranges, so all eight zeta components are
// excited while joint rates stay moderate.
std::vector<JointTrajectory> SysIdExcitations(const RobotModel& model);

TargetDataset CollectTargetDataset(const World& target, const SimConfig& config,
                                   const std::vector<JointTrajectory>& commands,
                                   const std::optional<InertialParams>& payload_ee = std::nullopt,
                                   const std::string& label = "Free");

// Bounds d in [0, 0.5], m in [0.5, 1.5] x nominal; particle 0 starts at the
// nominal zeta.
PsoConfig DefaultSysIdPsoConfig(const RobotModel& nominal, std::uint64_t seed = 0);

// Eq. 5 objective: mean trajectory MSE of the zeta-simulator replaying each
// command against the matching target rollout; +inf when a replay diverges.
double SysIdObjective(const RobotModel& nominal, const SimConfig& config,
                      const TargetDataset& data, const SysIdParams& zeta);

struct SysIdResult {
  SysIdParams zeta;
  PsoResult pso;
  double pre_mse = 0.0;   // nominal simulator
  double post_mse = 0.0;  // identified simulator
};

SysIdResult Identify(const RobotModel& nominal, const SimConfig& config,
                     const TargetDataset& data, const PsoConfig& pso);

nlohmann::json ToJson(const SysIdParams& zeta);
SysIdParams SysIdParamsFromJson(const nlohmann::json& j);
void WriteHistoryCsv(const std::string& path, const std::vector<double>& history);

}  // namespace inertia_id

#endif  // INERTIA_ID_SYSID_H_
