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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "inertia_id/excitation.h"

namespace inertia_id {

Eigen::VectorXd SysIdParams::ToVector() const {
  Eigen::VectorXd z(8);
  z << damping, link_mass;
  return z;
}

SysIdParams SysIdParams::FromVector(const Eigen::VectorXd& zeta) {
  if (zeta.size() != 8) throw Error(ErrorCode::kShapeMismatch, "zeta must have 8 entries");
  SysIdParams p;
  p.damping = zeta.head<4>();
  p.link_mass = zeta.tail<4>();
  return p;
}

SysIdParams NominalZeta(const RobotModel& model) {
  return {model.damping, model.LinkMasses()};
}

RobotModel ApplyZeta(const RobotModel& model, const SysIdParams& zeta) {
  if ((zeta.link_mass.array() <= 0.0).any() || (zeta.damping.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "zeta needs positive masses and dampings >= 0");
  }
  RobotModel out = model;
  out.damping = zeta.damping;
  for (int i = 0; i < kNumJoints; ++i) {
    const double m0 = model.links[i].inertial.mass;
    if (!(m0 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "nominal link mass must be > 0");
    out.links[i].inertial =
        InertialParams::FromVector(model.links[i].inertial.ToVector() * (zeta.link_mass(i) / m0));
  }
  return out;
}

double TrajectoryMse(const RolloutRecord& a, const RolloutRecord& b) {
  if (a.size() != b.size() || a.size() == 0 || std::abs(a.dt - b.dt) > 1e-12) {
    throw Error(ErrorCode::kLengthMismatch, "records differ in length or dt");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sum += (a.samples[k].q - b.samples[k].q).squaredNorm();
  }
  return sum / (4.0 * static_cast<double>(a.size()));
}

void TargetDataset::Validate() const {
  if (rollouts.empty() || rollouts.size() != commands.size()) {
    throw Error(ErrorCode::kLengthMismatch, "target dataset needs one command per rollout");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (rollouts[i].size() != commands[i].size() ||
        std::abs(rollouts[i].dt - rollouts[0].dt) > 1e-12 ||
        rollouts[i].size() != rollouts[0].size()) {
      throw Error(ErrorCode::kLengthMismatch, "target rollouts must share dt and duration");
    }
  }
}

std::vector<JointTrajectory> SysIdExcitations(const RobotModel& model) {
  const std::vector<std::pair<ChirpConfig, ChirpConfig>> pairs = {
      {DefaultChirpX(), DefaultChirpY()},
      {ChirpFromMillimetres(5.0, 1.0, 20.0), ChirpFromMillimetres(3.0, 1.0, 80.0)},
      {ChirpFromMillimetres(3.0, 1.0, 30.0), ChirpFromMillimetres(5.0, 1.0, -5.0)},
      {ChirpFromMillimetres(4.0, 1.0, 40.0), ChirpFromMillimetres(4.0, 1.0, 40.0)},
      {ChirpFromMillimetres(2.0, 1.0, -50.0), ChirpFromMillimetres(2.0, 1.0, 100.0)},
  };
  std::vector<JointTrajectory> out;
  for (const auto& [cx, cy] : pairs) {
    out.push_back(JointTrajectoryFromTask(model, BuildTaskTrajectory(cx, cy)));
  }
  return out;
}

TargetDataset CollectTargetDataset(const World& target, const SimConfig& config,
                                   const std::vector<JointTrajectory>& commands,
                                   const std::optional<InertialParams>& payload_ee,
                                   const std::string& label) {
  TargetDataset data;
  data.commands = commands;
  for (const auto& c : commands) data.rollouts.push_back(Rollout(target, config, c, payload_ee, label));
  return data;
}

PsoConfig DefaultSysIdPsoConfig(const RobotModel& nominal, std::uint64_t seed) {
  PsoConfig cfg;
  cfg.lo.resize(8);
  cfg.hi.resize(8);
  const Vector4d m = nominal.LinkMasses();
  cfg.lo << Vector4d::Zero(), 0.5 * m;
  cfg.hi << Vector4d::Constant(0.5), 1.5 * m;
  cfg.initial = NominalZeta(nominal).ToVector();
  cfg.seed = seed;
  return cfg;
}

double SysIdObjective(const RobotModel& nominal, const SimConfig& config,
                      const TargetDataset& data, const SysIdParams& zeta) {
  const World sim{ApplyZeta(nominal, zeta), {}};
  double total = 0.0;
  try {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const RolloutRecord r = Rollout(sim, config, data.commands[i], std::nullopt);
      total += TrajectoryMse(r, data.rollouts[i]);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDiverged || e.code() == ErrorCode::kSingularMassMatrix) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
  return total / static_cast<double>(data.size());
}

SysIdResult Identify(const RobotModel& nominal, const SimConfig& config,
                     const TargetDataset& data, const PsoConfig& pso) {
  data.Validate();
  SysIdResult result;
  result.pre_mse = SysIdObjective(nominal, config, data, NominalZeta(nominal));
  result.pso = PsoMinimize(
      [&](const Eigen::VectorXd& z) {
        return SysIdObjective(nominal, config, data, SysIdParams::FromVector(z));
      },
      pso);
  result.zeta = SysIdParams::FromVector(result.pso.best);
  result.post_mse = result.pso.best_value;
  return result;
}

nlohmann::json ToJson(const SysIdParams& zeta) {
  return {{"damping", {zeta.damping(0), zeta.damping(1), zeta.damping(2), zeta.damping(3)}},
          {"link_mass",
           {zeta.link_mass(0), zeta.link_mass(1), zeta.link_mass(2), zeta.link_mass(3)}}};
}

SysIdParams SysIdParamsFromJson(const nlohmann::json& j) {
  SysIdParams p;
  for (int i = 0; i < 4; ++i) {
    p.damping(i) = j.at("damping").at(i).get<double>();
    p.link_mass(i) = j.at("link_mass").at(i).get<double>();
  }
  return p;
}

void WriteHistoryCsv(const std::string& path, const std::vector<double>& history) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "iteration,best_value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
}

}  // namespace inertia_id
