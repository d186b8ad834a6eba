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

// End-to-end experiment: system identification, residual GP, dataset
// generation, training and evaluation, with per-phase artifacts on disk.

#ifndef INERTIA_ID_PIPELINE_H_
#define INERTIA_ID_PIPELINE_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "inertia_id/common.h"
#include "inertia_id/learner.h"
#include "inertia_id/nn.h"
#include "inertia_id/simworld.h"
#include "inertia_id/sysid.h"
#include "json.hpp"

namespace inertia_id {

struct SysIdStageConfig {
  int swarm_size = 40;
  int max_iters = 300;
  int patience = 20;
};

struct GpStageConfig {
  int stride = 5;
  bool optimize = true;
  int restarts = 3;
  int max_evals = 300;
};

struct EvalStageConfig {
  int adaptation_payloads = 10;  // loaded catalog objects, in catalog order
  int ols_trials = 500;
  double wrench_noise = 0.05;    // N and N m
  std::vector<ModelFamily> families{ModelFamily::kLstm, ModelFamily::kRnn, ModelFamily::kCnn,
                                    ModelFamily::kAttention};
  bool torque_ablation = true;
  int latency_samples = 500;
};

struct ExperimentConfig {
  std::string name = "desk";
  std::uint64_t seed = 0;
  int threads = 0;  // 0: INERTIA_ID_THREADS or hardware concurrency
  Perturbation surrogate = Perturbation::DefaultSurrogate();
  // Directory of recorded target rollouts (command_<i>.csv, rollout_<i>.bin).
  // Empty: record them from the surrogate world.
  std::string target_dir;
  SysIdStageConfig sysid;
  GpStageConfig gp;
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  LossConfig loss;
  ActuatorNetConfig actuator;
  EvalStageConfig eval;

  void Validate() const;  // kInvalidArgument
};

// "desk", "paper" or "smoke"; kInvalidArgument otherwise.
ExperimentConfig PresetConfig(const std::string& name);

// Every field is written; reading starts from the preset named by "preset"
// (default desk) and overrides the keys present. Unknown keys are rejected.
nlohmann::json ToJson(const ExperimentConfig& cfg);
ExperimentConfig ExperimentConfigFromJson(const nlohmann::json& j);
ExperimentConfig LoadExperimentConfig(const std::string& path);

std::uint64_t Fnv1a64(std::string_view bytes);
// Hex FNV-1a of the canonical config JSON without the thread count.
std::string ConfigHash(const ExperimentConfig& cfg);
// Independent stream seeds derived from the experiment seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

enum class Phase { kSysId, kFitGp, kGenData, kTrain, kEval };
inline constexpr Phase kAllPhases[] = {Phase::kSysId, Phase::kFitGp, Phase::kGenData,
                                       Phase::kTrain, Phase::kEval};
const char* PhaseName(Phase phase);
Phase PhaseFromName(const std::string& name);

enum class ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,            // bad command line or config
  kTargetInput = 3,      // target rollouts missing or unreadable
  kMissingArtifact = 4,  // upstream phase output absent
};

// Phase-tagged failure carrying the process exit code.
class PipelineError : public Error {
 public:
  PipelineError(Phase phase, ExitCode exit, ErrorCode code, const std::string& what)
      : Error(code, std::string("[") + PhaseName(phase) + "] " + what),
        phase_(phase),
        exit_(exit) {}

  Phase phase() const { return phase_; }
  ExitCode exit_code() const { return exit_; }

 private:
  Phase phase_;
  ExitCode exit_;
};

struct PhaseTiming {
  Phase phase = Phase::kSysId;
  double seconds = 0.0;
  bool skipped = false;  // resumed from artifacts
};

// Runs one phase from the artifacts under `out_dir`. Throws PipelineError.
PhaseTiming RunPhase(const ExperimentConfig& cfg, const std::string& out_dir, Phase phase);

struct PipelineResult {
  std::vector<PhaseTiming> phases;
  std::string config_hash;
};

// Runs all phases in order. With `resume`, a phase whose marker matches the
// config hash and whose artifacts all exist is skipped. Writes manifest.json
// atomically at the end.
PipelineResult RunPipeline(const ExperimentConfig& cfg, const std::string& out_dir,
                           bool resume = true);

// Metric tables written by the eval phase, relative to the output directory.
std::vector<std::string> MetricTablePaths();

// Target rollouts on disk.
void SaveTargetDataset(const std::string& dir, const TargetDataset& data);
TargetDataset LoadTargetDataset(const std::string& dir);  // kIo when absent or empty

// Inverse of FillsLabel.
HoleFills FillsFromLabel(const std::string& label);

}  // namespace inertia_id

#endif  // INERTIA_ID_PIPELINE_H_
