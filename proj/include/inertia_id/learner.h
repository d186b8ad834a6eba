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

// Learned inertial-parameter estimator: dataset generation in the corrected
// simulator, the consistency-regularized loss, training, evaluation, model
// family comparison and the actuator network used for torque inputs.

#ifndef INERTIA_ID_LEARNER_H_
#define INERTIA_ID_LEARNER_H_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "inertia_id/classical.h"
#include "inertia_id/nn.h"
#include "inertia_id/object_catalog.h"
#include "inertia_id/simworld.h"
#include "json.hpp"

namespace inertia_id {

inline constexpr int kTargetDim = 7;
inline constexpr int kStateChannels = 8;    // q[4], qdot[4]
inline constexpr int kTorqueChannels = 12;  // plus tau[4]

struct SequenceSample {
  Eigen::MatrixXd x;  // T x C, physical units
  Vector7d y = Vector7d::Zero();
  std::string label;
  std::uint64_t id = 0;  // generation index; fixes the canonical order
};

struct Normalization {
  Eigen::VectorXd x_mean;  // per channel
  Eigen::VectorXd x_std;
  Vector7d y_mean = Vector7d::Zero();
  Vector7d y_std = Vector7d::Ones();

  Eigen::MatrixXd NormalizeX(const Eigen::MatrixXd& x) const;
  Vector7d NormalizeY(const Vector7d& y) const;
  Vector7d DenormalizeY(const Vector7d& y_n) const;
};

nlohmann::json ToJson(const Normalization& n);
Normalization NormalizationFromJson(const nlohmann::json& j);

// Per-channel and per-target standardization over `indices`, summed in id
// order so the result does not depend on how the samples are stored.
Normalization ComputeNormalization(const std::vector<SequenceSample>& samples,
                                   const std::vector<int>& indices);

struct Dataset {
  std::vector<SequenceSample> samples;
  std::vector<int> train, val, test;  // indices into samples
  Normalization stats;                // fitted on train only
  std::uint64_t seed = 0;
  double sample_dt = 0.01;
  int resampled = 0;  // diverged rollouts replaced during generation

  int size() const { return static_cast<int>(samples.size()); }
  int steps() const { return samples.empty() ? 0 : static_cast<int>(samples[0].x.rows()); }
  int channels() const { return samples.empty() ? 0 : static_cast<int>(samples[0].x.cols()); }
  // Shapes, finiteness, disjoint and exhaustive splits.
  void Validate() const;
};

// Seeded split by id (n_test = rest), then stats from the training part.
void AssignSplits(Dataset& data, int n_train, int n_val);

// Keeps the first `channels` input channels and refits the stats.
Dataset SelectChannels(const Dataset& data, int channels);

enum class TorqueChannel { kNone, kMeasured, kActuatorNet };

struct DatasetConfig {
  int num_samples = 500;
  int stride = 10;  // 1 kHz rollout -> 100 Hz network input
  double train_fraction = 0.7;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  int threads = 0;
  int max_attempts = 5;
  TorqueChannel torque = TorqueChannel::kNone;

  void Validate() const;
};

class ActuatorNet;

// Samples hole fills per id, attaches each object, tracks `command` in
// `world` and records the state history (and optionally torques). The same
// seed draws the same objects in any world.
Dataset GenerateDataset(const World& world, const SimConfig& config,
                        const JointTrajectory& command, const DatasetConfig& cfg,
                        const ActuatorNet* actuator = nullptr,
                        const ObjectDesign& design = ObjectDesign());

std::string FillsLabel(const HoleFills& fills);

struct LossConfig {
  double w1 = 0.5;
  double w2 = 0.3;
  double w3 = 0.2;
  double pos_scale = 1.0;
  std::vector<int> pos_indices{0, 4, 5, 6};

  void Validate() const;
};

double Softplus(double x);
// Sum over the three axes alpha of softplus(I_alpha - I_beta - I_gamma).
double LossTri(double ixx, double iyy, double izz);
Vector3d LossTriGradient(double ixx, double iyy, double izz);
// pos_scale * sum over the batch of |min(y_k, 0)|, k in pos_indices.
double LossPos(const Eigen::MatrixXd& y_hat, const LossConfig& cfg);

struct LossTerms {
  double total = 0.0;
  double mse = 0.0;
  double tri = 0.0;  // batch mean
  double pos = 0.0;
};

// Inputs are normalized 7 x B matrices; MSE acts on them, the triangle and
// positivity terms on the de-normalized outputs. `grad` receives
// d total / d y_hat_n.
LossTerms TotalLoss(const Eigen::MatrixXd& y_hat_n, const Eigen::MatrixXd& y_n,
                    const Normalization& stats, const LossConfig& cfg,
                    Eigen::MatrixXd* grad = nullptr);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double clip_norm = 1.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const TrainConfig& cfg);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const LossConfig& cfg);
LossConfig LossConfigFromJson(const nlohmann::json& j);

struct TrainCurves {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
};

class TrainedModel {
 public:
  TrainedModel(SequenceRegressor net, Normalization stats, int steps);

  // x: T x C in physical units; returns the de-normalized 7-vector.
  Vector7d Predict(const Eigen::MatrixXd& x) const;
  // One batched pass over data.samples[indices]; 7 x n.
  Eigen::MatrixXd PredictMany(const Dataset& data, const std::vector<int>& indices) const;

  const SequenceRegressor& net() const { return net_; }
  const Normalization& stats() const { return stats_; }
  int steps() const { return steps_; }
  int channels() const { return net_.config().input_dim; }

  nlohmann::json ToJson() const;
  static TrainedModel FromJson(const nlohmann::json& j);

 private:
  SequenceRegressor net_;
  Normalization stats_;
  int steps_;
};

struct TrainResult {
  TrainedModel model;
  TrainCurves curves;
  double wall_time = 0.0;  // s
};

// Mini-batch BPTT with AdamW; returns the best-on-validation checkpoint.
// model_cfg.input_dim is taken from the dataset.
TrainResult Train(const Dataset& data, ModelConfig model_cfg, const LossConfig& loss,
                  const TrainConfig& train);

struct EvalReport {
  GroupErrors errors;
  int count = 0;
  int triangle_violations = 0;
  int negative_outputs = 0;  // samples with a negative mass or inertia output
  Eigen::MatrixXd predictions;  // 7 x count
  Eigen::MatrixXd truth;        // 7 x count
};

EvalReport Evaluate(const TrainedModel& model, const Dataset& data,
                    const std::vector<int>& indices, const Vector7d& y_scale);

// Errors of always predicting the training-split mean label.
GroupErrors MeanPredictorErrors(const Dataset& data, const std::vector<int>& indices,
                                const Vector7d& y_scale);

nlohmann::json ToJson(const EvalReport& report);

struct LatencyStats {
  double p50 = 0.0;  // s per sample
  double p95 = 0.0;
  double max = 0.0;
  int samples = 0;
};

// Times single-sample predictions, cycling through the dataset.
LatencyStats MeasureLatency(const TrainedModel& model, const Dataset& data, int n = 500);

struct FamilyResult {
  ModelFamily family = ModelFamily::kLstm;
  int hidden = 0;
  std::size_t parameters = 0;
  EvalReport test;
  double train_seconds = 0.0;
  int rank = 0;  // 1 = lowest mass NMAE
};

// Trains each family at a parameter budget matched to `reference` and
// ranks them by test mass NMAE. Results keep the requested order.
std::vector<FamilyResult> CompareModels(const Dataset& data,
                                        const std::vector<ModelFamily>& families,
                                        const ModelConfig& reference, const LossConfig& loss,
                                        const TrainConfig& train, const Vector7d& y_scale);

void WriteComparisonCsv(const std::string& path, const std::vector<FamilyResult>& results);
void WriteCurvesCsv(const std::string& path, const TrainCurves& curves);

// Per-joint samples (q*, q, qdot*, qdot, Kp, Kd) -> delivered torque.
struct ActuatorData {
  Eigen::MatrixXd inputs;     // 6 x n
  Eigen::RowVectorXd torque;  // n
};

ActuatorData CollectActuatorData(const RobotModel& gains,
                                 const std::vector<JointTrajectory>& commands,
                                 const std::vector<RolloutRecord>& rollouts, int stride = 1);

struct ActuatorNetConfig {
  std::vector<int> hidden{32, 32};
  int epochs = 300;
  int batch_size = 256;
  double learning_rate = 3e-3;
  std::uint64_t seed = 0;
};

class ActuatorNet {
 public:
  ActuatorNet() = default;

  // in: 6 x n; returns n torques.
  Eigen::RowVectorXd Predict(const Eigen::MatrixXd& in) const;
  Vector4d PredictJoints(const RobotModel& gains, const Vector4d& q_des, const Vector4d& q,
                         const Vector4d& qdot_des, const Vector4d& qdot) const;
  bool empty() const { return mlp_.input_dim() == 0; }

  nlohmann::json ToJson() const;
  static ActuatorNet FromJson(const nlohmann::json& j);

 private:
  friend ActuatorNet TrainActuatorNet(const ActuatorData& data, const ActuatorNetConfig& cfg);

  Mlp mlp_;
  Eigen::VectorXd in_mean_, in_std_;
  double out_mean_ = 0.0;
  double out_std_ = 1.0;
};

ActuatorNet TrainActuatorNet(const ActuatorData& data, const ActuatorNetConfig& cfg);
double ActuatorRmsError(const ActuatorNet& net, const ActuatorData& data);

// Binary record file (<stem>.bin) plus JSON manifest (<stem>.json).
void SaveDataset(const std::string& stem, const Dataset& data);
Dataset LoadDataset(const std::string& stem);

void SaveModel(const std::string& path, const TrainedModel& model);
TrainedModel LoadModel(const std::string& path);

}  // namespace inertia_id

#endif  // INERTIA_ID_LEARNER_H_
