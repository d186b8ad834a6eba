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

// Exact Gaussian-process model of the residual joint torques the simulator
// misses, and its attachment to the simulator as a correction.

#ifndef INERTIA_ID_GP_H_
#define INERTIA_ID_GP_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include "inertia_id/simworld.h"
#include "inertia_id/sysid.h"
#include "json.hpp"

namespace inertia_id {

// Feature layout: q[4], qdot[4], tau_cmd[4], t.
inline constexpr int kGpFeatureDim = 13;

// Which feature groups enter the kernel. The commanded torque is off by
// default: in closed loop it reacts to the correction's own error.
struct GpFeatureSet {
  bool q = true;
  bool qdot = true;
  bool tau_cmd = false;
  bool time = true;

  Eigen::VectorXd Mask() const;  // 13 entries of 0 or 1
};

Eigen::Matrix<double, kGpFeatureDim, 1> GpFeature(const Vector4d& q, const Vector4d& qdot,
                                                   const Vector4d& tau_cmd, double t);

struct GpHyper {
  double variance = 1.0;     // sigma^2, target units^2
  double lengthscale = 1.0;  // standardized feature units
  double noise_var = 1e-2;   // target units^2
};

// sigma^2 exp(-|a - b|^2 / (2 l^2)).
double RbfKernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double variance,
                 double lengthscale);
// Gram matrix over the rows of z.
Eigen::MatrixXd RbfGram(const Eigen::MatrixXd& z, double variance, double lengthscale);

struct ResidualDataset {
  Eigen::MatrixXd features;  // n x 13, raw units
  Eigen::MatrixXd targets;   // n x 4 residual joint torques, N m

  Eigen::Index size() const { return features.rows(); }
  void Validate() const;
};

// Replays every target command in `sim` at the recorded target states. The
// target side uses central differences of the recorded qdot; the simulator
// side uses the matching average of its one-step accelerations, so a zero
// gap yields zero residuals. The acceleration gap is mapped to a joint
// torque through the simulator's mass matrix. Keeps every `stride`-th
// interior sample.
ResidualDataset BuildResidualDataset(const World& sim, const SimConfig& config,
                                     const TargetDataset& data, int stride = 5);

// Variance and noise are given relative to each joint's target mean square,
// so the defaults mean "one target RMS" whatever the units.
struct GpFitConfig {
  bool optimize = true;
  GpFeatureSet features;
  GpHyper init;
  int restarts = 3;  // starts of the coordinate search, the first at `init`
  std::uint64_t seed = 0;
  // Search box, log10 units (variance and noise relative as above).
  double log_variance_min = -3.0, log_variance_max = 1.0;
  double log_lengthscale_min = -1.0, log_lengthscale_max = 1.0;
  double log_noise_min = -8.0, log_noise_max = 0.0;
  int max_evals = 300;  // per start
  int threads = 0;

  void Validate() const;
};

struct GpPrediction {
  Vector4d mean = Vector4d::Zero();
  Vector4d variance = Vector4d::Zero();         // predictive: latent + noise
  Vector4d latent_variance = Vector4d::Zero();  // of the noise-free function
};

// Four independent scalar GPs over shared, standardized inputs. A
// default-constructed model has no data and predicts the zero prior mean.
class GpModel {
 public:
  GpModel() = default;

  Eigen::Index size() const { return inputs_.rows(); }
  bool empty() const { return inputs_.rows() == 0; }
  const std::array<GpHyper, kNumJoints>& hyper() const { return hyper_; }
  const Eigen::VectorXd& feature_mask() const { return feature_mask_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }  // standardized
  const Eigen::MatrixXd& targets() const { return targets_; }
  double jitter(int joint) const { return jitter_[joint]; }

  GpPrediction Predict(const Eigen::VectorXd& feature) const;
  Vector4d Mean(const Eigen::VectorXd& feature) const;
  // Predicts every row of `features` (n x 13); returns n x 4 means.
  Eigen::MatrixXd MeanBatch(const Eigen::MatrixXd& features) const;

  nlohmann::json ToJson() const;
  static GpModel FromJson(const nlohmann::json& j);

 private:
  friend GpModel FitGp(const ResidualDataset& data, const GpFitConfig& config);
  friend GpModel FitGpFixed(const ResidualDataset& data,
                            const std::array<GpHyper, kNumJoints>& hyper,
                            const GpFeatureSet& features);

  void Factorize();
  Eigen::VectorXd Standardize(const Eigen::VectorXd& feature) const;

  Eigen::VectorXd feature_mean_ = Eigen::VectorXd::Zero(kGpFeatureDim);
  Eigen::VectorXd feature_scale_ = Eigen::VectorXd::Ones(kGpFeatureDim);
  Eigen::VectorXd feature_mask_ = GpFeatureSet().Mask();
  Eigen::MatrixXd inputs_;   // standardized, n x 13
  Eigen::MatrixXd targets_;  // n x 4
  std::array<GpHyper, kNumJoints> hyper_;
  std::array<double, kNumJoints> jitter_{};
  std::array<Eigen::MatrixXd, kNumJoints> chol_;  // lower factor of K + (noise + jitter variance) I
  std::array<Eigen::VectorXd, kNumJoints> alpha_;
};

// Log marginal likelihood of targets y over standardized inputs z; -inf when
// the Gram matrix cannot be factorized even with jitter.
double LogMarginalLikelihood(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                             const GpHyper& hyper);

// Standardizes features, then maximizes each joint's log marginal likelihood
// by a bounded coordinate search in log space. Throws kIllConditioned when a
// factorization fails after relative jitter escalation to 1e-4, kInvalidArgument for
// an empty or oversized (> 5000 rows) dataset.
GpModel FitGp(const ResidualDataset& data, const GpFitConfig& config = GpFitConfig());
// Same, with hyperparameters held fixed (in target units).
GpModel FitGpFixed(const ResidualDataset& data, const std::array<GpHyper, kNumJoints>& hyper,
                   const GpFeatureSet& features = GpFeatureSet());

// Adds the GP mean to the simulator's joint torques.
SimConfig AttachCorrection(const SimConfig& config, std::shared_ptr<const GpModel> model);

void SaveGp(const std::string& path, const GpModel& model);
GpModel LoadGp(const std::string& path);
// CSV columns: q1..q4, qd1..qd4, tau1..tau4, t, r1..r4.
void WriteResidualCsv(const std::string& path, const ResidualDataset& data);
ResidualDataset ReadResidualCsv(const std::string& path);

}  // namespace inertia_id

#endif  // INERTIA_ID_GP_H_
