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

// Hand-written neural building blocks: sequence regressors (gated recurrent,
// plain recurrent, 1-D convolutional, attention pooling) with explicit
// backward passes, a small multilayer perceptron and the AdamW optimizer.

#ifndef INERTIA_ID_NN_H_
#define INERTIA_ID_NN_H_

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace inertia_id {

// Trainable tensor with its gradient and optimizer moments.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  Tensor() = default;
  Tensor(std::string tensor_name, Eigen::Index rows, Eigen::Index cols);
};

// Batched sequence: one (channels x batch) matrix per time step.
using SequenceBatch = std::vector<Eigen::MatrixXd>;

enum class ModelFamily { kLstm, kRnn, kCnn, kAttention };

const char* FamilyName(ModelFamily family);
ModelFamily FamilyFromName(const std::string& name);

struct ModelConfig {
  ModelFamily family = ModelFamily::kLstm;
  int input_dim = 8;
  int hidden = 64;
  int layers = 2;
  int kernel = 5;  // convolution width, kCnn only
  int output_dim = 7;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const ModelConfig& cfg);
ModelConfig ModelConfigFromJson(const nlohmann::json& j);

// Sequence -> vector regressor. Forward is const and thread-safe;
// ForwardTrain keeps the activations that Backward consumes.
class SequenceRegressor {
 public:
  explicit SequenceRegressor(const ModelConfig& cfg);
  SequenceRegressor(const SequenceRegressor& other);
  SequenceRegressor& operator=(const SequenceRegressor& other);
  SequenceRegressor(SequenceRegressor&&) noexcept;
  SequenceRegressor& operator=(SequenceRegressor&&) noexcept;
  ~SequenceRegressor();

  const ModelConfig& config() const { return cfg_; }

  // Returns output_dim x batch.
  Eigen::MatrixXd Forward(const SequenceBatch& x) const;
  Eigen::MatrixXd ForwardTrain(const SequenceBatch& x);
  // Accumulates parameter gradients given d loss / d output.
  void Backward(const Eigen::MatrixXd& dout);
  void ZeroGrad();

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  std::size_t NumParameters() const;
  bool AllFinite() const;

  nlohmann::json ToJson() const;
  static SequenceRegressor FromJson(const nlohmann::json& j);

  struct Tape;

 private:
  void Run(const SequenceBatch& x, Tape& tape) const;

  ModelConfig cfg_;
  std::vector<Tensor> params_;
  std::unique_ptr<Tape> tape_;
};

// Parameter count of a configuration, without building it.
std::size_t CountParameters(const ModelConfig& cfg);

// Smallest hidden width whose parameter count reaches `budget`.
int MatchHiddenWidth(ModelConfig cfg, std::size_t budget);

// Fully connected network with tanh hidden layers and a linear output.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }

  // x: input_dim x batch.
  Eigen::MatrixXd Forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd ForwardTrain(const Eigen::MatrixXd& x);
  void Backward(const Eigen::MatrixXd& dout);
  void ZeroGrad();

  std::vector<Tensor>& parameters() { return params_; }
  const std::vector<Tensor>& parameters() const { return params_; }

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<Tensor> params_;         // W0, b0, W1, b1, ...
  std::vector<Eigen::MatrixXd> acts_;  // layer inputs, then the output
};

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping
};

// Adaptive-moment descent with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(const AdamWConfig& cfg) : cfg_(cfg) {}

  // Clips, then updates; returns the gradient norm before clipping.
  double Step(std::vector<Tensor>& params);
  long steps() const { return t_; }

 private:
  AdamWConfig cfg_;
  long t_ = 0;
};

double GradientNorm(const std::vector<Tensor>& params);

nlohmann::json TensorToJson(const Tensor& t);
Tensor TensorFromJson(const nlohmann::json& j);

}  // namespace inertia_id

#endif  // INERTIA_ID_NN_H_
