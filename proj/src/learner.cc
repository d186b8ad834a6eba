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

#include "inertia_id/learner.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

#include "inertia_id/common.h"
#include "inertia_id/parallel.h"

namespace inertia_id {

using Eigen::MatrixXd;

namespace {

std::vector<int> SortedById(const std::vector<SequenceSample>& samples, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return samples[a].id < samples[b].id; });
  return idx;
}

// Fisher-Yates with raw 64-bit draws (identical across standard libraries).
void Shuffle(std::vector<int>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

double SafeStd(double var) {
  const double s = std::sqrt(std::max(var, 0.0));
  return s > 1e-12 ? s : 1.0;
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

nlohmann::json VecToJson(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd VecFromJson(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Normalized inputs of data.samples[indices] as one batch.
SequenceBatch MakeBatch(const std::vector<MatrixXd>& xs, const std::vector<int>& order,
                        std::size_t begin, std::size_t end) {
  const Eigen::Index steps = xs[order[begin]].rows();
  const Eigen::Index c = xs[order[begin]].cols();
  SequenceBatch batch(steps, MatrixXd(c, static_cast<Eigen::Index>(end - begin)));
  for (std::size_t j = begin; j < end; ++j) {
    const MatrixXd& x = xs[order[j]];
    for (Eigen::Index t = 0; t < steps; ++t) {
      batch[t].col(static_cast<Eigen::Index>(j - begin)) = x.row(t).transpose();
    }
  }
  return batch;
}

MatrixXd MakeTargets(const std::vector<Vector7d>& ys, const std::vector<int>& order,
                     std::size_t begin, std::size_t end) {
  MatrixXd y(kTargetDim, static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) y.col(static_cast<Eigen::Index>(j - begin)) = ys[order[j]];
  return y;
}

void CheckShape(const TrainedModel& model, const MatrixXd& x) {
  if (x.rows() != model.steps() || x.cols() != model.channels()) {
    throw Error(ErrorCode::kShapeMismatch,
                "expected a " + std::to_string(model.steps()) + " x " +
                    std::to_string(model.channels()) + " input, got " + std::to_string(x.rows()) +
                    " x " + std::to_string(x.cols()));
  }
}

}  // namespace

nlohmann::json ToJson(const Normalization& n) {
  return {{"x_mean", VecToJson(n.x_mean)}, {"x_std", VecToJson(n.x_std)},
          {"y_mean", VecToJson(n.y_mean)}, {"y_std", VecToJson(n.y_std)}};
}

Normalization NormalizationFromJson(const nlohmann::json& j) {
  Normalization n;
  n.x_mean = VecFromJson(j.at("x_mean"));
  n.x_std = VecFromJson(j.at("x_std"));
  const Eigen::VectorXd ym = VecFromJson(j.at("y_mean"));
  const Eigen::VectorXd ys = VecFromJson(j.at("y_std"));
  if (ym.size() != kTargetDim || ys.size() != kTargetDim || n.x_mean.size() != n.x_std.size()) {
    throw Error(ErrorCode::kShapeMismatch, "normalization stats have the wrong size");
  }
  n.y_mean = ym;
  n.y_std = ys;
  return n;
}

MatrixXd Normalization::NormalizeX(const MatrixXd& x) const {
  if (x.cols() != x_mean.size()) throw Error(ErrorCode::kShapeMismatch, "channel count");
  return ((x.rowwise() - x_mean.transpose()).array().rowwise() / x_std.transpose().array())
      .matrix();
}

Vector7d Normalization::NormalizeY(const Vector7d& y) const {
  return (y - y_mean).cwiseQuotient(y_std);
}

Vector7d Normalization::DenormalizeY(const Vector7d& y_n) const {
  return y_n.cwiseProduct(y_std) + y_mean;
}

Normalization ComputeNormalization(const std::vector<SequenceSample>& samples,
                                   const std::vector<int>& indices) {
  if (indices.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples for normalization");
  const std::vector<int> order = SortedById(samples, indices);
  const Eigen::Index c = samples[order[0]].x.cols();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(c);
  double rows = 0.0;
  Vector7d ysum = Vector7d::Zero();
  for (int i : order) {
    sum += samples[i].x.colwise().sum().transpose();
    rows += static_cast<double>(samples[i].x.rows());
    ysum += samples[i].y;
  }
  Normalization n;
  n.x_mean = sum / rows;
  n.y_mean = ysum / static_cast<double>(order.size());
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(c);
  Vector7d ysq = Vector7d::Zero();
  for (int i : order) {
    sq += (samples[i].x.rowwise() - n.x_mean.transpose()).colwise().squaredNorm().transpose();
    ysq += (samples[i].y - n.y_mean).cwiseAbs2();
  }
  n.x_std.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) n.x_std(k) = SafeStd(sq(k) / rows);
  for (int k = 0; k < kTargetDim; ++k) {
    n.y_std(k) = SafeStd(ysq(k) / static_cast<double>(order.size()));
  }
  return n;
}

void Dataset::Validate() const {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "empty dataset");
  const Eigen::Index t = samples[0].x.rows();
  const Eigen::Index c = samples[0].x.cols();
  if (t < 1 || c < 1) throw Error(ErrorCode::kShapeMismatch, "empty input sequences");
  for (const auto& s : samples) {
    if (s.x.rows() != t || s.x.cols() != c) {
      throw Error(ErrorCode::kShapeMismatch, "samples differ in sequence shape");
    }
    if (!s.x.allFinite() || !s.y.allFinite()) {
      throw Error(ErrorCode::kNonFinite, "sample '" + s.label + "' is not finite");
    }
  }
  std::vector<int> seen(samples.size(), 0);
  for (const auto* split : {&train, &val, &test}) {
    for (int i : *split) {
      if (i < 0 || i >= size()) throw Error(ErrorCode::kInvalidArgument, "split index out of range");
      ++seen[i];
    }
  }
  if (std::any_of(seen.begin(), seen.end(), [](int k) { return k != 1; })) {
    throw Error(ErrorCode::kInvalidArgument, "splits must be disjoint and exhaustive");
  }
}

void AssignSplits(Dataset& data, int n_train, int n_val) {
  const int m = data.size();
  if (n_train < 1 || n_val < 0 || n_train + n_val > m) {
    throw Error(ErrorCode::kInvalidArgument, "split sizes do not fit the dataset");
  }
  std::vector<int> all(m);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> order = SortedById(data.samples, all);
  std::mt19937_64 rng(data.seed ^ 0x5851f42d4c957f2dULL);
  Shuffle(order, rng);
  auto take = [&](int begin, int end) {
    return SortedById(data.samples, std::vector<int>(order.begin() + begin, order.begin() + end));
  };
  data.train = take(0, n_train);
  data.val = take(n_train, n_train + n_val);
  data.test = take(n_train + n_val, m);
  data.stats = ComputeNormalization(data.samples, data.train);
}

Dataset SelectChannels(const Dataset& data, int channels) {
  if (channels < 1 || channels > data.channels()) {
    throw Error(ErrorCode::kShapeMismatch, "channel selection out of range");
  }
  Dataset out = data;
  for (auto& s : out.samples) s.x = MatrixXd(s.x.leftCols(channels));
  out.stats = ComputeNormalization(out.samples, out.train);
  return out;
}

void DatasetConfig::Validate() const {
  if (num_samples < 3 || stride < 1 || max_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dataset needs >= 3 samples, stride >= 1");
  }
  if (!(train_fraction > 0.0) || !(val_fraction >= 0.0) || train_fraction + val_fraction >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "split fractions must leave a test split");
  }
}

std::string FillsLabel(const HoleFills& fills) {
  std::string s;
  for (HoleFill f : fills) s += f == HoleFill::kSteel ? 'S' : (f == HoleFill::kAbs ? 'A' : 'E');
  return s;
}

Dataset GenerateDataset(const World& world, const SimConfig& config,
                        const JointTrajectory& command, const DatasetConfig& cfg,
                        const ActuatorNet* actuator, const ObjectDesign& design) {
  cfg.Validate();
  if (cfg.torque == TorqueChannel::kActuatorNet && (!actuator || actuator->empty())) {
    throw Error(ErrorCode::kInvalidArgument, "actuator-network torques need a trained network");
  }
  const int steps = static_cast<int>(command.size()) / cfg.stride;
  if (steps < 1) throw Error(ErrorCode::kTooShort, "command shorter than one input step");
  const int channels = cfg.torque == TorqueChannel::kNone ? kStateChannels : kTorqueChannels;
  const int m = cfg.num_samples;

  Dataset data;
  data.seed = cfg.seed;
  data.sample_dt = command.dt * cfg.stride;
  data.samples.resize(m);
  std::vector<int> retries(m, 0);
  ParallelFor(
      m,
      [&](int i) {
        for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
          std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                            static_cast<std::uint32_t>(cfg.seed >> 32),
                            static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(attempt)};
          std::mt19937_64 rng(seq);
          const HoleFills fills = SampleFills(rng);
          const std::string label = FillsLabel(fills);
          const CompositeObject object = BuildObject(fills, label, design);
          RolloutRecord rec;
          try {
            rec = Rollout(world, config, command, PayloadInEeFrame(object), label);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::kDiverged || e.code() == ErrorCode::kSingularMassMatrix) {
              ++retries[i];
              continue;
            }
            throw;
          }
          SequenceSample& s = data.samples[i];
          s.x.resize(steps, channels);
          for (int t = 0; t < steps; ++t) {
            const int k = t * cfg.stride;
            const RolloutSample& r = rec.samples[k];
            s.x.row(t).head<4>() = r.q.transpose();
            s.x.row(t).segment<4>(4) = r.qdot.transpose();
            if (cfg.torque == TorqueChannel::kMeasured) {
              s.x.row(t).tail<4>() = r.tau.transpose();
            } else if (cfg.torque == TorqueChannel::kActuatorNet) {
              s.x.row(t).tail<4>() = actuator
                                         ->PredictJoints(world.model, command.q[k], r.q,
                                                         command.qdot[k], r.qdot)
                                         .transpose();
            }
          }
          s.y = TargetVector(ObjectParams(object));
          s.label = label;
          s.id = static_cast<std::uint64_t>(i);
          return;
        }
        throw Error(ErrorCode::kDiverged,
                    "sample " + std::to_string(i) + " diverged in every attempt");
      },
      cfg.threads);
  data.resampled = std::accumulate(retries.begin(), retries.end(), 0);
  const int n_train = static_cast<int>(std::lround(m * cfg.train_fraction));
  const int n_val = static_cast<int>(std::lround(m * cfg.val_fraction));
  if (n_train < 1 || n_train + n_val >= m) {
    throw Error(ErrorCode::kInvalidArgument, "too few samples for three splits");
  }
  AssignSplits(data, n_train, n_val);
  return data;
}

void LossConfig::Validate() const {
  if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0 || pos_scale < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  }
  for (int k : pos_indices) {
    if (k < 0 || k >= kTargetDim) throw Error(ErrorCode::kInvalidArgument, "pos index out of range");
  }
}

double Softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double LossTri(double ixx, double iyy, double izz) {
  return Softplus(ixx - iyy - izz) + Softplus(iyy - ixx - izz) + Softplus(izz - ixx - iyy);
}

Vector3d LossTriGradient(double ixx, double iyy, double izz) {
  const double sx = Sigmoid(ixx - iyy - izz);
  const double sy = Sigmoid(iyy - ixx - izz);
  const double sz = Sigmoid(izz - ixx - iyy);
  return {sx - sy - sz, sy - sx - sz, sz - sx - sy};
}

double LossPos(const MatrixXd& y_hat, const LossConfig& cfg) {
  double sum = 0.0;
  for (Eigen::Index b = 0; b < y_hat.cols(); ++b) {
    for (int k : cfg.pos_indices) sum += std::abs(std::min(y_hat(k, b), 0.0));
  }
  return cfg.pos_scale * sum;
}

LossTerms TotalLoss(const MatrixXd& y_hat_n, const MatrixXd& y_n, const Normalization& stats,
                    const LossConfig& cfg, MatrixXd* grad) {
  if (y_hat_n.rows() != kTargetDim || y_hat_n.rows() != y_n.rows() ||
      y_hat_n.cols() != y_n.cols() || y_n.cols() == 0) {
    throw Error(ErrorCode::kShapeMismatch, "prediction and target shapes differ");
  }
  const double b = static_cast<double>(y_n.cols());
  const MatrixXd diff = y_hat_n - y_n;
  const MatrixXd raw =
      (y_hat_n.array().colwise() * stats.y_std.array()).colwise() + stats.y_mean.array();
  LossTerms terms;
  terms.mse = diff.squaredNorm() / (kTargetDim * b);
  for (Eigen::Index c = 0; c < raw.cols(); ++c) terms.tri += LossTri(raw(4, c), raw(5, c), raw(6, c));
  terms.tri /= b;
  terms.pos = LossPos(raw, cfg);
  terms.total = cfg.w1 * terms.mse + cfg.w2 * terms.tri + cfg.w3 * terms.pos;
  if (grad) {
    MatrixXd draw = MatrixXd::Zero(kTargetDim, raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      draw.block<3, 1>(4, c) = (cfg.w2 / b) * LossTriGradient(raw(4, c), raw(5, c), raw(6, c));
      for (int k : cfg.pos_indices) {
        if (raw(k, c) < 0.0) draw(k, c) -= cfg.w3 * cfg.pos_scale;
      }
    }
    *grad = (2.0 * cfg.w1 / (kTargetDim * b)) * diff +
            MatrixXd((draw.array().colwise() * stats.y_std.array()).matrix());
  }
  return terms;
}

void TrainConfig::Validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0) || weight_decay < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "training hyperparameters must be positive");
  }
}

nlohmann::json ToJson(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"clip_norm", cfg.clip_norm},
          {"seed", cfg.seed}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.Validate();
  return cfg;
}

nlohmann::json ToJson(const LossConfig& cfg) {
  return {{"w1", cfg.w1},
          {"w2", cfg.w2},
          {"w3", cfg.w3},
          {"pos_scale", cfg.pos_scale},
          {"pos_indices", cfg.pos_indices}};
}

LossConfig LossConfigFromJson(const nlohmann::json& j) {
  LossConfig cfg;
  cfg.w1 = j.value("w1", cfg.w1);
  cfg.w2 = j.value("w2", cfg.w2);
  cfg.w3 = j.value("w3", cfg.w3);
  cfg.pos_scale = j.value("pos_scale", cfg.pos_scale);
  cfg.pos_indices = j.value("pos_indices", cfg.pos_indices);
  cfg.Validate();
  return cfg;
}

TrainedModel::TrainedModel(SequenceRegressor net, Normalization stats, int steps)
    : net_(std::move(net)), stats_(std::move(stats)), steps_(steps) {
  if (net_.config().output_dim != kTargetDim || stats_.x_mean.size() != net_.config().input_dim) {
    throw Error(ErrorCode::kShapeMismatch, "model and normalization disagree");
  }
}

Vector7d TrainedModel::Predict(const MatrixXd& x) const {
  CheckShape(*this, x);
  const MatrixXd xn = stats_.NormalizeX(x);
  SequenceBatch batch(steps_);
  for (int t = 0; t < steps_; ++t) batch[t] = xn.row(t).transpose();
  return stats_.DenormalizeY(net_.Forward(batch).col(0));
}

MatrixXd TrainedModel::PredictMany(const Dataset& data, const std::vector<int>& indices) const {
  if (indices.empty()) return MatrixXd(kTargetDim, 0);
  std::vector<MatrixXd> xs(data.samples.size());
  for (int i : indices) {
    CheckShape(*this, data.samples[i].x);
    xs[i] = stats_.NormalizeX(data.samples[i].x);
  }
  MatrixXd y = net_.Forward(MakeBatch(xs, indices, 0, indices.size()));
  for (Eigen::Index c = 0; c < y.cols(); ++c) y.col(c) = stats_.DenormalizeY(y.col(c));
  return y;
}

nlohmann::json TrainedModel::ToJson() const {
  return {{"format", "inertia_id.sequence_model"},
          {"steps", steps_},
          {"stats", inertia_id::ToJson(stats_)},
          {"net", net_.ToJson()}};
}

TrainedModel TrainedModel::FromJson(const nlohmann::json& j) {
  return TrainedModel(SequenceRegressor::FromJson(j.at("net")),
                      NormalizationFromJson(j.at("stats")), j.at("steps").get<int>());
}

TrainResult Train(const Dataset& data, ModelConfig model_cfg, const LossConfig& loss,
                  const TrainConfig& train) {
  const auto start = std::chrono::steady_clock::now();
  data.Validate();
  loss.Validate();
  train.Validate();
  if (data.train.empty() || data.val.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "training needs nonempty train and val splits");
  }
  model_cfg.input_dim = data.channels();
  model_cfg.output_dim = kTargetDim;
  SequenceRegressor net(model_cfg);

  std::vector<MatrixXd> xs(data.samples.size());
  std::vector<Vector7d> ys(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    xs[i] = data.stats.NormalizeX(data.samples[i].x);
    ys[i] = data.stats.NormalizeY(data.samples[i].y);
  }
  std::vector<int> order = SortedById(data.samples, data.train);
  const std::vector<int> val = SortedById(data.samples, data.val);
  const SequenceBatch val_x = MakeBatch(xs, val, 0, val.size());
  const MatrixXd val_y = MakeTargets(ys, val, 0, val.size());

  AdamWConfig opt_cfg;
  opt_cfg.learning_rate = train.learning_rate;
  opt_cfg.weight_decay = train.weight_decay;
  opt_cfg.clip_norm = train.clip_norm;
  AdamW opt(opt_cfg);
  std::mt19937_64 rng(train.seed);

  TrainCurves curves;
  SequenceRegressor best = net;
  double best_val = std::numeric_limits<double>::infinity();
  MatrixXd grad;
  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    Shuffle(order, rng);
    double sum = 0.0;
    int batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += train.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + train.batch_size);
      const SequenceBatch x = MakeBatch(xs, order, begin, end);
      const MatrixXd y = MakeTargets(ys, order, begin, end);
      net.ZeroGrad();
      const LossTerms terms = TotalLoss(net.ForwardTrain(x), y, data.stats, loss, &grad);
      if (!std::isfinite(terms.total)) {
        throw Error(ErrorCode::kNonFinite, "loss is not finite at epoch " + std::to_string(epoch) +
                                               ", batch " + std::to_string(batch_index));
      }
      net.Backward(grad);
      opt.Step(net.parameters());
      sum += terms.total * static_cast<double>(end - begin);
    }
    curves.train_loss.push_back(sum / static_cast<double>(order.size()));
    const double v = TotalLoss(net.Forward(val_x), val_y, data.stats, loss).total;
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, "validation loss is not finite at epoch " +
                                             std::to_string(epoch));
    }
    curves.val_loss.push_back(v);
    if (v < best_val) {
      best_val = v;
      best = net;
      curves.best_epoch = epoch;
    }
  }
  TrainResult result{TrainedModel(std::move(best), data.stats, data.steps()), curves, 0.0};
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

EvalReport Evaluate(const TrainedModel& model, const Dataset& data,
                    const std::vector<int>& indices, const Vector7d& y_scale) {
  EvalReport report;
  report.count = static_cast<int>(indices.size());
  report.predictions = model.PredictMany(data, indices);
  report.truth.resize(kTargetDim, report.count);
  std::vector<GroupErrors> errors;
  for (int c = 0; c < report.count; ++c) {
    const Vector7d p = report.predictions.col(c);
    report.truth.col(c) = data.samples[indices[c]].y;
    errors.push_back(EvaluateEstimate(p, data.samples[indices[c]].y, y_scale));
    if (!TriangleInequalityHolds(p(4), p(5), p(6))) ++report.triangle_violations;
    if (p(0) < 0.0 || p(4) < 0.0 || p(5) < 0.0 || p(6) < 0.0) ++report.negative_outputs;
  }
  report.errors = MeanErrors(errors);
  return report;
}

GroupErrors MeanPredictorErrors(const Dataset& data, const std::vector<int>& indices,
                                const Vector7d& y_scale) {
  std::vector<GroupErrors> errors;
  for (int i : indices) errors.push_back(EvaluateEstimate(data.stats.y_mean, data.samples[i].y, y_scale));
  return MeanErrors(errors);
}

nlohmann::json ToJson(const EvalReport& report) {
  return {{"count", report.count},
          {"errors", inertia_id::ToJson(report.errors)},
          {"triangle_violations", report.triangle_violations},
          {"negative_outputs", report.negative_outputs}};
}

LatencyStats MeasureLatency(const TrainedModel& model, const Dataset& data, int n) {
  if (n < 1 || data.samples.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to time");
  std::vector<double> times;
  times.reserve(n);
  for (int i = 0; i < n; ++i) {
    const MatrixXd& x = data.samples[i % data.size()].x;
    const auto t0 = std::chrono::steady_clock::now();
    const Vector7d y = model.Predict(x);
    const auto t1 = std::chrono::steady_clock::now();
    if (!y.allFinite()) throw Error(ErrorCode::kNonFinite, "prediction is not finite");
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  auto at = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * n)) - 1;
    return times[std::min(k, times.size() - 1)];
  };
  return {at(0.5), at(0.95), times.back(), n};
}

std::vector<FamilyResult> CompareModels(const Dataset& data,
                                        const std::vector<ModelFamily>& families,
                                        const ModelConfig& reference, const LossConfig& loss,
                                        const TrainConfig& train, const Vector7d& y_scale) {
  ModelConfig ref = reference;
  ref.input_dim = data.channels();
  ref.output_dim = kTargetDim;
  const std::size_t budget = CountParameters(ref);
  std::vector<FamilyResult> results;
  for (ModelFamily f : families) {
    ModelConfig cfg = ref;
    cfg.family = f;
    if (f != ref.family) cfg.hidden = MatchHiddenWidth(cfg, budget);
    const TrainResult tr = Train(data, cfg, loss, train);
    FamilyResult r;
    r.family = f;
    r.hidden = cfg.hidden;
    r.parameters = CountParameters(cfg);
    r.test = Evaluate(tr.model, data, data.test, y_scale);
    r.train_seconds = tr.wall_time;
    results.push_back(std::move(r));
  }
  std::vector<int> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return results[a].test.errors.nmae[0] < results[b].test.errors.nmae[0];
  });
  for (std::size_t r = 0; r < order.size(); ++r) results[order[r]].rank = static_cast<int>(r) + 1;
  return results;
}

void WriteComparisonCsv(const std::string& path, const std::vector<FamilyResult>& results) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "family,hidden,parameters,mass_nmae,com_nmae,inertia_nmae,mass_mae,com_mae,inertia_mae,"
         "triangle_violations,rank\n"
      << std::setprecision(17);
  for (const auto& r : results) {
    const GroupErrors& e = r.test.errors;
    out << FamilyName(r.family) << ',' << r.hidden << ',' << r.parameters << ',' << e.nmae[0]
        << ',' << e.nmae[1] << ',' << e.nmae[2] << ',' << e.mae[0] << ',' << e.mae[1] << ','
        << e.mae[2] << ',' << r.test.triangle_violations << ',' << r.rank << '\n';
  }
}

void WriteCurvesCsv(const std::string& path, const TrainCurves& curves) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "epoch,train_loss,val_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < curves.train_loss.size(); ++e) {
    out << e << ',' << curves.train_loss[e] << ',' << curves.val_loss[e] << '\n';
  }
}

ActuatorData CollectActuatorData(const RobotModel& gains,
                                 const std::vector<JointTrajectory>& commands,
                                 const std::vector<RolloutRecord>& rollouts, int stride) {
  if (commands.size() != rollouts.size() || stride < 1) {
    throw Error(ErrorCode::kLengthMismatch, "need one command per rollout and stride >= 1");
  }
  std::size_t n = 0;
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    if (commands[r].size() != rollouts[r].size()) {
      throw Error(ErrorCode::kLengthMismatch, "command and rollout lengths differ");
    }
    n += kNumJoints * ((rollouts[r].size() + stride - 1) / stride);
  }
  ActuatorData data;
  data.inputs.resize(6, static_cast<Eigen::Index>(n));
  data.torque.resize(static_cast<Eigen::Index>(n));
  Eigen::Index c = 0;
  for (std::size_t r = 0; r < rollouts.size(); ++r) {
    for (std::size_t k = 0; k < rollouts[r].size(); k += stride) {
      const RolloutSample& s = rollouts[r].samples[k];
      for (int j = 0; j < kNumJoints; ++j, ++c) {
        data.inputs.col(c) << commands[r].q[k](j), s.q(j), commands[r].qdot[k](j), s.qdot(j),
            gains.kp(j), gains.kd(j);
        data.torque(c) = s.tau(j);
      }
    }
  }
  return data;
}

Eigen::RowVectorXd ActuatorNet::Predict(const MatrixXd& in) const {
  if (empty()) throw Error(ErrorCode::kInvalidArgument, "actuator network is not trained");
  const MatrixXd z = ((in.colwise() - in_mean_).array().colwise() / in_std_.array()).matrix();
  return (mlp_.Forward(z).array() * out_std_ + out_mean_).matrix();
}

Vector4d ActuatorNet::PredictJoints(const RobotModel& gains, const Vector4d& q_des,
                                    const Vector4d& q, const Vector4d& qdot_des,
                                    const Vector4d& qdot) const {
  Eigen::Matrix<double, 6, 4> in;
  in << q_des.transpose(), q.transpose(), qdot_des.transpose(), qdot.transpose(),
      gains.kp.transpose(), gains.kd.transpose();
  return Predict(in).transpose();
}

nlohmann::json ActuatorNet::ToJson() const {
  return {{"format", "inertia_id.actuator_net"},
          {"mlp", mlp_.ToJson()},
          {"in_mean", VecToJson(in_mean_)},
          {"in_std", VecToJson(in_std_)},
          {"out_mean", out_mean_},
          {"out_std", out_std_}};
}

ActuatorNet ActuatorNet::FromJson(const nlohmann::json& j) {
  ActuatorNet net;
  net.mlp_ = Mlp::FromJson(j.at("mlp"));
  net.in_mean_ = VecFromJson(j.at("in_mean"));
  net.in_std_ = VecFromJson(j.at("in_std"));
  net.out_mean_ = j.at("out_mean").get<double>();
  net.out_std_ = j.at("out_std").get<double>();
  if (net.mlp_.input_dim() != 6 || net.in_mean_.size() != 6 || net.in_std_.size() != 6) {
    throw Error(ErrorCode::kShapeMismatch, "actuator network expects 6 inputs");
  }
  return net;
}

ActuatorNet TrainActuatorNet(const ActuatorData& data, const ActuatorNetConfig& cfg) {
  const Eigen::Index n = data.inputs.cols();
  if (data.inputs.rows() != 6 || data.torque.size() != n || n == 0) {
    throw Error(ErrorCode::kShapeMismatch, "actuator data must be 6 x n with n torques");
  }
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "actuator training hyperparameters must be positive");
  }
  ActuatorNet net;
  net.in_mean_ = data.inputs.rowwise().mean();
  net.in_std_.resize(6);
  for (int r = 0; r < 6; ++r) {
    net.in_std_(r) = SafeStd((data.inputs.row(r).array() - net.in_mean_(r)).square().mean());
  }
  net.out_mean_ = data.torque.mean();
  net.out_std_ = SafeStd((data.torque.array() - net.out_mean_).square().mean());
  const MatrixXd z =
      ((data.inputs.colwise() - net.in_mean_).array().colwise() / net.in_std_.array()).matrix();
  const Eigen::RowVectorXd t = (data.torque.array() - net.out_mean_) / net.out_std_;
  net.mlp_ = Mlp(6, cfg.hidden, 1, cfg.seed);

  AdamWConfig opt_cfg;
  opt_cfg.learning_rate = cfg.learning_rate;
  opt_cfg.weight_decay = 0.0;
  AdamW opt(opt_cfg);
  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Shuffle(order, rng);
    for (Eigen::Index begin = 0; begin < n; begin += cfg.batch_size) {
      const Eigen::Index end = std::min<Eigen::Index>(n, begin + cfg.batch_size);
      MatrixXd x(6, end - begin);
      MatrixXd y(1, end - begin);
      for (Eigen::Index k = begin; k < end; ++k) {
        x.col(k - begin) = z.col(order[k]);
        y(0, k - begin) = t(order[k]);
      }
      net.mlp_.ZeroGrad();
      const MatrixXd out = net.mlp_.ForwardTrain(x);
      net.mlp_.Backward(2.0 * (out - y) / static_cast<double>(end - begin));
      opt.Step(net.mlp_.parameters());
    }
  }
  return net;
}

double ActuatorRmsError(const ActuatorNet& net, const ActuatorData& data) {
  return std::sqrt((net.Predict(data.inputs) - data.torque).squaredNorm() /
                   static_cast<double>(data.torque.size()));
}

namespace {

constexpr char kDatasetMagic[4] = {'I', 'I', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;

}  // namespace

void SaveDataset(const std::string& stem, const Dataset& data) {
  data.Validate();
  {
    std::ofstream out(stem + ".bin", std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + stem + ".bin");
    out.write(kDatasetMagic, 4);
    out.write(reinterpret_cast<const char*>(&kDatasetVersion), sizeof(kDatasetVersion));
    const std::uint64_t dims[3] = {static_cast<std::uint64_t>(data.size()),
                                   static_cast<std::uint64_t>(data.steps()),
                                   static_cast<std::uint64_t>(data.channels())};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    for (const auto& s : data.samples) {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = s.x;
      out.write(reinterpret_cast<const char*>(x.data()),
                static_cast<std::streamsize>(x.size() * sizeof(double)));
      out.write(reinterpret_cast<const char*>(s.y.data()), kTargetDim * sizeof(double));
    }
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + stem + ".bin");
  }
  nlohmann::json labels = nlohmann::json::array();
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& s : data.samples) {
    labels.push_back(s.label);
    ids.push_back(s.id);
  }
  const nlohmann::json manifest = {{"format", "inertia_id.dataset"},
                                   {"version", kDatasetVersion},
                                   {"size", data.size()},
                                   {"steps", data.steps()},
                                   {"channels", data.channels()},
                                   {"seed", data.seed},
                                   {"sample_dt", data.sample_dt},
                                   {"resampled", data.resampled},
                                   {"labels", labels},
                                   {"ids", ids},
                                   {"train", data.train},
                                   {"val", data.val},
                                   {"test", data.test},
                                   {"stats", ToJson(data.stats)}};
  std::ofstream out(stem + ".json");
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + stem + ".json");
  out << manifest.dump(1) << '\n';
}

Dataset LoadDataset(const std::string& stem) {
  std::ifstream jin(stem + ".json");
  if (!jin) throw Error(ErrorCode::kIo, "cannot read " + stem + ".json");
  const nlohmann::json j = nlohmann::json::parse(jin);
  std::ifstream in(stem + ".bin", std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + stem + ".bin");
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t dims[3] = {0, 0, 0};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0 || version != kDatasetVersion) {
    throw Error(ErrorCode::kIo, stem + ".bin is not a dataset file");
  }
  if (dims[0] != j.at("size").get<std::uint64_t>() || dims[1] != j.at("steps").get<std::uint64_t>() ||
      dims[2] != j.at("channels").get<std::uint64_t>()) {
    throw Error(ErrorCode::kShapeMismatch, "dataset manifest and records disagree");
  }
  Dataset data;
  data.samples.resize(dims[0]);
  for (std::size_t i = 0; i < dims[0]; ++i) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(dims[1], dims[2]);
    in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(x.size() * sizeof(double)));
    SequenceSample& s = data.samples[i];
    s.x = x;
    in.read(reinterpret_cast<char*>(s.y.data()), kTargetDim * sizeof(double));
    s.label = j.at("labels").at(i).get<std::string>();
    s.id = j.at("ids").at(i).get<std::uint64_t>();
  }
  if (!in) throw Error(ErrorCode::kIo, "truncated dataset file " + stem + ".bin");
  data.seed = j.at("seed").get<std::uint64_t>();
  data.sample_dt = j.at("sample_dt").get<double>();
  data.resampled = j.value("resampled", 0);
  data.train = j.at("train").get<std::vector<int>>();
  data.val = j.at("val").get<std::vector<int>>();
  data.test = j.at("test").get<std::vector<int>>();
  data.stats = NormalizationFromJson(j.at("stats"));
  data.Validate();
  return data;
}

void SaveModel(const std::string& path, const TrainedModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << model.ToJson().dump() << '\n';
}

TrainedModel LoadModel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return TrainedModel::FromJson(nlohmann::json::parse(in));
}

}  // namespace inertia_id
