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

#include "inertia_id/gp.h"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "inertia_id/parallel.h"

namespace inertia_id {

namespace {

constexpr Eigen::Index kMaxGpPoints = 5000;
constexpr double kMaxJitter = 1e-4;

Eigen::MatrixXd SquaredDistances(const Eigen::MatrixXd& z) {
  const Eigen::VectorXd sq = z.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * z * z.transpose()).colwise() + sq;
  d.rowwise() += sq.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

Eigen::MatrixXd GramFromDistances(const Eigen::MatrixXd& d2, double variance, double lengthscale) {
  return variance * (d2.array() * (-0.5 / (lengthscale * lengthscale))).exp().matrix();
}

// Cholesky of K + (noise + jitter * variance) I, escalating the relative
// jitter from 0 through 1e-10 .. 1e-4. Returns false when every attempt fails.
bool FactorWithJitter(const Eigen::MatrixXd& k, double variance, double noise, Eigen::MatrixXd* l,
                      double* jitter) {
  double j = 0.0;
  while (true) {
    Eigen::MatrixXd a = k;
    a.diagonal().array() += noise + j * variance;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if (lower.allFinite() && lower.diagonal().minCoeff() > 0.0) {
        *l = std::move(lower);
        *jitter = j;
        return true;
      }
    }
    j = j == 0.0 ? 1e-10 : j * 10.0;
    if (j > kMaxJitter * (1.0 + 1e-9)) return false;
  }
}

double LmlFromDistances(const Eigen::MatrixXd& d2, const Eigen::VectorXd& y, const GpHyper& h) {
  Eigen::MatrixXd l;
  double jitter = 0.0;
  if (!FactorWithJitter(GramFromDistances(d2, h.variance, h.lengthscale), h.variance, h.noise_var,
                        &l, &jitter)) {
    return -std::numeric_limits<double>::infinity();
  }
  const auto tri = l.triangularView<Eigen::Lower>();
  const Eigen::VectorXd v = tri.solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * v.squaredNorm() - l.diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Variance and noise are searched relative to the target's mean square.
GpHyper FromLog(const Eigen::Vector3d& x, double target_ms) {
  return {target_ms * std::pow(10.0, x(0)), std::pow(10.0, x(1)), target_ms * std::pow(10.0, x(2))};
}

double TargetMeanSquare(const Eigen::VectorXd& y) {
  const double ms = y.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, y.size()));
  return ms > 1e-300 ? ms : 1.0;
}

// Bounded coordinate ascent in log10 space: try +-step on each coordinate,
// halve the step after a sweep without improvement.
Eigen::Vector3d CoordinateSearch(const Eigen::MatrixXd& d2, const Eigen::VectorXd& y,
                                 Eigen::Vector3d x, const Eigen::Vector3d& lo,
                                 const Eigen::Vector3d& hi, int max_evals, double* best) {
  const double ms = TargetMeanSquare(y);
  x = x.cwiseMax(lo).cwiseMin(hi);
  *best = LmlFromDistances(d2, y, FromLog(x, ms));
  int evals = 1;
  double step = 1.0;
  while (step >= 0.01 && evals < max_evals) {
    bool improved = false;
    for (int c = 0; c < 3 && evals < max_evals; ++c) {
      for (double dir : {1.0, -1.0}) {
        Eigen::Vector3d trial = x;
        trial(c) = std::clamp(trial(c) + dir * step, lo(c), hi(c));
        if (trial(c) == x(c)) continue;
        const double f = LmlFromDistances(d2, y, FromLog(trial, ms));
        ++evals;
        if (f > *best) {
          *best = f;
          x = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return x;
}

void CheckSize(const ResidualDataset& data) {
  data.Validate();
  if (data.size() < 1 || data.size() > kMaxGpPoints) {
    throw Error(ErrorCode::kInvalidArgument,
                "GP needs between 1 and 5000 training points, got " + std::to_string(data.size()));
  }
}

}  // namespace

Eigen::VectorXd GpFeatureSet::Mask() const {
  Eigen::VectorXd m(kGpFeatureDim);
  m << Vector4d::Constant(q ? 1.0 : 0.0), Vector4d::Constant(qdot ? 1.0 : 0.0),
      Vector4d::Constant(tau_cmd ? 1.0 : 0.0), time ? 1.0 : 0.0;
  return m;
}

Eigen::Matrix<double, kGpFeatureDim, 1> GpFeature(const Vector4d& q, const Vector4d& qdot,
                                                   const Vector4d& tau_cmd, double t) {
  Eigen::Matrix<double, kGpFeatureDim, 1> f;
  f << q, qdot, tau_cmd, t;
  return f;
}

double RbfKernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double variance,
                 double lengthscale) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "kernel inputs differ in size");
  return variance * std::exp(-(a - b).squaredNorm() / (2.0 * lengthscale * lengthscale));
}

Eigen::MatrixXd RbfGram(const Eigen::MatrixXd& z, double variance, double lengthscale) {
  return GramFromDistances(SquaredDistances(z), variance, lengthscale);
}

void ResidualDataset::Validate() const {
  if (features.cols() != kGpFeatureDim || targets.cols() != kNumJoints ||
      features.rows() != targets.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "residual dataset needs n x 13 features and n x 4 targets");
  }
  if (!features.allFinite() || !targets.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "residual dataset contains non-finite values");
  }
}

ResidualDataset BuildResidualDataset(const World& sim, const SimConfig& config,
                                     const TargetDataset& data, int stride) {
  config.Validate();
  data.Validate();
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  const ArmDynamics dyn(sim.model);
  const RobotModel& model = dyn.model();
  const double dt = config.dt;

  std::vector<Eigen::Matrix<double, kGpFeatureDim, 1>> feats;
  std::vector<Vector4d> targets;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const RolloutRecord& rec = data.rollouts[r];
    const JointTrajectory& cmd = data.commands[r];
    if (std::abs(rec.dt - dt) > 1e-12) {
      throw Error(ErrorCode::kLengthMismatch, "target rollout dt differs from simulator dt");
    }
    const std::size_t n = rec.size();
    if (n < 3) throw Error(ErrorCode::kLengthMismatch, "target rollouts need >= 3 samples");
    std::vector<Vector4d> a_sim(n), tau_cmd(n);
    for (std::size_t k = 0; k < n; ++k) {
      const JointState s{rec.samples[k].q, rec.samples[k].qdot};
      const double t = static_cast<double>(k) * dt;
      tau_cmd[k] = PdTorque(model, cmd.q[k], cmd.qdot[k], s);
      Vector4d tau = tau_cmd[k] + sim.friction.Torque(s.qdot);
      if (config.residual_torque_hook) tau += config.residual_torque_hook(s.q, s.qdot, tau_cmd[k], t);
      a_sim[k] = dyn.Accelerations(s, tau);
      if (config.residual_hook) a_sim[k] += config.residual_hook(s.q, s.qdot, tau_cmd[k], t);
    }
    for (std::size_t k = 1; k + 1 < n; k += stride) {
      const Vector4d qdd_target = (rec.samples[k + 1].qdot - rec.samples[k - 1].qdot) / (2.0 * dt);
      const Vector4d qdd_sim = 0.5 * (a_sim[k] + a_sim[k - 1]);
      feats.push_back(GpFeature(rec.samples[k].q, rec.samples[k].qdot, tau_cmd[k],
                                static_cast<double>(k) * dt));
      targets.push_back(dyn.MassMatrix(rec.samples[k].q) * (qdd_target - qdd_sim));
    }
  }
  ResidualDataset out;
  out.features.resize(static_cast<Eigen::Index>(feats.size()), kGpFeatureDim);
  out.targets.resize(static_cast<Eigen::Index>(feats.size()), kNumJoints);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = feats[i].transpose();
    out.targets.row(static_cast<Eigen::Index>(i)) = targets[i].transpose();
  }
  return out;
}

void GpFitConfig::Validate() const {
  if (restarts < 1 || max_evals < 1) {
    throw Error(ErrorCode::kInvalidArgument, "GP fit needs restarts >= 1 and max_evals >= 1");
  }
  if (!(init.variance > 0.0 && init.lengthscale > 0.0 && init.noise_var > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "GP hyperparameters must be positive");
  }
  if (!(log_variance_min < log_variance_max && log_lengthscale_min < log_lengthscale_max &&
        log_noise_min < log_noise_max)) {
    throw Error(ErrorCode::kInvalidArgument, "GP search box is empty");
  }
}

double LogMarginalLikelihood(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                             const GpHyper& hyper) {
  if (z.rows() != y.size()) throw Error(ErrorCode::kShapeMismatch, "inputs and targets differ in length");
  return LmlFromDistances(SquaredDistances(z), y, hyper);
}

Eigen::VectorXd GpModel::Standardize(const Eigen::VectorXd& feature) const {
  if (feature.size() != kGpFeatureDim) {
    throw Error(ErrorCode::kShapeMismatch, "GP feature must have 13 entries");
  }
  return (feature - feature_mean_).cwiseQuotient(feature_scale_).cwiseProduct(feature_mask_);
}

void GpModel::Factorize() {
  const Eigen::MatrixXd d2 = SquaredDistances(inputs_);
  for (int j = 0; j < kNumJoints; ++j) {
    const GpHyper& h = hyper_[j];
    const Eigen::MatrixXd k = GramFromDistances(d2, h.variance, h.lengthscale);
    if (!FactorWithJitter(k, h.variance, h.noise_var, &chol_[j], &jitter_[j])) {
      throw Error(ErrorCode::kIllConditioned,
                  "GP Gram matrix not factorizable with jitter up to 1e-4 (joint " +
                      std::to_string(j + 1) + ")");
    }
    const Eigen::VectorXd v = chol_[j].triangularView<Eigen::Lower>().solve(targets_.col(j));
    alpha_[j] = chol_[j].transpose().triangularView<Eigen::Upper>().solve(v);
  }
}

GpModel FitGpFixed(const ResidualDataset& data, const std::array<GpHyper, kNumJoints>& hyper,
                   const GpFeatureSet& features) {
  CheckSize(data);
  GpModel m;
  m.feature_mask_ = features.Mask();
  if (m.feature_mask_.sum() == 0.0) throw Error(ErrorCode::kInvalidArgument, "GP needs at least one feature group");
  m.feature_mean_ = data.features.colwise().mean().transpose();
  const Eigen::MatrixXd centred = data.features.rowwise() - m.feature_mean_.transpose();
  m.feature_scale_ =
      (centred.colwise().squaredNorm() / static_cast<double>(data.size())).cwiseSqrt().transpose();
  for (Eigen::Index c = 0; c < kGpFeatureDim; ++c) {
    if (!(m.feature_scale_(c) > 1e-12)) m.feature_scale_(c) = 1.0;
  }
  m.inputs_ = (centred.array().rowwise() / m.feature_scale_.transpose().array()).rowwise() *
              m.feature_mask_.transpose().array();
  m.targets_ = data.targets;
  m.hyper_ = hyper;
  m.Factorize();
  return m;
}

GpModel FitGp(const ResidualDataset& data, const GpFitConfig& config) {
  config.Validate();
  CheckSize(data);
  std::array<GpHyper, kNumJoints> hyper;
  for (int j = 0; j < kNumJoints; ++j) {
    const double ms = TargetMeanSquare(data.targets.col(j));
    hyper[j] = {config.init.variance * ms, config.init.lengthscale, config.init.noise_var * ms};
  }
  GpModel m = FitGpFixed(data, hyper, config.features);
  if (!config.optimize) return m;

  const Eigen::MatrixXd d2 = SquaredDistances(m.inputs_);
  const Eigen::Vector3d lo(config.log_variance_min, config.log_lengthscale_min, config.log_noise_min);
  const Eigen::Vector3d hi(config.log_variance_max, config.log_lengthscale_max, config.log_noise_max);
  const Eigen::Vector3d x0(std::log10(config.init.variance), std::log10(config.init.lengthscale),
                           std::log10(config.init.noise_var));
  ParallelFor(
      kNumJoints,
      [&](int j) {
        std::mt19937_64 rng(config.seed * 4 + static_cast<std::uint64_t>(j));
        std::uniform_real_distribution<double> offset(-2.0, 2.0);
        const Eigen::VectorXd y = m.targets_.col(j);
        double best = -std::numeric_limits<double>::infinity();
        Eigen::Vector3d best_x = x0;
        for (int s = 0; s < config.restarts; ++s) {
          Eigen::Vector3d start = x0;
          if (s > 0) start += Eigen::Vector3d(offset(rng), offset(rng), offset(rng));
          double f = 0.0;
          const Eigen::Vector3d x = CoordinateSearch(d2, y, start, lo, hi, config.max_evals, &f);
          if (f > best) {
            best = f;
            best_x = x;
          }
        }
        hyper[j] = FromLog(best_x, TargetMeanSquare(y));
      },
      config.threads);
  m.hyper_ = hyper;
  m.Factorize();
  return m;
}

GpPrediction GpModel::Predict(const Eigen::VectorXd& feature) const {
  GpPrediction p;
  if (empty()) {
    for (int j = 0; j < kNumJoints; ++j) {
      p.latent_variance(j) = hyper_[j].variance;
      p.variance(j) = hyper_[j].variance + hyper_[j].noise_var;
    }
    return p;
  }
  const Eigen::VectorXd s = Standardize(feature);
  const Eigen::VectorXd d2 = (inputs_.rowwise() - s.transpose()).rowwise().squaredNorm();
  for (int j = 0; j < kNumJoints; ++j) {
    const GpHyper& h = hyper_[j];
    const Eigen::VectorXd k =
        h.variance * (d2.array() * (-0.5 / (h.lengthscale * h.lengthscale))).exp().matrix();
    p.mean(j) = k.dot(alpha_[j]);
    const Eigen::VectorXd v = chol_[j].triangularView<Eigen::Lower>().solve(k);
    p.latent_variance(j) = std::max(0.0, h.variance - v.squaredNorm());
    p.variance(j) = p.latent_variance(j) + h.noise_var;
  }
  return p;
}

Vector4d GpModel::Mean(const Eigen::VectorXd& feature) const {
  Vector4d mean = Vector4d::Zero();
  if (empty()) return mean;
  const Eigen::VectorXd s = Standardize(feature);
  const Eigen::VectorXd d2 = (inputs_.rowwise() - s.transpose()).rowwise().squaredNorm();
  for (int j = 0; j < kNumJoints; ++j) {
    const GpHyper& h = hyper_[j];
    mean(j) = (d2.array() * (-0.5 / (h.lengthscale * h.lengthscale))).exp().matrix().dot(alpha_[j]) *
              h.variance;
  }
  return mean;
}

Eigen::MatrixXd GpModel::MeanBatch(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd out(features.rows(), kNumJoints);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out.row(i) = Mean(features.row(i).transpose()).transpose();
  }
  return out;
}

SimConfig AttachCorrection(const SimConfig& config, std::shared_ptr<const GpModel> model) {
  if (!model || model->empty()) return config;
  SimConfig out = config;
  ResidualHook previous = config.residual_torque_hook;
  out.residual_torque_hook = [model, previous](const Vector4d& q, const Vector4d& qdot,
                                        const Vector4d& tau_cmd, double t) -> Vector4d {
    Vector4d tau = model->Mean(GpFeature(q, qdot, tau_cmd, t));
    if (previous) tau += previous(q, qdot, tau_cmd, t);
    return tau;
  };
  return out;
}

namespace {

nlohmann::json MatrixToJson(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kShapeMismatch, "matrix row has the wrong length");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json GpModel::ToJson() const {
  nlohmann::json hyper = nlohmann::json::array();
  for (int j = 0; j < kNumJoints; ++j) {
    hyper.push_back({{"variance", hyper_[j].variance},
                     {"lengthscale", hyper_[j].lengthscale},
                     {"noise_var", hyper_[j].noise_var},
                     {"jitter", jitter_[j]}});
  }
  return {{"feature_mean", std::vector<double>(feature_mean_.data(), feature_mean_.data() + kGpFeatureDim)},
          {"feature_scale", std::vector<double>(feature_scale_.data(), feature_scale_.data() + kGpFeatureDim)},
          {"feature_mask", std::vector<double>(feature_mask_.data(), feature_mask_.data() + kGpFeatureDim)},
          {"inputs", MatrixToJson(inputs_)},
          {"targets", MatrixToJson(targets_)},
          {"hyper", hyper}};
}

GpModel GpModel::FromJson(const nlohmann::json& j) {
  GpModel m;
  const auto mean = j.at("feature_mean").get<std::vector<double>>();
  const auto scale = j.at("feature_scale").get<std::vector<double>>();
  if (mean.size() != kGpFeatureDim || scale.size() != kGpFeatureDim) {
    throw Error(ErrorCode::kShapeMismatch, "GP standardization needs 13 entries");
  }
  m.feature_mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), kGpFeatureDim);
  m.feature_scale_ = Eigen::Map<const Eigen::VectorXd>(scale.data(), kGpFeatureDim);
  const auto mask = j.at("feature_mask").get<std::vector<double>>();
  if (mask.size() != kGpFeatureDim) throw Error(ErrorCode::kShapeMismatch, "GP feature mask needs 13 entries");
  m.feature_mask_ = Eigen::Map<const Eigen::VectorXd>(mask.data(), kGpFeatureDim);
  m.inputs_ = MatrixFromJson(j.at("inputs"), kGpFeatureDim);
  m.targets_ = MatrixFromJson(j.at("targets"), kNumJoints);
  if (m.inputs_.rows() != m.targets_.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "GP inputs and targets differ in length");
  }
  const auto& hyper = j.at("hyper");
  if (hyper.size() != kNumJoints) throw Error(ErrorCode::kShapeMismatch, "GP needs 4 hyperparameter sets");
  for (int k = 0; k < kNumJoints; ++k) {
    m.hyper_[k] = {hyper[k].at("variance").get<double>(), hyper[k].at("lengthscale").get<double>(),
                   hyper[k].at("noise_var").get<double>()};
  }
  if (!m.empty()) m.Factorize();
  return m;
}

void SaveGp(const std::string& path, const GpModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << model.ToJson().dump() << "\n";
}

GpModel LoadGp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return GpModel::FromJson(nlohmann::json::parse(in));
}

void WriteResidualCsv(const std::string& path, const ResidualDataset& data) {
  data.Validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << "q1,q2,q3,q4,qd1,qd2,qd3,qd4,tau1,tau2,tau3,tau4,t,r1,r2,r3,r4\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index c = 0; c < kGpFeatureDim; ++c) out << data.features(i, c) << ',';
    for (int c = 0; c < kNumJoints; ++c) out << data.targets(i, c) << (c + 1 < kNumJoints ? ',' : '\n');
  }
}

ResidualDataset ReadResidualCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != kGpFeatureDim + kNumJoints) {
      throw Error(ErrorCode::kShapeMismatch, "residual CSV row needs 17 columns");
    }
    rows.push_back(std::move(row));
  }
  ResidualDataset data;
  data.features.resize(static_cast<Eigen::Index>(rows.size()), kGpFeatureDim);
  data.targets.resize(static_cast<Eigen::Index>(rows.size()), kNumJoints);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < kGpFeatureDim; ++c) data.features(i, c) = rows[i][c];
    for (int c = 0; c < kNumJoints; ++c) data.targets(i, c) = rows[i][kGpFeatureDim + c];
  }
  data.Validate();
  return data;
}

}  // namespace inertia_id
