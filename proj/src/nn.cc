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

#include "inertia_id/nn.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "inertia_id/common.h"

namespace inertia_id {

namespace {

using Eigen::MatrixXd;

// Portable uniform draw in [-k, k).
class UniformInit {
 public:
  explicit UniformInit(std::uint64_t seed) : rng_(seed) {}
  void Fill(MatrixXd& m, double k) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        m(i, j) = k * (2.0 * u - 1.0);
      }
    }
  }

 private:
  std::mt19937_64 rng_;
};

MatrixXd Sigmoid(const MatrixXd& a) { return (1.0 + (-a.array()).exp()).inverse().matrix(); }

MatrixXd Stack(const SequenceBatch& x) {
  const Eigen::Index c = x[0].rows();
  const Eigen::Index b = x[0].cols();
  MatrixXd z(c, b * static_cast<Eigen::Index>(x.size()));
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (x[t].rows() != c || x[t].cols() != b) {
      throw Error(ErrorCode::kShapeMismatch, "sequence steps differ in shape");
    }
    z.middleCols(static_cast<Eigen::Index>(t) * b, b) = x[t];
  }
  return z;
}

int TensorsPerLayer(ModelFamily f) {
  return (f == ModelFamily::kLstm || f == ModelFamily::kRnn) ? 3 : 2;
}

}  // namespace

Tensor::Tensor(std::string tensor_name, Eigen::Index rows, Eigen::Index cols)
    : name(std::move(tensor_name)),
      value(MatrixXd::Zero(rows, cols)),
      grad(MatrixXd::Zero(rows, cols)),
      m(MatrixXd::Zero(rows, cols)),
      v(MatrixXd::Zero(rows, cols)) {}

const char* FamilyName(ModelFamily family) {
  switch (family) {
    case ModelFamily::kLstm: return "lstm";
    case ModelFamily::kRnn: return "rnn";
    case ModelFamily::kCnn: return "cnn";
    case ModelFamily::kAttention: return "attention";
  }
  return "?";
}

ModelFamily FamilyFromName(const std::string& name) {
  for (ModelFamily f : {ModelFamily::kLstm, ModelFamily::kRnn, ModelFamily::kCnn,
                        ModelFamily::kAttention}) {
    if (name == FamilyName(f)) return f;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown model family '" + name + "'");
}

void ModelConfig::Validate() const {
  if (input_dim < 1 || hidden < 1 || layers < 1 || output_dim < 1 || kernel < 1) {
    throw Error(ErrorCode::kInvalidArgument, "model dimensions must be positive");
  }
}

nlohmann::json ToJson(const ModelConfig& cfg) {
  return {{"family", FamilyName(cfg.family)}, {"input_dim", cfg.input_dim},
          {"hidden", cfg.hidden},             {"layers", cfg.layers},
          {"kernel", cfg.kernel},             {"output_dim", cfg.output_dim},
          {"seed", cfg.seed}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.family = FamilyFromName(j.value("family", std::string("lstm")));
  cfg.input_dim = j.value("input_dim", cfg.input_dim);
  cfg.hidden = j.value("hidden", cfg.hidden);
  cfg.layers = j.value("layers", cfg.layers);
  cfg.kernel = j.value("kernel", cfg.kernel);
  cfg.output_dim = j.value("output_dim", cfg.output_dim);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.Validate();
  return cfg;
}

// Activations of one pass. Columns of stacked matrices are time-major:
// column t * B + b holds step t of sequence b.
struct SequenceRegressor::Tape {
  int steps = 0;
  int batch = 0;
  std::vector<MatrixXd> inputs;   // layer inputs (im2col for kCnn)
  std::vector<MatrixXd> gates;    // kLstm, after the nonlinearity
  std::vector<MatrixXd> cells;    // kLstm
  std::vector<MatrixXd> outputs;  // layer outputs
  std::vector<int> lengths;       // kCnn, input length of each layer
  MatrixXd alpha;                 // kAttention, 1 x T*B
  MatrixXd pooled;                // head input, hidden x B
};

std::size_t CountParameters(const ModelConfig& cfg) {
  const std::size_t h = cfg.hidden;
  std::size_t n = 0;
  std::size_t in = cfg.input_dim + (cfg.family == ModelFamily::kAttention ? 1 : 0);
  for (int l = 0; l < cfg.layers; ++l) {
    switch (cfg.family) {
      case ModelFamily::kLstm: n += 4 * h * (in + h) + 4 * h; break;
      case ModelFamily::kRnn: n += h * (in + h) + h; break;
      case ModelFamily::kCnn: n += h * in * cfg.kernel + h; break;
      case ModelFamily::kAttention: n += h * in + h; break;
    }
    in = h;
  }
  if (cfg.family == ModelFamily::kAttention) n += h;
  return n + cfg.output_dim * h + cfg.output_dim;
}

int MatchHiddenWidth(ModelConfig cfg, std::size_t budget) {
  for (int h = 1; h <= 8192; ++h) {
    cfg.hidden = h;
    if (CountParameters(cfg) >= budget) return h;
  }
  throw Error(ErrorCode::kInvalidArgument, "parameter budget out of range");
}

SequenceRegressor::SequenceRegressor(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  UniformInit init(cfg_.seed);
  const int h = cfg_.hidden;
  int in = cfg_.input_dim + (cfg_.family == ModelFamily::kAttention ? 1 : 0);
  for (int l = 0; l < cfg_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    switch (cfg_.family) {
      case ModelFamily::kLstm:
      case ModelFamily::kRnn: {
        const int g = cfg_.family == ModelFamily::kLstm ? 4 * h : h;
        const double k = 1.0 / std::sqrt(static_cast<double>(h));
        params_.emplace_back(p + "w_x", g, in);
        params_.emplace_back(p + "w_h", g, h);
        params_.emplace_back(p + "b", g, 1);
        for (int i = 0; i < 3; ++i) init.Fill(params_[params_.size() - 3 + i].value, k);
        break;
      }
      case ModelFamily::kCnn:
      case ModelFamily::kAttention: {
        const int fan_in = cfg_.family == ModelFamily::kCnn ? in * cfg_.kernel : in;
        const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
        params_.emplace_back(p + "w", h, fan_in);
        params_.emplace_back(p + "b", h, 1);
        init.Fill(params_[params_.size() - 2].value, k);
        init.Fill(params_.back().value, k);
        break;
      }
    }
    in = h;
  }
  const double k = 1.0 / std::sqrt(static_cast<double>(h));
  if (cfg_.family == ModelFamily::kAttention) {
    params_.emplace_back("attention.v", h, 1);
    init.Fill(params_.back().value, k);
  }
  params_.emplace_back("head.w", cfg_.output_dim, h);
  init.Fill(params_.back().value, k);
  params_.emplace_back("head.b", cfg_.output_dim, 1);
  init.Fill(params_.back().value, k);
}

SequenceRegressor::SequenceRegressor(const SequenceRegressor& other)
    : cfg_(other.cfg_), params_(other.params_) {}

SequenceRegressor& SequenceRegressor::operator=(const SequenceRegressor& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    params_ = other.params_;
    tape_.reset();
  }
  return *this;
}

SequenceRegressor::SequenceRegressor(SequenceRegressor&&) noexcept = default;
SequenceRegressor& SequenceRegressor::operator=(SequenceRegressor&&) noexcept = default;
SequenceRegressor::~SequenceRegressor() = default;

std::size_t SequenceRegressor::NumParameters() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

bool SequenceRegressor::AllFinite() const {
  for (const auto& p : params_) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

void SequenceRegressor::ZeroGrad() {
  for (auto& p : params_) p.grad.setZero();
}

void SequenceRegressor::Run(const SequenceBatch& x, Tape& tape) const {
  if (x.empty()) throw Error(ErrorCode::kShapeMismatch, "empty sequence");
  if (x[0].rows() != cfg_.input_dim) {
    throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(cfg_.input_dim) +
                                               " input channels, got " +
                                               std::to_string(x[0].rows()));
  }
  const int steps = static_cast<int>(x.size());
  const int b = static_cast<int>(x[0].cols());
  const int h = cfg_.hidden;
  tape = Tape();
  tape.steps = steps;
  tape.batch = b;
  MatrixXd z = Stack(x);
  const int per = TensorsPerLayer(cfg_.family);

  switch (cfg_.family) {
    case ModelFamily::kLstm: {
      for (int l = 0; l < cfg_.layers; ++l) {
        const MatrixXd& wx = params_[per * l].value;
        const MatrixXd& wh = params_[per * l + 1].value;
        const MatrixXd& bias = params_[per * l + 2].value;
        MatrixXd ax = wx * z;
        ax.colwise() += bias.col(0);
        MatrixXd gates(4 * h, static_cast<Eigen::Index>(steps) * b);
        MatrixXd cells(h, gates.cols());
        MatrixXd out(h, gates.cols());
        MatrixXd hs = MatrixXd::Zero(h, b);
        MatrixXd cs = MatrixXd::Zero(h, b);
        for (int t = 0; t < steps; ++t) {
          MatrixXd a = ax.middleCols(t * b, b);
          if (t > 0) a.noalias() += wh * hs;
          auto g = gates.middleCols(t * b, b);
          g.topRows(2 * h) = Sigmoid(a.topRows(2 * h));
          g.middleRows(2 * h, h) = a.middleRows(2 * h, h).array().tanh().matrix();
          g.bottomRows(h) = Sigmoid(a.bottomRows(h));
          cs = (g.middleRows(h, h).array() * cs.array() +
                g.topRows(h).array() * g.middleRows(2 * h, h).array())
                   .matrix();
          hs = (g.bottomRows(h).array() * cs.array().tanh()).matrix();
          cells.middleCols(t * b, b) = cs;
          out.middleCols(t * b, b) = hs;
        }
        tape.inputs.push_back(std::move(z));
        tape.gates.push_back(std::move(gates));
        tape.cells.push_back(std::move(cells));
        z = out;
        tape.outputs.push_back(std::move(out));
      }
      tape.pooled = z.rightCols(b);
      break;
    }
    case ModelFamily::kRnn: {
      for (int l = 0; l < cfg_.layers; ++l) {
        const MatrixXd& wx = params_[per * l].value;
        const MatrixXd& wh = params_[per * l + 1].value;
        const MatrixXd& bias = params_[per * l + 2].value;
        MatrixXd ax = wx * z;
        ax.colwise() += bias.col(0);
        MatrixXd out(h, ax.cols());
        MatrixXd hs = MatrixXd::Zero(h, b);
        for (int t = 0; t < steps; ++t) {
          MatrixXd a = ax.middleCols(t * b, b);
          if (t > 0) a.noalias() += wh * hs;
          hs = a.array().tanh().matrix();
          out.middleCols(t * b, b) = hs;
        }
        tape.inputs.push_back(std::move(z));
        z = out;
        tape.outputs.push_back(std::move(out));
      }
      tape.pooled = z.rightCols(b);
      break;
    }
    case ModelFamily::kCnn: {
      int len = steps;
      const int k = cfg_.kernel;
      for (int l = 0; l < cfg_.layers; ++l) {
        const int out_len = len - k + 1;
        if (out_len < 1) {
          throw Error(ErrorCode::kShapeMismatch, "sequence too short for the convolution stack");
        }
        const Eigen::Index in = z.rows();
        MatrixXd col(in * k, static_cast<Eigen::Index>(out_len) * b);
        for (int t = 0; t < out_len; ++t) {
          for (int j = 0; j < k; ++j) {
            col.block(j * in, t * b, in, b) = z.middleCols((t + j) * b, b);
          }
        }
        MatrixXd a = params_[per * l].value * col;
        a.colwise() += params_[per * l + 1].value.col(0);
        MatrixXd out = a.array().tanh().matrix();
        tape.lengths.push_back(len);
        tape.inputs.push_back(std::move(col));
        z = out;
        tape.outputs.push_back(std::move(out));
        len = out_len;
      }
      tape.pooled = MatrixXd::Zero(h, b);
      for (int t = 0; t < len; ++t) tape.pooled += z.middleCols(t * b, b);
      tape.pooled /= static_cast<double>(len);
      tape.lengths.push_back(len);
      break;
    }
    case ModelFamily::kAttention: {
      MatrixXd z0(z.rows() + 1, z.cols());
      z0.topRows(z.rows()) = z;
      for (int t = 0; t < steps; ++t) {
        z0.bottomRows(1).middleCols(t * b, b).setConstant(
            steps > 1 ? static_cast<double>(t) / (steps - 1) : 0.0);
      }
      z = std::move(z0);
      for (int l = 0; l < cfg_.layers; ++l) {
        MatrixXd a = params_[per * l].value * z;
        a.colwise() += params_[per * l + 1].value.col(0);
        MatrixXd out = a.array().tanh().matrix();
        tape.inputs.push_back(std::move(z));
        z = out;
        tape.outputs.push_back(std::move(out));
      }
      const MatrixXd& v = params_[per * cfg_.layers].value;
      const MatrixXd s = v.transpose() * z;  // 1 x T*B
      tape.alpha.resize(1, s.cols());
      for (int c = 0; c < b; ++c) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < steps; ++t) mx = std::max(mx, s(0, t * b + c));
        double sum = 0.0;
        for (int t = 0; t < steps; ++t) {
          const double e = std::exp(s(0, t * b + c) - mx);
          tape.alpha(0, t * b + c) = e;
          sum += e;
        }
        for (int t = 0; t < steps; ++t) tape.alpha(0, t * b + c) /= sum;
      }
      tape.pooled = MatrixXd::Zero(h, b);
      for (int t = 0; t < steps; ++t) {
        tape.pooled += z.middleCols(t * b, b) *
                       tape.alpha.middleCols(t * b, b).transpose().asDiagonal();
      }
      break;
    }
  }
}

MatrixXd SequenceRegressor::Forward(const SequenceBatch& x) const {
  Tape tape;
  Run(x, tape);
  const std::size_t n = params_.size();
  MatrixXd y = params_[n - 2].value * tape.pooled;
  y.colwise() += params_[n - 1].value.col(0);
  return y;
}

MatrixXd SequenceRegressor::ForwardTrain(const SequenceBatch& x) {
  if (!tape_) tape_ = std::make_unique<Tape>();
  Run(x, *tape_);
  const std::size_t n = params_.size();
  MatrixXd y = params_[n - 2].value * tape_->pooled;
  y.colwise() += params_[n - 1].value.col(0);
  return y;
}

void SequenceRegressor::Backward(const MatrixXd& dout) {
  if (!tape_ || tape_->steps == 0) {
    throw Error(ErrorCode::kInvalidArgument, "Backward needs a preceding ForwardTrain");
  }
  const Tape& tape = *tape_;
  const int steps = tape.steps;
  const int b = tape.batch;
  const int h = cfg_.hidden;
  if (dout.rows() != cfg_.output_dim || dout.cols() != b) {
    throw Error(ErrorCode::kShapeMismatch, "output gradient has the wrong shape");
  }
  const std::size_t n = params_.size();
  params_[n - 2].grad.noalias() += dout * tape.pooled.transpose();
  params_[n - 1].grad += dout.rowwise().sum();
  const MatrixXd dpool = params_[n - 2].value.transpose() * dout;
  const int per = TensorsPerLayer(cfg_.family);
  const Eigen::Index cols = static_cast<Eigen::Index>(steps) * b;

  switch (cfg_.family) {
    case ModelFamily::kLstm: {
      MatrixXd dext = MatrixXd::Zero(h, cols);
      dext.rightCols(b) = dpool;
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const MatrixXd& gates = tape.gates[l];
        const MatrixXd& cells = tape.cells[l];
        const MatrixXd& wh = params_[per * l + 1].value;
        MatrixXd da(4 * h, cols);
        MatrixXd dh_next = MatrixXd::Zero(h, b);
        MatrixXd dc_next = MatrixXd::Zero(h, b);
        for (int t = steps - 1; t >= 0; --t) {
          const auto g = gates.middleCols(t * b, b).array();
          const auto ig = g.topRows(h);
          const auto fg = g.middleRows(h, h);
          const auto gg = g.middleRows(2 * h, h);
          const auto og = g.bottomRows(h);
          const Eigen::ArrayXXd tc = cells.middleCols(t * b, b).array().tanh();
          const Eigen::ArrayXXd dh = (dext.middleCols(t * b, b) + dh_next).array();
          const Eigen::ArrayXXd dc = dc_next.array() + dh * og * (1.0 - tc.square());
          auto d = da.middleCols(t * b, b);
          d.topRows(h) = (dc * gg * ig * (1.0 - ig)).matrix();
          if (t > 0) {
            d.middleRows(h, h) =
                (dc * cells.middleCols((t - 1) * b, b).array() * fg * (1.0 - fg)).matrix();
          } else {
            d.middleRows(h, h).setZero();
          }
          d.middleRows(2 * h, h) = (dc * ig * (1.0 - gg.square())).matrix();
          d.bottomRows(h) = (dh * tc * og * (1.0 - og)).matrix();
          dc_next = (dc * fg).matrix();
          dh_next.noalias() = wh.transpose() * d;
        }
        params_[per * l].grad.noalias() += da * tape.inputs[l].transpose();
        params_[per * l + 2].grad += da.rowwise().sum();
        if (steps > 1) {
          params_[per * l + 1].grad.noalias() +=
              da.rightCols(cols - b) * tape.outputs[l].leftCols(cols - b).transpose();
        }
        if (l > 0) dext = params_[per * l].value.transpose() * da;
      }
      break;
    }
    case ModelFamily::kRnn: {
      MatrixXd dext = MatrixXd::Zero(h, cols);
      dext.rightCols(b) = dpool;
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const MatrixXd& out = tape.outputs[l];
        const MatrixXd& wh = params_[per * l + 1].value;
        MatrixXd da(h, cols);
        MatrixXd dh_next = MatrixXd::Zero(h, b);
        for (int t = steps - 1; t >= 0; --t) {
          const auto hs = out.middleCols(t * b, b).array();
          da.middleCols(t * b, b) =
              ((dext.middleCols(t * b, b) + dh_next).array() * (1.0 - hs.square())).matrix();
          dh_next.noalias() = wh.transpose() * da.middleCols(t * b, b);
        }
        params_[per * l].grad.noalias() += da * tape.inputs[l].transpose();
        params_[per * l + 2].grad += da.rowwise().sum();
        if (steps > 1) {
          params_[per * l + 1].grad.noalias() +=
              da.rightCols(cols - b) * out.leftCols(cols - b).transpose();
        }
        if (l > 0) dext = params_[per * l].value.transpose() * da;
      }
      break;
    }
    case ModelFamily::kCnn: {
      const int k = cfg_.kernel;
      int len = tape.lengths.back();
      MatrixXd dy(h, static_cast<Eigen::Index>(len) * b);
      for (int t = 0; t < len; ++t) dy.middleCols(t * b, b) = dpool / static_cast<double>(len);
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const MatrixXd da =
            (dy.array() * (1.0 - tape.outputs[l].array().square())).matrix();
        params_[per * l].grad.noalias() += da * tape.inputs[l].transpose();
        params_[per * l + 1].grad += da.rowwise().sum();
        if (l == 0) break;
        const MatrixXd dcol = params_[per * l].value.transpose() * da;
        const int in_len = tape.lengths[l];
        const Eigen::Index in = dcol.rows() / k;
        dy = MatrixXd::Zero(in, static_cast<Eigen::Index>(in_len) * b);
        for (int t = 0; t < len; ++t) {
          for (int j = 0; j < k; ++j) {
            dy.middleCols((t + j) * b, b) += dcol.block(j * in, t * b, in, b);
          }
        }
        len = in_len;
      }
      break;
    }
    case ModelFamily::kAttention: {
      const MatrixXd& e = tape.outputs.back();
      const MatrixXd& v = params_[per * cfg_.layers].value;
      MatrixXd de(h, cols);
      MatrixXd dalpha(1, cols);
      for (int t = 0; t < steps; ++t) {
        dalpha.middleCols(t * b, b) =
            (e.middleCols(t * b, b).array() * dpool.array()).colwise().sum().matrix();
      }
      Eigen::RowVectorXd weighted = Eigen::RowVectorXd::Zero(b);
      for (int t = 0; t < steps; ++t) {
        weighted += (tape.alpha.middleCols(t * b, b).array() *
                     dalpha.middleCols(t * b, b).array())
                        .matrix();
      }
      MatrixXd ds(1, cols);
      for (int t = 0; t < steps; ++t) {
        ds.middleCols(t * b, b) = (tape.alpha.middleCols(t * b, b).array() *
                                   (dalpha.middleCols(t * b, b).array() - weighted.array()))
                                      .matrix();
        de.middleCols(t * b, b) =
            dpool * tape.alpha.middleCols(t * b, b).transpose().asDiagonal();
      }
      de.noalias() += v * ds;
      params_[per * cfg_.layers].grad.noalias() += e * ds.transpose();
      for (int l = cfg_.layers - 1; l >= 0; --l) {
        const MatrixXd da = (de.array() * (1.0 - tape.outputs[l].array().square())).matrix();
        params_[per * l].grad.noalias() += da * tape.inputs[l].transpose();
        params_[per * l + 1].grad += da.rowwise().sum();
        if (l > 0) de = params_[per * l].value.transpose() * da;
      }
      break;
    }
  }
}

nlohmann::json TensorToJson(const Tensor& t) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.value.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.value.cols(); ++j) data.push_back(t.value(i, j));
  }
  return {{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}, {"data", data}};
}

Tensor TensorFromJson(const nlohmann::json& j) {
  Tensor t(j.at("name").get<std::string>(), j.at("rows").get<Eigen::Index>(),
           j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != t.value.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor '" + t.name + "' has the wrong size");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < t.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.value.cols(); ++c) t.value(r, c) = data[k++].get<double>();
  }
  return t;
}

namespace {

void LoadTensors(std::vector<Tensor>& params, const nlohmann::json& arr) {
  if (arr.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor count does not match");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = TensorFromJson(arr[i]);
    if (t.name != params[i].name || t.value.rows() != params[i].value.rows() ||
        t.value.cols() != params[i].value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor '" + t.name + "' mismatched");
    }
    if (!t.value.allFinite()) throw Error(ErrorCode::kNonFinite, "tensor '" + t.name + "'");
    params[i].value = t.value;
  }
}

}  // namespace

nlohmann::json SequenceRegressor::ToJson() const {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : params_) tensors.push_back(TensorToJson(p));
  return {{"config", inertia_id::ToJson(cfg_)}, {"tensors", tensors}};
}

SequenceRegressor SequenceRegressor::FromJson(const nlohmann::json& j) {
  SequenceRegressor r(ModelConfigFromJson(j.at("config")));
  LoadTensors(r.params_, j.at("tensors"));
  return r;
}

Mlp::Mlp(int input_dim, const std::vector<int>& hidden, int output_dim, std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim < 1 || output_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "MLP dimensions must be positive");
  }
  UniformInit init(seed);
  int in = input_dim;
  std::vector<int> sizes = hidden;
  sizes.push_back(output_dim);
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    if (sizes[l] < 1) throw Error(ErrorCode::kInvalidArgument, "MLP widths must be positive");
    const double k = 1.0 / std::sqrt(static_cast<double>(in));
    params_.emplace_back("fc" + std::to_string(l) + ".w", sizes[l], in);
    init.Fill(params_.back().value, k);
    params_.emplace_back("fc" + std::to_string(l) + ".b", sizes[l], 1);
    init.Fill(params_.back().value, k);
    in = sizes[l];
  }
}

MatrixXd Mlp::Forward(const MatrixXd& x) const {
  if (x.rows() != input_dim_) throw Error(ErrorCode::kShapeMismatch, "MLP input size");
  MatrixXd a = x;
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = params_[2 * l].value * a;
    z.colwise() += params_[2 * l + 1].value.col(0);
    a = (l + 1 < layers) ? MatrixXd(z.array().tanh().matrix()) : z;
  }
  return a;
}

MatrixXd Mlp::ForwardTrain(const MatrixXd& x) {
  if (x.rows() != input_dim_) throw Error(ErrorCode::kShapeMismatch, "MLP input size");
  acts_.assign(1, x);
  const std::size_t layers = params_.size() / 2;
  for (std::size_t l = 0; l < layers; ++l) {
    MatrixXd z = params_[2 * l].value * acts_.back();
    z.colwise() += params_[2 * l + 1].value.col(0);
    acts_.push_back((l + 1 < layers) ? MatrixXd(z.array().tanh().matrix()) : z);
  }
  return acts_.back();
}

void Mlp::Backward(const MatrixXd& dout) {
  const std::size_t layers = params_.size() / 2;
  if (acts_.size() != layers + 1) {
    throw Error(ErrorCode::kInvalidArgument, "Backward needs a preceding ForwardTrain");
  }
  MatrixXd d = dout;
  for (std::size_t l = layers; l-- > 0;) {
    params_[2 * l].grad.noalias() += d * acts_[l].transpose();
    params_[2 * l + 1].grad += d.rowwise().sum();
    if (l == 0) break;
    d = ((params_[2 * l].value.transpose() * d).array() * (1.0 - acts_[l].array().square()))
            .matrix();
  }
}

void Mlp::ZeroGrad() {
  for (auto& p : params_) p.grad.setZero();
}

nlohmann::json Mlp::ToJson() const {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<int> hidden;
  for (std::size_t l = 0; l + 2 < params_.size(); l += 2) {
    hidden.push_back(static_cast<int>(params_[l].value.rows()));
  }
  for (const auto& p : params_) tensors.push_back(TensorToJson(p));
  return {{"input_dim", input_dim_}, {"hidden", hidden}, {"output_dim", output_dim_},
          {"tensors", tensors}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  Mlp m(j.at("input_dim").get<int>(), j.at("hidden").get<std::vector<int>>(),
        j.at("output_dim").get<int>(), 0);
  LoadTensors(m.params_, j.at("tensors"));
  return m;
}

double GradientNorm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

double AdamW::Step(std::vector<Tensor>& params) {
  const double norm = GradientNorm(params);
  if (!std::isfinite(norm)) throw Error(ErrorCode::kNonFinite, "gradient is not finite");
  const double scale = (cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm) ? cfg_.clip_norm / norm : 1.0;
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double lr = cfg_.learning_rate;
  for (auto& p : params) {
    const Eigen::ArrayXXd g = p.grad.array() * scale;
    p.value *= 1.0 - lr * cfg_.weight_decay;
    p.m = (cfg_.beta1 * p.m.array() + (1.0 - cfg_.beta1) * g).matrix();
    p.v = (cfg_.beta2 * p.v.array() + (1.0 - cfg_.beta2) * g.square()).matrix();
    p.value.array() -= lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg_.eps);
  }
  return norm;
}

}  // namespace inertia_id
