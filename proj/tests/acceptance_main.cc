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

// Acceptance run: one PASS/FAIL line per criterion. Criteria 4, 6, 9, 10 and
// 11 read the tables of a desk-preset pipeline run; 11 repeats that run in a
// second directory and compares the metric tables byte for byte.
//
// Usage: acceptance [work_dir]

#include <Eigen/Dense>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "inertia_id/classical.h"
#include "inertia_id/excitation.h"
#include "inertia_id/gp.h"
#include "inertia_id/learner.h"
#include "inertia_id/object_catalog.h"
#include "inertia_id/pipeline.h"
#include "inertia_id/report.h"
#include "inertia_id/rigidbody.h"
#include "inertia_id/sysid.h"

namespace inertia_id {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

double Since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1: regressor against Newton-Euler ----

Wrench DirectNewtonEuler(const InertialParams& p, const BodyKinematics& k) {
  const Vector3d& c = p.com;
  const Vector3d a_com = k.lin_acc + k.ang_acc.cross(c) + k.ang_vel.cross(k.ang_vel.cross(c));
  const Matrix3d ic = p.InertiaAboutCom();
  Wrench w;
  w.force = p.mass * a_com;
  w.torque = ic * k.ang_acc + k.ang_vel.cross(ic * k.ang_vel) + c.cross(w.force);
  return w;
}

Outcome Criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto vec = [&](double s) { return Vector3d(s * u(rng), s * u(rng), s * u(rng)); };
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Matrix3d a;
    for (int k = 0; k < 9; ++k) a.data()[k] = u(rng);
    const InertialParams p = InertialParams::FromComInertia(
        1.0 + u(rng) * 0.9, vec(0.1), 0.01 * (a * a.transpose() + 0.1 * Matrix3d::Identity()));
    const BodyKinematics k{vec(20.0), vec(5.0), vec(30.0)};
    const Vector6d lhs = RegressorMatrix(k) * p.ToVector();
    const Vector6d rhs = DirectNewtonEuler(p, k).ToVector();
    worst = std::max(worst, (lhs - rhs).lpNorm<Eigen::Infinity>() /
                                rhs.lpNorm<Eigen::Infinity>());
  }
  const double secs = Since(t0);
  return {worst <= 1e-9 && secs < 1.0,
          Fmt("max relative inf-norm error %.2e over 1000 pairs (<= 1e-9), %.3f s (< 1 s)", worst,
              secs)};
}

// ---- 2: composite inertia against voxels ----

Vector10d VoxelParams(const CompositeObject& obj, double h) {
  Vector10d phi = Vector10d::Zero();
  const Vector3d hi(0.112, 0.047, 0.037);
  const Vector3d lo = -hi;
  const Eigen::Vector3i n = ((hi - lo) / h).array().ceil().cast<int>();
  const double dv = h * h * h;
  for (int i = 0; i < n.x(); ++i) {
    for (int j = 0; j < n.y(); ++j) {
      for (int k = 0; k < n.z(); ++k) {
        const Vector3d p = lo + h * Vector3d(i + 0.5, j + 0.5, k + 0.5);
        double rho = 0.0;
        for (const auto& prim : obj.primitives) {
          if (prim.Contains(p)) rho += prim.density;
        }
        if (rho == 0.0) continue;
        const double dm = rho * dv;
        phi(0) += dm;
        phi.segment<3>(1) += dm * p;
        phi(4) += dm * (p.y() * p.y() + p.z() * p.z());
        phi(5) -= dm * p.x() * p.y();
        phi(6) -= dm * p.x() * p.z();
        phi(7) += dm * (p.x() * p.x() + p.z() * p.z());
        phi(8) -= dm * p.y() * p.z();
        phi(9) += dm * (p.x() * p.x() + p.y() * p.y());
      }
    }
  }
  return phi;
}

Outcome Criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto catalog = DefaultCatalog();
  double worst = 0.0;
  std::string where;
  for (const char* label : {"Barbell", "Hammer", "Tee"}) {
    const CompositeObject& obj = FindObject(catalog, label);
    const Vector10d exact = CompositeInertia(obj).ToVector();
    const Vector10d voxel = VoxelParams(obj, 4e-4);
    // Components that vanish by symmetry are measured against their group
    // scale: mass times radius of gyration, or the largest moment.
    const double moment = std::max({exact(4), exact(7), exact(9)});
    const double first = std::sqrt(exact(0) * moment);
    for (int c = 0; c < 10; ++c) {
      const double group = c == 0 ? exact(0) : (c < 4 ? first : moment);
      const double ref = std::abs(exact(c)) > 1e-9 * group ? std::abs(exact(c)) : group;
      const double rel = std::abs(voxel(c) - exact(c)) / ref;
      if (rel > worst) {
        worst = rel;
        where = Fmt("%s component %d", label, c);
      }
    }
  }
  const double secs = Since(t0);
  return {worst <= 0.005 && secs < 30.0,
          Fmt("max relative error %.3f%% (%s) (<= 0.5%%), %.1f s (< 30 s)", 100.0 * worst,
              where.c_str(), secs)};
}

// ---- 3: planted-parameter recovery ----

Outcome Criterion3() {
  const RobotModel model = RobotModel::Default();
  const InertialParams truth = *PayloadInEeFrame(FindObject(DefaultCatalog(), "Corner"));
  const RolloutRecord rec =
      Rollout(World{model, {}}, SimConfig(), DefaultExcitation(model), truth);
  StackedRegression s = StackFromRollout(rec, model, truth);
  const EstimationReport ols = OlsEstimate(s);
  double worst = 0.0;
  for (int c = 0; c < 10; ++c) {
    const double t = truth.ToVector()(c);
    worst = std::max(worst, std::abs(ols.phi_vector(c) - t) / std::abs(t));
  }
  StackOptions noisy;
  noisy.noise = {0.05, 0.05, 11};
  s = StackFromRollout(rec, model, truth, noisy);
  const EstimationReport ols_n = OlsEstimate(s);
  s.channel_weights = Eigen::VectorXd::Ones(s.w.size());
  const EstimationReport wls_n = WlsEstimate(s);
  const double gap = (wls_n.phi_vector - ols_n.phi_vector).cwiseAbs().maxCoeff() /
                     ols_n.phi_vector.cwiseAbs().maxCoeff();
  return {worst <= 1e-6 && gap <= 1e-10,
          Fmt("noiseless OLS max relative error %.2e (<= 1e-6); uniform-weight WLS vs OLS "
              "%.2e (<= 1e-10)",
              worst, gap)};
}

// ---- 5: SysID on a parametric gap ----

Outcome Criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const RobotModel nominal = RobotModel::Default();
  Perturbation p = Perturbation::DefaultSurrogate();
  p.friction = FrictionModel{};
  const TargetDataset data =
      CollectTargetDataset(MakePseudoReal(nominal, p), SimConfig(), SysIdExcitations(nominal));
  const SysIdResult r = Identify(nominal, SimConfig(), data, DefaultSysIdPsoConfig(nominal, 1));
  const SysIdParams truth{nominal.damping + p.damping_offset,
                          nominal.LinkMasses().cwiseProduct(p.mass_scale)};
  const Eigen::VectorXd rel =
      (r.zeta.ToVector() - truth.ToVector()).cwiseQuotient(truth.ToVector()).cwiseAbs();
  const double reduction = 1.0 - r.post_mse / r.pre_mse;
  const double secs = Since(t0);
  return {rel.maxCoeff() <= 0.05 && reduction >= 0.99 && secs < 600.0,
          Fmt("max zeta relative error %.2f%% (<= 5%%), MSE reduced %.4f%% (>= 99%%), %.0f s "
              "(< 600 s)",
              100.0 * rel.maxCoeff(), 100.0 * reduction, secs)};
}

// ---- 7: GP unit properties ----

Outcome Criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_data = [&](int n) {
    ResidualDataset d;
    d.features.resize(n, kGpFeatureDim);
    d.targets.resize(n, kNumJoints);
    for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < d.targets.size(); ++i) d.targets.data()[i] = g(rng);
    return d;
  };
  std::array<GpHyper, kNumJoints> hyper;
  hyper.fill({0.8, 1.5, 0.01});
  GpFeatureSet all;
  all.tau_cmd = true;

  // Prior reversion far from the data.
  const ResidualDataset d = random_data(60);
  const GpModel m = FitGpFixed(d, hyper, all);
  const GpPrediction far = m.Predict(Eigen::VectorXd::Constant(kGpFeatureDim, 50.0));
  const double prior_err = std::max(far.mean.cwiseAbs().maxCoeff(),
                                    (far.variance.array() - 0.81).abs().maxCoeff());

  // Interpolation of a single noise-light point.
  std::array<GpHyper, kNumJoints> tight;
  tight.fill({1.0, 1.0, 1e-8});
  const ResidualDataset one = random_data(1);
  const GpModel m1 = FitGpFixed(one, tight, all);
  const double interp_err =
      (m1.Mean(one.features.row(0).transpose()) - one.targets.row(0).transpose())
          .cwiseAbs()
          .maxCoeff();

  // Dense-solve agreement on the standardized inputs.
  const Eigen::MatrixXd& z = m.inputs();
  const Eigen::VectorXd mean = d.features.colwise().mean().transpose();
  Eigen::VectorXd scale(kGpFeatureDim);
  for (int c = 0; c < kGpFeatureDim; ++c) {
    scale(c) = std::sqrt((d.features.col(c).array() - mean(c)).square().mean());
  }
  double dense_err = 0.0;
  double min_eig = std::numeric_limits<double>::infinity();
  for (int j = 0; j < kNumJoints; ++j) {
    Eigen::MatrixXd k = RbfGram(z, hyper[j].variance, hyper[j].lengthscale);
    k.diagonal().array() += hyper[j].noise_var + m.jitter(j) * hyper[j].variance;
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues()(0));
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    const Eigen::VectorXd alpha = lu.solve(d.targets.col(j));
    const ResidualDataset q = random_data(10);
    for (int i = 0; i < q.size(); ++i) {
      const Eigen::VectorXd s = (q.features.row(i).transpose() - mean).cwiseQuotient(scale);
      Eigen::VectorXd ks(z.rows());
      for (Eigen::Index a = 0; a < z.rows(); ++a) {
        ks(a) = RbfKernel(s, z.row(a), hyper[j].variance, hyper[j].lengthscale);
      }
      dense_err = std::max(dense_err, std::abs(m.Mean(q.features.row(i).transpose())(j) -
                                               ks.dot(alpha)));
    }
  }
  // PSD Gram with jitter on nearly duplicated inputs.
  Eigen::MatrixXd dup(40, kGpFeatureDim);
  for (int i = 0; i < 40; ++i) dup.row(i) = Eigen::RowVectorXd::Constant(kGpFeatureDim, 1e-9 * i);
  Eigen::MatrixXd kd = RbfGram(dup, 1.0, 1.0);
  kd.diagonal().array() += 1e-10;
  const double dup_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(kd).eigenvalues()(0);

  const double secs = Since(t0);
  const bool ok = prior_err <= 1e-10 && interp_err <= 1e-6 && dense_err <= 1e-10 &&
                  min_eig > 0.0 && dup_eig > 0.0 && secs < 10.0;
  return {ok, Fmt("prior %.1e (<= 1e-10), interpolation %.1e (<= 1e-6), dense solve %.1e "
                  "(<= 1e-10), min Gram eigenvalue %.1e, near-duplicate inputs %.1e (> 0), "
                  "%.2f s (< 10 s)",
                  prior_err, interp_err, dense_err, min_eig, dup_eig, secs)};
}

// ---- 8: gradient check through the full loss ----

Outcome Criterion8() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  Normalization stats;
  stats.x_mean = Eigen::VectorXd::Zero(kStateChannels);
  stats.x_std = Eigen::VectorXd::Ones(kStateChannels);
  stats.y_mean << 0.05, 0.0, 0.0, 0.0, 0.2, 0.1, 0.1;
  stats.y_std = Vector7d::Constant(0.8);
  SequenceBatch x(6, Eigen::MatrixXd(kStateChannels, 4));
  for (auto& m : x) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  }
  Eigen::MatrixXd y(7, 4);
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = n(rng);
  const LossConfig cfg;
  double worst = 0.0;
  bool pos_active = true;
  for (ModelFamily f : {ModelFamily::kLstm, ModelFamily::kRnn, ModelFamily::kCnn,
                        ModelFamily::kAttention}) {
    ModelConfig mc;
    mc.family = f;
    mc.hidden = 6;
    mc.kernel = 2;
    mc.seed = 3;
    SequenceRegressor net(mc);
    Eigen::MatrixXd dout;
    net.ZeroGrad();
    const LossTerms terms = TotalLoss(net.ForwardTrain(x), y, stats, cfg, &dout);
    pos_active = pos_active && terms.pos > 0.0 && terms.tri > 0.0;
    net.Backward(dout);
    const double h = 1e-6;
    for (auto& p : net.parameters()) {
      Eigen::MatrixXd fd(p.value.rows(), p.value.cols());
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        const double keep = p.value.data()[i];
        p.value.data()[i] = keep + h;
        const double up = TotalLoss(net.Forward(x), y, stats, cfg).total;
        p.value.data()[i] = keep - h;
        const double dn = TotalLoss(net.Forward(x), y, stats, cfg).total;
        p.value.data()[i] = keep;
        fd.data()[i] = (up - dn) / (2 * h);
      }
      worst = std::max(worst, (p.grad - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  }
  return {worst <= 1e-4 && pos_active,
          Fmt("max per-tensor relative error %.2e over 4 families (<= 1e-4), triangle and "
              "positivity terms active: %s",
              worst, pos_active ? "yes" : "no")};
}

// ---- pipeline-based criteria ----

struct DeskRun {
  fs::path dir;
  Table t1, t2, t3;
  nlohmann::json timings, train_timings;
  double seconds = 0.0;
};

DeskRun RunDesk(const fs::path& dir) {
  fs::remove_all(dir);
  DeskRun run;
  run.dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  RunPipeline(PresetConfig("desk"), dir.string(), false);
  run.seconds = Since(t0);
  run.t1 = Table::ReadCsv((dir / "eval/table1_adaptation.csv").string());
  run.t2 = Table::ReadCsv((dir / "eval/table2_estimation.csv").string());
  run.t3 = Table::ReadCsv((dir / "eval/table3_consistency.csv").string());
  run.timings = nlohmann::json::parse(ReadFile(dir / "eval/timings.json"));
  run.train_timings = nlohmann::json::parse(ReadFile(dir / "train/timings.json"));
  return run;
}

double Cell(const Table& t, const std::string& row, const std::string& col) {
  return std::stod(t.At(row, col));
}

Outcome Criterion4(const DeskRun& run) {
  const int ols = static_cast<int>(Cell(run.t3, "OLS (Surrogate)", "triangle_violations"));
  const int trials = static_cast<int>(Cell(run.t3, "OLS (Surrogate)", "samples"));
  const int ours = static_cast<int>(Cell(run.t3, "Ours (Sim)", "triangle_violations"));
  const int test = static_cast<int>(Cell(run.t3, "Ours (Sim)", "samples"));
  return {trials == 500 && ols >= 1 && test == 100 && ours == 0,
          Fmt("OLS %d/%d violations (>= 1), ours %d/%d (== 0)", ols, trials, ours, test)};
}

Outcome Criterion6(const DeskRun& run) {
  const double pure = Cell(run.t1, "Average", "pure_sim");
  const double sysid = Cell(run.t1, "Average", "sim_sysid");
  const double both = Cell(run.t1, "Average", "sim_sysid_gp");
  const int payloads = static_cast<int>(run.t1.rows.size()) - 1;
  return {payloads == 10 && pure > sysid && sysid > both && both <= 0.25 * pure,
          Fmt("average MSE over %d payloads: PureSim %.3e > SysID %.3e > SysID+GP %.3e; "
              "SysID+GP / PureSim = %.3f (<= 0.25)",
              payloads, pure, sysid, both, both / pure)};
}

Outcome Criterion9(const DeskRun& run) {
  const double nmae = Cell(run.t2, "Ours (Sim)", "mass_nmae");
  const double baseline = Cell(run.t2, "Mean predictor (Sim)", "mass_nmae");
  const double p95 = run.timings.at("latency").at("p95").get<double>();
  const double train = run.train_timings.at("model_seconds").get<double>();
  return {nmae <= 0.15 && p95 < 0.01 && train < 600.0,
          Fmt("sim-test mass NMAE %.4f (<= 0.15; mean predictor %.4f), p95 latency %.2e s "
              "(< 0.01), training %.0f s (< 600)",
              nmae, baseline, p95, train)};
}

Outcome Criterion10(const DeskRun& run) {
  const double sim8 = Cell(run.t2, "Ours (Sim)", "mass_nmae");
  const double sim12 = Cell(run.t2, "Ours W/Torque (Sim)", "mass_nmae");
  const double real8 = Cell(run.t2, "Ours (Surrogate)", "mass_nmae");
  const double real12 = Cell(run.t2, "Ours W/Torque (Surrogate)", "mass_nmae");
  const bool sim_better = sim12 < sim8;
  const bool real_worse = real12 > real8;
  return {sim_better && real_worse,
          Fmt("mass NMAE sim: torque %.4f vs states %.4f (torque better: %s); surrogate: "
              "torque %.4f vs states %.4f (torque worse: %s)",
              sim12, sim8, sim_better ? "yes" : "no", real12, real8,
              real_worse ? "yes" : "no")};
}

Outcome Criterion11(const DeskRun& first, const fs::path& second_dir) {
  const DeskRun second = RunDesk(second_dir);
  std::vector<std::string> differing;
  const std::vector<std::string> tables = MetricTablePaths();
  for (const std::string& rel : tables) {
    const std::string a = ReadFile(first.dir / rel);
    if (a.empty() || a != ReadFile(second.dir / rel)) differing.push_back(rel);
  }
  std::string detail = Fmt("%zu of %zu metric tables identical", tables.size() - differing.size(),
                           tables.size());
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty(), detail};
}

}  // namespace
}  // namespace inertia_id

int main(int argc, char** argv) {
  using namespace inertia_id;
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "inertia_id_acceptance";

  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "regressor matches Newton-Euler", Criterion1);
  report(2, "composite inertia matches voxel oracle", Criterion2);
  report(3, "OLS planted-parameter recovery", Criterion3);
  report(5, "SysID recovers a parametric gap", Criterion5);
  report(7, "GP unit properties", Criterion7);
  report(8, "learner gradient check", Criterion8);

  std::unique_ptr<DeskRun> desk;
  std::string desk_error;
  try {
    desk = std::make_unique<DeskRun>(RunDesk(work / "desk_a"));
    std::printf("       desk pipeline finished in %.0f s\n", desk->seconds);
  } catch (const std::exception& e) {
    desk_error = e.what();
  }
  auto with_desk = [&](const std::function<Outcome(const DeskRun&)>& check) {
    return [&, check]() -> Outcome {
      if (!desk) return {false, "desk pipeline failed: " + desk_error};
      return check(*desk);
    };
  };
  report(4, "consistency contrast", with_desk(Criterion4));
  report(6, "adaptation ordering", with_desk(Criterion6));
  report(9, "desk-scale estimation quality", with_desk(Criterion9));
  report(10, "torque ablation ordering", with_desk(Criterion10));
  report(11, "end-to-end determinism",
         with_desk([&](const DeskRun& d) { return Criterion11(d, work / "desk_b"); }));

  std::printf("%d of 11 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
