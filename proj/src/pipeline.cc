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

#include "inertia_id/pipeline.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "inertia_id/classical.h"
#include "inertia_id/excitation.h"
#include "inertia_id/gp.h"
#include "inertia_id/object_catalog.h"
#include "inertia_id/parallel.h"
#include "inertia_id/report.h"
#include "inertia_id/rigidbody.h"
#include "inertia_id/sysid.h"

namespace inertia_id {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Stream : std::uint64_t {
  kStreamSysId = 1,
  kStreamGp,
  kStreamDataset,
  kStreamModel,
  kStreamTrain,
  kStreamActuator,
  kStreamNoise,
};

// Artifact paths, relative to the output directory.
constexpr const char* kZeta = "sysid/zeta.json";
constexpr const char* kHistory = "sysid/history.csv";
constexpr const char* kGpSysId = "gp/gp_sysid.json";
constexpr const char* kGpNominal = "gp/gp_nominal.json";
constexpr const char* kResidualsSysId = "gp/residuals_sysid.csv";
constexpr const char* kResidualsNominal = "gp/residuals_nominal.csv";
constexpr const char* kGpReport = "gp/report.json";
constexpr const char* kActuator = "data/actuator_net.json";
constexpr const char* kDataReport = "data/report.json";
constexpr const char* kSimData = "data/sim";
constexpr const char* kSurrogateData = "data/surrogate";
constexpr const char* kModel = "train/model.json";
constexpr const char* kModelTorque = "train/model_torque.json";
constexpr const char* kCurves = "train/curves.csv";
constexpr const char* kCurvesTorque = "train/curves_torque.csv";
constexpr const char* kCompare = "train/compare.csv";
constexpr const char* kTrainTimings = "train/timings.json";
constexpr const char* kTable1 = "eval/table1_adaptation.csv";
constexpr const char* kTable2 = "eval/table2_estimation.csv";
constexpr const char* kTable3 = "eval/table3_consistency.csv";
constexpr const char* kMetrics = "eval/metrics.json";
constexpr const char* kEvalTimings = "eval/timings.json";

const char* PhaseDir(Phase phase) {
  switch (phase) {
    case Phase::kSysId: return "sysid";
    case Phase::kFitGp: return "gp";
    case Phase::kGenData: return "data";
    case Phase::kTrain: return "train";
    case Phase::kEval: return "eval";
  }
  return "";
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void WriteJson(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json ReadJson(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
}

// Rejects keys the schema does not have; nested objects are checked recursively.
void CheckKnownKeys(const json& input, const json& schema, const std::string& where) {
  if (!input.is_object()) throw Error(ErrorCode::kInvalidArgument, where + " must be an object");
  for (auto it = input.begin(); it != input.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!schema.contains(it.key())) {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
    if (it->is_null()) throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' is null");
    const json& s = schema.at(it.key());
    if (s.is_object()) CheckKnownKeys(*it, s, key);
  }
}

std::string Hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

struct Seeds {
  std::uint64_t sysid, gp, dataset, model, train, actuator, noise;
};

Seeds MakeSeeds(std::uint64_t seed) {
  return {DeriveSeed(seed, kStreamSysId),    DeriveSeed(seed, kStreamGp),
          DeriveSeed(seed, kStreamDataset),  DeriveSeed(seed, kStreamModel),
          DeriveSeed(seed, kStreamTrain),    DeriveSeed(seed, kStreamActuator),
          DeriveSeed(seed, kStreamNoise)};
}

json ToJson(const Seeds& s) {
  return {{"sysid", s.sysid}, {"gp", s.gp},           {"dataset", s.dataset},
          {"model", s.model}, {"train", s.train},     {"actuator", s.actuator},
          {"noise", s.noise}};
}

// Shared state of one phase invocation.
struct Context {
  Context(const ExperimentConfig& c, fs::path o, Phase p)
      : cfg(c), out(std::move(o)), phase(p), seeds(MakeSeeds(c.seed)) {}

  const ExperimentConfig& cfg;
  fs::path out;
  Phase phase;
  Seeds seeds;
  RobotModel nominal = RobotModel::Default();
  std::vector<std::string> artifacts;

  fs::path Path(const std::string& rel) const { return out / rel; }

  fs::path Need(const std::string& rel, const char* producer) const {
    const fs::path p = out / rel;
    const bool present = fs::exists(p) || fs::exists(p.string() + ".json");
    if (!present) {
      throw PipelineError(phase, ExitCode::kMissingArtifact, ErrorCode::kIo,
                          "missing upstream artifact " + p.string() + "; run " + producer +
                              " first");
    }
    return p;
  }

  // Registers an artifact path and returns it as a string.
  std::string Emit(const std::string& rel) {
    artifacts.push_back(rel);
    return (out / rel).string();
  }

  World Surrogate() const { return MakePseudoReal(nominal, cfg.surrogate); }
};

// Message of a library error without its "Code: " prefix.
std::string Detail(const Error& e) {
  const std::string what = e.what();
  const std::string prefix = std::string(ErrorCodeName(e.code())) + ": ";
  return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
}

fs::path TargetDir(const ExperimentConfig& cfg, const fs::path& out) {
  return cfg.target_dir.empty() ? out / "target" : fs::path(cfg.target_dir);
}

TargetDataset LoadTarget(const Context& ctx) {
  try {
    return LoadTargetDataset(TargetDir(ctx.cfg, ctx.out).string());
  } catch (const Error& e) {
    const ExitCode exit = ctx.cfg.target_dir.empty() && ctx.phase != Phase::kSysId
                              ? ExitCode::kMissingArtifact
                              : ExitCode::kTargetInput;
    throw PipelineError(ctx.phase, exit, e.code(), Detail(e));
  }
}

SysIdParams LoadZeta(const Context& ctx) {
  return SysIdParamsFromJson(ReadJson(ctx.Need(kZeta, "sysid")).at("zeta"));
}

Dataset FirstChannels(const Dataset& data, int channels) {
  return data.samples.front().x.cols() == channels ? data : SelectChannels(data, channels);
}

// ---- phases ----

void RunSysIdPhase(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  if (cfg.target_dir.empty()) {
    const TargetDataset recorded = CollectTargetDataset(ctx.Surrogate(), SimConfig(),
                                                        SysIdExcitations(ctx.nominal));
    SaveTargetDataset(ctx.Path("target").string(), recorded);
    for (std::size_t i = 0; i < recorded.size(); ++i) {
      ctx.artifacts.push_back("target/command_" + std::to_string(i) + ".csv");
      ctx.artifacts.push_back("target/rollout_" + std::to_string(i) + ".bin");
    }
  }
  const TargetDataset target = LoadTarget(ctx);
  fs::create_directories(ctx.Path("sysid"));

  PsoConfig pso = DefaultSysIdPsoConfig(ctx.nominal, ctx.seeds.sysid);
  pso.swarm_size = cfg.sysid.swarm_size;
  pso.max_iters = cfg.sysid.max_iters;
  pso.patience = cfg.sysid.patience;
  pso.threads = cfg.threads;
  const SysIdResult r = Identify(ctx.nominal, SimConfig(), target, pso);
  WriteHistoryCsv(ctx.Emit(kHistory), r.pso.history);
  WriteJson(ctx.Emit(kZeta), {{"zeta", ToJson(r.zeta)},
                              {"nominal", ToJson(NominalZeta(ctx.nominal))},
                              {"pre_mse", r.pre_mse},
                              {"post_mse", r.post_mse},
                              {"iterations", r.pso.iterations},
                              {"converged", r.pso.converged},
                              {"target_rollouts", target.size()}});
}

void RunGpPhase(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const SysIdParams zeta = LoadZeta(ctx);
  const TargetDataset target = LoadTarget(ctx);
  fs::create_directories(ctx.Path("gp"));

  GpFitConfig fit;
  fit.optimize = cfg.gp.optimize;
  fit.restarts = cfg.gp.restarts;
  fit.max_evals = cfg.gp.max_evals;
  fit.seed = ctx.seeds.gp;
  fit.threads = cfg.threads;
  json report;
  const struct {
    const char* name;
    RobotModel model;
    const char* gp_path;
    const char* residual_path;
  } bases[] = {{"sysid", ApplyZeta(ctx.nominal, zeta), kGpSysId, kResidualsSysId},
               {"nominal", ctx.nominal, kGpNominal, kResidualsNominal}};
  for (const auto& base : bases) {
    const ResidualDataset residuals =
        BuildResidualDataset(World{base.model, {}}, SimConfig(), target, cfg.gp.stride);
    WriteResidualCsv(ctx.Emit(base.residual_path), residuals);
    const GpModel gp = FitGp(residuals, fit);
    SaveGp(ctx.Emit(base.gp_path), gp);
    json joints = json::array();
    for (const GpHyper& h : gp.hyper()) {
      joints.push_back({{"variance", h.variance},
                        {"lengthscale", h.lengthscale},
                        {"noise_var", h.noise_var}});
    }
    report[base.name] = {{"points", residuals.size()}, {"hyper", joints}};
  }
  WriteJson(ctx.Emit(kGpReport), report);
}

void RunGenDataPhase(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const SysIdParams zeta = LoadZeta(ctx);
  auto gp = std::make_shared<const GpModel>(LoadGp(ctx.Need(kGpSysId, "fit-gp").string()));
  const TargetDataset target = LoadTarget(ctx);
  fs::create_directories(ctx.Path("data"));

  const JointTrajectory command = DefaultExcitation(ctx.nominal);
  json report;
  ActuatorNet actuator;
  if (cfg.eval.torque_ablation) {
    const ActuatorData ad =
        CollectActuatorData(ctx.nominal, target.commands, target.rollouts, 1);
    ActuatorNetConfig ac = cfg.actuator;
    ac.seed = ctx.seeds.actuator;
    const std::string path = ctx.Emit(kActuator);
    WriteJson(path, TrainActuatorNet(ad, ac).ToJson());
    actuator = ActuatorNet::FromJson(ReadJson(path));
    report["actuator"] = {{"samples", ad.torque.size()},
                          {"rms_error", ActuatorRmsError(actuator, ad)},
                          {"torque_range", ad.torque.maxCoeff() - ad.torque.minCoeff()}};
  }

  DatasetConfig dc = cfg.dataset;
  dc.seed = ctx.seeds.dataset;
  dc.threads = cfg.threads;
  dc.torque = cfg.eval.torque_ablation ? TorqueChannel::kActuatorNet : TorqueChannel::kNone;
  const Dataset sim = GenerateDataset(World{ApplyZeta(ctx.nominal, zeta), {}},
                                      AttachCorrection(SimConfig(), gp), command, dc, &actuator);
  SaveDataset(ctx.Emit(kSimData), sim);
  ctx.artifacts.back() += ".json";
  ctx.artifacts.push_back(std::string(kSimData) + ".bin");

  dc.torque = cfg.eval.torque_ablation ? TorqueChannel::kMeasured : TorqueChannel::kNone;
  const Dataset real = GenerateDataset(ctx.Surrogate(), SimConfig(), command, dc);
  SaveDataset(ctx.Emit(kSurrogateData), real);
  ctx.artifacts.back() += ".json";
  ctx.artifacts.push_back(std::string(kSurrogateData) + ".bin");

  report["sim"] = {{"samples", sim.samples.size()}, {"resampled", sim.resampled}};
  report["surrogate"] = {{"samples", real.samples.size()}, {"resampled", real.resampled}};
  WriteJson(ctx.Emit(kDataReport), report);
}

void RunTrainPhase(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Dataset sim = LoadDataset(ctx.Need(kSimData, "gen-data").string());
  if (cfg.eval.torque_ablation && sim.samples.front().x.cols() != kTorqueChannels) {
    throw Error(ErrorCode::kShapeMismatch, "simulated dataset lacks torque channels");
  }
  fs::create_directories(ctx.Path("train"));

  ModelConfig mc = cfg.model;
  mc.seed = ctx.seeds.model;
  TrainConfig tc = cfg.train;
  tc.seed = ctx.seeds.train;
  json timings;

  const Dataset states = FirstChannels(sim, kStateChannels);
  const TrainResult base = Train(states, mc, cfg.loss, tc);
  SaveModel(ctx.Emit(kModel), base.model);
  WriteCurvesCsv(ctx.Emit(kCurves), base.curves);
  timings["model_seconds"] = base.wall_time;

  if (cfg.eval.torque_ablation) {
    const TrainResult torque = Train(sim, mc, cfg.loss, tc);
    SaveModel(ctx.Emit(kModelTorque), torque.model);
    WriteCurvesCsv(ctx.Emit(kCurvesTorque), torque.curves);
    timings["model_torque_seconds"] = torque.wall_time;
  }
  if (!cfg.eval.families.empty()) {
    const std::vector<FamilyResult> results = CompareModels(
        states, cfg.eval.families, mc, cfg.loss, tc, TargetScale(DefaultCatalog()));
    WriteComparisonCsv(ctx.Emit(kCompare), results);
    for (const auto& r : results) timings["families"][FamilyName(r.family)] = r.train_seconds;
  }
  WriteJson(ctx.Emit(kTrainTimings), timings);
}

std::vector<std::string> ErrorCells(const GroupErrors& e) {
  return {FormatNumber(e.mae[0]),  FormatNumber(e.mae[1]),  FormatNumber(e.mae[2]),
          FormatNumber(e.nmae[0]), FormatNumber(e.nmae[1]), FormatNumber(e.nmae[2])};
}

json ErrorJson(const GroupErrors& e) {
  return {{"mae", e.mae}, {"nmae", e.nmae}};
}

Table AdaptationTable(Context& ctx, json& metrics) {
  const ExperimentConfig& cfg = ctx.cfg;
  const SysIdParams zeta = LoadZeta(ctx);
  auto gp_sysid = std::make_shared<const GpModel>(LoadGp(ctx.Need(kGpSysId, "fit-gp").string()));
  auto gp_nominal =
      std::make_shared<const GpModel>(LoadGp(ctx.Need(kGpNominal, "fit-gp").string()));

  std::vector<CompositeObject> objects;
  for (const CompositeObject& obj : DefaultCatalog()) {
    if (!IsFree(obj) && static_cast<int>(objects.size()) < cfg.eval.adaptation_payloads) {
      objects.push_back(obj);
    }
  }
  const World truth_world = ctx.Surrogate();
  const World nominal{ctx.nominal, {}};
  const World identified{ApplyZeta(ctx.nominal, zeta), {}};
  const struct {
    const World* world;
    SimConfig config;
  } variants[] = {{&nominal, SimConfig()},
                  {&identified, SimConfig()},
                  {&nominal, AttachCorrection(SimConfig(), gp_nominal)},
                  {&identified, AttachCorrection(SimConfig(), gp_sysid)}};
  const JointTrajectory command = DefaultExcitation(ctx.nominal);

  const int n = static_cast<int>(objects.size());
  Eigen::MatrixXd mse(n, 4);
  ParallelFor(
      n,
      [&](int i) {
        const auto payload = PayloadInEeFrame(objects[i]);
        const RolloutRecord truth =
            Rollout(truth_world, SimConfig(), command, payload, objects[i].label);
        for (int v = 0; v < 4; ++v) {
          mse(i, v) = TrajectoryMse(
              Rollout(*variants[v].world, variants[v].config, command, payload), truth);
        }
      },
      cfg.threads);

  Table t;
  t.columns = {"object", "pure_sim", "sim_sysid", "sim_gp", "sim_sysid_gp"};
  for (int i = 0; i < n; ++i) {
    t.AddRow({objects[i].label, FormatNumber(mse(i, 0)), FormatNumber(mse(i, 1)),
              FormatNumber(mse(i, 2)), FormatNumber(mse(i, 3))});
  }
  const Eigen::RowVectorXd avg = mse.colwise().mean();
  t.AddRow({"Average", FormatNumber(avg(0)), FormatNumber(avg(1)), FormatNumber(avg(2)),
            FormatNumber(avg(3))});
  metrics["adaptation"] = {{"pure_sim", avg(0)},
                           {"sim_sysid", avg(1)},
                           {"sim_gp", avg(2)},
                           {"sim_sysid_gp", avg(3)},
                           {"sysid_gp_ratio", avg(3) / avg(0)}};

  std::vector<std::string> categories;
  std::vector<BarSeries> series{{"PureSim", {}}, {"Sim+SysID", {}}, {"Sim+GP", {}},
                                {"Sim+SysID+GP", {}}};
  for (int i = 0; i <= n; ++i) {
    categories.push_back(i < n ? objects[i].label : "Average");
    for (int v = 0; v < 4; ++v) series[v].values.push_back(i < n ? mse(i, v) : avg(v));
  }
  WriteBarChartSvg(ctx.Emit("eval/fig_adaptation.svg"), "Joint-position MSE against the target",
                   categories, series, "MSE (rad^2)", true);
  return t;
}

struct ClassicalOutcome {
  std::vector<GroupErrors> errors;
  int violations = 0;
  int nonphysical = 0;
};

void RunClassicalTrials(Context& ctx, const Dataset& real, ClassicalOutcome& ols,
                        ClassicalOutcome& wls) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Vector7d scale = TargetScale(DefaultCatalog());
  const World world = ctx.Surrogate();
  const JointTrajectory command = DefaultExcitation(ctx.nominal);
  const std::vector<int>& test = real.test;
  const int n_obj = static_cast<int>(test.size());

  std::vector<CompositeObject> objects;
  for (int idx : test) {
    const std::string& label = real.samples[idx].label;
    objects.push_back(BuildObject(FillsFromLabel(label), label));
  }
  std::vector<RolloutRecord> rollouts(n_obj);
  ParallelFor(
      n_obj,
      [&](int i) {
        rollouts[i] =
            Rollout(world, SimConfig(), command, PayloadInEeFrame(objects[i]), objects[i].label);
      },
      cfg.threads);

  const int trials = cfg.eval.ols_trials;
  ols.errors.assign(trials, {});
  wls.errors.assign(trials, {});
  std::vector<char> flags(4 * trials, 0);
  ParallelFor(
      trials,
      [&](int t) {
        const int k = t % n_obj;
        const CompositeObject& obj = objects[k];
        StackOptions so;
        so.noise = {cfg.eval.wrench_noise, cfg.eval.wrench_noise,
                    ctx.seeds.noise + static_cast<std::uint64_t>(t)};
        const StackedRegression s =
            StackFromRollout(rollouts[k], ctx.nominal, *PayloadInEeFrame(obj), so);
        const InertialParams truth = ObjectParams(obj);
        const RigidTransform to_object = obj.grasp_pose.Inverse();
        const EstimationReport r_ols = OlsEstimate(s);
        const EstimationReport r_wls = WlsEstimate(s);
        ols.errors[t] = EvaluateEstimate(TransformParams(r_ols.phi_hat, to_object), truth, scale);
        wls.errors[t] = EvaluateEstimate(TransformParams(r_wls.phi_hat, to_object), truth, scale);
        flags[4 * t] = !r_ols.consistency.triangle_ok;
        flags[4 * t + 1] = !(r_ols.consistency.mass_nonneg && r_ols.consistency.psd_ok);
        flags[4 * t + 2] = !r_wls.consistency.triangle_ok;
        flags[4 * t + 3] = !(r_wls.consistency.mass_nonneg && r_wls.consistency.psd_ok);
      },
      cfg.threads);
  for (int t = 0; t < trials; ++t) {
    ols.violations += flags[4 * t];
    ols.nonphysical += flags[4 * t + 1];
    wls.violations += flags[4 * t + 2];
    wls.nonphysical += flags[4 * t + 3];
  }
}

void EstimationTables(Context& ctx, json& metrics, json& timings, Table& t2, Table& t3) {
  const ExperimentConfig& cfg = ctx.cfg;
  const Vector7d scale = TargetScale(DefaultCatalog());
  const Dataset sim = LoadDataset(ctx.Need(kSimData, "gen-data").string());
  const Dataset real = LoadDataset(ctx.Need(kSurrogateData, "gen-data").string());
  const TrainedModel model = LoadModel(ctx.Need(kModel, "train").string());

  t2.columns = {"method",   "samples",   "mass_mae",   "com_mae",
                "inertia_mae", "mass_nmae", "com_nmae", "inertia_nmae"};
  t3.columns = {"method", "samples", "triangle_violations", "nonphysical_outputs"};
  std::vector<std::pair<std::string, GroupErrors>> plotted;

  auto add_learned = [&](const std::string& name, const std::string& key,
                         const TrainedModel& m) {
    const int c = m.channels();
    const Dataset s = FirstChannels(sim, c);
    const Dataset r = FirstChannels(real, c);
    for (const auto& [domain, data] : {std::pair<std::string, const Dataset*>{"Sim", &s},
                                       std::pair<std::string, const Dataset*>{"Surrogate", &r}}) {
      const EvalReport e = Evaluate(m, *data, data->test, scale);
      const std::string label = name + " (" + domain + ")";
      std::vector<std::string> row{label, std::to_string(e.count)};
      for (auto& cell : ErrorCells(e.errors)) row.push_back(cell);
      t2.AddRow(row);
      t3.AddRow({label, std::to_string(e.count), std::to_string(e.triangle_violations),
                 std::to_string(e.negative_outputs)});
      plotted.emplace_back(label, e.errors);
      std::string k = key + "_" + (domain == "Sim" ? "sim" : "surrogate");
      metrics["estimation"][k] = ErrorJson(e.errors);
      metrics["consistency"][k] = {{"samples", e.count},
                                   {"triangle_violations", e.triangle_violations},
                                   {"nonphysical_outputs", e.negative_outputs}};
    }
  };
  add_learned("Ours", "ours", model);
  if (cfg.eval.torque_ablation) {
    add_learned("Ours W/Torque", "ours_torque",
                LoadModel(ctx.Need(kModelTorque, "train").string()));
  }

  const Dataset states = FirstChannels(sim, kStateChannels);
  const GroupErrors mean = MeanPredictorErrors(states, states.test, scale);
  {
    std::vector<std::string> row{"Mean predictor (Sim)", std::to_string(states.test.size())};
    for (auto& cell : ErrorCells(mean)) row.push_back(cell);
    t2.AddRow(row);
    metrics["estimation"]["mean_predictor_sim"] = ErrorJson(mean);
  }

  ClassicalOutcome ols, wls;
  RunClassicalTrials(ctx, real, ols, wls);
  for (const auto& [name, key, outcome] :
       {std::tuple<std::string, std::string, const ClassicalOutcome*>{"OLS", "ols", &ols},
        std::tuple<std::string, std::string, const ClassicalOutcome*>{"WLS", "wls", &wls}}) {
    const GroupErrors e = MeanErrors(outcome->errors);
    const std::string label = name + " (Surrogate)";
    const std::string trials = std::to_string(cfg.eval.ols_trials);
    std::vector<std::string> row{label, trials};
    for (auto& cell : ErrorCells(e)) row.push_back(cell);
    t2.AddRow(row);
    t3.AddRow({label, trials, std::to_string(outcome->violations),
               std::to_string(outcome->nonphysical)});
    plotted.emplace_back(label, e);
    metrics["estimation"][key + "_surrogate"] = ErrorJson(e);
    metrics["consistency"][key + "_surrogate"] = {{"samples", cfg.eval.ols_trials},
                                                  {"triangle_violations", outcome->violations},
                                                  {"nonphysical_outputs", outcome->nonphysical}};
  }

  std::vector<BarSeries> series;
  for (const auto& [label, e] : plotted) {
    series.push_back({label, {e.nmae[0], e.nmae[1], e.nmae[2]}});
  }
  WriteBarChartSvg(ctx.Emit("eval/fig_estimation.svg"), "Estimation error on the test objects",
                   {"mass", "com", "inertia"}, series, "NMAE", true);

  const LatencyStats lat = MeasureLatency(model, states, cfg.eval.latency_samples);
  timings["latency"] = {{"p50", lat.p50}, {"p95", lat.p95}, {"max", lat.max},
                        {"samples", lat.samples}};
}

void TrainingPlots(Context& ctx) {
  std::vector<LineSeries> curves;
  for (const auto& [name, rel] : {std::pair<std::string, const char*>{"8-channel", kCurves},
                                  std::pair<std::string, const char*>{"12-channel", kCurvesTorque}}) {
    if (!fs::exists(ctx.Path(rel))) continue;
    const Table t = Table::ReadCsv(ctx.Path(rel).string());
    LineSeries train{name + " train", {}, {}}, val{name + " val", {}, {}};
    for (const auto& row : t.rows) {
      const double epoch = std::stod(row[0]);
      train.x.push_back(epoch);
      train.y.push_back(std::stod(row[1]));
      val.x.push_back(epoch);
      val.y.push_back(std::stod(row[2]));
    }
    curves.push_back(train);
    curves.push_back(val);
  }
  WriteLineChartSvg(ctx.Emit("eval/fig_training.svg"), "Training curves", curves, "epoch",
                    "loss", true);

  if (!fs::exists(ctx.Path(kCompare))) return;
  const Table t = Table::ReadCsv(ctx.Path(kCompare).string());
  std::vector<std::string> families;
  std::vector<BarSeries> groups{{"mass", {}}, {"com", {}}, {"inertia", {}}};
  for (const auto& row : t.rows) {
    families.push_back(row[0]);
    for (int g = 0; g < 3; ++g) groups[g].values.push_back(std::stod(row[3 + g]));
  }
  WriteBarChartSvg(ctx.Emit("eval/fig_families.svg"), "Model families at a matched budget",
                   families, groups, "NMAE", false);
}

void RunEvalPhase(Context& ctx) {
  ctx.Need(kZeta, "sysid");
  ctx.Need(kGpSysId, "fit-gp");
  ctx.Need(kSimData, "gen-data");
  ctx.Need(kModel, "train");
  fs::create_directories(ctx.Path("eval"));

  json metrics, timings;
  metrics["sysid"] = ReadJson(ctx.Path(kZeta));
  AdaptationTable(ctx, metrics).WriteCsv(ctx.Emit(kTable1));
  Table t2, t3;
  EstimationTables(ctx, metrics, timings, t2, t3);
  t2.WriteCsv(ctx.Emit(kTable2));
  t3.WriteCsv(ctx.Emit(kTable3));
  TrainingPlots(ctx);
  metrics["config_hash"] = ConfigHash(ctx.cfg);
  WriteJson(ctx.Emit(kMetrics), metrics);
  WriteJson(ctx.Emit(kEvalTimings), timings);
}

// ---- resume markers ----

fs::path MarkerPath(const fs::path& out, Phase phase) {
  return out / PhaseDir(phase) / "done.json";
}

bool PhaseIsFresh(const fs::path& out, Phase phase, const std::string& hash,
                  std::vector<std::string>* artifacts) {
  const fs::path marker = MarkerPath(out, phase);
  if (!fs::exists(marker)) return false;
  try {
    const json j = ReadJson(marker);
    if (j.at("config_hash").get<std::string>() != hash) return false;
    std::vector<std::string> listed = j.at("artifacts").get<std::vector<std::string>>();
    for (const auto& a : listed) {
      if (!fs::exists(out / a)) return false;
    }
    *artifacts = std::move(listed);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

// ---- configuration ----

void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
  };
  require(!name.empty(), "config name must not be empty");
  require(threads >= 0, "threads must be >= 0");
  require(sysid.swarm_size >= 1 && sysid.max_iters >= 1 && sysid.patience >= 1,
          "sysid swarm_size, max_iters and patience must be >= 1");
  require(gp.stride >= 1 && gp.restarts >= 1 && gp.max_evals >= 1,
          "gp stride, restarts and max_evals must be >= 1");
  dataset.Validate();
  model.Validate();
  train.Validate();
  loss.Validate();
  require(!actuator.hidden.empty() && actuator.epochs >= 1 && actuator.batch_size >= 1 &&
              actuator.learning_rate > 0.0,
          "actuator network needs hidden layers and positive training settings");
  for (int h : actuator.hidden) require(h >= 1, "actuator hidden widths must be >= 1");
  require(eval.adaptation_payloads >= 1 && eval.adaptation_payloads <= 11,
          "adaptation_payloads must be in [1, 11]");
  require(eval.ols_trials >= 1, "ols_trials must be >= 1");
  require(eval.wrench_noise >= 0.0, "wrench_noise must be >= 0");
  require(eval.latency_samples >= 1, "latency_samples must be >= 1");
  const int test = dataset.num_samples -
                   static_cast<int>(dataset.train_fraction * dataset.num_samples) -
                   static_cast<int>(dataset.val_fraction * dataset.num_samples);
  require(test >= 1 && static_cast<int>(dataset.val_fraction * dataset.num_samples) >= 1,
          "dataset must leave non-empty validation and test splits");
}

ExperimentConfig PresetConfig(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  if (name == "desk") return cfg;
  if (name == "paper") {
    cfg.dataset.num_samples = 5000;
    cfg.model.hidden = 1024;
    cfg.model.layers = 4;
    cfg.train.epochs = 2000;
    cfg.train.batch_size = 512;
    return cfg;
  }
  if (name == "smoke") {
    cfg.sysid = {8, 6, 3};
    cfg.gp = {10, true, 1, 40};
    cfg.dataset.num_samples = 40;
    cfg.model.hidden = 8;
    cfg.model.layers = 1;
    cfg.train.epochs = 4;
    cfg.train.batch_size = 16;
    cfg.actuator.hidden = {16};
    cfg.actuator.epochs = 20;
    cfg.eval.adaptation_payloads = 3;
    cfg.eval.ols_trials = 20;
    cfg.eval.families = {ModelFamily::kLstm, ModelFamily::kCnn};
    cfg.eval.latency_samples = 50;
    return cfg;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + name + "'");
}

json ToJson(const ExperimentConfig& cfg) {
  json families = json::array();
  for (ModelFamily f : cfg.eval.families) families.push_back(FamilyName(f));
  json model = ToJson(cfg.model);
  model.erase("seed");
  model.erase("input_dim");
  model.erase("output_dim");
  json train = ToJson(cfg.train);
  train.erase("seed");
  return {
      {"name", cfg.name},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
      {"surrogate", ToJson(cfg.surrogate)},
      {"target_dir", cfg.target_dir},
      {"sysid",
       {{"swarm_size", cfg.sysid.swarm_size},
        {"max_iters", cfg.sysid.max_iters},
        {"patience", cfg.sysid.patience}}},
      {"gp",
       {{"stride", cfg.gp.stride},
        {"optimize", cfg.gp.optimize},
        {"restarts", cfg.gp.restarts},
        {"max_evals", cfg.gp.max_evals}}},
      {"dataset",
       {{"num_samples", cfg.dataset.num_samples},
        {"stride", cfg.dataset.stride},
        {"train_fraction", cfg.dataset.train_fraction},
        {"val_fraction", cfg.dataset.val_fraction},
        {"max_attempts", cfg.dataset.max_attempts}}},
      {"model", model},
      {"train", train},
      {"loss", ToJson(cfg.loss)},
      {"actuator",
       {{"hidden", cfg.actuator.hidden},
        {"epochs", cfg.actuator.epochs},
        {"batch_size", cfg.actuator.batch_size},
        {"learning_rate", cfg.actuator.learning_rate}}},
      {"eval",
       {{"adaptation_payloads", cfg.eval.adaptation_payloads},
        {"ols_trials", cfg.eval.ols_trials},
        {"wrench_noise", cfg.eval.wrench_noise},
        {"families", families},
        {"torque_ablation", cfg.eval.torque_ablation},
        {"latency_samples", cfg.eval.latency_samples}}},
  };
}

ExperimentConfig ExperimentConfigFromJson(const json& input) {
  try {
    if (!input.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be an object");
    const std::string preset = input.value("preset", std::string("desk"));
    json j = ToJson(PresetConfig(preset));
    json overrides = input;
    overrides.erase("preset");
    CheckKnownKeys(overrides, j, "");
    j.merge_patch(overrides);

    ExperimentConfig cfg;
    cfg.name = j.at("name").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.threads = j.at("threads").get<int>();
    cfg.surrogate = PerturbationFromJson(j.at("surrogate"));
    cfg.target_dir = j.at("target_dir").get<std::string>();
    const json& s = j.at("sysid");
    cfg.sysid = {s.at("swarm_size").get<int>(), s.at("max_iters").get<int>(),
                 s.at("patience").get<int>()};
    const json& g = j.at("gp");
    cfg.gp = {g.at("stride").get<int>(), g.at("optimize").get<bool>(),
              g.at("restarts").get<int>(), g.at("max_evals").get<int>()};
    const json& d = j.at("dataset");
    cfg.dataset.num_samples = d.at("num_samples").get<int>();
    cfg.dataset.stride = d.at("stride").get<int>();
    cfg.dataset.train_fraction = d.at("train_fraction").get<double>();
    cfg.dataset.val_fraction = d.at("val_fraction").get<double>();
    cfg.dataset.max_attempts = d.at("max_attempts").get<int>();
    cfg.model = ModelConfigFromJson(j.at("model"));
    cfg.train = TrainConfigFromJson(j.at("train"));
    cfg.loss = LossConfigFromJson(j.at("loss"));
    const json& a = j.at("actuator");
    cfg.actuator.hidden = a.at("hidden").get<std::vector<int>>();
    cfg.actuator.epochs = a.at("epochs").get<int>();
    cfg.actuator.batch_size = a.at("batch_size").get<int>();
    cfg.actuator.learning_rate = a.at("learning_rate").get<double>();
    const json& e = j.at("eval");
    cfg.eval.adaptation_payloads = e.at("adaptation_payloads").get<int>();
    cfg.eval.ols_trials = e.at("ols_trials").get<int>();
    cfg.eval.wrench_noise = e.at("wrench_noise").get<double>();
    cfg.eval.families.clear();
    for (const auto& f : e.at("families")) {
      cfg.eval.families.push_back(FamilyFromName(f.get<std::string>()));
    }
    cfg.eval.torque_ablation = e.at("torque_ablation").get<bool>();
    cfg.eval.latency_samples = e.at("latency_samples").get<int>();
    cfg.Validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
}

ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, path + ": " + e.what());
  }
  return ExperimentConfigFromJson(j);
}

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  json j = ToJson(cfg);
  j.erase("threads");
  return Hex(Fnv1a64(j.dump()));
}

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined input
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

const char* PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kSysId: return "sysid";
    case Phase::kFitGp: return "fit-gp";
    case Phase::kGenData: return "gen-data";
    case Phase::kTrain: return "train";
    case Phase::kEval: return "eval";
  }
  return "?";
}

Phase PhaseFromName(const std::string& name) {
  for (Phase p : kAllPhases) {
    if (name == PhaseName(p)) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown phase '" + name + "'");
}

// ---- target rollouts ----

void SaveTargetDataset(const std::string& dir, const TargetDataset& data) {
  data.Validate();
  fs::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string n = std::to_string(i);
    WriteJointTrajectoryCsv((fs::path(dir) / ("command_" + n + ".csv")).string(),
                            data.commands[i]);
    WriteRolloutBinary((fs::path(dir) / ("rollout_" + n + ".bin")).string(), data.rollouts[i]);
  }
}

TargetDataset LoadTargetDataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "target directory " + dir + " not found");
  TargetDataset data;
  for (int i = 0;; ++i) {
    const std::string n = std::to_string(i);
    const fs::path cmd = fs::path(dir) / ("command_" + n + ".csv");
    const fs::path roll = fs::path(dir) / ("rollout_" + n + ".bin");
    if (!fs::exists(cmd)) break;
    if (!fs::exists(roll)) throw Error(ErrorCode::kIo, roll.string() + " missing for " + cmd.string());
    data.commands.push_back(ReadJointTrajectoryCsv(cmd.string()));
    data.rollouts.push_back(ReadRolloutBinary(roll.string()));
  }
  if (data.size() == 0) {
    throw Error(ErrorCode::kIo, "no target rollouts (command_0.csv, rollout_0.bin) in " + dir);
  }
  data.Validate();
  return data;
}

HoleFills FillsFromLabel(const std::string& label) {
  if (label.size() != kNumHoles) {
    throw Error(ErrorCode::kInvalidArgument, "fill label '" + label + "' needs 10 characters");
  }
  HoleFills fills{};
  for (int i = 0; i < kNumHoles; ++i) {
    switch (label[i]) {
      case 'S': fills[i] = HoleFill::kSteel; break;
      case 'A': fills[i] = HoleFill::kAbs; break;
      case 'E': fills[i] = HoleFill::kEmpty; break;
      default:
        throw Error(ErrorCode::kInvalidArgument, "fill label '" + label + "' has bad character");
    }
  }
  return fills;
}

// ---- orchestration ----

std::vector<std::string> MetricTablePaths() {
  return {kTable1, kTable2, kTable3, kCompare, kMetrics};
}

namespace {

std::vector<std::string> ExecutePhase(const ExperimentConfig& cfg, const fs::path& out,
                                      Phase phase) {
  Context ctx(cfg, out, phase);
  try {
    switch (phase) {
      case Phase::kSysId: RunSysIdPhase(ctx); break;
      case Phase::kFitGp: RunGpPhase(ctx); break;
      case Phase::kGenData: RunGenDataPhase(ctx); break;
      case Phase::kTrain: RunTrainPhase(ctx); break;
      case Phase::kEval: RunEvalPhase(ctx); break;
    }
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(phase, ExitCode::kFailure, e.code(), Detail(e));
  } catch (const std::exception& e) {
    throw PipelineError(phase, ExitCode::kFailure, ErrorCode::kIo, e.what());
  }
  WriteJson(MarkerPath(out, phase),
            {{"phase", PhaseName(phase)}, {"config_hash", ConfigHash(cfg)},
             {"artifacts", ctx.artifacts}});
  return ctx.artifacts;
}

}  // namespace

PhaseTiming RunPhase(const ExperimentConfig& cfg, const std::string& out_dir, Phase phase) {
  cfg.Validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExecutePhase(cfg, out_dir, phase);
  return {phase, Seconds(t0), false};
}

PipelineResult RunPipeline(const ExperimentConfig& cfg, const std::string& out_dir, bool resume) {
  cfg.Validate();
  const fs::path out(out_dir);
  if (!cfg.target_dir.empty()) {
    try {
      LoadTargetDataset(cfg.target_dir);
    } catch (const Error& e) {
      throw PipelineError(Phase::kSysId, ExitCode::kTargetInput, e.code(), Detail(e));
    }
  }
  PipelineResult result;
  result.config_hash = ConfigHash(cfg);
  std::vector<std::string> artifacts;
  bool upstream_ran = false;
  for (Phase phase : kAllPhases) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> produced;
    const bool skip = resume && !upstream_ran &&
                      PhaseIsFresh(out, phase, result.config_hash, &produced);
    if (!skip) {
      produced = ExecutePhase(cfg, out, phase);
      upstream_ran = true;
    }
    result.phases.push_back({phase, Seconds(t0), skip});
    artifacts.insert(artifacts.end(), produced.begin(), produced.end());
  }

  json phases = json::array();
  for (const PhaseTiming& p : result.phases) {
    phases.push_back({{"phase", PhaseName(p.phase)}, {"seconds", p.seconds},
                      {"resumed", p.skipped}});
  }
  WriteJson(out / "manifest.json",
            {{"name", cfg.name},
             {"config_hash", result.config_hash},
             {"config", ToJson(cfg)},
             {"seed", cfg.seed},
             {"seeds", ToJson(MakeSeeds(cfg.seed))},
             {"threads", cfg.threads > 0 ? cfg.threads : DefaultThreadCount()},
             {"versions",
              {{"inertia_id", kVersion},
               {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                             std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION)},
               {"compiler", __VERSION__}}},
             {"target_dir", TargetDir(cfg, out).string()},
             {"phases", phases},
             {"artifacts", artifacts}});
  return result;
}

}  // namespace inertia_id
