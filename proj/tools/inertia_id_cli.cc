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

// Command-line front end for the identification pipeline.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "inertia_id/excitation.h"
#include "inertia_id/gp.h"
#include "inertia_id/object_catalog.h"
#include "inertia_id/pipeline.h"
#include "inertia_id/rigidbody.h"
#include "inertia_id/sysid.h"
#include "json.hpp"

namespace {

using inertia_id::ExitCode;

struct CommonOptions {
  std::string config;
  std::string preset = "desk";
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
};

void AddCommon(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--preset", o.preset, "base preset")
      ->check(CLI::IsMember({"desk", "paper", "smoke"}));
  cmd->add_option("--out", o.out, "output directory (default runs/<name>)");
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&o](const std::uint64_t& s) {
        o.seed = s;
        o.seed_set = true;
      },
      "experiment seed");
  cmd->add_option("--threads", o.threads, "worker threads (0 = default)")->check(CLI::NonNegativeNumber);
}

inertia_id::ExperimentConfig ResolveConfig(const CommonOptions& o) {
  inertia_id::ExperimentConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) {
      throw inertia_id::Error(inertia_id::ErrorCode::kInvalidArgument,
                              "cannot read config " + o.config);
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw inertia_id::Error(inertia_id::ErrorCode::kInvalidArgument, o.config + ": " + e.what());
    }
    if (!j.contains("preset")) j["preset"] = o.preset;
    cfg = inertia_id::ExperimentConfigFromJson(j);
  } else {
    cfg = inertia_id::PresetConfig(o.preset);
  }
  if (o.seed_set) cfg.seed = o.seed;
  if (o.threads >= 0) cfg.threads = o.threads;
  cfg.Validate();
  return cfg;
}

std::string OutDir(const CommonOptions& o, const inertia_id::ExperimentConfig& cfg) {
  return o.out.empty() ? "runs/" + cfg.name : o.out;
}

void PrintPhase(const inertia_id::PhaseTiming& t) {
  std::printf("%-9s %s %.1f s\n", inertia_id::PhaseName(t.phase),
              t.skipped ? "resumed" : "done   ", t.seconds);
}

int ListObjects(bool as_json) {
  const auto catalog = inertia_id::DefaultCatalog();
  if (as_json) {
    std::cout << inertia_id::CatalogToJson(catalog).dump(2) << '\n';
    return 0;
  }
  std::printf("%-14s %9s %9s %9s %9s %11s %11s %11s\n", "label", "mass", "cx", "cy", "cz", "Ixx",
              "Iyy", "Izz");
  for (const auto& obj : catalog) {
    if (inertia_id::IsFree(obj)) {
      std::printf("%-14s %9s\n", obj.label.c_str(), "(empty gripper)");
      continue;
    }
    const inertia_id::Vector7d y = inertia_id::TargetVector(inertia_id::ObjectParams(obj));
    std::printf("%-14s %9.4f %9.4f %9.4f %9.4f %11.3e %11.3e %11.3e\n", obj.label.c_str(), y(0),
                y(1), y(2), y(3), y(4), y(5), y(6));
  }
  return 0;
}

int Simulate(const CommonOptions& o, const std::string& object, const std::string& world_name,
             bool with_gp, const std::string& output) {
  using namespace inertia_id;
  const ExperimentConfig cfg = ResolveConfig(o);
  const std::string out = OutDir(o, cfg);
  const RobotModel nominal = RobotModel::Default();
  World world{nominal, {}};
  SimConfig sim;
  if (world_name == "surrogate") {
    world = MakePseudoReal(nominal, cfg.surrogate);
  } else if (world_name == "sysid") {
    const std::string zeta_path = out + "/sysid/zeta.json";
    std::ifstream in(zeta_path);
    if (!in) {
      std::cerr << "missing " << zeta_path << "; run sysid first\n";
      return static_cast<int>(ExitCode::kMissingArtifact);
    }
    world.model = ApplyZeta(nominal, SysIdParamsFromJson(nlohmann::json::parse(in).at("zeta")));
  }
  if (with_gp) {
    const std::string gp_path =
        out + (world_name == "sysid" ? "/gp/gp_sysid.json" : "/gp/gp_nominal.json");
    if (!std::filesystem::exists(gp_path)) {
      std::cerr << "missing " << gp_path << "; run fit-gp first\n";
      return static_cast<int>(ExitCode::kMissingArtifact);
    }
    sim = AttachCorrection(sim, std::make_shared<const GpModel>(LoadGp(gp_path)));
  }
  const CompositeObject& obj = FindObject(DefaultCatalog(), object);
  const RolloutRecord rec =
      Rollout(world, sim, DefaultExcitation(nominal), PayloadInEeFrame(obj), obj.label);
  WriteRolloutCsv(output, rec);
  std::printf("wrote %zu samples to %s\n", rec.size(), output.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inertial-parameter identification of grasped objects"};
  app.require_subcommand(1);

  CommonOptions common;
  bool no_resume = false;
  CLI::App* pipeline = app.add_subcommand("pipeline", "run every phase, resuming finished ones");
  AddCommon(pipeline, common);
  pipeline->add_flag("--no-resume", no_resume, "rerun phases even when artifacts are current");

  std::vector<std::pair<CLI::App*, inertia_id::Phase>> phase_cmds;
  for (inertia_id::Phase p : inertia_id::kAllPhases) {
    CLI::App* cmd = app.add_subcommand(inertia_id::PhaseName(p),
                                       std::string("run the ") + inertia_id::PhaseName(p) +
                                           " phase from artifacts in --out");
    AddCommon(cmd, common);
    phase_cmds.emplace_back(cmd, p);
  }

  std::string object = "Free", world = "nominal", output = "rollout.csv";
  bool with_gp = false;
  CLI::App* simulate = app.add_subcommand("simulate", "roll out the default excitation");
  AddCommon(simulate, common);
  simulate->add_option("--object", object, "catalog label");
  simulate->add_option("--world", world, "nominal, surrogate or sysid")
      ->check(CLI::IsMember({"nominal", "surrogate", "sysid"}));
  simulate->add_flag("--gp", with_gp, "attach the fitted residual GP");
  simulate->add_option("--output", output, "rollout CSV path");

  bool as_json = false;
  CLI::App* objects = app.add_subcommand("objects", "object catalog");
  CLI::App* list = objects->add_subcommand("list", "print the catalog");
  list->add_flag("--json", as_json, "print as JSON");
  objects->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kUsage);
  }

  try {
    if (list->parsed()) return ListObjects(as_json);
    if (simulate->parsed()) return Simulate(common, object, world, with_gp, output);

    const inertia_id::ExperimentConfig cfg = ResolveConfig(common);
    const std::string out = OutDir(common, cfg);
    if (pipeline->parsed()) {
      const inertia_id::PipelineResult r = inertia_id::RunPipeline(cfg, out, !no_resume);
      for (const auto& t : r.phases) PrintPhase(t);
      std::printf("config %s, artifacts in %s\n", r.config_hash.c_str(), out.c_str());
      return 0;
    }
    for (const auto& [cmd, phase] : phase_cmds) {
      if (cmd->parsed()) {
        PrintPhase(inertia_id::RunPhase(cfg, out, phase));
        return 0;
      }
    }
  } catch (const inertia_id::PipelineError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const inertia_id::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code() == inertia_id::ErrorCode::kInvalidArgument
                                ? ExitCode::kUsage
                                : ExitCode::kFailure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kFailure);
  }
  return static_cast<int>(ExitCode::kUsage);
}
