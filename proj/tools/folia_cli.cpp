// folia: batch driver for the resilient-leaf experiments.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "folia/pipeline.hpp"

using namespace folia;

namespace {

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "example1") {
    c.model = "suspension";
  } else if (name == "example2") {
    c.model = "product_flow";
  } else if (name == "reeb") {
    c.model = "reeb";
  } else {
    fail(ErrorKind::Input, "unknown preset '" + name + "' (example1, example2, reeb)");
  }
  return c;
}

std::string csv_base(const std::string& report, const std::string& csv) {
  if (!csv.empty()) return csv;
  std::filesystem::path p(report);
  return (p.parent_path() / p.stem()).string() + ".entropy";
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::Input, "cannot write '" + path + "'");
  f << text;
}

double jitter_from_seed(std::optional<long> seed) {
  if (!seed) return 0.0;
  std::mt19937_64 rng(static_cast<unsigned long>(*seed));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int emit(const RunResult& R, const ExperimentConfig& cfg, const std::string& out) {
  std::string path = out.empty() ? cfg.report : out;
  write_file(path, R.report.dump(2) + "\n");
  for (const auto& [suffix, text] : R.csv) write_file(csv_base(path, cfg.csv) + suffix, text);
  const auto& st = R.report["status"];
  std::cout << "report: " << path << "\n";
  if (R.report.contains("budget") && R.report["budget"].contains("achieved"))
    std::cout << "budget: achieved " << R.report["budget"]["achieved"] << " vs delta " << cfg.delta << "\n";
  std::cout << R.report["convention_label"].get<std::string>() << "\n";
  if (!st["error"].is_null()) std::cerr << "error: " << st["error"]["message"].get<std::string>() << "\n";
  std::cout << "exit " << R.exit_code << "\n";
  return R.exit_code;
}

int cmd_run(const std::string& config, const std::string& out, std::optional<long> seed) {
  auto cfg = load_config(config);
  return emit(run_pipeline(cfg, jitter_from_seed(seed)), cfg, out);
}

int cmd_demo(const std::string& name, const std::string& out, std::optional<long> seed) {
  auto cfg = preset(name);
  cfg.report = name + ".json";
  return emit(run_pipeline(cfg, jitter_from_seed(seed)), cfg, out);
}

int cmd_verify(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::Input, "cannot read report '" + path + "'");
  Json rep;
  try {
    rep = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("report is not valid JSON: ") + e.what());
  }
  auto V = verify_report(rep);
  for (const auto& n : V.notes) std::cout << n << "\n";
  if (V.exit_code == kExitOk) std::cout << "verify: ok\n";
  else if (!V.field.empty()) std::cerr << "verify: failed field " << V.field << "\n";
  return V.exit_code;
}

int cmd_entropy(const ExperimentConfig& cfg, const std::string& out, std::optional<long> seed) {
  auto sc = cfg.scenario();
  auto curve = entropy_estimate(sc.system, cfg.n_max, cfg.epsilons, cfg.grid, false, jitter_from_seed(seed));
  std::string path = out.empty() ? cfg.report : out;
  Json rep{{"artifact", {{"name", "folia"}, {"version", kArtifactVersion}}},
           {"model", sc.name},
           {"scale", {{"n_max", cfg.n_max}, {"grid", cfg.grid}}},
           {"entropy", curve_json(curve)}};
  write_file(path, rep.dump(2) + "\n");
  write_file(csv_base(path, cfg.csv) + ".csv", curve_csv(curve));
  std::cout << curve_csv(curve);
  return kExitOk;
}

int cmd_atlas(const ExperimentConfig& cfg, const std::string& out) {
  auto S = build_scene(cfg.atlas_amplitude, cfg.atlas_blend_end);
  auto cr = scene_coherence(S, cfg.atlas_samples);
  Json box = Json::array();
  for (const auto& b : S.box_maps) box.push_back({{"label", b.label}, {"case", b.kase}});
  Json rep{{"artifact", {{"name", "folia"}, {"version", kArtifactVersion}}},
           {"atlas",
            {{"residual", cr.residual},
             {"samples", cr.samples},
             {"threshold", cr.threshold},
             {"flagged", cr.flagged},
             {"cells", S.cells.size()},
             {"boxes", box},
             {"overlap_agreement", overlap_agreement(S.atlas, S.plaques)}}}};
  std::string path = out.empty() ? cfg.report : out;
  write_file(path, rep.dump(2) + "\n");
  std::cout << "atlas residual " << cr.residual << (cr.flagged ? " (flagged)" : "") << "\n";
  return cr.flagged ? kExitCertification : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"folia: resilient leaves by C^r-small perturbation, at transversal scale"};
  app.require_subcommand(1);
  std::string config, out, preset_name, report;
  std::optional<long> seed;

  auto* run = app.add_subcommand("run", "run the full pipeline from a config file");
  run->add_option("--config", config, "config file")->required();
  auto* verify = app.add_subcommand("verify", "re-verify a report");
  verify->add_option("report", report, "report path")->required();
  auto* demo = app.add_subcommand("demo", "run a named preset");
  demo->add_option("--preset", preset_name, "example1 | example2 | reeb")->required();
  auto* ent = app.add_subcommand("entropy", "standalone entropy estimate of the model");
  auto* atl = app.add_subcommand("atlas", "standalone toy-atlas coherence check");
  for (auto* s : {ent, atl}) {
    s->add_option("--config", config, "config file");
    s->add_option("--preset", preset_name, "example1 | example2 | reeb");
  }
  for (auto* s : {run, demo, ent, atl}) s->add_option("--out", out, "report path");
  for (auto* s : {run, demo, ent}) s->add_option("--seed", seed, "grid jitter seed (robustness tests only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*run) return cmd_run(config, out, seed);
    if (*verify) return cmd_verify(report);
    if (*demo) return cmd_demo(preset_name, out, seed);
    ExperimentConfig cfg = config.empty() ? (preset_name.empty() ? ExperimentConfig{} : preset(preset_name))
                                          : load_config(config);
    if (cfg.report == "report.json") cfg.report = *ent ? "entropy.json" : "atlas.json";
    if (*ent) return cmd_entropy(cfg, out, seed);
    if (*atl) return cmd_atlas(cfg, out);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.kind());
  }
  return kExitInput;
}
