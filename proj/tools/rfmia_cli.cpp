#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rfmia/errors.hpp"
#include "rfmia/experiment.hpp"
#include "rfmia/io.hpp"

using namespace rfmia;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string experiment;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int seeds = 1;
  std::string out;
  std::string run_dir;
};

fs::path out_root(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("RFMIA_OUT"); env && *env) return env;
  return "runs";
}

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    auto j = read_json(o.config_path);
    if (!o.experiment.empty()) j["experiment"] = o.experiment;
    cfg = ExperimentConfig::from_json(j);
  } else {
    if (o.experiment.empty()) throw ConfigError("name an experiment with --experiment or --config");
    cfg.experiment = experiment_from_string(o.experiment);
  }
  if (o.seed_given) cfg.seed = o.seed;
  cfg.validate();
  cfg.output_dir = o.run_dir.empty() ? default_run_dir(out_root(o), cfg.experiment, cfg.seed) : fs::path(o.run_dir);
  return cfg;
}

int print_report(const fs::path& dir) {
  const auto report = assemble_report(dir).body;
  const auto checks = report_checks(report);
  std::cout << format_report(report, checks);
  for (const auto& c : checks)
    if (!c.pass) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RF fingerprinting membership-inference experiments"};
  app.require_subcommand(1);
  Options o;

  std::string experiments;
  for (auto k : all_experiments()) experiments += (experiments.empty() ? "" : ", ") + std::string(to_string(k));

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config_path, "JSON file with experiment, seed and overrides")->check(CLI::ExistingFile);
    sub->add_option("-e,--experiment", o.experiment, "one of: " + experiments);
    sub->add_option("--seed", o.seed, "master seed")->each([&](const std::string&) { o.seed_given = true; });
    sub->add_option("--out", o.out, "output root (default $RFMIA_OUT or ./runs)");
    sub->add_option("--run-dir", o.run_dir, "explicit run directory (default <out>/<experiment>-seed<seed>)");
  };

  struct StageCommand {
    const char* name;
    const char* help;
    std::vector<std::string_view> stages;
  };
  const StageCommand stage_commands[] = {
      {"synth", "generate the scenario dataset", {stages::kSynth}},
      {"train-target", "train the target classifier", {stages::kTarget}},
      {"train-surrogate", "train the adversary's surrogate (setting 1)", {stages::kSurrogate}},
      {"attack", "train and evaluate the adversary's MIA", {stages::kAttack}},
      {"defend", "train the shadow MIA and defend the emitted scores (setting 2)", {stages::kShadow, stages::kDefend}},
  };
  std::vector<std::pair<CLI::App*, const StageCommand*>> subs;
  for (const auto& sc : stage_commands) {
    auto* sub = app.add_subcommand(sc.name, sc.help);
    add_common(sub);
    subs.emplace_back(sub, &sc);
  }

  auto* run = app.add_subcommand("run", "run every stage of an experiment");
  add_common(run);
  run->add_option("--seeds", o.seeds, "run seeds seed .. seed+N-1 and summarize")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "summarize a completed run; exit 1 if a threshold is missed");
  report->add_option("dir", o.run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return print_report(o.run_dir);

    const auto cfg = resolve(o);
    if (run->parsed()) {
      if (o.seeds > 1) {
        if (!o.run_dir.empty()) throw ConfigError("--run-dir cannot be combined with --seeds");
        const auto summary = run_seeds(cfg, o.seeds, out_root(o));
        std::cout << summary.dump(2) << "\n";
        return 0;
      }
      const auto r = run_experiment(cfg);
      std::cout << format_report(r.body, report_checks(r.body));
      for (const auto& [stage, seconds] : r.timing) std::cout << "  " << stage << ": " << format_double(seconds) << " s\n";
      std::cout << "artifacts in " << cfg.output_dir.string() << "\n";
      return 0;
    }
    for (const auto& [sub, sc] : subs) {
      if (!sub->parsed()) continue;
      for (auto stage : sc->stages) run_stage(cfg, stage);
      std::cout << sc->name << " done; artifacts in " << cfg.output_dir.string() << "\n";
    }
    return 0;
  } catch (const StageError& e) {
    std::cerr << "stage failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
