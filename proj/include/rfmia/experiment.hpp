#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rfmia/defense.hpp"
#include "rfmia/mia.hpp"
#include "rfmia/scenario.hpp"

namespace rfmia {

enum class ExperimentKind { Setting1Strong, Setting1Weak, Setting1Noisy, Setting2Mia, Setting2Defense };
std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_from_string(std::string_view s);
const std::vector<ExperimentKind>& all_experiments();

// What to run. `overrides` may hold the objects "scenario", "target_training",
// "surrogate_training", "mia_training", "shadow_training", "variation" and
// "solver"; each replaces individual keys of the experiment's defaults.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Setting1Strong;
  std::uint64_t seed = 1;
  nlohmann::json overrides = nlohmann::json::object();
  std::filesystem::path output_dir;  // run directory; not part of the digest

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string digest() const;

  bool setting1() const;
  // Resolved settings; every stochastic stage gets its own derived seed.
  ScenarioConfig scenario() const;
  nn::TrainConfig target_training() const;
  nn::TrainConfig surrogate_training() const;
  nn::TrainConfig mia_training() const;
  nn::TrainConfig shadow_training() const;
  VariationConfig variation() const;
  SolverConfig solver() const;
  std::uint64_t defense_seed() const;
};

// Stage names, in pipeline order.
namespace stages {
inline constexpr std::string_view kSynth = "synth";
inline constexpr std::string_view kTarget = "train-target";
inline constexpr std::string_view kSurrogate = "train-surrogate";
inline constexpr std::string_view kAttack = "attack";
inline constexpr std::string_view kShadow = "shadow";
inline constexpr std::string_view kDefend = "defend";
}  // namespace stages

// Stages that make up an experiment.
std::vector<std::string_view> pipeline(ExperimentKind k);

// Runs one stage against cfg.output_dir, reading what earlier stages left
// there. Failures are rethrown as StageError; earlier artifacts stay.
void run_stage(const ExperimentConfig& cfg, std::string_view stage);

struct RunReport {
  nlohmann::json body;                  // deterministic part, written to report.json
  std::map<std::string, double> timing;  // seconds per stage, written to timing.json
};

// Every stage of the experiment, then the assembled report.
RunReport run_experiment(const ExperimentConfig& cfg);

// Rebuilds report.json from the per-stage sections on disk.
RunReport assemble_report(const std::filesystem::path& run_dir);

// Headline numbers of a report (NaN-free; absent metrics are omitted).
std::map<std::string, double> key_metrics(const nlohmann::json& report);

struct Check {
  std::string name;
  double value = 0;
  std::string requirement;
  bool pass = false;
};

// Single-run thresholds for the experiment named in the report.
std::vector<Check> report_checks(const nlohmann::json& report);

// Human-readable summary of a run directory.
std::string format_report(const nlohmann::json& report, const std::vector<Check>& checks);

// --seeds N: runs seeds seed .. seed + N - 1 into <out>/<experiment>-seed<s>
// and writes <out>/<experiment>-summary.json with mean and sample standard
// deviation of every headline metric.
nlohmann::json run_seeds(ExperimentConfig cfg, int count, const std::filesystem::path& out_root);

std::filesystem::path default_run_dir(const std::filesystem::path& out_root, ExperimentKind k, std::uint64_t seed);

}  // namespace rfmia
