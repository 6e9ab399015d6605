#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "rfmia/errors.hpp"
#include "rfmia/experiment.hpp"
#include "rfmia/io.hpp"

using namespace rfmia;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rfmia_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small(ExperimentKind kind, std::uint64_t seed, const fs::path& dir) {
  ExperimentConfig c;
  c.experiment = kind;
  c.seed = seed;
  c.output_dir = dir;
  const bool s1 = kind != ExperimentKind::Setting2Mia && kind != ExperimentKind::Setting2Defense;
  if (s1)
    c.overrides["scenario"] = {{"target_train", 800},  {"target_test", 200},  {"surrogate_train", 200},
                               {"surrogate_test", 200}, {"mia_members", 100}, {"mia_nonmembers", 100}};
  else
    c.overrides["scenario"] = {{"set_size", 400}, {"subset_size", 200}};
  c.overrides["target_training"] = {{"epochs", 5}};
  c.overrides["surrogate_training"] = {{"epochs", 5}};
  c.overrides["mia_training"] = {{"epochs", 5}};
  c.overrides["shadow_training"] = {{"epochs", 5}};
  c.overrides["variation"] = {{"levels", {0.0, 0.1, 0.5}}, {"per_level_count", 3}};
  c.overrides["solver"] = {{"max_iters", 50}};
  return c;
}

bool rows_normalized(const json& j) {
  if (j.is_object()) {
    if (j.contains("rates") && j.contains("row_counts")) {
      for (std::size_t i = 0; i < j["rates"].size(); ++i) {
        if (j["row_counts"][i].get<int>() == 0) continue;
        double sum = 0;
        for (const auto& v : j["rates"][i]) sum += v.get<double>();
        if (std::abs(sum - 1) > 1e-9) return false;
      }
    }
    for (const auto& [k, v] : j.items())
      if (!rows_normalized(v)) return false;
  } else if (j.is_array()) {
    for (const auto& v : j)
      if (!rows_normalized(v)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("experiment names and config validation") {
  for (auto k : all_experiments()) CHECK(experiment_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(experiment_from_string("setting3"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"seed", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "setting1-strong"}, {"sede", 1}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "setting1-strong"}, {"overrides", {{"optimizer", json::object()}}}}),
                  ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json({{"experiment", "setting1-strong"}, {"overrides", {{"mia_training", {{"epoch", 3}}}}}}),
      ConfigError);
  CHECK_THROWS_AS(
      ExperimentConfig::from_json({{"experiment", "setting2-mia"}, {"overrides", {{"solver", {{"lambda", -1}}}}}}),
      ConfigError);

  const auto c = ExperimentConfig::from_json({{"experiment", "setting2-defense"}, {"seed", 5}});
  CHECK(ExperimentConfig::from_json(c.to_json()).digest() == c.digest());
  auto d = c;
  d.seed = 6;
  CHECK(d.digest() != c.digest());
  CHECK(c.target_training().weight_decay == 0.3);
  CHECK(c.scenario().name == "setting2");
  CHECK(ExperimentConfig::from_json({{"experiment", "setting1-weak"}}).scenario().name == "setting1-weak");
}

TEST_CASE("stage seeds are independent of each other") {
  ExperimentConfig a;
  a.experiment = ExperimentKind::Setting1Noisy;
  a.seed = 3;
  ExperimentConfig b = a;
  b.overrides["mia_training"] = {{"epochs", 3}};
  CHECK(a.scenario().seed == b.scenario().seed);
  CHECK(a.target_training().seed == b.target_training().seed);
  CHECK(a.surrogate_training().seed == b.surrogate_training().seed);
  CHECK(a.variation().seed == b.variation().seed);
  const std::set<std::uint64_t> seeds{a.scenario().seed,      a.target_training().seed, a.surrogate_training().seed,
                                      a.mia_training().seed,  a.shadow_training().seed, a.variation().seed,
                                      a.defense_seed()};
  CHECK(seeds.size() == 7);
}

TEST_CASE("report on an empty directory is a missing artifact") {
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  CHECK_THROWS_AS(assemble_report(dir), MissingArtifact);
  fs::remove_all(dir);
}

TEST_CASE("a failing stage is labelled and earlier artifacts stay") {
  const auto dir = scratch("partial");
  const auto cfg = small(ExperimentKind::Setting1Strong, 1, dir);
  run_stage(cfg, stages::kSynth);
  try {
    run_stage(cfg, stages::kSurrogate);  // needs the target model
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "train-surrogate");
  }
  CHECK(fs::exists(dir / "dataset" / "scenario.json"));
  CHECK(fs::exists(dir / "reports" / "synth.json"));
  CHECK_THROWS_AS(run_stage(cfg, stages::kShadow), StageError);
  fs::remove_all(dir);
}

TEST_CASE("setting 1 noisy run writes every artifact and is deterministic") {
  const auto d1 = scratch("noisy_a");
  const auto d2 = scratch("noisy_b");
  const auto r = run_experiment(small(ExperimentKind::Setting1Noisy, 4, d1));
  run_experiment(small(ExperimentKind::Setting1Noisy, 4, d2));
  CHECK(read_file(d1 / "report.json") == read_file(d2 / "report.json"));
  CHECK(read_file(d1 / "tables" / "variation_maximum.csv") == read_file(d2 / "tables" / "variation_maximum.csv"));
  for (auto p : {"config.json", "models/target.json", "models/surrogate.json", "models/mia.json", "timing.json",
                 "tables/variation_average.csv", "dataset/target_train.csv"})
    CHECK(fs::exists(d1 / p));
  CHECK(rows_normalized(r.body));
  CHECK(r.timing.size() == 4);
  CHECK(read_file(d1 / "report.json").find("seconds") == std::string::npos);

  // the report is rebuilt from disk alone
  const auto before = read_file(d1 / "report.json");
  assemble_report(d1);
  CHECK(read_file(d1 / "report.json") == before);

  const auto checks = report_checks(r.body);
  CHECK(checks.size() == 7);
  const auto text = format_report(r.body, checks);
  CHECK(text.find("noisy variation, maximum") != std::string::npos);

  const auto m = key_metrics(r.body);
  CHECK(m.contains("mia_accuracy"));
  CHECK(m.contains("mia_heldout_accuracy"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("setting 2 defense run") {
  const auto dir = scratch("defense");
  const auto r = run_experiment(small(ExperimentKind::Setting2Defense, 2, dir));
  for (auto p : {"models/adversary_mia.json", "models/shadow.json", "defense.json"}) CHECK(fs::exists(dir / p));
  const auto m = key_metrics(r.body);
  CHECK(m.at("argmax_violations") == 0);
  CHECK(m.at("decision_agreement") == 1.0);
  CHECK(m.contains("defended_mia_accuracy"));
  CHECK(m.contains("defended_shadow_accuracy"));
  CHECK(rows_normalized(r.body));
  CHECK(read_json(dir / "defense.json")["samples"].size() == 800);

  // a threshold miss is reported, not thrown
  json tampered = r.body;
  tampered["stages"]["defend"]["adversary_after"]["accuracy"] = 0.61;
  bool failed = false;
  for (const auto& c : report_checks(tampered))
    if (c.name == "defended_mia_accuracy") failed = !c.pass;
  CHECK(failed);
  fs::remove_all(dir);
}

TEST_CASE("multi-seed summary") {
  const auto root = scratch("seeds");
  auto cfg = small(ExperimentKind::Setting2Mia, 10, {});
  const auto summary = run_seeds(cfg, 2, root);
  CHECK(fs::exists(root / "setting2-mia-seed10" / "report.json"));
  CHECK(fs::exists(root / "setting2-mia-seed11" / "report.json"));
  CHECK(fs::exists(root / "setting2-mia-summary.json"));
  const auto& acc = summary["metrics"]["mia_accuracy"];
  const double a = acc["values"][0], b = acc["values"][1];
  CHECK(acc["mean"].get<double>() == doctest::Approx((a + b) / 2));
  CHECK(acc["sd"].get<double>() == doctest::Approx(std::abs(a - b) / std::sqrt(2.0)));
  fs::remove_all(root);
}
