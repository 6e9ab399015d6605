#include "rfmia/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "rfmia/classifiers.hpp"
#include "rfmia/errors.hpp"
#include "rfmia/io.hpp"
#include "rfmia/nn/serialize.hpp"

namespace rfmia {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kNames[] = {
    {ExperimentKind::Setting1Strong, "setting1-strong"},
    {ExperimentKind::Setting1Weak, "setting1-weak"},
    {ExperimentKind::Setting1Noisy, "setting1-noisy"},
    {ExperimentKind::Setting2Mia, "setting2-mia"},
    {ExperimentKind::Setting2Defense, "setting2-defense"},
};

const char* const kOverrideKeys[] = {"scenario",         "target_training", "surrogate_training", "mia_training",
                                     "shadow_training", "variation",       "solver"};

nn::TrainConfig apply_training(nn::TrainConfig c, const json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") c.epochs = value.get<int>();
    else if (key == "batch_size") c.batch_size = value.get<int>();
    else if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "adam_beta1") c.adam_beta1 = value.get<double>();
    else if (key == "adam_beta2") c.adam_beta2 = value.get<double>();
    else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ConfigError("unknown training key '" + key + "'");
  }
  c.validate();
  return c;
}

json training_json(const nn::TrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2}, {"adam_epsilon", c.adam_epsilon},
          {"weight_decay", c.weight_decay}, {"seed", c.seed}};
}

const json& section(const json& overrides, const char* key) {
  static const json empty = json::object();
  return overrides.contains(key) ? overrides.at(key) : empty;
}

// ---- artifacts -------------------------------------------------------------

fs::path dataset_dir(const fs::path& run) { return run / "dataset"; }
fs::path model_path(const fs::path& run, std::string_view name) { return run / "models" / (std::string(name) + ".json"); }
fs::path section_path(const fs::path& run, std::string_view stage) { return run / "reports" / (std::string(stage) + ".json"); }
fs::path timing_path(const fs::path& run, std::string_view stage) { return run / "timing" / (std::string(stage) + ".json"); }

void require(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact("missing artifact " + p.string());
}

Dataset load_run_dataset(const fs::path& run) {
  require(dataset_dir(run) / "scenario.json");
  return load_dataset(dataset_dir(run));
}

nn::MlpModel load_run_model(const fs::path& run, std::string_view name) {
  require(model_path(run, name));
  return nn::load_model(model_path(run, name));
}

void save_mia(const MiaModel& m, const fs::path& path) {
  json j = {{"mode", std::string(to_string(m.mode))}, {"reweighted", m.reweighted}, {"model", nn::to_json(m.model)}};
  write_file_atomic(path, j.dump());
}

MiaModel load_mia(const fs::path& path) {
  require(path);
  const json j = read_json(path);
  MiaModel m;
  const auto mode = j.at("mode").get<std::string>();
  if (mode == to_string(MiaMode::LabelBased)) m.mode = MiaMode::LabelBased;
  else if (mode == to_string(MiaMode::ScoreBased)) m.mode = MiaMode::ScoreBased;
  else throw InvalidInput("unknown MIA mode '" + mode + "'");
  m.reweighted = j.at("reweighted").get<bool>();
  m.model = nn::model_from_json(j.at("model"));
  return m;
}

Eigen::MatrixXd provider_scores(const TargetClassifier& c, const std::vector<PairedObservation>& obs) {
  return c.scores(make_view(obs, Observer::Provider).features);
}

std::vector<PairedObservation> concat(std::vector<PairedObservation> a, const std::vector<PairedObservation>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// Columns of `m` (one per observation of `all`) whose ids are in `keep`.
Eigen::MatrixXd columns_for(const Eigen::MatrixXd& m, const std::vector<PairedObservation>& all,
                            const std::vector<PairedObservation>& keep) {
  std::unordered_map<std::int64_t, Eigen::Index> col;
  for (std::size_t i = 0; i < all.size(); ++i) col[all[i].id] = static_cast<Eigen::Index>(i);
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(col.at(keep[i].id));
  return out;
}

std::vector<std::int64_t> ids_of(const std::vector<PairedObservation>& obs) {
  std::vector<std::int64_t> ids;
  for (const auto& o : obs) ids.push_back(o.id);
  return ids;
}

json mia_section(const MiaModel& m, const MembershipSets& sets) {
  const auto cm = evaluate_mia(m, sets);
  return {{"accuracy", cm.accuracy}, {"confusion", cm.to_json()}, {"empirical_gain", empirical_gain(m, sets)}};
}

json rows_json(const std::vector<VariationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"level", r.level}, {"nonmember_acc", r.nonmember_acc}, {"member_acc", r.member_acc}});
  return out;
}

// ---- stages ----------------------------------------------------------------

json stage_synth(const ExperimentConfig& cfg) {
  const auto sc = cfg.scenario();
  const Dataset ds = synth_scenario(sc);
  save_dataset(ds, dataset_dir(cfg.output_dir));
  json sizes = json::object();
  for (const auto& s : ds.splits) sizes[s.name] = s.observations.size();
  return {{"scenario", sc.to_json()}, {"split_sizes", sizes}};
}

json stage_target(const ExperimentConfig& cfg) {
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const auto tc = cfg.target_training();
  const TargetClassifier c =
      train_target(make_view(target_training_split(ds), Observer::Provider), ds.config.num_classes(), tc);
  nn::save_model(c.model, model_path(cfg.output_dir, "target"));
  const auto test = evaluate(c.model, make_view(target_test_split(ds), Observer::Provider));
  const auto train = evaluate(c.model, make_view(target_training_split(ds), Observer::Provider));
  return {{"accuracy", test.accuracy},
          {"train_accuracy", train.accuracy},
          {"confusion", test.to_json()},
          {"training", training_json(tc)}};
}

json stage_surrogate(const ExperimentConfig& cfg) {
  if (!cfg.setting1()) throw ConfigError("the surrogate classifier belongs to setting 1");
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const TargetClassifier c{load_run_model(cfg.output_dir, "target"), {}};
  const auto& overheard = ds.split(splits::kSurrogateTrain).observations;
  const auto decisions = c.predict(make_view(overheard, Observer::Provider).features);
  const auto tc = cfg.surrogate_training();
  const SurrogateClassifier s = train_surrogate(make_view(overheard, Observer::Adversary, decisions), 2, tc);
  nn::save_model(s.model, model_path(cfg.output_dir, "surrogate"));

  const auto& test = ds.split(splits::kSurrogateTest).observations;
  const auto cm = evaluate(s.model, make_view(test, Observer::Adversary));
  const auto from_c = c.predict(make_view(test, Observer::Provider).features);
  const auto from_s = s.predict(make_view(test, Observer::Adversary).features);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < from_c.size(); ++i) agree += from_c[i] == from_s[i];
  return {{"accuracy", cm.accuracy},
          {"confusion", cm.to_json()},
          {"agreement_with_target", static_cast<double>(agree) / static_cast<double>(from_c.size())},
          {"label_source", s.label_source},
          {"training", training_json(tc)}};
}

json attack_setting1(const ExperimentConfig& cfg) {
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const SurrogateClassifier s{load_run_model(cfg.output_dir, "surrogate"), "overheard provider decisions"};
  const auto& members = ds.split(splits::kMiaMemberTrain).observations;
  const auto& nonmembers = ds.split(splits::kMiaNonmemberTrain).observations;
  const auto sets = label_based_sets(members, nonmembers, s);
  const auto tc = cfg.mia_training();
  const MiaModel m = train_mia(sets, MiaMode::LabelBased, tc);
  save_mia(m, model_path(cfg.output_dir, "mia"));

  json out = mia_section(m, sets);
  out["protocol"] = "evaluated on the 1000 + 1000 pool it was trained on";
  out["heldout"] = mia_section(m, label_based_sets(ds.split(splits::kMiaMemberTest).observations,
                                                    ds.split(splits::kMiaNonmemberTest).observations, s));
  out["training"] = training_json(tc);

  if (cfg.experiment == ExperimentKind::Setting1Noisy) {
    const auto vc = cfg.variation();
    const Eigen::VectorXd ranges = feature_ranges(concat(members, nonmembers));
    json tables = json::object();
    for (Aggregate a : {Aggregate::Average, Aggregate::Maximum}) {
      const auto rows = noisy_variation_eval(m, s, members, nonmembers, ranges, a, vc);
      write_file_atomic(cfg.output_dir / "tables" / ("variation_" + std::string(to_string(a)) + ".csv"),
                        variation_table_csv(rows));
      tables[std::string(to_string(a))] = rows_json(rows);
    }
    out["variation"] = {{"per_level_count", vc.per_level_count}, {"tables", tables}};
  }
  return out;
}

json attack_setting2(const ExperimentConfig& cfg) {
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const TargetClassifier c{load_run_model(cfg.output_dir, "target"), {}};
  const auto& a = ds.split(splits::kA).observations;
  const auto& d = ds.split(splits::kDnm).observations;
  const auto& a1 = ds.split(splits::kA1).observations;
  const auto& d1 = ds.split(splits::kD1).observations;
  const auto a_rest = difference(a, a1);
  const auto d_rest = difference(d, d1);
  const auto tc = cfg.mia_training();
  const MiaModel m = train_mia(
      score_based_sets(provider_scores(c, a1), provider_scores(c, d1), ids_of(a1), ids_of(d1)), MiaMode::ScoreBased, tc);
  save_mia(m, model_path(cfg.output_dir, "adversary_mia"));
  json out = mia_section(
      m, score_based_sets(provider_scores(c, a_rest), provider_scores(c, d_rest), ids_of(a_rest), ids_of(d_rest)));
  out["protocol"] = "trained on A1 + D1, tested on (A - A1) + (D - D1)";
  out["training"] = training_json(tc);
  return out;
}

// The shadow is trained on sorted scores of A (members) and C_nm.
ShadowMia load_shadow(const fs::path& run, const Dataset& ds, const TargetClassifier& c) {
  ShadowMia shadow{load_mia(model_path(run, "shadow")), {}};
  const auto sets = score_based_sets(provider_scores(c, ds.split(splits::kA).observations),
                                     provider_scores(c, ds.split(splits::kCnm).observations));
  shadow.references.resize(sets.members.rows(), sets.members.cols() + sets.nonmembers.cols());
  shadow.references << sets.members, sets.nonmembers;
  return shadow;
}

json stage_shadow(const ExperimentConfig& cfg) {
  if (cfg.setting1()) throw ConfigError("the shadow MIA belongs to setting 2");
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const TargetClassifier c{load_run_model(cfg.output_dir, "target"), {}};
  const auto& a = ds.split(splits::kA).observations;
  const auto& d = ds.split(splits::kDnm).observations;
  const auto tc = cfg.shadow_training();
  const ShadowMia shadow =
      train_shadow(provider_scores(c, a), provider_scores(c, ds.split(splits::kCnm).observations), tc);
  save_mia(shadow.mia, model_path(cfg.output_dir, "shadow"));
  json out = mia_section(shadow.mia, score_based_sets(provider_scores(c, a), provider_scores(c, d), ids_of(a), ids_of(d)));
  out["protocol"] = "trained on A + C_nm, tested on A + D_nm";
  out["training"] = training_json(tc);
  return out;
}

json stage_defend(const ExperimentConfig& cfg) {
  if (cfg.setting1()) throw ConfigError("the defense experiment belongs to setting 2");
  const Dataset ds = load_run_dataset(cfg.output_dir);
  const TargetClassifier c{load_run_model(cfg.output_dir, "target"), {}};
  const ShadowMia shadow = load_shadow(cfg.output_dir, ds, c);
  const MiaModel adversary = load_mia(model_path(cfg.output_dir, "adversary_mia"));
  const auto& a = ds.split(splits::kA).observations;
  const auto& d = ds.split(splits::kDnm).observations;
  const auto all = concat(a, d);
  const auto solver = cfg.solver();

  const DefendedBatch batch =
      defend_pipeline(c, make_view(all, Observer::Provider).features, shadow, solver, cfg.defense_seed());
  json detail = batch.to_json();
  detail["solver"] = solver.to_json();
  write_file_atomic(cfg.output_dir / "defense.json", detail.dump());

  std::size_t same = 0;
  for (Eigen::Index j = 0; j < batch.original_scores.cols(); ++j)
    same += nn::argmax(batch.original_scores.col(j)) == nn::argmax(batch.defended_scores.col(j));

  const auto a_rest = difference(a, ds.split(splits::kA1).observations);
  const auto d_rest = difference(d, ds.split(splits::kD1).observations);
  auto sets_for = [&](const Eigen::MatrixXd& scores, const std::vector<PairedObservation>& in,
                      const std::vector<PairedObservation>& out) {
    return score_based_sets(columns_for(scores, all, in), columns_for(scores, all, out), ids_of(in), ids_of(out));
  };
  return {{"count", batch.results.size()},
          {"convergence_rate", batch.convergence_rate()},
          {"argmax_violations", batch.violations},
          {"decision_agreement", static_cast<double>(same) / static_cast<double>(batch.results.size())},
          {"shadow_before", mia_section(shadow.mia, sets_for(batch.original_scores, a, d))},
          {"shadow_after", mia_section(shadow.mia, sets_for(batch.defended_scores, a, d))},
          {"adversary_before", mia_section(adversary, sets_for(batch.original_scores, a_rest, d_rest))},
          {"adversary_after", mia_section(adversary, sets_for(batch.defended_scores, a_rest, d_rest))},
          {"solver", solver.to_json()}};
}

json dispatch(const ExperimentConfig& cfg, std::string_view stage) {
  if (stage == stages::kSynth) return stage_synth(cfg);
  if (stage == stages::kTarget) return stage_target(cfg);
  if (stage == stages::kSurrogate) return stage_surrogate(cfg);
  if (stage == stages::kAttack) return cfg.setting1() ? attack_setting1(cfg) : attack_setting2(cfg);
  if (stage == stages::kShadow) return stage_shadow(cfg);
  if (stage == stages::kDefend) return stage_defend(cfg);
  throw ConfigError("unknown stage '" + std::string(stage) + "'");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const json* find(const json& j, std::initializer_list<const char*> path) {
  const json* cur = &j;
  for (const char* key : path) {
    if (!cur->is_object() || !cur->contains(key)) return nullptr;
    cur = &cur->at(key);
  }
  return cur;
}

}  // namespace

// ---- ExperimentConfig ------------------------------------------------------

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "?";
}

ExperimentKind experiment_from_string(std::string_view s) {
  for (const auto& [kind, name] : kNames)
    if (name == s) return kind;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

const std::vector<ExperimentKind>& all_experiments() {
  static const std::vector<ExperimentKind> all{ExperimentKind::Setting1Strong, ExperimentKind::Setting1Weak,
                                               ExperimentKind::Setting1Noisy, ExperimentKind::Setting2Mia,
                                               ExperimentKind::Setting2Defense};
  return all;
}

void ExperimentConfig::validate() const {
  if (!overrides.is_object()) throw ConfigError("overrides must be a JSON object");
  for (const auto& [key, value] : overrides.items()) {
    if (std::find(std::begin(kOverrideKeys), std::end(kOverrideKeys), key) == std::end(kOverrideKeys))
      throw ConfigError("unknown override section '" + key + "'");
    if (!value.is_object()) throw ConfigError("override section '" + key + "' must be an object");
  }
  // resolving every section surfaces bad keys before any stage runs
  scenario().validate();
  target_training();
  surrogate_training();
  mia_training();
  shadow_training();
  variation();
  solver();
}

json ExperimentConfig::to_json() const {
  return {{"experiment", std::string(to_string(experiment))}, {"seed", seed}, {"overrides", overrides}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "experiment") c.experiment = experiment_from_string(value.get<std::string>());
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "overrides") c.overrides = value;
    else if (key == "output_dir") c.output_dir = value.get<std::string>();
    else throw ConfigError("unknown experiment config key '" + key + "'");
  }
  if (!j.contains("experiment")) throw ConfigError("experiment config needs an 'experiment' name");
  c.validate();
  return c;
}

std::string ExperimentConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(derive_seed(0, to_json().dump())));
  return buf;
}

bool ExperimentConfig::setting1() const {
  return experiment == ExperimentKind::Setting1Strong || experiment == ExperimentKind::Setting1Weak ||
         experiment == ExperimentKind::Setting1Noisy;
}

ScenarioConfig ExperimentConfig::scenario() const {
  json j = section(overrides, "scenario");
  const char* preset = experiment == ExperimentKind::Setting1Weak ? "setting1-weak"
                       : setting1()                               ? "setting1-strong"
                                                                  : "setting2";
  if (!j.contains("base")) j["base"] = preset;
  if (!j.contains("seed")) j["seed"] = derive_seed(seed, "scenario");
  return ScenarioConfig::from_json(j);
}

nn::TrainConfig ExperimentConfig::target_training() const {
  nn::TrainConfig c;
  c.seed = derive_seed(seed, "target");
  if (setting1()) {
    c.epochs = 20;
  } else {
    c.epochs = 100;
    c.weight_decay = 0.3;
  }
  return apply_training(c, section(overrides, "target_training"));
}

nn::TrainConfig ExperimentConfig::surrogate_training() const {
  nn::TrainConfig c;
  c.seed = derive_seed(seed, "surrogate");
  return apply_training(c, section(overrides, "surrogate_training"));
}

nn::TrainConfig ExperimentConfig::mia_training() const {
  nn::TrainConfig c;
  c.seed = derive_seed(seed, "mia");
  c.epochs = setting1() ? 10 : 50;
  return apply_training(c, section(overrides, "mia_training"));
}

nn::TrainConfig ExperimentConfig::shadow_training() const {
  nn::TrainConfig c;
  c.seed = derive_seed(seed, "shadow");
  c.epochs = 50;
  return apply_training(c, section(overrides, "shadow_training"));
}

VariationConfig ExperimentConfig::variation() const {
  VariationConfig v;
  v.seed = derive_seed(seed, "variation");
  for (const auto& [key, value] : section(overrides, "variation").items()) {
    if (key == "levels") v.levels = value.get<std::vector<double>>();
    else if (key == "per_level_count") v.per_level_count = value.get<int>();
    else if (key == "seed") v.seed = value.get<std::uint64_t>();
    else throw ConfigError("unknown variation key '" + key + "'");
  }
  return v;
}

SolverConfig ExperimentConfig::solver() const { return SolverConfig::from_json(section(overrides, "solver")); }

std::uint64_t ExperimentConfig::defense_seed() const { return derive_seed(seed, "defense"); }

// ---- running ---------------------------------------------------------------

std::vector<std::string_view> pipeline(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Setting1Strong:
    case ExperimentKind::Setting1Weak:
    case ExperimentKind::Setting1Noisy:
      return {stages::kSynth, stages::kTarget, stages::kSurrogate, stages::kAttack};
    case ExperimentKind::Setting2Mia:
      return {stages::kSynth, stages::kTarget, stages::kAttack, stages::kShadow};
    case ExperimentKind::Setting2Defense:
      return {stages::kSynth, stages::kTarget, stages::kAttack, stages::kShadow, stages::kDefend};
  }
  return {};
}

void run_stage(const ExperimentConfig& cfg, std::string_view stage) {
  if (cfg.output_dir.empty()) throw ConfigError("no output directory");
  const auto t0 = std::chrono::steady_clock::now();
  json body;
  try {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    write_file_atomic(cfg.output_dir / "config.json", cfg.to_json().dump(2) + "\n");
    body = dispatch(cfg, stage);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file_atomic(section_path(cfg.output_dir, stage), body.dump(2) + "\n");
  write_file_atomic(timing_path(cfg.output_dir, stage), json{{"seconds", seconds}}.dump() + "\n");
  assemble_report(cfg.output_dir);
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.output_dir.empty()) throw ConfigError("no output directory");
  // stale sections from an earlier run must not leak into this report
  fs::remove_all(cfg.output_dir / "reports");
  fs::remove_all(cfg.output_dir / "timing");
  for (auto stage : pipeline(cfg.experiment)) run_stage(cfg, stage);
  return assemble_report(cfg.output_dir);
}

RunReport assemble_report(const fs::path& run_dir) {
  require(run_dir / "config.json");
  const auto cfg = ExperimentConfig::from_json(read_json(run_dir / "config.json"));
  RunReport r;
  r.body = {{"experiment", std::string(to_string(cfg.experiment))},
            {"seed", cfg.seed},
            {"config_digest", cfg.digest()},
            {"config", cfg.to_json()}};
  json sections = json::object();
  for (auto stage : {stages::kSynth, stages::kTarget, stages::kSurrogate, stages::kAttack, stages::kShadow,
                     stages::kDefend}) {
    const auto p = section_path(run_dir, stage);
    if (!fs::exists(p)) continue;
    sections[std::string(stage)] = read_json(p);
    if (fs::exists(timing_path(run_dir, stage)))
      r.timing[std::string(stage)] = read_json(timing_path(run_dir, stage)).at("seconds").get<double>();
  }
  r.body["stages"] = sections;
  write_file_atomic(run_dir / "report.json", r.body.dump(2) + "\n");
  write_file_atomic(run_dir / "timing.json", json(r.timing).dump(2) + "\n");
  return r;
}

std::map<std::string, double> key_metrics(const json& report) {
  std::map<std::string, double> out;
  auto put = [&](const char* name, std::initializer_list<const char*> path) {
    if (const json* v = find(report, path); v && v->is_number()) out[name] = v->get<double>();
  };
  put("target_accuracy", {"stages", "train-target", "accuracy"});
  put("surrogate_accuracy", {"stages", "train-surrogate", "accuracy"});
  put("surrogate_agreement", {"stages", "train-surrogate", "agreement_with_target"});
  put("mia_accuracy", {"stages", "attack", "accuracy"});
  put("mia_heldout_accuracy", {"stages", "attack", "heldout", "accuracy"});
  put("shadow_accuracy", {"stages", "shadow", "accuracy"});
  put("convergence_rate", {"stages", "defend", "convergence_rate"});
  put("decision_agreement", {"stages", "defend", "decision_agreement"});
  put("argmax_violations", {"stages", "defend", "argmax_violations"});
  put("defended_shadow_accuracy", {"stages", "defend", "shadow_after", "accuracy"});
  put("defended_mia_accuracy", {"stages", "defend", "adversary_after", "accuracy"});
  return out;
}

std::vector<Check> report_checks(const json& report) {
  const auto kind = experiment_from_string(report.at("experiment").get<std::string>());
  const auto m = key_metrics(report);
  std::vector<Check> out;
  auto metric = [&](const std::string& name) {
    auto it = m.find(name);
    if (it == m.end()) throw MissingArtifact("report lacks metric '" + name + "'");
    return it->second;
  };
  auto at_least = [&](const std::string& name, double lo) {
    const double v = metric(name);
    out.push_back({name, v, ">= " + format_double(lo), v >= lo});
  };
  auto at_most = [&](const std::string& name, double hi) {
    const double v = metric(name);
    out.push_back({name, v, "<= " + format_double(hi), v <= hi});
  };
  const bool s1 = kind == ExperimentKind::Setting1Strong || kind == ExperimentKind::Setting1Weak ||
                  kind == ExperimentKind::Setting1Noisy;
  if (s1) {
    at_least("target_accuracy", 0.95);
    at_least("surrogate_accuracy", 0.95);
    at_least("surrogate_agreement", 0.95);
    if (kind != ExperimentKind::Setting1Weak) {
      const double v = metric("mia_accuracy");
      out.push_back({"mia_accuracy", v, "in [0.78, 0.95]", v >= 0.78 && v <= 0.95});
    }
  } else {
    const double v = metric("target_accuracy");
    out.push_back({"target_accuracy", v, "in [0.85, 1]", v >= 0.85 && v <= 1.0});
    at_least("mia_accuracy", 0.90);
    at_least("shadow_accuracy", 0.90);
  }
  if (kind == ExperimentKind::Setting1Noisy) {
    const json* tables = find(report, {"stages", "attack", "variation", "tables"});
    if (!tables) throw MissingArtifact("report lacks the noisy-variation tables");
    const auto& avg = tables->at("average");
    const auto& max = tables->at("maximum");
    double worst_member = 1;
    double nm_low = 0, nm_high = 0, member0 = 0;
    bool avg_drop = true;
    for (const auto& r : max) {
      const double level = r.at("level").get<double>();
      if (level >= 0.1 - 1e-12) worst_member = std::min(worst_member, r.at("member_acc").get<double>());
      if (std::abs(level - 0.1) < 1e-12) nm_low = r.at("nonmember_acc").get<double>();
      if (std::abs(level - 0.9) < 1e-12) nm_high = r.at("nonmember_acc").get<double>();
    }
    for (const auto& r : avg)
      if (r.at("level").get<double>() == 0) member0 = r.at("member_acc").get<double>();
    for (const auto& r : avg)
      if (r.at("level").get<double>() >= 0.3 - 1e-12) avg_drop = avg_drop && r.at("member_acc").get<double>() < member0;
    out.push_back({"max_member_acc_min_over_levels", worst_member, "== 1 for levels >= 0.1", worst_member == 1.0});
    out.push_back({"max_nonmember_acc_0.9_minus_0.1", nm_high - nm_low, "< 0", nm_high < nm_low});
    out.push_back({"avg_member_acc_below_level0_from_0.3", avg_drop ? 1.0 : 0.0, "all levels >= 0.3", avg_drop});
  }
  if (kind == ExperimentKind::Setting2Defense) {
    at_most("defended_mia_accuracy", 0.60);
    at_most("defended_shadow_accuracy", 0.75);
    at_least("convergence_rate", 0.95);
    at_most("argmax_violations", 0);
  }
  return out;
}

std::string format_report(const json& report, const std::vector<Check>& checks) {
  std::ostringstream os;
  os << "experiment " << report.at("experiment").get<std::string>() << "  seed " << report.at("seed").get<std::uint64_t>()
     << "  config " << report.at("config_digest").get<std::string>() << "\n";
  auto matrix = [&](const char* title, const json& confusion) {
    os << "  " << title << "  accuracy " << format_double(confusion.at("accuracy").get<double>()) << "\n";
    const auto& rows = confusion.at("rates");
    if (rows.size() > 4) return;
    for (const auto& row : rows) {
      os << "   ";
      for (const auto& v : row) {
        char buf[16];
        std::snprintf(buf, sizeof buf, " %.4f", v.get<double>());
        os << buf;
      }
      os << "\n";
    }
  };
  const auto& st = report.at("stages");
  if (st.contains("train-target")) matrix("target classifier (held out)", st.at("train-target").at("confusion"));
  if (st.contains("train-surrogate")) {
    matrix("surrogate classifier", st.at("train-surrogate").at("confusion"));
    os << "  surrogate/target agreement " << format_double(st.at("train-surrogate").at("agreement_with_target").get<double>())
       << "\n";
  }
  if (st.contains("attack")) {
    matrix("MIA", st.at("attack").at("confusion"));
    if (st.at("attack").contains("heldout")) matrix("MIA, held-out pools", st.at("attack").at("heldout").at("confusion"));
    if (const json* t = find(st.at("attack"), {"variation", "tables"}))
      for (const auto& [agg, rows] : t->items()) {
        os << "  noisy variation, " << agg << " score\n    level  non-member  member\n";
        for (const auto& r : rows) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "    %.1f    %.4f      %.4f\n", r.at("level").get<double>(),
                        r.at("nonmember_acc").get<double>(), r.at("member_acc").get<double>());
          os << buf;
        }
      }
  }
  if (st.contains("shadow")) matrix("shadow MIA", st.at("shadow").at("confusion"));
  if (st.contains("defend")) {
    const auto& d = st.at("defend");
    matrix("shadow MIA, defended scores", d.at("shadow_after").at("confusion"));
    matrix("adversary MIA, defended scores", d.at("adversary_after").at("confusion"));
    os << "  convergence " << format_double(d.at("convergence_rate").get<double>()) << "  argmax violations "
       << d.at("argmax_violations").get<int>() << "\n";
    os << "  accuracy deltas: shadow "
       << format_double(d.at("shadow_after").at("accuracy").get<double>() - d.at("shadow_before").at("accuracy").get<double>())
       << ", adversary "
       << format_double(d.at("adversary_after").at("accuracy").get<double>() -
                        d.at("adversary_before").at("accuracy").get<double>())
       << "\n";
  }
  os << "checks\n";
  for (const auto& c : checks)
    os << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << " = " << format_double(c.value) << " (" << c.requirement
       << ")\n";
  return os.str();
}

fs::path default_run_dir(const fs::path& out_root, ExperimentKind k, std::uint64_t seed) {
  return out_root / (std::string(to_string(k)) + "-seed" + std::to_string(seed));
}

json run_seeds(ExperimentConfig cfg, int count, const fs::path& out_root) {
  if (count < 1) throw ConfigError("--seeds must be >= 1");
  std::map<std::string, std::vector<double>> values;
  json runs = json::array();
  const auto first = cfg.seed;
  for (int i = 0; i < count; ++i) {
    cfg.seed = first + static_cast<std::uint64_t>(i);
    cfg.output_dir = default_run_dir(out_root, cfg.experiment, cfg.seed);
    const auto r = run_experiment(cfg);
    runs.push_back({{"seed", cfg.seed}, {"dir", cfg.output_dir.filename().string()}});
    for (const auto& [k, v] : key_metrics(r.body)) values[k].push_back(v);
  }
  json metrics = json::object();
  for (const auto& [k, v] : values) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    metrics[k] = {{"mean", mean}, {"sd", sd}, {"median", median(v)}, {"values", v}};
  }
  json summary = {{"experiment", std::string(to_string(cfg.experiment))},
                  {"first_seed", first},
                  {"seeds", count},
                  {"runs", runs},
                  {"metrics", metrics}};
  write_file_atomic(out_root / (std::string(to_string(cfg.experiment)) + "-summary.json"), summary.dump(2) + "\n");
  return summary;
}

}  // namespace rfmia
