#include "rfmia/mia.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <unordered_set>

#include "rfmia/errors.hpp"
#include "rfmia/io.hpp"
#include "rfmia/nn/train.hpp"

namespace rfmia {

std::string_view to_string(MiaMode m) { return m == MiaMode::LabelBased ? "label-based" : "score-based"; }
std::string_view to_string(Aggregate a) { return a == Aggregate::Average ? "average" : "maximum"; }

Eigen::VectorXd MiaModel::scores(const Eigen::MatrixXd& inputs) const {
  const Eigen::MatrixXd laid_out = mode == MiaMode::ScoreBased ? sorted_columns(inputs) : inputs;
  return model.predict(laid_out).row(1).transpose();
}

Eigen::VectorXd label_input(const Eigen::Ref<const Eigen::VectorXd>& features, int label, int num_classes) {
  if (label < 0 || label >= num_classes) throw InvalidInput("label_input: label out of range");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(features.size() + num_classes);
  x.head(features.size()) = features;
  x(features.size() + label) = 1;
  return x;
}

Eigen::VectorXd sorted_descending(const Eigen::Ref<const Eigen::VectorXd>& scores) {
  Eigen::VectorXd s = scores;
  std::sort(s.begin(), s.end(), std::greater<>());
  return s;
}

Eigen::MatrixXd sorted_columns(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index j = 0; j < scores.cols(); ++j) out.col(j) = sorted_descending(scores.col(j));
  return out;
}

void MembershipSets::validate() const {
  if (members.cols() == 0 || nonmembers.cols() == 0) throw InvalidInput("membership pools must be nonempty");
  if (members.rows() != nonmembers.rows()) throw InvalidInput("membership pools have different input widths");
  std::unordered_set<std::int64_t> seen(member_ids.begin(), member_ids.end());
  for (auto id : nonmember_ids)
    if (seen.contains(id)) throw InvalidInput("observation " + std::to_string(id) + " is in both pools");
}

MembershipSets label_based_sets(const std::vector<PairedObservation>& members,
                                const std::vector<PairedObservation>& nonmembers, const SurrogateClassifier& surrogate) {
  const int k = static_cast<int>(surrogate.model.output_dim());
  auto layout = [&](const std::vector<PairedObservation>& obs, Eigen::MatrixXd& out, std::vector<std::int64_t>& ids) {
    const FeatureView view = make_view(obs, Observer::Adversary);
    if (view.size() == 0) return;
    const auto labels = surrogate.predict(view.features);
    out.resize(view.features.rows() + k, view.size());
    for (Eigen::Index j = 0; j < view.size(); ++j)
      out.col(j) = label_input(view.features.col(j), labels[static_cast<std::size_t>(j)], k);
    ids = view.ids;
  };
  MembershipSets sets;
  layout(members, sets.members, sets.member_ids);
  layout(nonmembers, sets.nonmembers, sets.nonmember_ids);
  return sets;
}

MembershipSets score_based_sets(const Eigen::MatrixXd& member_scores, const Eigen::MatrixXd& nonmember_scores,
                                std::vector<std::int64_t> member_ids, std::vector<std::int64_t> nonmember_ids) {
  return {sorted_columns(member_scores), sorted_columns(nonmember_scores), std::move(member_ids),
          std::move(nonmember_ids)};
}

double empirical_gain(std::span<const double> member_scores, std::span<const double> nonmember_scores) {
  if (member_scores.empty() || nonmember_scores.empty()) throw InvalidInput("empirical_gain: empty pool");
  auto clamp = [](double m) { return std::clamp(m, kGainLogClamp, 1 - kGainLogClamp); };
  // running means stay exact on constant pools, so m = 0.5 gives ln 0.5 to the bit
  double in = 0, out = 0, n = 0;
  for (double m : member_scores) in += (std::log(clamp(m)) - in) / ++n;
  n = 0;
  for (double m : nonmember_scores) out += (std::log(1 - clamp(m)) - out) / ++n;
  return 0.5 * in + 0.5 * out;
}

double empirical_gain(const MiaModel& m, const MembershipSets& sets) {
  sets.validate();
  const Eigen::VectorXd a = m.scores(sets.members);
  const Eigen::VectorXd b = m.scores(sets.nonmembers);
  return empirical_gain(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                        std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

nn::LayerSpec mia_spec(int input_dim) { return {input_dim, {64, 64}, 2}; }

nn::TrainConfig default_mia_train_config(std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.seed = seed;
  return cfg;
}

MiaModel train_mia(const MembershipSets& sets, MiaMode mode, const nn::TrainConfig& cfg) {
  sets.validate();
  const auto n_in = sets.members.cols();
  const auto n_out = sets.nonmembers.cols();
  Eigen::MatrixXd X(sets.members.rows(), n_in + n_out);
  X << sets.members, sets.nonmembers;
  if (mode == MiaMode::ScoreBased) X = sorted_columns(X);

  std::vector<int> y(static_cast<std::size_t>(n_in + n_out), 0);
  std::fill(y.begin(), y.begin() + n_in, 1);

  MiaModel m;
  m.mode = mode;
  m.reweighted = n_in != n_out;
  std::vector<double> w;
  if (m.reweighted) {
    std::clog << "warning: unbalanced membership pools (" << n_in << " members, " << n_out
              << " non-members); reweighting the loss\n";
    const double total = static_cast<double>(n_in + n_out);
    w.assign(static_cast<std::size_t>(n_in), total / (2.0 * static_cast<double>(n_in)));
    w.resize(static_cast<std::size_t>(n_in + n_out), total / (2.0 * static_cast<double>(n_out)));
  }

  m.model = nn::MlpModel::init(mia_spec(static_cast<int>(X.rows())), derive_seed(cfg.seed, "init"));
  m.model.fit_input_normalization(X);
  nn::train(m.model, X, y, cfg, std::span<const double>(w));
  return m;
}

MiaVerdict infer(const MiaModel& m, const Eigen::Ref<const Eigen::VectorXd>& input) {
  const Eigen::VectorXd x = m.mode == MiaMode::ScoreBased ? sorted_descending(input) : Eigen::VectorXd(input);
  const double score = m.model.predict_scores(x)(1);
  return {score, score >= kMembershipThreshold};
}

ConfusionMatrix membership_confusion(std::span<const double> member_scores, std::span<const double> nonmember_scores) {
  std::vector<int> truth, pred;
  for (double s : nonmember_scores) {
    truth.push_back(0);
    pred.push_back(s >= kMembershipThreshold ? 1 : 0);
  }
  for (double s : member_scores) {
    truth.push_back(1);
    pred.push_back(s >= kMembershipThreshold ? 1 : 0);
  }
  return confusion(truth, pred, 2);
}

ConfusionMatrix evaluate_mia(const MiaModel& m, const MembershipSets& sets) {
  sets.validate();
  const Eigen::VectorXd a = m.scores(sets.members);
  const Eigen::VectorXd b = m.scores(sets.nonmembers);
  return membership_confusion(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                              std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

Eigen::VectorXd feature_ranges(const std::vector<PairedObservation>& pool) {
  if (pool.empty()) throw InvalidInput("feature_ranges: empty pool");
  const FeatureView v = make_view(pool, Observer::Adversary);
  return v.features.rowwise().maxCoeff() - v.features.rowwise().minCoeff();
}

namespace {

// Aggregated membership score of each observation's variants at one level.
std::vector<double> aggregated_scores(const MiaModel& m, const SurrogateClassifier& surrogate,
                                      const std::vector<PairedObservation>& obs, const Eigen::VectorXd& ranges,
                                      double level, Aggregate aggregate, const VariationConfig& cfg,
                                      std::string_view pool) {
  const int k = static_cast<int>(surrogate.model.output_dim());
  const FeatureView view = make_view(obs, Observer::Adversary);
  const auto labels = surrogate.predict(view.features);
  std::vector<double> out;
  out.reserve(obs.size());

  if (level == 0) {
    Eigen::MatrixXd X(view.features.rows() + k, view.size());
    for (Eigen::Index j = 0; j < view.size(); ++j)
      X.col(j) = label_input(view.features.col(j), labels[static_cast<std::size_t>(j)], k);
    const Eigen::VectorXd s = m.scores(X);
    return {s.data(), s.data() + s.size()};
  }

  const auto level_tag = static_cast<std::uint64_t>(std::llround(level * 1e6));
  Eigen::MatrixXd X(view.features.rows() + k, cfg.per_level_count);
  for (std::size_t j = 0; j < obs.size(); ++j) {
    // stream per (pool, observation, level): reproducible and order independent
    Rng rng(derive_seed(cfg.seed, std::string(pool)) ^ mix64(static_cast<std::uint64_t>(obs[j].id)), "level:" + std::to_string(level_tag));
    const auto variants = perturb_features(obs[j].adversary, level, ranges, cfg.per_level_count, rng);
    for (int v = 0; v < cfg.per_level_count; ++v)
      X.col(v) = label_input(variants[static_cast<std::size_t>(v)].flat(), labels[j], k);
    const Eigen::VectorXd s = m.scores(X);
    out.push_back(aggregate == Aggregate::Average ? s.mean() : s.maxCoeff());
  }
  return out;
}

double member_rate(const std::vector<double>& scores) {
  return static_cast<double>(std::count_if(scores.begin(), scores.end(),
                                           [](double s) { return s >= kMembershipThreshold; })) /
         static_cast<double>(scores.size());
}

}  // namespace

std::vector<VariationRow> noisy_variation_eval(const MiaModel& m, const SurrogateClassifier& surrogate,
                                               const std::vector<PairedObservation>& members,
                                               const std::vector<PairedObservation>& nonmembers,
                                               const Eigen::VectorXd& ranges, Aggregate aggregate,
                                               const VariationConfig& cfg) {
  if (m.mode != MiaMode::LabelBased) throw InvalidInput("noisy_variation_eval needs a label-based MIA");
  if (members.empty() || nonmembers.empty()) throw InvalidInput("noisy_variation_eval: empty pool");
  if (cfg.per_level_count < 1) throw InvalidInput("noisy_variation_eval: per_level_count must be >= 1");
  std::vector<VariationRow> rows;
  for (double level : cfg.levels) {
    if (level < 0) throw InvalidInput("noisy_variation_eval: negative level");
    const auto in = aggregated_scores(m, surrogate, members, ranges, level, aggregate, cfg, "members");
    const auto out = aggregated_scores(m, surrogate, nonmembers, ranges, level, aggregate, cfg, "nonmembers");
    rows.push_back({level, aggregate, 1.0 - member_rate(out), member_rate(in)});
  }
  return rows;
}

std::string variation_table_csv(std::span<const VariationRow> rows) {
  std::string out = "level,aggregate,nonmember_acc,member_acc\n";
  for (const auto& r : rows)
    out += format_double(r.level) + ',' + std::string(to_string(r.aggregate)) + ',' + format_double(r.nonmember_acc) +
           ',' + format_double(r.member_acc) + '\n';
  return out;
}

}  // namespace rfmia
