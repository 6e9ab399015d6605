#include "rfmia/classifiers.hpp"

#include "rfmia/errors.hpp"
#include "rfmia/nn/train.hpp"

namespace rfmia {

FeatureView make_view(const std::vector<PairedObservation>& obs, Observer observer) {
  std::vector<int> labels;
  labels.reserve(obs.size());
  for (const auto& o : obs) labels.push_back(o.class_label);
  return make_view(obs, observer, std::move(labels));
}

FeatureView make_view(const std::vector<PairedObservation>& obs, Observer observer, std::vector<int> labels) {
  if (labels.size() != obs.size()) throw InvalidInput("make_view: label count mismatch");
  FeatureView v;
  v.observer = observer;
  v.labels = std::move(labels);
  if (obs.empty()) return v;
  const auto dim = obs.front().features(observer).flat().size();
  v.features.resize(dim, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    v.features.col(static_cast<Eigen::Index>(j)) = obs[j].features(observer).flat();
    v.ids.push_back(obs[j].id);
  }
  return v;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < rates.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(rates.cols()));
    for (Eigen::Index j = 0; j < rates.cols(); ++j) r[static_cast<std::size_t>(j)] = rates(i, j);
    rows.push_back(r);
  }
  return {{"rates", rows},
          {"row_counts", std::vector<int>(row_counts.data(), row_counts.data() + row_counts.size())},
          {"accuracy", accuracy}};
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
  if (truth.empty()) throw InvalidInput("confusion: empty sample set");
  if (truth.size() != predicted.size()) throw InvalidInput("confusion: length mismatch");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes)
      throw InvalidInput("confusion: label out of range");
    counts(truth[i], predicted[i]) += 1;
  }
  ConfusionMatrix cm;
  cm.row_counts = counts.rowwise().sum().cast<int>();
  cm.rates = counts;
  for (Eigen::Index i = 0; i < counts.rows(); ++i)
    if (cm.row_counts(i) > 0) cm.rates.row(i) /= static_cast<double>(cm.row_counts(i));
  cm.accuracy = counts.trace() / static_cast<double>(truth.size());
  return cm;
}

std::vector<int> predict_labels(const nn::MlpModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd logits = model.logits(features);
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index j = 0; j < logits.cols(); ++j) out[static_cast<std::size_t>(j)] = static_cast<int>(nn::argmax(logits.col(j)));
  return out;
}

nn::LayerSpec classifier_spec(int input_dim, int num_classes) { return {input_dim, {100, 100, 100}, num_classes}; }

nn::TrainConfig default_classifier_train_config(std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.seed = seed;
  return cfg;
}

namespace {

nn::MlpModel fit_classifier(const FeatureView& train, int num_classes, const nn::TrainConfig& cfg) {
  if (train.size() == 0) throw InvalidInput("cannot train a classifier on an empty dataset");
  for (int y : train.labels)
    if (y < 0 || y >= num_classes) throw InvalidInput("training label outside the classifier's label space");
  auto model = nn::MlpModel::init(classifier_spec(static_cast<int>(train.features.rows()), num_classes),
                                  derive_seed(cfg.seed, "init"));
  model.fit_input_normalization(train.features);
  nn::train(model, train.features, train.labels, cfg);
  return model;
}

}  // namespace

TargetClassifier train_target(const FeatureView& train, int num_classes, const nn::TrainConfig& cfg) {
  if (train.observer != Observer::Provider) throw InvalidInput("the target classifier trains on provider-side features");
  return {fit_classifier(train, num_classes, cfg), train.ids};
}

const std::vector<PairedObservation>& target_training_split(const Dataset& ds) {
  return ds.split(ds.config.kind == ScenarioKind::Setting1 ? splits::kTargetTrain : splits::kA).observations;
}

const std::vector<PairedObservation>& target_test_split(const Dataset& ds) {
  return ds.split(ds.config.kind == ScenarioKind::Setting1 ? splits::kTargetTest : splits::kB).observations;
}

SurrogateClassifier train_surrogate(const FeatureView& overheard, int num_classes, const nn::TrainConfig& cfg) {
  if (overheard.observer != Observer::Adversary)
    throw InvalidInput("the surrogate classifier only sees adversary-side features");
  return {fit_classifier(overheard, num_classes, cfg), "overheard provider decisions"};
}

ConfusionMatrix evaluate(const nn::MlpModel& model, const FeatureView& samples) {
  if (samples.size() == 0) throw InvalidInput("evaluate: empty sample set");
  return confusion(samples.labels, predict_labels(model, samples.features), static_cast<int>(model.output_dim()));
}

}  // namespace rfmia
