#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rfmia/nn/mlp.hpp"
#include "rfmia/scenario.hpp"

namespace rfmia {

// Labelled feature matrix taken from one side of a set of paired
// observations. One column per observation.
struct FeatureView {
  Observer observer = Observer::Provider;
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::int64_t> ids;

  Eigen::Index size() const { return features.cols(); }
};

// Labels default to each observation's class_label.
FeatureView make_view(const std::vector<PairedObservation>& obs, Observer observer);
FeatureView make_view(const std::vector<PairedObservation>& obs, Observer observer, std::vector<int> labels);

// Row-normalized confusion matrix: rows are true classes, columns predictions.
struct ConfusionMatrix {
  Eigen::MatrixXd rates;
  Eigen::VectorXi row_counts;
  double accuracy = 0;  // fraction correct, i.e. count-weighted trace

  nlohmann::json to_json() const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes);

// Hard decisions, one per column.
std::vector<int> predict_labels(const nn::MlpModel& model, const Eigen::MatrixXd& features);

// Service provider's classifier C over provider-side features.
struct TargetClassifier {
  nn::MlpModel model;
  std::vector<std::int64_t> training_ids;

  int num_classes() const { return static_cast<int>(model.output_dim()); }
  std::vector<int> predict(const Eigen::MatrixXd& features) const { return predict_labels(model, features); }
  Eigen::MatrixXd scores(const Eigen::MatrixXd& features) const { return model.predict(features); }
};

// Adversary's replica of C, trained only on what the adversary receives.
struct SurrogateClassifier {
  nn::MlpModel model;
  std::string label_source = "overheard provider decisions";

  std::vector<int> predict(const Eigen::MatrixXd& features) const { return predict_labels(model, features); }
};

// 3 x 100 ReLU hidden layers.
nn::LayerSpec classifier_spec(int input_dim, int num_classes);

nn::TrainConfig default_classifier_train_config(std::uint64_t seed);

TargetClassifier train_target(const FeatureView& train, int num_classes, const nn::TrainConfig& cfg);

// Training set of the target classifier for a scenario (8000 samples in
// setting 1, set A in setting 2) and its held-out test set.
const std::vector<PairedObservation>& target_training_split(const Dataset& ds);
const std::vector<PairedObservation>& target_test_split(const Dataset& ds);

// Rejects provider-side views.
SurrogateClassifier train_surrogate(const FeatureView& overheard, int num_classes, const nn::TrainConfig& cfg);

ConfusionMatrix evaluate(const nn::MlpModel& model, const FeatureView& samples);

}  // namespace rfmia
