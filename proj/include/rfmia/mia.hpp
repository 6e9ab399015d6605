#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rfmia/classifiers.hpp"
#include "rfmia/nn/mlp.hpp"

namespace rfmia {

inline constexpr double kMembershipThreshold = 0.5;
inline constexpr double kGainLogClamp = 1e-12;

enum class MiaMode {
  LabelBased,  // adversary features followed by a one-hot class
  ScoreBased,  // classifier score vector sorted descending
};
std::string_view to_string(MiaMode m);

// Binary membership scorer; the class-1 probability of the network is m(.).
struct MiaModel {
  MiaMode mode = MiaMode::ScoreBased;
  nn::MlpModel model;
  bool reweighted = false;  // pools were unbalanced during training

  // Membership score per column of laid-out inputs.
  Eigen::VectorXd scores(const Eigen::MatrixXd& inputs) const;
};

struct MiaVerdict {
  double membership_score = 0;
  bool member = false;  // score >= 0.5
};

// Input layout helpers.
Eigen::VectorXd label_input(const Eigen::Ref<const Eigen::VectorXd>& features, int label, int num_classes);
Eigen::VectorXd sorted_descending(const Eigen::Ref<const Eigen::VectorXd>& scores);
// Sorts every column.
Eigen::MatrixXd sorted_columns(const Eigen::MatrixXd& scores);

// Representative member / non-member samples, already laid out as MIA inputs
// (one column each).
struct MembershipSets {
  Eigen::MatrixXd members;
  Eigen::MatrixXd nonmembers;
  std::vector<std::int64_t> member_ids;
  std::vector<std::int64_t> nonmember_ids;

  void validate() const;  // nonempty, same width, disjoint ids
};

// Label-based inputs: adversary-side features plus the surrogate's class.
MembershipSets label_based_sets(const std::vector<PairedObservation>& members,
                                const std::vector<PairedObservation>& nonmembers, const SurrogateClassifier& surrogate);
// Score-based inputs from raw (unsorted) score columns.
MembershipSets score_based_sets(const Eigen::MatrixXd& member_scores, const Eigen::MatrixXd& nonmember_scores,
                                std::vector<std::int64_t> member_ids = {},
                                std::vector<std::int64_t> nonmember_ids = {});

// 1/2 mean log m over members + 1/2 mean log(1 - m) over non-members, with m
// clamped to [1e-12, 1 - 1e-12].
double empirical_gain(std::span<const double> member_scores, std::span<const double> nonmember_scores);
double empirical_gain(const MiaModel& m, const MembershipSets& sets);

// 2 x 64 ReLU hidden layers, 2-class softmax.
nn::LayerSpec mia_spec(int input_dim);
nn::TrainConfig default_mia_train_config(std::uint64_t seed);

// Maximizes the empirical gain by minimizing class-balanced cross-entropy;
// on balanced pools -gain equals half the summed per-pool mean
// cross-entropies. Unbalanced pools are reweighted.
MiaModel train_mia(const MembershipSets& sets, MiaMode mode, const nn::TrainConfig& cfg);

// Score-based inputs are sorted before scoring, so any permutation of a score
// vector yields the same verdict.
MiaVerdict infer(const MiaModel& m, const Eigen::Ref<const Eigen::VectorXd>& input);

// Rows/cols: 0 = non-member, 1 = member.
ConfusionMatrix evaluate_mia(const MiaModel& m, const MembershipSets& sets);
ConfusionMatrix membership_confusion(std::span<const double> member_scores, std::span<const double> nonmember_scores);

enum class Aggregate { Average, Maximum };
std::string_view to_string(Aggregate a);

struct VariationRow {
  double level = 0;
  Aggregate aggregate = Aggregate::Average;
  double nonmember_acc = 0;
  double member_acc = 0;
};

// Per-feature max - min over the given observations' adversary features.
Eigen::VectorXd feature_ranges(const std::vector<PairedObservation>& pool);

struct VariationConfig {
  std::vector<double> levels{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  int per_level_count = 10;
  std::uint64_t seed = 0;
};

// Robustness of a label-based MIA to noisy variations of the probed signal.
// At level 0 the original is scored; at every other level `per_level_count`
// variants are scored and their scores aggregated before thresholding. Each
// variant keeps the class the surrogate gave the original transmission.
std::vector<VariationRow> noisy_variation_eval(const MiaModel& m, const SurrogateClassifier& surrogate,
                                               const std::vector<PairedObservation>& members,
                                               const std::vector<PairedObservation>& nonmembers,
                                               const Eigen::VectorXd& ranges, Aggregate aggregate,
                                               const VariationConfig& cfg);

std::string variation_table_csv(std::span<const VariationRow> rows);

}  // namespace rfmia
