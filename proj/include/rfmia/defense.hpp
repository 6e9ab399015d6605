#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rfmia/classifiers.hpp"
#include "rfmia/mia.hpp"
#include "rfmia/nn/train.hpp"
#include "rfmia/rng.hpp"

namespace rfmia {

// Defender's in-house score-based MIA.
struct ShadowMia {
  MiaModel mia;
  // Sorted score vectors the shadow was trained on, one per column. The
  // solver borrows them as targets when gradient descent stalls.
  Eigen::MatrixXd references;

  double score(const Eigen::Ref<const Eigen::VectorXd>& raw_scores) const;
};

// Score columns come straight from the target classifier; they are sorted here.
ShadowMia train_shadow(const Eigen::MatrixXd& member_scores, const Eigen::MatrixXd& nonmember_scores,
                       const nn::TrainConfig& cfg);

// max(max_{c != c*} z_c - z_{c*}, 0). Ties count as preserved.
double hinge_loss(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Index c_star);

struct SolverConfig {
  double lambda = 10;
  double step_size = 0.05;
  int max_halvings = 20;
  int max_iters = 500;
  double stop_tol = 0.01;
  std::vector<double> lambda_sweep{10, 1, 100};

  void validate() const;
  nlohmann::json to_json() const;
  static SolverConfig from_json(const nlohmann::json& j);
};

struct DefenseResult {
  Eigen::VectorXd defended_scores;
  Eigen::VectorXd perturbation;  // defended - original
  Eigen::Index origin_argmax = 0;
  double shadow_score_before = 0;
  double shadow_score = 0;
  double loss_L = 0;
  double lambda = 0;  // the lambda that produced the result
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // accepted steps of the returned run
};

// Searches z (initialized at log s) minimizing |m(sort(softmax(z))) - 0.5| + lambda L(z).
// Returns the best iterate found, preferring L = 0; defend_pipeline emits s
// itself for unconverged samples.
DefenseResult perturb_scores(const Eigen::Ref<const Eigen::VectorXd>& s, const ShadowMia& shadow,
                             const SolverConfig& cfg);

// Random permutation of every position except c_star.
Eigen::VectorXd shuffle_nonmax(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index c_star, Rng& rng);

struct DefendedBatch {
  Eigen::MatrixXd original_scores;
  Eigen::MatrixXd defended_scores;  // after shuffling
  std::vector<DefenseResult> results;
  int converged = 0;
  int violations = 0;  // converged samples whose argmax moved

  double convergence_rate() const;
  nlohmann::json to_json() const;  // per-sample records and aggregates
};

// Defends every column of `features`; shuffling for sample i uses stream i of
// Rng(seed).
DefendedBatch defend_pipeline(const TargetClassifier& classifier, const Eigen::MatrixXd& features,
                              const ShadowMia& shadow, const SolverConfig& cfg, std::uint64_t seed);

}  // namespace rfmia
