#include <doctest.h>

#include <set>

#include "rfmia/classifiers.hpp"
#include "rfmia/errors.hpp"

using namespace rfmia;

namespace {

ScenarioConfig small_setting1() {
  auto c = ScenarioConfig::preset("setting1-strong");
  c.target_train = 1000;
  c.target_test = 400;
  c.surrogate_train = 200;
  c.surrogate_test = 200;
  c.mia_members = 100;
  c.mia_nonmembers = 100;
  return c;
}

}  // namespace

TEST_CASE("confusion matrix basics") {
  const std::vector<int> truth{0, 1, 2, 0, 1, 2};
  const auto perfect = confusion(truth, truth, 3);
  CHECK(perfect.rates.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(perfect.accuracy == 1.0);

  const std::vector<int> binary{0, 0, 1, 1}, constant{1, 1, 1, 1};
  const auto c = confusion(binary, constant, 2);
  CHECK(c.accuracy == 0.5);
  for (Eigen::Index i = 0; i < 2; ++i) CHECK(c.rates.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));

  // accuracy is the count-weighted trace, not the mean of the diagonal
  const std::vector<int> t{0, 0, 0, 1}, p{0, 0, 0, 0};
  const auto w = confusion(t, p, 2);
  CHECK(w.accuracy == 0.75);
  CHECK(w.rates(1, 0) == 1.0);
  CHECK(w.to_json()["rates"].size() == 2);
}

TEST_CASE("classifier spec is 3 x 100") {
  const auto s = classifier_spec(32, 2);
  CHECK(s.hidden_dims == std::vector<int>{100, 100, 100});
  CHECK(nn::MlpModel::init(s, 1).parameter_count() == 23702);
}

TEST_CASE("surrogate training rejects provider-side features") {
  const auto ds = synth_scenario(small_setting1());
  const auto& obs = ds.split(splits::kSurrogateTrain).observations;
  auto cfg = default_classifier_train_config(1);
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_surrogate(make_view(obs, Observer::Provider), 2, cfg), InvalidInput);
  const auto s = train_surrogate(make_view(obs, Observer::Adversary), 2, cfg);
  CHECK(s.model.input_dim() == 32);
}

TEST_CASE("degenerate labels give constant predictions") {
  const auto ds = synth_scenario(small_setting1());
  const auto& train = ds.split(splits::kTargetTrain).observations;
  auto cfg = default_classifier_train_config(2);
  cfg.epochs = 5;
  const auto c = train_target(make_view(train, Observer::Provider, std::vector<int>(train.size(), 1)), 2, cfg);
  for (int p : c.predict(make_view(ds.split(splits::kTargetTest).observations, Observer::Provider).features)) CHECK(p == 1);
}

TEST_CASE("target training is reproducible and records its members") {
  const auto ds = synth_scenario(small_setting1());
  auto cfg = default_classifier_train_config(3);
  cfg.epochs = 10;
  const auto view = make_view(target_training_split(ds), Observer::Provider);
  const auto a = train_target(view, 2, cfg);
  const auto b = train_target(view, 2, cfg);
  const auto test = make_view(target_test_split(ds), Observer::Provider);
  CHECK(evaluate(a.model, test).accuracy == evaluate(b.model, test).accuracy);
  CHECK(a.training_ids.size() == target_training_split(ds).size());
  CHECK(evaluate(a.model, test).accuracy > 0.9);

  std::set<std::int64_t> ids(a.training_ids.begin(), a.training_ids.end());
  for (auto id : test.ids) CHECK(!ids.contains(id));

  CHECK_THROWS_AS(train_target(view, 1, cfg), InvalidInput);
  CHECK_THROWS_AS(evaluate(a.model, FeatureView{}), InvalidInput);
}
