#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "rfmia/errors.hpp"
#include "rfmia/io.hpp"
#include "rfmia/scenario.hpp"
#include "rfmia/signal_sim.hpp"

using namespace rfmia;
using std::numbers::pi;

TEST_CASE("modulate follows the Gray map") {
  const std::vector<std::uint8_t> q00{0, 0}, q01{0, 1}, q11{1, 1}, q10{1, 0};
  CHECK(modulate(q00, Modulation::QPSK)[0] == doctest::Approx(pi / 4));
  CHECK(modulate(q01, Modulation::QPSK)[0] == doctest::Approx(3 * pi / 4));
  CHECK(modulate(q11, Modulation::QPSK)[0] == doctest::Approx(5 * pi / 4));
  CHECK(modulate(q10, Modulation::QPSK)[0] == doctest::Approx(7 * pi / 4));
  const std::vector<std::uint8_t> b0{0}, b1{1};
  CHECK(modulate(b0, Modulation::BPSK)[0] == 0.0);
  CHECK(modulate(b1, Modulation::BPSK)[0] == doctest::Approx(pi));
  const std::vector<std::uint8_t> odd{0, 1, 1};
  CHECK_THROWS_AS(modulate(odd, Modulation::QPSK), InvalidInput);
}

TEST_CASE("observe with zero noise is the direct formula") {
  DeviceProfile d{7, 0.3, 1.0, Modulation::QPSK, DeviceRole::Authorized};
  ChannelLink l{7, Observer::Provider, Session::Train, 0.9, 0.1};
  const std::vector<std::uint8_t> bits{0, 0};
  Rng rng(1);
  const auto fv = observe(d, l, bits, NoiseSpec{0, 0}, rng);
  REQUIRE(fv.bits() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(fv.phases(k) == doctest::Approx(pi / 4 + 0.4).epsilon(1e-12));
    CHECK(fv.powers(k) == doctest::Approx(0.9).epsilon(1e-12));
  }

  const auto noisy = observe(d, l, bits, NoiseSpec{0.1, 0.1}, rng);
  for (int k = 0; k < 2; ++k) {
    CHECK(noisy.phases(k) >= pi / 4 + 0.3 - 1e-12);
    CHECK(noisy.phases(k) <= pi / 4 + 0.5 + 1e-12);
  }

  ChannelLink other = l;
  other.tx_device_id = 8;
  CHECK_THROWS_AS(observe(d, other, bits, NoiseSpec{}, rng), InvalidInput);
}

TEST_CASE("mean received power at 10 dB is within the noise bound of P_rx") {
  const NoiseSpec noise;
  const double prx = snr_to_received_power(10, noise);
  CHECK(prx == doctest::Approx(1.0));
  CHECK(snr_to_received_power(0, noise) == doctest::Approx(0.1));
  CHECK(snr_to_received_power(3, noise) == doctest::Approx(0.1 * std::pow(10.0, 0.3)));

  DeviceProfile d{0, 1.0, 1.0, Modulation::QPSK, DeviceRole::Authorized};
  ChannelLink l{0, Observer::Provider, Session::Train, prx, 2.0};
  Rng rng(5);
  double sum = 0;
  int count = 0;
  for (int t = 0; t < 10000; ++t) {
    std::vector<std::uint8_t> bits(16);
    for (auto& b : bits) b = rng.bit();
    const auto fv = observe(d, l, bits, noise, rng);
    sum += fv.powers.sum();
    count += 16;
  }
  CHECK(std::abs(sum / count - prx) <= noise.power_bound);
}

TEST_CASE("SNR monotonicity") {
  const NoiseSpec noise;
  double prev = -1;
  for (double snr = -5; snr <= 20; snr += 0.5) {
    const double p = snr_to_received_power(snr, noise);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("wrap_phase lands in [0, 2pi)") {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double w = wrap_phase(rng.uniform(-100, 100));
    CHECK(w >= 0);
    CHECK(w < 2 * pi);
  }
  CHECK(wrap_phase(-1e-300) < 2 * pi);
}

TEST_CASE("perturb_features hits the requested level exactly") {
  FeatureVector fv{Eigen::VectorXd::Constant(16, 1.0), Eigen::VectorXd::Constant(16, 0.5)};
  Eigen::VectorXd ranges(32);
  // phase ranges below pi keep every change recoverable from the wrapped phase
  for (int k = 0; k < 32; ++k) ranges(k) = k < 16 ? 2.5 + 0.02 * k : 0.2 + 0.01 * k;
  Rng rng(11);
  for (double level : {0.1, 0.5, 0.9, 1.0}) {
    const auto variants = perturb_features(fv, level, ranges, 10, rng);
    REQUIRE(variants.size() == 10);
    for (const auto& v : variants) {
      Eigen::VectorXd rel(32);
      for (int k = 0; k < 32; ++k) {
        double change = v.flat()(k) - fv.flat()(k);
        if (k < 16) change = std::remainder(change, 2 * pi);
        rel(k) = std::abs(change) / ranges(k);
        if (k < 16) {
          CHECK(v.phases(k) >= 0);
          CHECK(v.phases(k) < 2 * pi);
        }
      }
      CHECK(std::abs(rel.norm() - level) <= 1e-9);
    }
  }

  const auto batch = perturb_features(fv, 0.5, ranges, 10, rng);
  for (std::size_t a = 0; a < batch.size(); ++a)
    for (std::size_t b = a + 1; b < batch.size(); ++b) CHECK(batch[a].flat() != batch[b].flat());

  CHECK_THROWS_AS(perturb_features(fv, 0.0, ranges, 1, rng), InvalidInput);
  Eigen::VectorXd degenerate = ranges;
  degenerate(3) = 0;
  CHECK_THROWS_AS(perturb_features(fv, 0.1, degenerate, 1, rng), DegenerateRange);
}

TEST_CASE("paired observations keep a constant phase difference without noise") {
  auto cfg = ScenarioConfig::preset("setting1-strong");
  cfg.noise.phase_bound = 0;
  cfg.target_train = 200;
  cfg.target_test = 50;
  cfg.surrogate_train = cfg.surrogate_test = 50;
  cfg.mia_members = cfg.mia_nonmembers = 50;
  const auto ds = synth_scenario(cfg);
  for (const auto& o : ds.split(splits::kTargetTrain).observations) {
    const double d0 = wrap_phase(o.provider.phases(0) - o.adversary.phases(0));
    for (Eigen::Index k = 1; k < o.provider.bits(); ++k) {
      const double dk = wrap_phase(o.provider.phases(k) - o.adversary.phases(k));
      CHECK(std::abs(std::remainder(dk - d0, 2 * pi)) < 1e-9);
    }
  }
}

TEST_CASE("setting 1 scenario layout") {
  const auto ds = synth_scenario(ScenarioConfig::preset("setting1-strong"));
  const auto& train = ds.split(splits::kTargetTrain).observations;
  CHECK(train.size() == 8000);
  const auto ones = std::count_if(train.begin(), train.end(), [](const auto& o) { return o.class_label == 1; });
  CHECK(ones == 4000);
  CHECK(ds.split(splits::kMiaMemberTrain).observations.size() == 1000);
  CHECK(ds.split(splits::kMiaNonmemberTrain).observations.size() == 1000);
  CHECK(ds.split(splits::kTargetTrain).observations.front().provider.flat().size() == 32);

  // MIA non-members: half authorized QPSK, half other QPSK
  int authorized = 0;
  for (const auto& o : ds.split(splits::kMiaNonmemberTrain).observations) {
    CHECK(o.membership == Membership::Nonmember);
    authorized += o.class_label == 1;
  }
  CHECK(authorized == 500);

  std::set<std::int64_t> member_ids;
  for (const auto& o : train) member_ids.insert(o.id);
  for (const auto& o : ds.split(splits::kMiaMemberTrain).observations) CHECK(member_ids.contains(o.id));
  for (const auto& o : ds.split(splits::kSurrogateTrain).observations) CHECK(!member_ids.contains(o.id));
}

TEST_CASE("setting 2 scenario layout") {
  const auto ds = synth_scenario(ScenarioConfig::preset("setting2"));
  CHECK(ds.config.num_classes() == 20);
  for (auto name : {splits::kA, splits::kB, splits::kCnm, splits::kDnm})
    CHECK(ds.split(name).observations.size() == 2000);
  CHECK(ds.split(splits::kA1).observations.size() == 1000);
  CHECK(ds.split(splits::kD1).observations.size() == 1000);
  std::set<int> labels;
  for (const auto& o : ds.split(splits::kA).observations) labels.insert(o.class_label);
  CHECK(labels.size() == 20);
  for (const auto& o : ds.split(splits::kDnm).observations) CHECK(o.class_label == -1);
}

TEST_CASE("bad scenario configs are rejected") {
  auto cfg = ScenarioConfig::preset("setting2");
  cfg.qpsk_classes = 0;
  CHECK_THROWS_AS(synth_scenario(cfg), ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::preset("nope"), ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::from_json({{"base", "setting1-strong"}, {"colour", 1}}), ConfigError);
}

TEST_CASE("datasets are deterministic and round-trip through CSV") {
  auto cfg = ScenarioConfig::preset("setting1-weak");
  cfg.seed = 42;
  const auto a = synth_scenario(cfg);
  const auto b = synth_scenario(cfg);
  for (std::size_t i = 0; i < a.splits.size(); ++i) CHECK(split_to_csv(a.splits[i]) == split_to_csv(b.splits[i]));

  const auto dir = std::filesystem::temp_directory_path() / "rfmia_dataset_roundtrip";
  std::filesystem::remove_all(dir);
  save_dataset(a, dir);
  const auto back = load_dataset(dir);
  REQUIRE(back.splits.size() == a.splits.size());
  for (std::size_t i = 0; i < a.splits.size(); ++i) {
    CHECK(back.splits[i].name == a.splits[i].name);
    CHECK(split_to_csv(back.splits[i]) == split_to_csv(a.splits[i]));
    const auto& x = a.splits[i].observations;
    const auto& y = back.splits[i].observations;
    REQUIRE(x.size() == y.size());
    for (std::size_t j = 0; j < x.size(); j += 97) {
      CHECK(x[j].provider.flat() == y[j].provider.flat());
      CHECK(x[j].adversary.flat() == y[j].adversary.flat());
    }
  }
  CHECK(back.config.to_json() == a.config.to_json());
  std::filesystem::remove_all(dir);

  cfg.seed = 43;
  CHECK(split_to_csv(synth_scenario(cfg).splits[0]) != split_to_csv(a.splits[0]));
}

TEST_CASE("format_double round-trips") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
    CHECK(parse_double(format_double(v)) == v);
  }
}
