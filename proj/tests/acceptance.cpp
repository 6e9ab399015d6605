// Runs the acceptance criteria end to end and prints one PASS/FAIL line per
// criterion. Usage: acceptance [output-dir]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rfmia/defense.hpp"
#include "rfmia/experiment.hpp"
#include "rfmia/io.hpp"
#include "rfmia/mia.hpp"
#include "rfmia/nn/mlp.hpp"

using namespace rfmia;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSeeds = 5;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out + "]";
}

struct Line {
  int id;
  bool pass;
  std::string text;
};

struct Run {
  json report;
  double seconds = 0;
};

Run run(ExperimentKind kind, std::uint64_t seed, const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.seed = seed;
  cfg.output_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = run_experiment(cfg);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::clog << "  " << to_string(kind) << " seed " << seed << ": " << fmt(s) << " s\n";
  return {std::move(r.body), s};
}

double metric(const json& report, const std::string& name) { return key_metrics(report).at(name); }

// Per-level column of a noisy-variation table.
std::map<double, double> column(const json& report, const char* aggregate, const char* field) {
  std::map<double, double> out;
  for (const auto& row : report.at("stages").at("attack").at("variation").at("tables").at(aggregate))
    out[row.at("level").get<double>()] = row.at(field).get<double>();
  return out;
}

std::map<double, double> level_medians(const std::vector<json>& reports, const char* aggregate, const char* field) {
  std::map<double, std::vector<double>> by_level;
  for (const auto& r : reports)
    for (const auto& [level, v] : column(r, aggregate, field)) by_level[level].push_back(v);
  std::map<double, double> out;
  for (const auto& [level, v] : by_level) out[level] = median(v);
  return out;
}

// ---- criterion 7: property suite ------------------------------------------

Eigen::VectorXd normal_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<std::pair<std::string, bool>> property_suite() {
  std::vector<std::pair<std::string, bool>> out;
  Rng rng(derive_seed(2024, "acceptance-properties"));

  bool ok = true;
  for (int t = 0; t < 10000; ++t) {
    const Eigen::VectorXd p = nn::softmax(normal_vector(2 + static_cast<Eigen::Index>(rng.below(30)), rng) * 30.0);
    ok = ok && std::abs(p.sum() - 1) <= 1e-9 && p.minCoeff() >= 0;
  }
  out.emplace_back("softmax normalization", ok);

  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    const int in = 2 + static_cast<int>(rng.below(30));
    const int k = 2 + static_cast<int>(rng.below(19));
    const auto m = nn::MlpModel::init({in, {32, 32}, k}, rng());
    const Eigen::VectorXd x = normal_vector(in, rng);
    const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k)));
    const Eigen::VectorXd g = m.input_gradient(x, nn::Readout::probability(c));
    Eigen::VectorXd fd(in);
    const double h = 1e-5;
    for (int i = 0; i < in; ++i) {
      Eigen::VectorXd up = x, down = x;
      up(i) += h;
      down(i) -= h;
      fd(i) = (m.predict_scores(up)(c) - m.predict_scores(down)(c)) / (2 * h);
    }
    worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / std::max(fd.lpNorm<Eigen::Infinity>(), 1e-8));
  }
  out.emplace_back("input gradient vs finite differences (max rel err " + fmt(worst * 1e4) + "e-4)", worst <= 1e-4);

  const std::vector<double> half(100, 0.5);
  out.emplace_back("empirical_gain(0.5) = ln 0.5", empirical_gain(half, half) == std::log(0.5));

  ok = true;
  for (int t = 0; t < 10000; ++t) {
    const int k = 2 + static_cast<int>(rng.below(19));
    Eigen::VectorXd z = normal_vector(k, rng);
    if (t % 2) z = z.array().round();
    const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k)));
    ok = ok && ((hinge_loss(z, c) == 0) == (z(c) == z.maxCoeff()));
  }
  out.emplace_back("L = 0 iff argmax preserved (1e4 pairs)", ok);

  ok = true;
  for (int t = 0; t < 10000; ++t) {
    const int k = 1 + static_cast<int>(rng.below(20));
    const Eigen::VectorXd v = nn::softmax(normal_vector(k, rng));
    const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(k)));
    const Eigen::VectorXd s = shuffle_nonmax(v, c, rng);
    std::vector<double> a(v.begin(), v.end()), b(s.begin(), s.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ok = ok && s(c) == v(c) && a == b;
  }
  out.emplace_back("shuffle_nonmax keeps multiset and c* (1e4 vectors)", ok);

  Eigen::MatrixXd pool(8, 1000), fresh_in(8, 1000), fresh_out(8, 1000);
  for (auto& x : pool.reshaped()) x = rng.normal();
  for (auto& x : fresh_in.reshaped()) x = rng.normal();
  for (auto& x : fresh_out.reshaped()) x = rng.normal();
  std::vector<std::int64_t> a(1000), b(1000), c(1000), d(1000);
  for (int i = 0; i < 1000; ++i) a[i] = i, b[i] = 1000 + i, c[i] = 2000 + i, d[i] = 3000 + i;
  auto cfg = default_mia_train_config(derive_seed(2024, "identical"));
  cfg.epochs = 20;
  const auto m = train_mia({pool, pool, a, b}, MiaMode::LabelBased, cfg);
  const double acc = evaluate_mia(m, {fresh_in, fresh_out, c, d}).accuracy;
  out.emplace_back("identical distributions give MIA accuracy " + fmt(acc), std::abs(acc - 0.5) <= 0.05);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rfmia_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  std::vector<json> noisy, weak, defense;
  std::vector<double> seconds;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    for (auto [kind, sink] : {std::pair{ExperimentKind::Setting1Noisy, &noisy},
                              std::pair{ExperimentKind::Setting1Weak, &weak},
                              std::pair{ExperimentKind::Setting2Defense, &defense}}) {
      auto r = run(kind, seed, default_run_dir(root, kind, seed));
      seconds.push_back(r.seconds);
      sink->push_back(std::move(r.report));
    }
  }
  auto values = [](const std::vector<json>& runs, const std::string& name) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(metric(r, name));
    return v;
  };

  std::vector<Line> lines;
  json detail;

  {
    const auto s1 = values(noisy, "target_accuracy");
    const auto s2 = values(defense, "target_accuracy");
    const double m1 = median(s1), m2 = median(s2);
    lines.push_back({1, m1 >= 0.95 && m2 >= 0.85 && m2 <= 1.0,
                     "target classifier: setting 1 median " + fmt(m1) + " (>= 0.95), setting 2 median " + fmt(m2) +
                         " (in [0.85, 1])"});
    detail["1"] = {{"setting1", s1}, {"setting2", s2}};
  }
  {
    const auto acc = values(noisy, "surrogate_accuracy");
    const auto agree = values(noisy, "surrogate_agreement");
    lines.push_back({2, median(acc) >= 0.95 && median(agree) >= 0.95,
                     "surrogate: median accuracy " + fmt(median(acc)) + " (>= 0.95), agreement with C " +
                         fmt(median(agree)) + " (>= 0.95)"});
    detail["2"] = {{"accuracy", acc}, {"agreement", agree}};
  }
  {
    const auto strong = values(noisy, "mia_accuracy");
    const auto w = values(weak, "mia_accuracy");
    std::vector<double> gap;
    for (int i = 0; i < kSeeds; ++i) gap.push_back(strong[i] - w[i]);
    const double ms = median(strong), mg = median(gap);
    lines.push_back({3, ms >= 0.78 && ms <= 0.95 && mg >= 0.05,
                     "setting-1 MIA: strong median " + fmt(ms) + " (in [0.78, 0.95]), strong - weak median " + fmt(mg) +
                         " (>= 0.05); per seed strong " + list(strong) + " weak " + list(w)});
    detail["3"] = {{"strong", strong},
                   {"weak", w},
                   {"strong_heldout", values(noisy, "mia_heldout_accuracy")},
                   {"weak_heldout", values(weak, "mia_heldout_accuracy")}};
  }
  {
    const auto max_member = level_medians(noisy, "maximum", "member_acc");
    const auto max_non = level_medians(noisy, "maximum", "nonmember_acc");
    const auto avg_member = level_medians(noisy, "average", "member_acc");
    bool a = true, c = true;
    std::vector<double> a_vals, c_vals;
    for (const auto& [level, v] : max_member)
      if (level >= 0.1 - 1e-12) a = a && v == 1.0, a_vals.push_back(v);
    const double level0 = avg_member.at(0.0);
    for (const auto& [level, v] : avg_member)
      if (level >= 0.3 - 1e-12) c = c && v < level0, c_vals.push_back(v);
    const bool b = max_non.at(0.9) < max_non.at(0.1);
    const bool pass = a && b && c;
    std::string text = "noisy variation: (a) max-agg member acc = 1 for levels >= 0.1 " + std::string(a ? "ok" : "NO") +
                       " " + list(a_vals) + "; (b) max-agg non-member acc at 0.9 " + fmt(max_non.at(0.9)) + " < 0.1 " +
                       fmt(max_non.at(0.1)) + " " + (b ? "ok" : "NO") + "; (c) avg-agg member acc below level-0 " +
                       fmt(level0) + " from 0.3 " + (c ? "ok" : "NO") + " " + list(c_vals);
    lines.push_back({4, pass, text});
    json med = json::object();
    for (const auto& [level, v] : max_member)
      med[format_double(level)] = {{"max_member", v},
                                   {"max_nonmember", max_non.at(level)},
                                   {"avg_member", avg_member.at(level)},
                                   {"avg_nonmember", level_medians(noisy, "average", "nonmember_acc").at(level)}};
    detail["4"] = med;
  }
  {
    const auto mia = values(defense, "mia_accuracy");
    const auto shadow = values(defense, "shadow_accuracy");
    lines.push_back({5, median(mia) >= 0.9 && median(shadow) >= 0.9,
                     "setting-2 MIA: median " + fmt(median(mia)) + " (>= 0.90), shadow MIA median " +
                         fmt(median(shadow)) + " (>= 0.90)"});
    detail["5"] = {{"mia", mia}, {"shadow", shadow}};
  }
  {
    const auto adv = values(defense, "defended_mia_accuracy");
    const auto shadow = values(defense, "defended_shadow_accuracy");
    const auto conv = values(defense, "convergence_rate");
    const auto viol = values(defense, "argmax_violations");
    const double max_viol = *std::max_element(viol.begin(), viol.end());
    const bool pass = median(adv) <= 0.60 && median(shadow) <= 0.75 && median(conv) >= 0.95 && max_viol == 0;
    lines.push_back({6, pass,
                     "defense: defended adversary MIA median " + fmt(median(adv)) + " (<= 0.60), defended shadow median " +
                         fmt(median(shadow)) + " (<= 0.75), convergence median " + fmt(median(conv)) +
                         " (>= 0.95), argmax violations " + fmt(max_viol) + " (0)"});
    detail["6"] = {{"defended_adversary", adv}, {"defended_shadow", shadow}, {"convergence", conv}, {"violations", viol}};
  }
  {
    const auto props = property_suite();
    bool pass = true;
    std::string failed;
    for (const auto& [name, ok] : props) {
      pass = pass && ok;
      if (!ok) failed += " [" + name + "]";
    }
    lines.push_back({7, pass, "property suite: " + std::to_string(props.size()) + " properties" +
                                  (pass ? " hold" : ", failing:" + failed)});
    json p = json::object();
    for (const auto& [name, ok] : props) p[name] = ok;
    detail["7"] = p;
  }
  {
    bool pass = true;
    std::string text = "determinism: byte-identical report.json on rerun for";
    for (auto kind : {ExperimentKind::Setting1Strong, ExperimentKind::Setting2Mia}) {
      const auto a = root / "determinism" / (std::string(to_string(kind)) + "-a");
      const auto b = root / "determinism" / (std::string(to_string(kind)) + "-b");
      run(kind, 1, a);
      run(kind, 1, b);
      const bool same = read_file(a / "report.json") == read_file(b / "report.json");
      pass = pass && same;
      text += " " + std::string(to_string(kind)) + (same ? " ok" : " DIFFERS");
    }
    const auto again = root / "determinism" / "setting2-defense-seed1";
    run(ExperimentKind::Setting2Defense, 1, again);
    const bool same = read_file(again / "report.json") ==
                      read_file(default_run_dir(root, ExperimentKind::Setting2Defense, 1) / "report.json");
    pass = pass && same;
    text += std::string(" setting2-defense") + (same ? " ok" : " DIFFERS");
    lines.push_back({8, pass, text});
  }

  const double slowest = *std::max_element(seconds.begin(), seconds.end());
  detail["seconds"] = seconds;
  write_file_atomic(root / "acceptance.json", detail.dump(2) + "\n");

  bool all = true;
  for (const auto& l : lines) {
    std::cout << (l.pass ? "PASS" : "FAIL") << "  criterion " << l.id << ": " << l.text << "\n";
    all = all && l.pass;
  }
  std::cout << (slowest < 300 ? "PASS" : "FAIL") << "  runtime: slowest experiment " << fmt(slowest)
            << " s (< 300 s)\n";
  all = all && slowest < 300;
  std::cout << "per-seed values in " << (root / "acceptance.json").string() << "\n";
  return all ? 0 : 1;
}
