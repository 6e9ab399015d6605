#include "rfmia/defense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "rfmia/errors.hpp"

namespace rfmia {

double ShadowMia::score(const Eigen::Ref<const Eigen::VectorXd>& raw_scores) const {
  return mia.model.predict_scores(sorted_descending(raw_scores))(1);
}

ShadowMia train_shadow(const Eigen::MatrixXd& member_scores, const Eigen::MatrixXd& nonmember_scores,
                       const nn::TrainConfig& cfg) {
  auto sets = score_based_sets(member_scores, nonmember_scores);
  ShadowMia shadow{train_mia(sets, MiaMode::ScoreBased, cfg), {}};
  shadow.references.resize(sets.members.rows(), sets.members.cols() + sets.nonmembers.cols());
  shadow.references << sets.members, sets.nonmembers;
  return shadow;
}

double hinge_loss(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Index c_star) {
  if (z.size() < 2) throw InvalidInput("hinge_loss needs at least 2 classes");
  if (c_star < 0 || c_star >= z.size()) throw InvalidInput("hinge_loss: class index out of range");
  double rival = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < z.size(); ++c)
    if (c != c_star) rival = std::max(rival, z(c));
  return std::max(rival - z(c_star), 0.0);
}

void SolverConfig::validate() const {
  if (!(lambda > 0)) throw ConfigError("lambda must be > 0");
  for (double l : lambda_sweep)
    if (!(l > 0)) throw ConfigError("lambda_sweep entries must be > 0");
  if (!(step_size > 0)) throw ConfigError("step_size must be > 0");
  if (max_halvings < 0 || max_iters < 0) throw ConfigError("solver limits must be >= 0");
  if (!(stop_tol >= 0)) throw ConfigError("stop_tol must be >= 0");
}

nlohmann::json SolverConfig::to_json() const {
  return {{"lambda", lambda},     {"step_size", step_size}, {"max_halvings", max_halvings},
          {"max_iters", max_iters}, {"stop_tol", stop_tol},   {"lambda_sweep", lambda_sweep}};
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j) {
  SolverConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "lambda") c.lambda = value.get<double>();
    else if (key == "step_size") c.step_size = value.get<double>();
    else if (key == "max_halvings") c.max_halvings = value.get<int>();
    else if (key == "max_iters") c.max_iters = value.get<int>();
    else if (key == "stop_tol") c.stop_tol = value.get<double>();
    else if (key == "lambda_sweep") c.lambda_sweep = value.get<std::vector<double>>();
    else throw ConfigError("unknown solver key '" + key + "'");
  }
  c.validate();
  return c;
}

namespace {

// Objective of one candidate z together with what its gradient needs.
struct Point {
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  std::vector<Eigen::Index> order;  // order[i] = class at sorted position i
  double m = 0;
  double margin = 0;  // shadow logit(member) - logit(non-member)
  double L = 0;
  double f = 0;
};

class Solver {
 public:
  Solver(const ShadowMia& shadow, Eigen::Index c_star) : shadow_(shadow), c_star_(c_star) {}

  Point at(Eigen::VectorXd z, double lambda) const {
    Point pt;
    pt.p = nn::softmax(z);
    pt.order.resize(static_cast<std::size_t>(z.size()));
    std::iota(pt.order.begin(), pt.order.end(), Eigen::Index{0});
    std::stable_sort(pt.order.begin(), pt.order.end(), [&](auto a, auto b) { return pt.p(a) > pt.p(b); });
    const Eigen::VectorXd logits = shadow_.mia.model.logits(sorted(pt)).col(0);
    pt.m = nn::softmax(logits)(1);
    pt.margin = logits(1) - logits(0);
    pt.L = hinge_loss(z, c_star_);
    pt.f = std::abs(pt.m - 0.5) + lambda * pt.L;
    pt.z = std::move(z);
    return pt;
  }

  // Gradient of the objective. The |m - 0.5| part is taken through the
  // shadow's logit margin: dm = m (1 - m) dmargin, and the margin gradient
  // does not vanish when m saturates at 0 or 1.
  Eigen::VectorXd gradient(const Point& pt, double lambda) const {
    const auto& model = shadow_.mia.model;
    const Eigen::VectorXd x = sorted(pt);
    Eigen::VectorXd g_sorted = model.input_gradient(x, nn::Readout::logit(1)) - model.input_gradient(x, nn::Readout::logit(0));
    const double sign = pt.m > 0.5 ? 1.0 : (pt.m < 0.5 ? -1.0 : 0.0);
    g_sorted *= sign;
    Eigen::VectorXd g_p(pt.p.size());
    for (std::size_t i = 0; i < pt.order.size(); ++i) g_p(pt.order[i]) = g_sorted(static_cast<Eigen::Index>(i));
    Eigen::VectorXd g = nn::softmax_backward(pt.p, g_p);
    // With L = 0 only the direction matters, since the caller normalizes.
    if (pt.L == 0) return g;
    g *= pt.m * (1 - pt.m);
    {
      Eigen::Index rival = c_star_ == 0 ? 1 : 0;
      for (Eigen::Index c = 0; c < pt.z.size(); ++c)
        if (c != c_star_ && pt.z(c) > pt.z(rival)) rival = c;
      g(rival) += lambda;
      g(c_star_) -= lambda;
    }
    return g;
  }

  const Eigen::MatrixXd& references() const { return shadow_.references; }

 private:
  Eigen::VectorXd sorted(const Point& pt) const {
    Eigen::VectorXd s(pt.p.size());
    for (std::size_t i = 0; i < pt.order.size(); ++i) s(static_cast<Eigen::Index>(i)) = pt.p(pt.order[i]);
    return s;
  }

  const ShadowMia& shadow_;
  Eigen::Index c_star_;
};

bool done(const Point& pt, double tol) { return std::abs(pt.m - 0.5) <= tol && pt.L == 0; }

// L = 0 first, then closer to 0.5.
bool better(const Point& a, const Point& b) {
  if ((a.L == 0) != (b.L == 0)) return a.L == 0;
  return std::abs(a.m - 0.5) < std::abs(b.m - 0.5);
}

// Score vectors that keep c* on top while moving its probability to t, either
// rescaling the other scores or flattening them. Ordered by how far t is from
// the current top score.
std::vector<Eigen::VectorXd> probes(const Eigen::VectorXd& s, Eigen::Index c_star, const Eigen::MatrixXd& references) {
  const auto k = static_cast<double>(s.size());
  const double top = s(c_star);
  std::vector<double> ts;
  for (int i = 0; i <= 40; ++i) ts.push_back(1 / k + (1 - 1 / k) * i / 41.0);
  for (int e = 2; e <= 12; ++e) ts.push_back(1 - std::pow(10.0, -e));
  std::stable_sort(ts.begin(), ts.end(), [&](double a, double b) { return std::abs(a - top) < std::abs(b - top); });
  std::vector<Eigen::VectorXd> out;
  for (double t : ts) {
    if (top < 1) {
      Eigen::VectorXd v = s * ((1 - t) / (1 - top));
      v(c_star) = t;
      if (v.maxCoeff() <= t) out.push_back(std::move(v));
    }
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(s.size(), (1 - t) / (k - 1));
    flat(c_star) = t;
    out.push_back(std::move(flat));
  }
  // Reference vectors laid out along the ranking of s, nearest first.
  if (references.cols() > 0) {
    std::vector<Eigen::Index> rank(static_cast<std::size_t>(s.size()));
    std::iota(rank.begin(), rank.end(), Eigen::Index{0});
    std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return s(a) > s(b); });
    std::swap(*std::find(rank.begin(), rank.end(), c_star), rank.front());
    const Eigen::VectorXd sorted_s = sorted_descending(s);
    std::vector<std::pair<double, Eigen::Index>> by_distance;
    for (Eigen::Index j = 0; j < references.cols(); ++j)
      by_distance.emplace_back((references.col(j) - sorted_s).squaredNorm(), j);
    std::stable_sort(by_distance.begin(), by_distance.end());
    for (const auto& [d, j] : by_distance) {
      Eigen::VectorXd v(s.size());
      for (std::size_t i = 0; i < rank.size(); ++i) v(rank[i]) = references(static_cast<Eigen::Index>(i), j);
      out.push_back(std::move(v));
    }
  }
  return out;
}

// Fallback once descent stalls: find a probe on the other side of 0.5 and
// bisect the segment between it and `from` in z. Both ends have c* on top,
// so every point of the segment has L = 0, and m is continuous along it.
std::optional<Point> bracket(const Solver& solver, const Point& from, const Eigen::VectorXd& s, Eigen::Index c_star,
                             double lambda, double tol, int& iterations) {
  const bool above = from.m > 0.5;
  for (const auto& v : probes(s, c_star, solver.references())) {
    Point hi = solver.at(v.array().max(kGainLogClamp).log().matrix(), lambda);
    ++iterations;
    if (hi.L != 0 || (hi.m > 0.5) == above) continue;
    if (done(hi, tol)) return hi;
    Point lo = from;
    for (int i = 0; i < 60; ++i) {
      Point mid = solver.at(0.5 * (lo.z + hi.z), lambda);
      ++iterations;
      if (done(mid, tol)) return mid;
      ((mid.m > 0.5) == above ? lo : hi) = std::move(mid);
    }
  }
  return std::nullopt;
}

}  // namespace

DefenseResult perturb_scores(const Eigen::Ref<const Eigen::VectorXd>& s, const ShadowMia& shadow,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (!shadow.mia.model.trained()) throw InvalidInput("shadow MIA is untrained");
  if (shadow.mia.mode != MiaMode::ScoreBased) throw InvalidInput("shadow MIA must be score-based");
  if (s.size() != shadow.mia.model.input_dim()) throw InvalidInput("score vector width does not match the shadow MIA");

  DefenseResult r;
  r.origin_argmax = nn::argmax(s);
  r.shadow_score_before = shadow.score(s);
  Solver solver(shadow, r.origin_argmax);
  const Eigen::VectorXd z0 = s.array().max(kGainLogClamp).log().matrix();

  if (std::abs(r.shadow_score_before - 0.5) <= cfg.stop_tol) {
    r.defended_scores = s;
    r.perturbation = Eigen::VectorXd::Zero(s.size());
    r.shadow_score = r.shadow_score_before;
    r.lambda = cfg.lambda;
    r.converged = true;
    return r;
  }

  std::vector<double> lambdas{cfg.lambda};
  for (double l : cfg.lambda_sweep)
    if (std::find(lambdas.begin(), lambdas.end(), l) == lambdas.end()) lambdas.push_back(l);

  Point best = solver.at(z0, lambdas.front());
  double best_lambda = lambdas.front();
  std::vector<double> best_trace;
  int total_iters = 0;
  for (double lambda : lambdas) {
    Point cur = solver.at(z0, lambda);
    double step = cfg.step_size;
    std::vector<double> trace{cur.f};
    for (int it = 0; it < cfg.max_iters && !done(cur, cfg.stop_tol); ++it) {
      const Eigen::VectorXd g = solver.gradient(cur, lambda);
      const double norm = g.norm();
      if (!(norm > 0)) break;
      const Eigen::VectorXd dir = -g / norm;
      bool accepted = false;
      for (int h = 0; h <= cfg.max_halvings; ++h) {
        Point next = solver.at(cur.z + step * dir, lambda);
        // Saturated m leaves f flat; the margin then decides.
        if (next.f < cur.f || (next.f == cur.f && std::abs(next.margin) < std::abs(cur.margin))) {
          cur = std::move(next);
          trace.push_back(cur.f);
          accepted = true;
          step = std::min(2 * step, 1.0);
          break;
        }
        step *= 0.5;
      }
      ++total_iters;
      if (!accepted) break;
    }
    if (better(cur, best) || done(cur, cfg.stop_tol)) {
      best = cur;
      best_lambda = lambda;
      best_trace = std::move(trace);
    }
    if (done(best, cfg.stop_tol)) break;
  }
  if (!done(best, cfg.stop_tol)) {
    const Point& from = best.L == 0 ? best : solver.at(z0, best_lambda);
    if (auto hit = bracket(solver, from, s, r.origin_argmax, best_lambda, cfg.stop_tol, total_iters)) {
      best_trace = {from.f, hit->f};
      best = std::move(*hit);
    }
  }

  r.defended_scores = best.p;
  r.perturbation = best.p - s;
  r.shadow_score = best.m;
  r.loss_L = best.L;
  r.lambda = best_lambda;
  r.iterations = total_iters;
  r.objective_trace = std::move(best_trace);
  r.converged = done(best, cfg.stop_tol);
  return r;
}

Eigen::VectorXd shuffle_nonmax(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index c_star, Rng& rng) {
  if (c_star < 0 || c_star >= v.size()) throw InvalidInput("shuffle_nonmax: class index out of range");
  std::vector<Eigen::Index> others;
  for (Eigen::Index c = 0; c < v.size(); ++c)
    if (c != c_star) others.push_back(c);
  std::vector<Eigen::Index> perm = others;
  shuffle(perm, rng);
  Eigen::VectorXd out = v;
  for (std::size_t i = 0; i < others.size(); ++i) out(others[i]) = v(perm[i]);
  return out;
}

double DefendedBatch::convergence_rate() const {
  return results.empty() ? 0.0 : static_cast<double>(converged) / static_cast<double>(results.size());
}

nlohmann::json DefendedBatch::to_json() const {
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    samples.push_back({{"original_argmax", r.origin_argmax},
                       {"defended_argmax", nn::argmax(defended_scores.col(static_cast<Eigen::Index>(i)))},
                       {"shadow_before", r.shadow_score_before},
                       {"shadow_after", r.shadow_score},
                       {"loss_L", r.loss_L},
                       {"lambda", r.lambda},
                       {"iterations", r.iterations},
                       {"converged", r.converged}});
  }
  return {{"count", results.size()},
          {"converged", converged},
          {"convergence_rate", convergence_rate()},
          {"argmax_violations", violations},
          {"samples", std::move(samples)}};
}

DefendedBatch defend_pipeline(const TargetClassifier& classifier, const Eigen::MatrixXd& features,
                              const ShadowMia& shadow, const SolverConfig& cfg, std::uint64_t seed) {
  DefendedBatch out;
  out.original_scores = classifier.scores(features);
  out.defended_scores.resize(out.original_scores.rows(), out.original_scores.cols());
  for (Eigen::Index j = 0; j < out.original_scores.cols(); ++j) {
    const Eigen::VectorXd s = out.original_scores.col(j);
    DefenseResult r = perturb_scores(s, shadow, cfg);
    Eigen::VectorXd emitted = r.converged ? r.defended_scores : s;
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(j));
    emitted = shuffle_nonmax(emitted, r.origin_argmax, rng);
    if (r.converged) {
      ++out.converged;
      if (emitted(r.origin_argmax) < emitted.maxCoeff()) ++out.violations;
    }
    out.defended_scores.col(j) = emitted;
    out.results.push_back(std::move(r));
  }
  return out;
}

}  // namespace rfmia
