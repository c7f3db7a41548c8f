#include "unisam/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace unisam {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double prob_sum_tolerance = 1e-12;

}  // namespace

SamplingScheme::SamplingScheme(std::size_t n, Kind kind) : n_(n), kind_(std::move(kind)) {}

SamplingScheme SamplingScheme::uniform(std::size_t n) {
  if (n == 0) throw ConfigError("sampling", "uniform sampling over zero components");
  SamplingScheme s(n, SingleElement{std::vector<double>(n, 1.0 / static_cast<double>(n))});
  s.uniform_ = true;
  s.cdf_.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.cdf_[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return s;
}

SamplingScheme SamplingScheme::single_element(std::vector<double> p) {
  if (p.empty()) throw ConfigError("sampling.probabilities", "empty probability vector");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || p[i] > 1.0 || !std::isfinite(p[i]))
      throw ConfigError("sampling.probabilities",
                        "p[" + std::to_string(i) + "] = " + std::to_string(p[i]) +
                            " is outside (0, 1]");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > prob_sum_tolerance)
    throw ConfigError("sampling.probabilities", "probabilities sum to " + std::to_string(sum));

  const std::size_t n = p.size();
  const bool all_equal =
      std::all_of(p.begin(), p.end(), [&](double q) { return q == p.front(); });
  SamplingScheme s(n, SingleElement{p});
  s.uniform_ = all_equal;
  s.cdf_.resize(n);
  std::partial_sum(p.begin(), p.end(), s.cdf_.begin());
  s.cdf_.back() = 1.0;
  return s;
}

SamplingScheme SamplingScheme::tau_nice(std::size_t n, std::size_t tau) {
  if (n == 0) throw ConfigError("sampling", "tau-nice sampling over zero components");
  if (tau == 0 || tau > n)
    throw ConfigError("sampling.tau",
                      "tau = " + std::to_string(tau) + " must lie in [1, " + std::to_string(n) + "]");
  return SamplingScheme(n, TauNice{tau});
}

SamplingScheme SamplingScheme::full_batch(std::size_t n) {
  if (n == 0) throw ConfigError("sampling", "full batch over zero components");
  return SamplingScheme(n, FullBatch{});
}

bool SamplingScheme::is_deterministic() const {
  if (std::holds_alternative<FullBatch>(kind_)) return true;
  if (const auto* t = std::get_if<TauNice>(&kind_)) return t->tau == n_;
  return false;
}

std::size_t SamplingScheme::batch_size() const {
  return std::visit(overloaded{[](const SingleElement&) -> std::size_t { return 1; },
                               [](const TauNice& t) { return t.tau; },
                               [this](const FullBatch&) { return n_; }},
                    kind_);
}

const std::vector<double>& SamplingScheme::probabilities() const {
  const auto* s = std::get_if<SingleElement>(&kind_);
  if (!s) throw std::logic_error("probabilities() on a scheme that is not single-element");
  return s->p;
}

std::string SamplingScheme::label() const {
  return std::visit(
      overloaded{[this](const SingleElement&) -> std::string {
                   return uniform_ ? "uniform" : "single_element";
                 },
                 [](const TauNice& t) { return "tau_nice(" + std::to_string(t.tau) + ")"; },
                 [](const FullBatch&) -> std::string { return "full_batch"; }},
      kind_);
}

SamplingVector draw(const SamplingScheme& scheme, RngStream& stream) {
  const std::size_t n = scheme.n();
  if (const auto* s = std::get_if<SamplingScheme::SingleElement>(&scheme.kind())) {
    std::size_t i;
    if (scheme.uniform_) {
      i = stream.uniform_index(n);
    } else {
      const double u = stream.uniform01();
      i = static_cast<std::size_t>(std::upper_bound(scheme.cdf_.begin(), scheme.cdf_.end(), u) -
                                   scheme.cdf_.begin());
      if (i >= n) i = n - 1;
    }
    return SamplingVector::sparse({i}, {1.0 / s->p[i]});
  }
  if (scheme.is_deterministic()) return SamplingVector::full_batch(n);

  const std::size_t tau = std::get<SamplingScheme::TauNice>(scheme.kind()).tau;
  // Partial Fisher-Yates over a virtual identity permutation; only swapped
  // slots are materialized.
  std::unordered_map<std::size_t, std::size_t> swapped;
  swapped.reserve(2 * tau);
  auto at = [&](std::size_t k) {
    auto it = swapped.find(k);
    return it == swapped.end() ? k : it->second;
  };
  std::vector<std::size_t> picked(tau);
  for (std::size_t k = 0; k < tau; ++k) {
    const std::size_t j = k + stream.uniform_index(n - k);
    const std::size_t vj = at(j);
    swapped[j] = at(k);
    picked[k] = vj;
  }
  std::sort(picked.begin(), picked.end());
  const double w = static_cast<double>(n) / static_cast<double>(tau);
  return SamplingVector::sparse(std::move(picked), std::vector<double>(tau, w));
}

std::vector<WeightedOutcome> enumerate_outcomes(const SamplingScheme& scheme) {
  if (scheme.is_deterministic()) return {{SamplingVector::full_batch(scheme.n()), 1.0}};
  if (!scheme.is_single_element())
    throw std::logic_error("tau-nice outcomes are not enumerated (C(n, tau) subsets)");
  const auto& p = scheme.probabilities();
  std::vector<WeightedOutcome> out;
  out.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.push_back({SamplingVector::sparse({i}, {1.0 / p[i]}), p[i]});
  return out;
}

std::vector<double> importance_probs(const ProblemStats& stats, std::optional<double> floor) {
  if (stats.L.empty()) throw MetadataMissingError("importance sampling needs the constants L_i");
  std::vector<double> L = stats.L;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (floor) L[i] = std::max(L[i], *floor);
    if (!(L[i] > 0.0))
      throw DegenerateConstantError("L_" + std::to_string(i) +
                                    " = 0; importance sampling would never pick it "
                                    "(pass a floor to override)");
  }
  const double total = std::accumulate(L.begin(), L.end(), 0.0);
  for (double& l : L) l /= total;
  return L;
}

double estimator_smoothness(const SamplingScheme& scheme, const ProblemStats& stats) {
  if (scheme.is_deterministic()) return stats.L_full.value_or(stats.L_max);
  if (scheme.is_tau_nice()) return stats.L_max;
  const auto& p = scheme.probabilities();
  const double n = static_cast<double>(scheme.n());
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, stats.L.at(i) / (n * p[i]));
  return m;
}

ERConstants ERConstants::scaled(double factor) const {
  ERConstants c = *this;
  c.A *= factor;
  c.B *= factor;
  c.C *= factor;
  return c;
}

namespace {

double require_sigma_star(const ProblemStats& stats) {
  if (!stats.sigma_star)
    throw MetadataMissingError("C = 2 A sigma* needs sigma*, which this problem does not carry");
  return *stats.sigma_star;
}

}  // namespace

ERConstants er_constants(const SamplingScheme& scheme, const ProblemStats& stats,
                         bool convexity_hint) {
  const std::size_t n = scheme.n();
  if (scheme.is_deterministic() || n == 1) return {0.0, 1.0, 0.0, "full_batch", std::nullopt};

  if (scheme.is_single_element()) {
    const auto& p = scheme.probabilities();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, stats.L.at(i) / p[i]);
    ERConstants c;
    c.A = m / static_cast<double>(n);
    c.B = 0.0;
    // A = 0 only when every L_i is zero; then every g is constant and C = 0 needs no sigma*.
    c.C = c.A == 0.0 ? 0.0 : 2.0 * c.A * require_sigma_star(stats);
    c.provenance = "single_element";
    return c;
  }

  const double nn = static_cast<double>(n);
  const double tau = static_cast<double>(std::get<SamplingScheme::TauNice>(scheme.kind()).tau);
  ERConstants c;
  c.A = (nn - tau) * stats.L_max / (tau * (nn - 1.0));
  if (convexity_hint) {
    if (!stats.sigma_one)
      throw MetadataMissingError("x*-convex tau-nice constants need sigma_1");
    c.B = 1.0;
    c.C = 2.0 * (nn - tau) * *stats.sigma_one / (tau * (nn - 1.0));
    c.sigma_one = stats.sigma_one;
    c.provenance = "tau_nice_convex";
  } else {
    c.B = nn * (tau - 1.0) / (tau * (nn - 1.0));
    c.C = c.A == 0.0 ? 0.0 : 2.0 * c.A * require_sigma_star(stats);
    c.provenance = "tau_nice";
  }
  return c;
}

ERConstants er_preset(std::string_view name, const ERPresetParams& q) {
  for (double v : {q.sigma2, q.expected_smoothness, q.rho, q.alpha})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("er_preset", "preset parameters must be finite and non-negative");
  ERConstants c;
  c.provenance = std::string(name);
  if (name == "bounded_gradient") {
    c.C = q.sigma2;
  } else if (name == "bounded_variance") {
    c.B = 1.0;
    c.C = q.sigma2;
  } else if (name == "expected_smoothness") {
    c.A = 2.0 * q.expected_smoothness;
  } else if (name == "relaxed_growth_rho") {
    c.B = q.rho;
    c.C = q.sigma2;
  } else if (name == "relaxed_growth_alpha") {
    c.A = q.alpha;
    c.C = q.sigma2;
  } else {
    throw ConfigError("er_preset", "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

double expected_sq_norm_exact(const Problem& problem, const SamplingScheme& scheme,
                              const Vector& x) {
  Vector g;
  double e = 0.0;
  for (const auto& o : enumerate_outcomes(scheme)) {
    grad_stoch_into(problem, x, o.v, g);
    e += o.probability * g.squaredNorm();
  }
  return e;
}

ERReport verify_er(const Problem& problem, const SamplingScheme& scheme, const ERConstants& c,
                   RngStream& stream, const ERCheckOptions& options) {
  if (scheme.n() != problem.n())
    throw std::invalid_argument("sampling scheme and problem disagree on n");
  const ProblemStats& stats = problem.stats();
  const double f_low = stats.lower_bound();
  const auto d = static_cast<Eigen::Index>(problem.d());
  const Vector center = stats.x_star ? *stats.x_star : Vector::Zero(d);

  ERReport report;
  report.exact = scheme.is_enumerable();
  report.points = options.points;
  report.worst_slack = std::numeric_limits<double>::infinity();

  Vector x(d), g;
  for (std::size_t k = 0; k < options.points; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = center[j] + options.radius * stream.normal();

    double lhs, se = 0.0;
    if (report.exact) {
      lhs = expected_sq_norm_exact(problem, scheme, x);
    } else {
      // Welford over the draws.
      double mean = 0.0, m2 = 0.0;
      for (std::size_t s = 0; s < options.draws; ++s) {
        grad_stoch_into(problem, x, draw(scheme, stream), g);
        const double q = g.squaredNorm();
        const double delta = q - mean;
        mean += delta / static_cast<double>(s + 1);
        m2 += delta * (q - mean);
      }
      lhs = mean;
      const double draws = static_cast<double>(options.draws);
      se = options.draws > 1 ? std::sqrt(m2 / (draws - 1.0) / draws) : 0.0;
    }
    const double gap = std::max(0.0, eval_loss(problem, x) - f_low);
    const double rhs = 2.0 * c.A * gap + c.B * grad_full(problem, x).squaredNorm() + c.C;
    const double slack = rhs - lhs;
    const double allowed = options.standard_errors * se + 1e-12 * std::max(1.0, std::abs(rhs));
    if (slack < -allowed) ++report.violations;
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_standard_error = se;
      report.worst_point = x;
      report.worst_lhs = lhs;
      report.worst_rhs = rhs;
    }
  }
  report.passed = report.violations == 0;
  return report;
}

}  // namespace unisam
