#pragma once

#include "unisam/core.hpp"
#include "unisam/rng.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace unisam {

/// Distribution over sampling vectors v with E[v_i] = 1.
///
/// - single element: P[v = e_i / p_i] = p_i
/// - tau-nice:       P[v = (n/tau) sum_{i in S} e_i] = 1 / C(n, tau)
/// - full batch:     v = 1
class SamplingScheme {
 public:
  struct SingleElement {
    std::vector<double> p;
  };
  struct TauNice {
    std::size_t tau;
  };
  struct FullBatch {};
  using Kind = std::variant<SingleElement, TauNice, FullBatch>;

  static SamplingScheme uniform(std::size_t n);
  /// p must be a probability vector with every entry in (0, 1].
  static SamplingScheme single_element(std::vector<double> p);
  static SamplingScheme tau_nice(std::size_t n, std::size_t tau);
  static SamplingScheme full_batch(std::size_t n);

  std::size_t n() const { return n_; }
  const Kind& kind() const { return kind_; }

  bool is_single_element() const { return std::holds_alternative<SingleElement>(kind_); }
  bool is_tau_nice() const { return std::holds_alternative<TauNice>(kind_); }
  /// Full batch, or tau-nice with tau = n.
  bool is_deterministic() const;
  /// Expected batch size per draw (1 for single element, n for full batch).
  std::size_t batch_size() const;
  /// Outcomes that can be enumerated in at most n steps (single element, full batch).
  bool is_enumerable() const { return is_single_element() || is_deterministic(); }

  /// Probability of selecting i under single-element sampling.
  const std::vector<double>& probabilities() const;

  std::string label() const;

 private:
  SamplingScheme(std::size_t n, Kind kind);

  std::size_t n_;
  Kind kind_;
  std::vector<double> cdf_;  // single element only
  bool uniform_ = false;

  friend SamplingVector draw(const SamplingScheme&, RngStream&);
};

/// One realization of v. tau-nice uses a sparse partial Fisher-Yates
/// shuffle, so a draw costs O(tau) regardless of n.
SamplingVector draw(const SamplingScheme& scheme, RngStream& stream);

/// One outcome of an enumerable scheme together with its probability.
struct WeightedOutcome {
  SamplingVector v;
  double probability;
};
/// All outcomes of a single-element or full-batch scheme.
std::vector<WeightedOutcome> enumerate_outcomes(const SamplingScheme& scheme);

/// p_i = L_i / sum_j L_j. Any L_i = 0 raises DegenerateConstantError unless
/// `floor` is given, in which case L_i is replaced by max(L_i, floor).
std::vector<double> importance_probs(const ProblemStats& stats,
                                     std::optional<double> floor = std::nullopt);

/// Largest Lipschitz constant of grad f_v over the realizations of v:
/// max_i L_i/(n p_i) for single element, L_max for tau-nice, the smoothness
/// of f itself for the full batch (falls back to L_max if unknown).
double estimator_smoothness(const SamplingScheme& scheme, const ProblemStats& stats);

// ---------------------------------------------------------------------------
// Expected Residual constants

/// E|g(x)|^2 <= 2A [f(x) - f_inf] + B |grad f(x)|^2 + C
struct ERConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  /// Which formula or preset produced the triple.
  std::string provenance;
  /// sigma_1 when the x*-convex tau-nice formula was used.
  std::optional<double> sigma_one;

  ERConstants scaled(double factor) const;
};

/// Closed-form constants for the given scheme.
///
/// single element:   A = (1/n) max_i L_i/p_i, B = 0, C = 2 A sigma*
/// tau-nice:         A = (n-tau) L_max / (tau (n-1)), B = n (tau-1) / (tau (n-1)), C = 2 A sigma*
/// tau-nice, x*-convex (convexity_hint): same A, B = 1, C = 2 (n-tau) sigma_1 / (tau (n-1))
/// full batch:       (0, 1, 0)
///
/// The single-element formula is sometimes quoted with an extra 1/tau; a
/// singleton draw has tau = 1, so the factor is dropped here.
///
/// C needs sigma* (or sigma_1); when it is unknown the call throws
/// MetadataMissingError rather than guessing. tau-nice with n = 1 returns the
/// full-batch constants.
ERConstants er_constants(const SamplingScheme& scheme, const ProblemStats& stats,
                         bool convexity_hint = false);

/// Parameters for the assumption-based presets. Unused fields are ignored.
struct ERPresetParams {
  double sigma2 = 0.0;
  double expected_smoothness = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
};

/// bounded_gradient (0,0,s2), bounded_variance (0,1,s2), expected_smoothness
/// (2 L, 0, 0), relaxed_growth_rho (0, rho, s2), relaxed_growth_alpha (alpha, 0, s2).
/// Unknown names raise ConfigError.
ERConstants er_preset(std::string_view name, const ERPresetParams& params);

struct ERReport {
  bool passed = true;
  bool exact = false;  ///< expectation computed by enumeration
  std::size_t points = 0;
  std::size_t violations = 0;
  /// Smallest RHS - E|g|^2 seen, with its standard error and location.
  double worst_slack = 0.0;
  double worst_standard_error = 0.0;
  Vector worst_point;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
};

struct ERCheckOptions {
  std::size_t points = 100;
  std::size_t draws = 10000;
  /// Points are x_ref + radius * N(0, I), x_ref = x* when known, else 0.
  double radius = 1.0;
  double standard_errors = 4.0;
};

/// E|g(x)|^2 from the exact outcome list of an enumerable scheme.
double expected_sq_norm_exact(const Problem& problem, const SamplingScheme& scheme,
                              const Vector& x);

/// Checks the ER inequality at random points. Enumerable schemes are checked
/// exactly; tau-nice uses Monte Carlo and allows `standard_errors` SE of slack.
ERReport verify_er(const Problem& problem, const SamplingScheme& scheme, const ERConstants& c,
                   RngStream& stream, const ERCheckOptions& options = {});

}  // namespace unisam
