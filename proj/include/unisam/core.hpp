#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace unisam {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace tolerance {
/// Default absolute tolerance for identities that hold exactly in real arithmetic.
inline constexpr double exact = 1e-9;
/// Gradient norms at or below this are treated as zero by the perturbation rule.
inline constexpr double zero_gradient = 1e-12;
/// Loss magnitude above which a run is declared divergent.
inline constexpr double divergence = 1e100;
}  // namespace tolerance

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or gradient evaluated to a non-finite value.
class NumericOverflowError : public Error {
 public:
  NumericOverflowError(std::size_t component, const std::string& what)
      : Error(what), component_(component) {}
  std::size_t component() const { return component_; }

 private:
  std::size_t component_;
};

/// Metadata the operation needs (x*, sigma*, mu, ...) is not available.
class MetadataMissingError : public Error {
 public:
  using Error::Error;
};

/// A constant that must be positive is zero (e.g. L_i = 0 for importance sampling).
class DegenerateConstantError : public Error {
 public:
  using Error::Error;
};

/// The optimizer produced a non-finite point.
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t iteration, const std::string& what)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// A configuration value failed validation; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// ---------------------------------------------------------------------------
// Problem metadata

/// Exact constants attached to a finite-sum problem. Optional fields are
/// absent when the generator could not establish them (e.g. no PL constant
/// for unregularized logistic regression).
struct ProblemStats {
  std::vector<double> L;  ///< per-component smoothness constants L_i
  double L_max = 0.0;     ///< max_i L_i
  /// Smoothness of the averaged objective f itself (at most L_max).
  std::optional<double> L_full;
  std::optional<double> mu;
  std::optional<Vector> x_star;
  std::optional<double> f_star;
  std::optional<double> sigma_star;
  /// (1/n) sum_i |grad f_i(x*)|^2, used by the x*-convex tau-nice constants.
  std::optional<double> sigma_one;
  std::optional<double> f_inf;
  /// Set when the regularized Hessian was singular and x*, mu were dropped.
  bool hessian_singular = false;

  /// f^inf if known, otherwise f(x*); throws MetadataMissingError if neither.
  double lower_bound() const;
};

// ---------------------------------------------------------------------------
// Sampling vectors

/// A realization of the sampling vector v. Stored sparse: components not
/// listed have v_i = 0. The full batch is represented explicitly so that an
/// all-ones vector is never spelled out as an n-long index list.
class SamplingVector {
 public:
  static SamplingVector full_batch(std::size_t n);
  /// Throws std::invalid_argument unless sizes match and every weight is > 0.
  static SamplingVector sparse(std::vector<std::size_t> indices, std::vector<double> weights);

  bool is_full_batch() const { return full_batch_; }
  /// Component count of the full batch; zero for sparse vectors.
  std::size_t full_batch_size() const { return full_n_; }
  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return full_batch_ ? full_n_ : indices_.size(); }

  /// Dense n-vector view, mainly for tests.
  Vector dense(std::size_t n) const;

 private:
  bool full_batch_ = false;
  std::size_t full_n_ = 0;
  std::vector<std::size_t> indices_;
  std::vector<double> weights_;
};

// ---------------------------------------------------------------------------
// Problems

/// f(x) = (1/n) sum_i f_i(x) with per-component value/gradient oracles.
///
/// Implementations are immutable after construction and may be shared
/// between threads.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::size_t n() const = 0;
  virtual std::size_t d() const = 0;

  virtual double component_value(std::size_t i, const Vector& x) const = 0;
  /// out += weight * grad f_i(x)
  virtual void add_component_grad(std::size_t i, const Vector& x, double weight,
                                  Vector& out) const = 0;
  /// inf_x f_i(x) when the family knows it.
  virtual std::optional<double> component_infimum(std::size_t /*i*/) const { return std::nullopt; }

  /// Mean of the components. Families override with a vectorized version;
  /// the result must agree with the component mean to rounding.
  virtual double value(const Vector& x) const;
  virtual void full_grad(const Vector& x, Vector& out) const;

  Vector component_grad(std::size_t i, const Vector& x) const;

  const ProblemStats& stats() const { return stats_; }

 protected:
  ProblemStats stats_;
};

/// (1/n) sum_i f_i(x). Throws NumericOverflowError naming the first
/// component whose value is not finite.
double eval_loss(const Problem& problem, const Vector& x);

/// (1/n) sum_i grad f_i(x).
Vector grad_full(const Problem& problem, const Vector& x);

/// (1/n) sum_{i in v} v_i grad f_i(x). Throws std::out_of_range for an index >= n.
Vector grad_stoch(const Problem& problem, const Vector& x, const SamplingVector& v);
void grad_stoch_into(const Problem& problem, const Vector& x, const SamplingVector& v, Vector& out);

}  // namespace unisam
