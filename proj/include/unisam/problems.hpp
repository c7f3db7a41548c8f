#pragma once

#include "unisam/core.hpp"
#include "unisam/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace unisam {

/// How the singular values of a generated design matrix are laid out.
struct Spectrum {
  enum class Kind {
    /// Deterministic, log-uniformly spaced from s_max/cond up to s_max = 1.
    log_spaced,
    /// Drawn i.i.d. uniform on [lo, hi] from the spec's seed.
    uniform_random,
  };
  Kind kind = Kind::log_spaced;
  double lo = 1.0;
  double hi = 10.0;
};

std::string to_string(Spectrum::Kind kind);
Spectrum::Kind spectrum_kind_from_string(const std::string& name);

/// Settings for a generated design matrix A (n x d), targets b and l2 weight.
struct DesignSpec {
  std::size_t n = 100;
  std::size_t d = 100;
  double cond = 10.0;  ///< used by Spectrum::Kind::log_spaced
  double lambda_r = 0.0;
  std::uint64_t seed = 0;
  Spectrum spectrum;

  void validate() const;
};

/// b is standard Gaussian.
struct RidgeSpec : DesignSpec {};

/// Same design-matrix construction as ridge; labels are the signs of a
/// standard Gaussian draw.
struct LogisticSpec : DesignSpec {};

enum class Family { ridge, logistic };
std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Shared storage for the two generalized-linear families: a row-major
/// design matrix A (n x d), targets b and an l2 weight lambda_r.
class LinearModelProblem : public Problem {
 public:
  std::size_t n() const override { return static_cast<std::size_t>(A_.rows()); }
  std::size_t d() const override { return static_cast<std::size_t>(A_.cols()); }

  virtual Family family() const = 0;

  const RowMatrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  double lambda_r() const { return lambda_r_; }

  /// Seed and spectrum settings the matrix was generated from, if any.
  const std::optional<DesignSpec>& generated_from() const { return spec_; }

 protected:
  LinearModelProblem(RowMatrix A, Vector b, double lambda_r, std::optional<DesignSpec> spec);

  /// lambda_r/2 |x|^2, skipped when lambda_r = 0 so an overflowing |x|^2 is not turned into NaN.
  double reg(const Vector& x) const {
    return lambda_r_ == 0.0 ? 0.0 : 0.5 * lambda_r_ * x.squaredNorm();
  }

  RowMatrix A_;
  Vector b_;
  double lambda_r_;
  Vector row_norms_sq_;
  std::optional<DesignSpec> spec_;
};

/// f_i(x) = 1/2 (A[i,:] x - b_i)^2 + lambda_r/2 |x|^2.
class RidgeProblem final : public LinearModelProblem {
 public:
  /// Builds the problem and fills its metadata: L_i = |A[i,:]|^2 + lambda_r,
  /// mu = lambda_min(A^T A / n + lambda_r I) and the closed-form x*.
  /// When the regularized Hessian is singular, x* and mu are left empty and
  /// `stats().hessian_singular` is set.
  RidgeProblem(RowMatrix A, Vector b, double lambda_r,
               std::optional<DesignSpec> spec = std::nullopt);

  Family family() const override { return Family::ridge; }

  double component_value(std::size_t i, const Vector& x) const override;
  void add_component_grad(std::size_t i, const Vector& x, double weight,
                          Vector& out) const override;
  /// 1/2 b_i^2 lambda_r / (lambda_r + |A[i,:]|^2)
  std::optional<double> component_infimum(std::size_t i) const override;

  double value(const Vector& x) const override;
  void full_grad(const Vector& x, Vector& out) const override;
};

/// f_i(x) = 1/2 log(1 + exp(-b_i A[i,:] x)) + lambda_r/2 |x|^2, b_i in {-1, +1}.
///
/// The 1/2 matches the 1/(2n) prefactor of the averaged loss. Curvature of
/// the logistic part is at most 1/8 |A[i,:]|^2, so L_i = |A[i,:]|^2/8 + lambda_r.
/// With lambda_r > 0 the PL constant is taken as lambda_r and x* is found by
/// full-gradient descent; with lambda_r = 0 neither is recorded.
class LogisticProblem final : public LinearModelProblem {
 public:
  LogisticProblem(RowMatrix A, Vector b, double lambda_r,
                  std::optional<DesignSpec> spec = std::nullopt);

  Family family() const override { return Family::logistic; }

  double component_value(std::size_t i, const Vector& x) const override;
  void add_component_grad(std::size_t i, const Vector& x, double weight,
                          Vector& out) const override;
  std::optional<double> component_infimum(std::size_t i) const override;

  double value(const Vector& x) const override;
  void full_grad(const Vector& x, Vector& out) const override;

  /// Gradient-norm target and iteration cap for the x* solve.
  static constexpr double solve_tolerance = 1e-10;
  static constexpr std::size_t solve_max_iters = 1'000'000;

 private:
  std::vector<double> component_inf_;
};

/// U diag(s) V^T with U, V drawn as Q factors of Gaussian matrices.
RowMatrix generate_design(std::size_t n, std::size_t d, double cond, const Spectrum& spectrum,
                          RngStream& stream);

RidgeProblem gen_ridge(const RidgeSpec& spec);
LogisticProblem gen_logistic(const LogisticSpec& spec);

/// (1/n) sum_i (f_i(x*) - f_i^*). Throws MetadataMissingError without x* or
/// without a component infimum.
double sigma_star(const Problem& problem);
/// (1/n) sum_i |grad f_i(x*)|^2.
double sigma_one(const Problem& problem);

/// Serialization: the matrix is stored row-major next to b, lambda_r and the
/// generating spec. Doubles are written with round-trip precision, so a
/// reloaded problem evaluates bit-identically.
nlohmann::json problem_to_json(const LinearModelProblem& problem);
std::unique_ptr<LinearModelProblem> problem_from_json(const nlohmann::json& doc);

}  // namespace unisam
