#include "unisam/core.hpp"

#include <cmath>
#include <string>

namespace unisam {

double ProblemStats::lower_bound() const {
  if (f_inf) return *f_inf;
  if (f_star) return *f_star;
  throw MetadataMissingError("neither f_inf nor f(x*) is known for this problem");
}

SamplingVector SamplingVector::full_batch(std::size_t n) {
  if (n == 0) throw std::invalid_argument("full batch over zero components");
  SamplingVector v;
  v.full_batch_ = true;
  v.full_n_ = n;
  return v;
}

SamplingVector SamplingVector::sparse(std::vector<std::size_t> indices,
                                      std::vector<double> weights) {
  if (indices.size() != weights.size())
    throw std::invalid_argument("sampling vector: indices and weights differ in length");
  if (indices.empty()) throw std::invalid_argument("sampling vector: no active components");
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("sampling vector: weights must be finite and strictly positive");
  }
  SamplingVector v;
  v.indices_ = std::move(indices);
  v.weights_ = std::move(weights);
  return v;
}

Vector SamplingVector::dense(std::size_t n) const {
  if (full_batch_) return Vector::Ones(static_cast<Eigen::Index>(n));
  Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < indices_.size(); ++k) out[indices_[k]] += weights_[k];
  return out;
}

double Problem::value(const Vector& x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n(); ++i) sum += component_value(i, x);
  return sum / static_cast<double>(n());
}

void Problem::full_grad(const Vector& x, Vector& out) const {
  out.setZero(static_cast<Eigen::Index>(d()));
  const double w = 1.0 / static_cast<double>(n());
  for (std::size_t i = 0; i < n(); ++i) add_component_grad(i, x, w, out);
}

Vector Problem::component_grad(std::size_t i, const Vector& x) const {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(d()));
  add_component_grad(i, x, 1.0, out);
  return out;
}

namespace {

void check_point(const Problem& problem, const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != problem.d())
    throw std::invalid_argument("point has dimension " + std::to_string(x.size()) +
                                ", problem expects " + std::to_string(problem.d()));
}

[[noreturn]] void report_overflow(const Problem& problem, const Vector& x) {
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const double v = problem.component_value(i, x);
    if (!std::isfinite(v))
      throw NumericOverflowError(i, "component " + std::to_string(i) +
                                        " evaluated to a non-finite value");
  }
  throw NumericOverflowError(problem.n(), "sum of components overflowed");
}

}  // namespace

double eval_loss(const Problem& problem, const Vector& x) {
  check_point(problem, x);
  const double v = problem.value(x);
  if (!std::isfinite(v)) report_overflow(problem, x);
  return v;
}

Vector grad_full(const Problem& problem, const Vector& x) {
  check_point(problem, x);
  Vector out;
  problem.full_grad(x, out);
  if (!out.allFinite()) report_overflow(problem, x);
  return out;
}

void grad_stoch_into(const Problem& problem, const Vector& x, const SamplingVector& v,
                     Vector& out) {
  if (v.is_full_batch()) {
    if (v.full_batch_size() != problem.n())
      throw std::out_of_range("full-batch sampling vector does not match problem size");
    problem.full_grad(x, out);
    return;
  }
  out.setZero(static_cast<Eigen::Index>(problem.d()));
  const double n = static_cast<double>(problem.n());
  const auto idx = v.indices();
  const auto w = v.weights();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= problem.n())
      throw std::out_of_range("sampling index " + std::to_string(idx[k]) + " outside [0, " +
                              std::to_string(problem.n()) + ")");
    problem.add_component_grad(idx[k], x, w[k] / n, out);
  }
}

Vector grad_stoch(const Problem& problem, const Vector& x, const SamplingVector& v) {
  check_point(problem, x);
  Vector out;
  grad_stoch_into(problem, x, v, out);
  return out;
}

}  // namespace unisam
