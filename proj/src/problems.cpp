#include "unisam/problems.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace unisam {

std::string to_string(Spectrum::Kind kind) {
  switch (kind) {
    case Spectrum::Kind::log_spaced: return "log_spaced";
    case Spectrum::Kind::uniform_random: return "uniform";
  }
  return "?";
}

Spectrum::Kind spectrum_kind_from_string(const std::string& name) {
  if (name == "log_spaced") return Spectrum::Kind::log_spaced;
  if (name == "uniform") return Spectrum::Kind::uniform_random;
  throw ConfigError("spectrum", "unknown spectrum '" + name + "' (expected log_spaced|uniform)");
}

std::string to_string(Family family) {
  return family == Family::ridge ? "ridge" : "logistic";
}

Family family_from_string(const std::string& name) {
  if (name == "ridge") return Family::ridge;
  if (name == "logistic") return Family::logistic;
  throw ConfigError("family", "unknown problem family '" + name + "' (expected ridge|logistic)");
}

void DesignSpec::validate() const {
  if (n < 1) throw ConfigError("n", "must be at least 1");
  if (d < 1) throw ConfigError("d", "must be at least 1");
  if (!(lambda_r >= 0.0) || !std::isfinite(lambda_r))
    throw ConfigError("lambda_r", "must be finite and non-negative");
  if (spectrum.kind == Spectrum::Kind::log_spaced) {
    if (!(cond >= 1.0) || !std::isfinite(cond))
      throw ConfigError("cond", "condition number must be finite and >= 1");
  } else {
    if (!(spectrum.lo > 0.0) || !(spectrum.hi >= spectrum.lo) || !std::isfinite(spectrum.hi))
      throw ConfigError("spectrum", "uniform spectrum needs 0 < lo <= hi");
  }
}

// ---------------------------------------------------------------------------

LinearModelProblem::LinearModelProblem(RowMatrix A, Vector b, double lambda_r,
                                       std::optional<DesignSpec> spec)
    : A_(std::move(A)), b_(std::move(b)), lambda_r_(lambda_r), spec_(std::move(spec)) {
  if (A_.rows() < 1 || A_.cols() < 1) throw std::invalid_argument("empty design matrix");
  if (b_.size() != A_.rows()) throw std::invalid_argument("b must have one entry per row of A");
  if (!(lambda_r_ >= 0.0)) throw std::invalid_argument("lambda_r must be non-negative");
  row_norms_sq_ = A_.rowwise().squaredNorm();
}

namespace {

void fill_smoothness(ProblemStats& stats, const Vector& curvature, double lambda_r) {
  stats.L.resize(static_cast<std::size_t>(curvature.size()));
  for (Eigen::Index i = 0; i < curvature.size(); ++i)
    stats.L[static_cast<std::size_t>(i)] = curvature[i] + lambda_r;
  stats.L_max = *std::max_element(stats.L.begin(), stats.L.end());
}

void fill_optimum_stats(ProblemStats& stats, const Problem& problem) {
  stats.f_star = problem.value(*stats.x_star);
  stats.f_inf = stats.f_star;
  stats.sigma_star = sigma_star(problem);
  stats.sigma_one = sigma_one(problem);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// 1 / (1 + exp(z))
double logistic_tail(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

// ---------------------------------------------------------------------------
// Ridge

RidgeProblem::RidgeProblem(RowMatrix A, Vector b, double lambda_r, std::optional<DesignSpec> spec)
    : LinearModelProblem(std::move(A), std::move(b), lambda_r, std::move(spec)) {
  fill_smoothness(stats_, row_norms_sq_, lambda_r_);

  const double inv_n = 1.0 / static_cast<double>(n());
  Eigen::MatrixXd hessian = A_.transpose() * A_ * inv_n;
  hessian.diagonal().array() += lambda_r_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  stats_.L_full = hi;

  if (lo <= 1e-12 * std::max(hi, 1e-300)) {
    stats_.hessian_singular = true;
    return;
  }
  stats_.mu = lo;
  const Vector rhs = A_.transpose() * b_ * inv_n;
  stats_.x_star = hessian.ldlt().solve(rhs);
  fill_optimum_stats(stats_, *this);
}

double RidgeProblem::component_value(std::size_t i, const Vector& x) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const double r = A_.row(idx).dot(x) - b_[idx];
  return 0.5 * r * r + reg(x);
}

void RidgeProblem::add_component_grad(std::size_t i, const Vector& x, double weight,
                                      Vector& out) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const double r = A_.row(idx).dot(x) - b_[idx];
  out.noalias() += (weight * r) * A_.row(idx).transpose();
  if (lambda_r_ != 0.0) out.noalias() += (weight * lambda_r_) * x;
}

std::optional<double> RidgeProblem::component_infimum(std::size_t i) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const double bi = b_[idx];
  const double denom = lambda_r_ + row_norms_sq_[idx];
  if (denom == 0.0) return 0.5 * bi * bi;  // zero row, no regularization
  return 0.5 * bi * bi * lambda_r_ / denom;
}

double RidgeProblem::value(const Vector& x) const {
  const Vector r = A_ * x - b_;
  return 0.5 * r.squaredNorm() / static_cast<double>(n()) + reg(x);
}

void RidgeProblem::full_grad(const Vector& x, Vector& out) const {
  const Vector r = A_ * x - b_;
  out.noalias() = A_.transpose() * r;
  out /= static_cast<double>(n());
  if (lambda_r_ != 0.0) out.noalias() += lambda_r_ * x;
}

// ---------------------------------------------------------------------------
// Logistic

LogisticProblem::LogisticProblem(RowMatrix A, Vector b, double lambda_r,
                                 std::optional<DesignSpec> spec)
    : LinearModelProblem(std::move(A), std::move(b), lambda_r, std::move(spec)) {
  for (Eigen::Index i = 0; i < b_.size(); ++i) {
    if (b_[i] != 1.0 && b_[i] != -1.0)
      throw std::invalid_argument("logistic labels must be -1 or +1");
  }
  fill_smoothness(stats_, row_norms_sq_ / 8.0, lambda_r_);

  const double inv_n = 1.0 / static_cast<double>(n());
  const Eigen::MatrixXd gram = A_.transpose() * A_ * inv_n;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double L_full = eig.eigenvalues().maxCoeff() / 8.0 + lambda_r_;
  stats_.L_full = L_full;

  // Component infima: f_i restricted to the line through A[i,:] is a 1-D
  // convex function whose minimizer lies in [-s/(2 lambda_r), s/(2 lambda_r)].
  component_inf_.resize(n());
  for (std::size_t i = 0; i < n(); ++i) {
    const double s = std::sqrt(row_norms_sq_[static_cast<Eigen::Index>(i)]);
    if (s == 0.0) {
      component_inf_[i] = 0.5 * std::log(2.0);
    } else if (lambda_r_ == 0.0) {
      component_inf_[i] = 0.0;  // approached as t -> infinity, never attained
    } else {
      const double lam = lambda_r_;
      auto line = [s, lam](double t) { return 0.5 * softplus(-s * t) + 0.5 * lam * t * t; };
      const double bound = s / (2.0 * lam);
      const auto res = boost::math::tools::brent_find_minima(
          line, -bound, bound, std::numeric_limits<double>::digits / 2);
      component_inf_[i] = res.second;
    }
  }

  if (lambda_r_ == 0.0) return;
  stats_.mu = lambda_r_;

  Vector x = Vector::Zero(static_cast<Eigen::Index>(d()));
  Vector g;
  const double step = 1.0 / L_full;
  std::size_t it = 0;
  for (; it < solve_max_iters; ++it) {
    full_grad(x, g);
    if (g.norm() <= solve_tolerance) break;
    x.noalias() -= step * g;
  }
  if (it == solve_max_iters)
    throw Error("logistic x* solve did not reach gradient norm 1e-10 within the iteration cap");
  stats_.x_star = std::move(x);
  fill_optimum_stats(stats_, *this);
}

double LogisticProblem::component_value(std::size_t i, const Vector& x) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const double z = b_[idx] * A_.row(idx).dot(x);
  return 0.5 * softplus(-z) + reg(x);
}

void LogisticProblem::add_component_grad(std::size_t i, const Vector& x, double weight,
                                         Vector& out) const {
  const auto idx = static_cast<Eigen::Index>(i);
  const double z = b_[idx] * A_.row(idx).dot(x);
  const double coeff = -0.5 * b_[idx] * logistic_tail(z);
  out.noalias() += (weight * coeff) * A_.row(idx).transpose();
  if (lambda_r_ != 0.0) out.noalias() += (weight * lambda_r_) * x;
}

std::optional<double> LogisticProblem::component_infimum(std::size_t i) const {
  return component_inf_.at(i);
}

double LogisticProblem::value(const Vector& x) const {
  const Vector z = b_.cwiseProduct(A_ * x);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) sum += softplus(-z[i]);
  return 0.5 * sum / static_cast<double>(n()) + reg(x);
}

void LogisticProblem::full_grad(const Vector& x, Vector& out) const {
  const Vector z = b_.cwiseProduct(A_ * x);
  Vector coeff(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) coeff[i] = -0.5 * b_[i] * logistic_tail(z[i]);
  out.noalias() = A_.transpose() * coeff;
  out /= static_cast<double>(n());
  if (lambda_r_ != 0.0) out.noalias() += lambda_r_ * x;
}

// ---------------------------------------------------------------------------
// Generators

RowMatrix generate_design(std::size_t n, std::size_t d, double cond, const Spectrum& spectrum,
                          RngStream& stream) {
  const std::size_t k = std::min(n, d);
  std::vector<double> s(k);
  if (spectrum.kind == Spectrum::Kind::log_spaced) {
    for (std::size_t j = 0; j < k; ++j) {
      const double frac = k == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(k - 1);
      s[j] = std::pow(cond, -frac);
    }
  } else {
    for (auto& v : s) v = spectrum.lo + (spectrum.hi - spectrum.lo) * stream.uniform01();
    std::sort(s.begin(), s.end(), std::greater<>());
  }

  auto orthonormal_columns = [&stream, k](std::size_t rows) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = stream.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ() *
                           Eigen::MatrixXd::Identity(g.rows(), g.cols()));
  };
  const Eigen::MatrixXd U = orthonormal_columns(n);
  const Eigen::MatrixXd V = orthonormal_columns(d);
  const Eigen::Map<const Vector> sv(s.data(), static_cast<Eigen::Index>(k));
  return RowMatrix(U * sv.asDiagonal() * V.transpose());
}

RidgeProblem gen_ridge(const RidgeSpec& spec) {
  spec.validate();
  RngStream stream(spec.seed);
  RowMatrix A = generate_design(spec.n, spec.d, spec.cond, spec.spectrum, stream);
  Vector b(static_cast<Eigen::Index>(spec.n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = stream.normal();
  return RidgeProblem(std::move(A), std::move(b), spec.lambda_r, DesignSpec(spec));
}

LogisticProblem gen_logistic(const LogisticSpec& spec) {
  spec.validate();
  RngStream stream(spec.seed);
  RowMatrix A = generate_design(spec.n, spec.d, spec.cond, spec.spectrum, stream);
  Vector b(static_cast<Eigen::Index>(spec.n));
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = stream.normal() >= 0.0 ? 1.0 : -1.0;
  return LogisticProblem(std::move(A), std::move(b), spec.lambda_r, DesignSpec(spec));
}

double sigma_star(const Problem& problem) {
  const auto& x_star = problem.stats().x_star;
  if (!x_star) throw MetadataMissingError("sigma*: the problem has no known minimizer x*");
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const auto inf = problem.component_infimum(i);
    if (!inf) throw MetadataMissingError("sigma*: component infimum unknown for this family");
    sum += problem.component_value(i, *x_star) - *inf;
  }
  // Rounding can leave a tiny negative residue in the interpolated case.
  return std::max(0.0, sum / static_cast<double>(problem.n()));
}

double sigma_one(const Problem& problem) {
  const auto& x_star = problem.stats().x_star;
  if (!x_star) throw MetadataMissingError("sigma_1: the problem has no known minimizer x*");
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i)
    sum += problem.component_grad(i, *x_star).squaredNorm();
  return sum / static_cast<double>(problem.n());
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json problem_to_json(const LinearModelProblem& problem) {
  nlohmann::json doc;
  doc["format"] = "unisam-problem";
  doc["version"] = 1;
  doc["family"] = to_string(problem.family());
  doc["n"] = problem.n();
  doc["d"] = problem.d();
  doc["lambda_r"] = problem.lambda_r();
  if (const auto& spec = problem.generated_from()) {
    doc["spec"] = {{"n", spec->n},
                   {"d", spec->d},
                   {"cond", spec->cond},
                   {"lambda_r", spec->lambda_r},
                   {"seed", spec->seed},
                   {"spectrum", to_string(spec->spectrum.kind)},
                   {"spectrum_lo", spec->spectrum.lo},
                   {"spectrum_hi", spec->spectrum.hi}};
  } else {
    doc["spec"] = nullptr;
  }
  const RowMatrix& A = problem.A();
  doc["A"] = std::vector<double>(A.data(), A.data() + A.size());
  doc["b"] = std::vector<double>(problem.b().data(), problem.b().data() + problem.b().size());
  return doc;
}

std::unique_ptr<LinearModelProblem> problem_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "unisam-problem")
    throw ConfigError("format", "not a unisam problem document");
  const auto n = doc.at("n").get<std::size_t>();
  const auto d = doc.at("d").get<std::size_t>();
  const auto flat = doc.at("A").get<std::vector<double>>();
  const auto bvec = doc.at("b").get<std::vector<double>>();
  if (flat.size() != n * d) throw ConfigError("A", "expected n*d entries");
  if (bvec.size() != n) throw ConfigError("b", "expected n entries");
  RowMatrix A = Eigen::Map<const RowMatrix>(flat.data(), static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(d));
  Vector b = Eigen::Map<const Vector>(bvec.data(), static_cast<Eigen::Index>(n));
  const double lambda_r = doc.at("lambda_r").get<double>();

  std::optional<DesignSpec> spec;
  if (doc.contains("spec") && !doc["spec"].is_null()) {
    const auto& s = doc["spec"];
    DesignSpec ds;
    ds.n = s.at("n").get<std::size_t>();
    ds.d = s.at("d").get<std::size_t>();
    ds.cond = s.at("cond").get<double>();
    ds.lambda_r = s.at("lambda_r").get<double>();
    ds.seed = s.at("seed").get<std::uint64_t>();
    ds.spectrum.kind = spectrum_kind_from_string(s.at("spectrum").get<std::string>());
    ds.spectrum.lo = s.at("spectrum_lo").get<double>();
    ds.spectrum.hi = s.at("spectrum_hi").get<double>();
    spec = ds;
  }

  switch (family_from_string(doc.at("family").get<std::string>())) {
    case Family::ridge:
      return std::make_unique<RidgeProblem>(std::move(A), std::move(b), lambda_r, spec);
    case Family::logistic:
      return std::make_unique<LogisticProblem>(std::move(A), std::move(b), lambda_r, spec);
  }
  return nullptr;
}

}  // namespace unisam
