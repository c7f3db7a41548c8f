#include "doctest.h"
#include "oracles.hpp"

#include "unisam/core.hpp"
#include "unisam/problems.hpp"
#include "unisam/sampling.hpp"

#include <cmath>
#include <limits>

using namespace unisam;

namespace {

RidgeProblem identity_ridge(std::size_t n) {
  return RidgeProblem(RowMatrix::Identity(n, n), Vector::Zero(n), 0.0);
}

Vector random_point(RngStream& s, std::size_t d, double scale = 1.0) {
  Vector x(d);
  for (std::size_t j = 0; j < d; ++j) x[j] = scale * s.normal();
  return x;
}

RidgeProblem small_ridge() {
  RidgeSpec spec;
  spec.n = 12;
  spec.d = 5;
  spec.cond = 4.0;
  spec.lambda_r = 0.1;
  spec.seed = 7;
  return gen_ridge(spec);
}

LogisticProblem small_logistic(double lambda_r = 0.05) {
  LogisticSpec spec;
  spec.n = 10;
  spec.d = 4;
  spec.cond = 3.0;
  spec.lambda_r = lambda_r;
  spec.seed = 11;
  return gen_logistic(spec);
}

}  // namespace

TEST_CASE("eval_loss on the identity ridge") {
  const auto p = identity_ridge(5);
  CHECK(eval_loss(p, Vector::Zero(5)) == 0.0);
  Vector e1 = Vector::Zero(5);
  e1[0] = 1.0;
  CHECK(eval_loss(p, e1) == doctest::Approx(1.0 / 10.0).epsilon(1e-15));
}

TEST_CASE("logistic loss at the origin is half log 2") {
  const auto p = small_logistic(0.0);
  CHECK(eval_loss(p, Vector::Zero(4)) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("grad_full on the identity ridge is x/n") {
  const auto p = identity_ridge(4);
  RngStream s(1);
  const Vector x = random_point(s, 4);
  CHECK((grad_full(p, x) - x / 4.0).norm() <= 1e-15);
}

TEST_CASE("value agrees with the component mean") {
  RngStream s(2);
  const auto r = small_ridge();
  const auto l = small_logistic();
  for (const Problem* p : {static_cast<const Problem*>(&r), static_cast<const Problem*>(&l)}) {
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_point(s, p->d(), 2.0);
      double mean = 0.0;
      for (std::size_t i = 0; i < p->n(); ++i) mean += p->component_value(i, x);
      mean /= static_cast<double>(p->n());
      CHECK(oracle::rel_err(eval_loss(*p, x), mean) <= 1e-12);
      Vector gm = Vector::Zero(static_cast<Eigen::Index>(p->d()));
      for (std::size_t i = 0; i < p->n(); ++i) gm += p->component_grad(i, x);
      gm /= static_cast<double>(p->n());
      CHECK((grad_full(*p, x) - gm).norm() <= 1e-12 * std::max(1.0, gm.norm()));
    }
  }
}

TEST_CASE("gradients match central finite differences") {
  RngStream s(3);
  const auto r = small_ridge();
  const auto l = small_logistic();
  for (const Problem* p : {static_cast<const Problem*>(&r), static_cast<const Problem*>(&l)}) {
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_point(s, p->d());
      for (std::size_t i = 0; i < p->n(); ++i) {
        const Vector fd =
            oracle::fd_grad([&](const Vector& y) { return p->component_value(i, y); }, x);
        const Vector g = p->component_grad(i, x);
        CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
      }
      const Vector fd = oracle::fd_grad([&](const Vector& y) { return eval_loss(*p, y); }, x);
      const Vector g = grad_full(*p, x);
      CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    }
  }
}

TEST_CASE("grad_stoch special cases") {
  const auto p = small_ridge();
  RngStream s(4);
  const Vector x = random_point(s, p.d());
  CHECK(grad_stoch(p, x, SamplingVector::full_batch(p.n())) == grad_full(p, x));

  const double n = static_cast<double>(p.n());
  const Vector gi = p.component_grad(3, x);
  CHECK((grad_stoch(p, x, SamplingVector::sparse({3}, {n})) - gi).norm() <= 1e-14 * gi.norm());

  const double pi = 0.2;
  const Vector gw = grad_stoch(p, x, SamplingVector::sparse({3}, {1.0 / pi}));
  CHECK((gw - gi / (n * pi)).norm() <= 1e-14 * gi.norm());
}

TEST_CASE("grad_stoch rejects an index out of range") {
  const auto p = small_ridge();
  CHECK_THROWS_AS(grad_stoch(p, Vector::Zero(5), SamplingVector::sparse({12}, {1.0})),
                  std::out_of_range);
}

TEST_CASE("sampling vectors need positive weights") {
  CHECK_THROWS_AS(SamplingVector::sparse({0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(SamplingVector::sparse({0, 1}, {1.0}), std::invalid_argument);
  const Vector dense = SamplingVector::sparse({1, 3}, {2.0, 2.0}).dense(4);
  CHECK(dense == Vector((Vector(4) << 0.0, 2.0, 0.0, 2.0).finished()));
}

TEST_CASE("overflow names the offending component") {
  const auto p = identity_ridge(3);
  Vector x = Vector::Ones(3) * 1e200;
  try {
    eval_loss(p, x);
    FAIL("expected an overflow");
  } catch (const NumericOverflowError& e) {
    CHECK(e.component() == 0);
  }
  x[0] = x[1] = 0.0;
  try {
    eval_loss(p, x);
    FAIL("expected an overflow");
  } catch (const NumericOverflowError& e) {
    CHECK(e.component() == 2);
  }
}

TEST_CASE("stochastic gradients are unbiased") {
  const auto p = small_ridge();
  const std::size_t n = p.n();
  std::vector<double> probs(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (probs[i] = 1.0 + static_cast<double>(i % 3));
  for (auto& q : probs) q /= total;

  const std::vector<SamplingScheme> schemes = {
      SamplingScheme::uniform(n), SamplingScheme::single_element(probs),
      SamplingScheme::tau_nice(n, 4), SamplingScheme::full_batch(n)};
  RngStream pts(5);
  const std::size_t M = 100000;
  for (const auto& scheme : schemes) {
    RngStream s(6);
    for (int k = 0; k < 10; ++k) {
      const Vector x = random_point(pts, p.d());
      const Vector g = grad_full(p, x);
      Vector sum = Vector::Zero(g.size()), sumsq = Vector::Zero(g.size());
      for (std::size_t m = 0; m < M; ++m) {
        const Vector gs = grad_stoch(p, x, draw(scheme, s));
        sum += gs;
        sumsq += gs.cwiseProduct(gs);
      }
      const Vector mean = sum / double(M);
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        const double var = std::max(0.0, sumsq[j] / double(M) - mean[j] * mean[j]);
        const double se = std::sqrt(var / double(M));
        CHECK(std::abs(mean[j] - g[j]) <= 4.0 * se + 1e-12);
      }
    }
  }
}
