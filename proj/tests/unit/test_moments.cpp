#include "helpers.hpp"

using namespace tiltlik;
using testutil::vec;

TEST_CASE("log utility euler examples") {
  EulerLogUtility m;
  CHECK(m.evaluate(vec({1, 1 / 0.85}), vec({1, 1}), vec({0.85}))(0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(m.evaluate(vec({2, 2}), vec({1, 1}), vec({0.85}))(0) == doctest::Approx(-0.15).epsilon(1e-15));
  CHECK(m.evaluate(vec({3.0, 1.5}), vec({2.0, 0.7}), vec({1.0}))(0) == doctest::Approx(0.0));
  CHECK(m.jacobian(vec({1, 1}), vec({1, 1}), vec({0.85}))(0, 0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(m.evaluate(vec({0, 1}), vec({1, 1}), vec({0.85})), DomainError);
  CHECK_THROWS_AS(m.evaluate(vec({1, 1}), vec({-1, 1}), vec({0.85})), DomainError);
}

TEST_CASE("crra euler examples and nesting") {
  EulerCrra crra;
  EulerLogUtility log_u;
  CHECK(crra.evaluate(vec({1.3, 1 / 0.85}), vec({1.3, 1}), vec({0.85, 5}))(0) == doctest::Approx(0.0));
  CHECK(crra.evaluate(vec({2, 2}), vec({1, 1}), vec({0.85, 2}))(0) == doctest::Approx(-0.575).epsilon(1e-14));
  CHECK(crra.jacobian(vec({1.4, 1.1}), vec({1.4, 1}), vec({0.9, 3}))(0, 1) == doctest::Approx(0.0));
  RandomStream rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vector x = vec({std::exp(0.3 * rng.normal()), std::exp(0.3 * rng.normal())});
    const Vector z = vec({std::exp(0.3 * rng.normal()), 1.0});
    const double beta = 0.5 + 0.5 * rng.uniform();
    CHECK(crra.evaluate(x, z, vec({beta, 1.0}))(0) == doctest::Approx(log_u.evaluate(x, z, vec({beta}))(0)).epsilon(1e-14));
  }
}

TEST_CASE("quadratic euler examples") {
  EulerQuadratic q;
  CHECK(q.evaluate(vec({2.0, 0.5}), vec({1.0, 7.0}), vec({1.0}))(0) == doctest::Approx(0.0));
  CHECK(q.evaluate(vec({1, 1}), vec({0.85, 1}), vec({0.85}))(0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("quadratic euler has zero mean under the closed-form tilted normal") {
  EulerQuadratic q;
  for (double c : {0.1, 0.4, 0.7}) {
    for (double r : {0.5, 1.0, 1.5}) {
      for (double beta : {0.85, 0.95}) {
        for (double rho : {0.3, 0.6}) {
          const auto t = oracle::closed_form_tilted_normal(c, r, beta, rho, rho);
          Matrix chol(2, 2);
          chol << std::sqrt(t.var_c), 0.0, t.cov / std::sqrt(t.var_c),
              std::sqrt(t.var_r - t.cov * t.cov / t.var_c);
          const double e = oracle::gh_expectation(
              [&](const oracle::Vec& x) { return q.evaluate(x, vec({c, r}), vec({beta}))(0); }, t.mean, chol, 12);
          CHECK(std::abs(e) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("analytic jacobians match finite differences on random draws") {
  const std::vector<std::shared_ptr<MomentModel>> models = {
      std::make_shared<EulerLogUtility>(), std::make_shared<EulerCrra>(), std::make_shared<EulerQuadratic>(),
      std::make_shared<QuadraticCovarianceRestriction>(0.5, 0.4), std::make_shared<EulerLogGrowth>()};
  RandomStream rng(2);
  for (const auto& m : models) {
    for (int k = 0; k < 1000; ++k) {
      const Vector x = vec({std::exp(0.3 * rng.normal()), std::exp(0.3 * rng.normal())});
      const Vector z = vec({std::exp(0.3 * rng.normal()), std::exp(0.3 * rng.normal())});
      Vector theta(m->theta_dim());
      theta(0) = 0.5 + 0.5 * rng.uniform();
      if (theta.size() > 1) theta(1) = 0.5 + 5 * rng.uniform();
      const Matrix an = m->jacobian(x, z, theta);
      for (Index a = 0; a < m->theta_dim(); ++a) {
        const double fd = oracle::gradient([&](const Vector& t) { return m->evaluate(x, z, t)(0); }, theta, 1e-6)(a);
        CHECK(std::abs(an(0, a) - fd) / (1 + std::abs(fd)) < 1e-5);
      }
    }
  }
}

TEST_CASE("vectorized evaluation matches pointwise evaluation") {
  const std::vector<std::shared_ptr<MomentModel>> models = {
      std::make_shared<EulerLogUtility>(), std::make_shared<EulerCrra>(), std::make_shared<EulerQuadratic>(),
      std::make_shared<QuadraticCovarianceRestriction>(0.5, 0.4), std::make_shared<EulerLogGrowth>()};
  RandomStream rng(3);
  Matrix draws(20, 2);
  for (Index j = 0; j < 20; ++j) draws.row(j) << std::exp(0.3 * rng.normal()), std::exp(0.3 * rng.normal());
  const Vector z = vec({1.1, 0.9});
  for (const auto& m : models) {
    const Vector theta = m->theta_dim() == 1 ? vec({0.9}) : vec({0.9, 2.5});
    const Matrix e = m->evaluate_draws(draws, z, theta);
    const Matrix j = m->jacobian_draws(draws, z, theta);
    for (Index r = 0; r < 20; ++r) {
      const Vector x = draws.row(r).transpose();
      CHECK(std::abs(e(r, 0) - m->evaluate(x, z, theta)(0)) < 1e-13);
      CHECK((j.row(r).transpose() - m->jacobian(x, z, theta).transpose()).norm() < 1e-12);
    }
  }
}

TEST_CASE("moment models by name") {
  CHECK(make_moment_model("euler_log")->name() == "euler_log");
  CHECK(make_moment_model("euler_crra")->theta_dim() == 2);
  CHECK(make_moment_model("euler_quadratic")->name() == "euler_quadratic");
  CHECK_THROWS_AS(make_moment_model("nope"), InvalidParameter);
}
