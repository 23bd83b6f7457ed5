#include "helpers.hpp"

#include "tiltlik/projection.hpp"

using testutil::vec;

TEST_CASE("gauss-hermite polynomial exactness") {
  const oracle::Vec m0 = oracle::Vec::Zero(1);
  const oracle::Mat l1 = oracle::Mat::Identity(1, 1);
  CHECK(oracle::gh_expectation([](const oracle::Vec&) { return 1.0; }, m0, l1, 2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(oracle::gh_expectation([](const oracle::Vec& x) { return x(0) * x(0); }, m0, l1, 2) ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(oracle::gh_expectation([](const oracle::Vec& x) { return std::pow(x(0), 4); }, m0, l1, 3) ==
        doctest::Approx(3.0).epsilon(1e-13));
  CHECK(std::abs(oracle::gauss_hermite_tensor(7, 2).log_weights.array().exp().sum() - 1.0) < 1e-14);
  CHECK_THROWS_AS(oracle::gauss_hermite(1), std::invalid_argument);
  CHECK_THROWS_AS(oracle::gh_expectation([](const oracle::Vec&) { return NAN; }, m0, l1, 4), std::domain_error);
}

TEST_CASE("gauss-hermite product moment generating function") {
  const oracle::Vec m0 = oracle::Vec::Zero(2);
  const oracle::Mat l = oracle::Mat::Identity(2, 2);
  for (double mu : {-0.6, -0.2, 0.3, 0.5}) {
    const auto f = [mu](const oracle::Vec& x) { return std::exp(mu * x(0) * x(1)); };
    const double exact = 1.0 / std::sqrt(1.0 - mu * mu);
    const double e40 = oracle::gh_expectation(f, m0, l, 40);
    CHECK(std::abs(e40 - exact) / exact < 1e-10);
    CHECK(std::abs(oracle::gh_expectation(f, m0, l, 80) - e40) < 1e-10);
  }
}

TEST_CASE("closed-form tilted normal") {
  CHECK(oracle::closed_form_tilted_normal(0.0, 1.0, 0.9, 0.5, 0.5).cov == 0.0);
  const auto t = oracle::closed_form_tilted_normal(0.5, 2.0, 0.9, 0.5, 0.5);
  CHECK(t.cov == doctest::Approx(0.3056).epsilon(1e-3));
  CHECK(t.mean(0) == doctest::Approx(0.25));
  CHECK(t.mean(1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(oracle::closed_form_tilted_normal(2.0, 0.0, 0.9, 0.5, 0.5), std::domain_error);
}

TEST_CASE("library multiplier reproduces the required covariance through the tilt algebra") {
  for (double c : {0.1, 0.5, 1.2}) {
    for (double r : {0.3, 1.0, 2.5}) {
      for (double rho : {0.2, 0.7}) {
        const double k = oracle::required_covariance(c, r, 0.9, rho, rho);
        const double mu = tiltlik::analytic_gaussian_tilt(c, r, 0.9, rho, rho);
        CHECK(std::abs(mu / (1 - mu * mu) - k) < 1e-8);
        CHECK(std::abs(oracle::exact_gaussian_tilt(c, r, 0.9, rho, rho).mu - mu) < 1e-12);
      }
    }
  }
}

TEST_CASE("exact gaussian tilt normalizer") {
  const auto t = oracle::exact_gaussian_tilt(0.5, 2.0, 0.9, 0.5, 0.5);
  const oracle::Vec m0 = oracle::Vec::Zero(2);
  const double k = oracle::required_covariance(0.5, 2.0, 0.9, 0.5, 0.5);
  const double mass = oracle::gh_expectation(
      [&](const oracle::Vec& u) { return std::exp(t.mu * (u(0) * u(1) - k) + t.lambda); }, m0,
      oracle::Mat::Identity(2, 2), 60);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bisection tilt and var mle") {
  const auto t = oracle::bisection_tilt(vec({-1.0, 3.0}));
  CHECK(t.mu == doctest::Approx(-std::log(3.0) / 4).epsilon(1e-12));
  CHECK(t.lambda == doctest::Approx(-std::log((std::exp(-t.mu) + std::exp(3 * t.mu)) / 2)).epsilon(1e-12));
  CHECK_THROWS_AS(oracle::bisection_tilt(vec({0.5, 0.7})), std::domain_error);

  oracle::Mat z(6, 1), x(6, 1);
  z << 0, 1, 2, 3, 4, 5;
  x << 1, 3, 5, 7, 9, 11;
  const auto fit = oracle::var_mle(x, z);
  CHECK(fit.intercept(0) == doctest::Approx(1.0));
  CHECK(fit.transition(0, 0) == doctest::Approx(2.0));
  CHECK(std::abs(fit.sigma(0, 0)) < 1e-20);
  CHECK(oracle::central_difference([](double v) { return v * v * v; }, 2.0, 1e-5) == doctest::Approx(12.0));
  CHECK(oracle::gaussian_kl(vec({0, 0}), oracle::Mat::Identity(2, 2), vec({1, 0}), oracle::Mat::Identity(2, 2)) ==
        doctest::Approx(0.5));
}
