#include "helpers.hpp"

#include "tiltlik/projection.hpp"
#include "tiltlik/rng.hpp"

using namespace tiltlik;
using testutil::vec;

namespace {

Matrix column(std::initializer_list<double> v) { return vec(v); }

void check_invariants(const ProjectionResult& r, const Matrix& m, const SolverOptions& o) {
  REQUIRE(r.converged);
  const Vector e = ((m * r.mu).array() + r.lambda).exp();
  CHECK(std::abs(e.mean() - 1.0) < 1e-12);
  CHECK(r.lambda >= -1e-12);
  CHECK((r.weights.minCoeff() > 0.0));
  CHECK(std::abs(r.weights.sum() - 1.0) < 1e-12);
  CHECK((m.transpose() * r.weights).norm() <= 10 * o.tol_grad);
  for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
    CHECK(r.objective_trace[k] <= r.objective_trace[k - 1] * (1 + 1e-15));
  }
}

}  // namespace

TEST_CASE("centered sample needs no tilt") {
  const ProjectionResult r = solve_multipliers(column({-1.0, 1.0}));
  CHECK(std::abs(r.mu(0)) < 1e-14);
  CHECK(std::abs(r.lambda) < 1e-14);
  CHECK(r.weights(0) == doctest::Approx(0.5));
}

TEST_CASE("two-point tilt matches the one-dimensional root") {
  const Matrix m = column({-1.0, 3.0});
  const ProjectionResult r = solve_multipliers(m);
  const oracle::ScalarTilt t = oracle::bisection_tilt(m.col(0));
  CHECK(r.mu(0) == doctest::Approx(t.mu).epsilon(1e-10));
  CHECK(r.lambda == doctest::Approx(t.lambda).epsilon(1e-10));
  CHECK(r.mu(0) == doctest::Approx(-0.27465307).epsilon(1e-7));
  CHECK(r.lambda == doctest::Approx(0.13081).epsilon(1e-4));
  check_invariants(r, m, {});
}

TEST_CASE("zero outside the hull") {
  CHECK_THROWS_AS(solve_multipliers(column({0.5, 0.7})), NoInteriorSolution);
  const ProjectionResult r = try_solve_multipliers(column({0.5, 0.7}));
  CHECK_FALSE(r.converged);
  CHECK(r.status == ProjectionStatus::no_interior);
  Matrix m(3, 2);
  m << 1, 0, 0, 1, 2, 3;
  CHECK(try_solve_multipliers(m).status == ProjectionStatus::no_interior);
}

TEST_CASE("ridge keeps the solution bounded") {
  SolverOptions o;
  o.ridge = 0.1;
  const ProjectionResult r = try_solve_multipliers(column({0.5, 0.7}), o);
  CHECK(r.converged);
  CHECK(r.mu(0) < 0.0);
  CHECK(std::isfinite(r.lambda));
}

TEST_CASE("iteration budget is reported") {
  SolverOptions o;
  o.max_iter = 1;
  const ProjectionResult r = try_solve_multipliers(column({-1.0, 5.0, 0.2}), o);
  CHECK_FALSE(r.converged);
  CHECK(r.status == ProjectionStatus::max_iter);
  CHECK_THROWS_AS(SolverOptions{0.0}.validate(), InvalidParameter);
}

TEST_CASE("analytic gaussian tilt examples") {
  CHECK(analytic_gaussian_tilt(0.0, 1.0, 0.9, 0.5, 0.5) == 0.0);
  CHECK(gaussian_tilt_root(1.0) == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-15));
  CHECK(gaussian_tilt_root(-0.5) == doctest::Approx(1 - std::sqrt(2.0)).epsilon(1e-15));
  for (double k : {-3.0, -0.2, 0.01, 0.7, 40.0}) {
    const double mu = gaussian_tilt_root(k);
    CHECK(std::abs(mu) < 1.0);
    CHECK(mu / (1 - mu * mu) == doctest::Approx(k).epsilon(1e-12));
  }
  CHECK(analytic_gaussian_tilt(0.5, 2.0, 0.9, 0.5, 0.5) ==
        doctest::Approx(gaussian_tilt_root(oracle::required_covariance(0.5, 2.0, 0.9, 0.5, 0.5))));
}

TEST_CASE("tilted log density is additive") {
  CHECK(tilted_logdensity(-1.25, vec({0.0}), vec({3.0}), 0.0) == -1.25);
  const double v = tilted_logdensity(-2.0, vec({0.3, -0.1}), vec({1.0, 2.0}), 0.05);
  CHECK(v - (-2.0) == doctest::Approx(0.3 - 0.2 + 0.05).epsilon(1e-15));
}

TEST_CASE("tilting the unit normal by the quadratic restriction gives the closed-form normal") {
  const double c = 0.5, r = 2.0, beta = 0.9, rho = 0.5;
  QuadraticCovarianceRestriction q(rho, rho);
  const auto base = testutil::section_two_base();
  const Vector phi = vec({rho, rho});
  const Vector z = vec({c, r});
  const double mu = analytic_gaussian_tilt(c, r, beta, rho, rho);
  const auto exact = oracle::exact_gaussian_tilt(c, r, beta, rho, rho);
  Matrix cov(2, 2);
  cov << exact.tilted.var_c, exact.tilted.cov, exact.tilted.cov, exact.tilted.var_r;
  Eigen::LLT<Matrix> llt(cov);
  const double logdet = 2 * std::log(llt.matrixL()(0, 0) * llt.matrixL()(1, 1));
  double gap = 0.0;
  for (int a = -10; a <= 10; ++a) {
    for (int b = -10; b <= 10; ++b) {
      const Vector x = exact.tilted.mean + vec({0.3 * a, 0.3 * b});
      const double h = tilted_logdensity(base->logpdf(x, z, phi), vec({mu}), q.evaluate(x, z, vec({beta})),
                                         exact.lambda);
      const Vector d = x - exact.tilted.mean;
      const double normal = -std::log(2 * M_PI) - 0.5 * logdet - 0.5 * d.dot(llt.solve(d));
      gap = std::max(gap, std::abs(h - normal));
    }
  }
  CHECK(gap < 1e-6);
}

TEST_CASE("quadrature nodes reproduce the analytic multiplier") {
  const oracle::QuadratureRule rule = oracle::gauss_hermite_tensor(60, 2);
  QuadraticCovarianceRestriction q(0.5, 0.4);
  for (double c : {0.2, 0.6}) {
    for (double r : {0.8, 1.5}) {
      const Vector z = vec({c, r});
      Matrix nodes = rule.nodes;
      nodes.col(0).array() += 0.5 * c;
      nodes.col(1).array() += 0.4 * r;
      const Matrix m = q.evaluate_draws(nodes, z, vec({0.9}));
      const ProjectionResult pr = solve_multipliers_weighted(m, rule.log_weights);
      CHECK(std::abs(pr.mu(0) - analytic_gaussian_tilt(c, r, 0.9, 0.5, 0.4)) < 1e-6);
    }
  }
}

TEST_CASE("weighted solve equals replicated draws") {
  Matrix m(3, 1);
  m << -1.0, 0.5, 2.0;
  Matrix rep(6, 1);
  rep << -1.0, 0.5, 0.5, 2.0, 2.0, 2.0;
  const ProjectionResult a = solve_multipliers_weighted(m, vec({0.0, std::log(2.0), std::log(3.0)}));
  const ProjectionResult b = solve_multipliers(rep);
  CHECK(a.mu(0) == doctest::Approx(b.mu(0)).epsilon(1e-12));
  CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-12));
  const oracle::ScalarTilt t = oracle::bisection_tilt(m.col(0), vec({1, 2, 3}));
  CHECK(a.mu(0) == doctest::Approx(t.mu).epsilon(1e-10));
}

TEST_CASE("random feasible instances satisfy the solver invariants") {
  RandomStream rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const Index k = 1 + rep % 3;
    const Index n = 50 + 10 * (rep % 7);
    Matrix m(n, k);
    rng.fill_normal(m);
    m.array() += 0.3;
    const ProjectionResult r = try_solve_multipliers(m);
    if (!r.converged) continue;
    check_invariants(r, m, {});
  }
}

TEST_CASE("linear reparameterization of the moments") {
  RandomStream rng(6);
  Matrix m(400, 2);
  rng.fill_normal(m);
  m.col(0).array() += 0.4;
  m.col(1) = 0.5 * m.col(1) + 0.3 * m.col(0);
  Matrix a(2, 2);
  a << 2.0, 0.5, -1.0, 1.5;
  const ProjectionResult r0 = solve_multipliers(m);
  const ProjectionResult r1 = solve_multipliers(m * a.transpose());
  CHECK((r1.mu - a.transpose().inverse() * r0.mu).norm() < 1e-8);
  CHECK(r1.lambda == doctest::Approx(r0.lambda).epsilon(1e-8));
  CHECK((r1.weights - r0.weights).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("simulated draws recover the analytic multiplier within Monte Carlo error") {
  const auto base = testutil::section_two_base();
  QuadraticCovarianceRestriction q(0.5, 0.5);
  const Vector z = vec({0.5, 2.0});
  RandomStream rng(9);
  const Matrix x = base->simulate(z, vec({0.5, 0.5}), 1000000, rng);
  const Matrix m = q.evaluate_draws(x, z, vec({0.9}));
  const ProjectionResult pr = solve_multipliers(m);
  // delta method: Var(mu_hat) = Var_w(m) / (N E_w[m^2]^2) under the tilt
  const double k2 = (m.col(0).array().square() * pr.weights.array()).sum();
  const double var = (pr.weights.array() * pr.weights.array() * m.col(0).array().square()).sum() * m.rows();
  const double se = std::sqrt(var / m.rows()) / k2;
  CHECK(std::abs(pr.mu(0) - analytic_gaussian_tilt(0.5, 2.0, 0.9, 0.5, 0.5)) < 3 * se);
}
