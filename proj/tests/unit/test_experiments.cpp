#include "helpers.hpp"

#include "tiltlik/experiments.hpp"

using namespace tiltlik;
using testutil::vec;

TEST_CASE("dgp stationary mean of the log rate") {
  DgpConfig dgp;
  RandomStream rng(1);
  const DgpData d = simulate_dgp(dgp, 200000, rng);
  const Vector lr = d.observed.col(1).array().log();
  const double var = dgp.sigma2_R / (1 - dgp.rho_R * dgp.rho_R);
  const double se = std::sqrt(var * (1 + dgp.rho_R) / (1 - dgp.rho_R) / lr.size());
  CHECK(std::abs(lr.mean() + std::log(dgp.beta)) < 4 * se);
  CHECK(-std::log(dgp.beta) == doctest::Approx(0.1625).epsilon(1e-3));
  CHECK(d.observed.rows() == 200001);
  CHECK(d.observed.col(1) == d.clean.col(1));

  dgp.beta = 1.0;
  RandomStream rng2(2);
  const Vector lr1 = simulate_dgp(dgp, 200000, rng2).observed.col(1).array().log();
  CHECK(std::abs(lr1.mean()) < 4 * se);
}

TEST_CASE("dgp is reproducible and satisfies the euler restriction") {
  DgpConfig dgp;
  RandomStream a(5), b(5);
  CHECK(simulate_dgp(dgp, 50, a).observed == simulate_dgp(dgp, 50, b).observed);
  RandomStream c(6);
  const DgpData d = simulate_dgp(dgp, 200000, c);
  double acc = 0.0;
  for (Index t = 1; t < d.clean.rows(); ++t) acc += dgp.beta * d.clean(t - 1, 1) / d.clean(t, 0) - 1.0;
  CHECK(std::abs(acc / (d.clean.rows() - 1)) < 0.01);
  CHECK_THROWS_AS(DgpConfig{1.0}.validate(), InvalidParameter);
}

TEST_CASE("true parameters give a zero tilt on the correct specification") {
  DgpConfig dgp;
  const TiltedModel m = euler_model_correct(dgp, 20000);
  RandomStream rng(3);
  const DgpData d = simulate_dgp(dgp, 20, rng);
  TiltedObjective obj(m, markov_sample(d.observed), 1);
  const ObservationFit f = obj.fit(3, true_psi_correct(dgp));
  CHECK(f.feasible);
  CHECK(std::abs(f.mu(0)) < 0.05);
  CHECK(true_psi_restricted(dgp).size() == 5);
}

TEST_CASE("monte carlo smoke run") {
  McConfig c;
  c.sample_sizes = {20};
  c.replications = 2;
  c.n_sim = 200;
  c.xatol = 1e-3;
  c.seed = 3;
  const McTable t = run_euler_mc(c);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.runs.size() == 8);
  for (const McRow& r : t.rows) {
    CHECK(r.n_runs == 2);
    if (r.n_failed < r.n_runs) CHECK(std::abs(r.mse - (r.bias * r.bias + r.variance)) < 1e-12);
  }
  const McTable again = run_euler_mc(c);
  for (std::size_t k = 0; k < t.runs.size(); ++k) {
    CHECK((t.runs[k].beta_hat == again.runs[k].beta_hat || (std::isnan(t.runs[k].beta_hat) && std::isnan(again.runs[k].beta_hat))));
  }
  CHECK(parse_mc_estimator("etel") == McEstimator::etel);
  CHECK_THROWS_AS(parse_mc_estimator("ols"), InvalidParameter);
  c.replications = 1;
  CHECK_THROWS_AS(c.validate(), InvalidParameter);
}

TEST_CASE("summaries use only successful runs") {
  std::vector<McRun> runs(4);
  const double b[] = {0.8, 0.9, 1.0, 0.0};
  for (int k = 0; k < 4; ++k) {
    runs[k].estimator = McEstimator::etel;
    runs[k].n = 50;
    runs[k].beta_hat = b[k];
  }
  runs[3].failed = true;
  const McRow r = summarize_runs(runs, McEstimator::etel, 50, 0.85, 7);
  CHECK(r.n_failed == 1);
  CHECK(r.flagged);
  CHECK(r.bias == doctest::Approx(0.05));
  CHECK(r.variance == doctest::Approx(0.02 / 3));
  CHECK(r.mse == r.bias * r.bias + r.variance);
}

TEST_CASE("kl improvement identity") {
  // truth N(theta, 1) satisfies E[x - theta] = 0; the base is N(theta + 0.3, 1.2^2)
  const double theta = 0.5;
  GaussianVarDensity truth(1, 1);
  TiltedModel m;
  m.density = std::make_shared<GaussianVarDensity>(1, 1);
  m.moments = std::make_shared<FunctionMoment>(
      "mean", 1, 1, 1, 1, [](const Vector& x, const Vector&, const Vector& t) { return Vector::Constant(1, x(0) - t(0)); });
  Matrix zs(3, 1);
  zs << -1.0, 0.0, 1.0;
  KlOptions o;
  o.seed = 5;
  const auto same = run_kl_check(truth, vec({theta, 0.0, 0.0}), m, vec({theta, theta, 0.0, 0.0}), zs, o);
  for (const KlEstimate& e : same) {
    CHECK(std::abs(e.kl_base) < 1e-12);
    CHECK(std::abs(e.lambda) < 1e-4);
  }
  const auto est = run_kl_check(truth, vec({theta, 0.0, 0.0}), m, vec({theta, theta + 0.3, 0.0, std::log(1.2)}), zs, o);
  for (const KlEstimate& e : est) {
    CHECK(e.lambda >= 0.0);
    CHECK(std::abs(e.difference + e.lambda) < 3 * e.difference_se);
    CHECK(e.kl_tilted <= e.kl_base);
    // exact tilt is N(theta, 1.44)
    const double kl_h = oracle::gaussian_kl(vec({theta}), Matrix::Identity(1, 1), vec({theta}), Matrix::Constant(1, 1, 1.44));
    CHECK(std::abs(e.kl_tilted - kl_h) < 0.01);
  }
}
