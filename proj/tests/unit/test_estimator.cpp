#include "helpers.hpp"

#include "tiltlik/experiments.hpp"
#include "tiltlik/inference.hpp"
#include "tiltlik/optimize.hpp"

using namespace tiltlik;
using testutil::vec;

namespace {

MomentPtr zero_moment() {
  return std::make_shared<FunctionMoment>(
      "zero", 1, 1, 2, 2, [](const Vector&, const Vector&, const Vector&) { return Vector::Zero(1); },
      [](const Vector&, const Vector&, const Vector&) { return Matrix::Zero(1, 1); });
}

// Observations from the exact tilt of the unit normal base under the
// quadratic covariance restriction, with z drawn independently.
Sample section_two_sample(Index n, double beta, double rho, std::uint64_t seed) {
  RandomStream rng(seed);
  Sample s;
  s.x.resize(n, 2);
  s.z.resize(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double c = 0.2 + 0.6 * rng.uniform();
    const double r = 0.8 + 0.4 * rng.uniform();
    const auto t = oracle::exact_gaussian_tilt(c, r, beta, rho, rho);
    Matrix cov(2, 2);
    cov << t.tilted.var_c, t.tilted.cov, t.tilted.cov, t.tilted.var_r;
    const Matrix l = cov.llt().matrixL();
    const Vector e = vec({rng.normal(), rng.normal()});
    s.z.row(i) << c, r;
    s.x.row(i) = (t.tilted.mean + l * e).transpose();
  }
  return s;
}

double exact_tilted_loglik(const Sample& s, double beta, double rho) {
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    const auto t = oracle::exact_gaussian_tilt(s.z(i, 0), s.z(i, 1), beta, rho, rho);
    Matrix cov(2, 2);
    cov << t.tilted.var_c, t.tilted.cov, t.tilted.cov, t.tilted.var_r;
    const Vector d = s.x_row(i) - t.tilted.mean;
    acc += -std::log(2 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * d.dot(cov.ldlt().solve(d));
  }
  return acc / static_cast<double>(s.size());
}

TiltedModel section_two_model(double rho, Index n_sim) {
  TiltedModel m;
  m.density = testutil::section_two_base();
  m.moments = std::make_shared<QuadraticCovarianceRestriction>(rho, rho);
  m.n_sim = n_sim;
  return m;
}

}  // namespace

TEST_CASE("markov conditioning") {
  Matrix y(4, 2);
  y << 1, 2, 3, 4, 5, 6, 7, 8;
  const Sample s = markov_sample(y);
  CHECK(s.size() == 3);
  CHECK(s.x.row(0) == y.row(1));
  CHECK(s.z.row(0) == y.row(0));
  CHECK(s.z.row(2) == y.row(2));
  CHECK_THROWS(markov_sample(y.topRows(2)));
}

TEST_CASE("degenerate zero moment leaves the base likelihood unchanged") {
  TiltedModel m;
  m.density = std::make_shared<GaussianVarDensity>(2, 2);
  m.moments = zero_moment();
  m.n_sim = 200;
  RandomStream rng(1);
  Matrix y(40, 2);
  rng.fill_normal(y);
  const Sample s = markov_sample(y);
  Vector psi = Vector::Zero(m.psi_dim());
  psi(0) = 0.9;
  psi(2) = 0.1;
  const LoglikValue v = tilted_loglik(m, s, psi, 3);
  CHECK(v.infeasible_count == 0);
  CHECK(v.value == doctest::Approx(base_loglik(*m.density, s, m.phi(psi))).epsilon(1e-13));
  TiltedObjective obj(m, s, 3);
  const ObservationFit f = obj.fit(0, psi);
  CHECK(f.mu(0) == 0.0);
  CHECK(f.lambda == 0.0);

  EstimateOptions o;
  o.mode = EstimationMode::two_step;
  o.optimizer.xatol = 1e-8;
  const EstimationResult r = estimate(m, s, psi, o);
  CHECK_FALSE(r.converged);
  CHECK(r.diagnostic.find("flat") != std::string::npos);
  const oracle::VarMle mle = oracle::var_mle(s.x, s.z);
  CHECK(std::abs(r.psi_hat(1) - mle.intercept(0)) < 1e-3);
  CHECK(std::abs(r.psi_hat(3) - mle.transition(0, 0)) < 1e-3);
}

TEST_CASE("common random numbers make the objective deterministic and continuous") {
  const double rho = 0.5;
  const TiltedModel m = section_two_model(rho, 500);
  const Sample s = section_two_sample(30, 0.85, rho, 4);
  const Vector psi = vec({0.85, rho, rho});
  const LoglikValue a = tilted_loglik(m, s, psi, 17);
  const LoglikValue b = tilted_loglik(m, s, psi, 17, 2);
  CHECK(a.value == b.value);
  CHECK(a.value != tilted_loglik(m, s, psi, 18).value);

  TiltedObjective obj(m, s, 17);
  std::vector<double> v;
  for (int k = 0; k <= 200; ++k) v.push_back(obj(vec({0.7 + 0.3 * k / 200.0, rho, rho})).value);
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    const double here = std::abs(v[k + 1] - v[k]);
    const double nb = std::max(std::abs(v[k] - v[k - 1]), k + 2 < v.size() ? std::abs(v[k + 2] - v[k + 1]) : 0.0);
    CHECK(here <= 10 * nb + 1e-12);
  }
}

TEST_CASE("simulated tilted likelihood matches the closed-form tilted normal") {
  const double rho = 0.5, beta = 0.85;
  const TiltedModel m = section_two_model(rho, 20000);
  const Sample s = section_two_sample(200, beta, rho, 5);
  const double exact = exact_tilted_loglik(s, beta, rho);
  std::vector<double> v;
  for (std::uint64_t root = 0; root < 8; ++root) v.push_back(tilted_loglik(m, s, vec({beta, rho, rho}), root).value);
  double mean = 0.0, var = 0.0;
  for (double x : v) mean += x / v.size();
  for (double x : v) var += (x - mean) * (x - mean) / (v.size() - 1);
  // the simulated tilt is a smooth function of sample means, so its bias is
  // of order 1/n_sim on top of the spread across roots
  CHECK(std::abs(mean - exact) < 3 * std::sqrt(var / v.size()) + 1e-3);
  // the restriction binds, so the tilt improves on the base fit at the truth
  const double base = base_loglik(*m.density, s, vec({rho, rho}));
  CHECK(exact > base);
  CHECK(mean > base);
}

TEST_CASE("beta is recovered from the closed-form tilted normal") {
  const double rho = 0.5, beta = 0.85;
  const TiltedModel m = section_two_model(rho, 0);
  const Sample s = section_two_sample(500, beta, rho, 6);
  EstimateOptions o;
  o.mode = EstimationMode::two_step;
  o.seed = 9;
  o.optimizer.xatol = 1e-5;
  o.transforms = {ParamTransform::logistic(), {}, {}};
  const EstimationResult r = estimate(m, s, vec({0.7, 0.3, 0.3}), o);
  CHECK(r.converged);
  InferenceOptions io;
  io.n_sim = 20000;
  const CovarianceBlocks cov = asymptotic_covariance(m, s, r.psi_hat, io);
  const double se = cov.theta_se(s.size())(0);
  CHECK(std::abs(r.psi_hat(0) - beta) < 3 * se);
}

TEST_CASE("two-step estimate of the base equals the closed-form VAR fit") {
  DgpConfig dgp;
  RandomStream rng(12);
  const DgpData data = simulate_dgp(dgp, 200, rng);
  const Sample s = markov_sample(data.observed);
  TiltedModel m;
  m.density = std::make_shared<LogNormalVarDensity>(2, 2);
  m.moments = std::make_shared<EulerLogGrowth>();
  m.n_sim = 500;
  Vector init = Vector::Zero(1 + m.phi_dim());
  init(0) = 0.8;
  EstimateOptions o;
  o.mode = EstimationMode::two_step;
  o.optimizer.xatol = 1e-9;
  o.optimizer.fatol = 1e-14;
  o.optimizer.max_evaluations = 40000;
  const EstimationResult r = estimate(m, s, init, o);
  const oracle::VarMle mle = oracle::var_mle(s.x.array().log().matrix(), s.z.array().log().matrix());
  const auto* g = dynamic_cast<const GaussianVarDensity*>(m.density.get());
  const GaussianVarParams p = g->params(m.phi(r.psi_hat));
  CHECK((p.intercept - mle.intercept).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((p.transition - mle.transition).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((p.covariance() - mle.sigma).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("infeasible proposals") {
  TiltedModel m;
  m.density = std::make_shared<GaussianVarDensity>(2, 2);
  m.moments = std::make_shared<FunctionMoment>(
      "positive", 1, 1, 2, 2, [](const Vector& x, const Vector&, const Vector& t) {
        return Vector::Constant(1, 1.0 + t(0) + x(0) * x(0));
      });
  m.n_sim = 100;
  Matrix y(10, 2);
  RandomStream rng(2);
  rng.fill_normal(y);
  const Sample s = markov_sample(y);
  const Vector psi = Vector::Zero(m.psi_dim());
  const LoglikValue v = tilted_loglik(m, s, psi, 1);
  CHECK(v.all_infeasible());
  CHECK(v.value == kInfeasiblePenalty);
  CHECK_THROWS_AS(estimate(m, s, psi), InvalidParameter);

  m.n_sim = 5;
  CHECK_THROWS_AS(m.validate(), InvalidParameter);
  m.n_sim = 0;
  CHECK(m.resolved_n_sim(100) == 10000);
  CHECK(m.resolved_n_sim(1000) == 20000);
}

TEST_CASE("parameter transforms and modes") {
  for (const ParamTransform& t : {ParamTransform::identity(), ParamTransform::logistic(0.0, 2.0),
                                  ParamTransform::positive(), ParamTransform::correlation()}) {
    for (double u : {-3.0, -0.4, 0.0, 1.3}) CHECK(t.to_internal(t.to_param(u)) == doctest::Approx(u).epsilon(1e-9));
  }
  CHECK(ParamTransform::logistic().to_param(0.0) == doctest::Approx(0.5));
  CHECK(parse_estimation_mode("two_step") == EstimationMode::two_step);
  CHECK(std::string(to_string(EstimationMode::joint)) == "joint");
  CHECK_THROWS_AS(parse_estimation_mode("three_step"), InvalidParameter);
}

TEST_CASE("nelder-mead best value never gets worse") {
  const auto f = [](const Vector& x) { return std::pow(x(0) - 1, 2) + 10 * std::pow(x(1) + x(0) * x(0), 2); };
  const NelderMeadResult r = nelder_mead(f, vec({-1.0, 1.0}));
  CHECK(r.converged);
  for (std::size_t k = 1; k < r.best_trace.size(); ++k) CHECK(r.best_trace[k] <= r.best_trace[k - 1]);
  CHECK(std::abs(r.x(0) - 1) < 1e-4);
}
