#include "effect_fd.hpp"
#include "helpers.hpp"

#include "tiltlik/counterfactual.hpp"

using namespace tiltlik;
using testutil::vec;

namespace {

TiltedModel log_utility_model() {
  TiltedModel m;
  m.density = std::make_shared<LogNormalVarDensity>(2, 2);
  m.moments = std::make_shared<EulerLogUtility>();
  return m;
}

Vector log_utility_psi() {
  const LogNormalVarDensity d(2, 2);
  GaussianVarParams p;
  p.intercept = vec({0.02, 0.01});
  p.transition = Matrix(2, 2);
  p.transition << 0.5, 0.1, 0.0, 0.4;
  p.chol_cov = Matrix(2, 2);
  p.chol_cov << 0.1, 0.0, -0.03, 0.08;
  const Vector phi = d.pack(p);
  Vector psi(1 + phi.size());
  psi << 1.1, phi;  // base mean of the Euler residual is positive, so mu < 0
  return psi;
}

}  // namespace

TEST_CASE("a constant target has no effects") {
  const TiltedModel m = log_utility_model();
  CounterfactualOptions o;
  o.n_sim = 5000;
  const EffectReport r = average_effect(m, log_utility_psi(), vec({1.0, 1.0}), {"one", [](const Vector&) { return 1.0; }}, o);
  CHECK(r.constant_target);
  CHECK(r.d_dtheta.isZero(0.0));
  CHECK(r.d_dphi.isZero(0.0));
  CHECK(r.target_mean == doctest::Approx(1.0));
}

TEST_CASE("the enforced restriction has zero total derivative") {
  const TiltedModel m = log_utility_model();
  const Vector psi = log_utility_psi();
  const Vector z = vec({1.1, 1.02});
  CounterfactualOptions o;
  o.n_sim = 20000;
  o.seed = 4;
  const Vector theta = m.theta(psi);
  const Target zeta{"m", [&](const Vector& x) { return m.moments->evaluate(x, z, theta)(0); }};
  const EffectReport r = average_effect(m, psi, z, zeta, o);
  RandomStream rng(o.seed);
  const TiltedDraws td = tilt_draws(m, psi, z, draw_noise(o.n_sim, 2, rng));
  const Matrix jac = m.moments->jacobian_draws(td.draws, z, theta);
  const double e_m = (jac.transpose() * td.weights)(0);
  CHECK(std::abs(r.d_dtheta(0) + e_m) < 3 * r.mc_se(0) + 1e-12);
  CHECK(r.d_dphi.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(r.mc_se.minCoeff() > 0.0);
}

TEST_CASE("average effects match finite differences of the reweighted mean") {
  const TiltedModel m = log_utility_model();
  const Vector psi = log_utility_psi();
  const Vector z = vec({0.9, 1.05});
  CounterfactualOptions o;
  o.n_sim = 4000;
  o.seed = 7;
  const std::vector<Target> targets = {{"c", [](const Vector& x) { return x(0); }},
                                       {"cr", [](const Vector& x) { return x(0) * x(1); }},
                                       {"logr", [](const Vector& x) { return std::log(x(1)); }}};
  RandomStream rng(o.seed);
  const Matrix draws = m.density->transform_noise(z, m.phi(psi), draw_noise(o.n_sim, 2, rng));
  for (const Target& t : targets) {
    const EffectReport r = average_effect(m, psi, z, t, o);
    const Vector fd = fdref::effect_fd(m, psi, z, draws, t.fn);
    Vector a(psi.size());
    a << r.d_dtheta, r.d_dphi;
    CHECK((a - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("near-zero multipliers collapse the theta effect to the projection formula") {
  TiltedModel m;
  m.density = std::make_shared<GaussianVarDensity>(1, 1);
  const double beta = 0.8, eps = 1e-4;
  m.moments = std::make_shared<FunctionMoment>(
      "linear", 1, 1, 1, 1, [](const Vector& x, const Vector&, const Vector& t) { return Vector::Constant(1, t(0) * x(0) - 1.0); },
      [](const Vector& x, const Vector&, const Vector&) { return Matrix::Constant(1, 1, x(0)); });
  const Vector psi = vec({beta, 1.0 / beta + eps, 0.0, std::log(0.2)});
  CounterfactualOptions o;
  o.n_sim = 200000;
  const Target zeta{"sq", [](const Vector& x) { return x(0) * x(0); }};
  const EffectReport r = average_effect(m, psi, vec({0.0}), zeta, o);
  CHECK(r.mu.norm() < 1e-2);
  // -E(M) V^{-1} Cov(m, zeta) with a ~ N(a0, s^2): E(M) = a0, V = beta^2 s^2,
  // Cov(beta a - 1, a^2) = 2 beta a0 s^2
  const double a0 = 1.0 / beta + eps, s2 = 0.04;
  const double limit = -a0 / (beta * beta * s2) * (2 * beta * a0 * s2);
  CHECK(r.d_dtheta(0) == doctest::Approx(limit).epsilon(0.01));
}

TEST_CASE("counterfactual grids") {
  const TiltedModel m = crra_model();
  CrraDesign d;
  GridSpec g{0.75, 1.25, 161, 0.78, 1.28, 161};
  CounterfactualOptions o;
  o.n_sim = 20000;
  const auto same = counterfactual_grid(m, crra_psi(d, 1.0), crra_psi(d, 1.0), d.z, g, o);
  CHECK(same.first.log_h == same.second.log_h);
  const auto grids = counterfactual_grid(m, crra_psi(d, 1.0), crra_psi(d, 5.0), d.z, g, o);
  CHECK(std::abs(grids.first.mass() - 1.0) < 1e-3);
  CHECK(std::abs(grids.second.mass() - 1.0) < 1e-3);
  CHECK(grids.first.log_h.rows() == 161);
  CHECK(grids.second.label == "counterfactual");
}

TEST_CASE("raising risk aversion shifts the tilted distribution") {
  const TiltedModel m = crra_model();
  CrraDesign d;
  CounterfactualOptions o;
  o.n_sim = 100000;
  o.seed = 2;
  const TiltedSummary lo = tilted_summary(m, crra_psi(d, 1.0), d.z, o);
  const TiltedSummary hi = tilted_summary(m, crra_psi(d, 5.0), d.z, o);
  CHECK(hi.mean(1) > lo.mean(1));
  CHECK(hi.mean(0) < lo.mean(0));
  CHECK(hi.corr > lo.corr);
  CHECK(hi.corr < 0.0);
}
