#include "tiltlik/experiments.hpp"

#include "tiltlik/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace tiltlik {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Outer coordinate for beta in every estimator.
ParamTransform beta_transform() { return ParamTransform::logistic(0.0, 2.0); }

double consumption_scale(const DgpConfig& dgp) { return std::sqrt(dgp.sigma2_C + dgp.sigma2_C_me); }

}  // namespace

double euler_moment_start(const Sample& s) {
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) acc += s.z(i, 1) / s.x(i, 0);
  const double b = static_cast<double>(s.size()) / acc;
  return std::isfinite(b) ? std::clamp(b, 0.05, 1.95) : 0.9;
}

void DgpConfig::validate() const {
  if (!(std::abs(rho_R) < 1.0)) throw InvalidParameter("dgp: rho_R must lie in (-1, 1)");
  if (!(beta > 0.0)) throw InvalidParameter("dgp: beta must be positive");
  if (!(sigma2_R > 0.0) || !(sigma2_C > 0.0)) throw InvalidParameter("dgp: innovation variances must be positive");
  if (!(sigma2_C_me >= 0.0)) throw InvalidParameter("dgp: measurement error variance must be non-negative");
  if (burn_in < 0) throw InvalidParameter("dgp: burn_in must be non-negative");
}

DgpData simulate_dgp(const DgpConfig& dgp, Index n, RandomStream& rng) {
  dgp.validate();
  if (n < 1) throw InvalidParameter("simulate_dgp: need at least one period");
  const double lb = std::log(dgp.beta);
  const double sr = std::sqrt(dgp.sigma2_R);
  const double sc = std::sqrt(dgp.sigma2_C);
  const double sm = std::sqrt(dgp.sigma2_C_me);
  DgpData out;
  out.observed.resize(n + 1, 2);
  out.clean.resize(n + 1, 2);
  double lr = -lb;
  for (Index t = -dgp.burn_in; t <= n; ++t) {
    const double er = rng.normal();
    const double ec = rng.normal();
    const double eta = dgp.sigma2_C_me / 2.0 + sm * rng.normal();
    const double lg = lb + lr + dgp.sigma2_C / 2.0 + sc * ec;
    lr = -(1.0 - dgp.rho_R) * lb + dgp.rho_R * lr + sr * er;
    if (t >= 0) {
      out.clean(t, 0) = std::exp(lg);
      out.observed(t, 0) = std::exp(lg + eta);
      out.clean(t, 1) = out.observed(t, 1) = std::exp(lr);
    }
  }
  return out;
}

McEstimator parse_mc_estimator(const std::string& text) {
  for (McEstimator e : all_mc_estimators()) {
    if (text == to_string(e)) return e;
  }
  throw InvalidParameter("unknown estimator '" + text + "'");
}

const char* to_string(McEstimator e) {
  switch (e) {
    case McEstimator::tilted_correct: return "tilted_correct";
    case McEstimator::tilted_restricted: return "tilted_restricted";
    case McEstimator::cu_gmm: return "cu_gmm";
    case McEstimator::etel: return "etel";
  }
  return "?";
}

std::vector<McEstimator> all_mc_estimators() {
  return {McEstimator::tilted_correct, McEstimator::tilted_restricted, McEstimator::cu_gmm, McEstimator::etel};
}

void McConfig::validate() const {
  dgp.validate();
  if (replications < 2) throw InvalidParameter("montecarlo: replications must be at least 2");
  if (sample_sizes.empty()) throw InvalidParameter("montecarlo: sample_sizes is empty");
  for (Index n : sample_sizes) {
    if (n < 10) throw InvalidParameter("montecarlo: sample sizes must be at least 10");
  }
  if (estimators.empty()) throw InvalidParameter("montecarlo: estimators is empty");
  if (n_sim < 0 || inference_n_sim < 1) throw InvalidParameter("montecarlo: invalid simulation size");
  if (!(xatol > 0.0)) throw InvalidParameter("montecarlo: xatol must be positive");
}

// phi (correct):    a_C, a_R, rho_CR, rho_R, log sigma_R
// phi (restricted): a_C, a_R, rho, log sigma_R with rho_CR = rho_R = rho
// The consumption scale is known: sqrt(sigma2_C + sigma2_C_me).
TiltedModel euler_model_correct(const DgpConfig& dgp, Index n_sim) {
  AffineMapBuilder b(GaussianVarDensity::full_dim(2, 2), 5);
  b.bind(0, 0).bind(1, 1).fix(2, 0.0).bind(3, 2).fix(4, 0.0).bind(5, 3);
  b.fix(6, std::log(consumption_scale(dgp))).fix(7, 0.0).bind(8, 4);
  TiltedModel m;
  m.density = std::make_shared<LogNormalVarDensity>(2, 2, b.build());
  m.moments = std::make_shared<EulerLogGrowth>();
  m.n_sim = n_sim;
  return m;
}

TiltedModel euler_model_restricted(const DgpConfig& dgp, Index n_sim) {
  AffineMapBuilder b(GaussianVarDensity::full_dim(2, 2), 4);
  b.bind(0, 0).bind(1, 1).fix(2, 0.0).bind(3, 2).fix(4, 0.0).bind(5, 2);
  b.fix(6, std::log(consumption_scale(dgp))).fix(7, 0.0).bind(8, 3);
  TiltedModel m;
  m.density = std::make_shared<LogNormalVarDensity>(2, 2, b.build());
  m.moments = std::make_shared<EulerLogGrowth>();
  m.n_sim = n_sim;
  return m;
}

Vector true_psi_correct(const DgpConfig& dgp) {
  const double lb = std::log(dgp.beta);
  Vector psi(6);
  psi << dgp.beta, lb + (dgp.sigma2_C + dgp.sigma2_C_me) / 2.0, -(1.0 - dgp.rho_R) * lb, 1.0, dgp.rho_R,
      0.5 * std::log(dgp.sigma2_R);
  return psi;
}

Vector true_psi_restricted(const DgpConfig& dgp) {
  const Vector c = true_psi_correct(dgp);
  Vector psi(5);
  psi << c(0), c(1), c(2), c(4), c(5);
  return psi;
}

EstimationResult estimate_euler_tilted(const TiltedModel& model, bool correct, const Sample& s, double xatol,
                                       std::uint64_t seed) {
  EstimateOptions o;
  o.seed = seed;
  o.optimizer.xatol = xatol;
  Vector init(model.psi_dim());
  if (correct) {
    init << euler_moment_start(s), 0.0, 0.0, 0.5, 0.5, 0.0;
    o.transforms = {beta_transform(), {}, {}, {}, {}, {}};
    o.profiled_phi = {1, 3, 4};
  } else {
    init << euler_moment_start(s), 0.0, 0.0, 0.5, 0.0;
    o.transforms = {beta_transform(), {}, {}, {}, {}};
    o.profiled_phi = {1, 3};
  }
  if (init.size() != model.psi_dim()) throw DimensionError("estimate_euler_tilted: model does not match the specification");

  // Observations whose tilt needs an inadmissible multiplier sit on the
  // penalty plateau, so a start where many of them are infeasible stalls
  // the search. At the base MLE they signal E[beta R / G | z] < 1, and beta
  // is raised until at most 5% remain.
  const NelderMeadResult base = maximize_base_loglik(*model.density, s, init.tail(model.phi_dim()));
  init.tail(model.phi_dim()) = base.x;
  const TiltedObjective objective(model, s, seed);
  Index best = s.size() + 1;
  double best_beta = init(0);
  for (double b = init(0); b <= 1.95; b *= 1.03) {
    init(0) = b;
    const Index bad = objective(init).infeasible_count;
    if (bad < best) {
      best = bad;
      best_beta = b;
    }
    if (static_cast<double>(bad) <= 0.05 * static_cast<double>(s.size())) break;
  }
  init(0) = best_beta;
  return estimate(model, s, init, o);
}

BaselineResult estimate_euler_baseline(McEstimator which, const Sample& s, double xatol, MomentPtr moments) {
  if (which != McEstimator::cu_gmm && which != McEstimator::etel) {
    throw InvalidParameter("estimate_euler_baseline: not a moment-based estimator");
  }
  const InstrumentedMoments im = default_instruments(moments ? moments : std::make_shared<EulerLogGrowth>());
  BaselineOptions o;
  o.optimizer.xatol = xatol;
  o.transforms = {beta_transform()};
  Vector init(1);
  init << euler_moment_start(s);
  return which == McEstimator::cu_gmm ? estimate_cu_gmm(s, im, init, o) : estimate_etel(s, im, init, o);
}

namespace {

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t kind, Index n, Index rep, std::uint64_t extra = 0) {
  return RandomStream::derive(seed, {kind, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep), extra})
      .key();
}

void fill_tilted(const McConfig& config, McEstimator which, Index n, Index rep, const Sample& s, McRun& run) {
  const bool correct = which == McEstimator::tilted_correct;
  const TiltedModel model = correct ? euler_model_correct(config.dgp, config.n_sim)
                                    : euler_model_restricted(config.dgp, config.n_sim);
  const EstimationResult r = estimate_euler_tilted(model, correct, s, config.xatol,
                                                   stream_key(config.seed, 1, n, rep, static_cast<std::uint64_t>(which)));
  run.beta_hat = r.psi_hat(0);
  run.evaluations = r.evaluations;
  run.diagnostic = r.diagnostic;
  run.failed = !r.converged || !std::isfinite(r.psi_hat(0));
  if (r.infeasible_count > 0) {
    if (!run.diagnostic.empty()) run.diagnostic += "; ";
    run.diagnostic += std::to_string(r.infeasible_count) + " infeasible projection(s) at the optimum";
  }

  const bool want_inference = correct && std::find(config.inference_sizes.begin(), config.inference_sizes.end(),
                                                   n) != config.inference_sizes.end();
  if (!want_inference || run.failed) return;
  InferenceOptions io;
  io.n_sim = config.inference_n_sim;
  io.seed = stream_key(config.seed, 2, n, rep);
  try {
    const CovarianceBlocks cov = asymptotic_covariance(model, s, r.psi_hat, io);
    run.beta_se = cov.theta_se(s.size())(0);
  } catch (const NumericalError& e) {
    run.diagnostic += std::string(run.diagnostic.empty() ? "" : "; ") + "inference: " + e.what();
  }
  try {
    const FocBlocks fb = foc_blocks(model, s, true_psi_correct(config.dgp), io);
    run.foc_theta = fb.g1(0);
    run.foc_phi = fb.g2;
  } catch (const NumericalError& e) {
    run.diagnostic += std::string(run.diagnostic.empty() ? "" : "; ") + "foc: " + e.what();
  }
}

void fill_baseline(const McConfig& config, McEstimator which, const Sample& s, McRun& run) {
  const BaselineResult r = estimate_euler_baseline(which, s, config.xatol);
  run.beta_hat = r.theta(0);
  run.evaluations = r.evaluations;
  run.failed = !r.converged || !std::isfinite(r.theta(0)) || !std::isfinite(r.objective);
  if (!r.converged) run.diagnostic = "optimizer did not converge";
  if (!std::isfinite(r.objective)) run.diagnostic = "objective not finite at the optimum";
}

}  // namespace

McRun run_replication(const McConfig& config, McEstimator estimator, Index n, Index replication) {
  McRun run;
  run.estimator = estimator;
  run.n = n;
  run.replication = replication;
  run.beta_hat = kNaN;
  run.beta_se = kNaN;
  run.foc_theta = kNaN;
  RandomStream rng(stream_key(config.seed, 0, n, replication));
  const DgpData data = simulate_dgp(config.dgp, n, rng);
  try {
    if (estimator == McEstimator::tilted_correct || estimator == McEstimator::tilted_restricted) {
      fill_tilted(config, estimator, n, replication, markov_sample(data.observed), run);
    } else {
      fill_baseline(config, estimator, markov_sample(data.clean), run);
    }
  } catch (const Error& e) {
    run.failed = true;
    run.diagnostic = e.what();
  }
  return run;
}

McRow summarize_runs(const std::vector<McRun>& runs, McEstimator e, Index n, double truth, std::uint64_t seed) {
  McRow row;
  row.estimator = e;
  row.n = n;
  row.seed = seed;
  std::vector<double> ok;
  for (const McRun& r : runs) {
    if (r.estimator != e || r.n != n) continue;
    ++row.n_runs;
    if (r.failed) {
      ++row.n_failed;
    } else {
      ok.push_back(r.beta_hat);
    }
  }
  if (ok.empty()) {
    row.bias = row.variance = row.mse = kNaN;
  } else {
    double mean = 0.0;
    for (double b : ok) mean += b;
    mean /= static_cast<double>(ok.size());
    double var = 0.0;
    for (double b : ok) var += (b - mean) * (b - mean);
    row.bias = mean - truth;
    row.variance = var / static_cast<double>(ok.size());
    row.mse = row.bias * row.bias + row.variance;
  }
  row.flagged = row.n_runs > 0 && 20 * row.n_failed > row.n_runs;
  return row;
}

const McRow* McTable::find(McEstimator e, Index n) const {
  for (const McRow& r : rows) {
    if (r.estimator == e && r.n == n) return &r;
  }
  return nullptr;
}

McTable run_euler_mc(const McConfig& config, const std::function<void(std::size_t, std::size_t)>& progress) {
  config.validate();
  struct Task {
    Index n, rep;
    McEstimator e;
  };
  std::vector<Task> tasks;
  for (Index n : config.sample_sizes) {
    for (Index r = 0; r < config.replications; ++r) {
      for (McEstimator e : config.estimators) tasks.push_back({n, r, e});
    }
  }
  McTable table;
  table.runs.resize(tasks.size());
  std::mutex mu;
  std::size_t done = 0;
  parallel_for(tasks.size(), config.threads, [&](std::size_t k) {
    table.runs[k] = run_replication(config, tasks[k].e, tasks[k].n, tasks[k].rep);
    if (progress) {
      std::lock_guard<std::mutex> lock(mu);
      progress(++done, tasks.size());
    }
  });
  for (Index n : config.sample_sizes) {
    for (McEstimator e : config.estimators) {
      table.rows.push_back(summarize_runs(table.runs, e, n, config.dgp.beta, config.seed));
    }
  }
  return table;
}

CoverageSummary coverage_summary(const McTable& table, Index n, double truth) {
  CoverageSummary out;
  out.n = n;
  std::vector<const McRun*> used;
  Index covered = 0;
  for (const McRun& r : table.runs) {
    if (r.estimator != McEstimator::tilted_correct || r.n != n || r.failed) continue;
    if (!std::isfinite(r.beta_se) || !std::isfinite(r.foc_theta) || r.foc_phi.size() == 0) continue;
    used.push_back(&r);
    if (std::abs(r.beta_hat - truth) <= 1.959963984540054 * r.beta_se) ++covered;
  }
  out.n_used = static_cast<Index>(used.size());
  if (used.size() < 2) {
    out.coverage = out.max_abs_block_corr = kNaN;
    return out;
  }
  out.coverage = static_cast<double>(covered) / static_cast<double>(used.size());
  const Index k = used.front()->foc_phi.size();
  const Index m = out.n_used;
  Vector a(m);
  Matrix b(m, k);
  for (Index i = 0; i < m; ++i) {
    a(i) = used[static_cast<std::size_t>(i)]->foc_theta;
    b.row(i) = used[static_cast<std::size_t>(i)]->foc_phi.transpose();
  }
  const Vector ac = a.array() - a.mean();
  out.block_corr.resize(k);
  for (Index j = 0; j < k; ++j) {
    const Vector bc = b.col(j).array() - b.col(j).mean();
    out.block_corr(j) = ac.dot(bc) / std::sqrt(ac.squaredNorm() * bc.squaredNorm());
  }
  out.max_abs_block_corr = out.block_corr.cwiseAbs().maxCoeff();
  return out;
}

std::vector<KlEstimate> run_kl_check(const ConditionalDensity& truth, const Vector& phi_true,
                                     const TiltedModel& model, const Vector& psi, const Matrix& z_set,
                                     const KlOptions& options) {
  model.validate();
  require_dim(truth.x_dim() == model.density->x_dim() && truth.z_dim() == model.density->z_dim(),
              "run_kl_check: truth and base dimensions differ");
  const Vector theta = model.theta(psi);
  const Vector phi = model.phi(psi);
  std::vector<KlEstimate> out;
  for (Index k = 0; k < z_set.rows(); ++k) {
    const Vector z = z_set.row(k).transpose();
    RandomStream base_rng = RandomStream::derive(options.seed, {0, static_cast<std::uint64_t>(k)});
    RandomStream true_rng = RandomStream::derive(options.seed, {1, static_cast<std::uint64_t>(k)});
    const Matrix base_draws = model.density->simulate(z, phi, options.n_project, base_rng);
    const ProjectionResult pr =
        solve_multipliers(model.moments->evaluate_draws(base_draws, z, theta), options.solver);
    if (!admissible_multipliers(*model.moments, pr.mu)) {
      throw NoInteriorSolution("run_kl_check: the tilt needs a multiplier outside the integrable domain");
    }

    const Matrix xs = truth.simulate(z, phi_true, options.n_truth, true_rng);
    const Matrix m = model.moments->evaluate_draws(xs, z, theta);
    const Index n = xs.rows();
    Vector log_ratio(n);
    for (Index j = 0; j < n; ++j) {
      const Vector x = xs.row(j).transpose();
      log_ratio(j) = truth.logpdf(x, z, phi_true) - model.density->logpdf(x, z, phi);
    }
    const Vector tilt = (m * pr.mu).array() + pr.lambda;

    KlEstimate e;
    e.z = z;
    e.mu = pr.mu;
    e.lambda = pr.lambda;
    e.kl_base = log_ratio.mean();
    e.kl_tilted = (log_ratio - tilt).mean();
    e.difference = -tilt.mean();
    const double var = (tilt.array() - tilt.mean()).square().sum() / static_cast<double>(n - 1);
    // lambda carries its own error from the projection draws: with
    // normalized weights w_j, lambda = -log mean(n_p w_j exp(-lambda)), whose
    // delta-method variance is Var(n_p w_j) / n_p.
    const double np = static_cast<double>(pr.weights.size());
    const Eigen::ArrayXd nw = np * pr.weights.array();
    const double var_lambda = (nw - nw.mean()).square().sum() / (np - 1.0) / np;
    e.difference_se = std::sqrt(var / static_cast<double>(n) + var_lambda);
    out.push_back(std::move(e));
  }
  return out;
}

void KlPairConfig::validate() const {
  if (!(beta > 0.0)) throw InvalidParameter("kl pair: beta must be positive");
  if (!(truth_sd_c > 0.0) || !(truth_sd_r > 0.0)) throw InvalidParameter("kl pair: standard deviations must be positive");
}

KlPair quadratic_kl_pair(const KlPairConfig& config, const Vector& z) {
  config.validate();
  if (z.size() != 2) throw DimensionError("quadratic_kl_pair: z must have two entries");
  const double k = (z(0) / config.beta) * (1.0 - z(1) * config.beta * config.rho * config.rho);
  const double sc = config.truth_sd_c, sr = config.truth_sd_r;
  const double rest = sr * sr - k * k / (sc * sc);
  if (!(rest > 0.0)) throw DomainError("quadratic_kl_pair: required covariance not attainable at this z");

  KlPair pair;
  auto truth = std::make_shared<GaussianVarDensity>(2, 2);
  pair.phi_true = Vector::Zero(GaussianVarDensity::full_dim(2, 2));
  pair.phi_true(truth->transition_slot(0, 0)) = config.rho;
  pair.phi_true(truth->transition_slot(1, 1)) = config.rho;
  pair.phi_true(truth->chol_slot(0, 0)) = std::log(sc);
  pair.phi_true(truth->chol_slot(1, 0)) = k / sc;
  pair.phi_true(truth->chol_slot(1, 1)) = 0.5 * std::log(rest);
  pair.truth = truth;

  AffineMapBuilder b(GaussianVarDensity::full_dim(2, 2), 2);
  b.fix(0, 0.0).fix(1, 0.0).bind(2, 0).fix(3, 0.0).fix(4, 0.0).bind(5, 1);
  b.fix(6, 0.0).fix(7, 0.0).fix(8, 0.0);
  pair.model.density = std::make_shared<GaussianVarDensity>(2, 2, b.build());
  pair.model.moments = std::make_shared<QuadraticCovarianceRestriction>(config.rho, config.rho);
  pair.psi = Vector(3);
  pair.psi << config.beta, config.rho, config.rho;
  return pair;
}

}  // namespace tiltlik
