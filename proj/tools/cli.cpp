#include "cli.hpp"

#include "config.hpp"
#include "csv.hpp"

#include "tiltlik/counterfactual.hpp"
#include "tiltlik/experiments.hpp"
#include "tiltlik/inference.hpp"
#include "tiltlik/parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#ifndef TILTLIK_VERSION
#define TILTLIK_VERSION "unknown"
#endif

namespace tiltcli {

namespace {

using tiltlik::Index;
using tiltlik::Matrix;
using tiltlik::Vector;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::string threads;
  std::string estimator;
};

struct Context {
  std::string command;
  Config config;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;
  std::string estimator_flag;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  std::string file(const std::string& name) const { return (out_dir / name).string(); }

  /// Rejects unknown keys and writes the resolved configuration. Called by
  /// every command once all of its settings are read.
  void commit_config() {
    config.check_consumed();
    std::filesystem::create_directories(out_dir);
    write_text(file("metadata.ini"), config.echo_ini());
  }
};

int parse_threads(const std::string& text) {
  if (text == "auto") return tiltlik::resolve_threads(0);
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size() && v >= 1) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("threads must be a positive integer or 'auto', got '" + text + "'");
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

tiltlik::SolverOptions read_solver(Config& c) {
  tiltlik::SolverOptions s;
  s.tol_grad = c.get_double("solver", "tol_grad", s.tol_grad);
  s.max_iter = static_cast<int>(c.get_int("solver", "max_iter", s.max_iter));
  s.ridge = c.get_double("solver", "ridge", s.ridge);
  s.mu_cap = c.get_double("solver", "mu_cap", s.mu_cap);
  s.validate();
  return s;
}

tiltlik::DgpConfig read_dgp(Config& c) {
  tiltlik::DgpConfig d;
  d.rho_R = c.get_double("dgp", "rho_R", d.rho_R);
  d.beta = c.get_double("dgp", "beta", d.beta);
  d.sigma2_R = c.get_double("dgp", "sigma2_R", d.sigma2_R);
  d.sigma2_C = c.get_double("dgp", "sigma2_C", d.sigma2_C);
  d.sigma2_C_me = c.get_double("dgp", "sigma2_C_me", d.sigma2_C_me);
  d.burn_in = c.get_int("dgp", "burn_in", d.burn_in);
  d.validate();
  return d;
}

std::vector<Index> to_index(const std::vector<long long>& v) { return {v.begin(), v.end()}; }

void write_diagnostic(Context& ctx, const std::string& message) {
  std::filesystem::create_directories(ctx.out_dir);
  write_text(ctx.file("diagnostic.txt"), ctx.command + ": " + message + "\n");
  *ctx.err << ctx.command << ": " << message << "\n";
}

// ---------------------------------------------------------------- project

int cmd_project(Context& ctx) {
  Config& c = ctx.config;
  const std::string input = c.get_path("project", "input");
  const tiltlik::SolverOptions solver = read_solver(c);
  c.check_consumed();
  if (input.empty()) throw UsageError("config key 'project.input' is required");
  ctx.commit_config();

  const Matrix m = read_numeric_csv(input);
  const tiltlik::ProjectionResult r = tiltlik::try_solve_multipliers(m, solver);
  CsvTable t;
  for (Index k = 0; k < m.cols(); ++k) t.header.push_back("mu_" + std::to_string(k + 1));
  for (const char* h : {"lambda", "grad_norm", "iterations", "status"}) t.header.emplace_back(h);
  std::vector<std::string> row;
  for (Index k = 0; k < m.cols(); ++k) row.push_back(cell(r.mu.size() ? r.mu(k) : kNaN));
  row.push_back(cell(r.lambda));
  row.push_back(cell(r.grad_norm));
  row.push_back(cell(r.iterations));
  row.push_back(tiltlik::to_string(r.status));
  t.add_row(row);
  write_csv(ctx.file("projection.csv"), t);
  if (!r.converged) {
    write_diagnostic(ctx, std::string("projection did not converge: ") + tiltlik::to_string(r.status));
    return 2;
  }
  *ctx.out << "mu =";
  for (Index k = 0; k < r.mu.size(); ++k) *ctx.out << " " << format_double(r.mu(k));
  *ctx.out << "\nlambda = " << format_double(r.lambda) << "\n";
  return 0;
}

// --------------------------------------------------------------- estimate

std::vector<std::string> euler_param_names(bool correct) {
  if (correct) return {"beta", "intercept_g", "intercept_r", "slope_g_r", "slope_r_r", "log_sd_r"};
  return {"beta", "intercept_g", "intercept_r", "slope_common", "log_sd_r"};
}

tiltlik::McEstimator parse_estimator(const std::string& text) {
  if (text == "tilted") return tiltlik::McEstimator::tilted_correct;
  try {
    return tiltlik::parse_mc_estimator(text);
  } catch (const tiltlik::InvalidParameter&) {
    throw UsageError("unknown estimator '" + text + "' (tilted, tilted_correct, tilted_restricted, cu_gmm, etel)");
  }
}

int cmd_estimate(Context& ctx) {
  Config& c = ctx.config;
  const tiltlik::DgpConfig dgp = read_dgp(c);
  const std::string source = c.get_string("data", "source", "file");
  std::string path;
  Index n_sim_data = 0;
  if (source == "file") {
    path = c.get_path("data", "path");
  } else if (source == "simulate") {
    n_sim_data = c.get_int("data", "n", 200);
    if (n_sim_data < 2) throw UsageError("config key 'data.n' must be at least 2");
  } else {
    throw UsageError("config key 'data.source' must be file or simulate, got '" + source + "'");
  }
  std::string est_name = c.get_string("estimate", "estimator", "tilted_correct");
  if (!ctx.estimator_flag.empty()) {
    est_name = ctx.estimator_flag;
    c.echo_value("estimate", "estimator", est_name);
  }
  const tiltlik::McEstimator est = parse_estimator(est_name);
  const Index n_sim = c.get_int("estimate", "n_sim", 0);
  const double xatol = c.get_double("estimate", "xatol", 1e-4);
  const std::string moment_name = c.get_string("estimate", "moments", "euler_log_growth");
  const bool want_inference = c.get_bool("inference", "enabled", true);
  const Index inference_n_sim = c.get_int("inference", "n_sim", 20000);
  if (n_sim < 0 || inference_n_sim < 1 || !(xatol > 0.0)) throw UsageError("invalid estimate settings");
  tiltlik::MomentPtr moments;
  try {
    moments = tiltlik::make_moment_model(moment_name);
  } catch (const tiltlik::InvalidParameter& e) {
    throw UsageError(e.what());
  }
  if (moments->theta_dim() != 1 || moments->x_dim() != 2 || moments->z_dim() != 2) {
    throw UsageError("moment model '" + moment_name + "' does not fit the (consumption growth, rate) layout");
  }
  c.check_consumed();
  if (source == "file" && path.empty()) throw UsageError("config key 'data.path' is required when data.source = file");
  ctx.commit_config();

  Matrix observed, clean;
  if (source == "file") {
    observed = read_numeric_csv(path);
    if (observed.cols() != 2) throw UsageError("data file must have two columns (G, R)");
    clean = observed;
  } else {
    tiltlik::RandomStream rng = tiltlik::RandomStream::derive(ctx.seed, {0});
    const tiltlik::DgpData d = tiltlik::simulate_dgp(dgp, n_sim_data, rng);
    observed = d.observed;
    clean = d.clean;
  }

  CsvTable params;
  params.header = {"parameter", "value", "se"};
  CsvTable summary;
  summary.header = {"estimator", "n_obs", "loglik", "criterion", "infeasible_count", "converged", "evaluations"};
  std::string text;
  bool converged = false;
  std::string diagnostic;

  if (est == tiltlik::McEstimator::tilted_correct || est == tiltlik::McEstimator::tilted_restricted) {
    const bool correct = est == tiltlik::McEstimator::tilted_correct;
    const tiltlik::Sample s = tiltlik::markov_sample(observed);
    tiltlik::TiltedModel model =
        correct ? tiltlik::euler_model_correct(dgp, n_sim) : tiltlik::euler_model_restricted(dgp, n_sim);
    model.moments = moments;
    const tiltlik::EstimationResult r = tiltlik::estimate_euler_tilted(
        model, correct, s, xatol, tiltlik::RandomStream::derive(ctx.seed, {1}).key());
    converged = r.converged;
    diagnostic = r.diagnostic;
    Vector se = Vector::Constant(r.psi_hat.size(), kNaN);
    if (want_inference && r.converged) {
      tiltlik::InferenceOptions io;
      io.n_sim = inference_n_sim;
      io.seed = tiltlik::RandomStream::derive(ctx.seed, {2}).key();
      io.threads = ctx.threads;
      const tiltlik::CovarianceBlocks cov = tiltlik::asymptotic_covariance(model, s, r.psi_hat, io);
      se << cov.theta_se(s.size()), cov.phi_se(s.size());
    }
    const std::vector<std::string> names = euler_param_names(correct);
    for (Index k = 0; k < r.psi_hat.size(); ++k) params.add_row({names[k], cell(r.psi_hat(k)), cell(se(k))});
    summary.add_row({tiltlik::to_string(est), cell(s.size()), cell(r.loglik), cell(r.loglik),
                     cell(r.infeasible_count), cell(r.converged), cell(r.evaluations)});
    text += "tilted log-likelihood (mean) " + format_double(r.loglik) + ", infeasible projections " +
            std::to_string(r.infeasible_count) + "\n";
    for (Index k = 0; k < r.psi_hat.size(); ++k) {
      text += "  " + names[k] + " = " + format_double(r.psi_hat(k)) + "  (se " + format_double(se(k)) + ")\n";
    }
  } else {
    const tiltlik::Sample s = tiltlik::markov_sample(clean);
    const tiltlik::BaselineResult r = tiltlik::estimate_euler_baseline(est, s, xatol, moments);
    converged = r.converged && std::isfinite(r.objective);
    if (!converged) diagnostic = "optimizer did not converge or the objective is not finite";
    params.add_row({"beta", cell(r.theta(0)), cell(kNaN)});
    summary.add_row({tiltlik::to_string(est), cell(s.size()), cell(kNaN), cell(r.objective), cell(0),
                     cell(r.converged), cell(r.evaluations)});
    text += std::string(tiltlik::to_string(est)) + " objective " + format_double(r.objective) + "\n  beta = " +
            format_double(r.theta(0)) + "\n";
  }
  write_csv(ctx.file("estimate.csv"), params);
  write_csv(ctx.file("summary.csv"), summary);
  text = std::string("estimator ") + tiltlik::to_string(est) + ", converged " + (converged ? "yes" : "no") + "\n" + text;
  write_text(ctx.file("summary.txt"), text);
  *ctx.out << text;
  if (!converged) {
    write_diagnostic(ctx, "estimation did not converge" + (diagnostic.empty() ? "" : ": " + diagnostic));
    return 2;
  }
  return 0;
}

// ------------------------------------------------------------- montecarlo

int cmd_montecarlo(Context& ctx) {
  Config& c = ctx.config;
  tiltlik::McConfig mc;
  mc.dgp = read_dgp(c);
  mc.sample_sizes = to_index(c.get_int_list("montecarlo", "sample_sizes", {20, 50, 100, 200, 500}));
  mc.replications = c.get_int("montecarlo", "replications", 500);
  std::vector<std::string> names = c.get_string_list("montecarlo", "estimators",
                                                     {"tilted_correct", "tilted_restricted", "cu_gmm", "etel"});
  if (!ctx.estimator_flag.empty()) {
    std::vector<std::string> flag_names;
    std::string item;
    for (std::size_t k = 0, b = 0; k <= ctx.estimator_flag.size(); ++k) {
      if (k == ctx.estimator_flag.size() || ctx.estimator_flag[k] == ',') {
        item = ctx.estimator_flag.substr(b, k - b);
        if (!item.empty()) flag_names.push_back(item);
        b = k + 1;
      }
    }
    names = flag_names;
    std::string joined;
    for (std::size_t k = 0; k < names.size(); ++k) joined += (k ? "," : "") + names[k];
    c.echo_value("montecarlo", "estimators", joined);
  }
  mc.estimators.clear();
  for (const std::string& n : names) mc.estimators.push_back(parse_estimator(n));
  mc.n_sim = c.get_int("montecarlo", "n_sim", 0);
  mc.xatol = c.get_double("montecarlo", "xatol", mc.xatol);
  mc.inference_sizes = to_index(c.get_int_list("montecarlo", "inference_sizes", {}));
  mc.inference_n_sim = c.get_int("montecarlo", "inference_n_sim", mc.inference_n_sim);
  mc.seed = ctx.seed;
  mc.threads = ctx.threads;
  try {
    mc.validate();
  } catch (const tiltlik::InvalidParameter& e) {
    throw UsageError(e.what());
  }
  ctx.commit_config();

  std::size_t last_pct = 0;
  const tiltlik::McTable table = tiltlik::run_euler_mc(mc, [&](std::size_t done, std::size_t total) {
    const std::size_t pct = 100 * done / total;
    if (pct >= last_pct + 10 || done == total) {
      last_pct = pct;
      *ctx.err << "montecarlo: " << done << "/" << total << " tasks\n";
    }
  });

  CsvTable t;
  t.header = {"estimator", "N", "bias", "variance", "mse", "n_failed", "seed"};
  std::string flagged;
  for (const tiltlik::McRow& r : table.rows) {
    t.add_row({tiltlik::to_string(r.estimator), cell(r.n), cell(r.bias), cell(r.variance), cell(r.mse),
               cell(r.n_failed), cell(static_cast<unsigned long long>(r.seed))});
    if (r.flagged) {
      flagged += std::string("  ") + tiltlik::to_string(r.estimator) + " N=" + std::to_string(r.n) + ": " +
                 std::to_string(r.n_failed) + " of " + std::to_string(r.n_runs) + " runs failed\n";
    }
  }
  write_csv(ctx.file("mc_table.csv"), t);

  CsvTable runs;
  runs.header = {"estimator", "N", "replication", "beta_hat", "failed", "evaluations", "beta_se", "foc_theta"};
  const Index n_foc = 5;
  for (Index k = 0; k < n_foc; ++k) runs.header.push_back("foc_phi_" + std::to_string(k + 1));
  runs.header.emplace_back("diagnostic");
  for (const tiltlik::McRun& r : table.runs) {
    std::vector<std::string> row = {tiltlik::to_string(r.estimator), cell(r.n), cell(r.replication),
                                    cell(r.beta_hat), cell(r.failed), cell(r.evaluations),
                                    cell(r.beta_se), cell(r.foc_theta)};
    for (Index k = 0; k < n_foc; ++k) row.push_back(cell(k < r.foc_phi.size() ? r.foc_phi(k) : kNaN));
    row.push_back(sanitize(r.diagnostic));
    runs.add_row(row);
  }
  write_csv(ctx.file("mc_runs.csv"), runs);

  if (!mc.inference_sizes.empty()) {
    CsvTable cov;
    cov.header = {"N", "n_used", "coverage", "max_abs_block_corr"};
    for (Index n : mc.inference_sizes) {
      const tiltlik::CoverageSummary cs = tiltlik::coverage_summary(table, n, mc.dgp.beta);
      cov.add_row({cell(n), cell(cs.n_used), cell(cs.coverage), cell(cs.max_abs_block_corr)});
    }
    write_csv(ctx.file("coverage.csv"), cov);
  }

  *ctx.out << t.to_string();
  if (!flagged.empty()) *ctx.out << "cells with more than 5% failed runs:\n" << flagged;
  return 0;
}

// --------------------------------------------------------- counterfactual

CsvTable grid_table(const tiltlik::DensityGrid& g) {
  CsvTable t;
  t.header = {"x1", "x2", "log_h"};
  for (Index i = 0; i < g.x1_grid.size(); ++i) {
    for (Index j = 0; j < g.x2_grid.size(); ++j) {
      t.add_row({cell(g.x1_grid(i)), cell(g.x2_grid(j)), cell(g.log_h(i, j))});
    }
  }
  return t;
}

int cmd_counterfactual(Context& ctx) {
  Config& c = ctx.config;
  tiltlik::CrraDesign d;
  d.mean_c = c.get_double("crra", "mean_c", d.mean_c);
  d.mean_r = c.get_double("crra", "mean_r", d.mean_r);
  d.sd_c = c.get_double("crra", "sd_c", d.sd_c);
  d.sd_r = c.get_double("crra", "sd_r", d.sd_r);
  d.corr = c.get_double("crra", "corr", d.corr);
  d.beta = c.get_double("crra", "beta", d.beta);
  const std::vector<double> z = c.get_double_list("crra", "z", {d.z(0), d.z(1)});
  if (z.size() != 2) throw UsageError("config key 'crra.z' must have two entries");
  d.z = Vector(2);
  d.z << z[0], z[1];
  try {
    d.validate();
  } catch (const tiltlik::InvalidParameter& e) {
    throw UsageError(e.what());
  }
  const double gamma_base = c.get_double("counterfactual", "gamma_base", 1.0);
  const double gamma_new = c.get_double("counterfactual", "gamma_new", 5.0);
  tiltlik::CounterfactualOptions o;
  o.n_sim = c.get_int("counterfactual", "n_sim", 100000);
  o.solver = read_solver(c);
  tiltlik::GridSpec g;
  g.x1_lo = c.get_double("grid", "x1_lo", d.mean_c - 4.0 * d.sd_c);
  g.x1_hi = c.get_double("grid", "x1_hi", d.mean_c + 4.0 * d.sd_c);
  g.n1 = c.get_int("grid", "n1", 81);
  g.x2_lo = c.get_double("grid", "x2_lo", d.mean_r - 4.0 * d.sd_r);
  g.x2_hi = c.get_double("grid", "x2_hi", d.mean_r + 4.0 * d.sd_r);
  g.n2 = c.get_int("grid", "n2", 81);
  if (o.n_sim < 2 || g.n1 < 2 || g.n2 < 2 || !(g.x1_hi > g.x1_lo) || !(g.x2_hi > g.x2_lo)) {
    throw UsageError("invalid counterfactual grid or simulation size");
  }
  o.seed = tiltlik::RandomStream::derive(ctx.seed, {4}).key();
  ctx.commit_config();

  const tiltlik::TiltedModel model = tiltlik::crra_model(o.n_sim);
  const Vector psi0 = tiltlik::crra_psi(d, gamma_base);
  const Vector psi1 = tiltlik::crra_psi(d, gamma_new);
  const auto grids = tiltlik::counterfactual_grid(model, psi0, psi1, d.z, g, o);
  write_csv(ctx.file("grid_base.csv"), grid_table(grids.first));
  write_csv(ctx.file("grid_counterfactual.csv"), grid_table(grids.second));

  CsvTable s;
  s.header = {"label", "gamma", "mean_c", "mean_r", "sd_c", "sd_r", "corr", "lambda", "mu", "grid_mass"};
  const auto add = [&](const std::string& label, double gamma, const Vector& psi, const tiltlik::DensityGrid& grid) {
    const tiltlik::TiltedSummary t = tiltlik::tilted_summary(model, psi, d.z, o);
    s.add_row({label, cell(gamma), cell(t.mean(0)), cell(t.mean(1)), cell(std::sqrt(t.cov(0, 0))),
               cell(std::sqrt(t.cov(1, 1))), cell(t.corr), cell(t.lambda), cell(t.mu(0)), cell(grid.mass())});
  };
  add("base", gamma_base, psi0, grids.first);
  add("counterfactual", gamma_new, psi1, grids.second);
  write_csv(ctx.file("summary.csv"), s);

  CsvTable e;
  e.header = {"target", "parameter", "effect", "mc_se"};
  const std::vector<std::string> pnames = {"beta", "gamma", "intercept_c", "intercept_r", "slope_c_c", "slope_c_r",
                                           "slope_r_c", "slope_r_r", "log_chol_c_c", "chol_r_c", "log_chol_r_r"};
  const std::vector<tiltlik::Target> targets = {{"c", [](const Vector& x) { return x(0); }},
                                                {"r", [](const Vector& x) { return x(1); }}};
  for (const tiltlik::Target& target : targets) {
    const tiltlik::EffectReport r = tiltlik::average_effect(model, psi0, d.z, target, o);
    const Index nt = r.d_dtheta.size();
    for (Index k = 0; k < nt + r.d_dphi.size(); ++k) {
      const double v = k < nt ? r.d_dtheta(k) : r.d_dphi(k - nt);
      e.add_row({target.name, pnames.at(static_cast<std::size_t>(k)), cell(v), cell(r.mc_se(k))});
    }
  }
  write_csv(ctx.file("effects.csv"), e);
  *ctx.out << s.to_string();
  return 0;
}

// --------------------------------------------------------------- kl-check

int cmd_kl_check(Context& ctx) {
  Config& c = ctx.config;
  tiltlik::KlPairConfig pc;
  pc.beta = c.get_double("kl", "beta", pc.beta);
  pc.rho = c.get_double("kl", "rho", pc.rho);
  pc.truth_sd_c = c.get_double("kl", "truth_sd_c", pc.truth_sd_c);
  pc.truth_sd_r = c.get_double("kl", "truth_sd_r", pc.truth_sd_r);
  const std::vector<double> zc = c.get_double_list("kl", "z_c", {0.2, 0.5, 0.8});
  const std::vector<double> zr = c.get_double_list("kl", "z_r", {1.0, 1.0, 1.0});
  tiltlik::KlOptions o;
  o.n_truth = c.get_int("kl", "n_truth", o.n_truth);
  o.n_project = c.get_int("kl", "n_project", o.n_project);
  o.solver = read_solver(c);
  if (zc.size() != zr.size() || zc.empty()) throw UsageError("config keys 'kl.z_c' and 'kl.z_r' must have equal length");
  if (o.n_truth < 2 || o.n_project < 2) throw UsageError("kl sample sizes must be at least 2");
  try {
    pc.validate();
  } catch (const tiltlik::InvalidParameter& e) {
    throw UsageError(e.what());
  }
  ctx.commit_config();

  CsvTable t;
  t.header = {"z_c", "z_r", "kl_base", "kl_tilted", "lambda", "difference", "difference_se", "mu"};
  for (std::size_t i = 0; i < zc.size(); ++i) {
    Vector z(2);
    z << zc[i], zr[i];
    const tiltlik::KlPair pair = tiltlik::quadratic_kl_pair(pc, z);
    tiltlik::KlOptions oi = o;
    oi.seed = tiltlik::RandomStream::derive(ctx.seed, {3, static_cast<std::uint64_t>(i)}).key();
    const auto est = tiltlik::run_kl_check(*pair.truth, pair.phi_true, pair.model, pair.psi, z.transpose(), oi);
    const tiltlik::KlEstimate& e = est.front();
    t.add_row({cell(z(0)), cell(z(1)), cell(e.kl_base), cell(e.kl_tilted), cell(e.lambda), cell(e.difference),
               cell(e.difference_se), cell(e.mu(0))});
  }
  write_csv(ctx.file("kl.csv"), t);
  *ctx.out << t.to_string();
  return 0;
}

int dispatch(Context& ctx) {
  if (ctx.command == "project") return cmd_project(ctx);
  if (ctx.command == "estimate") return cmd_estimate(ctx);
  if (ctx.command == "montecarlo") return cmd_montecarlo(ctx);
  if (ctx.command == "counterfactual") return cmd_counterfactual(ctx);
  if (ctx.command == "kl-check") return cmd_kl_check(ctx);
  throw UsageError("unknown command '" + ctx.command + "'");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tilted likelihood estimation, counterfactuals and Monte Carlo studies"};
  app.set_version_flag("--version", TILTLIK_VERSION);
  app.require_subcommand(1, 1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"project", "solve the projection for a CSV of simulated moment values"},
      {"estimate", "estimate the Euler model on a data file or simulated data"},
      {"montecarlo", "Monte Carlo comparison of the Euler estimators"},
      {"counterfactual", "CRRA counterfactual densities, moments and effects"},
      {"kl-check", "KL improvement check on synthetic truth and base pairs"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "configuration file (INI)");
    sub->add_option("--seed", flags.seed, "root seed (default: run.seed in the config, else 0)");
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    sub->add_option("--threads", flags.threads, "worker threads, a positive integer or auto");
    if (std::string(name) == "estimate" || std::string(name) == "montecarlo") {
      sub->add_option("--estimator", flags.estimator,
                      "estimator (tilted, tilted_correct, tilted_restricted, cu_gmm, etel); comma list for montecarlo");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.out_dir = flags.out;
  ctx.estimator_flag = flags.estimator;
  ctx.out = &out;
  ctx.err = &err;
  try {
    if (!flags.config.empty()) ctx.config = Config::load(flags.config);
    Config& c = ctx.config;
    const std::string recorded = c.get_string("run", "command", ctx.command);
    if (recorded != ctx.command) {
      throw UsageError("config was written for '" + recorded + "', not '" + ctx.command + "'");
    }
    ctx.seed = c.get_u64("run", "seed", 0);
    if (flags.seed) {
      ctx.seed = *flags.seed;
      c.echo_value("run", "seed", std::to_string(ctx.seed));
    }
    std::string threads = c.get_string("run", "threads", "auto");
    if (!flags.threads.empty()) threads = flags.threads;
    ctx.threads = parse_threads(threads);
    c.echo_value("run", "threads", threads);
    c.get_string("run", "version", TILTLIK_VERSION);
    c.echo_value("run", "version", TILTLIK_VERSION);
    return dispatch(ctx);
  } catch (const UsageError& e) {
    err << ctx.command << ": " << e.what() << "\n";
    return 1;
  } catch (const tiltlik::InvalidParameter& e) {
    err << ctx.command << ": " << e.what() << "\n";
    return 1;
  } catch (const tiltlik::DimensionError& e) {
    err << ctx.command << ": " << e.what() << "\n";
    return 1;
  } catch (const tiltlik::Error& e) {
    try {
      write_diagnostic(ctx, e.what());
    } catch (const std::exception&) {
    }
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << ctx.command << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tiltcli
