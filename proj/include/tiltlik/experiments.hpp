#pragma once

#include "tiltlik/baselines.hpp"
#include "tiltlik/inference.hpp"
#include "tiltlik/tilted_estimator.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tiltlik {

/// Bivariate log-normal VAR for consumption growth and the gross rate:
///   log G_{t+1} = log beta + log R_t + sigma2_C / 2 + e_C
///   log R_{t+1} = -(1 - rho_R) log beta + rho_R log R_t + e_R
/// with measurement error eta ~ N(sigma2_C_me / 2, sigma2_C_me) added to the
/// observed log G. Both mean shifts keep E[beta R_t / G_{t+1} | R_t] = 1.
struct DgpConfig {
  double rho_R = 0.95;
  double beta = 0.85;
  double sigma2_R = 0.5;
  double sigma2_C = 0.5;
  double sigma2_C_me = 0.05;
  Index burn_in = 200;

  void validate() const;
};

/// Levels (G_t, R_t), t = 0..N, with and without measurement error. Both
/// come from the same shocks.
struct DgpData {
  Matrix observed;
  Matrix clean;
};

DgpData simulate_dgp(const DgpConfig& dgp, Index n, RandomStream& rng);

enum class McEstimator { tilted_correct, tilted_restricted, cu_gmm, etel };

McEstimator parse_mc_estimator(const std::string& text);
const char* to_string(McEstimator e);
std::vector<McEstimator> all_mc_estimators();

struct McConfig {
  DgpConfig dgp;
  std::vector<Index> sample_sizes{20, 50, 100, 200, 500};
  Index replications = 500;
  std::vector<McEstimator> estimators = all_mc_estimators();
  std::uint64_t seed = 0;
  /// Draws per observation for the tilted estimators; 0 selects the
  /// estimator default max(10000, 20 N).
  Index n_sim = 0;
  /// Simplex size tolerance of the outer Nelder-Mead.
  double xatol = 1e-4;
  int threads = 1;
  /// Asymptotic standard errors and first-order-condition blocks for the
  /// tilted-correct runs at these sample sizes.
  std::vector<Index> inference_sizes;
  Index inference_n_sim = 20000;

  void validate() const;
};

/// Structural parameters implied by the DGP for each tilted specification.
Vector true_psi_correct(const DgpConfig& dgp);
Vector true_psi_restricted(const DgpConfig& dgp);

TiltedModel euler_model_correct(const DgpConfig& dgp, Index n_sim);
TiltedModel euler_model_restricted(const DgpConfig& dgp, Index n_sim);

/// Just-identified estimate 1 / mean(R_{t-1} / G_t), clamped to the beta
/// range; the start of every Euler estimator.
double euler_moment_start(const Sample& s);

/// Tilted estimate of one Euler specification (correct or restricted layout
/// of `model`) from the moment start, with beta mapped into (0, 2) and the
/// coordinates that do not enter the tilt profiled at the base MLE.
EstimationResult estimate_euler_tilted(const TiltedModel& model, bool correct, const Sample& s, double xatol,
                                       std::uint64_t seed);

/// CU-GMM or ETEL with instruments (1, G_{t-1}, R_{t-1}); `moments`
/// defaults to the log-growth Euler residual.
BaselineResult estimate_euler_baseline(McEstimator which, const Sample& s, double xatol, MomentPtr moments = nullptr);

struct McRun {
  McEstimator estimator = McEstimator::tilted_correct;
  Index n = 0;
  Index replication = 0;
  double beta_hat = 0.0;
  bool failed = false;
  std::string diagnostic;
  int evaluations = 0;
  /// Inference outputs; NaN when not computed.
  double beta_se = 0.0;
  double foc_theta = 0.0;
  Vector foc_phi;
};

struct McRow {
  McEstimator estimator = McEstimator::tilted_correct;
  Index n = 0;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  Index n_failed = 0;
  Index n_runs = 0;
  std::uint64_t seed = 0;
  /// More than 5% of the runs failed.
  bool flagged = false;
};

struct McTable {
  std::vector<McRow> rows;
  std::vector<McRun> runs;

  const McRow* find(McEstimator e, Index n) const;
};

/// One estimator on one replication. Never throws for estimation failures;
/// they are reported through McRun::failed.
McRun run_replication(const McConfig& config, McEstimator estimator, Index n, Index replication);

/// Active tasks are (N, replication, estimator) triples. progress(done, total)
/// is called from the calling thread after each completed task.
McTable run_euler_mc(const McConfig& config,
                     const std::function<void(std::size_t, std::size_t)>& progress = {});

/// Bias, variance (divisor = number of successful runs) and mse = bias^2 +
/// variance for runs of one cell.
McRow summarize_runs(const std::vector<McRun>& runs, McEstimator e, Index n, double truth,
                     std::uint64_t seed);

/// Coverage of beta_hat +- 1.96 se and the largest absolute cross-replication
/// correlation between the theta and phi first-order-condition blocks.
struct CoverageSummary {
  Index n = 0;
  Index n_used = 0;
  double coverage = 0.0;
  double max_abs_block_corr = 0.0;
  Vector block_corr;
};

CoverageSummary coverage_summary(const McTable& table, Index n, double truth);

/// KL(P||F) and KL(P||H) at one z from draws of the true density P.
struct KlEstimate {
  Vector z;
  double kl_base = 0.0;
  double kl_tilted = 0.0;
  double lambda = 0.0;
  /// kl_tilted - kl_base and its Monte Carlo standard error, which combines
  /// the spread over truth draws with the error of lambda from the
  /// projection draws.
  double difference = 0.0;
  double difference_se = 0.0;
  Vector mu;
};

struct KlOptions {
  Index n_truth = 100000;   // draws from P per z
  Index n_project = 200000; // draws from F for the projection
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// The true density P is `truth` at `phi_true`; the base and moment are
/// `model` at `psi`. Throws NoInteriorSolution when a projection fails.
std::vector<KlEstimate> run_kl_check(const ConditionalDensity& truth, const Vector& phi_true,
                                     const TiltedModel& model, const Vector& psi, const Matrix& z_set,
                                     const KlOptions& options = {});

/// Synthetic (truth, base) pair at one z for the KL check. The base is
/// N(rho z, I) and the moment is the quadratic covariance restriction with
/// rho_c = rho_R = rho; the truth N(rho z, Sigma) has standard deviations
/// (truth_sd_c, truth_sd_r) and the covariance the restriction requires at z,
/// so it satisfies the moment exactly while the base does not.
struct KlPairConfig {
  double beta = 0.9;
  double rho = 0.5;
  double truth_sd_c = 1.2;
  double truth_sd_r = 0.8;
  void validate() const;
};

struct KlPair {
  std::shared_ptr<const GaussianVarDensity> truth;
  Vector phi_true;
  TiltedModel model;
  Vector psi;
};

/// Throws DomainError when the required covariance is not attainable with
/// the stated standard deviations.
KlPair quadratic_kl_pair(const KlPairConfig& config, const Vector& z);

}  // namespace tiltlik
