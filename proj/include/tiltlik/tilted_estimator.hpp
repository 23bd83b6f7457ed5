#pragma once

#include "tiltlik/density.hpp"
#include "tiltlik/moments.hpp"
#include "tiltlik/optimize.hpp"
#include "tiltlik/projection.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tiltlik {

using DensityPtr = std::shared_ptr<const ConditionalDensity>;

/// Observations paired with their conditioning values: row i of x is the
/// outcome, row i of z the information available before it.
struct Sample {
  Matrix x;
  Matrix z;

  Index size() const { return x.rows(); }
  Vector x_row(Index i) const { return x.row(i).transpose(); }
  Vector z_row(Index i) const { return z.row(i).transpose(); }
};

/// Markov conditioning z_i = y_{i-1}: a series of T rows gives T - 1 observations.
Sample markov_sample(const Matrix& series);

/// Contribution of an infeasible projection to the summed log-likelihood.
inline constexpr double kInfeasiblePenalty = -1e6;

/// Base density, moment restriction and simulation settings.
/// The full parameter is psi = (theta, phi).
struct TiltedModel {
  DensityPtr density;
  MomentPtr moments;
  /// Draws per conditioning value; 0 selects max(10000, 20 N).
  Index n_sim = 0;
  SolverOptions solver;

  Index theta_dim() const { return moments->theta_dim(); }
  Index phi_dim() const { return density->param_dim(); }
  Index psi_dim() const { return theta_dim() + phi_dim(); }
  Vector theta(const Vector& psi) const { return psi.head(theta_dim()); }
  Vector phi(const Vector& psi) const { return psi.tail(phi_dim()); }
  Index resolved_n_sim(Index n_obs) const;
  void validate() const;
};

struct LoglikValue {
  double value = 0.0;  // mean over observations
  Index infeasible_count = 0;
  bool all_infeasible() const { return n_obs > 0 && infeasible_count == n_obs; }
  Index n_obs = 0;
};

/// Per-observation projection outcome at one psi.
struct ObservationFit {
  double contribution = 0.0;  // log h(x_i | z_i) or the penalty
  bool feasible = false;
  Vector mu;
  double lambda = 0.0;
};

/// Simulated tilted log-likelihood with common random numbers: the noise
/// for observation i comes from the substream (rng_root, i) and is drawn
/// once, so the objective is a deterministic function of psi.
class TiltedObjective {
 public:
  TiltedObjective(TiltedModel model, Sample sample, std::uint64_t rng_root, int threads = 1);

  const TiltedModel& model() const { return model_; }
  const Sample& sample() const { return sample_; }
  Index n_sim() const { return n_sim_; }
  std::uint64_t rng_root() const { return rng_root_; }

  LoglikValue operator()(const Vector& psi) const;
  std::vector<ObservationFit> fits(const Vector& psi) const;
  ObservationFit fit(Index i, const Vector& psi) const;

  /// Draws for observation i at phi (n_sim x x_dim).
  Matrix draws(Index i, const Vector& phi) const;

 private:
  TiltedModel model_;
  Sample sample_;
  std::uint64_t rng_root_;
  int threads_;
  Index n_sim_;
  std::vector<Matrix> noise_;
};

/// One-shot evaluation of the tilted log-likelihood.
LoglikValue tilted_loglik(const TiltedModel& model, const Sample& sample, const Vector& psi,
                          std::uint64_t rng_root, int threads = 1);

/// Mean base log-likelihood (1/N) sum_i log f(x_i | z_i, phi).
double base_loglik(const ConditionalDensity& density, const Sample& sample, const Vector& phi);

/// Elementwise map from an unconstrained optimizer coordinate to a parameter.
struct ParamTransform {
  enum class Kind { identity, logistic, exp, tanh };
  Kind kind = Kind::identity;
  double lo = 0.0;  // logistic bounds
  double hi = 1.0;

  static ParamTransform identity() { return {}; }
  static ParamTransform logistic(double lo = 0.0, double hi = 1.0) { return {Kind::logistic, lo, hi}; }
  static ParamTransform positive() { return {Kind::exp, 0.0, 0.0}; }
  static ParamTransform correlation() { return {Kind::tanh, -1.0, 1.0}; }

  double to_param(double u) const;
  double to_internal(double p) const;
};

enum class EstimationMode { joint, two_step };

EstimationMode parse_estimation_mode(const std::string& text);
const char* to_string(EstimationMode mode);

struct EstimateOptions {
  EstimationMode mode = EstimationMode::joint;
  NelderMeadOptions optimizer;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Per-coordinate transforms of psi; empty means identity everywhere.
  std::vector<ParamTransform> transforms;
  /// phi coordinates that do not affect the tilt. They are held at the base
  /// MLE during the tilted maximization, which is exact when the base
  /// likelihood separates in them.
  std::vector<Index> profiled_phi;
};

struct EstimationResult {
  Vector psi_hat;
  double loglik = 0.0;
  Matrix theta_block_cov;
  Matrix phi_block_cov;
  Index infeasible_count = 0;
  bool converged = false;
  int evaluations = 0;
  std::string diagnostic;
};

/// Maximizes the tilted log-likelihood by Nelder-Mead with one fixed
/// rng_root (options.seed). two_step first maximizes the base likelihood over
/// phi, then the tilted likelihood over theta with phi held fixed.
EstimationResult estimate(const TiltedModel& model, const Sample& sample, const Vector& init,
                          const EstimateOptions& options = {});

/// Base MLE of phi by Nelder-Mead from `init`, with optional per-coordinate
/// transforms of phi.
NelderMeadResult maximize_base_loglik(const ConditionalDensity& density, const Sample& sample,
                                      const Vector& init,
                                      const std::vector<ParamTransform>& transforms = {},
                                      const NelderMeadOptions& optimizer = {});

}  // namespace tiltlik
