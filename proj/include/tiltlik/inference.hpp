#pragma once

#include "tiltlik/tilted_estimator.hpp"

#include <cstdint>

namespace tiltlik {

struct InferenceOptions {
  Index n_sim = 50000;  // draws per conditioning value
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Simulated conditional moments of m, its Jacobian and the base score at one z.
struct ConditionalMoments {
  Matrix mean_jacobian;  // E(M | z), m_dim x theta_dim
  Matrix var_m;          // Var(m | z)
  Matrix cov_m_score;    // Cov(m, s | z), m_dim x phi_dim
  Matrix var_score;      // Var(s | z)
};

ConditionalMoments conditional_moments(const TiltedModel& model, const Vector& z, const Vector& psi,
                                       Index n_sim, RandomStream rng);

/// Block-diagonal asymptotic covariance under correct specification:
///   theta_block = (E[E(M|z)' V_m^{-1} E(M|z)])^{-1}
///   phi_block   = (E[Var(s|z)] - E[Cov(s,m|z) V_m^{-1} Cov(m,s|z)])^{-1}
struct CovarianceBlocks {
  Matrix theta_block;
  Matrix phi_block;
  Matrix score_information;  // E[Var(s|z)]
  Index n_used = 0;

  /// sqrt(diag(block) / n_obs)
  Vector theta_se(Index n_obs) const;
  Vector phi_se(Index n_obs) const;
};

/// Throws SingularMatrix when some V_m is singular or an averaged
/// information matrix is not positive definite.
CovarianceBlocks asymptotic_covariance(const TiltedModel& model, const Sample& sample,
                                       const Vector& psi_hat, const InferenceOptions& options = {});

/// Leading terms of the two first-order conditions at psi, averaged over
/// observations: g1 = -E(M|z)' V_m^{-1} m_i, g2 = s_i - Cov(s,m|z) V_m^{-1} m_i.
struct FocBlocks {
  Vector g1;  // theta_dim
  Vector g2;  // phi_dim
};

FocBlocks foc_blocks(const TiltedModel& model, const Sample& sample, const Vector& psi,
                     const InferenceOptions& options = {});

}  // namespace tiltlik
