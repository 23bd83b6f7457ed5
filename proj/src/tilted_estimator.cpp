#include "tiltlik/tilted_estimator.hpp"

#include "tiltlik/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace tiltlik {

Sample markov_sample(const Matrix& series) {
  require_dim(series.rows() >= 3, "markov_sample: need at least three rows");
  const Index n = series.rows() - 1;
  return Sample{series.bottomRows(n), series.topRows(n)};
}

Index TiltedModel::resolved_n_sim(Index n_obs) const {
  return n_sim > 0 ? n_sim : std::max<Index>(10000, 20 * n_obs);
}

void TiltedModel::validate() const {
  if (!density) throw InvalidParameter("TiltedModel: density is missing");
  if (!moments) throw InvalidParameter("TiltedModel: moment model is missing");
  require_dim(density->x_dim() == moments->x_dim(), "TiltedModel: density and moments disagree on x_dim");
  require_dim(density->z_dim() == moments->z_dim(), "TiltedModel: density and moments disagree on z_dim");
  if (n_sim != 0 && n_sim < 10 * moments->m_dim()) {
    throw InvalidParameter("TiltedModel: n_sim must be at least 10 * m_dim");
  }
  solver.validate();
}

TiltedObjective::TiltedObjective(TiltedModel model, Sample sample, std::uint64_t rng_root, int threads)
    : model_(std::move(model)), sample_(std::move(sample)), rng_root_(rng_root), threads_(threads) {
  model_.validate();
  require_dim(sample_.size() >= 2, "tilted_loglik: need at least two observations");
  require_dim(sample_.z.rows() == sample_.x.rows(), "tilted_loglik: x and z differ in row count");
  require_dim(sample_.x.cols() == model_.density->x_dim(), "tilted_loglik: data have wrong width");
  require_dim(sample_.z.cols() == model_.density->z_dim(), "tilted_loglik: conditioning has wrong width");
  if (!sample_.x.allFinite() || !sample_.z.allFinite()) {
    throw InvalidParameter("tilted_loglik: data must be finite");
  }
  n_sim_ = model_.resolved_n_sim(sample_.size());
  const Index n = sample_.size();
  const Index dim = model_.density->noise_dim();
  noise_.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads_, [&](std::size_t i) {
    RandomStream rng = RandomStream::derive(rng_root_, {static_cast<std::uint64_t>(i)});
    noise_[i] = draw_noise(n_sim_, dim, rng);
  });
}

Matrix TiltedObjective::draws(Index i, const Vector& phi) const {
  return model_.density->transform_noise(sample_.z_row(i), phi, noise_[static_cast<std::size_t>(i)]);
}

ObservationFit TiltedObjective::fit(Index i, const Vector& psi) const {
  const Vector theta = model_.theta(psi);
  const Vector phi = model_.phi(psi);
  const Vector z = sample_.z_row(i);
  const Vector x = sample_.x_row(i);
  ObservationFit out;
  out.contribution = kInfeasiblePenalty;
  try {
    const Matrix m = model_.moments->evaluate_draws(draws(i, phi), z, theta);
    if (!m.allFinite()) return out;
    const ProjectionResult pr = try_solve_multipliers(m, model_.solver);
    if (!pr.converged || !admissible_multipliers(*model_.moments, pr.mu)) return out;
    const double base = model_.density->logpdf(x, z, phi);
    const double value =
        tilted_logdensity(base, pr.mu, model_.moments->evaluate(x, z, theta), pr.lambda);
    if (!std::isfinite(value)) return out;
    out.contribution = value;
    out.feasible = true;
    out.mu = pr.mu;
    out.lambda = pr.lambda;
  } catch (const DomainError&) {
    // Draws or data outside the moment's domain at this psi.
  } catch (const InvalidParameter&) {
    // phi outside the density family.
  }
  return out;
}

std::vector<ObservationFit> TiltedObjective::fits(const Vector& psi) const {
  require_dim(psi.size() == model_.psi_dim(), "tilted_loglik: psi has wrong length");
  std::vector<ObservationFit> out(static_cast<std::size_t>(sample_.size()));
  parallel_for(out.size(), threads_, [&](std::size_t i) { out[i] = fit(static_cast<Index>(i), psi); });
  return out;
}

LoglikValue TiltedObjective::operator()(const Vector& psi) const {
  const auto all = fits(psi);
  LoglikValue v;
  v.n_obs = sample_.size();
  double sum = 0.0;
  for (const auto& f : all) {
    sum += f.contribution;
    if (!f.feasible) ++v.infeasible_count;
  }
  v.value = sum / static_cast<double>(v.n_obs);
  return v;
}

LoglikValue tilted_loglik(const TiltedModel& model, const Sample& sample, const Vector& psi,
                          std::uint64_t rng_root, int threads) {
  return TiltedObjective(model, sample, rng_root, threads)(psi);
}

double base_loglik(const ConditionalDensity& density, const Sample& sample, const Vector& phi) {
  require_dim(sample.size() >= 1, "base_loglik: empty sample");
  return density.sum_logpdf(sample.x, sample.z, phi) / static_cast<double>(sample.size());
}

double ParamTransform::to_param(double u) const {
  switch (kind) {
    case Kind::identity: return u;
    case Kind::logistic: return lo + (hi - lo) / (1.0 + std::exp(-u));
    case Kind::exp: return std::exp(u);
    case Kind::tanh: return std::tanh(u);
  }
  return u;
}

double ParamTransform::to_internal(double p) const {
  switch (kind) {
    case Kind::identity: return p;
    case Kind::logistic: {
      if (!(p > lo && p < hi)) throw InvalidParameter("parameter outside its logistic bounds");
      const double s = (p - lo) / (hi - lo);
      return std::log(s / (1.0 - s));
    }
    case Kind::exp:
      if (!(p > 0.0)) throw InvalidParameter("positive parameter must be > 0");
      return std::log(p);
    case Kind::tanh:
      if (!(p > -1.0 && p < 1.0)) throw InvalidParameter("correlation must lie in (-1, 1)");
      return std::atanh(p);
  }
  return p;
}

EstimationMode parse_estimation_mode(const std::string& text) {
  if (text == "joint") return EstimationMode::joint;
  if (text == "two_step") return EstimationMode::two_step;
  throw InvalidParameter("unknown estimation mode '" + text + "'");
}

const char* to_string(EstimationMode mode) {
  return mode == EstimationMode::joint ? "joint" : "two_step";
}

namespace {

// Optimizer coordinates for a subset of psi; everything else stays at `anchor`.
struct Coordinates {
  std::vector<Index> free;
  std::vector<ParamTransform> transforms;  // full psi length
  Vector anchor;

  Vector to_psi(const Vector& u) const {
    Vector psi = anchor;
    for (std::size_t k = 0; k < free.size(); ++k) {
      const Index j = free[k];
      psi(j) = transforms[static_cast<std::size_t>(j)].to_param(u(static_cast<Index>(k)));
    }
    return psi;
  }
  Vector to_internal(const Vector& psi) const {
    Vector u(static_cast<Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
      const Index j = free[k];
      u(static_cast<Index>(k)) = transforms[static_cast<std::size_t>(j)].to_internal(psi(j));
    }
    return u;
  }
};

// Directions along which the objective does not move at all.
std::string flat_directions(const std::function<double(const Vector&)>& f, const Vector& u,
                            const std::vector<Index>& labels) {
  const double f0 = f(u);
  std::string out;
  for (Index k = 0; k < u.size(); ++k) {
    Vector v = u;
    const double h = 1e-3 * std::max(1.0, std::abs(u(k)));
    v(k) = u(k) + h;
    const double up = f(v);
    v(k) = u(k) - h;
    const double down = f(v);
    const double scale = 1e-12 * (1.0 + std::abs(f0));
    if (std::abs(up - f0) <= scale && std::abs(down - f0) <= scale) {
      if (!out.empty()) out += ",";
      out += std::to_string(labels[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

std::vector<ParamTransform> full_transforms(const std::vector<ParamTransform>& given, Index dim) {
  if (given.empty()) return std::vector<ParamTransform>(static_cast<std::size_t>(dim));
  require_dim(static_cast<Index>(given.size()) == dim, "estimate: transform count differs from psi length");
  return given;
}

}  // namespace

NelderMeadResult maximize_base_loglik(const ConditionalDensity& density, const Sample& sample,
                                      const Vector& init, const std::vector<ParamTransform>& transforms,
                                      const NelderMeadOptions& optimizer) {
  Coordinates c;
  c.transforms = full_transforms(transforms, init.size());
  c.anchor = init;
  for (Index j = 0; j < init.size(); ++j) c.free.push_back(j);
  auto f = [&](const Vector& u) {
    try {
      return -base_loglik(density, sample, c.to_psi(u));
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const InvalidParameter&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  NelderMeadResult r = nelder_mead(f, c.to_internal(init), optimizer);
  r.x = c.to_psi(r.x);
  r.value = -r.value;
  return r;
}

EstimationResult estimate(const TiltedModel& model, const Sample& sample, const Vector& init,
                          const EstimateOptions& options) {
  model.validate();
  const Index dt = model.theta_dim();
  const Index dp = model.phi_dim();
  require_dim(init.size() == dt + dp, "estimate: init has wrong length");
  const auto transforms = full_transforms(options.transforms, dt + dp);

  TiltedObjective objective(model, sample, options.seed, options.threads);
  EstimationResult out;

  Coordinates c;
  c.transforms = transforms;
  c.anchor = init;

  const bool need_base = options.mode == EstimationMode::two_step || !options.profiled_phi.empty();
  if (need_base) {
    const std::vector<ParamTransform> phi_t(transforms.begin() + dt, transforms.end());
    const NelderMeadResult base = maximize_base_loglik(*model.density, sample, init.tail(dp), phi_t,
                                                       options.optimizer);
    out.evaluations += base.evaluations;
    c.anchor.tail(dp) = base.x;
    if (!base.converged) out.diagnostic = "base likelihood maximization did not converge";
  }

  for (Index j = 0; j < dt; ++j) c.free.push_back(j);
  Coordinates inner;  // profiled phi coordinates, in psi indexing
  inner.transforms = transforms;
  if (options.mode == EstimationMode::joint) {
    for (Index j = 0; j < dp; ++j) {
      const bool profiled = std::find(options.profiled_phi.begin(), options.profiled_phi.end(), j) !=
                            options.profiled_phi.end();
      (profiled ? inner.free : c.free).push_back(dt + j);
    }
  }
  for (Index j : options.profiled_phi) {
    require_dim(j >= 0 && j < dp, "estimate: profiled phi index out of range");
  }

  // Profiled coordinates maximize the base likelihood given the others.
  // The inner search always starts from the base MLE, so the objective
  // stays a pure function of the free coordinates.
  NelderMeadOptions inner_opts;
  inner_opts.xatol = 1e-9;
  inner_opts.fatol = 1e-13;
  auto complete = [&](Vector psi) {
    if (inner.free.empty()) return psi;
    inner.anchor = psi;
    auto g = [&](const Vector& v) {
      try {
        return -base_loglik(*model.density, sample, model.phi(inner.to_psi(v)));
      } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
      } catch (const InvalidParameter&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const NelderMeadResult r = nelder_mead(g, inner.to_internal(c.anchor), inner_opts);
    return inner.to_psi(r.x);
  };

  if (objective(c.anchor).all_infeasible()) {
    throw InvalidParameter("estimate: every projection is infeasible at the initial point");
  }

  int evals = 0;
  auto f = [&](const Vector& u) {
    ++evals;
    try {
      return -objective(complete(c.to_psi(u))).value;
    } catch (const InvalidParameter&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const Vector u0 = c.to_internal(c.anchor);
  const NelderMeadResult nm = nelder_mead(f, u0, options.optimizer);

  out.psi_hat = complete(c.to_psi(nm.x));
  const LoglikValue at = objective(out.psi_hat);
  out.loglik = at.value;
  out.infeasible_count = at.infeasible_count;
  out.converged = nm.converged;
  if (!nm.converged) {
    if (!out.diagnostic.empty()) out.diagnostic += "; ";
    out.diagnostic += "evaluation budget exhausted";
  }
  const std::string flat = flat_directions(f, nm.x, c.free);
  if (!flat.empty()) {
    out.converged = false;
    if (!out.diagnostic.empty()) out.diagnostic += "; ";
    out.diagnostic += "objective flat in psi coordinate(s) " + flat;
  }
  out.evaluations += evals;
  return out;
}

}  // namespace tiltlik
