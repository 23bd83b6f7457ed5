#include "tiltlik/counterfactual.hpp"
#include "tiltlik/experiments.hpp"
#include "tiltlik/projection.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace tiltlik;

namespace {

DgpConfig make_dgp(double beta, double rho_R, double sigma2_R, double sigma2_C, double sigma2_C_me, Index burn_in) {
  DgpConfig d;
  d.beta = beta;
  d.rho_R = rho_R;
  d.sigma2_R = sigma2_R;
  d.sigma2_C = sigma2_C;
  d.sigma2_C_me = sigma2_C_me;
  d.burn_in = burn_in;
  d.validate();
  return d;
}

py::dict projection_dict(const ProjectionResult& r) {
  py::dict out;
  out["mu"] = r.mu;
  out["lambda"] = r.lambda;
  out["weights"] = r.weights;
  out["grad_norm"] = r.grad_norm;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["status"] = std::string(to_string(r.status));
  return out;
}

py::dict solve(const Matrix& m, double tol_grad, int max_iter) {
  SolverOptions o;
  o.tol_grad = tol_grad;
  o.max_iter = max_iter;
  return projection_dict(try_solve_multipliers(m, o));
}

py::tuple simulate(Index n, std::uint64_t seed, const DgpConfig& dgp) {
  RandomStream rng(seed);
  const DgpData d = simulate_dgp(dgp, n, rng);
  return py::make_tuple(d.observed, d.clean);
}

py::dict estimate_one(const std::string& name, const Matrix& series, Index n_sim, double xatol, std::uint64_t seed,
                  const DgpConfig& dgp) {
  const McEstimator which = parse_mc_estimator(name);
  const Sample s = markov_sample(series);
  py::dict out;
  out["estimator"] = std::string(to_string(which));
  if (which == McEstimator::tilted_correct || which == McEstimator::tilted_restricted) {
    const bool correct = which == McEstimator::tilted_correct;
    const Index ns = n_sim;
    const TiltedModel model = correct ? euler_model_correct(dgp, ns) : euler_model_restricted(dgp, ns);
    const EstimationResult r = estimate_euler_tilted(model, correct, s, xatol, seed);
    out["beta"] = r.psi_hat(0);
    out["psi"] = r.psi_hat;
    out["loglik"] = r.loglik;
    out["converged"] = r.converged;
    out["evaluations"] = r.evaluations;
    out["infeasible_count"] = r.infeasible_count;
    out["diagnostic"] = r.diagnostic;
  } else {
    const BaselineResult r = estimate_euler_baseline(which, s, xatol);
    out["beta"] = r.theta(0);
    out["theta"] = r.theta;
    out["objective"] = r.objective;
    out["converged"] = r.converged;
    out["evaluations"] = r.evaluations;
  }
  return out;
}

py::dict crra_summary(double gamma, Index n_sim, std::uint64_t seed) {
  const CrraDesign d;
  CounterfactualOptions o;
  o.n_sim = n_sim;
  o.seed = seed;
  const TiltedSummary t = tilted_summary(crra_model(), crra_psi(d, gamma), d.z, o);
  py::dict out;
  out["mean"] = t.mean;
  out["cov"] = t.cov;
  out["corr"] = t.corr;
  out["lambda"] = t.lambda;
  out["mu"] = t.mu;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exponentially tilted likelihood: projection, Euler-equation estimators, counterfactuals";

  // translators run last-registered first, so the base class goes first
  const auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<NoInteriorSolution>(m, "NoInteriorSolution", error.ptr());
  py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  py::class_<DgpConfig>(m, "DgpConfig")
      .def(py::init(&make_dgp), py::arg("beta") = 0.85, py::arg("rho_R") = 0.95, py::arg("sigma2_R") = 0.5,
           py::arg("sigma2_C") = 0.5, py::arg("sigma2_C_me") = 0.05, py::arg("burn_in") = 200)
      .def_readonly("beta", &DgpConfig::beta)
      .def_readonly("rho_R", &DgpConfig::rho_R)
      .def_readonly("sigma2_R", &DgpConfig::sigma2_R)
      .def_readonly("sigma2_C", &DgpConfig::sigma2_C)
      .def_readonly("sigma2_C_me", &DgpConfig::sigma2_C_me)
      .def_readonly("burn_in", &DgpConfig::burn_in);

  m.def("solve_multipliers", &solve, py::arg("m"), py::arg("tol_grad") = 1e-10, py::arg("max_iter") = 200,
        "Exponential tilt of equally weighted draws (rows of m) that zeroes their mean. Returns mu, lambda, "
        "weights and the solver status; status is 'no_interior' when zero is outside the convex hull.");
  m.def("gaussian_tilt_root", &gaussian_tilt_root, py::arg("k"),
        "Root of mu / (1 - mu^2) = k in (-1, 1).");
  m.def("analytic_gaussian_tilt", &analytic_gaussian_tilt, py::arg("c"), py::arg("r"), py::arg("beta"),
        py::arg("rho_c"), py::arg("rho_r"),
        "Exact multiplier of the quadratic covariance restriction under a unit-variance normal base.");
  m.def("simulate_euler", &simulate, py::arg("n"), py::arg("seed"), py::arg("dgp") = DgpConfig{},
        "Simulated (G, R) levels, t = 0..n: (observed with measurement error, clean).");
  m.def("true_psi_correct", &true_psi_correct, py::arg("dgp") = DgpConfig{});
  m.def("estimate_euler", &estimate_one, py::arg("estimator"), py::arg("series"), py::arg("n_sim") = 500,
        py::arg("xatol") = 1e-4, py::arg("seed") = 0, py::arg("dgp") = DgpConfig{},
        "One Euler-equation estimate from a (G, R) levels series. estimator is tilted_correct, "
        "tilted_restricted, cu_gmm or etel.");
  m.def("crra_summary", &crra_summary, py::arg("gamma"), py::arg("n_sim") = 100000, py::arg("seed") = 0,
        "Tilted mean, covariance and correlation of next-period (C, R) under the CRRA Euler equation.");
}
