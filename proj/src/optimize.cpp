#include "tiltlik/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tiltlik {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& x0,
                             const NelderMeadOptions& options) {
  const Index n = x0.size();
  require_dim(n >= 1, "nelder_mead: empty starting point");
  const int budget = options.max_evaluations > 0 ? options.max_evaluations
                                                 : static_cast<int>(2000 * n);

  NelderMeadResult res;
  auto eval = [&](const Vector& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Vector> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Index k = 0; k < n; ++k) {
    const double step = options.initial_step * std::max(1.0, std::abs(x0(k)));
    pts[k + 1](k) += step;
  }
  for (Index k = 0; k <= n; ++k) vals[k] = eval(pts[k]);

  std::vector<Index> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return vals[a] < vals[b]; });
    std::vector<Vector> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (Index k = 0; k <= n; ++k) {
      p2[k] = pts[order[k]];
      v2[k] = vals[order[k]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  sort_simplex();
  while (true) {
    res.best_trace.push_back(vals[0]);
    double fspread = 0.0;
    double xspread = 0.0;
    for (Index k = 1; k <= n; ++k) {
      fspread = std::max(fspread, std::abs(vals[k] - vals[0]));
      xspread = std::max(xspread, (pts[k] - pts[0]).cwiseAbs().maxCoeff());
    }
    if (std::isfinite(vals[0]) && fspread <= options.fatol && xspread <= options.xatol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= budget) break;
    ++res.iterations;

    Vector centroid = Vector::Zero(n);
    for (Index k = 0; k < n; ++k) centroid += pts[k];
    centroid /= static_cast<double>(n);

    const Vector xr = centroid + (centroid - pts[n]);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      const Vector xe = centroid + 2.0 * (centroid - pts[n]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
    } else {
      bool shrink = false;
      if (fr < vals[n]) {
        const Vector xc = centroid + 0.5 * (xr - centroid);
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[n] = xc;
          vals[n] = fc;
        } else {
          shrink = true;
        }
      } else {
        const Vector xc = centroid + 0.5 * (pts[n] - centroid);
        const double fc = eval(xc);
        if (fc < vals[n]) {
          pts[n] = xc;
          vals[n] = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (Index k = 1; k <= n; ++k) {
          pts[k] = pts[0] + 0.5 * (pts[k] - pts[0]);
          vals[k] = eval(pts[k]);
        }
      }
    }
    sort_simplex();
  }

  res.x = pts[0];
  res.value = vals[0];
  return res;
}

double brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol,
                      int max_iter) {
  if (!(lo < hi)) throw InvalidParameter("brent_minimize: empty bracket");
  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  double a = lo, b = hi;
  double x = a + golden * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double t1 = tol * std::abs(x) + 1e-14;
    const double t2 = 2.0 * t1;
    if (std::abs(x - m) <= t2 - 0.5 * (b - a)) break;
    bool golden_step = true;
    if (std::abs(e) > t1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < t2 || b - u < t2) d = x < m ? t1 : -t1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = (x < m ? b : a) - x;
      d = golden * e;
    }
    const double u = std::abs(d) >= t1 ? x + d : x + (d > 0.0 ? t1 : -t1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return x;
}

}  // namespace tiltlik
