#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gocdf/manifold.hpp"
#include "gocdf/penalty.hpp"
#include "gocdf/problem.hpp"
#include "gocdf/timing.hpp"

namespace gocdf {

enum class SolveStatus { GradTol, MaxIter, TimeLimit, LineSearchFail };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::GradTol: return "GradTol";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::TimeLimit: return "TimeLimit";
    case SolveStatus::LineSearchFail: return "LineSearchFail";
  }
  return "?";
}

struct SolverConfig {
  double grad_tol = 1e-5;
  long max_iter = 100000;
  double time_limit = 1800.0;  // seconds
  // nonmonotone Armijo search
  double c1 = 1e-4;
  double shrink = 0.5;
  double eta = 0.85;
  int max_backtracks = 30;
  // BB safeguard
  double bb_min = 1e-10;
  double bb_max = 1e10;
  // Wolfe searches
  double cg_c2 = 0.1;
  double lbfgs_c2 = 0.9;
  int lbfgs_memory = 10;
  // trust region
  double tr_radius = 1.0;
  double tr_radius_max = 1e8;
  double tr_accept = 0.1;
  int tr_max_rejects = 60;
  // inner CG stops at ||r|| <= ||g|| min(kappa, ||g||^theta)
  double tr_kappa = 0.1;
  double tr_theta = 0.5;
  bool record_trace = true;

  void validate() const {
    if (!(grad_tol >= 0.0) || !(time_limit > 0.0) || max_iter < 0) throw ConfigError("solver: bad stop rule");
    if (!(c1 > 0.0 && c1 < 1.0) || !(shrink > 0.0 && shrink < 1.0) || !(eta >= 0.0 && eta <= 1.0)) {
      throw ConfigError("solver: line-search parameters out of range");
    }
    if (!(bb_min > 0.0 && bb_min < bb_max)) throw ConfigError("solver: BB bounds must satisfy 0 < min < max");
    if (!(c1 < cg_c2 && cg_c2 < 1.0) || !(c1 < lbfgs_c2 && lbfgs_c2 < 1.0)) {
      throw ConfigError("solver: Wolfe constants must satisfy c1 < c2 < 1");
    }
    if (!(tr_radius > 0.0 && tr_radius <= tr_radius_max) || !(tr_accept >= 0.0 && tr_accept < 0.25)) {
      throw ConfigError("solver: trust-region parameters out of range");
    }
    if (!(tr_kappa > 0.0 && tr_kappa < 1.0) || !(tr_theta > 0.0)) {
      throw ConfigError("solver: trust-region forcing term out of range");
    }
    if (lbfgs_memory < 1) throw ConfigError("solver: L-BFGS memory must be positive");
  }
};

struct TraceRow {
  long iter;
  double value;
  double grad_norm;
  double feas;
  double elapsed;
};

struct SolverCounters {
  long value_evals = 0;
  long grad_evals = 0;
  long hessvec_evals = 0;
  long retractions = 0;
  long transports = 0;
};

struct SolveReport {
  std::string solver;
  Matrix x;
  double fval = 0.0;
  double grad_norm = 0.0;
  double feas = 0.0;
  long iter = 0;
  double total_time = 0.0;
  std::array<double, kPhaseCount> phases{};
  SolveStatus status = SolveStatus::MaxIter;
  std::vector<TraceRow> trace;
  SolverCounters counters;

  double phase(Phase p) const { return phases[static_cast<int>(p)]; }
};

/// Smooth unconstrained objective on the ambient subspace.
struct Objective {
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> gradient;
  std::function<Matrix(const Matrix&, const Matrix&)> hessvec;  // optional
  std::function<double(const Matrix&)> feasibility;              // optional, trace only
};

/// h-oracle of a penalty function sharing one EvalCache across calls.
inline Objective make_objective(const PenaltyFunction& pf) {
  auto cache = std::make_shared<EvalCache>();
  Objective o;
  o.value = [&pf, cache](const Matrix& x) { return pf.value(x, *cache); };
  o.gradient = [&pf, cache](const Matrix& x) { return pf.gradient(x, *cache); };
  if (pf.problem().has_hessian()) {
    o.hessvec = [&pf, cache](const Matrix& x, const Matrix& d) { return pf.hessvec(x, d, *cache); };
  }
  o.feasibility = [&pf, cache](const Matrix& x) { return pf.feasibility(x, *cache); };
  return o;
}

namespace detail {

class Run {
 public:
  Run(std::string name, const SolverConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    report_.solver = std::move(name);
  }

  PhaseTimer timer;
  SolveReport& report() { return report_; }
  const SolverConfig& cfg() const { return cfg_; }

  void record(long iter, double value, double gnorm, double feas) {
    if (cfg_.record_trace) report_.trace.push_back({iter, value, gnorm, feas, timer.elapsed()});
  }

  // Stop rule checked before each step; returns true when finished.
  bool stop(double gnorm, long iter) {
    if (gnorm <= cfg_.grad_tol) {
      report_.status = SolveStatus::GradTol;
      return true;
    }
    if (iter >= cfg_.max_iter) {
      report_.status = SolveStatus::MaxIter;
      return true;
    }
    if (timer.elapsed() >= cfg_.time_limit) {
      report_.status = SolveStatus::TimeLimit;
      return true;
    }
    return false;
  }

  SolveReport finish() {
    report_.total_time = timer.elapsed();
    report_.phases = timer.totals();
    return std::move(report_);
  }

 private:
  SolverConfig cfg_;
  SolveReport report_;
};

inline double clamp_step(double a, const SolverConfig& cfg) {
  if (!std::isfinite(a)) return cfg.bb_max;
  return std::min(cfg.bb_max, std::max(cfg.bb_min, a));
}

// Alternating Barzilai-Borwein step: BB1 on odd k, BB2 on even k.
inline double bb_step(const Matrix& s, const Matrix& y, long k, const SolverConfig& cfg) {
  const double sy = inner(s, y);
  const double ss = s.squaredNorm();
  const double yy = y.squaredNorm();
  double a;
  if (sy > 0.0) {
    a = (k % 2 == 1) ? ss / sy : sy / yy;
  } else {
    a = yy > 0.0 ? std::sqrt(ss / yy) : cfg.bb_max;
  }
  return clamp_step(a, cfg);
}

// Evaluation helpers that charge the right phase and count calls.
struct Evaluator {
  const Objective& obj;
  Run& run;

  double value(const Matrix& x) {
    ScopedPhase sp(run.timer, Phase::Objective);
    ++run.report().counters.value_evals;
    return obj.value(x);
  }
  Matrix gradient(const Matrix& x) {
    ScopedPhase sp(run.timer, Phase::Gradient);
    ++run.report().counters.grad_evals;
    return obj.gradient(x);
  }
  double feas(const Matrix& x) { return obj.feasibility ? obj.feasibility(x) : 0.0; }
};

// Strong-Wolfe line search along d from x (value f0, slope d0 < 0).
// alpha < 0 in the result signals failure. Once value changes drop to
// roundoff level (|f - f0| <= 1e-10 |f0|) the sufficient-decrease test is
// replaced by the approximate Wolfe condition of Hager and Zhang, and
// brackets are updated from the slope sign alone.
struct WolfeResult {
  double alpha = -1.0;
  Matrix x, g;
  double f = 0.0;
};

inline WolfeResult strong_wolfe(Evaluator& ev, const Matrix& x, double f0, const Matrix& d, double d0,
                                double alpha0, double c1, double c2, int max_evals) {
  WolfeResult best;
  int evals = 0;
  const double fuzz = 1e-10 * std::abs(f0);
  auto flat = [&](double fa) { return std::isfinite(fa) && std::abs(fa - f0) <= fuzz; };
  auto approx_wolfe = [&](double fa, double da) { return flat(fa) && std::abs(da) <= -c2 * d0; };
  auto eval = [&](double a, double& fa, double& da, Matrix& xa, Matrix& ga) {
    xa = x + a * d;
    fa = ev.value(xa);
    ga = ev.gradient(xa);
    da = inner(ga, d);
    ++evals;
  };
  auto accept = [&](double a, double fa, Matrix& xa, Matrix& ga) {
    best.alpha = a;
    best.f = fa;
    best.x = std::move(xa);
    best.g = std::move(ga);
  };
  // secant refinement of an acceptable step: exact for quadratics along d
  auto polish = [&](double a_lo, double d_lo, double a, double fa, double da, Matrix& xa, Matrix& ga) {
    const double denom = da - d_lo;
    if (evals < max_evals && denom > 0.0 && std::abs(da) > 1e-14 * std::abs(d0)) {
      const double as = a - da * (a - a_lo) / denom;
      if (std::isfinite(as) && as > 0.0 && std::abs(as - a) > 1e-12 * a) {
        double fs, ds;
        Matrix xs, gs;
        eval(as, fs, ds, xs, gs);
        if (std::isfinite(fs) && fs <= f0 + c1 * as * d0 && fs <= fa && std::abs(ds) <= std::abs(da)) {
          accept(as, fs, xs, gs);
          return;
        }
      }
    }
    accept(a, fa, xa, ga);
  };
  auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi, double dhi) {
    while (evals < max_evals) {
      double a;
      const double denom = dhi - dlo;
      // secant on the slope, safeguarded into the interior of [lo, hi]
      if (std::abs(denom) > 0.0) {
        a = lo - dlo * (hi - lo) / denom;
      } else {
        a = 0.5 * (lo + hi);
      }
      const double w = hi - lo;
      const double left = std::min(lo, hi) + 0.1 * std::abs(w);
      const double right = std::max(lo, hi) - 0.1 * std::abs(w);
      if (!std::isfinite(a) || a < left || a > right) a = 0.5 * (lo + hi);
      double fa, da;
      Matrix xa, ga;
      eval(a, fa, da, xa, ga);
      if (approx_wolfe(fa, da)) {
        accept(a, fa, xa, ga);
        return;
      }
      if (flat(fa)) {
        if (da * (hi - lo) >= 0.0) {
          hi = a;
          fhi = fa;
          dhi = da;
        } else {
          lo = a;
          flo = fa;
          dlo = da;
        }
      } else if (!std::isfinite(fa) || fa > f0 + c1 * a * d0 || fa >= flo) {
        hi = a;
        fhi = fa;
        dhi = da;
      } else {
        if (std::abs(da) <= -c2 * d0) {
          accept(a, fa, xa, ga);
          return;
        }
        if (da * (hi - lo) >= 0.0) {
          hi = lo;
          fhi = flo;
          dhi = dlo;
        }
        lo = a;
        flo = fa;
        dlo = da;
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    (void)fhi;
  };

  double a_prev = 0.0, f_prev = f0, d_prev = d0;
  double a = alpha0;
  for (int i = 0; evals < max_evals; ++i) {
    double fa, da;
    Matrix xa, ga;
    eval(a, fa, da, xa, ga);
    if (approx_wolfe(fa, da)) {
      polish(a_prev, d_prev, a, fa, da, xa, ga);
      return best;
    }
    const bool rising = flat(fa) ? da >= 0.0 : (i > 0 && fa >= f_prev);
    if (!std::isfinite(fa) || (!flat(fa) && fa > f0 + c1 * a * d0) || rising) {
      if (!std::isfinite(fa)) {
        // shrink toward the last good step
        zoom(a_prev, f_prev, d_prev, a, std::numeric_limits<double>::infinity(), 0.0);
      } else {
        zoom(a_prev, f_prev, d_prev, a, fa, da);
      }
      return best;
    }
    if (std::abs(da) <= -c2 * d0) {
      polish(a_prev, d_prev, a, fa, da, xa, ga);
      return best;
    }
    if (da >= 0.0) {
      zoom(a, fa, da, a_prev, f_prev, d_prev);
      return best;
    }
    a_prev = a;
    f_prev = fa;
    d_prev = da;
    a *= 2.0;
  }
  return best;
}

}  // namespace detail

/// Gradient descent with alternating BB steps and a Zhang-Hager nonmonotone
/// Armijo search.
inline SolveReport gd_bb(const Objective& obj, const Matrix& x0, const SolverConfig& cfg) {
  detail::Run run("cdf-gd", cfg);
  detail::Evaluator ev{obj, run};
  Matrix x = x0;
  double f = ev.value(x);
  Matrix g = ev.gradient(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  double alpha = 1.0 / std::max(1.0, gn);
  double merit = f, q = 1.0;
  long k = 0;
  while (!run.stop(gn, k)) {
    Matrix xn, gnew;
    double fn = 0.0;
    {
      ScopedPhase ls(run.timer, Phase::Linesearch);
      const double slope = -gn * gn;
      double a = alpha;
      int tries = 0;
      for (;;) {
        xn = x - a * g;
        fn = ev.value(xn);
        if (std::isfinite(fn) && fn <= merit + cfg.c1 * a * slope) break;
        if (++tries > cfg.max_backtracks) break;
        a *= cfg.shrink;
      }
      if (tries > cfg.max_backtracks) {
        run.report().status = SolveStatus::LineSearchFail;
        break;
      }
      gnew = ev.gradient(xn);
      ++k;
      alpha = detail::bb_step(xn - x, gnew - g, k, cfg);
      const double qn = cfg.eta * q + 1.0;
      merit = (cfg.eta * q * merit + fn) / qn;
      q = qn;
    }
    x = std::move(xn);
    g = std::move(gnew);
    f = fn;
    gn = g.norm();
    run.record(k, f, gn, ev.feas(x));
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x;
  r.fval = f;
  r.grad_norm = obj.gradient(x).norm();
  r.feas = ev.feas(x);
  return run.finish();
}

/// Nonlinear conjugate gradient, Polak-Ribiere+ with Powell restarts and a
/// strong-Wolfe search.
inline SolveReport cg(const Objective& obj, const Matrix& x0, const SolverConfig& cfg) {
  detail::Run run("cdf-cg", cfg);
  detail::Evaluator ev{obj, run};
  Matrix x = x0;
  double f = ev.value(x);
  Matrix g = ev.gradient(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  Matrix d = -g;
  double alpha = 1.0 / std::max(1.0, gn);
  double prev_slope = 0.0, prev_alpha = 0.0;
  long k = 0;
  while (!run.stop(gn, k)) {
    double slope = inner(g, d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -gn * gn;
    }
    double a0 = alpha;
    if (k > 0 && prev_slope < 0.0) a0 = std::min(1.01 * prev_alpha * prev_slope / slope, cfg.bb_max);
    detail::WolfeResult w;
    {
      ScopedPhase ls(run.timer, Phase::Linesearch);
      w = detail::strong_wolfe(ev, x, f, d, slope, a0, cfg.c1, cfg.cg_c2, 2 * cfg.max_backtracks);
    }
    if (w.alpha <= 0.0) {
      run.report().status = SolveStatus::LineSearchFail;
      break;
    }
    ++k;
    prev_alpha = w.alpha;
    prev_slope = slope;
    const double gg_old = gn * gn;
    const Matrix g_old = std::move(g);
    x = std::move(w.x);
    g = std::move(w.g);
    f = w.f;
    gn = g.norm();
    double beta = std::max(0.0, (gn * gn - inner(g, g_old)) / gg_old);
    if (std::abs(inner(g, g_old)) >= 0.2 * gn * gn) beta = 0.0;
    d = -g + beta * d;
    run.record(k, f, gn, ev.feas(x));
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x;
  r.fval = f;
  r.grad_norm = obj.gradient(x).norm();
  r.feas = ev.feas(x);
  return run.finish();
}

/// Limited-memory BFGS with a strong-Wolfe search.
inline SolveReport lbfgs(const Objective& obj, const Matrix& x0, const SolverConfig& cfg) {
  detail::Run run("cdf-lbfgs", cfg);
  detail::Evaluator ev{obj, run};
  Matrix x = x0;
  double f = ev.value(x);
  Matrix g = ev.gradient(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  std::deque<Matrix> ss, ys;
  std::deque<double> rhos;
  long k = 0;
  while (!run.stop(gn, k)) {
    // two-loop recursion
    Matrix q = g;
    std::vector<double> al(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      al[i] = rhos[i] * inner(ss[i], q);
      q -= al[i] * ys[i];
    }
    double a0 = 1.0;
    if (!ss.empty()) {
      q *= inner(ss.back(), ys.back()) / ys.back().squaredNorm();
    } else {
      a0 = 1.0 / std::max(1.0, gn);
    }
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double b = rhos[i] * inner(ys[i], q);
      q += (al[i] - b) * ss[i];
    }
    Matrix d = -q;
    double slope = inner(g, d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -gn * gn;
      a0 = 1.0 / std::max(1.0, gn);
      ss.clear();
      ys.clear();
      rhos.clear();
    }
    detail::WolfeResult w;
    {
      ScopedPhase ls(run.timer, Phase::Linesearch);
      w = detail::strong_wolfe(ev, x, f, d, slope, a0, cfg.c1, cfg.lbfgs_c2, 2 * cfg.max_backtracks);
    }
    if (w.alpha <= 0.0) {
      run.report().status = SolveStatus::LineSearchFail;
      break;
    }
    ++k;
    Matrix s = w.x - x;
    Matrix y = w.g - g;
    const double sy = inner(s, y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      ss.push_back(std::move(s));
      ys.push_back(std::move(y));
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > cfg.lbfgs_memory) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
    x = std::move(w.x);
    g = std::move(w.g);
    f = w.f;
    gn = g.norm();
    run.record(k, f, gn, ev.feas(x));
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x;
  r.fval = f;
  r.grad_norm = obj.gradient(x).norm();
  r.feas = ev.feas(x);
  return run.finish();
}

/// Trust-region Newton-CG (Steihaug-Toint inner solver). Without a Hessian
/// oracle, Hessian-vector products are forward differences of the gradient.
inline SolveReport trust_ncg(const Objective& obj, const Matrix& x0, const SolverConfig& cfg) {
  detail::Run run("cdf-tr", cfg);
  detail::Evaluator ev{obj, run};
  Matrix x = x0;
  double f = ev.value(x);
  Matrix g = ev.gradient(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  double radius = cfg.tr_radius;
  const Index dim = x.size();
  auto hv = [&](const Matrix& d) -> Matrix {
    ScopedPhase sp(run.timer, Phase::Gradient);
    ++run.report().counters.hessvec_evals;
    if (obj.hessvec) return obj.hessvec(x, d);
    const double dn = d.norm();
    if (dn == 0.0) return Matrix::Zero(d.rows(), d.cols());
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + x.norm()) / dn;
    return (obj.gradient(x + eps * d) - g) / eps;
  };
  // step length tau >= 0 with ||z + tau d|| = radius
  auto to_boundary = [&](const Matrix& z, const Matrix& d) {
    const double dd = d.squaredNorm(), zd = inner(z, d), zz = z.squaredNorm();
    const double disc = std::max(0.0, zd * zd + dd * (radius * radius - zz));
    return (-zd + std::sqrt(disc)) / dd;
  };
  long k = 0;
  int rejects = 0;
  while (!run.stop(gn, k)) {
    Matrix z = Matrix::Zero(x.rows(), x.cols());
    Matrix hz = z;
    Matrix r = g;
    Matrix d = -g;
    double rr = gn * gn;
    bool hit = false;
    const double tol = std::min(cfg.tr_kappa, std::pow(gn, cfg.tr_theta)) * gn;
    for (Index j = 0; j < dim + 1; ++j) {
      const Matrix hd = hv(d);
      const double dhd = inner(d, hd);
      if (!(dhd > 0.0)) {
        const double tau = to_boundary(z, d);
        z += tau * d;
        hz += tau * hd;
        hit = true;
        break;
      }
      const double a = rr / dhd;
      if ((z + a * d).norm() >= radius) {
        const double tau = to_boundary(z, d);
        z += tau * d;
        hz += tau * hd;
        hit = true;
        break;
      }
      z += a * d;
      hz += a * hd;
      r += a * hd;
      const double rr_new = r.squaredNorm();
      if (std::sqrt(rr_new) <= tol) break;
      d = -r + (rr_new / rr) * d;
      rr = rr_new;
    }
    const double model = inner(g, z) + 0.5 * inner(z, hz);
    const Matrix xn = x + z;
    const double fn = ev.value(xn);
    const double rho = (model < 0.0 && std::isfinite(fn)) ? (f - fn) / (-model) : -1.0;
    if (rho < 0.25) {
      radius *= 0.25;
    } else if (rho > 0.75 && hit) {
      radius = std::min(2.0 * radius, cfg.tr_radius_max);
    }
    if (rho > cfg.tr_accept) {
      x = xn;
      f = fn;
      g = ev.gradient(x);
      gn = g.norm();
      ++k;
      rejects = 0;
      run.record(k, f, gn, ev.feas(x));
    } else {
      if (++rejects > cfg.tr_max_rejects || radius < 1e-15 * std::max(1.0, x.norm())) {
        run.report().status = SolveStatus::LineSearchFail;
        break;
      }
    }
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x;
  r.fval = f;
  r.grad_norm = obj.gradient(x).norm();
  r.feas = ev.feas(x);
  return run.finish();
}

namespace detail {

// Riemannian bookkeeping for rgd / rcg.
struct RiemannianEval {
  const Problem& pr;
  Run& run;

  double value(const FeasiblePoint& x) {
    ScopedPhase sp(run.timer, Phase::Objective);
    ++run.report().counters.value_evals;
    return pr.f(x.x());
  }
  Matrix rgrad(const FeasiblePoint& x) {
    Matrix eg;
    {
      ScopedPhase sp(run.timer, Phase::Gradient);
      ++run.report().counters.grad_evals;
      eg = pr.grad(x.x());
    }
    ScopedPhase sp(run.timer, Phase::Projection);
    return project_tangent(pr.spec, x, eg);
  }
  FeasiblePoint retract(const FeasiblePoint& x, const Matrix& z) {
    ScopedPhase sp(run.timer, Phase::Retraction);
    ++run.report().counters.retractions;
    return gocdf::retract(pr.spec, x, z, 1e-9);
  }
  Matrix transport(const FeasiblePoint& x, const Matrix& z) {
    ScopedPhase sp(run.timer, Phase::Projection);
    ++run.report().counters.transports;
    return vector_transport(pr.spec, x, z);
  }
  double feas(const FeasiblePoint& x) { return x.feasibility(); }
};

// Nonmonotone Armijo along a retraction curve. Halves on StepTooLarge.
inline std::optional<FeasiblePoint> retract_search(RiemannianEval& ev, const FeasiblePoint& x, const Matrix& d,
                                                   double slope, double merit, double& alpha, double& fn,
                                                   const SolverConfig& cfg) {
  for (int tries = 0; tries <= cfg.max_backtracks; ++tries) {
    try {
      FeasiblePoint xn = ev.retract(x, alpha * d);
      fn = ev.value(xn);
      if (std::isfinite(fn) && fn <= merit + cfg.c1 * alpha * slope) return xn;
    } catch (const StepTooLarge&) {
    }
    alpha *= cfg.shrink;
  }
  return std::nullopt;
}

}  // namespace detail

/// Riemannian gradient descent with alternating BB steps and a nonmonotone search.
inline SolveReport rgd(const Problem& pr, const FeasiblePoint& x0, const SolverConfig& cfg) {
  detail::Run run("rgd", cfg);
  detail::RiemannianEval ev{pr, run};
  FeasiblePoint x = x0;
  double f = ev.value(x);
  Matrix g = ev.rgrad(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  double alpha = 1.0 / std::max(1.0, gn);
  double merit = f, q = 1.0;
  long k = 0;
  while (!run.stop(gn, k)) {
    std::optional<FeasiblePoint> xn;
    double fn = 0.0;
    Matrix gnew;
    {
      ScopedPhase ls(run.timer, Phase::Linesearch);
      const Matrix d = -g;
      double a = alpha;
      xn = detail::retract_search(ev, x, d, -gn * gn, merit, a, fn, cfg);
      if (!xn) {
        run.report().status = SolveStatus::LineSearchFail;
        break;
      }
      gnew = ev.rgrad(*xn);
      ++k;
      const Matrix s = ev.transport(*xn, a * d);
      const Matrix y = gnew - ev.transport(*xn, g);
      alpha = detail::bb_step(s, y, k, cfg);
      const double qn = cfg.eta * q + 1.0;
      merit = (cfg.eta * q * merit + fn) / qn;
      q = qn;
    }
    x = std::move(*xn);
    g = std::move(gnew);
    f = fn;
    gn = g.norm();
    run.record(k, f, gn, ev.feas(x));
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x.x();
  r.fval = f;
  r.grad_norm = project_tangent(pr.spec, x, pr.grad(x.x())).norm();
  r.feas = x.feasibility();
  return run.finish();
}

/// Riemannian conjugate gradient with beta = max(0, min(beta_FR, beta_DY)),
/// BB initial steps and a nonmonotone search.
inline SolveReport rcg(const Problem& pr, const FeasiblePoint& x0, const SolverConfig& cfg) {
  detail::Run run("rcg", cfg);
  detail::RiemannianEval ev{pr, run};
  FeasiblePoint x = x0;
  double f = ev.value(x);
  Matrix g = ev.rgrad(x);
  double gn = g.norm();
  run.record(0, f, gn, ev.feas(x));
  double alpha = 1.0 / std::max(1.0, gn);
  double merit = f, q = 1.0;
  Matrix d = -g;
  long k = 0;
  while (!run.stop(gn, k)) {
    std::optional<FeasiblePoint> xn;
    double fn = 0.0;
    Matrix gnew;
    {
      ScopedPhase ls(run.timer, Phase::Linesearch);
      double slope = inner(g, d);
      if (!(slope < 0.0)) {
        d = -g;
        slope = -gn * gn;
      }
      // BB scalars act on -g; rescale so the trial displacement has the same length
      double a = alpha * gn / d.norm();
      xn = detail::retract_search(ev, x, d, slope, merit, a, fn, cfg);
      if (!xn) {
        run.report().status = SolveStatus::LineSearchFail;
        break;
      }
      gnew = ev.rgrad(*xn);
      ++k;
      const Matrix td = ev.transport(*xn, d);
      const Matrix tg = ev.transport(*xn, g);
      alpha = detail::bb_step(a * td, gnew - tg, k, cfg);
      const double gg_new = gnew.squaredNorm();
      const double beta_fr = gg_new / (gn * gn);
      const double denom = inner(gnew, td) - inner(g, d);
      const double beta = denom > 0.0 ? std::max(0.0, std::min(beta_fr, gg_new / denom)) : 0.0;
      d = -gnew + beta * td;
      const double qn = cfg.eta * q + 1.0;
      merit = (cfg.eta * q * merit + fn) / qn;
      q = qn;
    }
    x = std::move(*xn);
    g = std::move(gnew);
    f = fn;
    gn = g.norm();
    run.record(k, f, gn, ev.feas(x));
  }
  SolveReport& r = run.report();
  r.iter = k;
  r.x = x.x();
  r.fval = f;
  r.grad_norm = project_tangent(pr.spec, x, pr.grad(x.x())).norm();
  r.feas = x.feasibility();
  return run.finish();
}

inline const std::vector<std::string>& solver_ids() {
  static const std::vector<std::string> ids = {"cdf-gd", "cdf-cg", "cdf-lbfgs", "cdf-tr", "rgd", "rcg"};
  return ids;
}

inline bool is_cdf_solver(const std::string& id) { return id.rfind("cdf-", 0) == 0; }

/// Runs solver `id`. CDF solvers minimize the penalty function from x0;
/// Riemannian solvers minimize f on the manifold.
inline SolveReport solve(const std::string& id, const PenaltyFunction& pf, const FeasiblePoint& x0,
                         const SolverConfig& cfg) {
  if (is_cdf_solver(id)) {
    const Objective obj = make_objective(pf);
    if (id == "cdf-gd") return gd_bb(obj, x0.x(), cfg);
    if (id == "cdf-cg") return cg(obj, x0.x(), cfg);
    if (id == "cdf-lbfgs") return lbfgs(obj, x0.x(), cfg);
    if (id == "cdf-tr") return trust_ncg(obj, x0.x(), cfg);
  } else {
    if (id == "rgd") return rgd(pf.problem(), x0, cfg);
    if (id == "rcg") return rcg(pf.problem(), x0, cfg);
  }
  throw ConfigError("unknown solver '" + id + "'");
}

}  // namespace gocdf
