#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gocdf/config.hpp"
#include "gocdf/manifold.hpp"
#include "gocdf/penalty.hpp"
#include "gocdf/problems.hpp"
#include "gocdf/solvers.hpp"

namespace gocdf {

struct ExperimentConfig {
  Config problem;  // the `problem { }` block
  std::string problem_id;
  std::vector<std::string> solvers = solver_ids();
  std::optional<double> beta;
  std::vector<double> tols = {1e-5, 1e-9};
  long max_iter = 100000;
  double time_limit = 1800.0;
  double eps_f = 1e-12;
  std::uint64_t init_seed = 1;
  int repetitions = 1;
  std::string out_dir = "results";
};

namespace detail {

inline ManifoldRecord manifold_record(const Config& b) {
  ManifoldRecord r;
  r.name = b.str("name");
  r.n = b.integer("n");
  r.p = b.integer("p");
  r.l = b.integer("l", 1);
  r.k = b.integer("k", -1);
  r.pk = b.integer("pk", -1);
  r.seed = b.seed("seed", 0);
  return r;
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const Config& c) {
  ExperimentConfig e;
  e.problem = c.block("problem");
  e.problem_id = e.problem.str("id");
  if (c.has("solvers")) e.solvers = c.list("solvers");
  for (const auto& s : e.solvers) {
    if (std::find(solver_ids().begin(), solver_ids().end(), s) == solver_ids().end()) {
      throw ConfigError("unknown solver '" + s + "'");
    }
  }
  if (c.has("beta")) {
    e.beta = c.real("beta");
    if (!(*e.beta > 0.0)) throw ConfigError("beta must be positive");
  }
  if (c.has("tols")) e.tols = c.real_list("tols");
  for (double t : e.tols) {
    if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
  }
  e.max_iter = c.integer("max_iter", e.max_iter);
  e.time_limit = c.real("time_limit", e.time_limit);
  e.eps_f = c.real("eps_f", e.eps_f);
  e.init_seed = c.seed("seed", e.init_seed);
  e.repetitions = static_cast<int>(c.integer("repetitions", 1));
  if (e.repetitions < 1 || e.max_iter < 0 || !(e.time_limit > 0.0) || !(e.eps_f > 0.0)) {
    throw ConfigError("repetitions, max_iter, time_limit and eps_f must be positive");
  }
  if (c.has_block("output")) e.out_dir = c.block("output").str("dir", e.out_dir);
  return e;
}

/// Builds the problem of repetition `rep` (problem seed + rep).
inline Problem build_problem(const ExperimentConfig& e, int rep = 0) {
  const Config& b = e.problem;
  const std::uint64_t seed = b.seed("seed", 0) + static_cast<std::uint64_t>(rep);
  const std::string& id = e.problem_id;
  try {
    if (id == "lsm") return build_lsm(b.integer("n"), b.integer("p"), seed);
    if (id == "extrinsic-mean") {
      const long n = b.integer("n"), p = b.integer("p");
      return build_extrinsic_mean(n, p, b.integer("k", (6 * n + 9) / 10), b.integer("pk", (p + 1) / 2),
                                  b.integer("samples", 100), seed, b.real("spread", 0.5));
    }
    if (id == "tensor-jfd") {
      return build_tensor_jfd(b.integer("n"), b.integer("p"), b.integer("l"), b.integer("samples", 5),
                              b.real("gamma", 0.0), seed);
    }
    if (id == "zero") return build_zero(build_manifold(detail::manifold_record(b.block("manifold"))));
    if (id == "quadratic") {
      return build_random_quadratic(build_manifold(detail::manifold_record(b.block("manifold"))), seed);
    }
  } catch (const ConstructionError& err) {
    throw ConfigError(std::string("problem: ") + err.what());
  }
  throw ConfigError("unknown problem id '" + id + "'");
}

inline std::string size_label(const Problem& pr) {
  const ManifoldSpec& s = pr.spec;
  if (s.kind() == ManifoldKind::TensorStiefel) {
    return "(" + std::to_string(s.tensor_n()) + "," + std::to_string(s.tensor_p()) + "," +
           std::to_string(s.tensor_l()) + ")";
  }
  return "(" + std::to_string(s.rows()) + "," + std::to_string(s.cols()) + ")";
}

struct ExperimentRecord {
  std::string problem;
  std::string size;
  std::string solver;
  double tol = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string status;
  long iter = 0;
  double fval = 0.0;
  double grad = 0.0;      // ||grad h|| (CDF) or ||grad f|| (Riemannian) reported by the solver
  double feas = 0.0;      // after post-processing for CDF solvers
  double feas_pre = 0.0;  // before post-processing
  double rgrad = 0.0;     // Riemannian gradient norm at the reported point
  int pp_rounds = 0;
  double time = 0.0;
  std::array<double, kPhaseCount> phases{};
  std::vector<TraceRow> trace;
  Matrix x;
};

struct RunOptions {
  bool write_files = true;
  bool keep_points = false;
  int threads = 0;  // 0: GOCDF_THREADS or 1
};

inline int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GOCDF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

/// One (solver, tol, rep) cell: solve, post-process CDF results, report.
inline ExperimentRecord run_cell(const Problem& pr, const std::string& solver, double tol, int rep,
                                 const FeasiblePoint& x0, const ExperimentConfig& e, bool keep_point) {
  const PenaltyFunction pf(pr, e.beta.value_or(pr.default_beta));
  SolverConfig cfg;
  cfg.grad_tol = tol;
  cfg.max_iter = e.max_iter;
  cfg.time_limit = e.time_limit;
  const SolveReport rep_ = solve(solver, pf, x0, cfg);
  ExperimentRecord r;
  r.problem = pr.id;
  r.size = size_label(pr);
  r.solver = solver;
  r.tol = tol;
  r.rep = rep;
  r.seed = pr.seed;
  r.iter = rep_.iter;
  r.grad = rep_.grad_norm;
  r.time = rep_.total_time;
  r.phases = rep_.phases;
  r.trace = rep_.trace;
  r.status = to_string(rep_.status);
  r.feas_pre = constraint(pr.spec, rep_.x).norm();
  Matrix x = rep_.x;
  if (is_cdf_solver(solver)) {
    try {
      PostprocessResult pp = postprocess(pr.spec, rep_.x, e.eps_f);
      r.pp_rounds = pp.rounds;
      x = pp.point.x();
    } catch (const Divergence&) {
      r.status = "PostprocessFailed";
    }
  }
  r.fval = pr.f(x);
  r.feas = constraint(pr.spec, x).norm();
  try {
    r.rgrad = project_tangent(pr.spec, FeasiblePoint(pr.spec, x, 1e-6), pr.grad(x)).norm();
  } catch (const InfeasiblePoint&) {
    r.rgrad = std::numeric_limits<double>::quiet_NaN();
  }
  if (keep_point) r.x = std::move(x);
  return r;
}

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace detail

enum class TableFormat { Csv, Text, TimingCsv };

/// Result table. Csv is deterministic (no timings, %.17g); Text is the
/// Iter/Fval/Grad/Feas/CPU layout with %.2e; TimingCsv holds the wall-clock columns.
inline std::string emit_table(const std::vector<ExperimentRecord>& records, TableFormat format) {
  if (records.empty()) throw Error("emit_table: no records");
  std::ostringstream os;
  using detail::csv_field;
  using detail::fmt;
  if (format == TableFormat::Csv) {
    os << "problem,size,solver,tol,rep,seed,status,iter,fval,grad,feas,feas_pre,rgrad,pp_rounds\n";
    for (const auto& r : records) {
      os << csv_field(r.problem) << ',' << csv_field(r.size) << ',' << csv_field(r.solver) << ','
         << fmt("%.17g", r.tol) << ',' << r.rep << ',' << r.seed << ',' << csv_field(r.status) << ',' << r.iter
         << ',' << fmt("%.17g", r.fval) << ',' << fmt("%.17g", r.grad) << ',' << fmt("%.17g", r.feas) << ','
         << fmt("%.17g", r.feas_pre) << ',' << fmt("%.17g", r.rgrad) << ',' << r.pp_rounds << '\n';
    }
    return os.str();
  }
  if (format == TableFormat::TimingCsv) {
    os << "problem,size,solver,tol,rep,total";
    for (int i = 0; i < kPhaseCount; ++i) os << ',' << phase_name(static_cast<Phase>(i));
    os << ",other\n";
    for (const auto& r : records) {
      double sum = 0.0;
      os << csv_field(r.problem) << ',' << csv_field(r.size) << ',' << csv_field(r.solver) << ','
         << fmt("%.17g", r.tol) << ',' << r.rep << ',' << fmt("%.6e", r.time);
      for (double p : r.phases) {
        os << ',' << fmt("%.6e", p);
        sum += p;
      }
      os << ',' << fmt("%.6e", std::max(0.0, r.time - sum)) << '\n';
    }
    return os.str();
  }
  // text: grouped by tolerance, then problem size
  std::vector<double> tols;
  for (const auto& r : records) {
    if (std::find(tols.begin(), tols.end(), r.tol) == tols.end()) tols.push_back(r.tol);
  }
  char line[256];
  for (double t : tols) {
    os << "tol = " << fmt("%.0e", t) << '\n';
    std::snprintf(line, sizeof line, "%-14s %-10s %-10s %6s %10s %10s %10s %10s %-14s\n", "problem", "size", "solver",
                  "Iter", "Fval", "Grad", "Feas", "CPU(s)", "status");
    os << line;
    for (const auto& r : records) {
      if (r.tol != t) continue;
      std::snprintf(line, sizeof line, "%-14s %-10s %-10s %6ld %10.2e %10.2e %10.2e %10.2f %-14s\n",
                    r.problem.c_str(), r.size.c_str(), r.solver.c_str(), r.iter, r.fval, r.rgrad, r.feas, r.time,
                    r.status.c_str());
      os << line;
    }
    os << '\n';
  }
  return os.str();
}

/// Parses the deterministic CSV produced by emit_table(Csv).
inline std::vector<ExperimentRecord> parse_results_csv(const std::string& text) {
  std::vector<ExperimentRecord> out;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw Error("parse_results_csv: empty input");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::csv_split(line);
    if (f.size() != 14) throw Error("parse_results_csv: expected 14 fields");
    ExperimentRecord r;
    r.problem = f[0];
    r.size = f[1];
    r.solver = f[2];
    r.tol = std::strtod(f[3].c_str(), nullptr);
    r.rep = std::atoi(f[4].c_str());
    r.seed = std::strtoull(f[5].c_str(), nullptr, 10);
    r.status = f[6];
    r.iter = std::atol(f[7].c_str());
    r.fval = std::strtod(f[8].c_str(), nullptr);
    r.grad = std::strtod(f[9].c_str(), nullptr);
    r.feas = std::strtod(f[10].c_str(), nullptr);
    r.feas_pre = std::strtod(f[11].c_str(), nullptr);
    r.rgrad = std::strtod(f[12].c_str(), nullptr);
    r.pp_rounds = std::atoi(f[13].c_str());
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string trace_csv(const ExperimentRecord& r) {
  std::ostringstream os;
  os << "iter,h,grad,feas,elapsed\n";
  for (const auto& t : r.trace) {
    os << t.iter << ',' << detail::fmt("%.17g", t.value) << ',' << detail::fmt("%.17g", t.grad_norm) << ','
       << detail::fmt("%.17g", t.feas) << ',' << detail::fmt("%.6e", t.elapsed) << '\n';
  }
  return os.str();
}

/// Runs every (rep, tol, solver) cell; all solvers of one repetition share x0.
/// Records come back in (rep, tol, solver) order regardless of thread count.
inline std::vector<ExperimentRecord> run(const ExperimentConfig& e, const RunOptions& opt = {}) {
  struct Cell {
    int rep;
    double tol;
    std::string solver;
  };
  std::vector<Problem> problems;
  std::vector<FeasiblePoint> starts;
  std::vector<Cell> cells;
  for (int rep = 0; rep < e.repetitions; ++rep) {
    problems.push_back(build_problem(e, rep));
    starts.push_back(random_feasible(problems.back().spec, e.init_seed + static_cast<std::uint64_t>(rep)));
    for (double t : e.tols)
      for (const auto& s : e.solvers) cells.push_back({rep, t, s});
  }
  std::vector<ExperimentRecord> records(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      records[i] = run_cell(problems[c.rep], c.solver, c.tol, c.rep, starts[c.rep], e, opt.keep_points);
    }
  };
  const int nt = std::min<int>(thread_count(opt.threads), static_cast<int>(cells.size()));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (opt.write_files) {
    namespace fs = std::filesystem;
    const fs::path dir(e.out_dir);
    fs::create_directories(dir / "traces");
    detail::write_file(dir / "results.csv", emit_table(records, TableFormat::Csv));
    detail::write_file(dir / "results.txt", emit_table(records, TableFormat::Text));
    detail::write_file(dir / "timings.csv", emit_table(records, TableFormat::TimingCsv));
    for (const auto& r : records) {
      const std::string name =
          r.problem + "_" + r.solver + "_tol" + detail::fmt("%.0e", r.tol) + "_rep" + std::to_string(r.rep) + ".csv";
      detail::write_file(dir / "traces" / name, trace_csv(r));
    }
  }
  return records;
}

struct TimingBreakdown {
  std::string solver;
  long iters = 0;
  double total = 0.0;
  std::array<double, kPhaseCount> seconds{};
  std::array<double, kPhaseCount> percent{};
  double other_seconds = 0.0;
  double other_percent = 0.0;
  long retractions = 0;
  long transports = 0;

  double pct(Phase p) const { return percent[static_cast<int>(p)]; }
};

/// Fixed-iteration profile: each solver runs `iters` iterations from the same x0
/// with the gradient tolerance disabled.
inline std::vector<TimingBreakdown> timing_profile(const ExperimentConfig& e, long iters = 100) {
  const Problem pr = build_problem(e, 0);
  const FeasiblePoint x0 = random_feasible(pr.spec, e.init_seed);
  const PenaltyFunction pf(pr, e.beta.value_or(pr.default_beta));
  std::vector<TimingBreakdown> out;
  for (const auto& s : e.solvers) {
    SolverConfig cfg;
    cfg.grad_tol = 0.0;
    cfg.max_iter = iters;
    cfg.time_limit = e.time_limit;
    cfg.record_trace = false;
    const SolveReport r = solve(s, pf, x0, cfg);
    TimingBreakdown t;
    t.solver = s;
    t.iters = r.iter;
    t.total = r.total_time;
    t.seconds = r.phases;
    double sum = 0.0;
    for (double v : r.phases) sum += v;
    t.other_seconds = std::max(0.0, r.total_time - sum);
    const double denom = sum + t.other_seconds;
    for (int i = 0; i < kPhaseCount; ++i) t.percent[i] = denom > 0.0 ? 100.0 * r.phases[i] / denom : 0.0;
    t.other_percent = denom > 0.0 ? 100.0 * t.other_seconds / denom : 0.0;
    t.retractions = r.counters.retractions;
    t.transports = r.counters.transports;
    out.push_back(t);
  }
  return out;
}

inline std::string emit_profile(const std::vector<TimingBreakdown>& prof) {
  std::ostringstream os;
  os << "solver,iters,total";
  for (int i = 0; i < kPhaseCount; ++i) os << ',' << phase_name(static_cast<Phase>(i)) << "_pct";
  os << ",other_pct,retractions,transports\n";
  for (const auto& t : prof) {
    os << t.solver << ',' << t.iters << ',' << detail::fmt("%.6e", t.total);
    for (double p : t.percent) os << ',' << detail::fmt("%.2f", p);
    os << ',' << detail::fmt("%.2f", t.other_percent) << ',' << t.retractions << ',' << t.transports << '\n';
  }
  return os.str();
}

}  // namespace gocdf
