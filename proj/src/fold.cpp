#include "oscdrift/fold.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "oscdrift/errors.hpp"

namespace oscdrift {
namespace {

unsigned worker_count(const SearchOptions& options, std::size_t jobs) {
  unsigned n = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

SweepPoint solve_at(const PiecewisePotential& m, const Coefficient& c, double s, const Mesh& mesh,
                    const SolverOptions& solver) {
  EigenProblem problem;
  problem.m = m;
  problem.c = c;
  problem.s = s;
  const auto t0 = std::chrono::steady_clock::now();
  SweepPoint p;
  p.s = s;
  p.result = principal_eigenvalue(problem, mesh, solver);
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return p;
}

}  // namespace

double analytic_strength_bound(int stage, double c_star) {
  return 8.0 / std::log1p(1.0 / ((stage + 1) * c_star));
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0) throw Error(ErrorKind::InvalidParams, "need 0 < lo <= hi and count > 0");
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

std::vector<SweepPoint> sweep(const PiecewisePotential& m, const Coefficient& c,
                              std::span<const double> s_grid, const Mesh& mesh,
                              const SearchOptions& options) {
  std::vector<SweepPoint> out(s_grid.size());
  std::vector<std::exception_ptr> errors(s_grid.size());
  const unsigned workers = worker_count(options, s_grid.size());
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < s_grid.size(); i += workers) {
        try {
          out[i] = solve_at(m, c, s_grid[i], mesh, options.solver);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

TargetSearch find_s_for_target(const PiecewisePotential& m, const Coefficient& c, double target,
                               double tol, double s_start, const Mesh& mesh,
                               const SearchOptions& options, int stage) {
  if (!(s_start >= 0.0) || !(tol > 0.0) || !(options.ratio > 1.0)) {
    throw Error(ErrorKind::InvalidParams, "need s_start >= 0, tol > 0 and ratio > 1");
  }
  TargetSearch search;
  search.analytic_bound = analytic_strength_bound(stage, std::max(std::abs(c.max), std::abs(c.min)));
  // s = 0 cannot seed a geometric grid; it is tried alone first.
  double next = s_start;
  if (next == 0.0) {
    SweepPoint p = solve_at(m, c, 0.0, mesh, options.solver);
    search.visited.push_back(p);
    const double t = std::max(tol, 3.0 * p.result.h_estimate);
    if (std::abs(p.result.lambda - target) < t) {
      search.s = 0.0;
      search.result = p.result;
      search.tol = t;
      return search;
    }
    next = 1.0;
  }
  const unsigned batch = worker_count(options, 64);
  while (next <= options.s_cap) {
    std::vector<double> grid;
    for (unsigned i = 0; i < batch && next <= options.s_cap; ++i) {
      grid.push_back(next);
      next *= options.ratio;
    }
    std::vector<SweepPoint> pts = sweep(m, c, grid, mesh, options);
    for (SweepPoint& p : pts) {
      search.visited.push_back(p);
      const double t = std::max(tol, 3.0 * p.result.h_estimate);
      if (std::abs(p.result.lambda - target) < t) {
        search.s = p.s;
        search.result = p.result;
        search.tol = t;
        return search;
      }
    }
  }
  std::ostringstream msg;
  msg << "no grid strength up to " << options.s_cap << " brings lambda within " << tol
      << " of " << target;
  if (!search.visited.empty()) msg << " (last lambda = " << search.visited.back().result.lambda << ")";
  throw Error(ErrorKind::SweepExhausted, msg.str());
}

double sup_distance(const PiecewisePotential& m1, const PiecewisePotential& m2) {
  std::vector<double> cuts{0.0, 1.0};
  for (const Piece& p : m1.pieces()) cuts.push_back(p.lo);
  for (const Piece& p : m2.pieces()) cuts.push_back(p.lo);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  constexpr int kPerSegment = 64;
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    for (int q = 0; q <= kPerSegment; ++q) {
      // Sample just inside the segment so both potentials use the same piece.
      double r = lo + (hi - lo) * q / kPerSegment;
      if (q == kPerSegment) r = std::nextafter(hi, lo);
      best = std::max(best, std::abs(m1.value(r) - m2.value(r)));
    }
  }
  return best;
}

ContinuityReport continuity_certificate(double s, const PiecewisePotential& m1,
                                        const PiecewisePotential& m2, double c_star,
                                        double lambda1, double lambda2, double slack) {
  ContinuityReport r;
  r.distance = sup_distance(m1, m2);
  r.lhs = std::abs(lambda1 - lambda2);
  r.slack = slack;
  r.rhs = c_star * std::expm1(4.0 * s * r.distance) + 2.0 * slack;
  r.pass = r.lhs <= r.rhs;
  return r;
}

double solve_slack(const EigenResult& r1, const EigenResult& r2) {
  const auto one = [](const EigenResult& r) { return r.residual * std::abs(r.lambda) + r.h_estimate; };
  return std::max(one(r1), one(r2));
}

double stage_tolerance(double gap, int k) { return 0.2 * gap / k; }

FoldSequence construct_divergent(const Instance& instance, const FoldOptions& options) {
  if (options.stages < 1) throw Error(ErrorKind::InvalidParams, "need at least one stage");
  FoldSequence seq;
  seq.instance = instance.name;
  seq.params = instance.params;
  seq.c = instance.c;
  seq.mesh = instance.mesh;
  seq.lambda_D = instance.lambda_D;
  seq.lambda_N = instance.lambda_N;
  seq.c_star = instance.c.max;

  const double a = instance.params.a;
  const std::vector<double>& touch = instance.m.meta().zero_touch;
  const double mid = 0.5 * (seq.lambda_D + seq.lambda_N);
  double s_from = options.s_start;
  int last_level = -1;
  Regime regime = Regime::SD;
  if (options.start_fold_level >= 0) {
    const auto j = static_cast<std::size_t>(options.start_fold_level);
    if (j >= touch.size()) throw Error(ErrorKind::NotAFoldPoint, "start fold level is not retained");
    seq.potentials.push_back(fold(instance.m, touch[j]));
    last_level = options.start_fold_level;
    regime = Regime::SN;
  } else {
    seq.potentials.push_back(instance.m);
  }

  for (int k = 1; k <= options.stages; ++k) {
    const PiecewisePotential& mk = seq.potentials.back();
    StageRecord st;
    st.k = k;
    st.regime = regime;
    st.target = regime == Regime::SD ? seq.lambda_D : seq.lambda_N;
    st.envelope_shift = last_level + 1;
    // Amplitude-scale form: level n of the shifted envelope is level n + shift of
    // the original one, which is exactly what the untouched tail of m_k follows.
    const StepParams env = st.envelope_shift > 0 ? instance.params.shifted(st.envelope_shift, false)
                                                 : instance.params;
    st.membership = check_membership(mk, env, regime, instance.mesh.nodes);

    const double tol = stage_tolerance(seq.gap(), k);
    TargetSearch found = find_s_for_target(mk, seq.c, st.target, tol, s_from, seq.mesh, options.search, k);
    st.s = found.s;
    st.tol = found.tol;
    st.lambda = found.result.lambda;
    st.residual = found.result.residual;
    st.h_estimate = found.result.h_estimate;
    st.analytic_bound = found.analytic_bound;
    st.grid_points = found.visited.size();
    if ((st.regime == Regime::SD) != (st.lambda > mid)) {
      std::ostringstream msg;
      msg << "stage " << k << " eigenvalue " << st.lambda << " lies on the wrong side of " << mid;
      throw Error(ErrorKind::NoConvergence, msg.str());
    }

    const bool fold_now = k < options.stages || options.terminal_fold;
    if (fold_now) {
      st.tau = 1.0 / (st.s * st.s);
      st.delta_tau = envelope_delta(mk, st.tau);
      for (std::size_t j = static_cast<std::size_t>(last_level + 1); j < touch.size(); ++j) {
        if (touch[j] > a - st.delta_tau) {
          st.fold_point = touch[j];
          st.fold_level = static_cast<int>(j);
          break;
        }
      }
      if (!st.fold_point) {
        if (k < options.stages) {
          std::ostringstream msg;
          msg << "stage " << k << ": no retained fold point beyond a - delta(tau) with tau = "
              << st.tau << "; lower the truncation floors";
          throw Error(ErrorKind::CapExceeded, msg.str());
        }
      } else {
        PiecewisePotential next = fold(mk, *st.fold_point);
        EigenProblem pb;
        pb.m = next;
        pb.c = seq.c;
        pb.s = st.s;
        const EigenResult r_next = principal_eigenvalue(pb, seq.mesh, options.search.solver);
        st.lambda_next = r_next.lambda;
        st.continuity = continuity_certificate(st.s, mk, next, seq.c_star, st.lambda, r_next.lambda,
                                               solve_slack(found.result, r_next));
        last_level = st.fold_level;
        seq.potentials.push_back(std::move(next));
      }
    }
    seq.stages.push_back(st);
    s_from = st.s * options.search.ratio;
    regime = regime == Regime::SD ? Regime::SN : Regime::SD;
  }
  return seq;
}

std::vector<DivergenceRow> divergence_table(const FoldSequence& seq, std::span<const double> s_grid,
                                            const SearchOptions& options) {
  std::vector<DivergenceRow> rows;
  for (double s : s_grid) rows.push_back({s, 0, 0, 0, 0, 0, 0});
  for (const StageRecord& st : seq.stages) {
    rows.push_back({st.s, 0, 0, 0, st.k, st.target, st.lambda});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const DivergenceRow& x, const DivergenceRow& y) { return x.s < y.s; });
  std::vector<double> all;
  for (const DivergenceRow& r : rows) all.push_back(r.s);
  const std::vector<SweepPoint> pts = sweep(seq.terminal(), seq.c, all, seq.mesh, options);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].lambda = pts[i].result.lambda;
    rows[i].residual = pts[i].result.residual;
    rows[i].h_estimate = pts[i].result.h_estimate;
  }
  return rows;
}

void write_divergence_csv(std::ostream& out, const std::vector<DivergenceRow>& rows) {
  out << "s,lambda,residual,h_estimate,stage,target,achieved\n";
  out << std::setprecision(17);
  for (const DivergenceRow& r : rows) {
    out << r.s << ',' << r.lambda << ',' << r.residual << ',' << r.h_estimate << ',' << r.stage << ',';
    if (r.stage > 0) out << r.target << ',' << r.achieved;
    else out << ',';
    out << '\n';
  }
}

void write_divergence_svg(std::ostream& out, const std::vector<DivergenceRow>& rows,
                          double lambda_D, double lambda_N) {
  const double W = 720, H = 420, L = 70, R = 20, T = 20, B = 50;
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
  double lmin = std::min(lambda_D, lambda_N), lmax = std::max(lambda_D, lambda_N);
  for (const DivergenceRow& r : rows) {
    if (r.s <= 0.0) continue;
    smin = std::min(smin, r.s);
    smax = std::max(smax, r.s);
    lmin = std::min(lmin, r.lambda);
    lmax = std::max(lmax, r.lambda);
  }
  if (!(smax > smin)) smax = smin * 10.0;
  const double pad = 0.05 * (lmax - lmin + 1e-12);
  lmin -= pad;
  lmax += pad;
  const auto X = [&](double s) { return L + (W - L - R) * std::log(s / smin) / std::log(smax / smin); };
  const auto Y = [&](double l) { return T + (H - T - B) * (lmax - l) / (lmax - lmin); };

  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (const auto& [level, name, color] :
       {std::tuple{lambda_D, "lambda_D", "#c0392b"}, std::tuple{lambda_N, "lambda_N", "#2471a3"}}) {
    out << "<line x1=\"" << L << "\" y1=\"" << Y(level) << "\" x2=\"" << W - R << "\" y2=\"" << Y(level)
        << "\" stroke=\"" << color << "\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << W - R - 70 << "\" y=\"" << Y(level) - 4 << "\" font-size=\"12\" fill=\"" << color
        << "\">" << name << "</text>\n";
  }
  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (const DivergenceRow& r : rows) {
    if (r.s > 0.0) out << X(r.s) << ',' << Y(r.lambda) << ' ';
  }
  out << "\"/>\n";
  for (const DivergenceRow& r : rows) {
    if (r.stage == 0 || r.s <= 0.0) continue;
    out << "<circle cx=\"" << X(r.s) << "\" cy=\"" << Y(r.achieved) << "\" r=\"4\" fill=\"#27ae60\"/>\n";
  }
  for (double dec = std::pow(10.0, std::ceil(std::log10(smin))); dec <= smax; dec *= 10.0) {
    out << "<text x=\"" << X(dec) - 10 << "\" y=\"" << H - B + 18 << "\" font-size=\"11\">1e"
        << static_cast<int>(std::lround(std::log10(dec))) << "</text>\n";
  }
  out << "<text x=\"" << (W / 2) << "\" y=\"" << H - 10 << "\" font-size=\"12\">s (log scale)</text>\n";
  out << "<text x=\"12\" y=\"" << T + 12 << "\" font-size=\"12\">lambda</text>\n";
  out << "</svg>\n";
}

void write_fold_report(std::ostream& out, const FoldSequence& seq) {
  out << std::setprecision(12);
  out << "instance " << seq.instance << "\n";
  out << "lambda_D " << seq.lambda_D << "\nlambda_N " << seq.lambda_N << "\nc_star " << seq.c_star << "\n";
  out << "nodes " << seq.mesh.size() << "\n";
  out << "stage tolerances are max(0.2 gap / k, 3 h_estimate), a numerical substitute for the "
         "analytic 1/k thresholds\n";
  for (const StageRecord& st : seq.stages) {
    out << "stage " << st.k << " regime " << (st.regime == Regime::SD ? "SD" : "SN")
        << " membership " << (st.membership.pass ? "pass" : "FAIL") << " (envelope shift "
        << st.envelope_shift << ", margin " << st.membership.worst_margin << ")\n";
    out << "  s " << st.s << " lambda " << st.lambda << " target " << st.target << " tol " << st.tol
        << " residual " << st.residual << " h_estimate " << st.h_estimate << "\n";
    out << "  analytic bound " << st.analytic_bound << " grid points " << st.grid_points << "\n";
    if (st.fold_point) {
      out << "  tau " << st.tau << " delta " << st.delta_tau << " fold z_" << st.fold_level << " = "
          << *st.fold_point << "\n";
      if (st.continuity) {
        out << "  continuity |dlambda| " << st.continuity->lhs << " <= " << st.continuity->rhs << " "
            << (st.continuity->pass ? "pass" : "FAIL") << " (sup|dm| " << st.continuity->distance
            << ", lambda(s, m_next) " << st.lambda_next << ")\n";
      }
    } else if (st.tau > 0.0) {
      out << "  tau " << st.tau << " delta " << st.delta_tau << " no retained fold point\n";
    }
  }
}

}  // namespace oscdrift
