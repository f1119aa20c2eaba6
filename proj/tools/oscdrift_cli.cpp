// Command-line front end: reference solves, sweeps, certificates, the fold
// construction and reaction-diffusion runs.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "oscdrift/eigen.hpp"
#include "oscdrift/errors.hpp"
#include "oscdrift/fold.hpp"
#include "oscdrift/hypotheses.hpp"
#include "oscdrift/instances.hpp"
#include "oscdrift/rda.hpp"

#ifndef OSCDRIFT_VERSION
#define OSCDRIFT_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace oscdrift;

namespace {

enum Exit : int { kOk = 0, kConfig = 2, kSolver = 3, kValidation = 4 };

struct Common {
  std::string fixture = "desk";
  std::string m = "fixture";
  std::string c = "fixture";
  std::string sigma = "example";
  std::size_t cap = 2'000'000;
  std::size_t base_intervals = 0;
  int p_min = 8;
  unsigned threads = 0;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool timing = false;
};

struct Grid {
  double s_min = 1.0;
  double s_max = 1e5;
  std::size_t count = 21;
};

/// Everything a subcommand needs: fixture, the selected potential and
/// coefficient, and a mesh resolving both.
struct Setup {
  Instance inst;
  PiecewisePotential m;
  Coefficient c;
  Mesh mesh;
  int fold_shift = 0;  // envelope levels consumed by folds named in --m
  Regime regime = Regime::SD;
};

std::string header_text;  // reproducibility header, filled once parsing is done

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::ParseError, "bad number in " + what + ": '" + text + "'");
  }
}

std::pair<std::string, std::string> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

Instance load_fixture(const std::string& name, const Common& cfg) {
  MeshOptions mo;
  mo.p_min = cfg.p_min;
  mo.cap = cfg.cap;
  mo.base_intervals = cfg.base_intervals;
  if (name == "desk") {
    InstanceOptions io;
    io.mesh = mo;
    return desk_instance(io);
  }
  if (name == "paper") {
    InstanceOptions io;
    io.mesh = mo;
    return make_instance("paper", example_params(), io);
  }
  if (name == "rda") return make_instance("rda", rda_params(), reaction_coefficient(sigma_example_profile()), mo);
  throw Error(ErrorKind::ParseError, "unknown fixture '" + name + "' (desk, paper, rda)");
}

SigmaProfile parse_sigma(const std::string& spec) {
  const auto [kind, arg] = split_spec(spec);
  if (kind == "example") return sigma_example_profile();
  if (kind == "const") return constant_sigma(parse_number(arg, "--sigma"));
  throw Error(ErrorKind::ParseError, "unknown sigma '" + spec + "' (example, const:<v>)");
}

Setup make_setup(const Common& cfg) {
  Setup st;
  st.inst = load_fixture(cfg.fixture, cfg);
  const StepParams& p = st.inst.params;

  const auto [mk, marg] = split_spec(cfg.m);
  if (mk == "fixture" || mk == "smd") {
    st.m = st.inst.m;
  } else if (mk == "zero") {
    st.m = zero_potential(p.a, p.b);
  } else if (mk == "linear") {
    st.m = linear_potential(parse_number(marg, "--m"));
  } else if (mk == "fold") {
    // fold:j1,j2,... at the zero-touch points of the smooth potential
    st.m = st.inst.m;
    std::stringstream ss(marg);
    std::string item;
    int folds = 0;
    while (std::getline(ss, item, ',')) {
      const int j = static_cast<int>(parse_number(item, "--m"));
      const auto& touch = st.inst.m.meta().zero_touch;
      if (j < 0 || static_cast<std::size_t>(j) >= touch.size()) {
        throw Error(ErrorKind::NotAFoldPoint, "fold level " + item + " is not retained");
      }
      st.m = fold(st.m, touch[static_cast<std::size_t>(j)]);
      st.fold_shift = j + 1;
      ++folds;
    }
    if (folds == 0) throw Error(ErrorKind::ParseError, "fold:<level>[,<level>...] needs a level");
    st.regime = folds % 2 == 1 ? Regime::SN : Regime::SD;
  } else if (mk == "file") {
    std::ifstream in(marg);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open potential file '" + marg + "'");
    st.m = read_potential(in);
  } else {
    throw Error(ErrorKind::ParseError, "unknown potential '" + cfg.m + "' (fixture, zero, linear:<k>, fold:<j>, file:<path>)");
  }

  const auto [ck, carg] = split_spec(cfg.c);
  if (ck == "fixture") st.c = st.inst.c;
  else if (ck == "const") st.c = constant_coefficient(parse_number(carg, "--c"));
  else if (ck == "desk") st.c = desk_profile(p.a, p.b, parse_number(carg, "--c"));
  else if (ck == "sigma") st.c = reaction_coefficient(parse_sigma(cfg.sigma));
  else throw Error(ErrorKind::ParseError, "unknown coefficient '" + cfg.c + "' (fixture, const:<v>, desk:<c_out>, sigma)");

  if (mk == "fixture" || mk == "smd" || mk == "fold") {
    st.mesh = st.inst.mesh;
  } else {
    MeshOptions mo;
    mo.p_min = cfg.p_min;
    mo.cap = cfg.cap;
    mo.base_intervals = cfg.base_intervals;
    mo.extra_breaks = st.c.breakpoints;
    mo.extra_breaks.push_back(p.a);
    mo.extra_breaks.push_back(p.b);
    st.mesh = build_mesh(st.m, mo);
  }
  return st;
}

std::string mesh_stats(const Mesh& mesh) {
  std::ostringstream out;
  out << "nodes " << mesh.size() << ", min spacing " << std::setprecision(6) << mesh.min_spacing();
  return out.str();
}

/// Opens out_dir/name and writes the commented header first.
std::ofstream open_output(const Common& cfg, const std::string& name, const std::string& mesh_line,
                          bool comment = true) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
  if (comment) {
    std::istringstream hdr(header_text);
    std::string line;
    while (std::getline(hdr, line)) out << "# " << line << '\n';
    out << "# mesh " << mesh_line << '\n';
  }
  std::cout << "wrote " << path.string() << '\n';
  return out;
}

EigenProblem full_problem(const Setup& st, double s) {
  EigenProblem pb;
  pb.m = st.m;
  pb.c = st.c;
  pb.s = s;
  return pb;
}

SearchOptions search_options(const Common& cfg) {
  SearchOptions so;
  so.threads = cfg.threads;
  return so;
}

int run_refs(const Common& cfg) {
  const Setup st = make_setup(cfg);
  const StepParams& p = st.inst.params;
  const ReferencePair rp = reference_pair(p.a, p.b, st.c, 1, st.mesh);
  std::cout << std::setprecision(12) << "fixture " << st.inst.name << "  (a, b) = (" << p.a << ", " << p.b
            << ")  " << mesh_stats(st.mesh) << '\n'
            << "lambda_D " << rp.lambda_D << "  h_estimate " << rp.h_estimate_D << "  extrapolated "
            << rp.extrapolated_D << '\n'
            << "lambda_N " << rp.lambda_N << "  h_estimate " << rp.h_estimate_N << "  extrapolated "
            << rp.extrapolated_N << '\n'
            << "gap " << rp.lambda_D - rp.lambda_N << '\n';
  return kOk;
}

int run_solve(const Common& cfg, double s) {
  const Setup st = make_setup(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const EigenResult r = principal_eigenvalue(full_problem(st, s), st.mesh);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << std::setprecision(15) << "s " << s << "\nlambda " << r.lambda << "\nresidual " << r.residual
            << "\nh_estimate " << r.h_estimate << "\nextrapolated " << r.lambda_extrapolated << "\nnodes "
            << r.nodes << '\n';
  if (cfg.timing) std::cout << "seconds " << secs << '\n';
  return kOk;
}

int run_sweep(const Common& cfg, const Grid& g, const std::string& csv_name) {
  const Setup st = make_setup(cfg);
  const std::vector<double> grid = geometric_grid(g.s_min, g.s_max, g.count);
  const std::vector<SweepPoint> pts = sweep(st.m, st.c, grid, st.mesh, search_options(cfg));
  std::ofstream out = open_output(cfg, csv_name, mesh_stats(st.mesh));
  out << "s,lambda,residual,h_estimate,nodes,seconds\n" << std::setprecision(17);
  for (const SweepPoint& p : pts) {
    // timings break byte-identical reruns, so they are opt-in
    out << p.s << ',' << p.result.lambda << ',' << p.result.residual << ',' << p.result.h_estimate << ','
        << p.result.nodes << ',' << (cfg.timing ? p.seconds : 0.0) << '\n';
  }
  std::cout << std::setprecision(10) << "lambda(" << grid.front() << ") = " << pts.front().result.lambda
            << ", lambda(" << grid.back() << ") = " << pts.back().result.lambda << '\n';
  return kOk;
}

int run_certify(const Common& cfg, const Grid& g, const std::string& csv_name) {
  const Setup st = make_setup(cfg);
  const StepParams& p = st.inst.params;
  const ReferencePair rp = reference_pair(p.a, p.b, st.c, 1, st.mesh);
  const std::vector<double> phi_D = dirichlet_test_function(rp.phi_D, p.a, p.b, st.mesh);
  const StepParams env = st.fold_shift > 0 ? p.shifted(st.fold_shift, false) : p;
  const std::vector<double> grid = geometric_grid(g.s_min, g.s_max, g.count);
  const std::vector<SweepPoint> pts = sweep(st.m, st.c, grid, st.mesh, search_options(cfg));

  std::ofstream out = open_output(cfg, csv_name, mesh_stats(st.mesh));
  out << "s,rq_dirichlet_test,rq_neumann_test,lambda\n" << std::setprecision(17);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const EigenProblem pb = full_problem(st, grid[i]);
    // phi_D vanishes where m does not, so its nodal values are already scaled unknowns
    const double rq_d = rayleigh_quotient(phi_D, pb, st.mesh);
    double rq_n = std::numeric_limits<double>::quiet_NaN();
    try {
      rq_n = rayleigh_quotient(neumann_test_function(env, grid[i], rp.phi_N, pb, st.mesh), pb, st.mesh);
    } catch (const Error& e) {
      if (i == 0) std::cerr << "staircase test function unavailable: " << e.what() << '\n';
    }
    out << grid[i] << ',' << rq_d << ',' << rq_n << ',' << pts[i].result.lambda << '\n';
  }
  std::cout << std::setprecision(12) << "lambda_D " << rp.lambda_D << "  lambda_N " << rp.lambda_N << '\n';
  return kOk;
}

int run_fold(const Common& cfg, int stages, double s_start, int start_level, const Grid& g) {
  const Setup st = make_setup(cfg);
  FoldOptions fo;
  fo.stages = stages;
  fo.s_start = s_start;
  fo.search = search_options(cfg);
  fo.start_fold_level = start_level;
  Instance inst = st.inst;
  if (cfg.c != "fixture") {
    const ReferencePair rp = reference_pair(inst.params.a, inst.params.b, st.c, 1, inst.mesh);
    inst.c = st.c;
    inst.lambda_D = rp.lambda_D;
    inst.lambda_N = rp.lambda_N;
  }
  const FoldSequence seq = construct_divergent(inst, fo);
  write_fold_report(std::cout, seq);

  const std::vector<double> grid = geometric_grid(g.s_min, g.s_max, g.count);
  const std::vector<DivergenceRow> rows = divergence_table(seq, grid, fo.search);
  const std::string mesh_line = mesh_stats(seq.mesh);
  {
    std::ofstream out = open_output(cfg, "fold_report.txt", mesh_line);
    write_fold_report(out, seq);
  }
  {
    std::ofstream out = open_output(cfg, "divergence.csv", mesh_line);
    write_divergence_csv(out, rows);
  }
  {
    std::ofstream out = open_output(cfg, "divergence.svg", mesh_line, false);
    write_divergence_svg(out, rows, seq.lambda_D, seq.lambda_N);
  }
  {
    std::ofstream out = open_output(cfg, "terminal_potential.txt", mesh_line, false);
    write_potential(out, seq.terminal());
  }
  const double mid = 0.5 * (seq.lambda_D + seq.lambda_N);
  bool alternating = true;
  for (std::size_t k = 1; k < seq.stages.size(); ++k) {
    alternating = alternating && ((seq.stages[k].lambda > mid) != (seq.stages[k - 1].lambda > mid));
  }
  std::cout << "alternation across " << mid << ": " << (alternating ? "yes" : "no") << '\n';
  return kOk;
}

struct RdaArgs {
  std::string mode = "trajectory";
  double s = 0.0;
  double t_max = 10.0;
  double dt = 0.0;
  double scale = 1.0;
  double perturb = 0.0;  // relative multiplicative noise on u0, drawn from --seed
};

std::vector<double> initial_state(const Mesh& mesh, const RdaArgs& ra, std::uint64_t seed) {
  std::vector<double> u0 = default_initial_state(mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (double& v : u0) v *= ra.scale * (1.0 + ra.perturb * noise(rng));
  return u0;
}

int run_rda(const Common& cfg, const RdaArgs& ra, const Grid& g) {
  Common local = cfg;
  if (local.c == "fixture") local.c = "sigma";
  const Setup st = make_setup(local);
  const SigmaProfile sigma = parse_sigma(cfg.sigma);
  const Coefficient c = reaction_coefficient(sigma);
  RdaOptions ro;
  ro.t_max = ra.t_max;
  ro.dt = ra.dt;
  const std::vector<double> u0 = initial_state(st.mesh, ra, cfg.seed);
  const std::string mesh_line = mesh_stats(st.mesh);

  if (ra.mode == "trajectory") {
    EigenProblem pb = full_problem(st, ra.s);
    pb.c = c;
    const double lambda1 = principal_eigenvalue(pb, st.mesh).lambda;
    const RdaSummary r = rda_run(st.m, ra.s, sigma, u0, st.mesh, ro);
    std::ofstream out = open_output(cfg, "trajectory.csv", mesh_line);
    write_trajectory_csv(out, r);
    const Verdict v = classify(r);
    std::cout << std::setprecision(10) << "s " << ra.s << "  lambda1 " << lambda1 << "  predicted "
              << to_string(predicted_verdict(lambda1)) << "\nverdict " << to_string(v) << "  final sup "
              << r.series.back().sup_norm << "  rate " << r.rate << "  dt " << r.dt << '\n';
    if (v == Verdict::Undecided) std::cout << "undecided: rerun with a larger --t-max\n";
    return kOk;
  }
  if (ra.mode != "phase") throw Error(ErrorKind::ParseError, "--mode must be trajectory or phase");

  const std::vector<double> grid = geometric_grid(g.s_min, g.s_max, g.count);
  std::vector<PhasePoint> points(grid.size());
  const std::vector<SweepPoint> lam = sweep(st.m, c, grid, st.mesh, search_options(cfg));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(grid.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        points[i] = {grid[i], lam[i].result.lambda, classify(rda_run(st.m, grid[i], sigma, u0, st.mesh, ro))};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(grid.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::ofstream out = open_output(cfg, "phase.csv", mesh_line);
  write_phase_csv(out, points);
  int mismatched = 0;
  for (const PhasePoint& p : points) {
    if (p.verdict != Verdict::Undecided && p.verdict != predicted_verdict(p.lambda1)) ++mismatched;
  }
  std::cout << points.size() << " cells, " << mismatched << " disagree with the sign of lambda1\n";
  return kOk;
}

int run_validate(const Common& cfg, double eps) {
  const Setup st = make_setup(cfg);
  const StepParams& p = st.inst.params;
  bool ok = true;
  auto show = [&](const std::string& title, const Report& r) {
    std::cout << "== " << title << '\n' << r.summary() << '\n';
    ok = ok && r.pass();
  };
  if (cfg.fixture == "rda") {
    const SigmaProfile sigma = parse_sigma(cfg.sigma);
    show("growth rate assumptions", validate_sigma(sigma, eps));
    show("sub-interval eigenvalues", sigma_eigen_check(sigma, eps).report);
  } else {
    const ReferencePair rp = reference_pair(p.a, p.b, st.c, 1, st.mesh);
    show("hypotheses", validate_hypotheses(st.m, st.c, rp.lambda_D));
  }
  const StepParams env = st.fold_shift > 0 ? p.shifted(st.fold_shift, false) : p;
  const MembershipReport mr = check_membership(st.m, env, st.regime, st.mesh.nodes);
  std::cout << "== membership (" << (st.regime == Regime::SD ? "S_D" : "S_N") << ", envelope shift "
            << st.fold_shift << ")\n"
            << (mr.pass ? "PASS" : "FAIL") << " worst margin " << mr.worst_margin << " over " << mr.checked
            << " nodes";
  if (mr.first_violation) std::cout << ", first violation at " << *mr.first_violation;
  std::cout << '\n';
  ok = ok && mr.pass;
  return ok ? kOk : kValidation;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NoConvergence:
    case ErrorKind::SweepExhausted:
    case ErrorKind::CapExceeded:
    case ErrorKind::DynamicRangeExceeded:
    case ErrorKind::StepUnstable:
    case ErrorKind::SingularMass:
      return kSolver;
    default:
      return kConfig;
  }
}

std::string exact(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

/// Real-valued option whose echoed default survives a round trip.
CLI::Option* add_real(CLI::App* sub, const std::string& name, double& var, const std::string& desc) {
  return sub->add_option(name, var, desc)->default_str(exact(var));
}

void add_common(CLI::App* sub, Common& cfg) {
  sub->add_option("--fixture", cfg.fixture, "desk, paper or rda")->capture_default_str();
  sub->add_option("--m", cfg.m, "fixture, zero, linear:<slope>, fold:<j>[,<j>...], file:<path>")
      ->capture_default_str();
  sub->add_option("--c", cfg.c, "fixture, const:<v>, desk:<c_out>, sigma")->capture_default_str();
  sub->add_option("--sigma", cfg.sigma, "growth rate: example or const:<v>")->capture_default_str();
  sub->add_option("--cap", cfg.cap, "mesh node budget")->capture_default_str();
  sub->add_option("--base-intervals", cfg.base_intervals, "uniform spacing 1/n; 0 = automatic")
      ->capture_default_str();
  sub->add_option("--p-min", cfg.p_min, "interior nodes per potential piece")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "worker threads; 0 = hardware concurrency")->capture_default_str();
  sub->add_option("--out-dir", cfg.out_dir, "directory for CSV/SVG output")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "seed for initial-state perturbations")->capture_default_str();
  sub->add_flag("--timing", cfg.timing, "record wall-clock seconds in outputs");
}

void add_grid(CLI::App* sub, Grid& g) {
  add_real(sub, "--s-min", g.s_min, "first strength")->check(CLI::PositiveNumber);
  add_real(sub, "--s-max", g.s_max, "last strength")->check(CLI::PositiveNumber);
  sub->add_option("--count", g.count, "geometric grid points")->capture_default_str()->check(CLI::Range(1, 100000));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal eigenvalues under large oscillating advection"};
  app.set_config("--config", "", "key = value config file; command-line flags win");
  app.set_version_flag("--version", OSCDRIFT_VERSION);
  app.require_subcommand(1);

  Common cfg;
  Grid grid;
  double s = 0.0, eps = 1.0 / 48.0, s_start = 1.0;
  int stages = 3, start_level = -1;
  std::string csv = "sweep.csv";
  RdaArgs ra;

  CLI::App* refs = app.add_subcommand("refs", "lambda_D, lambda_N and their gap");
  add_common(refs, cfg);
  CLI::App* solve = app.add_subcommand("solve", "principal eigenvalue at one strength");
  add_common(solve, cfg);
  add_real(solve, "--s", s, "advection strength");
  CLI::App* sw = app.add_subcommand("sweep", "lambda over a geometric s-grid (CSV)");
  add_common(sw, cfg);
  add_grid(sw, grid);
  sw->add_option("--csv", csv, "output file name")->capture_default_str();
  CLI::App* cert = app.add_subcommand("certify", "test-function upper bounds over an s-grid (CSV)");
  add_common(cert, cfg);
  add_grid(cert, grid);
  std::string cert_csv = "certify.csv";
  cert->add_option("--csv", cert_csv, "output file name")->capture_default_str();
  CLI::App* fld = app.add_subcommand("fold", "divergent fold construction, table and plot");
  add_common(fld, cfg);
  add_grid(fld, grid);
  fld->add_option("--stages", stages, "number of stages")->capture_default_str()->check(CLI::Range(1, 50));
  add_real(fld, "--s-start", s_start, "first strength searched");
  fld->add_option("--start-level", start_level, "fold at this level first and start in S_N; -1 starts in S_D")
      ->capture_default_str();
  CLI::App* rda = app.add_subcommand("rda", "reaction-diffusion-advection runs");
  add_common(rda, cfg);
  add_grid(rda, grid);
  rda->add_option("--mode", ra.mode, "trajectory or phase")->capture_default_str();
  add_real(rda, "--s", ra.s, "advection strength (trajectory)");
  add_real(rda, "--t-max", ra.t_max, "final time")->check(CLI::PositiveNumber);
  add_real(rda, "--dt", ra.dt, "time step; 0 = automatic");
  add_real(rda, "--u0-scale", ra.scale, "factor on the default initial state");
  add_real(rda, "--u0-perturb", ra.perturb, "relative random perturbation of u0")->check(CLI::Range(0.0, 0.99));
  CLI::App* val = app.add_subcommand("validate", "hypotheses, growth-rate assumptions and membership");
  add_common(val, cfg);
  add_real(val, "--eps", eps, "boundary-layer width for the growth-rate clauses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  CLI::App* active = app.get_subcommands().front();
  {
    // Only the active subcommand, as a section the --config option reads back.
    const std::string effective = "[" + active->get_name() + "]\n" + active->config_to_str(true, false);
    std::ostringstream hdr;
    hdr << "oscdrift " << OSCDRIFT_VERSION << " " << active->get_name() << '\n'
        << "config-hash " << std::hex << std::setw(16) << std::setfill('0') << fnv1a(effective) << std::dec << '\n'
        << effective;
    header_text = hdr.str();
    std::istringstream lines(header_text);
    std::string line;
    while (std::getline(lines, line)) std::cout << "# " << line << '\n';
  }

  try {
    if (active == refs) return run_refs(cfg);
    if (active == solve) return run_solve(cfg, s);
    if (active == sw) return run_sweep(cfg, grid, csv);
    if (active == cert) return run_certify(cfg, grid, cert_csv);
    if (active == fld) return run_fold(cfg, stages, s_start, start_level, grid);
    if (active == rda) return run_rda(cfg, ra, grid);
    if (active == val) return run_validate(cfg, eps);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  }
  return kConfig;
}
