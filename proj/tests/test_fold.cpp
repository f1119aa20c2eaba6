#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "oscdrift/errors.hpp"
#include "oscdrift/fold.hpp"

using namespace oscdrift;

namespace {

const Instance& desk_once() {
  static const Instance inst = desk_instance();
  return inst;
}

const FoldSequence& sequence_once() {
  static const FoldSequence seq = construct_divergent(desk_once());
  return seq;
}

}  // namespace

TEST_CASE("target search returns the start for a constant problem") {
  const PiecewisePotential zero = zero_potential();
  const Mesh mesh = build_mesh(zero, 8, 1000);
  const TargetSearch t = find_s_for_target(zero, constant_coefficient(3.0), 3.0, 1e-6, 2.5, mesh);
  CHECK(t.s == 2.5);
  CHECK(t.visited.size() >= 1);
  CHECK(t.visited.front().s == 2.5);
}

TEST_CASE("unreachable target exhausts the sweep") {
  const Instance& inst = desk_once();
  SearchOptions opt;
  opt.s_cap = 50.0;
  CHECK_THROWS_AS(find_s_for_target(inst.m, inst.c, inst.c.max + 10.0, 1.0, 1.0, inst.mesh, opt), Error);
  try {
    find_s_for_target(inst.m, inst.c, inst.c.min - 10.0, 1.0, 1.0, inst.mesh, opt);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SweepExhausted);
  }
}

TEST_CASE("target search on the S_D potential lands in the upper half") {
  const Instance& inst = desk_once();
  const double gap = inst.lambda_D - inst.lambda_N;
  const TargetSearch t = find_s_for_target(inst.m, inst.c, inst.lambda_D, 0.5 * gap, 1.0, inst.mesh);
  CHECK(t.result.lambda > 0.5 * (inst.lambda_D + inst.lambda_N));
  CHECK(t.result.lambda <= inst.lambda_D + t.tol);
  // every earlier grid point missed the tolerance
  for (std::size_t i = 0; i + 1 < t.visited.size(); ++i) {
    CHECK(std::abs(t.visited[i].result.lambda - inst.lambda_D) >= t.tol);
  }
  CHECK(t.analytic_bound == doctest::Approx(8.0 / std::log1p(1.0 / (2.0 * inst.c.max))));
  CHECK(t.analytic_bound > t.s);
}

TEST_CASE("sweep keeps grid order and matches single solves") {
  const Instance& inst = desk_once();
  const std::vector<double> grid = geometric_grid(1.0, 100.0, 5);
  CHECK(grid.front() == 1.0);
  CHECK(grid.back() == 100.0);
  const std::vector<SweepPoint> pts = sweep(inst.m, inst.c, grid, inst.mesh);
  REQUIRE(pts.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(pts[i].s == grid[i]);
    EigenProblem pb;
    pb.m = inst.m;
    pb.c = inst.c;
    pb.s = grid[i];
    CHECK(pts[i].result.lambda == principal_eigenvalue(pb, inst.mesh).lambda);
  }
}

TEST_CASE("continuity certificate trivial cases") {
  const Instance& inst = desk_once();
  const ContinuityReport same = continuity_certificate(10.0, inst.m, inst.m, inst.c.max, 50.0, 50.0);
  CHECK(same.pass);
  CHECK(same.lhs == 0.0);
  CHECK(same.rhs == 0.0);
  const ContinuityReport shifted_m =
      continuity_certificate(10.0, inst.m, inst.m.shifted(0.3), inst.c.max, 50.0, 50.0);
  CHECK(shifted_m.pass);
  CHECK(shifted_m.distance == doctest::Approx(0.3));
  CHECK(shifted_m.rhs > 0.0);
  const ContinuityReport broken = continuity_certificate(1.0, inst.m, inst.m, inst.c.max, 10.0, 20.0);
  CHECK_FALSE(broken.pass);
}

TEST_CASE("sup distance of a fold is twice the folded amplitude") {
  const Instance& inst = desk_once();
  const Breakpoints bp = breakpoints(inst.params, 3);
  const PiecewisePotential folded = fold(inst.m, bp.z[1]);
  // beyond z_1 the largest |m| is the level-1 plateau nu h
  CHECK(sup_distance(inst.m, folded) == doctest::Approx(2.0 * inst.params.nu * inst.params.h).epsilon(1e-12));
}

TEST_CASE("three-stage construction satisfies the sequence invariants") {
  const Instance& inst = desk_once();
  const FoldSequence& seq = sequence_once();
  REQUIRE(seq.stages.size() == 3);
  const double mid = 0.5 * (seq.lambda_D + seq.lambda_N);
  double prev_s = 0.0, prev_z = 0.0;
  for (const StageRecord& st : seq.stages) {
    INFO("stage " << st.k);
    CHECK(st.s > prev_s);
    prev_s = st.s;
    CHECK(st.membership.pass);
    CHECK(std::abs(st.lambda - st.target) < st.tol);
    CHECK(st.tol >= stage_tolerance(seq.gap(), st.k));
    CHECK(((st.k % 2 == 1) ? st.lambda > mid : st.lambda < mid));
    if (st.fold_point) {
      CHECK(*st.fold_point > prev_z);
      CHECK(*st.fold_point > inst.params.a - st.delta_tau);
      prev_z = *st.fold_point;
      REQUIRE(st.continuity);
      CHECK(st.continuity->pass);
    }
  }
  CHECK(std::abs(seq.stages[0].lambda - seq.stages[1].lambda) > 0.5 * seq.gap());
}

TEST_CASE("later potentials agree with earlier ones before a - delta(tau)") {
  const FoldSequence& seq = sequence_once();
  const double a = seq.params.a;
  for (std::size_t k = 0; k < seq.stages.size() && k + 1 < seq.potentials.size(); ++k) {
    const double edge = a - seq.stages[k].delta_tau;
    for (std::size_t later = k + 1; later < seq.potentials.size(); ++later) {
      for (int i = 0; i <= 2000; ++i) {
        const double r = edge * i / 2000.0;
        CHECK(seq.potentials[later].value(r) == seq.potentials[k].value(r));
        CHECK(seq.potentials[later].value(1.0 - r) == seq.potentials[k].value(1.0 - r));
      }
    }
  }
  // folds flip signs only, so |m| is unchanged everywhere
  for (const PiecewisePotential& m : seq.potentials) {
    for (int i = 0; i <= 2000; ++i) {
      const double r = i / 2000.0;
      CHECK(std::abs(m.value(r)) == std::abs(seq.potentials.front().value(r)));
    }
  }
}

TEST_CASE("construction is deterministic") {
  const FoldSequence& seq = sequence_once();
  FoldOptions opt;
  opt.search.threads = 1;  // a different schedule must not change anything
  const FoldSequence again = construct_divergent(desk_once(), opt);
  REQUIRE(again.stages.size() == seq.stages.size());
  for (std::size_t k = 0; k < seq.stages.size(); ++k) {
    CHECK(again.stages[k].s == seq.stages[k].s);
    CHECK(again.stages[k].lambda == seq.stages[k].lambda);
  }
  REQUIRE(again.potentials.size() == seq.potentials.size());
  for (std::size_t k = 0; k < seq.potentials.size(); ++k) {
    CHECK(bit_identical(again.potentials[k], seq.potentials[k]));
  }
}

TEST_CASE("divergence table over the terminal potential") {
  const FoldSequence& seq = sequence_once();
  const std::vector<double> grid = geometric_grid(1.0, 1e5, 11);
  const std::vector<DivergenceRow> rows = divergence_table(seq, grid);
  CHECK(rows.size() == grid.size() + seq.stages.size());
  int markers = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) CHECK(rows[i].s >= rows[i - 1].s);
    CHECK(rows[i].lambda >= seq.c.min - rows[i].h_estimate);
    CHECK(rows[i].lambda <= seq.c.max + rows[i].h_estimate);
    if (rows[i].stage > 0) {
      ++markers;
      const StageRecord& st = seq.stages[static_cast<std::size_t>(rows[i].stage - 1)];
      CHECK(rows[i].achieved == st.lambda);
      // the terminal potential differs from m_k only where |m| < tau_k
      const ContinuityReport cr = continuity_certificate(st.s, seq.potentials[st.k - 1], seq.terminal(),
                                                         seq.c_star, st.lambda, rows[i].lambda,
                                                         st.h_estimate + rows[i].h_estimate);
      CHECK(cr.pass);
    }
  }
  CHECK(markers == 3);
  std::ostringstream csv, svg;
  write_divergence_csv(csv, rows);
  CHECK(csv.str().rfind("s,lambda,residual,h_estimate,stage,target,achieved\n", 0) == 0);
  write_divergence_svg(svg, rows, seq.lambda_D, seq.lambda_N);
  CHECK(svg.str().find("<polyline") != std::string::npos);
  std::ostringstream report;
  write_fold_report(report, seq);
  CHECK(report.str().find("stage 3") != std::string::npos);
}

TEST_CASE("starting fold level must be a retained zero-touch point") {
  FoldOptions opt;
  opt.stages = 1;
  opt.start_fold_level = static_cast<int>(desk_once().m.meta().zero_touch.size());
  try {
    construct_divergent(desk_once(), opt);
    FAIL("expected NotAFoldPoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotAFoldPoint);
  }
}
