#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsl/validation.hpp"
#include "support.hpp"

using namespace fsl;
using fsl::test::Rng;
using fsl::test::max_abs;

namespace {

EdgeControlProblem edge_problem(Rng& rng, double alpha, double tikhonov, AdmissibleSet set,
                                int cells = 12, int steps = 16) {
  const Grid1D g(0.0, 1.0, cells);
  const TimeGrid t(1.0, steps);
  return {assemble_stiffness(alpha, g, test::random_coeffs(rng, g), false),
          t,
          rng.mat(t.points(), g.nodes()),
          rng.vec(g.nodes()),
          rng.mat(t.points(), g.nodes()),
          tikhonov,
          std::move(set)};
}

GraphControlProblem graph_problem(Rng& rng, double alpha, int n, int m, AdmissibleSet set) {
  GraphControlProblem gp;
  gp.graph = test::random_star(rng, alpha, n, m, 8, TimeGrid(1.0, 12), true);
  gp.weights = rng.positive(n - 1, 0.5, 2.0);
  gp.admissible.assign(n - 1, set);
  return gp;
}

Vec smooth(const TimeGrid& t, double freq, double shift) {
  Vec v(t.points());
  for (int k = 0; k < t.points(); ++k) v[k] = std::sin(freq * t.t(k) + shift);
  return v;
}

double edge_cost(const EdgeControlProblem& pb, const Mat& u) {
  return cost_edge(pb, solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, u.col(0)), u.col(0));
}

Vec edge_gradient(const EdgeControlProblem& pb, const Vec& u) {
  const Trajectory y = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, u);
  return gradient_edge(pb, u, solve_adjoint_edge(pb.op, pb.time, y, pb.target));
}

}  // namespace

TEST_CASE("projection") {
  Rng rng(1);
  const TimeGrid t(1.0, 10);
  const Vec x = rng.vec(11);
  CHECK(project(AdmissibleSet::unconstrained(), x) == x);
  CHECK(AdmissibleSet::box(0.0, 1.0).project(Vec::Constant(11, 2.0)) == Vec::Ones(11));

  Vec lo = Vec::Constant(11, -0.5), hi = smooth(t, 3.0, 0.0).cwiseAbs();
  for (const AdmissibleSet& set : {AdmissibleSet::box(-0.3, 0.4), AdmissibleSet::box(lo, hi)}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vec a = rng.vec(11), b = rng.vec(11);
      const Vec pa = set.project(a);
      CHECK(set.contains(pa));
      CHECK(set.project(pa) == pa);
      CHECK(time_norm(t, pa - set.project(b)) <= time_norm(t, a - b) * (1 + 1e-15));
    }
  }
  CHECK_THROWS_AS(AdmissibleSet::box(1.0, 0.0), Error);
}

TEST_CASE("edge cost") {
  Rng rng(2);
  EdgeControlProblem pb = edge_problem(rng, 0.5, 2.0, AdmissibleSet::unconstrained());
  const Vec v = rng.vec(pb.time.points());
  const Trajectory y = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, v);

  SUBCASE("perfect tracking") {
    pb.target = y.values;
    CHECK(cost_edge(pb, y, Vec::Zero(pb.time.points())) == 0.0);
    CHECK(cost_edge(pb, y, Vec::Ones(pb.time.points())) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("double loop quadrature") {
    const Grid1D& g = pb.op.grid;
    const double dt = pb.time.dt(), h = g.h();
    double track = 0.0, reg = 0.0;
    for (int k = 0; k < pb.time.points(); ++k) {
      const double wt = (k == 0 || k == pb.time.steps()) ? dt / 2 : dt;
      reg += wt * v[k] * v[k];
      for (int j = 0; j < g.nodes(); ++j) {
        const double wx = (j == 0 || j == g.cells()) ? h / 2 : h;
        const double d = y.values(k, j) - pb.target(k, j);
        track += wt * wx * d * d;
      }
    }
    const double expect = 0.5 * track + 0.5 * pb.tikhonov * reg;
    CHECK(std::abs(cost_edge(pb, y, v) - expect) <= 1e-13 * std::max(1.0, expect));
  }
}

TEST_CASE("gradients with a vanishing adjoint") {
  Rng rng(3);
  EdgeControlProblem pb = edge_problem(rng, 0.6, 0.7, AdmissibleSet::unconstrained());
  const Vec u = rng.vec(pb.time.points());
  const Trajectory y = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, u);
  const Trajectory p = solve_adjoint_edge(pb.op, pb.time, y, y.values);
  CHECK(gradient_edge(pb, u, p) == 0.7 * u);

  GraphControlProblem gp = graph_problem(rng, 0.6, 4, 2, AdmissibleSet::unconstrained());
  const Mat w = rng.mat(13, 3);
  gp.graph.target = solve_forward_graph(gp.graph, w).values;
  const GraphSystem sys(gp.graph);
  const Mat g = gradient_graph(gp, w, solve_adjoint_graph(sys, solve_forward_graph(sys, w)));
  CHECK(max_abs(g - w * gp.weights.asDiagonal()) == 0.0);
}

TEST_CASE("finite-difference gradient checks") {
  Rng rng(4);
  for (double alpha : {0.3, 0.75, 1.0}) {
    const EdgeControlProblem pb = edge_problem(rng, alpha, 0.3, AdmissibleSet::unconstrained());
    const Vec u = rng.vec(pb.time.points());
    const Vec g = edge_gradient(pb, u);
    for (int trial = 0; trial < 3; ++trial) {
      const Vec d = smooth(pb.time, rng.uniform(1.0, 6.0), rng.uniform(0.0, 3.0));
      const double fd = finite_difference_gradient([&](const Mat& w) { return edge_cost(pb, w); }, u, d, 1e-5);
      CHECK(std::abs(fd - time_inner(pb.time, g, d)) <= 1e-4 * std::abs(fd));
    }

    const GraphControlProblem gp = graph_problem(rng, alpha, 4, 3, AdmissibleSet::unconstrained());
    const GraphSystem sys(gp.graph);
    const Mat w = rng.mat(13, 3);
    const Mat gg = gradient_graph(gp, w, solve_adjoint_graph(sys, solve_forward_graph(sys, w)));
    auto cost = [&](const Mat& x) { return cost_graph(gp, solve_forward_graph(sys, x), x); };
    for (int channel = 0; channel < 3; ++channel) {
      Mat d = Mat::Zero(13, 3);
      d.col(channel) = smooth(gp.graph.time, rng.uniform(1.0, 6.0), rng.uniform(0.0, 3.0));
      const double fd = finite_difference_gradient(cost, w, d, 1e-5);
      CHECK(std::abs(fd - time_inner(gp.graph.time, gg, d)) <= 1e-4 * std::abs(fd));
    }
  }
}

TEST_CASE("sign audit on Dirichlet and Neumann channels") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    Rng rng(50 + seed);
    const GraphControlProblem gp = graph_problem(rng, rng.uniform(0.2, 1.0), 3, 2, AdmissibleSet::unconstrained());
    const GraphSystem sys(gp.graph);
    const Mat w = rng.mat(13, 2);
    const Mat g = gradient_graph(gp, w, solve_adjoint_graph(sys, solve_forward_graph(sys, w)));
    const double base = cost_graph(gp, solve_forward_graph(sys, w), w);
    for (int channel = 0; channel < 2; ++channel) {
      Mat d = Mat::Zero(13, 2);
      d.col(channel) = rng.vec(13);
      const double predicted = time_inner(gp.graph.time, g, d);
      const Mat moved = w + 1e-4 * d;
      const double change = cost_graph(gp, solve_forward_graph(sys, moved), moved) - base;
      CHECK((change > 0) == (predicted > 0));
    }
  }
}

TEST_CASE("unconstrained edge optimum") {
  Rng rng(5);
  const EdgeControlProblem pb = edge_problem(rng, 0.5, 0.5, AdmissibleSet::unconstrained());
  const OptimResult r = optimize(pb, OptimOptions{});
  REQUIRE(r.converged);
  const Vec u = r.controls.col(0);
  const Vec g = edge_gradient(pb, u);
  CHECK(time_norm(pb.time, g) / std::max(1.0, time_norm(pb.time, u)) <= 1e-6);
  for (size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
}

TEST_CASE("target reached by zero control gives zero") {
  Rng rng(6);
  EdgeControlProblem pb = edge_problem(rng, 0.7, 1.0, AdmissibleSet::box(-1.0, 1.0));
  pb.target = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, Vec::Zero(pb.time.points())).values;
  const OptimResult r = optimize(pb, OptimOptions{});
  CHECK(r.converged);
  CHECK(max_abs(r.controls) <= 1e-8);
}

TEST_CASE("small Tikhonov weight recovers the generating control") {
  Rng rng(7);
  EdgeControlProblem pb = edge_problem(rng, 0.6, 1e-4, AdmissibleSet::box(-2.0, 2.0), 16, 20);
  const Vec star = smooth(pb.time, 2.0, 0.3);
  pb.target = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, star).values;
  OptimOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 5000;
  const OptimResult r = optimize(pb, opt);
  const double rel = time_norm(pb.time, r.controls.col(0) - star) / time_norm(pb.time, star);
  INFO("relative error " << rel << ", iterations " << r.iterations);
  CHECK(rel <= 0.05);
}

TEST_CASE("variational inequality at a box-constrained optimum") {
  Rng rng(8);
  const AdmissibleSet box = AdmissibleSet::box(-0.2, 0.2);
  GraphControlProblem gp = graph_problem(rng, 0.5, 3, 2, box);
  gp.weights = Vec::Constant(2, 0.05);
  OptimOptions opt;
  opt.tol = 1e-10;
  opt.max_iter = 3000;
  const OptimResult r = optimize(gp, opt);
  REQUIRE(r.converged);
  const GraphSystem sys(gp.graph);
  const Mat g = gradient_graph(gp, r.controls, solve_adjoint_graph(sys, solve_forward_graph(sys, r.controls)));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Mat v(13, 2);
    for (int c = 0; c < 2; ++c) v.col(c) = box.project(rng.vec(13));
    worst = std::min(worst, time_inner(gp.graph.time, g, v - r.controls));
  }
  CHECK(worst >= -1e-8);
}

TEST_CASE("optimum does not depend on the starting control") {
  Rng rng(9);
  const EdgeControlProblem pb = edge_problem(rng, 0.4, 0.2, AdmissibleSet::box(-0.5, 0.5));
  OptimOptions opt;
  opt.tol = 1e-9;
  opt.max_iter = 2000;
  const OptimResult a = optimize(pb, opt);
  opt.initial = rng.vec(pb.time.points());
  const OptimResult b = optimize(pb, opt);
  REQUIRE(a.converged);
  REQUIRE(b.converged);
  CHECK(time_norm(pb.time, a.controls - b.controls) <= 10 * opt.tol);
}

TEST_CASE("fixed-point iteration agrees with projected gradient") {
  Rng rng(10);
  for (double tikhonov : {0.5, 2.0}) {
    const EdgeControlProblem pb = edge_problem(rng, 0.6, tikhonov, AdmissibleSet::box(-0.3, 0.3));
    OptimOptions opt;
    opt.tol = 1e-10;
    opt.max_iter = 2000;
    const OptimResult pg = optimize(pb, opt);
    opt.algorithm = Algorithm::FixedPoint;
    const OptimResult fp = optimize(pb, opt);
    REQUIRE(fp.converged);
    CHECK(time_norm(pb.time, pg.controls - fp.controls) <= 1e-7);
  }
}

TEST_CASE("larger Tikhonov weights give smaller controls") {
  Rng rng(11);
  const EdgeControlProblem base = edge_problem(rng, 0.5, 1.0, AdmissibleSet::unconstrained());
  double prev = INFINITY;
  for (double n : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}) {
    EdgeControlProblem pb = base;
    pb.tikhonov = n;
    OptimOptions opt;
    opt.tol = 1e-9;
    opt.max_iter = 5000;
    const double size = time_norm(pb.time, optimize(pb, opt).controls);
    CHECK(size <= prev * (1 + 1e-6));
    prev = size;
  }
}

TEST_CASE("iteration cap is reported, not thrown") {
  Rng rng(12);
  const EdgeControlProblem pb = edge_problem(rng, 0.5, 1e-3, AdmissibleSet::unconstrained());
  OptimOptions opt;
  opt.max_iter = 2;
  opt.tol = 1e-14;
  const OptimResult r = optimize(pb, opt);
  CHECK_FALSE(r.converged);
  CHECK(r.termination == "max_iter");
  CHECK(r.iterations == 2);
}

TEST_CASE("invalid problems are rejected") {
  Rng rng(13);
  EdgeControlProblem pb = edge_problem(rng, 0.5, 0.0, AdmissibleSet::unconstrained());
  CHECK_THROWS_AS(optimize(pb, OptimOptions{}), Error);
  GraphControlProblem gp = graph_problem(rng, 0.5, 3, 2, AdmissibleSet::unconstrained());
  gp.weights[0] = -1.0;
  CHECK_THROWS_AS(optimize(gp, OptimOptions{}), Error);
}
