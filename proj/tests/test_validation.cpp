#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsl/validation.hpp"
#include "support.hpp"

using namespace fsl;
using fsl::test::Rng;
using fsl::test::max_abs;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Config;
}

}  // namespace

TEST_CASE("edge oracle agrees with the stepper") {
  Rng rng(1);
  for (double alpha : {0.3, 0.7, 1.0}) {
    const Grid1D g(0.0, 1.0, 8);
    const TimeGrid t(1.0, 4);
    const EdgeOperator op = assemble_stiffness(alpha, g, test::random_coeffs(rng, g), false);
    const Mat f = rng.mat(5, 9);
    const Vec y0 = rng.vec(9), v = rng.vec(5);
    const Mat ref = dense_oracle_edge(op, t, f, y0, v);
    CHECK(max_abs(solve_forward_edge(op, t, f, y0, v).values - ref) <= 1e-12);
    CHECK(max_abs(dense_oracle_edge(op, t, Mat(), Vec::Zero(9), Vec::Zero(5))) == 0.0);
  }
}

TEST_CASE("graph oracle agrees with the saddle-point stepper") {
  Rng rng(2);
  for (double alpha : {0.4, 1.0}) {
    const TimeGrid t(1.0, 4);
    const StarGraphProblem pb = test::random_star(rng, alpha, 3, 2, 6, t, true);
    const Mat u = rng.mat(5, 2);
    const std::vector<Mat> ref = dense_oracle_graph(pb, u);
    const GraphTrajectory y = solve_forward_graph(pb, u);
    for (int e = 0; e < 3; ++e) CHECK(max_abs(y.values[e] - ref[e]) <= 1e-11);
  }
}

TEST_CASE("oracles refuse large problems") {
  Rng rng(3);
  const Grid1D big(0.0, 1.0, kOracleMaxDofs);
  const EdgeOperator op = assemble_stiffness(0.5, big, EdgeCoefficients::constant(big, 1.0, 1.0), false);
  const TimeGrid t(1.0, 2);
  CHECK(kind_of([&] { dense_oracle_edge(op, t, Mat(), Vec::Zero(big.nodes()), Vec::Zero(3)); }) ==
        ErrorKind::SizeGuard);

  const Grid1D g(0.0, 1.0, 4);
  const EdgeOperator small = assemble_stiffness(0.5, g, EdgeCoefficients::constant(g, 1.0, 1.0), false);
  const TimeGrid long_run(1.0, kOracleMaxSteps + 1);
  CHECK(kind_of([&] {
          dense_oracle_edge(small, long_run, Mat(), Vec::Zero(5), Vec::Zero(long_run.points()));
        }) == ErrorKind::SizeGuard);

  const StarGraphProblem pb = test::random_star(rng, 0.5, 4, 2, 60, TimeGrid(1.0, 2), false);
  CHECK(kind_of([&] { dense_oracle_graph(pb, Mat::Zero(3, 3)); }) == ErrorKind::SizeGuard);
}

TEST_CASE("classical solver") {
  const Grid1D g(0.0, 1.0, 32);
  const TimeGrid t(1.0, 64);
  const EdgeCoefficients c = EdgeCoefficients::constant(g, 1.0, 1.0);
  CHECK(kind_of([&] { classical_limit_solve(0.9, g, c, t, Mat(), Vec::Zero(33), Vec::Zero(65)); }) ==
        ErrorKind::Domain);

  SUBCASE("steady state") {
    // y = sinh(x) / cosh(1) solves -y'' + y = 0, y(0) = 0, y'(1) = tanh(1).
    Vec y0(33);
    for (int j = 0; j <= 32; ++j) y0[j] = std::sinh(g.node(j)) / std::cosh(1.0);
    const Mat y = classical_limit_solve(1.0, g, c, t, Mat(), y0, Vec::Constant(65, 1.0));
    CHECK((y.row(64).transpose() - y0).cwiseAbs().maxCoeff() <= 1e-3);
  }
  SUBCASE("agrees with the fractional solver at alpha = 1") {
    Vec y0(33);
    for (int j = 0; j <= 32; ++j) y0[j] = std::sin(0.5 * M_PI * g.node(j));
    const Vec v = Vec::Zero(65);
    const Mat ref = classical_limit_solve(1.0, g, c, t, Mat(), y0, v);
    const EdgeOperator op = assemble_stiffness(1.0, g, c, false);
    CHECK(relative_l2q(g, t, solve_forward_edge(op, t, Mat(), y0, v).values, ref) <= 0.02);
  }
}

TEST_CASE("relative space-time distance") {
  Rng rng(4);
  const Grid1D g(0.0, 2.0, 10);
  const TimeGrid t(1.0, 5);
  const Mat a = rng.mat(6, 11);
  CHECK(relative_l2q(g, t, a, a) == 0.0);
  CHECK(relative_l2q(g, t, 1.5 * a, a) == doctest::Approx(0.5));
}

TEST_CASE("finite differences") {
  const auto quad = [](const Mat& u) { return 0.5 * u.squaredNorm() + u.sum(); };
  Rng rng(5);
  const Mat u = rng.mat(4, 2), d = rng.mat(4, 2);
  const double exact = (u.array() + 1.0).matrix().cwiseProduct(d).sum();
  CHECK(finite_difference_gradient(quad, u, d, 1e-4) == doctest::Approx(exact).epsilon(1e-9));
  CHECK_THROWS_AS(finite_difference_gradient(quad, u, d, 1e-2), Error);
  CHECK_THROWS_AS(finite_difference_gradient(quad, u, d, 1e-9), Error);
}

TEST_CASE("integration by parts residuals") {
  Rng rng(6);
  for (double alpha : {0.3, 0.8, 1.0}) {
    const Grid1D g(-0.5, 1.0, 32);
    const IbpResiduals r = ibp_residuals(alpha, g, rng.vec(33), rng.vec(32), rng.vec(33), rng.positive(32, 0.5, 2.0));
    CHECK(r.left <= 1e-12);
    CHECK(r.right <= 1e-12);
    CHECK(r.composite <= 1e-12);
    CHECK(r.largest_term >= 1.0);
  }
}

TEST_CASE("power rule error decreases under refinement") {
  for (double alpha : {0.3, 0.6}) {
    const double coarse = power_rule_error(alpha, 32), fine = power_rule_error(alpha, 64);
    CHECK(fine < coarse);
    CHECK(std::log2(coarse / fine) > 0.8);
  }
  CHECK(power_rule_error(1.0, 8) <= 1e-13);
}

TEST_CASE("adjoint tip fluxes are bounded by the misfit") {
  Rng rng(7);
  const TimeGrid t(1.0, 6);
  const StarGraphProblem pb = test::random_star(rng, 0.5, 3, 2, 5, t, false);
  const GraphSystem sys(pb);
  const double constant = boundary_flux_constant(sys);
  CHECK(constant > 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Mat> misfit;
    for (int e = 0; e < 3; ++e) misfit.push_back(rng.mat(t.points(), pb.grids[e].nodes()));
    CHECK(boundary_flux_ratio(sys, misfit) <= constant * (1 + 1e-10));
  }
}
