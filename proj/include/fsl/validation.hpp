#pragma once

// Reference computations for the test suites. The dense and classical
// oracles share no stepping code with the production solvers.

#include <functional>
#include <vector>

#include "fsl/graph_solver.hpp"

namespace fsl {

constexpr int kOracleMaxDofs = 200;
constexpr int kOracleMaxSteps = 64;

/// All time levels of the single-edge problem (Neumann tip) as one block
/// lower-bidiagonal system, solved by dense LU. Returns nodal values
/// (Nt+1) x nodes. Throws ErrorKind::SizeGuard above the size limits.
Mat dense_oracle_edge(const EdgeOperator& op, const TimeGrid& time, const Mat& f, const Vec& y0,
                      const Vec& v);

/// Same for the star graph: per-edge nodal values.
std::vector<Mat> dense_oracle_graph(const StarGraphProblem& problem, const Mat& controls);

/// Crank-Nicolson finite differences for y_t - (beta y')' + q y = f on one
/// edge with y(a) = 0 and beta y'(b) = v; tridiagonal solves. Only alpha = 1.
Mat classical_limit_solve(double alpha, const Grid1D& grid, const EdgeCoefficients& coeffs,
                          const TimeGrid& time, const Mat& f, const Vec& y0, const Vec& v);

/// Relative L^2(Q) distance of two nodal space-time fields (trapezoid in x and t).
double relative_l2q(const Grid1D& grid, const TimeGrid& time, const Mat& value, const Mat& reference);

/// Central difference (J(u + h d) - J(u - h d)) / 2h, h in [1e-7, 1e-3].
double finite_difference_gradient(const std::function<double(const Mat&)>& cost, const Mat& u,
                                  const Mat& direction, double h);

/// Residuals of the discrete integration-by-parts identities for nodal test
/// samples phi, nodal samples y and cell samples g, beta_cells:
///   <phi, C_R g>_W + [g I^{1-alpha} phi]_a^b - h <g, D_L phi>
/// written in both orientations, and the composite one with g = beta D_L y.
/// Each residual is divided by max(1, largest of the three terms).
struct IbpResiduals {
  double left = 0.0;
  double right = 0.0;
  double composite = 0.0;
  double largest_term = 0.0;
};
IbpResiduals ibp_residuals(double alpha, const Grid1D& grid, const Vec& phi, const Vec& g,
                           const Vec& y, const Vec& beta_cells);

/// Discrete L^1 cell error of D_L (x-a)^alpha against Gamma(alpha+1).
double power_rule_error(double alpha, int cells);

/// Sum over edges of the squared L^2(0,T) norm of the adjoint tip flux,
/// divided by the squared L^2(Q) norm of the misfit y - y_d that drives it.
double boundary_flux_ratio(const GraphSystem& system, const std::vector<Mat>& misfit);

/// Supremum of boundary_flux_ratio over all misfits: the squared norm of the
/// linear map misfit -> tip fluxes, built column by column.
double boundary_flux_constant(const GraphSystem& system);

}  // namespace fsl
