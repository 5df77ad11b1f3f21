#pragma once

// Discrete Riemann-Liouville integrals and derivatives on a uniform grid.
//
// Two quadratures live here:
//  * the piecewise-constant product rule (ConvWeights) for I^alpha itself,
//    exact on cell-wise constant data;
//  * the piecewise-linear product rule for the order-(1-alpha) trace integral
//    inside the RL derivative. At alpha = 1 it is the identity and the
//    derivative is the plain backward difference.
//
// The right Caputo composition is the transpose of the left RL derivative
// plus boundary rows.

#include <Eigen/Dense>

#include "fsl/error.hpp"

namespace fsl {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;

class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(double a, double b, int cells);

  double a() const { return a_; }
  double b() const { return b_; }
  int cells() const { return cells_; }
  int nodes() const { return cells_ + 1; }
  double h() const { return (b_ - a_) / cells_; }
  double length() const { return b_ - a_; }
  double node(int j) const;
  Vec node_vector() const;

  // Trapezoidal nodal weights: h inside, h/2 at both endpoints.
  Vec trapezoid_weights() const;

 private:
  double a_ = 0.0;
  double b_ = 1.0;
  int cells_ = 2;
};

/// Checks 0 < alpha <= 1.
void check_order(double alpha);

/// Weights of the piecewise-constant product rule for I^alpha.
///
/// w_k = h^alpha / Gamma(alpha+1) * ((k+1)^alpha - k^alpha), k = 0..M, so that
/// sum_{k<K} w_k = (K h)^alpha / Gamma(alpha+1) exactly.
struct ConvWeights {
  double alpha = 1.0;
  double h = 1.0;
  Vec w;
};

ConvWeights frac_integral_weights(double alpha, double h, int cells);

/// out_j = sum_{k<j} w_k * samples_{j-1-k}: the exact integral of the cell-wise
/// constant function that takes the left-node value on each cell. out_0 = 0.
Vec apply_left_integral(const ConvWeights& weights, const Vec& samples);

/// Mirror of apply_left_integral under x -> a+b-x (right-node value per cell).
/// out_M = 0.
Vec apply_right_integral(const ConvWeights& weights, const Vec& samples);

enum class Side { Left, Right };

/// Dense triangular matrix form of the two integrals above.
struct TriangularConvOp {
  Side orientation = Side::Left;
  Mat matrix;

  Vec apply(const Vec& samples) const;
};

TriangularConvOp left_integral_operator(const ConvWeights& weights, int cells);
TriangularConvOp right_integral_operator(const ConvWeights& weights, int cells);

enum class Endpoint { A, B };

/// Row of the trace integral: trace.regular . y + trace.singular * c equals
/// (I^{1-alpha} y)(endpoint) for y = regular nodal part + c * singular mode.
struct TraceRow {
  RowVec regular;
  double singular = 1.0;
};

/// Left RL derivative D_L = (1/h) * backward difference of the trace integral
/// T = I^{1-alpha} (piecewise-linear product rule, identity when alpha = 1).
class LeftRlDerivative {
 public:
  LeftRlDerivative(double alpha, const Grid1D& grid);

  double alpha() const { return alpha_; }
  const Grid1D& grid() const { return grid_; }

  /// (M+1) x (M+1) lower-triangular trace integral.
  const Mat& trace_integral() const { return trace_integral_; }
  /// M x (M+1) cell-wise derivative operator.
  const Mat& matrix() const { return matrix_; }

  Vec apply(const Vec& samples) const { return matrix_ * samples; }
  TraceRow trace(Endpoint endpoint) const;

 private:
  double alpha_;
  Grid1D grid_;
  Mat trace_integral_;
  Mat matrix_;
};

inline LeftRlDerivative left_rl_derivative(double alpha, const Grid1D& grid) {
  return LeftRlDerivative(alpha, grid);
}

/// Discrete right Caputo derivative of cell-wise flux samples g, defined by
/// transposition against the trapezoid inner product:
///   <phi, C_R g>_W = -[g (I^{1-alpha} phi)]_a^b + h sum_c g_c (D_L phi)_c
/// with g(a) = g_0 and g(b) = g_{M-1}.
Vec right_caputo_apply(const LeftRlDerivative& derivative, const Vec& flux_cells);

/// Trace functional (I^{1-alpha} y)(endpoint) on nodal samples.
TraceRow trace_functional(double alpha, const Grid1D& grid, Endpoint endpoint);

/// The junction mode sigma(x) = (x-a)^{alpha-1} / Gamma(alpha). Its nodal
/// samples regularize node 0 by the first-cell average h^{alpha-1}/Gamma(alpha+1).
/// The trace integral of the mode is evaluated analytically.
struct SingularMode {
  double alpha = 1.0;
  Grid1D grid;
  Vec samples;
  double trace_normalization = 1.0;

  /// (I^{1-alpha} sigma)(x_j) for every node, from the Beta-function identity.
  Vec trace_integral() const;
};

SingularMode singular_mode(double alpha, const Grid1D& grid);

}  // namespace fsl
