#pragma once

#include <vector>

#include "fsl/fracops.hpp"

namespace fsl {

/// Nodal samples of beta (diffusion weight) and q (reaction) on one edge,
/// with the positive lower bounds required for coercivity.
struct EdgeCoefficients {
  Vec beta;
  Vec q;
  double beta0 = 0.0;
  double q0 = 0.0;

  /// Lower bounds default to the sampled minima.
  static EdgeCoefficients from_samples(Vec beta, Vec q);
  static EdgeCoefficients constant(const Grid1D& grid, double beta, double q);

  /// Throws ErrorKind::Coefficient unless min(beta) >= beta0 > 0 and
  /// min(q) >= q0 > 0, and ErrorKind::Shape on a size mismatch.
  void validate(const Grid1D& grid) const;
};

/// Discrete Sturm-Liouville operator of one edge.
///
/// Degrees of freedom are the M+1 nodal values of the regular part plus, when
/// requested, the coefficient c of the singular junction mode. Nodal field
/// values are eval * dofs; the trace integral is trace_integral(regular) + c.
struct EdgeOperator {
  double alpha = 1.0;
  Grid1D grid;
  bool has_singular = false;

  Vec nodal_weights;  // trapezoid weights W_n
  Vec beta_cell;      // beta averaged onto cells
  Mat eval;           // (M+1) x size, [I | sigma]
  Mat rl;             // M x size, D_L extended by a zero column
  Mat mass;           // eval^T W_n eval
  Mat stiffness;      // rl^T diag(h beta_cell) rl + eval^T diag(W_n q) eval
  RowVec trace_a;     // size
  RowVec trace_b;     // size
  RowVec flux_b_test; // regular test vector with trace_b . e_b = 1, trace_a . e_b = 0
  RowVec flux_a_test; // only with the singular DOF: trace_a = -1, trace_b = 0

  int size() const { return static_cast<int>(stiffness.rows()); }
  int nodes() const { return grid.nodes(); }

  /// Nodal DOFs on which trace_a has a nonzero weight. They are pinned to zero
  /// wherever the junction trace is carried by the singular DOF or clamped.
  std::vector<int> clamped_dofs() const;

  /// Free DOF indices: everything except clamped_dofs().
  std::vector<int> active_dofs() const;

  /// Load of a Neumann datum v at b: v * trace_b^T.
  Vec neumann_load(double v) const;

  /// Load vector of a nodal source: eval^T W_n f.
  Vec source_load(const Vec& f_nodal) const;

  /// Recovered flux (beta D^alpha y)(b^-) from the residual r = K y - loads.
  double flux_b(const Vec& residual) const { return flux_b_test.dot(residual); }

  /// Extended DOF vector whose nodal field equals the given samples.
  Vec dofs_from_values(const Vec& values) const;
};

EdgeOperator assemble_stiffness(double alpha, const Grid1D& grid,
                                const EdgeCoefficients& coeffs, bool include_singular_dof);

/// Convenience: v * trace_b^T of an assembled edge.
inline Vec neumann_load(const EdgeOperator& op, double v) { return op.neumann_load(v); }

}  // namespace fsl
