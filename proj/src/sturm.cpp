#include "fsl/sturm.hpp"

#include <cmath>
#include <sstream>

namespace fsl {

EdgeCoefficients EdgeCoefficients::from_samples(Vec beta, Vec q) {
  EdgeCoefficients c;
  c.beta0 = beta.size() ? beta.minCoeff() : 0.0;
  c.q0 = q.size() ? q.minCoeff() : 0.0;
  c.beta = std::move(beta);
  c.q = std::move(q);
  return c;
}

EdgeCoefficients EdgeCoefficients::constant(const Grid1D& grid, double beta, double q) {
  return from_samples(Vec::Constant(grid.nodes(), beta), Vec::Constant(grid.nodes(), q));
}

void EdgeCoefficients::validate(const Grid1D& grid) const {
  require(beta.size() == grid.nodes() && q.size() == grid.nodes(), ErrorKind::Shape,
          "coefficient samples must have one value per node");
  std::ostringstream msg;
  if (!(beta0 > 0.0) || !beta.allFinite() || beta.minCoeff() < beta0) {
    msg << "beta must satisfy beta(x) >= beta0 > 0 (beta0 = " << beta0
        << ", min beta = " << beta.minCoeff() << ")";
    throw Error(ErrorKind::Coefficient, msg.str());
  }
  if (!(q0 > 0.0) || !q.allFinite() || q.minCoeff() < q0) {
    msg << "q must satisfy q(x) >= q0 > 0 (q0 = " << q0 << ", min q = " << q.minCoeff() << ")";
    throw Error(ErrorKind::Coefficient, msg.str());
  }
}

EdgeOperator assemble_stiffness(double alpha, const Grid1D& grid,
                                const EdgeCoefficients& coeffs, bool include_singular_dof) {
  check_order(alpha);
  coeffs.validate(grid);

  const int m = grid.cells();
  const int nodes = grid.nodes();
  const int size = nodes + (include_singular_dof ? 1 : 0);
  const double h = grid.h();
  const LeftRlDerivative d(alpha, grid);

  EdgeOperator op;
  op.alpha = alpha;
  op.grid = grid;
  op.has_singular = include_singular_dof;
  op.nodal_weights = grid.trapezoid_weights();
  op.beta_cell = 0.5 * (coeffs.beta.head(m) + coeffs.beta.tail(m));

  op.eval = Mat::Zero(nodes, size);
  op.eval.leftCols(nodes).setIdentity();
  op.rl = Mat::Zero(m, size);
  op.rl.leftCols(nodes) = d.matrix();
  op.trace_a = RowVec::Zero(size);
  op.trace_b = RowVec::Zero(size);
  op.trace_a.head(nodes) = d.trace(Endpoint::A).regular;
  op.trace_b.head(nodes) = d.trace(Endpoint::B).regular;
  if (include_singular_dof) {
    op.eval.col(nodes) = singular_mode(alpha, grid).samples;
    op.trace_a[nodes] = 1.0;
    op.trace_b[nodes] = 1.0;
  }

  op.mass = op.eval.transpose() * op.nodal_weights.asDiagonal() * op.eval;
  const Vec cell_weight = h * op.beta_cell;
  const Vec mass_q = op.nodal_weights.cwiseProduct(coeffs.q);
  op.stiffness = op.rl.transpose() * cell_weight.asDiagonal() * op.rl +
                 op.eval.transpose() * mass_q.asDiagonal() * op.eval;
  op.stiffness = (0.5 * (op.stiffness + op.stiffness.transpose())).eval();
  op.mass = (0.5 * (op.mass + op.mass.transpose())).eval();

  // Flux recovery test vector, supported on active regular DOFs only.
  RowVec rb = op.trace_b;
  for (int k : op.clamped_dofs()) rb[k] = 0.0;
  if (include_singular_dof) rb[nodes] = 0.0;
  op.flux_b_test = rb / rb.squaredNorm();
  if (include_singular_dof) {
    op.flux_a_test = op.flux_b_test;
    op.flux_a_test[nodes] = -1.0;
  }
  return op;
}

std::vector<int> EdgeOperator::clamped_dofs() const {
  std::vector<int> out;
  for (int j = 0; j < nodes(); ++j)
    if (trace_a[j] != 0.0) out.push_back(j);
  return out;
}

std::vector<int> EdgeOperator::active_dofs() const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (j >= nodes() || trace_a[j] == 0.0) out.push_back(j);
  return out;
}

Vec EdgeOperator::neumann_load(double v) const { return v * trace_b.transpose(); }

Vec EdgeOperator::source_load(const Vec& f_nodal) const {
  require(f_nodal.size() == nodes(), ErrorKind::Shape, "source must have one value per node");
  return eval.transpose() * nodal_weights.cwiseProduct(f_nodal);
}

Vec EdgeOperator::dofs_from_values(const Vec& values) const {
  require(values.size() == nodes(), ErrorKind::Shape, "expected one value per node");
  Vec z = Vec::Zero(size());
  z.head(nodes()) = values;
  if (has_singular && !clamped_dofs().empty()) {
    // alpha = 1: the mode is the constant 1 and carries the value at a.
    const double ya = values[0];
    z.head(nodes()).array() -= ya;
    z[nodes()] = ya;
  }
  return z;
}

}  // namespace fsl
