#include "fsl/validation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fsl {

namespace {

void guard(int per_step, int steps) {
  if (per_step > kOracleMaxDofs || steps > kOracleMaxSteps) {
    throw Error(ErrorKind::SizeGuard, "dense oracle limited to " + std::to_string(kOracleMaxDofs) +
                                          " unknowns per step and " +
                                          std::to_string(kOracleMaxSteps) + " steps, got " +
                                          std::to_string(per_step) + " and " +
                                          std::to_string(steps));
  }
}

bool is_clamped(const EdgeOperator& op, int j) { return j < op.nodes() && op.trace_a[j] != 0.0; }

RowVec data_row(const Mat& m, int k, int nodes) {
  if (m.size() == 0) return RowVec::Zero(nodes);
  return m.row(k);
}

}  // namespace

Mat dense_oracle_edge(const EdgeOperator& op, const TimeGrid& time, const Mat& f, const Vec& y0,
                      const Vec& v) {
  const int n = op.size();
  const int nt = time.steps();
  guard(n, nt);
  require(v.size() == time.points() && y0.size() == op.nodes(), ErrorKind::Shape,
          "oracle data shapes do not match");
  const double dt = time.dt();
  const Mat step = op.mass / dt + op.stiffness;
  const Mat prev = op.mass / dt;
  const Vec start = op.eval.transpose() * op.nodal_weights.cwiseProduct(y0) / dt;

  Mat a = Mat::Zero(n * nt, n * nt);
  Vec rhs = Vec::Zero(n * nt);
  for (int k = 1; k <= nt; ++k) {
    const int r = (k - 1) * n;
    const double vbar = 0.5 * (v[k - 1] + v[k]);
    const Vec src = op.eval.transpose() *
                    op.nodal_weights.cwiseProduct(data_row(f, k, op.nodes()).transpose());
    for (int i = 0; i < n; ++i) {
      if (is_clamped(op, i)) {
        a(r + i, r + i) = 1.0;
        continue;
      }
      a.block(r + i, r, 1, n) = step.row(i);
      if (k >= 2) a.block(r + i, r - n, 1, n) = -prev.row(i);
      rhs[r + i] = src[i] + vbar * op.trace_b[i] + (k == 1 ? start[i] : 0.0);
    }
  }
  const Vec x = a.partialPivLu().solve(rhs);

  Mat values(time.points(), op.nodes());
  values.row(0) = y0.transpose();
  for (int k = 1; k <= nt; ++k) values.row(k) = (op.eval * x.segment((k - 1) * n, n)).transpose();
  return values;
}

std::vector<Mat> dense_oracle_graph(const StarGraphProblem& pb, const Mat& controls) {
  pb.validate();
  const int ne = pb.edges();
  const int nt = pb.time.steps();
  const int m = pb.m_split;
  const double dt = pb.time.dt();
  require(controls.rows() == pb.time.points() && controls.cols() == pb.channels(), ErrorKind::Shape,
          "controls must be (Nt+1) x (n-1)");

  std::vector<EdgeOperator> ops;
  std::vector<int> offset;
  int size = 0;
  for (int e = 0; e < ne; ++e) {
    ops.push_back(assemble_stiffness(pb.alpha, pb.grids[e], pb.coeffs[e], true));
    offset.push_back(size);
    size += ops.back().nodes();
  }
  const int junction = size;
  const int lam0 = size + 1;
  const int p = size + 1 + m;
  guard(p, nt);
  auto index = [&](int e, int j) { return j == ops[e].nodes() ? junction : offset[e] + j; };

  Mat a = Mat::Zero(p * nt, p * nt);
  Vec rhs = Vec::Zero(p * nt);
  for (int k = 1; k <= nt; ++k) {
    const int r = (k - 1) * p;
    for (int e = 0; e < ne; ++e) {
      const EdgeOperator& op = ops[e];
      const Mat step = op.mass / dt + op.stiffness;
      const Mat prev = op.mass / dt;
      RowVec f = RowVec::Zero(op.nodes());
      if (!pb.source.empty() && pb.source[e].size()) f = pb.source[e].row(k);
      Vec load = op.eval.transpose() * op.nodal_weights.cwiseProduct(f.transpose());
      if (k == 1) load += op.eval.transpose() * op.nodal_weights.cwiseProduct(pb.y0[e]) / dt;
      if (e >= m) load += 0.5 * (controls(k - 1, e - 1) + controls(k, e - 1)) * op.trace_b.transpose();
      for (int i = 0; i < op.size(); ++i) {
        const int row = r + index(e, i);
        if (is_clamped(op, i)) {
          a(row, row) = 1.0;
          continue;
        }
        for (int j = 0; j < op.size(); ++j) {
          a(row, r + index(e, j)) += step(i, j);
          if (k >= 2) a(row, r - p + index(e, j)) -= prev(i, j);
        }
        if (e < m) a(row, r + lam0 + e) -= op.trace_b[i];
        rhs[row] += load[i];
      }
      if (e < m) {
        for (int j = 0; j < op.size(); ++j) a(r + lam0 + e, r + index(e, j)) -= op.trace_b[j];
        rhs[r + lam0 + e] = e == 0 ? 0.0 : -controls(k, e - 1);
      }
    }
  }
  const Vec x = a.partialPivLu().solve(rhs);

  std::vector<Mat> values;
  for (int e = 0; e < ne; ++e) {
    const EdgeOperator& op = ops[e];
    Mat y(pb.time.points(), op.nodes());
    y.row(0) = pb.y0[e].transpose();
    for (int k = 1; k <= nt; ++k) {
      Vec z(op.size());
      for (int j = 0; j < op.size(); ++j) z[j] = x[(k - 1) * p + index(e, j)];
      y.row(k) = (op.eval * z).transpose();
    }
    values.push_back(std::move(y));
  }
  return values;
}

namespace {

// Thomas algorithm; sub[0] and sup[n-1] are ignored.
Vec tridiagonal_solve(Vec sub, Vec diag, Vec sup, Vec rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  Vec x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
  return x;
}

}  // namespace

Mat classical_limit_solve(double alpha, const Grid1D& grid, const EdgeCoefficients& coeffs,
                          const TimeGrid& time, const Mat& f, const Vec& y0, const Vec& v) {
  require(alpha == 1.0, ErrorKind::Domain, "classical limit solver needs alpha = 1");
  coeffs.validate(grid);
  const int m = grid.cells();
  const int nt = time.steps();
  const double h = grid.h();
  const double dt = time.dt();
  require(y0.size() == grid.nodes() && v.size() == time.points(), ErrorKind::Shape,
          "classical solver data shapes do not match");

  // Unknowns y_1..y_M; y_0 = 0.
  Vec sub = Vec::Zero(m), diag(m), sup = Vec::Zero(m);
  for (int j = 1; j <= m; ++j) {
    const double left = 0.5 * (coeffs.beta[j - 1] + coeffs.beta[j]) / (h * h);
    const int i = j - 1;
    if (j < m) {
      const double right = 0.5 * (coeffs.beta[j] + coeffs.beta[j + 1]) / (h * h);
      diag[i] = left + right + coeffs.q[j];
      sub[i] = -left;
      sup[i] = -right;
    } else {
      diag[i] = 2.0 * left + coeffs.q[j];
      sub[i] = -2.0 * left;
    }
  }
  auto apply = [&](const Vec& y) {
    Vec out = diag.cwiseProduct(y);
    for (int i = 0; i < m; ++i) {
      if (i > 0) out[i] += sub[i] * y[i - 1];
      if (i + 1 < m) out[i] += sup[i] * y[i + 1];
    }
    return out;
  };
  auto forcing = [&](int k) {
    Vec g = data_row(f, k, grid.nodes()).transpose().tail(m);
    g[m - 1] += 2.0 * v[k] / h;
    return g;
  };

  Mat out = Mat::Zero(time.points(), grid.nodes());
  out.row(0) = y0.transpose();
  out(0, 0) = 0.0;
  Vec y = y0.tail(m);
  const Vec lhs_diag = Vec::Ones(m) + 0.5 * dt * diag;
  for (int k = 0; k < nt; ++k) {
    const Vec rhs = y - 0.5 * dt * apply(y) + 0.5 * dt * (forcing(k) + forcing(k + 1));
    y = tridiagonal_solve(0.5 * dt * sub, lhs_diag, 0.5 * dt * sup, rhs);
    out.row(k + 1).tail(m) = y.transpose();
  }
  return out;
}

double relative_l2q(const Grid1D& grid, const TimeGrid& time, const Mat& value, const Mat& reference) {
  require(value.rows() == reference.rows() && value.cols() == reference.cols() &&
              value.rows() == time.points() && value.cols() == grid.nodes(),
          ErrorKind::Shape, "space-time fields have different shapes");
  const Mat w = time.trapezoid_weights() * grid.trapezoid_weights().transpose();
  const double num = w.cwiseProduct((value - reference).cwiseAbs2()).sum();
  const double den = w.cwiseProduct(reference.cwiseAbs2()).sum();
  return std::sqrt(num / den);
}

double finite_difference_gradient(const std::function<double(const Mat&)>& cost, const Mat& u,
                                  const Mat& direction, double h) {
  require(h >= 1e-7 && h <= 1e-3, ErrorKind::Domain, "difference step must lie in [1e-7, 1e-3]");
  require(u.rows() == direction.rows() && u.cols() == direction.cols(), ErrorKind::Shape,
          "direction does not match the control shape");
  return (cost(u + h * direction) - cost(u - h * direction)) / (2.0 * h);
}

IbpResiduals ibp_residuals(double alpha, const Grid1D& grid, const Vec& phi, const Vec& g,
                           const Vec& y, const Vec& beta_cells) {
  const LeftRlDerivative d(alpha, grid);
  const int m = grid.cells();
  const double h = grid.h();
  require(phi.size() == grid.nodes() && y.size() == grid.nodes() && g.size() == m &&
              beta_cells.size() == m,
          ErrorKind::Shape, "identity inputs have the wrong sizes");
  const Vec w = grid.trapezoid_weights();
  const Vec dphi = d.apply(phi);
  const double trace_a = d.trace(Endpoint::A).regular.dot(phi);
  const double trace_b = d.trace(Endpoint::B).regular.dot(phi);

  IbpResiduals r;
  auto residual = [&](const Vec& cells) {
    const double lhs = phi.dot(w.cwiseProduct(right_caputo_apply(d, cells)));
    const double bracket = cells[m - 1] * trace_b - cells[0] * trace_a;
    const double rhs = h * cells.dot(dphi);
    const double scale = std::max({1.0, std::abs(lhs), std::abs(bracket), std::abs(rhs)});
    r.largest_term = std::max(r.largest_term, scale);
    return std::abs(lhs + bracket - rhs) / scale;
  };

  r.left = residual(g);
  // y read as a function through its cell averages.
  r.right = residual(0.5 * (y.head(m) + y.tail(m)));
  r.composite = residual(beta_cells.cwiseProduct(d.apply(y)));
  return r;
}

double power_rule_error(double alpha, int cells) {
  const Grid1D grid(0.0, 1.0, cells);
  Vec y(grid.nodes());
  for (int j = 0; j < grid.nodes(); ++j) y[j] = std::pow(grid.node(j), alpha);
  const Vec d = LeftRlDerivative(alpha, grid).apply(y);
  return grid.h() * (d.array() - std::tgamma(alpha + 1.0)).abs().sum();
}

namespace {

GraphSystem misfit_system(const GraphSystem& system) {
  StarGraphProblem pb = system.problem();
  pb.target.clear();
  return GraphSystem(pb);
}

double flux_energy(const GraphTrajectory& p) {
  const double dt = p.time.dt();
  return dt * p.tip_flux.bottomRows(p.time.steps()).cwiseAbs2().sum();
}

}  // namespace

double boundary_flux_ratio(const GraphSystem& system, const std::vector<Mat>& misfit) {
  const GraphSystem sys = misfit_system(system);
  const StarGraphProblem& pb = sys.problem();
  require(static_cast<int>(misfit.size()) == pb.edges(), ErrorKind::Shape,
          "need one misfit field per edge");
  GraphTrajectory y;
  y.values = misfit;
  const GraphTrajectory p = solve_adjoint_graph(sys, y);
  const Vec tau = pb.time.trapezoid_weights();
  double den = 0.0;
  for (int e = 0; e < pb.edges(); ++e) {
    den += (tau.asDiagonal() * misfit[e].cwiseAbs2() * sys.ops()[e].nodal_weights).sum();
  }
  return flux_energy(p) / den;
}

double boundary_flux_constant(const GraphSystem& system) {
  const GraphSystem sys = misfit_system(system);
  const StarGraphProblem& pb = sys.problem();
  const int ne = pb.edges();
  const int nt = pb.time.steps();
  const Vec tau = pb.time.trapezoid_weights();
  const double dt = pb.time.dt();

  int cols = 0;
  for (int e = 0; e < ne; ++e) cols += pb.grids[e].nodes() * pb.time.points();
  Mat map = Mat::Zero(ne * nt, cols);
  std::vector<Mat> unit(ne);
  for (int e = 0; e < ne; ++e) unit[e] = Mat::Zero(pb.time.points(), pb.grids[e].nodes());
  int c = 0;
  for (int e = 0; e < ne; ++e) {
    const Vec& w = sys.ops()[e].nodal_weights;
    for (int k = 0; k <= nt; ++k) {
      for (int j = 0; j < pb.grids[e].nodes(); ++j, ++c) {
        // Unit misfit in the weighted norm.
        unit[e](k, j) = 1.0 / std::sqrt(tau[k] * w[j]);
        GraphTrajectory y;
        y.values = unit;
        const GraphTrajectory p = solve_adjoint_graph(sys, y);
        const Mat flux = std::sqrt(dt) * p.tip_flux.bottomRows(nt);
        map.col(c) = Eigen::Map<const Vec>(flux.data(), flux.size());
        unit[e](k, j) = 0.0;
      }
    }
  }
  const Eigen::JacobiSVD<Mat> svd(map);
  const double s = svd.singularValues()[0];
  return s * s;
}

}  // namespace fsl
