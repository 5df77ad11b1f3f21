#include "fsl/edge_solver.hpp"

#include <cmath>
#include <string>

namespace fsl {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  require(std::isfinite(horizon) && horizon > 0.0, ErrorKind::Domain, "time horizon must be positive");
  require(steps >= 1, ErrorKind::Domain, "need at least one time step");
}

Vec TimeGrid::trapezoid_weights() const {
  Vec w = Vec::Constant(points(), dt());
  w[0] *= 0.5;
  w[steps_] *= 0.5;
  return w;
}

Vec TimeGrid::step_average(const Vec& series) const {
  require(series.size() == points(), ErrorKind::Shape,
          "time series must have Nt+1 = " + std::to_string(points()) + " entries");
  Vec out = Vec::Zero(points());
  for (int k = 1; k <= steps_; ++k) out[k] = 0.5 * (series[k - 1] + series[k]);
  return out;
}

namespace {

Mat select(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Mat out(rows.size(), cols.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

Vec gather(const Vec& v, const std::vector<int>& idx) {
  Vec out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

void check_finite(const Vec& z, int step, const char* what) {
  if (!z.allFinite()) {
    throw Error(ErrorKind::Solver, std::string(what) + ": non-finite state at step " +
                                       std::to_string(step));
  }
}

Vec source_row(const EdgeOperator& op, const Mat& f, int k) {
  if (f.size() == 0) return Vec::Zero(op.size());
  return op.source_load(f.row(k).transpose());
}

void check_space_time(const Mat& m, const TimeGrid& time, int nodes, const char* name) {
  if (m.size() == 0) return;
  require(m.rows() == time.points() && m.cols() == nodes, ErrorKind::Shape,
          std::string(name) + " must be (Nt+1) x nodes");
}

}  // namespace

EdgeStepper::EdgeStepper(const EdgeOperator& op, const TimeGrid& time, TipCondition tip)
    : op_(&op), time_(time), tip_(tip), active_(op.active_dofs()) {
  const Mat s = select(matrix(), active_, active_);
  factor_.compute(s);
  if (factor_.info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "step matrix W/dt + K is not positive definite");
  }
  if (tip_ == TipCondition::Dirichlet) {
    const Vec b = gather(op.trace_b.transpose(), active_);
    border_ = factor_.solve(b);
    schur_ = b.dot(border_);
    if (!(schur_ > 0.0)) throw Error(ErrorKind::Solver, "degenerate tip constraint");
  }
}

Mat EdgeStepper::matrix() const { return op_->mass / time_.dt() + op_->stiffness; }

Vec EdgeStepper::solve(const Vec& rhs, double tip_value, double* multiplier) const {
  const Vec r = gather(rhs, active_);
  Vec za = factor_.solve(r);
  if (tip_ == TipCondition::Dirichlet) {
    // [S -B^T; -B 0][z; lam] = [r; -u]  =>  (B S^{-1} B^T) lam = u - B S^{-1} r.
    const Vec b = gather(op_->trace_b.transpose(), active_);
    const double lam = (tip_value - b.dot(za)) / schur_;
    za += lam * border_;
    if (multiplier) *multiplier = lam;
  }
  Vec z = Vec::Zero(op_->size());
  for (size_t i = 0; i < active_.size(); ++i) z[active_[i]] = za[i];
  return z;
}

Trajectory solve_forward_edge(const EdgeOperator& op, const TimeGrid& time, const Mat& f,
                              const Vec& y0, const Vec& v, TipCondition tip) {
  const int nodes = op.nodes();
  check_space_time(f, time, nodes, "source");
  require(y0.size() == nodes, ErrorKind::Shape, "initial datum must have one value per node");
  const Vec vbar = time.step_average(v);
  const double dt = time.dt();
  const int nt = time.steps();

  const EdgeStepper stepper(op, time, tip);
  Trajectory out;
  out.grid = op.grid;
  out.time = time;
  out.dofs = Mat::Zero(time.points(), op.size());
  out.trace_b = Vec::Zero(time.points());
  out.flux_b = Vec::Zero(time.points());

  Vec z = op.dofs_from_values(y0);
  out.dofs.row(0) = z.transpose();
  for (int k = 0; k < nt; ++k) {
    Vec rhs = op.mass * z / dt + source_row(op, f, k + 1);
    double flux = 0.0;
    if (tip == TipCondition::Neumann) {
      rhs += op.neumann_load(vbar[k + 1]);
      z = stepper.solve(rhs, 0.0);
    } else {
      z = stepper.solve(rhs, v[k + 1], &flux);
    }
    check_finite(z, k + 1, "forward edge solve");
    out.dofs.row(k + 1) = z.transpose();
  }

  for (int k = 0; k <= nt; ++k) {
    const Vec zk = out.dofs.row(k).transpose();
    out.trace_b[k] = op.trace_b.dot(zk);
    if (k == 0) continue;
    const Vec zprev = out.dofs.row(k - 1).transpose();
    const Vec residual = op.mass * (zk - zprev) / dt + op.stiffness * zk - source_row(op, f, k);
    out.flux_b[k] = op.flux_b(residual);
  }
  out.flux_b[0] = out.flux_b[std::min(1, nt)];
  out.values = out.dofs * op.eval.transpose();
  return out;
}

Trajectory solve_adjoint_edge(const EdgeOperator& op, const TimeGrid& time, const Trajectory& y,
                              const Mat& y_target, TipCondition tip) {
  const int nodes = op.nodes();
  require(y.values.rows() == time.points() && y.values.cols() == nodes, ErrorKind::Shape,
          "state trajectory does not match the edge/time grid");
  check_space_time(y_target, time, nodes, "target");
  const double dt = time.dt();
  const int nt = time.steps();
  const Vec tau = time.trapezoid_weights();

  const EdgeStepper stepper(op, time, tip);
  Trajectory out;
  out.grid = op.grid;
  out.time = time;
  out.dofs = Mat::Zero(time.points(), op.size());
  out.trace_b = Vec::Zero(time.points());
  out.flux_b = Vec::Zero(time.points());

  // p^{Nt+1} = 0; row k holds p^k. Row 0 is one extra sweep for display only.
  Vec p = Vec::Zero(op.size());
  Vec tip_series = Vec::Zero(nt + 2);  // s^k, k = 0..Nt+1 (s^0 = s^{Nt+1} = 0)
  for (int k = nt; k >= 0; --k) {
    Vec misfit = -y.values.row(k).transpose();
    if (y_target.size() != 0) misfit += y_target.row(k).transpose();
    const Vec rhs = op.mass * p / dt + (tau[k] / dt) * op.source_load(misfit);
    double flux = 0.0;
    p = stepper.solve(rhs, 0.0, &flux);
    check_finite(p, k, "adjoint edge solve");
    out.dofs.row(k) = p.transpose();
    out.trace_b[k] = op.trace_b.dot(p);
    out.flux_b[k] = flux;
    if (k >= 1) tip_series[k] = tip == TipCondition::Neumann ? out.trace_b[k] : flux;
  }

  // Riesz representative in the trapezoid inner product of the tip pairing.
  // Neumann data enter through step averages, Dirichlet data pointwise.
  out.gradient_series = Vec::Zero(time.points());
  for (int k = 0; k <= nt; ++k) {
    if (tip == TipCondition::Neumann) {
      out.gradient_series[k] = dt / (2.0 * tau[k]) * (tip_series[k] + tip_series[k + 1]);
    } else if (k >= 1) {
      out.gradient_series[k] = -dt / tau[k] * tip_series[k];
    }
  }
  out.values = out.dofs * op.eval.transpose();
  return out;
}

Vec energy_history(const EdgeOperator& op, const Trajectory& y) {
  Vec e(y.values.rows());
  for (Eigen::Index k = 0; k < y.values.rows(); ++k) {
    e[k] = y.values.row(k).cwiseAbs2().dot(op.nodal_weights);
  }
  return e;
}

EnergyEstimate edge_energy_estimate(const EdgeOperator& op, const EdgeCoefficients& coeffs,
                                    const TimeGrid& time, const Trajectory& y, const Mat& f,
                                    const Vec& y0, const Vec& v) {
  const double dt = time.dt();
  const int nt = time.steps();
  const double h = op.grid.h();
  const std::vector<int> act = op.active_dofs();

  // Discrete V-Gram: ||u||_W^2 + ||D_L z||_h^2.
  const Mat gram = op.mass + h * op.rl.transpose() * op.rl;
  const Eigen::LLT<Mat> gram_factor(select(gram, act, act));

  EnergyEstimate est;
  const Vec energy = energy_history(op, y);
  est.final_norm_sq = energy[nt];
  for (int k = 1; k <= nt; ++k) {
    const Vec zk = y.dofs.row(k).transpose();
    est.l2v_norm_sq += dt * (energy[k] + h * (op.rl * zk).squaredNorm());
  }

  double f_sq = 0.0;
  if (f.size() != 0) {
    for (int k = 1; k <= nt; ++k) {
      const Vec load = gather(op.source_load(f.row(k).transpose()), act);
      f_sq += dt * load.dot(gram_factor.solve(load));
    }
  }
  const double y0_sq = y0.cwiseAbs2().dot(op.nodal_weights);
  const double v_sq = v.cwiseAbs2().dot(time.trapezoid_weights());
  est.data_norm_sq = y0_sq + f_sq + v_sq;

  const double m = std::min(coeffs.beta0, coeffs.q0);
  const double len = op.grid.length();
  est.bound_final = 1.0 + 2.0 * (len + 1.0) / m;
  est.bound_l2v = 1.0 / m + 2.0 * (len + 1.0) / (m * m);
  return est;
}

}  // namespace fsl
