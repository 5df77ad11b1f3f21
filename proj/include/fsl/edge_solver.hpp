#pragma once

#include <vector>

#include "fsl/sturm.hpp"

namespace fsl {

/// Uniform time grid t_k = k T / Nt, k = 0..Nt.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int points() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  double t(int k) const { return k == steps_ ? horizon_ : k * dt(); }

  /// Trapezoid quadrature weights: dt/2 at both ends, dt inside.
  Vec trapezoid_weights() const;

  /// Step averages (v_{k-1} + v_k)/2 for k = 1..Nt; entry 0 is unused (0).
  Vec step_average(const Vec& series) const;

 private:
  double horizon_ = 1.0;
  int steps_ = 1;
};

/// Boundary condition at the tip b of a single edge.
enum class TipCondition {
  Neumann,    // (beta D^alpha y)(b^-) = v, enters as the load v * trace_b^T
  Dirichlet,  // (I^{1-alpha} y)(b^-) = v, enforced with a Lagrange multiplier
};

struct Trajectory {
  Grid1D grid;
  TimeGrid time;
  Mat dofs;     // (Nt+1) x op.size()
  Mat values;   // (Nt+1) x nodes, nodal field values
  Vec trace_b;  // (I^{1-alpha} y)(b^-, t_k)
  Vec flux_b;   // recovered (beta D^alpha y)(b^-, t_k); entry 0 repeats entry 1
  // Adjoint only: the tip series that enters the gradient, aligned with the
  // control nodes t_0..t_Nt (trace for Neumann tips, flux for Dirichlet tips).
  Vec gradient_series;
};

/// Implicit-Euler stepper (W/dt + K) on the active DOFs, factored once and
/// shared by the forward and backward sweeps.
class EdgeStepper {
 public:
  EdgeStepper(const EdgeOperator& op, const TimeGrid& time, TipCondition tip);

  /// Full step matrix W/dt + K over all DOFs (clamped DOFs included).
  Mat matrix() const;

  const EdgeOperator& op() const { return *op_; }
  const std::vector<int>& active() const { return active_; }

  /// Solves (W/dt + K) z = rhs on the active DOFs, with trace_b z = tip_value
  /// when the tip is Dirichlet. Returns z (clamped entries zero) and, for a
  /// Dirichlet tip, the multiplier through `multiplier`.
  Vec solve(const Vec& rhs, double tip_value, double* multiplier = nullptr) const;

 private:
  const EdgeOperator* op_;
  TimeGrid time_;
  TipCondition tip_;
  std::vector<int> active_;
  Eigen::LLT<Mat> factor_;
  Vec border_;          // S^{-1} B^T for the Dirichlet tip
  double schur_ = 0.0;  // B S^{-1} B^T
};

/// Forward solve of y_t + A y = f with (I^{1-alpha} y)(a) = 0 (or a free
/// junction trace when op carries the singular DOF) and the given tip datum.
///
/// f is (Nt+1) x nodes (empty means zero), y0 has one value per node and v has
/// Nt+1 entries. Each step uses f at t_{k+1} and the step average of v.
Trajectory solve_forward_edge(const EdgeOperator& op, const TimeGrid& time, const Mat& f,
                              const Vec& y0, const Vec& v,
                              TipCondition tip = TipCondition::Neumann);

/// Backward solve of -p_t + A p = y_d - y, p(T) = 0, homogeneous tip data.
/// gradient_series holds the tip trace of p aligned with the control nodes.
Trajectory solve_adjoint_edge(const EdgeOperator& op, const TimeGrid& time, const Trajectory& y,
                              const Mat& y_target, TipCondition tip = TipCondition::Neumann);

/// Measured energy quantities against the explicit a-priori constants.
struct EnergyEstimate {
  double final_norm_sq = 0.0;  // ||y(T)||^2
  double l2v_norm_sq = 0.0;    // sum_k dt (||y^k||_W^2 + ||D_L y^k||_h^2)
  double data_norm_sq = 0.0;   // ||y0||^2 + ||f||^2_{L2(V*)} + ||v||^2_{L2(0,T)}
  double bound_final = 0.0;    // constant multiplying data_norm_sq
  double bound_l2v = 0.0;
  double ratio_final() const { return data_norm_sq > 0 ? final_norm_sq / data_norm_sq : 0.0; }
  double ratio_l2v() const { return data_norm_sq > 0 ? l2v_norm_sq / data_norm_sq : 0.0; }
  bool holds() const {
    return final_norm_sq <= bound_final * data_norm_sq * (1 + 1e-12) &&
           l2v_norm_sq <= bound_l2v * data_norm_sq * (1 + 1e-12);
  }
};

/// Single-edge estimate with constants 1 + 2(b-a+1)/m and 1/m + 2(b-a+1)/m^2,
/// m = min(beta0, q0). The source is measured in the discrete dual norm.
EnergyEstimate edge_energy_estimate(const EdgeOperator& op, const EdgeCoefficients& coeffs,
                                    const TimeGrid& time, const Trajectory& y, const Mat& f,
                                    const Vec& y0, const Vec& v);

/// Squared W-norm of every row of a trajectory.
Vec energy_history(const EdgeOperator& op, const Trajectory& y);

}  // namespace fsl
