#include "fsl/graph_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fsl {

void StarGraphProblem::validate() const {
  const int n = edges();
  require(n >= 1, ErrorKind::Shape, "star graph needs at least one edge");
  require(m_split >= 1 && m_split <= n, ErrorKind::Domain,
          "split index must satisfy 1 <= m <= n, got m = " + std::to_string(m_split));
  check_order(alpha);
  require(static_cast<int>(coeffs.size()) == n && static_cast<int>(y0.size()) == n,
          ErrorKind::Shape, "need coefficients and initial data for every edge");
  require(source.empty() || static_cast<int>(source.size()) == n, ErrorKind::Shape,
          "source list must be empty or have one entry per edge");
  require(target.empty() || static_cast<int>(target.size()) == n, ErrorKind::Shape,
          "target list must be empty or have one entry per edge");
  for (int e = 0; e < n; ++e) {
    const Grid1D& g = grids[e];
    require(g.a() == grids[0].a(), ErrorKind::Domain, "all edges must share the vertex a");
    coeffs[e].validate(g);
    require(y0[e].size() == g.nodes(), ErrorKind::Shape,
            "initial datum of edge " + std::to_string(e) + " has the wrong length");
    for (const auto* list : {&source, &target}) {
      if (list->empty() || (*list)[e].size() == 0) continue;
      require((*list)[e].rows() == time.points() && (*list)[e].cols() == g.nodes(),
              ErrorKind::Shape, "space-time data of edge " + std::to_string(e) +
                                    " must be (Nt+1) x nodes");
    }
  }
}

int GlobalDofMap::global(int e, int j) const {
  const auto& loc = local[e];
  if (j == extended_junction[e]) return junction;
  for (size_t i = 0; i < loc.size(); ++i)
    if (loc[i] == j) return offsets[e] + static_cast<int>(i);
  return -1;
}

namespace {

const Mat* edge_data(const std::vector<Mat>& list, int e) {
  if (list.empty() || list[e].size() == 0) return nullptr;
  return &list[e];
}

Vec edge_source(const EdgeOperator& op, const std::vector<Mat>& list, int e, int k) {
  const Mat* f = edge_data(list, e);
  if (!f) return Vec::Zero(op.size());
  return op.source_load(f->row(k).transpose());
}

}  // namespace

GraphSystem::GraphSystem(const StarGraphProblem& problem) : problem_(problem) {
  problem_.validate();
  const int n = problem_.edges();
  const double dt = problem_.time.dt();

  int next = 0;
  for (int e = 0; e < n; ++e) {
    ops_.push_back(assemble_stiffness(problem_.alpha, problem_.grids[e], problem_.coeffs[e], true));
    const EdgeOperator& op = ops_.back();
    std::vector<int> block;
    for (int j : op.active_dofs())
      if (j < op.nodes()) block.push_back(j);
    map_.offsets.push_back(next);
    map_.extended_junction.push_back(op.nodes());
    next += static_cast<int>(block.size());
    map_.local.push_back(std::move(block));
  }
  map_.junction = next;
  map_.multipliers = problem_.m_split;

  const int ns = map_.state_size();
  mass_ = Mat::Zero(ns, ns);
  stiffness_ = Mat::Zero(ns, ns);
  constraints_ = Mat::Zero(map_.multipliers, ns);
  for (int e = 0; e < n; ++e) {
    const EdgeOperator& op = ops_[e];
    std::vector<int> gl(op.size());
    for (int j = 0; j < op.size(); ++j) gl[j] = map_.global(e, j);
    for (int i = 0; i < op.size(); ++i) {
      if (gl[i] < 0) continue;
      for (int j = 0; j < op.size(); ++j) {
        if (gl[j] < 0) continue;
        mass_(gl[i], gl[j]) += op.mass(i, j);
        stiffness_(gl[i], gl[j]) += op.stiffness(i, j);
      }
    }
    if (e < problem_.m_split) constraints_.row(e) = scatter(e, op.trace_b.transpose()).transpose();
  }

  step_factor_.compute(mass_ / dt + stiffness_);
  if (step_factor_.info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "graph step matrix is not positive definite");
  }
  border_ = step_factor_.solve(constraints_.transpose());
  const Mat schur = constraints_ * border_;
  schur_factor_.compute(schur);
  if (schur_factor_.info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "degenerate set of tip constraints");
  }
}

Vec GraphSystem::scatter(int e, const Vec& local) const {
  const EdgeOperator& op = ops_[e];
  require(local.size() == op.size(), ErrorKind::Shape, "local vector has the wrong size");
  Vec out = Vec::Zero(map_.state_size());
  const auto& block = map_.local[e];
  for (size_t i = 0; i < block.size(); ++i) out[map_.offsets[e] + i] = local[block[i]];
  out[map_.junction] = local[op.nodes()];
  return out;
}

Vec GraphSystem::gather(int e, const Vec& global) const {
  const EdgeOperator& op = ops_[e];
  Vec out = Vec::Zero(op.size());
  const auto& block = map_.local[e];
  for (size_t i = 0; i < block.size(); ++i) out[block[i]] = global[map_.offsets[e] + i];
  out[op.nodes()] = global[map_.junction];
  return out;
}

Mat GraphSystem::saddle_matrix() const {
  const int ns = map_.state_size();
  const int nm = map_.multipliers;
  Mat out = Mat::Zero(ns + nm, ns + nm);
  out.topLeftCorner(ns, ns) = mass_ / problem_.time.dt() + stiffness_;
  out.topRightCorner(ns, nm) = -constraints_.transpose();
  out.bottomLeftCorner(nm, ns) = -constraints_;
  return out;
}

Vec GraphSystem::solve(const Vec& rhs, const Vec& tip_values, Vec* multipliers) const {
  require(rhs.size() == map_.state_size() && tip_values.size() == map_.multipliers,
          ErrorKind::Shape, "graph right-hand side has the wrong size");
  Vec z = step_factor_.solve(rhs);
  const Vec lam = schur_factor_.solve(tip_values - constraints_ * z);
  z += border_ * lam;
  if (multipliers) *multipliers = lam;
  return z;
}

GraphSystem assemble_graph_system(const StarGraphProblem& problem) { return GraphSystem(problem); }

namespace {

GraphTrajectory empty_trajectory(const GraphSystem& sys) {
  const StarGraphProblem& pb = sys.problem();
  const int np = pb.time.points();
  const int n = pb.edges();
  GraphTrajectory out;
  out.time = pb.time;
  for (const EdgeOperator& op : sys.ops()) {
    out.dofs.push_back(Mat::Zero(np, op.size()));
    out.values.push_back(Mat::Zero(np, op.nodes()));
  }
  out.junction = Vec::Zero(np);
  out.multipliers = Mat::Zero(np, pb.m_split);
  out.tip_trace = Mat::Zero(np, n);
  out.tip_flux = Mat::Zero(np, n);
  out.junction_flux = Mat::Zero(np, n);
  return out;
}

void store(const GraphSystem& sys, GraphTrajectory& out, int k, const Vec& z) {
  if (!z.allFinite()) {
    throw Error(ErrorKind::Solver, "graph solve: non-finite state at step " + std::to_string(k));
  }
  for (int e = 0; e < sys.problem().edges(); ++e) {
    out.dofs[e].row(k) = sys.gather(e, z).transpose();
  }
  out.junction[k] = z[sys.map().junction];
}

// Boundary read-outs from the per-edge residual of the step ending at k
// (forward: previous = k-1; backward: previous = k+1).
void boundary_series(const GraphSystem& sys, GraphTrajectory& out, const std::vector<Mat>& data,
                     bool backward) {
  const StarGraphProblem& pb = sys.problem();
  const int nt = pb.time.steps();
  const double dt = pb.time.dt();
  for (int e = 0; e < pb.edges(); ++e) {
    const EdgeOperator& op = sys.ops()[e];
    for (int k = 0; k <= nt; ++k) {
      const Vec zk = out.dofs[e].row(k).transpose();
      out.tip_trace(k, e) = op.trace_b.dot(zk);
      if (!backward && k == 0) continue;
      const Vec zp = backward ? (k == nt ? Vec::Zero(op.size()) : Vec(out.dofs[e].row(k + 1).transpose()))
                              : Vec(out.dofs[e].row(k - 1).transpose());
      const Vec r = op.mass * (zk - zp) / dt + op.stiffness * zk - edge_source(op, data, e, k);
      out.tip_flux(k, e) = op.flux_b(r);
      out.junction_flux(k, e) = op.flux_a_test.dot(r);
    }
    if (!backward) {
      out.tip_flux(0, e) = out.tip_flux(std::min(1, nt), e);
      out.junction_flux(0, e) = out.junction_flux(std::min(1, nt), e);
    }
    out.values[e] = out.dofs[e] * op.eval.transpose();
  }
}

Vec initial_state(const GraphSystem& sys, GraphTrajectory& out) {
  const StarGraphProblem& pb = sys.problem();
  const int n = pb.edges();
  // alpha = 1: the junction mode is the constant 1 and carries the mean vertex value.
  double c = 0.0;
  const bool clamped = !sys.ops()[0].clamped_dofs().empty();
  if (clamped) {
    for (int e = 0; e < n; ++e) c += pb.y0[e][0];
    c /= n;
  }
  for (int e = 0; e < n; ++e) {
    const EdgeOperator& op = sys.ops()[e];
    Vec local = Vec::Zero(op.size());
    local.head(op.nodes()) = pb.y0[e] - c * op.eval.col(op.nodes());
    local[op.nodes()] = c;
    out.dofs[e].row(0) = local.transpose();
  }
  out.junction[0] = c;
  Vec z = Vec::Zero(sys.map().state_size());
  for (int e = 0; e < n; ++e) {
    const Vec local = out.dofs[e].row(0).transpose();
    z += sys.scatter(e, local);
  }
  z[sys.map().junction] = c;
  return z;
}

}  // namespace

GraphTrajectory solve_forward_graph(const GraphSystem& sys, const Mat& controls) {
  const StarGraphProblem& pb = sys.problem();
  const int n = pb.edges();
  const int nt = pb.time.steps();
  const double dt = pb.time.dt();
  require(controls.rows() == pb.time.points() && controls.cols() == pb.channels(), ErrorKind::Shape,
          "controls must be (Nt+1) x (n-1)");

  GraphTrajectory out = empty_trajectory(sys);
  initial_state(sys, out);

  Vec tips = Vec::Zero(pb.m_split);
  Vec lam;
  for (int k = 1; k <= nt; ++k) {
    Vec rhs = Vec::Zero(sys.map().state_size());
    for (int e = 0; e < n; ++e) {
      const EdgeOperator& op = sys.ops()[e];
      Vec local = op.mass * out.dofs[e].row(k - 1).transpose() / dt + edge_source(op, pb.source, e, k);
      if (!pb.dirichlet_edge(e)) {
        const double vbar = 0.5 * (controls(k - 1, e - 1) + controls(k, e - 1));
        local += op.neumann_load(vbar);
      }
      rhs += sys.scatter(e, local);
    }
    for (int e = 1; e < pb.m_split; ++e) tips[e] = controls(k, e - 1);
    const Vec z = sys.solve(rhs, tips, &lam);
    store(sys, out, k, z);
    out.multipliers.row(k) = lam.transpose();
  }
  if (nt >= 1) out.multipliers.row(0) = out.multipliers.row(1);
  boundary_series(sys, out, pb.source, false);
  return out;
}

GraphTrajectory solve_forward_graph(const StarGraphProblem& problem, const Mat& controls) {
  return solve_forward_graph(GraphSystem(problem), controls);
}

GraphTrajectory solve_adjoint_graph(const GraphSystem& sys, const GraphTrajectory& y) {
  const StarGraphProblem& pb = sys.problem();
  const int n = pb.edges();
  const int nt = pb.time.steps();
  const double dt = pb.time.dt();
  const Vec tau = pb.time.trapezoid_weights();
  require(static_cast<int>(y.values.size()) == n, ErrorKind::Shape,
          "state trajectory does not match the graph");

  GraphTrajectory out = empty_trajectory(sys);
  // Misfit loads scaled by tau_k/dt, kept per edge for the residual read-out.
  std::vector<Mat> misfit(n);
  for (int e = 0; e < n; ++e) {
    misfit[e] = y.values[e];
    require(misfit[e].rows() == pb.time.points() && misfit[e].cols() == pb.grids[e].nodes(),
            ErrorKind::Shape, "state trajectory does not match the graph");
    if (const Mat* yd = edge_data(pb.target, e)) misfit[e] -= *yd;
    for (int k = 0; k <= nt; ++k) misfit[e].row(k) *= tau[k] / dt;
  }

  const Vec tips = Vec::Zero(pb.m_split);
  Vec mu;
  Vec p = Vec::Zero(sys.map().state_size());
  for (int k = nt; k >= 0; --k) {
    Vec rhs = sys.mass() * p / dt;
    for (int e = 0; e < n; ++e) rhs += sys.scatter(e, edge_source(sys.ops()[e], misfit, e, k));
    p = sys.solve(rhs, tips, &mu);
    store(sys, out, k, p);
    out.multipliers.row(k) = mu.transpose();
  }
  boundary_series(sys, out, misfit, true);

  out.pairing = Mat::Zero(pb.time.points(), pb.channels());
  for (int e = 1; e < n; ++e) {
    for (int k = 0; k <= nt; ++k) {
      if (pb.dirichlet_edge(e)) {
        if (k >= 1) out.pairing(k, e - 1) = -dt / tau[k] * out.multipliers(k, e);
      } else {
        const double s0 = k >= 1 ? out.tip_trace(k, e) : 0.0;
        const double s1 = k < nt ? out.tip_trace(k + 1, e) : 0.0;
        out.pairing(k, e - 1) = dt / (2.0 * tau[k]) * (s0 + s1);
      }
    }
  }
  return out;
}

GraphTrajectory solve_adjoint_graph(const StarGraphProblem& problem, const GraphTrajectory& y) {
  return solve_adjoint_graph(GraphSystem(problem), y);
}

Vec graph_energy_history(const GraphSystem& sys, const GraphTrajectory& y) {
  Vec e = Vec::Zero(sys.problem().time.points());
  for (int i = 0; i < sys.problem().edges(); ++i) {
    const Vec& w = sys.ops()[i].nodal_weights;
    for (Eigen::Index k = 0; k < e.size(); ++k) e[k] += y.values[i].row(k).cwiseAbs2().dot(w);
  }
  return e;
}

EnergyEstimate graph_energy_estimate(const GraphSystem& sys, const GraphTrajectory& y) {
  const StarGraphProblem& pb = sys.problem();
  const int nt = pb.time.steps();
  const double dt = pb.time.dt();
  EnergyEstimate est;
  const Vec energy = graph_energy_history(sys, y);
  est.final_norm_sq = energy[nt];
  double m = INFINITY;
  for (int e = 0; e < pb.edges(); ++e) {
    const EdgeOperator& op = sys.ops()[e];
    const double h = op.grid.h();
    for (int k = 1; k <= nt; ++k) {
      const Vec zk = y.dofs[e].row(k).transpose();
      est.l2v_norm_sq += dt * h * (op.rl * zk).squaredNorm();
    }
    est.data_norm_sq += pb.y0[e].cwiseAbs2().dot(op.nodal_weights);
    if (const Mat* f = edge_data(pb.source, e)) {
      for (int k = 1; k <= nt; ++k) est.data_norm_sq += dt * f->row(k).cwiseAbs2().dot(op.nodal_weights.transpose());
    }
    m = std::min({m, pb.coeffs[e].beta0, pb.coeffs[e].q0});
  }
  for (int k = 1; k <= nt; ++k) est.l2v_norm_sq += dt * energy[k];
  est.bound_final = 1.0 + 1.0 / m;
  est.bound_l2v = 1.0 / m + 1.0 / (m * m);
  return est;
}

}  // namespace fsl
