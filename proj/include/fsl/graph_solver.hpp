#pragma once

#include <vector>

#include "fsl/edge_solver.hpp"

namespace fsl {

/// Star graph with n edges [a, b_i] sharing the vertex a.
///
/// Edges are 0-based here: edge 0 is the clamped root, edges 1..m_split-1
/// carry Dirichlet-trace controls and edges m_split..n-1 Neumann controls.
/// Control channel j drives edge j+1, so there are n-1 channels.
struct StarGraphProblem {
  double alpha = 1.0;
  TimeGrid time;
  int m_split = 1;
  std::vector<Grid1D> grids;
  std::vector<EdgeCoefficients> coeffs;
  std::vector<Mat> source;  // per edge (Nt+1) x nodes, empty means zero
  std::vector<Vec> y0;      // per edge, one value per node
  std::vector<Mat> target;  // per edge (Nt+1) x nodes, empty means zero

  int edges() const { return static_cast<int>(grids.size()); }
  int channels() const { return edges() - 1; }
  bool dirichlet_edge(int e) const { return e < m_split; }

  /// Throws on inconsistent sizes, a shared vertex mismatch, 1 <= m_split <= n
  /// violated, or a coefficient failing its positivity bounds.
  void validate() const;
};

/// Index layout of the global unknown: active regular DOFs edge by edge,
/// then the shared junction coefficient c, then one multiplier per
/// constrained tip (edges 0..m_split-1).
struct GlobalDofMap {
  std::vector<int> offsets;             // first global index of each edge block
  std::vector<std::vector<int>> local;  // local (extended) DOF of each block entry
  std::vector<int> extended_junction;   // local index of c on each edge
  int junction = 0;
  int multipliers = 0;

  int state_size() const { return junction + 1; }
  int size() const { return state_size() + multipliers; }
  /// Global index of local DOF j of edge e, or -1 when clamped.
  int global(int e, int j) const;
};

/// Assembled star-graph step operator with its factorization.
class GraphSystem {
 public:
  explicit GraphSystem(const StarGraphProblem& problem);

  const StarGraphProblem& problem() const { return problem_; }
  const std::vector<EdgeOperator>& ops() const { return ops_; }
  const GlobalDofMap& map() const { return map_; }

  const Mat& mass() const { return mass_; }            // state_size square
  const Mat& stiffness() const { return stiffness_; }  // state_size square
  const Mat& constraints() const { return constraints_; }  // multipliers x state_size

  /// Full saddle matrix [W/dt + K, -B^T; -B, 0].
  Mat saddle_matrix() const;

  /// Solves the saddle system with constraint data tip_values and returns the
  /// state part; the multipliers go to `multipliers` when given.
  Vec solve(const Vec& rhs, const Vec& tip_values, Vec* multipliers = nullptr) const;

  Vec scatter(int e, const Vec& local) const;
  Vec gather(int e, const Vec& global) const;

 private:
  StarGraphProblem problem_;
  std::vector<EdgeOperator> ops_;
  GlobalDofMap map_;
  Mat mass_;
  Mat stiffness_;
  Mat constraints_;
  Eigen::LLT<Mat> step_factor_;
  Mat border_;  // S^{-1} B^T
  Eigen::LLT<Mat> schur_factor_;
};

GraphSystem assemble_graph_system(const StarGraphProblem& problem);

struct GraphTrajectory {
  TimeGrid time;
  std::vector<Mat> dofs;    // per edge (Nt+1) x extended size
  std::vector<Mat> values;  // per edge (Nt+1) x nodes
  Vec junction;             // c(t_k)
  Mat multipliers;          // (Nt+1) x m_split
  Mat tip_trace;            // (Nt+1) x n, (I^{1-alpha} y^i)(b_i^-)
  Mat tip_flux;             // (Nt+1) x n, recovered (beta D^alpha y^i)(b_i^-)
  Mat junction_flux;        // (Nt+1) x n, recovered (beta D^alpha y^i)(a^+)
  // Adjoint only: per channel, g_j = w_j u_j + pairing_j is the cost gradient.
  Mat pairing;
};

/// Controls: (Nt+1) x (n-1), column j drives edge j+1. Dirichlet columns are
/// imposed pointwise at t_k, Neumann columns through step averages.
GraphTrajectory solve_forward_graph(const GraphSystem& system, const Mat& controls);
GraphTrajectory solve_forward_graph(const StarGraphProblem& problem, const Mat& controls);

/// Backward system with source y - y_target, p(T) = 0 and homogeneous tips.
GraphTrajectory solve_adjoint_graph(const GraphSystem& system, const GraphTrajectory& y);
GraphTrajectory solve_adjoint_graph(const StarGraphProblem& problem, const GraphTrajectory& y);

/// Sum over edges of the squared W-norms at each time level.
Vec graph_energy_history(const GraphSystem& system, const GraphTrajectory& y);

/// Homogeneous-boundary estimate with constants 1 + 1/m and 1/m + 1/m^2,
/// m the smallest min(beta0, q0) over the edges; the source is measured in L^2.
EnergyEstimate graph_energy_estimate(const GraphSystem& system, const GraphTrajectory& y);

}  // namespace fsl
