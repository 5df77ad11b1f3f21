#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fsl/graph_solver.hpp"

namespace fsl {

/// Closed convex set of control series: everything, or a pointwise box whose
/// bounds are scalars (size 1) or full series (size Nt+1).
class AdmissibleSet {
 public:
  static AdmissibleSet unconstrained() { return AdmissibleSet(); }
  static AdmissibleSet box(double lo, double hi);
  static AdmissibleSet box(Vec lo, Vec hi);

  bool bounded() const { return bounded_; }
  double lower(Eigen::Index k) const { return lo_.size() == 1 ? lo_[0] : lo_[k]; }
  double upper(Eigen::Index k) const { return hi_.size() == 1 ? hi_[0] : hi_[k]; }

  Vec project(const Vec& candidate) const;
  bool contains(const Vec& series, double slack = 0.0) const;

 private:
  bool bounded_ = false;
  Vec lo_;
  Vec hi_;
};

Vec project(const AdmissibleSet& set, const Vec& candidate);

/// Single-edge problem: Neumann control at b, tracking over the whole edge.
struct EdgeControlProblem {
  EdgeOperator op;
  TimeGrid time;
  Mat source;  // (Nt+1) x nodes, empty means zero
  Vec y0;
  Mat target;  // (Nt+1) x nodes, empty means zero
  double tikhonov = 1.0;
  AdmissibleSet admissible;
};

/// Star-graph problem with one weighted control channel per non-root edge.
struct GraphControlProblem {
  StarGraphProblem graph;
  Vec weights;                          // n-1 positive entries
  std::vector<AdmissibleSet> admissible;  // n-1 entries
};

/// 1/2 ||y - y_d||^2 over Q (trapezoid in space and time) + N/2 ||v||^2.
double cost_edge(const EdgeControlProblem& problem, const Trajectory& y, const Vec& v);
/// g(t_k) = N u(t_k) - (I^{1-alpha} p)(b^-, t_k) in the trapezoid time inner product.
Vec gradient_edge(const EdgeControlProblem& problem, const Vec& u, const Trajectory& p);

double cost_graph(const GraphControlProblem& problem, const GraphTrajectory& y, const Mat& u);
/// Dirichlet channels: w u - flux of p; Neumann channels: w u + trace of p.
Mat gradient_graph(const GraphControlProblem& problem, const Mat& u, const GraphTrajectory& p);

/// Discrete L^2(0,T) inner product summed over channels.
double time_inner(const TimeGrid& time, const Mat& a, const Mat& b);
inline double time_norm(const TimeGrid& time, const Mat& a) { return std::sqrt(time_inner(time, a, a)); }

enum class Algorithm { ProjectedGradient, FixedPoint };

struct OptimOptions {
  Algorithm algorithm = Algorithm::ProjectedGradient;
  double tol = 1e-8;
  int max_iter = 500;
  Mat initial;  // (Nt+1) x channels; empty means zero
};

struct OptimResult {
  Mat controls;  // (Nt+1) x channels
  std::vector<double> cost_history;
  std::vector<double> stationarity_history;
  bool converged = false;
  int iterations = 0;
  std::string termination;
  std::optional<Trajectory> state;
  std::optional<Trajectory> adjoint;
  std::optional<GraphTrajectory> graph_state;
  std::optional<GraphTrajectory> graph_adjoint;
};

OptimResult optimize(const EdgeControlProblem& problem, const OptimOptions& options);
OptimResult optimize(const GraphControlProblem& problem, const OptimOptions& options);

}  // namespace fsl
