#include "fsl/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fsl {

AdmissibleSet AdmissibleSet::box(double lo, double hi) {
  return box(Vec::Constant(1, lo), Vec::Constant(1, hi));
}

AdmissibleSet AdmissibleSet::box(Vec lo, Vec hi) {
  require(lo.size() >= 1 && hi.size() >= 1, ErrorKind::Shape, "box bounds must not be empty");
  require(lo.size() == 1 || hi.size() == 1 || lo.size() == hi.size(), ErrorKind::Shape,
          "box bound series have different lengths");
  const Eigen::Index n = std::max(lo.size(), hi.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    const double l = lo.size() == 1 ? lo[0] : lo[k];
    const double h = hi.size() == 1 ? hi[0] : hi[k];
    require(std::isfinite(l) && std::isfinite(h) && l <= h, ErrorKind::Domain,
            "box bounds must satisfy lo <= hi");
  }
  AdmissibleSet s;
  s.bounded_ = true;
  s.lo_ = std::move(lo);
  s.hi_ = std::move(hi);
  return s;
}

Vec AdmissibleSet::project(const Vec& candidate) const {
  if (!bounded_) return candidate;
  require((lo_.size() == 1 || lo_.size() == candidate.size()) &&
              (hi_.size() == 1 || hi_.size() == candidate.size()),
          ErrorKind::Shape, "box bounds do not match the control length");
  Vec out = candidate;
  for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = std::clamp(out[k], lower(k), upper(k));
  return out;
}

bool AdmissibleSet::contains(const Vec& series, double slack) const {
  if (!bounded_) return true;
  for (Eigen::Index k = 0; k < series.size(); ++k) {
    if (series[k] < lower(k) - slack || series[k] > upper(k) + slack) return false;
  }
  return true;
}

Vec project(const AdmissibleSet& set, const Vec& candidate) { return set.project(candidate); }

double time_inner(const TimeGrid& time, const Mat& a, const Mat& b) {
  require(a.rows() == time.points() && a.rows() == b.rows() && a.cols() == b.cols(),
          ErrorKind::Shape, "control series shapes differ");
  const Vec tau = time.trapezoid_weights();
  return (tau.asDiagonal() * a.cwiseProduct(b)).sum();
}

namespace {

double tracking(const Mat& values, const Mat& target, const Vec& nodal_weights, const Vec& tau) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    RowVec d = values.row(k);
    if (target.size() != 0) d -= target.row(k);
    acc += tau[k] * d.cwiseAbs2().dot(nodal_weights.transpose());
  }
  return 0.5 * acc;
}

}  // namespace

double cost_edge(const EdgeControlProblem& pb, const Trajectory& y, const Vec& v) {
  const Vec tau = pb.time.trapezoid_weights();
  require(v.size() == tau.size(), ErrorKind::Shape, "control must have Nt+1 entries");
  return tracking(y.values, pb.target, pb.op.nodal_weights, tau) +
         0.5 * pb.tikhonov * v.cwiseAbs2().dot(tau);
}

Vec gradient_edge(const EdgeControlProblem& pb, const Vec& u, const Trajectory& p) {
  require(u.size() == p.gradient_series.size(), ErrorKind::Shape,
          "control and adjoint series lengths differ");
  return pb.tikhonov * u - p.gradient_series;
}

double cost_graph(const GraphControlProblem& pb, const GraphTrajectory& y, const Mat& u) {
  const StarGraphProblem& g = pb.graph;
  require(u.cols() == g.channels() && pb.weights.size() == g.channels(), ErrorKind::Shape,
          "channel count mismatch");
  const Vec tau = g.time.trapezoid_weights();
  double j = 0.0;
  for (int e = 0; e < g.edges(); ++e) {
    const Mat empty;
    const Mat& yd = g.target.empty() ? empty : g.target[e];
    j += tracking(y.values[e], yd, g.grids[e].trapezoid_weights(), tau);
  }
  for (int c = 0; c < g.channels(); ++c) j += 0.5 * pb.weights[c] * u.col(c).cwiseAbs2().dot(tau);
  return j;
}

Mat gradient_graph(const GraphControlProblem& pb, const Mat& u, const GraphTrajectory& p) {
  require(u.cols() == pb.graph.channels() && p.pairing.cols() == u.cols() &&
              pb.weights.size() == u.cols(),
          ErrorKind::Shape, "channel count mismatch");
  return u * pb.weights.asDiagonal() + p.pairing;
}

namespace {

struct Evaluation {
  double cost = 0.0;
  Mat gradient;
};

struct Model {
  TimeGrid time;
  Vec weights;
  std::function<Evaluation(const Mat&)> evaluate;
  std::function<Mat(const Mat&)> project;
};

constexpr double kArmijo = 1e-4;
constexpr double kBacktrack = 0.5;
constexpr int kMaxHalvings = 40;

OptimResult run(const Model& model, const OptimOptions& opt) {
  require(opt.tol > 0.0 && opt.max_iter >= 0, ErrorKind::Domain, "need tol > 0 and max_iter >= 0");
  const int channels = static_cast<int>(model.weights.size());
  Mat u = opt.initial.size() ? opt.initial : Mat::Zero(model.time.points(), channels);
  require(u.rows() == model.time.points() && u.cols() == channels, ErrorKind::Shape,
          "initial control must be (Nt+1) x channels");
  u = model.project(u);

  const double theta = model.weights.minCoeff() < 1.0 ? 0.5 : 1.0;
  OptimResult res;
  Evaluation ev = model.evaluate(u);
  for (int it = 0;; ++it) {
    const Mat step = u - model.project(u - ev.gradient);
    const double stat = time_norm(model.time, step) / std::max(1.0, time_norm(model.time, u));
    res.cost_history.push_back(ev.cost);
    res.stationarity_history.push_back(stat);
    res.iterations = it;
    if (stat <= opt.tol) {
      res.converged = true;
      res.termination = "stationary";
      break;
    }
    if (it == opt.max_iter) {
      res.termination = "max_iter";
      break;
    }

    if (opt.algorithm == Algorithm::FixedPoint) {
      const Mat target = model.project(u - ev.gradient * model.weights.cwiseInverse().asDiagonal());
      u = (1.0 - theta) * u + theta * target;
      ev = model.evaluate(u);
      continue;
    }

    double s = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, s *= kBacktrack) {
      const Mat cand = model.project(u - s * ev.gradient);
      Evaluation ec = model.evaluate(cand);
      const double predicted = time_inner(model.time, ev.gradient, cand - u);
      const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(ev.cost);
      if (ec.cost <= ev.cost + kArmijo * predicted + slack) {
        u = cand;
        ev = std::move(ec);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::Solver, "Armijo line search failed after 40 halvings at iteration " +
                                         std::to_string(it) + " (stationarity " +
                                         std::to_string(stat) + ")");
    }
  }
  res.controls = u;
  return res;
}

}  // namespace

OptimResult optimize(const EdgeControlProblem& pb, const OptimOptions& opt) {
  require(pb.tikhonov > 0.0, ErrorKind::Domain, "Tikhonov weight must be positive");
  Model model;
  model.time = pb.time;
  model.weights = Vec::Constant(1, pb.tikhonov);
  model.project = [&](const Mat& u) { return Mat(pb.admissible.project(u.col(0))); };
  model.evaluate = [&](const Mat& u) {
    const Vec v = u.col(0);
    const Trajectory y = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, v);
    const Trajectory p = solve_adjoint_edge(pb.op, pb.time, y, pb.target);
    return Evaluation{cost_edge(pb, y, v), Mat(gradient_edge(pb, v, p))};
  };
  OptimResult res = run(model, opt);
  const Vec v = res.controls.col(0);
  res.state = solve_forward_edge(pb.op, pb.time, pb.source, pb.y0, v);
  res.adjoint = solve_adjoint_edge(pb.op, pb.time, *res.state, pb.target);
  return res;
}

OptimResult optimize(const GraphControlProblem& pb, const OptimOptions& opt) {
  const int channels = pb.graph.channels();
  require(channels >= 1, ErrorKind::Shape, "graph has no control channels");
  require(pb.weights.size() == channels && static_cast<int>(pb.admissible.size()) == channels,
          ErrorKind::Shape, "need one weight and one admissible set per channel");
  require((pb.weights.array() > 0.0).all(), ErrorKind::Domain, "channel weights must be positive");
  const GraphSystem sys(pb.graph);
  Model model;
  model.time = pb.graph.time;
  model.weights = pb.weights;
  model.project = [&](const Mat& u) {
    Mat out(u.rows(), u.cols());
    for (int c = 0; c < channels; ++c) out.col(c) = pb.admissible[c].project(u.col(c));
    return out;
  };
  model.evaluate = [&](const Mat& u) {
    const GraphTrajectory y = solve_forward_graph(sys, u);
    const GraphTrajectory p = solve_adjoint_graph(sys, y);
    return Evaluation{cost_graph(pb, y, u), gradient_graph(pb, u, p)};
  };
  OptimResult res = run(model, opt);
  res.graph_state = solve_forward_graph(sys, res.controls);
  res.graph_adjoint = solve_adjoint_graph(sys, *res.graph_state);
  return res;
}

}  // namespace fsl
