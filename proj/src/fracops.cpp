#include "fsl/fracops.hpp"

#include <cmath>
#include <string>

namespace fsl {

Grid1D::Grid1D(double a, double b, int cells) : a_(a), b_(b), cells_(cells) {
  require(cells >= 2, ErrorKind::Domain,
          "grid needs at least 2 cells, got " + std::to_string(cells));
  require(std::isfinite(a) && std::isfinite(b) && b > a, ErrorKind::Domain,
          "grid endpoints must satisfy a < b");
}

double Grid1D::node(int j) const {
  // Pin the last node to b exactly.
  if (j == cells_) return b_;
  return a_ + j * h();
}

Vec Grid1D::node_vector() const {
  Vec x(nodes());
  for (int j = 0; j < nodes(); ++j) x[j] = node(j);
  return x;
}

Vec Grid1D::trapezoid_weights() const {
  Vec w = Vec::Constant(nodes(), h());
  w[0] *= 0.5;
  w[cells_] *= 0.5;
  return w;
}

void check_order(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0, ErrorKind::Domain,
          "fractional order must lie in (0,1], got " + std::to_string(alpha));
}

ConvWeights frac_integral_weights(double alpha, double h, int cells) {
  check_order(alpha);
  require(std::isfinite(h) && h > 0.0, ErrorKind::Domain, "mesh size must be positive");
  require(cells >= 1, ErrorKind::Domain, "need at least one cell");

  ConvWeights out;
  out.alpha = alpha;
  out.h = h;
  out.w.resize(cells + 1);
  const double scale = std::pow(h, alpha) / std::tgamma(alpha + 1.0);
  for (int k = 0; k <= cells; ++k) {
    out.w[k] = scale * (std::pow(k + 1.0, alpha) - std::pow(static_cast<double>(k), alpha));
  }
  return out;
}

namespace {

void check_samples(const ConvWeights& weights, const Vec& samples) {
  require(samples.size() == weights.w.size(), ErrorKind::Shape,
          "sample vector must have one entry per grid node");
}

}  // namespace

Vec apply_left_integral(const ConvWeights& weights, const Vec& samples) {
  check_samples(weights, samples);
  const Eigen::Index n = samples.size();
  Vec out = Vec::Zero(n);
  for (Eigen::Index j = 1; j < n; ++j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < j; ++k) acc += weights.w[k] * samples[j - 1 - k];
    out[j] = acc;
  }
  return out;
}

Vec apply_right_integral(const ConvWeights& weights, const Vec& samples) {
  check_samples(weights, samples);
  return apply_left_integral(weights, samples.reverse()).reverse();
}

Vec TriangularConvOp::apply(const Vec& samples) const {
  require(samples.size() == matrix.cols(), ErrorKind::Shape,
          "sample vector does not match operator size");
  return matrix * samples;
}

TriangularConvOp left_integral_operator(const ConvWeights& weights, int cells) {
  require(weights.w.size() >= cells + 1, ErrorKind::Shape, "too few weights for grid");
  TriangularConvOp op;
  op.orientation = Side::Left;
  op.matrix = Mat::Zero(cells + 1, cells + 1);
  for (int j = 1; j <= cells; ++j)
    for (int l = 0; l < j; ++l) op.matrix(j, l) = weights.w[j - 1 - l];
  return op;
}

TriangularConvOp right_integral_operator(const ConvWeights& weights, int cells) {
  TriangularConvOp op = left_integral_operator(weights, cells);
  op.orientation = Side::Right;
  // Reflection x -> a+b-x reverses both the row and the column order.
  op.matrix = op.matrix.reverse().eval();
  return op;
}

namespace {

// Piecewise-linear product rule for I^gamma at every node (gamma = 1 - alpha).
Mat trace_integral_matrix(double gamma, const Grid1D& grid) {
  const int m = grid.cells();
  Mat t = Mat::Zero(m + 1, m + 1);
  if (gamma == 0.0) {
    t.setIdentity();
    return t;
  }
  const double c = std::pow(grid.h(), gamma) / std::tgamma(gamma + 2.0);
  const double g1 = gamma + 1.0;
  for (int j = 1; j <= m; ++j) {
    t(j, 0) = c * (std::pow(j - 1.0, g1) - (j - 1.0 - gamma) * std::pow(static_cast<double>(j), gamma));
    for (int l = 1; l < j; ++l) {
      const double k = j - l;
      t(j, l) = c * (std::pow(k + 1.0, g1) - 2.0 * std::pow(k, g1) + std::pow(k - 1.0, g1));
    }
    t(j, j) = c;
  }
  return t;
}

}  // namespace

LeftRlDerivative::LeftRlDerivative(double alpha, const Grid1D& grid)
    : alpha_(alpha), grid_(grid) {
  check_order(alpha);
  trace_integral_ = trace_integral_matrix(1.0 - alpha, grid);
  const int m = grid.cells();
  matrix_ = (trace_integral_.bottomRows(m) - trace_integral_.topRows(m)) / grid.h();
}

TraceRow LeftRlDerivative::trace(Endpoint endpoint) const {
  const int row = endpoint == Endpoint::A ? 0 : grid_.cells();
  return TraceRow{trace_integral_.row(row), 1.0};
}

Vec right_caputo_apply(const LeftRlDerivative& derivative, const Vec& flux_cells) {
  const Grid1D& grid = derivative.grid();
  require(flux_cells.size() == grid.cells(), ErrorKind::Shape,
          "flux samples must be given per cell");
  const double h = grid.h();
  const int m = grid.cells();
  Vec rhs = h * derivative.matrix().transpose() * flux_cells;
  rhs -= flux_cells[m - 1] * derivative.trace(Endpoint::B).regular.transpose();
  rhs += flux_cells[0] * derivative.trace(Endpoint::A).regular.transpose();
  return rhs.cwiseQuotient(grid.trapezoid_weights());
}

TraceRow trace_functional(double alpha, const Grid1D& grid, Endpoint endpoint) {
  return LeftRlDerivative(alpha, grid).trace(endpoint);
}

Vec SingularMode::trace_integral() const {
  // int_a^x (x-t)^{-alpha} (t-a)^{alpha-1} dt / (Gamma(1-alpha) Gamma(alpha))
  //   = B(1-alpha, alpha) / (Gamma(1-alpha) Gamma(alpha)), independent of x.
  double value = 1.0;
  if (alpha < 1.0) {
    value = std::beta(1.0 - alpha, alpha) / (std::tgamma(1.0 - alpha) * std::tgamma(alpha));
  }
  return Vec::Constant(grid.nodes(), value * trace_normalization);
}

SingularMode singular_mode(double alpha, const Grid1D& grid) {
  check_order(alpha);
  SingularMode mode;
  mode.alpha = alpha;
  mode.grid = grid;
  mode.samples.resize(grid.nodes());
  const double h = grid.h();
  mode.samples[0] = std::pow(h, alpha - 1.0) / std::tgamma(alpha + 1.0);
  for (int j = 1; j < grid.nodes(); ++j) {
    mode.samples[j] = std::pow(grid.node(j) - grid.a(), alpha - 1.0) / std::tgamma(alpha);
  }
  return mode;
}

}  // namespace fsl
