#pragma once

#include <cmath>
#include <random>

#include "fsl/control.hpp"

namespace fsl::test {

struct Rng {
  std::mt19937 gen;
  explicit Rng(unsigned seed) : gen(seed) {}

  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }

  Vec vec(Eigen::Index n) {
    Vec v(n);
    for (auto& x : v) x = normal();
    return v;
  }
  Vec positive(Eigen::Index n, double lo, double hi) {
    Vec v(n);
    for (auto& x : v) x = uniform(lo, hi);
    return v;
  }
  Mat mat(Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) m.col(j) = vec(r);
    return m;
  }
};

inline EdgeCoefficients random_coeffs(Rng& rng, const Grid1D& g) {
  return EdgeCoefficients::from_samples(rng.positive(g.nodes(), 0.8, 2.0),
                                        rng.positive(g.nodes(), 0.5, 1.5));
}

/// n-edge star with random lengths and coefficients; data optional.
inline StarGraphProblem random_star(Rng& rng, double alpha, int n, int m_split, int cells,
                                    const TimeGrid& time, bool with_data) {
  StarGraphProblem pb;
  pb.alpha = alpha;
  pb.time = time;
  pb.m_split = m_split;
  for (int e = 0; e < n; ++e) {
    const Grid1D g(0.0, rng.uniform(0.7, 1.5), cells);
    pb.grids.push_back(g);
    pb.coeffs.push_back(random_coeffs(rng, g));
    pb.y0.push_back(rng.vec(g.nodes()));
    if (with_data) {
      pb.source.push_back(rng.mat(time.points(), g.nodes()));
      pb.target.push_back(rng.mat(time.points(), g.nodes()));
    }
  }
  return pb;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace fsl::test
