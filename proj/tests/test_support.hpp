#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/grid.hpp>
#include <gpdyn/hyperstate.hpp>

#include <random>
#include <vector>

namespace gpdyn::testing_support {

inline SeriesGrid series_grid(const VectorXd& tau) {
  SeriesGrid g;
  g.tau = tau;
  for (Index k = 0; k < tau.size(); ++k) g.meas_index.push_back(k);
  return g;
}

inline Trajectory trajectory(const std::vector<VectorXd>& taus, const MatrixXd& X) {
  std::vector<SeriesGrid> parts;
  for (const auto& t : taus) parts.push_back(series_grid(t));
  Trajectory traj;
  traj.grid = Grid(std::move(parts));
  traj.X = X;
  return traj;
}

inline VectorXd random_times(std::mt19937_64& rng, Index points) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  VectorXd t(points);
  t(0) = 0.0;
  for (Index k = 1; k < points; ++k) t(k) = t(k - 1) + u(rng);
  return t;
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

/// Hyperparameters with every field drawn from a benign range.
inline HyperState random_hyper(std::mt19937_64& rng, Index n, Index d) {
  std::uniform_real_distribution<double> u(0.2, 1.5);
  std::bernoulli_distribution on(0.6);
  HyperState h;
  h.S.resize(n, d);
  h.H.resize(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) {
      h.S(i, j) = on(rng);
      h.H(i, j) = u(rng);
    }
  auto vec = [&](Index size) {
    VectorXd v(size);
    for (Index k = 0; k < size; ++k) v(k) = u(rng);
    return v;
  };
  h.gamma = vec(n);
  h.q = vec(n);
  h.r = vec(n);
  h.a = vec(n);
  h.b = vec(n);
  h.M_ss = vec(n);
  h.M_ko = vec(n);
  return h;
}

/// Single fully observed series with the given times and values.
inline Dataset dataset(const VectorXd& time, const MatrixXd& values) {
  Dataset d;
  for (Index j = 0; j < values.cols(); ++j) d.names.push_back("g" + std::to_string(j));
  Series s;
  s.time = time;
  s.values = values;
  s.observed = MaskMatrix::Constant(values.rows(), values.cols(), true);
  d.series.push_back(s);
  return d;
}

}  // namespace gpdyn::testing_support
