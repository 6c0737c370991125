#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/grid.hpp>
#include <gpdyn/sampler.hpp>

#include <vector>

namespace gpdyn {

enum class DriftKind { linear, saturating };

/// Parametric test system dx = f(x) dt + dw with w ~ Brownian(diag(Q)).
///
/// linear:      f(x) = A (x - x_star)
/// saturating:  f_i(x) = basal_i - decay_i x_i + sum_j W(i,j) x_j / (K + |x_j|)
///
/// adjacency(i, j) = 1 iff f_i depends on x_j (link j -> i), which matches
/// the orientation of the indicator matrix.
struct SyntheticModel {
  Index n{0};
  MaskMatrix adjacency;
  DriftKind kind{DriftKind::linear};

  MatrixXd A;        // linear
  VectorXd x_star;   // linear

  MatrixXd W;        // saturating, zero diagonal
  VectorXd basal;
  VectorXd decay;
  double half_saturation{0.5};

  VectorXd Q;  // process noise variance per unit time
  VectorXd R;  // measurement noise variance

  VectorXd drift(const VectorXd& x) const;
};

/// Random stable linear network: unit degradation on the diagonal plus
/// `links` off-diagonal couplings with |weight| in [w_lo, w_hi] and random
/// sign, rescaled if necessary until A is Hurwitz.
SyntheticModel random_linear_model(Index n, Index links, Rng& rng, double w_lo = 0.6,
                                   double w_hi = 1.2);

/// Saturating-regulation counterpart of random_linear_model.
SyntheticModel random_saturating_model(Index n, Index links, Rng& rng);

/// Euler-Maruyama with fresh N(0, Q delta) increments; one series grid.
Trajectory simulate_euler(const SyntheticModel& model, const VectorXd& x0, const SeriesGrid& grid,
                          Rng& rng);

/// Euler recursion driven by given Brownian increments (rows = steps).
MatrixXd euler_path(const SyntheticModel& model, const VectorXd& x0, const VectorXd& tau,
                    const MatrixXd& dW);

struct ConvergenceRow {
  double mesh;
  double sup_error;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  double slope{0.0};  // least-squares slope of log error against log mesh
};

/// Strong-error study on [0, T]. One Brownian path is drawn on a grid of
/// 2^finest_level equal steps; coarse grids sum its increments. Each coarse
/// scheme is evaluated through its continuous interpolant
///   X(t) = X_k + (t - tau_k) f(X_k) + w_t - w_{tau_k}
/// on the finest grid. The reference is the exact flow for a deterministic
/// linear model and the finest Euler solution otherwise; `levels` counts
/// coarse grids, halving from 2^coarsest_level steps.
ConvergenceResult convergence_experiment(const SyntheticModel& model, const VectorXd& x0, double T,
                                         int coarsest_level, int levels, int finest_level,
                                         Rng& rng);

struct SyntheticData {
  Dataset data;
  MaskMatrix truth;  // n x n, adjacency of the model
  std::vector<Trajectory> latent;  // fine-grid paths per series
};

struct DatasetDesign {
  Index n_series{5};
  Index m_points{21};
  double interval{1.0};
  Index fine_steps{20};        // Euler steps per measurement interval
  double x0_spread{1.0};       // initial states x_star +- spread * U(-1, 1) (linear)
};

/// Simulate series on a fine grid, subsample and add N(0, R) noise.
SyntheticData make_dataset(const SyntheticModel& model, const DatasetDesign& design, Rng& rng);

/// Noise-free steady state with `gene` clamped at zero, found by
/// integrating the deterministic drift until it stops moving.
VectorXd knockout_steady_state(const SyntheticModel& model, Index gene);

/// Deterministic steady state of the unperturbed system.
VectorXd wild_type_steady_state(const SyntheticModel& model);

}  // namespace gpdyn
