#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/grid.hpp>
#include <gpdyn/hyperstate.hpp>
#include <gpdyn/kernels.hpp>

namespace gpdyn {

/// Gaussian marginal for one drift component after integrating f_i out:
///
///   residual ~ N(0, W K_i(points) W + diag(noise)),   W = diag(weight)
///
/// Transition rows carry weight delta_k, noise q_i delta_k and residual
/// X_k - X_{k-1} - delta_k m_i(X_{k-1}). Steady-state rows carry weight 1,
/// noise M_ss / M_ko and residual -m_i(point).
struct FactorSystem {
  MatrixXd points;
  VectorXd weight;
  VectorXd noise;
  VectorXd residual;

  Index size() const { return residual.size(); }
};

/// Build the (possibly augmented) factor system of gene i.
FactorSystem assemble_factor_system(Index i, const HyperState& hyper, const Trajectory& traj,
                                    const AugmentationData* aug = nullptr);

/// Same, reusing precomputed lower states of the trajectory.
FactorSystem assemble_factor_system(Index i, const HyperState& hyper, const Trajectory& traj,
                                    const MatrixXd& lower_states, const AugmentationData* aug);

/// log N(residual; 0, W K W + diag(noise)) with the dense Gram.
double log_factor_exact(const KernelHyperparams<double>& params, const FactorSystem& sys);

/// Same with K replaced by K_XP K_P^{-1} K_XP^T, evaluated through the
/// Woodbury identity and determinant lemma in O(size * p^2).
double log_factor_pseudo(const KernelHyperparams<double>& params, const FactorSystem& sys,
                         const PseudoInputSet<double>& pseudo);

/// log P_i for an unaugmented trajectory, including this factor's share
/// -(M/2) log(2 pi) of the normalising constant.
double log_factor_Pi(Index i, const KernelHyperparams<double>& params, double q_i,
                     const Trajectory& traj);

/// sum_i log P_i with dense Grams. The initial-state density is part of
/// log_measurement_fit, not of this term.
double log_p_trajectory(const HyperState& hyper, const Trajectory& traj,
                        const AugmentationData* aug = nullptr);

/// sum_i log P_i with the pseudo-input approximation.
double log_p_trajectory_pseudo(const HyperState& hyper, const Trajectory& traj,
                               const PseudoInputSet<double>& pseudo,
                               const AugmentationData* aug = nullptr);

/// Dispatches on hyper.uses_pseudo_inputs().
double log_factor(Index i, const HyperState& hyper, const Trajectory& traj,
                  const MatrixXd& lower_states, const AugmentationData* aug);

/// sum_j log N(y_j; X[row_j], diag(r)) over observed gene entries.
double log_measurement_fit(const Dataset& data, const Trajectory& traj, const VectorXd& r);

/// Contribution of gene `gene` only.
double log_measurement_fit_gene(const Dataset& data, const Trajectory& traj, Index gene,
                                double r_gene);

/// Number of observed entries of gene `gene` over all series.
Index observed_count(const Dataset& data, Index gene);

}  // namespace gpdyn
