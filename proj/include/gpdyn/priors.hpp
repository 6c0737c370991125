#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/hyperstate.hpp>

namespace gpdyn {

/// Data summaries that set the prior scales, one entry per column.
struct DataStats {
  VectorXd variation;     // V: mean |increment| per time unit
  VectorXd range;         // max - min
  VectorXd deriv_sq;      // sigma(dY): mean squared difference quotient
};

/// Increments are taken between consecutive observed points of a column
/// and pooled across series.
DataStats compute_data_stats(const Dataset& data);

/// Inverse-gamma shape/scale shared by q_i, r_i and M_ss,i.
inline constexpr double kNoisePriorPower = 1.001;
inline constexpr double kNoisePriorScale = 1e-5;
/// gamma_i is truncated at this multiple of sigma(dY_i).
inline constexpr double kGammaTruncation = 30.0;

/// log p(v) up to a constant for the noninformative inverse-gamma prior.
double log_prior_noise_variance(double v);

/// Terms owned by row i: indicators, magnitudes, gamma_i, a_i, b_i and,
/// when augmentation data is present, M_ss,i and M_ko,i.
double log_prior_gene(Index i, const HyperState& hyper, const DataStats& stats, double eta,
                      const AugmentationData* aug = nullptr);

/// Normal prior of the global steady state.
double log_prior_steady_state(const VectorXd& x_ss, const AugmentationData& aug);

/// Full hyperparameter log prior, constants dropped. Returns -infinity
/// outside the support (nonpositive variances, gamma beyond truncation).
double log_prior(const HyperState& hyper, const DataStats& stats, double eta,
                 const AugmentationData* aug = nullptr);

}  // namespace gpdyn
