#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/density.hpp>
#include <gpdyn/grid.hpp>
#include <gpdyn/hyperstate.hpp>
#include <gpdyn/priors.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gpdyn {

using Rng = std::mt19937_64;

enum class TrajectoryProposal { basis, crank_nicolson };

std::string to_string(TrajectoryProposal p);
TrajectoryProposal proposal_from_string(const std::string& s);

struct SamplerConfig {
  Index n_burn{3000};
  Index n_samples{10000};
  Index thinning{10};

  double step_hyper{0.05};   // relative to each parameter's prior scale
  double step_noise{0.05};   // q and r walks, relative to initial values
  double step_traj{0.05};    // variance of basis coefficients
  double cn_epsilon{0.1};
  double step_pseudo{0.05};  // relative to the data hypercube width
  double step_steady{0.2};   // relative to the x_ss prior covariance

  TrajectoryProposal proposal{TrajectoryProposal::crank_nicolson};
  Index refinement{3};
  bool use_pseudo_inputs{true};
  Index n_pseudo{0};  // 0 selects min(20, transitions)
  double jitter{1e-6};

  std::optional<double> eta;  // link prior weight, default 1/n
  bool adapt{true};           // Robbins-Monro during burn-in only
  double target_accept{0.25};
  bool freeze_self_links{false};
  bool prior_only{false};     // ignore the data; sample hyperparameters from the prior
  bool store_samples{false};

  std::uint64_t seed{1};
  Index n_chains{1};

  void validate() const;
};

struct BlockTally {
  std::uint64_t proposed{0};
  std::uint64_t accepted{0};
  double rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

/// Thinned draw of the continuous hyperparameters.
struct HyperSample {
  VectorXd gamma, a, b, q, r;
  MatrixXd H;
};

struct ChainOutput {
  MatrixXd S_sum;                      // n x d
  Index n_collected{0};
  std::map<std::string, BlockTally> acceptance;  // post-burn-in sweeps
  std::uint64_t degenerate_proposals{0};
  std::uint64_t seed{0};
  /// (n_collected, S_sum) snapshots for convergence curves.
  std::vector<std::pair<Index, MatrixXd>> trace;
  std::vector<HyperSample> hyper_samples;   // only with store_samples
  std::vector<MaskMatrix> S_samples;        // only with store_samples

  MatrixXd mean() const;
};

/// Everything that evolves along one chain.
struct ChainState {
  HyperState hyper;
  Trajectory traj;
  MatrixXd lower;          // cached traj.lower_states()
  VectorXd log_factors;    // cached log P_i
  Rng rng;
  std::uint64_t sweep{0};

  // Adaptive multipliers on the log scale.
  VectorXd log_scale_hyper;
  VectorXd log_scale_r;
  VectorXd log_scale_q;
  double log_scale_traj{0.0};
  double log_scale_pseudo{0.0};
  double log_scale_steady{0.0};

  bool adapting{false};

  std::map<std::string, BlockTally> acceptance;
  std::uint64_t degenerate{0};
};

// ---------------------------------------------------------------------------
// Proposal kernels

/// Toggles one uniformly drawn entry of `row`; entries listed in `locked`
/// are never chosen. Returns the new row and the toggled index.
std::pair<MaskMatrix, Index> propose_indicator_flip(const MaskMatrix& row, Rng& rng,
                                                    const std::vector<Index>& locked = {});

/// |value + N(0, step^2)|.
double propose_rw_reflected(double value, double step, Rng& rng);

/// Reflected walk confined to [lo, hi] (mirror at both walls).
double propose_rw_reflected_box(double value, double step, double lo, double hi, Rng& rng);

/// (M+1) x 2 floor(M/2) matrix of damped sines then damped cosines on tau.
MatrixXd basis_matrix(const VectorXd& tau);

/// x + B g with g ~ N(0, eps I).
VectorXd propose_trajectory_basis(const VectorXd& x, const MatrixXd& B, double eps, Rng& rng);

/// Crank-Nicolson move m + sqrt(1 - eps^2)(x - m) + eps xi with xi drawn by
/// `draw_xi(rng)` from N(0, P). Leaves N(m, P) invariant.
template <typename DrawXi>
MatrixXd cn_proposal(const MatrixXd& x, const MatrixXd& mean, DrawXi&& draw_xi, double eps,
                     Rng& rng) {
  if (!(eps > 0.0) || eps > 1.0) {
    throw std::invalid_argument("cn_proposal: eps must lie in (0, 1]");
  }
  const MatrixXd xi = draw_xi(rng);
  return mean + std::sqrt(1.0 - eps * eps) * (x - mean) + eps * xi;
}

/// Gaussian reference measure used by the Crank-Nicolson trajectory move:
/// measurement-time values ~ N(y_j, r_i) independently, and between
/// consecutive measurement times a Brownian bridge with variance q_i per
/// unit time. Unobserved knots use interpolated targets.
class BridgeReference {
 public:
  BridgeReference() = default;
  BridgeReference(const Dataset& data, const Grid& grid);

  /// Mean of the reference, rows x n_genes.
  const MatrixXd& mean() const { return mean_; }

  /// Draw from N(0, P) for gene noise levels q and r.
  MatrixXd sample_centered(const VectorXd& q, const VectorXd& r, Rng& rng) const;

  /// log density of the gene columns of X, up to a constant depending only
  /// on q and r.
  double log_density(const MatrixXd& X, const VectorXd& q, const VectorXd& r) const;

  /// Pointwise marginal variance of the reference, rows x n_genes.
  MatrixXd marginal_variance(const VectorXd& q, const VectorXd& r) const;

 private:
  struct Interval {
    Index row0, row1;  // knot rows; interior rows lie strictly between
    double t0, t1;
  };
  std::vector<Index> knot_rows_;
  std::vector<Interval> intervals_;
  VectorXd tau_;     // time of every row
  MatrixXd target_;  // knots x n
  MatrixXd mean_;
  Index n_genes_{0};
};

// ---------------------------------------------------------------------------
// The chain

/// Immutable model context shared by the blocks of one or many chains.
class GibbsSampler {
 public:
  /// `data` must already be scaled; it is copied.
  GibbsSampler(Dataset data, SamplerConfig cfg);

  const Dataset& data() const { return data_; }
  const SamplerConfig& config() const { return cfg_; }
  const DataStats& stats() const { return stats_; }
  const Grid& grid() const { return grid_; }
  const AugmentationData* augmentation() const { return aug_ ? &*aug_ : nullptr; }
  const BridgeReference& reference() const { return reference_; }
  double eta() const { return eta_; }

  ChainState initial_state(std::uint64_t seed, Index chain_index = 0) const;

  /// Recompute every cached quantity of `state` from scratch.
  void refresh(ChainState& state) const;

  void gibbs_hyper_block(Index i, ChainState& state) const;
  void gibbs_R_block(ChainState& state) const;
  void gibbs_trajectory_Q_block(ChainState& state) const;
  void pseudo_input_block(ChainState& state) const;
  void steady_state_block(ChainState& state) const;

  /// One full Gibbs sweep; adapts step sizes when `adapting`.
  void sweep(ChainState& state, bool adapting) const;

  /// log target of the trajectory block (factors + data fit), current q, r.
  double log_trajectory_target(const ChainState& state, const Trajectory& traj,
                               VectorXd* factors_out = nullptr) const;

 private:
  bool accept(double log_ratio, Rng& rng) const;
  void adapt(double& log_scale, bool accepted, const ChainState& state) const;
  void tally(ChainState& state, const char* block, bool accepted) const;
  double log_factor_at(Index i, const HyperState& hyper, const Trajectory& traj,
                       const MatrixXd& lower) const;
  void hyper_move(Index i, ChainState& state, bool flip) const;
  void trajectory_basis_move(ChainState& state) const;
  void trajectory_cn_move(ChainState& state) const;
  void q_move(ChainState& state) const;

  Dataset data_;
  SamplerConfig cfg_;
  DataStats stats_;
  Grid grid_;
  std::optional<AugmentationData> aug_;
  BridgeReference reference_;
  std::vector<MatrixXd> basis_;  // per series
  VectorXd box_lo_, box_hi_;     // data hypercube
  VectorXd q_scale_, r_scale_;   // walk scales
  double eta_{0.5};
};

/// Augmentation blocks from the steady-state part of a (scaled) dataset.
/// Returns nullopt when the dataset has no steady-state data.
std::optional<AugmentationData> build_augmentation(const Dataset& data, double ridge = 1e-4);

/// Burn-in followed by n_samples * thinning sweeps, collecting S every
/// `thinning` sweeps. Deterministic given (cfg.seed, chain_index).
ChainOutput run_chain(const Dataset& scaled, const SamplerConfig& cfg, Index chain_index = 0);

/// Resumable form: continues `state` until the configured length, calling
/// `on_progress` every `checkpoint_every` sweeps (if positive).
class ChainRunner {
 public:
  ChainRunner(const GibbsSampler& sampler, Index chain_index);
  ChainRunner(const GibbsSampler& sampler, ChainState state, ChainOutput partial);

  template <typename F>
  ChainOutput run(std::uint64_t checkpoint_every, F&& on_progress) {
    const auto& cfg = sampler_->config();
    const auto total = static_cast<std::uint64_t>(cfg.n_burn + cfg.n_samples * cfg.thinning);
    while (state_.sweep < total) {
      step();
      if (checkpoint_every > 0 && state_.sweep % checkpoint_every == 0) on_progress(*this);
    }
    finish();
    return output_;
  }
  ChainOutput run() {
    return run(0, [](const ChainRunner&) {});
  }

  const ChainState& state() const { return state_; }
  const ChainOutput& output() const { return output_; }

 private:
  void step();
  void finish();

  const GibbsSampler* sampler_;
  ChainState state_;
  ChainOutput output_;
  std::uint64_t trace_every_{1};
};

/// Count-weighted pooled posterior link probabilities.
MatrixXd pool_chains(const std::vector<ChainOutput>& outputs);

}  // namespace gpdyn
