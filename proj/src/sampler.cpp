#include <gpdyn/sampler.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gpdyn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double std_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

VectorXd normal_vector(Index size, Rng& rng) {
  VectorXd v(size);
  for (Index k = 0; k < size; ++k) v(k) = std_normal(rng);
  return v;
}

double floored(double v) { return std::max(v, 1e-9); }

// Sum of squared residuals and observation count of one gene.
std::pair<double, Index> residual_sq(const Dataset& data, const Trajectory& traj, Index gene) {
  double sq = 0.0;
  Index count = 0;
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const Series& ser = data.series[s];
    for (Index j = 0; j < ser.length(); ++j) {
      if (!ser.observed(j, gene)) continue;
      const double e =
          ser.values(j, gene) - traj.X(traj.grid.measurement_row(s, static_cast<std::size_t>(j)), gene);
      sq += e * e;
      ++count;
    }
  }
  return {sq, count};
}

double gaussian_fit(double sq, Index count, double r) {
  return -0.5 * (static_cast<double>(count) * std::log(r) + sq / r);
}

}  // namespace

std::string to_string(TrajectoryProposal p) {
  return p == TrajectoryProposal::basis ? "basis" : "crank-nicolson";
}

TrajectoryProposal proposal_from_string(const std::string& s) {
  if (s == "basis") return TrajectoryProposal::basis;
  if (s == "crank-nicolson" || s == "cn") return TrajectoryProposal::crank_nicolson;
  throw std::invalid_argument("unknown trajectory proposal '" + s + "'");
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("SamplerConfig: " + m); };
  if (n_burn < 0 || n_samples < 0) fail("n_burn and n_samples must be nonnegative");
  if (thinning < 1) fail("thinning must be >= 1");
  if (!(cn_epsilon > 0.0 && cn_epsilon < 1.0)) fail("cn_epsilon must lie in (0, 1)");
  if (refinement < 1) fail("refinement must be >= 1");
  if (!(step_hyper > 0.0 && step_noise > 0.0 && step_traj > 0.0 && step_pseudo > 0.0 &&
        step_steady > 0.0)) {
    fail("step sizes must be positive");
  }
  if (!(target_accept > 0.0 && target_accept < 1.0)) fail("target_accept must lie in (0, 1)");
  if (!(jitter > 0.0)) fail("jitter must be positive");
  if (n_pseudo < 0) fail("n_pseudo must be nonnegative");
  if (n_chains < 1) fail("n_chains must be >= 1");
  if (eta && !(*eta > 0.0)) fail("eta must be positive");
}

MatrixXd ChainOutput::mean() const {
  if (n_collected == 0) return MatrixXd::Zero(S_sum.rows(), S_sum.cols());
  return S_sum / static_cast<double>(n_collected);
}

// ---------------------------------------------------------------------------

std::pair<MaskMatrix, Index> propose_indicator_flip(const MaskMatrix& row, Rng& rng,
                                                    const std::vector<Index>& locked) {
  std::vector<Index> free;
  for (Index j = 0; j < row.size(); ++j) {
    if (std::find(locked.begin(), locked.end(), j) == locked.end()) free.push_back(j);
  }
  if (free.empty()) return {row, -1};
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const Index j = free[pick(rng)];
  MaskMatrix out = row;
  out(j) = !out(j);
  return {out, j};
}

double propose_rw_reflected(double value, double step, Rng& rng) {
  return std::abs(value + step * std_normal(rng));
}

double propose_rw_reflected_box(double value, double step, double lo, double hi, Rng& rng) {
  if (!(hi > lo)) return lo;
  double v = value + step * std_normal(rng);
  const double width = hi - lo;
  // Fold onto [lo, hi] with period 2 * width.
  double u = std::fmod(v - lo, 2.0 * width);
  if (u < 0.0) u += 2.0 * width;
  v = u <= width ? lo + u : hi - (u - width);
  return v;
}

MatrixXd basis_matrix(const VectorXd& tau) {
  const Index M = tau.size() - 1;
  const Index mb = M / 2;
  MatrixXd B(tau.size(), 2 * mb);
  if (mb == 0) return B;
  const double T = tau(M) - tau(0);
  for (Index j = 1; j <= mb; ++j) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(j) / T;
    const double damp = 1.0 / static_cast<double>(j);
    B.col(j - 1) = damp * (w * tau.array()).sin().matrix();
    B.col(mb + j - 1) = damp * (w * tau.array()).cos().matrix();
  }
  return B;
}

VectorXd propose_trajectory_basis(const VectorXd& x, const MatrixXd& B, double eps, Rng& rng) {
  if (B.rows() != x.size()) throw std::invalid_argument("propose_trajectory_basis: dimension mismatch");
  if (B.cols() == 0) return x;
  return x + std::sqrt(eps) * (B * normal_vector(B.cols(), rng));
}

// ---------------------------------------------------------------------------

BridgeReference::BridgeReference(const Dataset& data, const Grid& grid) : n_genes_(data.n_genes()) {
  const Trajectory init = interpolate_trajectory(data, grid);
  tau_.resize(grid.rows());
  for (const auto& sg : grid.series()) tau_.segment(sg.offset, sg.points()) = sg.tau;

  for (std::size_t s = 0; s < grid.series().size(); ++s) {
    const SeriesGrid& sg = grid.series()[s];
    for (std::size_t j = 0; j < sg.meas_index.size(); ++j) {
      knot_rows_.push_back(grid.measurement_row(s, j));
      if (j > 0) {
        const Index r0 = grid.measurement_row(s, j - 1);
        const Index r1 = grid.measurement_row(s, j);
        intervals_.push_back({r0, r1, tau_(r0), tau_(r1)});
      }
    }
  }

  target_.resize(static_cast<Index>(knot_rows_.size()), n_genes_);
  Index k = 0;
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const Series& ser = data.series[s];
    for (Index j = 0; j < ser.length(); ++j, ++k) {
      for (Index i = 0; i < n_genes_; ++i) {
        target_(k, i) = ser.observed(j, i) ? ser.values(j, i) : init.X(knot_rows_[k], i);
      }
    }
  }

  mean_ = MatrixXd::Zero(grid.rows(), n_genes_);
  for (std::size_t kk = 0; kk < knot_rows_.size(); ++kk) {
    mean_.row(knot_rows_[kk]) = target_.row(static_cast<Index>(kk));
  }
  for (const auto& iv : intervals_) {
    for (Index row = iv.row0 + 1; row < iv.row1; ++row) {
      const double w = (tau_(row) - iv.t0) / (iv.t1 - iv.t0);
      mean_.row(row) = (1.0 - w) * mean_.row(iv.row0) + w * mean_.row(iv.row1);
    }
  }
}

MatrixXd BridgeReference::sample_centered(const VectorXd& q, const VectorXd& r, Rng& rng) const {
  MatrixXd xi = MatrixXd::Zero(mean_.rows(), n_genes_);
  for (Index row : knot_rows_) {
    for (Index i = 0; i < n_genes_; ++i) xi(row, i) = std::sqrt(r(i)) * std_normal(rng);
  }
  for (const auto& iv : intervals_) {
    const double span = iv.t1 - iv.t0;
    for (Index i = 0; i < n_genes_; ++i) {
      // Brownian path from zero over the interval, pinned back to zero.
      double w = 0.0;
      std::vector<double> path;
      path.reserve(static_cast<std::size_t>(iv.row1 - iv.row0));
      for (Index row = iv.row0 + 1; row <= iv.row1; ++row) {
        w += std::sqrt(q(i) * (tau_(row) - tau_(row - 1))) * std_normal(rng);
        path.push_back(w);
      }
      const double w_end = path.back();
      for (Index row = iv.row0 + 1; row < iv.row1; ++row) {
        const double frac = (tau_(row) - iv.t0) / span;
        const double bridge = path[static_cast<std::size_t>(row - iv.row0 - 1)] - frac * w_end;
        xi(row, i) = (1.0 - frac) * xi(iv.row0, i) + frac * xi(iv.row1, i) + bridge;
      }
    }
  }
  return xi;
}

double BridgeReference::log_density(const MatrixXd& X, const VectorXd& q, const VectorXd& r) const {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double lp = 0.0;
  for (std::size_t k = 0; k < knot_rows_.size(); ++k) {
    for (Index i = 0; i < n_genes_; ++i) {
      const double e = X(knot_rows_[k], i) - target_(static_cast<Index>(k), i);
      lp -= 0.5 * (kLog2Pi + std::log(r(i)) + e * e / r(i));
    }
  }
  for (const auto& iv : intervals_) {
    for (Index i = 0; i < n_genes_; ++i) {
      // Bridge density = product of step densities / density of the total increment.
      for (Index row = iv.row0 + 1; row <= iv.row1; ++row) {
        const double v = q(i) * (tau_(row) - tau_(row - 1));
        const double e = X(row, i) - X(row - 1, i);
        lp -= 0.5 * (kLog2Pi + std::log(v) + e * e / v);
      }
      const double v = q(i) * (iv.t1 - iv.t0);
      const double e = X(iv.row1, i) - X(iv.row0, i);
      lp += 0.5 * (kLog2Pi + std::log(v) + e * e / v);
    }
  }
  return lp;
}

MatrixXd BridgeReference::marginal_variance(const VectorXd& q, const VectorXd& r) const {
  MatrixXd var = MatrixXd::Zero(mean_.rows(), n_genes_);
  for (Index row : knot_rows_) var.row(row) = r.transpose();
  for (const auto& iv : intervals_) {
    for (Index row = iv.row0 + 1; row < iv.row1; ++row) {
      const double f = (tau_(row) - iv.t0) / (iv.t1 - iv.t0);
      for (Index i = 0; i < n_genes_; ++i) {
        var(row, i) = ((1.0 - f) * (1.0 - f) + f * f) * r(i) +
                      q(i) * (tau_(row) - iv.t0) * (iv.t1 - tau_(row)) / (iv.t1 - iv.t0);
      }
    }
  }
  return var;
}

// ---------------------------------------------------------------------------

std::optional<AugmentationData> build_augmentation(const Dataset& data, double ridge) {
  if (!data.has_steady_state_data()) return std::nullopt;
  const Index n = data.n_genes();
  const Index d = data.dim();
  AugmentationData aug;
  aug.ko_points.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::vector<const VectorXd*> rows;
    for (const auto& p : data.perturbations) {
      if (p.gene != i) rows.push_back(&p.state);
    }
    MatrixXd m(static_cast<Index>(rows.size()), d);
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Index>(k)) = rows[k]->transpose();
    aug.ko_points[static_cast<std::size_t>(i)] = std::move(m);
  }

  std::vector<VectorXd> pts = data.steady_states;
  for (const auto& p : data.perturbations) pts.push_back(p.state);
  const double count = static_cast<double>(pts.size());
  aug.x_ss_mean = VectorXd::Zero(d);
  for (const auto& p : pts) aug.x_ss_mean += p;
  aug.x_ss_mean /= count;
  MatrixXd cov = MatrixXd::Zero(d, d);
  if (pts.size() >= 2) {
    for (const auto& p : pts) {
      const VectorXd c = p - aug.x_ss_mean;
      cov += c * c.transpose();
    }
    cov /= (count - 1.0);
  }
  cov.diagonal().array() += ridge;
  aug.x_ss_cov = cov / count;
  aug.x_ss_cov_llt.compute(aug.x_ss_cov);
  if (aug.x_ss_cov_llt.info() != Eigen::Success) {
    throw NumericalDegeneracy("steady-state prior covariance is not positive definite");
  }
  return aug;
}

GibbsSampler::GibbsSampler(Dataset data, SamplerConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
  cfg_.validate();
  data_.validate();
  stats_ = compute_data_stats(data_);
  grid_ = build_grid(data_, cfg_.refinement);
  aug_ = build_augmentation(data_);
  reference_ = BridgeReference(data_, grid_);
  for (const auto& sg : grid_.series()) basis_.push_back(basis_matrix(sg.tau));

  const Index n = data_.n_genes();
  const Index d = data_.dim();
  eta_ = cfg_.eta.value_or(1.0 / static_cast<double>(n));

  box_lo_ = VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  box_hi_ = VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  auto visit = [&](Index j, double v) {
    box_lo_(j) = std::min(box_lo_(j), v);
    box_hi_(j) = std::max(box_hi_(j), v);
  };
  for (const auto& s : data_.series) {
    for (Index k = 0; k < s.length(); ++k) {
      for (Index j = 0; j < d; ++j) {
        if (s.observed(k, j)) visit(j, s.values(k, j));
      }
    }
  }
  for (const auto& p : data_.perturbations) {
    for (Index j = 0; j < d; ++j) visit(j, p.state(j));
  }
  for (const auto& v : data_.steady_states) {
    for (Index j = 0; j < d; ++j) visit(j, v(j));
  }

  double dt_sum = 0.0;
  for (const auto& s : data_.series) dt_sum += (s.time(s.length() - 1) - s.time(0)) / static_cast<double>(s.length() - 1);
  const double dt_mean = dt_sum / static_cast<double>(data_.series.size());
  q_scale_.resize(n);
  r_scale_.resize(n);
  for (Index i = 0; i < n; ++i) {
    q_scale_(i) = std::max(1e-6, 0.1 * stats_.deriv_sq(i) * dt_mean);
    r_scale_(i) = std::max(1e-6, 0.01 * stats_.range(i) * stats_.range(i));
  }
}

ChainState GibbsSampler::initial_state(std::uint64_t seed, Index chain_index) const {
  const Index n = data_.n_genes();
  const Index d = data_.dim();
  ChainState st;
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain_index)};
  st.rng.seed(seq);

  HyperState& h = st.hyper;
  h.S = MaskMatrix::Constant(n, d, false);
  if (cfg_.freeze_self_links) {
    for (Index i = 0; i < n; ++i) h.S(i, i) = true;
  }
  h.H.resize(n, d);
  for (Index j = 0; j < d; ++j) h.H.col(j).setConstant(floored(stats_.range(j)));
  h.gamma.resize(n);
  for (Index i = 0; i < n; ++i) h.gamma(i) = floored(stats_.deriv_sq(i));
  h.a = VectorXd::Zero(n);
  h.b = VectorXd::Zero(n);
  h.q = q_scale_;
  h.r = r_scale_;
  h.M_ss.resize(n);
  h.M_ko.resize(n);
  for (Index i = 0; i < n; ++i) h.M_ss(i) = h.M_ko(i) = 0.1 * floored(stats_.deriv_sq(i));
  if (aug_) h.x_ss = aug_->x_ss_mean;

  st.traj = interpolate_trajectory(data_, grid_);
  const MatrixXd lower = st.traj.lower_states();
  if (cfg_.use_pseudo_inputs) {
    const Index L = lower.rows();
    const Index p = cfg_.n_pseudo > 0 ? std::min(cfg_.n_pseudo, L) : std::min<Index>(20, L);
    h.pseudo.points.resize(p, d);
    for (Index k = 0; k < p; ++k) {
      const auto row = static_cast<Index>((static_cast<double>(k) + 0.5) * static_cast<double>(L) /
                                          static_cast<double>(p));
      h.pseudo.points.row(k) = lower.row(std::min(row, L - 1));
    }
    h.pseudo.jitter = cfg_.jitter;
  }

  st.log_scale_hyper = VectorXd::Zero(n);
  st.log_scale_r = VectorXd::Zero(n);
  st.log_scale_q = VectorXd::Zero(n);
  refresh(st);
  return st;
}

double GibbsSampler::log_factor_at(Index i, const HyperState& hyper, const Trajectory& traj,
                                   const MatrixXd& lower) const {
  if (cfg_.prior_only) return 0.0;
  return log_factor(i, hyper, traj, lower, augmentation());
}

void GibbsSampler::refresh(ChainState& st) const {
  st.lower = st.traj.lower_states();
  st.log_factors.resize(data_.n_genes());
  for (Index i = 0; i < data_.n_genes(); ++i) {
    st.log_factors(i) = log_factor_at(i, st.hyper, st.traj, st.lower);
  }
}

bool GibbsSampler::accept(double log_ratio, Rng& rng) const {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform01(rng)) < log_ratio;
}

void GibbsSampler::adapt(double& log_scale, bool accepted, const ChainState& st) const {
  if (!st.adapting) return;
  const double gain = std::pow(static_cast<double>(st.sweep) + 1.0, -0.6);
  log_scale += gain * ((accepted ? 1.0 : 0.0) - cfg_.target_accept);
  log_scale = std::clamp(log_scale, -12.0, 6.0);
}

void GibbsSampler::tally(ChainState& st, const char* block, bool accepted) const {
  auto& t = st.acceptance[block];
  ++t.proposed;
  if (accepted) ++t.accepted;
}

void GibbsSampler::gibbs_hyper_block(Index i, ChainState& st) const {
  hyper_move(i, st, true);
  hyper_move(i, st, false);
}

// With `flip` one indicator of row i toggles together with the walk on the
// continuous hyperparameters. Without it only the walk is proposed; that
// move alone drives step-size adaptation, since rejected flips would
// otherwise shrink the walk toward zero.
void GibbsSampler::hyper_move(Index i, ChainState& st, bool flip) const {
  HyperState& h = st.hyper;
  const Index d = h.dim();
  const AugmentationData* aug = augmentation();

  const MaskMatrix old_S = h.S.row(i);
  const RowVector<double> old_H = h.H.row(i);
  const double old_gamma = h.gamma(i), old_a = h.a(i), old_b = h.b(i);
  const double old_Mss = h.M_ss(i), old_Mko = h.M_ko(i);
  const double old_prior = log_prior_gene(i, h, stats_, eta_, aug);

  const double s = cfg_.step_hyper * std::exp(st.log_scale_hyper(i));
  std::vector<Index> locked;
  if (cfg_.freeze_self_links) locked.push_back(i);
  if (flip) h.S.row(i) = propose_indicator_flip(old_S, st.rng, locked).first;
  for (Index j = 0; j < d; ++j) h.H(i, j) = propose_rw_reflected(h.H(i, j), s * floored(stats_.range(j)), st.rng);
  const double sigma = floored(stats_.deriv_sq(i));
  const double V = floored(stats_.variation(i));
  h.gamma(i) = propose_rw_reflected(h.gamma(i), s * 5.0 * sigma, st.rng);
  h.a(i) = propose_rw_reflected(h.a(i), s * 10.0 * V, st.rng);
  h.b(i) = propose_rw_reflected(h.b(i), s * 5.0 * V, st.rng);
  if (aug != nullptr) {
    if (h.x_ss.size() > 0) h.M_ss(i) = propose_rw_reflected(h.M_ss(i), s * sigma, st.rng);
    if (aug->ko_count(i) > 0) h.M_ko(i) = propose_rw_reflected(h.M_ko(i), s * sigma, st.rng);
  }

  bool accepted = false;
  double new_factor = st.log_factors(i);
  const double new_prior = log_prior_gene(i, h, stats_, eta_, aug);
  if (new_prior > kNegInf) {
    try {
      new_factor = log_factor_at(i, h, st.traj, st.lower);
      accepted = accept(new_factor - st.log_factors(i) + new_prior - old_prior, st.rng);
    } catch (const NumericalDegeneracy&) {
      ++st.degenerate;
    }
  }
  if (accepted) {
    st.log_factors(i) = new_factor;
  } else {
    h.S.row(i) = old_S;
    h.H.row(i) = old_H;
    h.gamma(i) = old_gamma;
    h.a(i) = old_a;
    h.b(i) = old_b;
    h.M_ss(i) = old_Mss;
    h.M_ko(i) = old_Mko;
  }
  if (flip) {
    tally(st, "hyper", accepted);
  } else {
    tally(st, "hyper_walk", accepted);
    adapt(st.log_scale_hyper(i), accepted, st);
  }
}

void GibbsSampler::gibbs_R_block(ChainState& st) const {
  HyperState& h = st.hyper;
  for (Index i = 0; i < data_.n_genes(); ++i) {
    const auto [sq, count] = residual_sq(data_, st.traj, i);
    const double r_old = h.r(i);
    const double r_new =
        propose_rw_reflected(r_old, cfg_.step_noise * r_scale_(i) * std::exp(st.log_scale_r(i)), st.rng);
    const double log_ratio = log_prior_noise_variance(r_new) - log_prior_noise_variance(r_old) +
                             gaussian_fit(sq, count, r_new) - gaussian_fit(sq, count, r_old);
    const bool ok = r_new > 0.0 && accept(log_ratio, st.rng);
    if (ok) h.r(i) = r_new;
    tally(st, "noise_r", ok);
    adapt(st.log_scale_r(i), ok, st);
  }
}

double GibbsSampler::log_trajectory_target(const ChainState& st, const Trajectory& traj,
                                           VectorXd* factors_out) const {
  const MatrixXd lower = traj.lower_states();
  VectorXd f(data_.n_genes());
  for (Index i = 0; i < data_.n_genes(); ++i) f(i) = log_factor_at(i, st.hyper, traj, lower);
  if (factors_out != nullptr) *factors_out = f;
  return f.sum() + log_measurement_fit(data_, traj, st.hyper.r);
}

void GibbsSampler::gibbs_trajectory_Q_block(ChainState& st) const {
  if (cfg_.proposal == TrajectoryProposal::basis) {
    trajectory_basis_move(st);
  } else {
    q_move(st);
    trajectory_cn_move(st);
  }
}

void GibbsSampler::trajectory_basis_move(ChainState& st) const {
  HyperState& h = st.hyper;
  const Index n = data_.n_genes();
  const double eps = cfg_.step_traj * std::exp(st.log_scale_traj);

  Trajectory prop{st.traj.X, grid_};
  for (std::size_t s = 0; s < grid_.series().size(); ++s) {
    const SeriesGrid& sg = grid_.series()[s];
    for (Index i = 0; i < n; ++i) {
      auto col = prop.X.block(sg.offset, i, sg.points(), 1);
      col = propose_trajectory_basis(VectorXd(col), basis_[s], eps, st.rng);
    }
  }
  const VectorXd q_old = h.q;
  double log_ratio = 0.0;
  for (Index i = 0; i < n; ++i) {
    h.q(i) = propose_rw_reflected(h.q(i), cfg_.step_noise * q_scale_(i) * std::exp(st.log_scale_q(i)), st.rng);
    log_ratio += log_prior_noise_variance(h.q(i)) - log_prior_noise_variance(q_old(i));
  }

  bool accepted = false;
  MatrixXd lower;
  VectorXd factors(n);
  if (log_ratio > kNegInf) {
    try {
      lower = prop.lower_states();
      for (Index i = 0; i < n; ++i) factors(i) = log_factor_at(i, h, prop, lower);
      log_ratio += factors.sum() - st.log_factors.sum() +
                   log_measurement_fit(data_, prop, h.r) - log_measurement_fit(data_, st.traj, h.r);
      accepted = accept(log_ratio, st.rng);
    } catch (const NumericalDegeneracy&) {
      ++st.degenerate;
    }
  }
  if (accepted) {
    st.traj.X = std::move(prop.X);
    st.lower = std::move(lower);
    st.log_factors = factors;
  } else {
    h.q = q_old;
  }
  tally(st, "trajectory", accepted);
  adapt(st.log_scale_traj, accepted, st);
}

void GibbsSampler::q_move(ChainState& st) const {
  HyperState& h = st.hyper;
  for (Index i = 0; i < data_.n_genes(); ++i) {
    const double q_old = h.q(i);
    h.q(i) = propose_rw_reflected(q_old, cfg_.step_noise * q_scale_(i) * std::exp(st.log_scale_q(i)), st.rng);
    bool ok = false;
    double f_new = st.log_factors(i);
    const double dprior = log_prior_noise_variance(h.q(i)) - log_prior_noise_variance(q_old);
    if (dprior > kNegInf) {
      try {
        f_new = log_factor_at(i, h, st.traj, st.lower);
        ok = accept(f_new - st.log_factors(i) + dprior, st.rng);
      } catch (const NumericalDegeneracy&) {
        ++st.degenerate;
      }
    }
    if (ok) {
      st.log_factors(i) = f_new;
    } else {
      h.q(i) = q_old;
    }
    tally(st, "noise_q", ok);
    adapt(st.log_scale_q(i), ok, st);
  }
}

void GibbsSampler::trajectory_cn_move(ChainState& st) const {
  const HyperState& h = st.hyper;
  const Index n = data_.n_genes();
  const double eps = std::clamp(cfg_.cn_epsilon * std::exp(st.log_scale_traj), 1e-6, 1.0);

  const MatrixXd current = st.traj.X.leftCols(n);
  Trajectory prop{st.traj.X, grid_};
  prop.X.leftCols(n) = cn_proposal(
      current, reference_.mean(),
      [&](Rng& g) { return reference_.sample_centered(h.q, h.r, g); }, eps, st.rng);

  bool accepted = false;
  MatrixXd lower;
  VectorXd factors(n);
  try {
    lower = prop.lower_states();
    for (Index i = 0; i < n; ++i) factors(i) = log_factor_at(i, h, prop, lower);
    const double phi_new = factors.sum() + log_measurement_fit(data_, prop, h.r) -
                           reference_.log_density(prop.X, h.q, h.r);
    const double phi_old = st.log_factors.sum() + log_measurement_fit(data_, st.traj, h.r) -
                           reference_.log_density(st.traj.X, h.q, h.r);
    accepted = accept(phi_new - phi_old, st.rng);
  } catch (const NumericalDegeneracy&) {
    ++st.degenerate;
  }
  if (accepted) {
    st.traj.X = std::move(prop.X);
    st.lower = std::move(lower);
    st.log_factors = factors;
  }
  tally(st, "trajectory", accepted);
  adapt(st.log_scale_traj, accepted, st);
}

void GibbsSampler::pseudo_input_block(ChainState& st) const {
  HyperState& h = st.hyper;
  if (!h.uses_pseudo_inputs()) return;
  const Index n = data_.n_genes();
  const double s = cfg_.step_pseudo * std::exp(st.log_scale_pseudo);
  const MatrixXd old = h.pseudo.points;
  for (Index k = 0; k < old.rows(); ++k) {
    for (Index j = 0; j < old.cols(); ++j) {
      h.pseudo.points(k, j) = propose_rw_reflected_box(old(k, j), s * (box_hi_(j) - box_lo_(j)),
                                                        box_lo_(j), box_hi_(j), st.rng);
    }
  }
  bool accepted = false;
  VectorXd factors(n);
  try {
    for (Index i = 0; i < n; ++i) factors(i) = log_factor_at(i, h, st.traj, st.lower);
    accepted = accept(factors.sum() - st.log_factors.sum(), st.rng);
  } catch (const NumericalDegeneracy&) {
    ++st.degenerate;
  }
  if (accepted) {
    st.log_factors = factors;
  } else {
    h.pseudo.points = old;
  }
  tally(st, "pseudo_inputs", accepted);
  adapt(st.log_scale_pseudo, accepted, st);
}

void GibbsSampler::steady_state_block(ChainState& st) const {
  HyperState& h = st.hyper;
  if (!aug_ || h.x_ss.size() == 0) return;
  const Index n = data_.n_genes();
  const VectorXd old = h.x_ss;
  const double s = cfg_.step_steady * std::exp(st.log_scale_steady);
  const VectorXd z = normal_vector(old.size(), st.rng);
  const VectorXd step = aug_->x_ss_cov_llt.matrixL() * z;
  h.x_ss = old + s * step;

  bool accepted = false;
  VectorXd factors(n);
  try {
    for (Index i = 0; i < n; ++i) factors(i) = log_factor_at(i, h, st.traj, st.lower);
    const double log_ratio = factors.sum() - st.log_factors.sum() +
                             log_prior_steady_state(h.x_ss, *aug_) - log_prior_steady_state(old, *aug_);
    accepted = accept(log_ratio, st.rng);
  } catch (const NumericalDegeneracy&) {
    ++st.degenerate;
  }
  if (accepted) {
    st.log_factors = factors;
  } else {
    h.x_ss = old;
  }
  tally(st, "steady_state", accepted);
  adapt(st.log_scale_steady, accepted, st);
}

void GibbsSampler::sweep(ChainState& st, bool adapting) const {
  st.adapting = adapting;
  for (Index i = 0; i < data_.n_genes(); ++i) gibbs_hyper_block(i, st);
  if (!cfg_.prior_only) {
    gibbs_R_block(st);
    gibbs_trajectory_Q_block(st);
    pseudo_input_block(st);
    steady_state_block(st);
  }
  ++st.sweep;
}

// ---------------------------------------------------------------------------

ChainRunner::ChainRunner(const GibbsSampler& sampler, Index chain_index)
    : sampler_(&sampler), state_(sampler.initial_state(sampler.config().seed, chain_index)) {
  const auto& h = state_.hyper;
  output_.S_sum = MatrixXd::Zero(h.n_genes(), h.dim());
  output_.seed = sampler.config().seed;
  trace_every_ = static_cast<std::uint64_t>(std::max<Index>(1, sampler.config().n_samples / 100));
}

ChainRunner::ChainRunner(const GibbsSampler& sampler, ChainState state, ChainOutput partial)
    : sampler_(&sampler), state_(std::move(state)), output_(std::move(partial)) {
  sampler.refresh(state_);
  trace_every_ = static_cast<std::uint64_t>(std::max<Index>(1, sampler.config().n_samples / 100));
}

void ChainRunner::step() {
  const auto& cfg = sampler_->config();
  const auto burn = static_cast<std::uint64_t>(cfg.n_burn);
  const bool in_burn = state_.sweep < burn;
  sampler_->sweep(state_, cfg.adapt && in_burn);
  // Reported acceptance rates describe the post-burn-in chain only.
  if (state_.sweep == burn) state_.acceptance.clear();
  if (state_.sweep > burn && (state_.sweep - burn) % static_cast<std::uint64_t>(cfg.thinning) == 0) {
    output_.S_sum += state_.hyper.S.cast<double>();
    ++output_.n_collected;
    if (cfg.store_samples) {
      const auto& h = state_.hyper;
      output_.hyper_samples.push_back({h.gamma, h.a, h.b, h.q, h.r, h.H});
      output_.S_samples.push_back(h.S);
    }
    if (static_cast<std::uint64_t>(output_.n_collected) % trace_every_ == 0) {
      output_.trace.emplace_back(output_.n_collected, output_.S_sum);
    }
  }
}

void ChainRunner::finish() {
  output_.acceptance = state_.acceptance;
  output_.degenerate_proposals = state_.degenerate;
}

ChainOutput run_chain(const Dataset& scaled, const SamplerConfig& cfg, Index chain_index) {
  const GibbsSampler sampler(scaled, cfg);
  ChainRunner runner(sampler, chain_index);
  return runner.run();
}

MatrixXd pool_chains(const std::vector<ChainOutput>& outputs) {
  if (outputs.empty()) throw std::invalid_argument("pool_chains: no chain outputs");
  MatrixXd sum = MatrixXd::Zero(outputs.front().S_sum.rows(), outputs.front().S_sum.cols());
  Index count = 0;
  for (const auto& o : outputs) {
    if (o.S_sum.rows() != sum.rows() || o.S_sum.cols() != sum.cols()) {
      throw std::invalid_argument("pool_chains: incompatible chain dimensions");
    }
    sum += o.S_sum;
    count += o.n_collected;
  }
  if (count == 0) return sum;
  return sum / static_cast<double>(count);
}

}  // namespace gpdyn
