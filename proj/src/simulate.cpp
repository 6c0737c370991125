#include <gpdyn/simulate.hpp>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gpdyn {

namespace {

double normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

// Off-diagonal positions chosen uniformly without replacement.
std::vector<std::pair<Index, Index>> pick_links(Index n, Index links, Rng& rng) {
  std::vector<std::pair<Index, Index>> all;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j) all.emplace_back(i, j);
    }
  }
  if (links > static_cast<Index>(all.size())) throw std::invalid_argument("too many links requested");
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(links));
  return all;
}

bool hurwitz(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return (es.eigenvalues().real().array() < -1e-3).all();
}

VectorXd integrate_to_rest(const SyntheticModel& model, VectorXd x, const std::vector<Index>& clamp) {
  const double dt = 0.01;
  for (int it = 0; it < 200000; ++it) {
    VectorXd f = model.drift(x);
    for (Index g : clamp) f(g) = 0.0;
    x += dt * f;
    if (f.lpNorm<Eigen::Infinity>() < 1e-12) break;
  }
  return x;
}

}  // namespace

VectorXd SyntheticModel::drift(const VectorXd& x) const {
  if (x.size() != n) throw std::invalid_argument("SyntheticModel::drift: dimension mismatch");
  if (kind == DriftKind::linear) return A * (x - x_star);
  VectorXd sat(n);
  for (Index j = 0; j < n; ++j) sat(j) = x(j) / (half_saturation + std::abs(x(j)));
  return basal - decay.cwiseProduct(x) + W * sat;
}

SyntheticModel random_linear_model(Index n, Index links, Rng& rng, double w_lo, double w_hi) {
  SyntheticModel m;
  m.n = n;
  m.kind = DriftKind::linear;
  m.adjacency = MaskMatrix::Identity(n, n);
  m.A = -MatrixXd::Identity(n, n);
  for (const auto& [i, j] : pick_links(n, links, rng)) {
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    m.A(i, j) = sign * uniform(rng, w_lo, w_hi);
    m.adjacency(i, j) = true;
  }
  MatrixXd off = m.A + MatrixXd::Identity(n, n);
  while (!hurwitz(m.A)) {
    off *= 0.8;
    m.A = off - MatrixXd::Identity(n, n);
  }
  m.x_star.resize(n);
  for (Index i = 0; i < n; ++i) m.x_star(i) = uniform(rng, 1.0, 2.0);
  m.Q = VectorXd::Constant(n, 1e-3);
  m.R = VectorXd::Constant(n, 1e-3);
  return m;
}

SyntheticModel random_saturating_model(Index n, Index links, Rng& rng) {
  SyntheticModel m;
  m.n = n;
  m.kind = DriftKind::saturating;
  m.adjacency = MaskMatrix::Identity(n, n);
  m.W = MatrixXd::Zero(n, n);
  for (const auto& [i, j] : pick_links(n, links, rng)) {
    const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
    m.W(i, j) = sign * uniform(rng, 0.5, 1.0);
    m.adjacency(i, j) = true;
  }
  m.basal = VectorXd::Constant(n, 1.0);
  m.decay = VectorXd::Constant(n, 1.0);
  m.Q = VectorXd::Constant(n, 1e-3);
  m.R = VectorXd::Constant(n, 1e-3);
  return m;
}

MatrixXd euler_path(const SyntheticModel& model, const VectorXd& x0, const VectorXd& tau,
                    const MatrixXd& dW) {
  if (dW.rows() != tau.size() - 1 || dW.cols() != model.n) {
    throw std::invalid_argument("euler_path: increment matrix has wrong shape");
  }
  MatrixXd X(tau.size(), model.n);
  X.row(0) = x0.transpose();
  for (Index k = 1; k < tau.size(); ++k) {
    const VectorXd prev = X.row(k - 1).transpose();
    X.row(k) = (prev + (tau(k) - tau(k - 1)) * model.drift(prev)).transpose() + dW.row(k - 1);
  }
  return X;
}

Trajectory simulate_euler(const SyntheticModel& model, const VectorXd& x0, const SeriesGrid& grid,
                          Rng& rng) {
  const Index steps = grid.points() - 1;
  MatrixXd dW(steps, model.n);
  for (Index k = 0; k < steps; ++k) {
    const double dt = grid.tau(k + 1) - grid.tau(k);
    for (Index i = 0; i < model.n; ++i) dW(k, i) = std::sqrt(model.Q(i) * dt) * normal(rng);
  }
  Trajectory traj;
  traj.grid = Grid({grid});
  traj.X = euler_path(model, x0, grid.tau, dW);
  return traj;
}

ConvergenceResult convergence_experiment(const SyntheticModel& model, const VectorXd& x0, double T,
                                         int coarsest_level, int levels, int finest_level,
                                         Rng& rng) {
  if (coarsest_level < 0 || levels < 2 || coarsest_level + levels - 1 >= finest_level) {
    throw std::invalid_argument("convergence_experiment: need coarse levels strictly below the finest");
  }
  const Index n = model.n;
  const Index N = Index{1} << finest_level;
  const double h = T / static_cast<double>(N);
  const VectorXd tau_f = VectorXd::LinSpaced(N + 1, 0.0, T);

  MatrixXd dW(N, n);
  for (Index k = 0; k < N; ++k) {
    for (Index i = 0; i < n; ++i) dW(k, i) = std::sqrt(model.Q(i) * h) * normal(rng);
  }
  MatrixXd W = MatrixXd::Zero(N + 1, n);  // Brownian path on the fine grid
  for (Index k = 0; k < N; ++k) W.row(k + 1) = W.row(k) + dW.row(k);

  const bool deterministic = (model.Q.array() == 0.0).all();
  MatrixXd reference(N + 1, n);
  if (deterministic && model.kind == DriftKind::linear) {
    for (Index k = 0; k <= N; ++k) {
      const MatrixXd flow = (model.A * tau_f(k)).exp();
      reference.row(k) = (model.x_star + flow * (x0 - model.x_star)).transpose();
    }
  } else {
    reference = euler_path(model, x0, tau_f, dW);
  }

  ConvergenceResult out;
  for (int l = 0; l < levels; ++l) {
    const Index Mc = Index{1} << (coarsest_level + l);
    const Index ratio = N / Mc;
    VectorXd tau_c(Mc + 1);
    MatrixXd dWc(Mc, n);
    for (Index k = 0; k <= Mc; ++k) tau_c(k) = tau_f(k * ratio);
    for (Index k = 0; k < Mc; ++k) dWc.row(k) = W.row((k + 1) * ratio) - W.row(k * ratio);
    const MatrixXd Xc = euler_path(model, x0, tau_c, dWc);

    double err = 0.0;
    for (Index f = 0; f <= N; ++f) {
      const Index k = std::min(f / ratio, Mc - 1);
      const VectorXd xk = Xc.row(k).transpose();
      const VectorXd interp = xk + (tau_f(f) - tau_c(k)) * model.drift(xk) +
                              (W.row(f) - W.row(k * ratio)).transpose();
      err = std::max(err, (interp - reference.row(f).transpose()).lpNorm<Eigen::Infinity>());
    }
    out.rows.push_back({T / static_cast<double>(Mc), err});
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : out.rows) {
    const double x = std::log(r.mesh), y = std::log(r.sup_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(out.rows.size());
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

SyntheticData make_dataset(const SyntheticModel& model, const DatasetDesign& design, Rng& rng) {
  if (design.n_series < 1 || design.m_points < 2 || design.fine_steps < 1 || !(design.interval > 0.0)) {
    throw std::invalid_argument("make_dataset: invalid design");
  }
  const Index n = model.n;
  SyntheticData out;
  out.truth = model.adjacency;
  for (Index i = 0; i < n; ++i) out.data.names.push_back("G" + std::to_string(i + 1));

  const VectorXd centre = model.kind == DriftKind::linear ? model.x_star : wild_type_steady_state(model);
  VectorXd times(design.m_points);
  for (Index j = 0; j < design.m_points; ++j) times(j) = design.interval * static_cast<double>(j);
  const SeriesGrid fine = build_series_grid(times, design.fine_steps);

  for (Index s = 0; s < design.n_series; ++s) {
    VectorXd x0(n);
    for (Index i = 0; i < n; ++i) {
      x0(i) = centre(i) + design.x0_spread * uniform(rng, -1.0, 1.0);
      if (model.kind == DriftKind::saturating) x0(i) = std::max(0.0, x0(i));
    }
    Trajectory traj = simulate_euler(model, x0, fine, rng);
    Series ser;
    ser.time = times;
    ser.values.resize(design.m_points, n);
    ser.observed = MaskMatrix::Constant(design.m_points, n, true);
    for (Index j = 0; j < design.m_points; ++j) {
      for (Index i = 0; i < n; ++i) {
        ser.values(j, i) = traj.X(fine.meas_index[static_cast<std::size_t>(j)], i) +
                           std::sqrt(model.R(i)) * normal(rng);
      }
    }
    out.data.series.push_back(std::move(ser));
    out.latent.push_back(std::move(traj));
  }
  return out;
}

VectorXd wild_type_steady_state(const SyntheticModel& model) {
  if (model.kind == DriftKind::linear) return model.x_star;
  return integrate_to_rest(model, VectorXd::Constant(model.n, 1.0), {});
}

VectorXd knockout_steady_state(const SyntheticModel& model, Index gene) {
  if (gene < 0 || gene >= model.n) throw std::invalid_argument("knockout_steady_state: bad gene");
  VectorXd x = wild_type_steady_state(model);
  x(gene) = 0.0;
  return integrate_to_rest(model, x, {gene});
}

}  // namespace gpdyn
