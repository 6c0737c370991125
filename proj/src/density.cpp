#include <gpdyn/density.hpp>
#include <gpdyn/linalg.hpp>

#include <cmath>
#include <numbers>

namespace gpdyn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double gaussian_log_density(const FactorSystem& sys, double logdet, double quad) {
  return -0.5 * (static_cast<double>(sys.size()) * kLog2Pi + logdet + quad);
}

}  // namespace

FactorSystem assemble_factor_system(Index i, const HyperState& hyper, const Trajectory& traj,
                                    const AugmentationData* aug) {
  return assemble_factor_system(i, hyper, traj, traj.lower_states(), aug);
}

FactorSystem assemble_factor_system(Index i, const HyperState& hyper, const Trajectory& traj,
                                    const MatrixXd& lower_states, const AugmentationData* aug) {
  const Index d = traj.X.cols();
  const Index L = lower_states.rows();
  const bool with_ss = aug != nullptr && hyper.x_ss.size() == d;
  const Index n_ko = aug != nullptr ? aug->ko_count(i) : 0;
  const Index size = L + (with_ss ? 1 : 0) + n_ko;

  FactorSystem sys;
  sys.points.resize(size, d);
  sys.weight.resize(size);
  sys.noise.resize(size);
  sys.residual.resize(size);

  const VectorXd& delta = traj.grid.delta();
  const auto& up = traj.grid.upper_rows();
  const double a = hyper.a(i);
  const double b = hyper.b(i);
  const double q = hyper.q(i);

  sys.points.topRows(L) = lower_states;
  sys.weight.head(L) = delta;
  sys.noise.head(L) = q * delta;
  for (Index k = 0; k < L; ++k) {
    const double mean = b - a * lower_states(k, i);
    sys.residual(k) = traj.X(up[k], i) - lower_states(k, i) - delta(k) * mean;
  }

  Index row = L;
  if (with_ss) {
    sys.points.row(row) = hyper.x_ss.transpose();
    sys.weight(row) = 1.0;
    sys.noise(row) = hyper.M_ss(i);
    sys.residual(row) = -(b - a * hyper.x_ss(i));
    ++row;
  }
  for (Index k = 0; k < n_ko; ++k, ++row) {
    const auto p = aug->ko_points[i].row(k);
    sys.points.row(row) = p;
    sys.weight(row) = 1.0;
    sys.noise(row) = hyper.M_ko(i);
    sys.residual(row) = -(b - a * p(i));
  }
  return sys;
}

double log_factor_exact(const KernelHyperparams<double>& params, const FactorSystem& sys) {
  MatrixXd C = gram_matrix(params, sys.points, sys.points);
  C.array().colwise() *= sys.weight.array();
  C.array().rowwise() *= sys.weight.transpose().array();
  C.diagonal() += sys.noise;
  const auto fact = cholesky_with_jitter(C, 0.0, 1e-4 * params.gamma);
  const VectorXd half = fact.llt.matrixL().solve(sys.residual);
  return gaussian_log_density(sys, log_det(fact.llt), half.squaredNorm());
}

double log_factor_pseudo(const KernelHyperparams<double>& params, const FactorSystem& sys,
                         const PseudoInputSet<double>& pseudo) {
  const auto f = pseudo_gram_factors(params, sys.points, pseudo);
  const VectorXd inv_sqrt_noise = sys.noise.array().rsqrt();
  // G = S^{-1/2} W K_XP, so K_XP^T W S^{-1} W K_XP = G^T G.
  MatrixXd G = f.K_XP;
  G.array().colwise() *= (sys.weight.array() * inv_sqrt_noise.array());
  const VectorXd r_white = sys.residual.cwiseProduct(inv_sqrt_noise);

  MatrixXd A = f.K_P;
  A.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose());
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
  const auto A_fact = cholesky_with_jitter(A, 0.0, 1e-4 * params.gamma);

  const VectorXd proj = A_fact.llt.matrixL().solve(G.transpose() * r_white);
  const double quad = r_white.squaredNorm() - proj.squaredNorm();
  const double logdet =
      sys.noise.array().log().sum() + log_det(A_fact.llt) - log_det(f.K_P_llt);
  return gaussian_log_density(sys, logdet, quad);
}

double log_factor_Pi(Index i, const KernelHyperparams<double>& params, double q_i,
                     const Trajectory& traj) {
  if (!(q_i > 0.0)) throw std::invalid_argument("log_factor_Pi: q_i must be positive");
  const MatrixXd lower = traj.lower_states();
  const VectorXd& delta = traj.grid.delta();
  const auto& up = traj.grid.upper_rows();
  FactorSystem sys;
  sys.points = lower;
  sys.weight = delta;
  sys.noise = q_i * delta;
  sys.residual.resize(lower.rows());
  for (Index k = 0; k < lower.rows(); ++k) {
    sys.residual(k) = traj.X(up[k], i) - lower(k, i) - delta(k) * mean_function(params, lower.row(k), i);
  }
  return log_factor_exact(params, sys);
}

double log_p_trajectory(const HyperState& hyper, const Trajectory& traj,
                        const AugmentationData* aug) {
  const MatrixXd lower = traj.lower_states();
  double total = 0.0;
  for (Index i = 0; i < hyper.n_genes(); ++i) {
    total += log_factor_exact(hyper.kernel(i), assemble_factor_system(i, hyper, traj, lower, aug));
  }
  return total;
}

double log_p_trajectory_pseudo(const HyperState& hyper, const Trajectory& traj,
                               const PseudoInputSet<double>& pseudo,
                               const AugmentationData* aug) {
  const MatrixXd lower = traj.lower_states();
  double total = 0.0;
  for (Index i = 0; i < hyper.n_genes(); ++i) {
    total += log_factor_pseudo(hyper.kernel(i), assemble_factor_system(i, hyper, traj, lower, aug),
                               pseudo);
  }
  return total;
}

double log_factor(Index i, const HyperState& hyper, const Trajectory& traj,
                  const MatrixXd& lower_states, const AugmentationData* aug) {
  const FactorSystem sys = assemble_factor_system(i, hyper, traj, lower_states, aug);
  return hyper.uses_pseudo_inputs() ? log_factor_pseudo(hyper.kernel(i), sys, hyper.pseudo)
                                    : log_factor_exact(hyper.kernel(i), sys);
}

double log_measurement_fit_gene(const Dataset& data, const Trajectory& traj, Index gene,
                                double r_gene) {
  double sq = 0.0;
  Index count = 0;
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const Series& ser = data.series[s];
    for (Index j = 0; j < ser.length(); ++j) {
      if (!ser.observed(j, gene)) continue;
      const double e = ser.values(j, gene) - traj.X(traj.grid.measurement_row(s, static_cast<std::size_t>(j)), gene);
      sq += e * e;
      ++count;
    }
  }
  return -0.5 * (static_cast<double>(count) * (kLog2Pi + std::log(r_gene)) + sq / r_gene);
}

double log_measurement_fit(const Dataset& data, const Trajectory& traj, const VectorXd& r) {
  double total = 0.0;
  for (Index i = 0; i < data.n_genes(); ++i) total += log_measurement_fit_gene(data, traj, i, r(i));
  return total;
}

Index observed_count(const Dataset& data, Index gene) {
  Index count = 0;
  for (const auto& s : data.series) count += s.observed.col(gene).count();
  return count;
}

}  // namespace gpdyn
