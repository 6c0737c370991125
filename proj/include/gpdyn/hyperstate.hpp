#pragma once

#include <gpdyn/kernels.hpp>
#include <gpdyn/types.hpp>

#include <vector>

namespace gpdyn {

/// Every sampled hyperparameter of the model (the trajectory excluded).
///
/// Shapes: n genes, d = n + inputs columns. Row i of S and H belongs to
/// f_i; column j to regulator j, so S(i,j) = 1 encodes the link j -> i.
struct HyperState {
  MaskMatrix S;     // n x d
  MatrixXd H;       // n x d, nonnegative; kept while S(i,j) = 0
  VectorXd gamma;   // n
  VectorXd q;       // n, process noise variances
  VectorXd r;       // n, measurement noise variances
  VectorXd a;       // n, degradation rates
  VectorXd b;       // n, basal transcription
  VectorXd M_ss;    // n, steady-state residual variance
  VectorXd M_ko;    // n, knockout residual variance
  VectorXd x_ss;    // d; empty without steady-state data
  PseudoInputSet<double> pseudo;  // shared by all genes; empty = exact Gram

  Index n_genes() const { return S.rows(); }
  Index dim() const { return S.cols(); }
  bool uses_pseudo_inputs() const { return pseudo.size() > 0; }

  KernelHyperparams<double> kernel(Index i) const {
    KernelHyperparams<double> k;
    k.gamma = gamma(i);
    k.beta = S.row(i).cast<double>().cwiseProduct(H.row(i)).transpose();
    k.a = a(i);
    k.b = b(i);
    return k;
  }
};

/// Steady-state data as it enters the per-gene factors.
struct AugmentationData {
  /// ko/kd steady states usable for f_i (experiments perturbing gene i
  /// removed), one matrix per gene with one point per row.
  std::vector<MatrixXd> ko_points;
  /// Normal prior of the global steady state x_ss.
  VectorXd x_ss_mean;
  MatrixXd x_ss_cov;
  Eigen::LLT<MatrixXd> x_ss_cov_llt;

  Index ko_count(Index gene) const { return ko_points[gene].rows(); }
};

}  // namespace gpdyn
