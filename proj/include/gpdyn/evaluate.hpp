#pragma once

#include <gpdyn/sampler.hpp>
#include <gpdyn/types.hpp>

#include <map>
#include <string>
#include <vector>

namespace gpdyn {

// Link scores are n x d matrices in the S orientation: entry (i, j) scores
// the link j -> i. Diagonal entries (self-regulation) never enter a score;
// columns beyond n (input signals) do.

/// Off-diagonal (score, label) pairs in row-major order.
std::vector<std::pair<double, bool>> scored_links(const MatrixXd& scores, const MaskMatrix& truth);

/// Mann-Whitney AUROC with midranks for ties.
double auroc(const MatrixXd& scores, const MaskMatrix& truth);

/// Area under the step precision-recall curve taken over descending unique
/// thresholds. Starts from recall 0 at the precision of the first threshold.
double aupr(const MatrixXd& scores, const MaskMatrix& truth);

struct CurvePoint {
  double threshold;
  double x;  // FPR for ROC, recall for PR
  double y;  // TPR for ROC, precision for PR
};

std::vector<CurvePoint> roc_curve(const MatrixXd& scores, const MaskMatrix& truth);
std::vector<CurvePoint> pr_curve(const MatrixXd& scores, const MaskMatrix& truth);

/// Elementwise product of two score matrices.
MatrixXd combine_scores(const MatrixXd& a, const MatrixXd& b);

struct DiagnosticsReport {
  /// Pooled acceptance rate per block over all chains.
  std::map<std::string, double> acceptance;
  /// Per-chain acceptance rates, same keys.
  std::vector<std::map<std::string, double>> chain_acceptance;
  /// Per-link standard deviation of the chain means (population form).
  MatrixXd link_std;
  double max_link_disagreement{0.0};
  std::uint64_t degenerate_proposals{0};
};

DiagnosticsReport diagnostics(const std::vector<ChainOutput>& outputs);

/// Cumulative-mean curves from the chain traces as CSV with header
/// `chain,collected,from,to,cumulative_mean`, diagonal rows skipped.
std::string cumulative_mean_csv(const std::vector<ChainOutput>& outputs,
                                const std::vector<std::string>& names);

}  // namespace gpdyn
