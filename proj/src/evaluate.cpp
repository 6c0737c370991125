#include <gpdyn/evaluate.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpdyn {

namespace {

void check_shapes(const MatrixXd& scores, const MaskMatrix& truth) {
  if (scores.rows() != truth.rows() || scores.cols() != truth.cols()) {
    throw std::invalid_argument("score and truth matrices differ in shape");
  }
}

std::pair<Index, Index> class_counts(const std::vector<std::pair<double, bool>>& links) {
  Index pos = 0;
  for (const auto& l : links) pos += l.second ? 1 : 0;
  const Index neg = static_cast<Index>(links.size()) - pos;
  if (pos == 0 || neg == 0) {
    throw UndefinedScore("score undefined: ground truth has no " +
                         std::string(pos == 0 ? "positive" : "negative") + " links");
  }
  return {pos, neg};
}

// Links sorted by descending score; returns the index ranges of tie groups.
std::vector<std::pair<std::size_t, std::size_t>> tie_groups(
    std::vector<std::pair<double, bool>>& links) {
  std::stable_sort(links.begin(), links.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= links.size(); ++k) {
    if (k == links.size() || links[k].first != links[start].first) {
      groups.emplace_back(start, k);
      start = k;
    }
  }
  return groups;
}

}  // namespace

std::vector<std::pair<double, bool>> scored_links(const MatrixXd& scores, const MaskMatrix& truth) {
  check_shapes(scores, truth);
  std::vector<std::pair<double, bool>> out;
  for (Index i = 0; i < scores.rows(); ++i) {
    for (Index j = 0; j < scores.cols(); ++j) {
      if (i == j) continue;
      if (!std::isfinite(scores(i, j))) throw std::invalid_argument("non-finite link score");
      out.emplace_back(scores(i, j), truth(i, j));
    }
  }
  return out;
}

double auroc(const MatrixXd& scores, const MaskMatrix& truth) {
  auto links = scored_links(scores, truth);
  const auto [pos, neg] = class_counts(links);
  std::sort(links.begin(), links.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  double rank_sum = 0.0;
  std::size_t k = 0;
  while (k < links.size()) {
    std::size_t e = k;
    while (e < links.size() && links[e].first == links[k].first) ++e;
    const double midrank = 0.5 * static_cast<double>(k + 1 + e);
    for (std::size_t u = k; u < e; ++u) {
      if (links[u].second) rank_sum += midrank;
    }
    k = e;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<CurvePoint> roc_curve(const MatrixXd& scores, const MaskMatrix& truth) {
  auto links = scored_links(scores, truth);
  const auto [pos, neg] = class_counts(links);
  std::vector<CurvePoint> out{{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (const auto& [b, e] : tie_groups(links)) {
    for (std::size_t u = b; u < e; ++u) (links[u].second ? tp : fp) += 1.0;
    out.push_back({links[b].first, fp / static_cast<double>(neg), tp / static_cast<double>(pos)});
  }
  return out;
}

std::vector<CurvePoint> pr_curve(const MatrixXd& scores, const MaskMatrix& truth) {
  auto links = scored_links(scores, truth);
  const auto [pos, neg] = class_counts(links);
  (void)neg;
  std::vector<CurvePoint> out;
  double tp = 0.0, seen = 0.0;
  for (const auto& [b, e] : tie_groups(links)) {
    for (std::size_t u = b; u < e; ++u) {
      tp += links[u].second ? 1.0 : 0.0;
      seen += 1.0;
    }
    out.push_back({links[b].first, tp / static_cast<double>(pos), tp / seen});
  }
  return out;
}

double aupr(const MatrixXd& scores, const MaskMatrix& truth) {
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& pt : pr_curve(scores, truth)) {
    area += (pt.x - prev_recall) * pt.y;
    prev_recall = pt.x;
  }
  return area;
}

MatrixXd combine_scores(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("combine_scores: shape mismatch");
  }
  return a.cwiseProduct(b);
}

DiagnosticsReport diagnostics(const std::vector<ChainOutput>& outputs) {
  if (outputs.empty()) throw std::invalid_argument("diagnostics: no chains");
  DiagnosticsReport rep;
  std::map<std::string, BlockTally> pooled;
  for (const auto& o : outputs) {
    std::map<std::string, double> rates;
    for (const auto& [name, t] : o.acceptance) {
      rates[name] = t.rate();
      pooled[name].proposed += t.proposed;
      pooled[name].accepted += t.accepted;
    }
    rep.chain_acceptance.push_back(std::move(rates));
    rep.degenerate_proposals += o.degenerate_proposals;
  }
  for (const auto& [name, t] : pooled) rep.acceptance[name] = t.rate();

  const MatrixXd first = outputs.front().mean();
  MatrixXd sum = MatrixXd::Zero(first.rows(), first.cols());
  MatrixXd sq = sum;
  for (const auto& o : outputs) {
    const MatrixXd m = o.mean();
    sum += m;
    sq += m.cwiseProduct(m);
  }
  const double c = static_cast<double>(outputs.size());
  const MatrixXd mean = sum / c;
  rep.link_std = (sq / c - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
  for (const auto& o : outputs) {
    const MatrixXd m = o.mean();
    for (const auto& o2 : outputs) {
      MatrixXd diff = (m - o2.mean()).cwiseAbs();
      for (Index i = 0; i < std::min(diff.rows(), diff.cols()); ++i) diff(i, i) = 0.0;
      rep.max_link_disagreement = std::max(rep.max_link_disagreement, diff.maxCoeff());
    }
  }
  return rep;
}

std::string cumulative_mean_csv(const std::vector<ChainOutput>& outputs,
                                const std::vector<std::string>& names) {
  std::ostringstream os;
  os.precision(10);
  os << "chain,collected,from,to,cumulative_mean\n";
  for (std::size_t c = 0; c < outputs.size(); ++c) {
    for (const auto& [count, S_sum] : outputs[c].trace) {
      if (count == 0) continue;
      for (Index i = 0; i < S_sum.rows(); ++i) {
        for (Index j = 0; j < S_sum.cols(); ++j) {
          if (i == j) continue;
          os << c << ',' << count << ',' << names.at(static_cast<std::size_t>(j)) << ','
             << names.at(static_cast<std::size_t>(i)) << ','
             << S_sum(i, j) / static_cast<double>(count) << '\n';
        }
      }
    }
  }
  return os.str();
}

}  // namespace gpdyn
