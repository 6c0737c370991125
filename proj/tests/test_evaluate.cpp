#include <gpdyn/evaluate.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace gpdyn {
namespace {

// Trapezoidal ROC area and step PR area from an explicit sweep over every
// distinct threshold, counting off-diagonal entries directly.
struct SweepOracle {
  double roc{0.0}, pr{0.0};
};

SweepOracle sweep_oracle(const MatrixXd& s, const MaskMatrix& t) {
  std::set<double, std::greater<>> thresholds;
  double P = 0, N = 0;
  for (Index i = 0; i < s.rows(); ++i)
    for (Index j = 0; j < s.cols(); ++j) {
      if (i == j) continue;
      thresholds.insert(s(i, j));
      (t(i, j) ? P : N) += 1.0;
    }
  SweepOracle o;
  double prev_tpr = 0, prev_fpr = 0, prev_rec = 0;
  for (double th : thresholds) {
    double tp = 0, fp = 0;
    for (Index i = 0; i < s.rows(); ++i)
      for (Index j = 0; j < s.cols(); ++j)
        if (i != j && s(i, j) >= th) (t(i, j) ? tp : fp) += 1.0;
    const double tpr = tp / P, fpr = fp / N;
    o.roc += 0.5 * (tpr + prev_tpr) * (fpr - prev_fpr);
    o.pr += (tpr - prev_rec) * tp / (tp + fp);
    prev_tpr = tpr;
    prev_fpr = fpr;
    prev_rec = tpr;
  }
  return o;
}

MaskMatrix random_truth(std::mt19937_64& rng, Index n, double p = 0.4) {
  std::bernoulli_distribution b(p);
  MaskMatrix t(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t(i, j) = b(rng);
  t(0, 1) = true;
  t(1, 0) = false;
  return t;
}

TEST(Auroc, PerfectRankingScoresOne) {
  MaskMatrix t(3, 3);
  t << true, true, false, false, false, true, true, false, false;
  MatrixXd s = t.cast<double>() * 0.8 + MatrixXd::Constant(3, 3, 0.1);
  EXPECT_DOUBLE_EQ(auroc(s, t), 1.0);
  EXPECT_DOUBLE_EQ(aupr(s, t), 1.0);
  EXPECT_DOUBLE_EQ(auroc(-s, t), 0.0);
}

TEST(Auroc, ConstantScoresGiveHalf) {
  MaskMatrix t(3, 3);
  t << false, true, false, false, false, true, false, false, false;
  EXPECT_DOUBLE_EQ(auroc(MatrixXd::Constant(3, 3, 0.3), t), 0.5);
}

TEST(Auroc, UndefinedWhenOneClassMissing) {
  const MaskMatrix none = MaskMatrix::Constant(3, 3, false);
  MaskMatrix all = MaskMatrix::Constant(3, 3, true);
  all(1, 1) = false;
  EXPECT_THROW(auroc(MatrixXd::Random(3, 3), none), UndefinedScore);
  EXPECT_THROW(auroc(MatrixXd::Random(3, 3), all), UndefinedScore);
  EXPECT_THROW(aupr(MatrixXd::Random(3, 3), none), UndefinedScore);
}

TEST(Auroc, ToyCasesMatchThresholdSweep) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> level(0, 4);  // coarse levels force ties
  for (int rep = 0; rep < 200; ++rep) {
    const Index n = rep < 100 ? 3 : 5;
    const MaskMatrix t = random_truth(rng, n);
    MatrixXd s(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) s(i, j) = 0.25 * level(rng);
    const SweepOracle o = sweep_oracle(s, t);
    EXPECT_NEAR(auroc(s, t), o.roc, 1e-12);
    EXPECT_NEAR(aupr(s, t), o.pr, 1e-12);
    EXPECT_LE(aupr(s, t), 1.0);
  }
}

TEST(Aupr, SingleTrueLinkRankedLast) {
  const Index n = 4;
  const Index L = n * (n - 1);
  MatrixXd s(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s(i, j) = 1.0 + static_cast<double>(i * n + j);
  MaskMatrix t = MaskMatrix::Constant(n, n, false);
  t(0, 1) = true;  // lowest off-diagonal score
  EXPECT_NEAR(aupr(s, t), 1.0 / static_cast<double>(L), 1e-15);
}

TEST(Scores, InvariantUnderMonotoneTransformAndDiagonal) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const MaskMatrix t = random_truth(rng, 5);
    const MatrixXd s = testing_support::random_matrix(rng, 5, 5);
    const MatrixXd mono = (2.0 * s.array()).exp() + 3.0;
    EXPECT_DOUBLE_EQ(auroc(mono, t), auroc(s, t));
    EXPECT_DOUBLE_EQ(aupr(mono, t), aupr(s, t));
    MatrixXd shifted = s;
    shifted.diagonal().array() += 17.0;
    MaskMatrix flipped = t;
    flipped.diagonal() = !t.diagonal().array();
    EXPECT_DOUBLE_EQ(auroc(shifted, flipped), auroc(s, t));
    EXPECT_DOUBLE_EQ(aupr(shifted, flipped), aupr(s, t));
  }
}

TEST(Scores, InputColumnsScored) {
  MatrixXd s(2, 3);
  s << 0.0, 0.2, 0.9, 0.1, 0.0, 0.3;
  MaskMatrix t(2, 3);
  t << false, false, true, false, false, false;
  EXPECT_EQ(scored_links(s, t).size(), 4u);
  EXPECT_DOUBLE_EQ(auroc(s, t), 1.0);
}

TEST(Curves, EndpointsAndMonotone) {
  std::mt19937_64 rng(3);
  const MaskMatrix t = random_truth(rng, 5);
  const MatrixXd s = testing_support::random_matrix(rng, 5, 5);
  const auto roc = roc_curve(s, t);
  EXPECT_DOUBLE_EQ(roc.back().x, 1.0);
  EXPECT_DOUBLE_EQ(roc.back().y, 1.0);
  for (std::size_t k = 1; k < roc.size(); ++k) {
    EXPECT_GE(roc[k].x, roc[k - 1].x);
    EXPECT_GE(roc[k].y, roc[k - 1].y);
    EXPECT_LT(roc[k].threshold, roc[k - 1].threshold);
  }
  const auto pr = pr_curve(s, t);
  EXPECT_DOUBLE_EQ(pr.back().x, 1.0);
}

TEST(Combine, ProductProperties) {
  std::mt19937_64 rng(4);
  const MatrixXd a = testing_support::random_matrix(rng, 3, 4), b = testing_support::random_matrix(rng, 3, 4);
  EXPECT_EQ(combine_scores(a, MatrixXd::Ones(3, 4)), a);
  EXPECT_EQ(combine_scores(a, b), combine_scores(b, a));
  const MatrixXd c = combine_scores(a, b);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(c(i, j), a(i, j) * b(i, j));
  EXPECT_THROW(combine_scores(a, MatrixXd::Ones(4, 3)), std::invalid_argument);
}

ChainOutput fake_chain(const MatrixXd& mean, Index n, std::uint64_t accepted) {
  ChainOutput o;
  o.S_sum = mean * static_cast<double>(n);
  o.n_collected = n;
  o.acceptance["hyper"] = {100, accepted};
  o.trace = {{n / 2, o.S_sum / 2.0}, {n, o.S_sum}};
  return o;
}

TEST(Diagnostics, SingleAndIdenticalChainsHaveZeroSpread) {
  const MatrixXd m = MatrixXd::Constant(2, 2, 0.4);
  const DiagnosticsReport one = diagnostics({fake_chain(m, 10, 30)});
  EXPECT_TRUE(one.link_std.isZero());
  EXPECT_EQ(one.max_link_disagreement, 0.0);
  EXPECT_DOUBLE_EQ(one.acceptance.at("hyper"), 0.3);
  const DiagnosticsReport two = diagnostics({fake_chain(m, 10, 30), fake_chain(m, 10, 50)});
  EXPECT_TRUE(two.link_std.isZero());
  EXPECT_DOUBLE_EQ(two.acceptance.at("hyper"), 0.4);
  EXPECT_EQ(two.chain_acceptance.size(), 2u);
}

TEST(Diagnostics, SpreadIsPopulationStd) {
  MatrixXd a = MatrixXd::Zero(2, 2), b = MatrixXd::Zero(2, 2);
  a(0, 1) = 0.2;
  b(0, 1) = 0.6;
  const DiagnosticsReport r = diagnostics({fake_chain(a, 10, 1), fake_chain(b, 10, 1)});
  EXPECT_NEAR(r.link_std(0, 1), 0.2, 1e-15);
  EXPECT_NEAR(r.max_link_disagreement, 0.4, 1e-15);
}

TEST(Diagnostics, CumulativeMeanCsv) {
  MatrixXd m(2, 2);
  m << 0.5, 0.25, 0.75, 1.0;
  const std::string csv = cumulative_mean_csv({fake_chain(m, 8, 1)}, {"A", "B"});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "chain,collected,from,to,cumulative_mean");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);  // 2 snapshots x 2 off-diagonal links
  EXPECT_NE(csv.find("0,8,A,B,0.75"), std::string::npos) << csv;
}

}  // namespace
}  // namespace gpdyn
