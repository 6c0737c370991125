#include <gpdyn/io.hpp>
#include <gpdyn/sampler.hpp>
#include <gpdyn/simulate.hpp>

#include "stats_support.hpp"
#include "test_support.hpp"

#include <boost/math/distributions/inverse_gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace gpdyn {
namespace {

using namespace testing_support;

Dataset small_problem(std::uint64_t seed, Index n = 3, Index series = 2, Index points = 8) {
  Rng rng(seed);
  SyntheticModel m = random_linear_model(n, n, rng);
  DatasetDesign design;
  design.n_series = series;
  design.m_points = points;
  design.interval = 0.5;
  design.fine_steps = 10;
  return scale_dataset(make_dataset(m, design, rng).data).first;
}

SamplerConfig short_config() {
  SamplerConfig c;
  c.n_burn = 50;
  c.n_samples = 50;
  c.thinning = 2;
  c.seed = 5;
  return c;
}

TEST(IndicatorFlip, TogglesExactlyOneBit) {
  Rng rng(1);
  const MaskMatrix row = MaskMatrix::Constant(1, 2, false);
  for (int t = 0; t < 20; ++t) {
    const auto [out, j] = propose_indicator_flip(row, rng);
    EXPECT_EQ(out.count(), 1);
    EXPECT_TRUE(out(j));
  }
}

TEST(IndicatorFlip, SecondFlipOfSameIndexRestores) {
  Rng rng(2);
  MaskMatrix row(1, 4);
  row << true, false, true, false;
  const auto [once, j] = propose_indicator_flip(row, rng);
  MaskMatrix twice = once;
  twice(j) = !twice(j);
  EXPECT_EQ(twice, row);
}

TEST(IndicatorFlip, UniformOverIndices) {
  Rng rng(3);
  const Index n = 5;
  const int draws = 100000;
  std::vector<double> counts(n, 0.0);
  const MaskMatrix row = MaskMatrix::Constant(1, n, false);
  for (int t = 0; t < draws; ++t) counts[static_cast<std::size_t>(propose_indicator_flip(row, rng).second)] += 1.0;
  const double expect = draws / static_cast<double>(n);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expect) * (c - expect) / expect;
  EXPECT_LT(chi2, 18.47);  // 0.999 quantile, 4 degrees of freedom
}

TEST(IndicatorFlip, LockedIndicesNeverChosen) {
  Rng rng(4);
  const MaskMatrix row = MaskMatrix::Constant(1, 3, false);
  for (int t = 0; t < 200; ++t) EXPECT_NE(propose_indicator_flip(row, rng, {1}).second, 1);
  EXPECT_EQ(propose_indicator_flip(MaskMatrix::Constant(1, 1, true), rng, {0}).second, -1);
}

TEST(ReflectedWalk, StaysNonnegativeAndHalfNormalAtZero) {
  Rng rng(5);
  double sum = 0.0;
  const int draws = 200000;
  for (int t = 0; t < draws; ++t) {
    const double v = propose_rw_reflected(0.0, 2.0, rng);
    ASSERT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum / draws, 2.0 * std::sqrt(2.0 / std::numbers::pi), 0.01);
}

TEST(ReflectedWalk, TransitionDensityIsSymmetric) {
  // For x ~ U[0, 2] and y the reflected proposal, the joint law of (x, y)
  // restricted to [0, 2]^2 is exchangeable.
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const int bins = 4;
  MatrixXd hist = MatrixXd::Zero(bins, bins);
  for (int t = 0; t < 400000; ++t) {
    const double x = u(rng);
    const double y = propose_rw_reflected(x, 0.7, rng);
    if (y >= 2.0) continue;
    hist(static_cast<Index>(x / 0.5), static_cast<Index>(y / 0.5)) += 1.0;
  }
  for (Index a = 0; a < bins; ++a)
    for (Index b = a + 1; b < bins; ++b) {
      const double s = hist(a, b) + hist(b, a);
      EXPECT_LT(std::abs(hist(a, b) - hist(b, a)), 4.0 * std::sqrt(s) + 1.0) << a << "," << b;
    }
}

TEST(ReflectedBoxWalk, StaysInBox) {
  Rng rng(7);
  double v = 0.5;
  for (int t = 0; t < 10000; ++t) {
    v = propose_rw_reflected_box(v, 3.0, 0.0, 1.0, rng);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

TEST(BasisMatrix, ShapeAndValues) {
  const VectorXd tau = VectorXd::LinSpaced(5, 0.3, 2.3);
  const MatrixXd B = basis_matrix(tau);
  EXPECT_EQ(B.rows(), 5);
  EXPECT_EQ(B.cols(), 4);
  const double T = 2.0;
  EXPECT_NEAR(B(0, 0), std::sin(2.0 * std::numbers::pi * 0.3 / T), 1e-15);
  EXPECT_NEAR(B(0, 2), std::cos(2.0 * std::numbers::pi * 0.3 / T), 1e-15);
  for (Index j = 0; j < 2; ++j) {
    EXPECT_LE(B.col(j).cwiseAbs().maxCoeff(), 1.0 / static_cast<double>(j + 1) + 1e-15);
    EXPECT_LE(B.col(2 + j).cwiseAbs().maxCoeff(), 1.0 / static_cast<double>(j + 1) + 1e-15);
  }
  EXPECT_EQ(basis_matrix(Eigen::Vector2d(0, 1)).cols(), 0);
}

TEST(BasisProposal, TinyStepLeavesPathAndMomentsMatch) {
  Rng rng(8);
  const VectorXd tau = VectorXd::LinSpaced(7, 0.0, 3.0);
  const MatrixXd B = basis_matrix(tau);
  const VectorXd x = VectorXd::LinSpaced(7, 1.0, 2.0);
  EXPECT_LT((propose_trajectory_basis(x, B, 1e-30, rng) - x).norm(), 1e-14);

  const double eps = 0.3;
  const int draws = 200000;
  VectorXd mean = VectorXd::Zero(7);
  MatrixXd cov = MatrixXd::Zero(7, 7);
  for (int t = 0; t < draws; ++t) {
    const VectorXd d = propose_trajectory_basis(x, B, eps, rng) - x;
    mean += d;
    cov += d * d.transpose();
  }
  mean /= draws;
  cov /= draws;
  const MatrixXd expect = eps * B * B.transpose();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5.0 * std::sqrt(expect.diagonal().maxCoeff() / draws));
  EXPECT_LT((cov - expect).cwiseAbs().maxCoeff(), 0.02 * expect.diagonal().maxCoeff());
}

TEST(CnProposal, Limits) {
  Rng rng(9);
  const MatrixXd x = MatrixXd::Constant(3, 1, 2.0), m = MatrixXd::Constant(3, 1, 0.5);
  const MatrixXd xi = MatrixXd::Constant(3, 1, -0.25);
  auto draw = [&](Rng&) { return xi; };
  EXPECT_TRUE(cn_proposal(x, m, draw, 1.0, rng).isApprox(m + xi));
  EXPECT_LT((cn_proposal(x, m, draw, 1e-9, rng) - x).norm(), 1e-8);
  EXPECT_THROW(cn_proposal(x, m, draw, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(cn_proposal(x, m, draw, 1.5, rng), std::invalid_argument);
}

TEST(CnProposal, TwoStepsPreserveGaussian) {
  Rng rng(10);
  const double m = 0.7, sd = 1.3;
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> out;
  for (int t = 0; t < 20000; ++t) {
    MatrixXd x = MatrixXd::Constant(1, 1, m + n(rng));
    auto draw = [&](Rng& g) { return MatrixXd::Constant(1, 1, n(g)); };
    x = cn_proposal(x, MatrixXd::Constant(1, 1, m), draw, 0.4, rng);
    x = cn_proposal(x, MatrixXd::Constant(1, 1, m), draw, 0.4, rng);
    out.push_back(x(0, 0));
  }
  const double p = ks_test(out, [&](double v) { return 0.5 * std::erfc(-(v - m) / (sd * std::sqrt(2.0))); });
  EXPECT_GT(p, 0.01);
}

TEST(BridgeReference, SampledVarianceMatchesClosedForm) {
  const Dataset d = small_problem(11, 2, 1, 4);
  const Grid g = build_grid(d, 4);
  const BridgeReference ref(d, g);
  const VectorXd q = Eigen::Vector2d(0.3, 0.05), r = Eigen::Vector2d(0.01, 0.02);
  Rng rng(12);
  MatrixXd sq = MatrixXd::Zero(g.rows(), 2);
  const int draws = 40000;
  for (int t = 0; t < draws; ++t) sq += ref.sample_centered(q, r, rng).cwiseAbs2();
  sq /= draws;
  const MatrixXd expect = ref.marginal_variance(q, r);
  EXPECT_LT(((sq - expect).array() / expect.array()).abs().maxCoeff(), 0.05);
}

TEST(BridgeReference, MeanInterpolatesTargets) {
  const Dataset d = small_problem(13, 2, 1, 4);
  const Grid g = build_grid(d, 3);
  const BridgeReference ref(d, g);
  for (Index j = 0; j < 4; ++j) {
    EXPECT_DOUBLE_EQ(ref.mean()(3 * j, 0), d.series[0].values(j, 0));
  }
  EXPECT_NEAR(ref.mean()(1, 1), (2.0 * d.series[0].values(0, 1) + d.series[0].values(1, 1)) / 3.0, 1e-14);
}

TEST(SamplerConfig, Validation) {
  SamplerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.thinning = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SamplerConfig{};
  c.cn_epsilon = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SamplerConfig{};
  c.refinement = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(proposal_from_string(to_string(TrajectoryProposal::basis)), TrajectoryProposal::basis);
  EXPECT_THROW(proposal_from_string("gibbs"), std::invalid_argument);
}

TEST(RunChain, ZeroSamplesGivesEmptyOutput) {
  SamplerConfig c = short_config();
  c.n_samples = 0;
  const ChainOutput out = run_chain(small_problem(14), c);
  EXPECT_EQ(out.n_collected, 0);
  EXPECT_EQ(out.S_sum.rows(), 3);
  EXPECT_TRUE(out.mean().isZero());
}

TEST(RunChain, SameSeedIsBitIdentical) {
  const Dataset d = small_problem(15);
  for (auto kind : {TrajectoryProposal::crank_nicolson, TrajectoryProposal::basis}) {
    SamplerConfig c = short_config();
    c.proposal = kind;
    const ChainOutput a = run_chain(d, c), b = run_chain(d, c);
    EXPECT_EQ(a.S_sum, b.S_sum);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].second, b.trace[k].second);
    EXPECT_EQ(a.acceptance.at("trajectory").accepted, b.acceptance.at("trajectory").accepted);
    const ChainOutput other = run_chain(d, c, 1);
    EXPECT_NE(a.acceptance.at("hyper").accepted + 1000 * a.acceptance.at("trajectory").accepted,
              other.acceptance.at("hyper").accepted + 1000 * other.acceptance.at("trajectory").accepted);
  }
}

TEST(RunChain, OutputWithinUnitInterval) {
  for (bool pseudo : {true, false}) {
    SamplerConfig c = short_config();
    c.use_pseudo_inputs = pseudo;
    const ChainOutput out = run_chain(small_problem(16), c);
    EXPECT_EQ(out.n_collected, 50);
    const MatrixXd m = out.mean();
    EXPECT_GE(m.minCoeff(), 0.0);
    EXPECT_LE(m.maxCoeff(), 1.0);
    for (const auto& [block, t] : out.acceptance) {
      EXPECT_GT(t.proposed, 0u) << block;
      EXPECT_TRUE(std::isfinite(t.rate()));
    }
  }
}

TEST(RunChain, ResumeFromCheckpointIsBitIdentical) {
  const Dataset d = small_problem(17);
  SamplerConfig c = short_config();
  const GibbsSampler sampler(d, c);
  const ChainOutput straight = ChainRunner(sampler, 0).run();

  nlohmann::json saved;
  ChainRunner first(sampler, 0);
  try {
    first.run(60, [&](const ChainRunner& r) {
      saved = checkpoint_json(r.state(), r.output());
      throw std::runtime_error("interrupt");
    });
  } catch (const std::runtime_error&) {
  }
  ASSERT_FALSE(saved.is_null());
  ChainState state = sampler.initial_state(c.seed, 0);
  ChainOutput partial;
  restore_checkpoint(nlohmann::json::parse(saved.dump()), state, partial);
  EXPECT_EQ(state.sweep, 60u);
  const ChainOutput resumed = ChainRunner(sampler, std::move(state), std::move(partial)).run();
  EXPECT_EQ(resumed.S_sum, straight.S_sum);
  EXPECT_EQ(resumed.n_collected, straight.n_collected);
  EXPECT_EQ(resumed.acceptance.at("trajectory").accepted, straight.acceptance.at("trajectory").accepted);
}

TEST(PoolChains, CountWeightedMean) {
  ChainOutput a, b;
  a.S_sum = MatrixXd::Constant(2, 2, 3.0);
  a.n_collected = 4;
  b.S_sum = MatrixXd::Constant(2, 2, 1.0);
  b.n_collected = 4;
  EXPECT_TRUE(pool_chains({a}).isApprox(a.mean()));
  EXPECT_TRUE(pool_chains({a, b}).isApprox(0.5 * (a.mean() + b.mean())));
  b.n_collected = 12;
  b.S_sum = MatrixXd::Constant(2, 2, 2.0);
  EXPECT_TRUE(pool_chains({a, b}).isApprox(MatrixXd::Constant(2, 2, 5.0 / 16.0)));
  EXPECT_THROW(pool_chains({}), std::invalid_argument);
}

TEST(GibbsBlocks, RBlockTargetsInverseGammaConditional) {
  // With X fixed the conditional of r_i is inverse gamma with shape
  // 0.001 + m/2 and scale 1e-5 + (sum of squared residuals)/2.
  const Dataset d = small_problem(18, 2, 1, 8);
  SamplerConfig c = short_config();
  c.step_noise = 1.0;
  const GibbsSampler sampler(d, c);
  ChainState st = sampler.initial_state(3);
  Rng noise(19);
  st.traj.X += 0.1 * random_matrix(noise, st.traj.X.rows(), st.traj.X.cols());
  double sq = 0.0;
  for (Index j = 0; j < 8; ++j) {
    const double e = d.series[0].values(j, 0) - st.traj.X(st.traj.grid.measurement_row(0, j), 0);
    sq += e * e;
  }
  std::vector<double> draws;
  for (int t = 0; t < 200000; ++t) {
    sampler.gibbs_R_block(st);
    if (t % 20 == 0) draws.push_back(st.hyper.r(0));
  }
  const boost::math::inverse_gamma_distribution<double> post(0.001 + 4.0, 1e-5 + 0.5 * sq);
  EXPECT_GT(ks_test(draws, [&](double v) { return boost::math::cdf(post, v); }), 0.01);
}

TEST(GibbsBlocks, GammaNeverLeavesTruncation) {
  const Dataset d = small_problem(20);
  SamplerConfig c = short_config();
  c.prior_only = true;
  c.step_hyper = 2.0;
  const GibbsSampler sampler(d, c);
  ChainState st = sampler.initial_state(1);
  for (int t = 0; t < 5000; ++t) {
    sampler.sweep(st, false);
    for (Index i = 0; i < 3; ++i) ASSERT_LT(st.hyper.gamma(i), 30.0 * sampler.stats().deriv_sq(i));
  }
}

TEST(GibbsBlocks, CachedFactorsStayConsistent) {
  const Dataset d = small_problem(21);
  const GibbsSampler sampler(d, short_config());
  ChainState st = sampler.initial_state(2);
  for (int t = 0; t < 30; ++t) sampler.sweep(st, true);
  const VectorXd cached = st.log_factors;
  sampler.refresh(st);
  EXPECT_TRUE(cached.isApprox(st.log_factors, 1e-12));
}

TEST(CrankNicolson, AcceptanceRobustToRefinement) {
  const Dataset d = small_problem(22, 3, 2, 8);
  auto rate = [&](Index refinement) {
    SamplerConfig c = short_config();
    c.refinement = refinement;
    c.adapt = false;
    c.n_burn = 0;
    c.n_samples = 600;
    c.thinning = 1;
    return run_chain(d, c).acceptance.at("trajectory").rate();
  };
  const double coarse = rate(3), fine = rate(6);
  ASSERT_GT(coarse, 0.0);
  ASSERT_GT(fine, 0.0);
  EXPECT_LT(std::max(coarse, fine) / std::min(coarse, fine), 2.0);
}

TEST(RunChain, CumulativeMeanSettles) {
  const Dataset d = small_problem(23, 3, 4, 11);
  SamplerConfig c = short_config();
  c.n_burn = 2000;
  c.n_samples = 10000;
  c.thinning = 5;
  const ChainOutput out = run_chain(d, c);
  const auto& trace = out.trace;
  ASSERT_GE(trace.size(), 50u);
  const std::size_t start = trace.size() * 4 / 5;
  const MatrixXd ref = trace.back().second / static_cast<double>(trace.back().first);
  for (std::size_t k = start; k < trace.size(); ++k) {
    const MatrixXd m = trace[k].second / static_cast<double>(trace[k].first);
    EXPECT_LT((m - ref).cwiseAbs().maxCoeff(), 0.02) << "trace point " << k;
  }
}

}  // namespace
}  // namespace gpdyn
