#include <gpdyn/priors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpdyn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Prior scales of constant genes would be zero; keep them finite.
constexpr double kStatFloor = 1e-9;

double floored(double v) { return std::max(v, kStatFloor); }

}  // namespace

DataStats compute_data_stats(const Dataset& data) {
  const Index d = data.dim();
  VectorXd abs_sum = VectorXd::Zero(d);
  VectorXd span = VectorXd::Zero(d);
  VectorXd quot_sum = VectorXd::Zero(d);
  VectorXd n_incr = VectorXd::Zero(d);
  VectorXd lo = VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  VectorXd hi = VectorXd::Constant(d, -std::numeric_limits<double>::infinity());

  for (const auto& s : data.series) {
    if (s.length() < 2) throw InvalidData("compute_data_stats: series with fewer than two points");
    for (Index j = 0; j < d; ++j) {
      Index prev = -1;
      Index first = -1;
      for (Index k = 0; k < s.length(); ++k) {
        if (!s.observed(k, j)) continue;
        const double v = s.values(k, j);
        lo(j) = std::min(lo(j), v);
        hi(j) = std::max(hi(j), v);
        if (first < 0) first = k;
        if (prev >= 0) {
          const double dy = v - s.values(prev, j);
          const double dt = s.time(k) - s.time(prev);
          abs_sum(j) += std::abs(dy);
          quot_sum(j) += (dy / dt) * (dy / dt);
          n_incr(j) += 1.0;
        }
        prev = k;
      }
      if (first >= 0 && prev > first) span(j) += s.time(prev) - s.time(first);
    }
  }

  DataStats st;
  st.variation.resize(d);
  st.range.resize(d);
  st.deriv_sq.resize(d);
  for (Index j = 0; j < d; ++j) {
    if (n_incr(j) == 0.0) {
      throw InvalidData("compute_data_stats: column '" + data.names[j] +
                        "' has fewer than two observed points in every series");
    }
    st.variation(j) = abs_sum(j) / span(j);
    st.range(j) = hi(j) - lo(j);
    st.deriv_sq(j) = quot_sum(j) / n_incr(j);
  }
  return st;
}

double log_prior_noise_variance(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) return kNegInf;
  return -kNoisePriorPower * std::log(v) - kNoisePriorScale / v;
}

double log_prior_gene(Index i, const HyperState& hyper, const DataStats& stats, double eta,
                      const AugmentationData* aug) {
  const Index d = hyper.dim();
  double lp = 0.0;

  lp += static_cast<double>(hyper.S.row(i).count()) * std::log(eta);
  for (Index j = 0; j < d; ++j) {
    const double h = hyper.H(i, j);
    if (!(h >= 0.0)) return kNegInf;
    lp -= h / floored(stats.range(j));
  }

  const double sigma = floored(stats.deriv_sq(i));
  const double g = hyper.gamma(i);
  if (!(g > 0.0) || g / sigma >= kGammaTruncation) return kNegInf;
  lp += std::log(g) - g / (5.0 * sigma) + std::log(kGammaTruncation - g / sigma);

  const double V = floored(stats.variation(i));
  if (!(hyper.a(i) >= 0.0) || !(hyper.b(i) >= 0.0)) return kNegInf;
  lp -= hyper.a(i) / (10.0 * V) + hyper.b(i) / (5.0 * V);

  if (aug != nullptr) {
    if (hyper.x_ss.size() > 0) lp += log_prior_noise_variance(hyper.M_ss(i));
    const Index n_ko = aug->ko_count(i);
    if (n_ko > 0) {
      const double m = hyper.M_ko(i);
      if (!(m > 0.0)) return kNegInf;
      const double nk = static_cast<double>(n_ko);
      lp += -0.5 * nk * std::log(m) - nk * sigma / (10.0 * m);
    }
  }
  return lp;
}

double log_prior_steady_state(const VectorXd& x_ss, const AugmentationData& aug) {
  const VectorXd z = aug.x_ss_cov_llt.matrixL().solve(x_ss - aug.x_ss_mean);
  return -0.5 * z.squaredNorm();
}

double log_prior(const HyperState& hyper, const DataStats& stats, double eta,
                 const AugmentationData* aug) {
  double lp = 0.0;
  for (Index i = 0; i < hyper.n_genes(); ++i) {
    lp += log_prior_gene(i, hyper, stats, eta, aug);
    lp += log_prior_noise_variance(hyper.q(i));
    lp += log_prior_noise_variance(hyper.r(i));
  }
  if (aug != nullptr && hyper.x_ss.size() > 0) lp += log_prior_steady_state(hyper.x_ss, *aug);
  return lp;
}

}  // namespace gpdyn
