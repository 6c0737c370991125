#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace gpdyn::testing_support {

/// Asymptotic Kolmogorov tail probability with the usual small-sample
/// correction of the statistic.
inline double kolmogorov_pvalue(double D, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * D;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test against a continuous CDF; returns the p-value.
inline double ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double F = cdf(x[k]);
    D = std::max({D, F - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - F});
  }
  return kolmogorov_pvalue(D, x.size());
}

/// Standard error of the mean of a correlated sequence by batch means.
inline double batch_means_se(const std::vector<double>& x, std::size_t batches = 50) {
  const std::size_t size = x.size() / batches;
  if (size == 0) return 0.0;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < size; ++k) s += x[b * size + k];
    means.push_back(s / static_cast<double>(size));
  }
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(batches);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  var /= static_cast<double>(batches - 1);
  return std::sqrt(var / static_cast<double>(batches));
}

/// CDF by trapezoidal integration of an unnormalised density on [lo, hi].
class NumericalCdf {
 public:
  NumericalCdf(const std::function<double(double)>& density, double lo, double hi, int points = 200001)
      : lo_(lo), hi_(hi), cdf_(static_cast<std::size_t>(points), 0.0) {
    step_ = (hi - lo) / static_cast<double>(points - 1);
    double prev = density(lo);
    for (int k = 1; k < points; ++k) {
      const double cur = density(lo + step_ * k);
      cdf_[static_cast<std::size_t>(k)] = cdf_[static_cast<std::size_t>(k - 1)] + 0.5 * step_ * (prev + cur);
      prev = cur;
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
  }

  double operator()(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const double u = (x - lo_) / step_;
    const auto k = static_cast<std::size_t>(u);
    const double w = u - static_cast<double>(k);
    return (1.0 - w) * cdf_[k] + w * cdf_[std::min(k + 1, cdf_.size() - 1)];
  }

 private:
  double lo_, hi_, step_;
  std::vector<double> cdf_;
};

}  // namespace gpdyn::testing_support
