#include <gpdyn/dataset.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpdyn {

void Dataset::validate() const {
  const Index d = dim();
  if (d == 0) throw InvalidData("dataset has no columns");
  if (n_inputs < 0 || n_inputs >= d) throw InvalidData("dataset needs at least one gene column");
  if (series.empty()) throw InvalidData("dataset has no time series");
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& ser = series[s];
    const std::string where = "series " + std::to_string(s);
    if (ser.values.rows() != ser.length() || ser.values.cols() != d ||
        ser.observed.rows() != ser.length() || ser.observed.cols() != d) {
      throw InvalidData(where + ": value/mask shape does not match timestamps and columns");
    }
    if (ser.length() < 2) throw InvalidData(where + ": needs at least two time points");
    for (Index k = 1; k < ser.length(); ++k) {
      if (!(ser.time(k) > ser.time(k - 1))) {
        throw InvalidData(where + ": timestamps not strictly increasing at t=" +
                          std::to_string(ser.time(k)));
      }
    }
    for (Index j = n_genes(); j < d; ++j) {
      if (!ser.observed.col(j).all()) {
        throw InvalidData(where + ": input signal '" + names[j] + "' has missing values");
      }
    }
    for (Index k = 0; k < ser.length(); ++k) {
      for (Index j = 0; j < d; ++j) {
        if (ser.observed(k, j) && !std::isfinite(ser.values(k, j))) {
          throw InvalidData(where + ": non-finite value");
        }
      }
    }
  }
  for (const auto& p : perturbations) {
    if (p.gene < 0 || p.gene >= n_genes()) throw InvalidData("perturbation of unknown gene");
    if (p.state.size() != d) throw InvalidData("perturbation state has wrong length");
  }
  for (const auto& s : steady_states) {
    if (s.size() != d) throw InvalidData("steady state has wrong length");
  }
}

std::optional<Index> Dataset::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<Index>(it - names.begin());
}

namespace {

template <typename F>
Dataset map_values(const Dataset& d, F&& f) {
  Dataset out = d;
  for (auto& s : out.series) {
    for (Index k = 0; k < s.values.rows(); ++k) {
      for (Index j = 0; j < s.values.cols(); ++j) {
        if (s.observed(k, j)) s.values(k, j) = f(j, s.values(k, j));
      }
    }
  }
  for (auto& p : out.perturbations) {
    for (Index j = 0; j < p.state.size(); ++j) p.state(j) = f(j, p.state(j));
  }
  for (auto& v : out.steady_states) {
    for (Index j = 0; j < v.size(); ++j) v(j) = f(j, v(j));
  }
  return out;
}

}  // namespace

// Pure rescaling (offset zero) so that knocked-out genes stay at zero.
std::pair<Dataset, ScalingTransform> scale_dataset(const Dataset& d) {
  const Index dim = d.dim();
  VectorXd lo = VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  VectorXd hi = VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  auto visit = [&](Index j, double v) {
    lo(j) = std::min(lo(j), v);
    hi(j) = std::max(hi(j), v);
  };
  for (const auto& s : d.series) {
    for (Index k = 0; k < s.values.rows(); ++k) {
      for (Index j = 0; j < dim; ++j) {
        if (s.observed(k, j)) visit(j, s.values(k, j));
      }
    }
  }
  for (const auto& p : d.perturbations) {
    for (Index j = 0; j < dim; ++j) visit(j, p.state(j));
  }
  for (const auto& v : d.steady_states) {
    for (Index j = 0; j < dim; ++j) visit(j, v(j));
  }

  ScalingTransform t;
  t.offset = VectorXd::Zero(dim);
  t.scale = VectorXd::Ones(dim);
  for (Index j = 0; j < dim; ++j) {
    const double range = hi(j) - lo(j);
    if (std::isfinite(range) && range > 0.0) {
      t.scale(j) = 1.0 / range;
    } else {
      t.constant_columns.push_back(j);
    }
  }
  return {apply_transform(d, t), t};
}

Dataset apply_transform(const Dataset& d, const ScalingTransform& t) {
  return map_values(d, [&](Index j, double v) { return t.apply(j, v); });
}

Dataset invert_transform(const Dataset& d, const ScalingTransform& t) {
  return map_values(d, [&](Index j, double v) { return t.invert(j, v); });
}

}  // namespace gpdyn
