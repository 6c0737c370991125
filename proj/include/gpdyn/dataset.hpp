#pragma once

#include <gpdyn/types.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gpdyn {

/// One time-series experiment. Columns follow Dataset::names.
struct Series {
  VectorXd time;        // strictly increasing, length m
  MatrixXd values;      // m x d; entries where !observed are meaningless
  MaskMatrix observed;  // m x d

  Index length() const { return time.size(); }
};

enum class PerturbationKind { knockout, knockdown };

/// Steady state measured after silencing (or repressing) one gene.
struct PerturbationExperiment {
  Index gene{0};
  PerturbationKind kind{PerturbationKind::knockout};
  VectorXd state;  // length d
};

/// Time series plus optional steady-state data. The first `n_genes()`
/// columns are genes; trailing `n_inputs` columns are known input signals
/// that enter the kernels as regulators but have no dynamics of their own.
struct Dataset {
  std::vector<std::string> names;
  Index n_inputs{0};
  std::vector<Series> series;
  std::vector<PerturbationExperiment> perturbations;
  std::vector<VectorXd> steady_states;  // wild type and multifactorial

  Index dim() const { return static_cast<Index>(names.size()); }
  Index n_genes() const { return dim() - n_inputs; }
  bool has_steady_state_data() const {
    return !perturbations.empty() || !steady_states.empty();
  }

  /// Throws InvalidData on a broken invariant.
  void validate() const;

  std::optional<Index> index_of(const std::string& name) const;
};

/// Per-column affine map x -> (x - offset) * scale.
struct ScalingTransform {
  VectorXd offset;
  VectorXd scale;
  std::vector<Index> constant_columns;  // scale forced to 1

  double apply(Index col, double v) const { return (v - offset(col)) * scale(col); }
  double invert(Index col, double v) const { return v / scale(col) + offset(col); }
};

/// Scaled copy with max - min = 1 per column across all series and
/// steady-state data, plus the transform that produced it.
std::pair<Dataset, ScalingTransform> scale_dataset(const Dataset& d);

Dataset apply_transform(const Dataset& d, const ScalingTransform& t);
Dataset invert_transform(const Dataset& d, const ScalingTransform& t);

}  // namespace gpdyn
