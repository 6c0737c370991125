#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/types.hpp>

#include <vector>

namespace gpdyn {

/// Discretisation of one series. Measurement j sits at tau(meas_index[j]).
struct SeriesGrid {
  VectorXd tau;
  std::vector<Index> meas_index;
  Index offset{0};  // first row of this series in the concatenated trajectory

  Index points() const { return tau.size(); }
};

/// Concatenated grid over all series. Transitions never span series.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<SeriesGrid> series);

  const std::vector<SeriesGrid>& series() const { return series_; }
  Index rows() const { return rows_; }
  Index transitions() const { return static_cast<Index>(lower_.size()); }

  /// Row indices of X_{tau_{k-1}} and X_{tau_k} for every transition k.
  const std::vector<Index>& lower_rows() const { return lower_; }
  const std::vector<Index>& upper_rows() const { return upper_; }
  const VectorXd& delta() const { return delta_; }

  /// First row of every series after the first.
  std::vector<Index> series_breaks() const;

  /// Row in the concatenated trajectory for measurement j of series s.
  Index measurement_row(std::size_t s, std::size_t j) const {
    return series_[s].offset + series_[s].meas_index[j];
  }

 private:
  std::vector<SeriesGrid> series_;
  std::vector<Index> lower_;
  std::vector<Index> upper_;
  VectorXd delta_;
  Index rows_{0};
};

/// Each measurement interval split into `refinement` equal steps.
Grid build_grid(const Dataset& d, Index refinement);
SeriesGrid build_series_grid(const VectorXd& time, Index refinement);

/// Discretised latent state, rows follow the grid.
struct Trajectory {
  MatrixXd X;  // grid.rows() x d
  Grid grid;

  /// States X_{tau_0..tau_{M-1}} of every series, stacked.
  MatrixXd lower_states() const;
  /// Column `col` of X_{tau_k} - X_{tau_{k-1}} over all transitions.
  VectorXd increments(Index col) const;
};

/// Linear interpolation of each series' observations onto its grid.
/// Missing values are interpolated from observed neighbours.
Trajectory interpolate_trajectory(const Dataset& d, const Grid& grid);

}  // namespace gpdyn
