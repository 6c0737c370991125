#include <gpdyn/grid.hpp>

#include <stdexcept>

namespace gpdyn {

Grid::Grid(std::vector<SeriesGrid> series) : series_(std::move(series)) {
  Index offset = 0;
  std::vector<double> deltas;
  for (auto& s : series_) {
    s.offset = offset;
    for (Index k = 1; k < s.points(); ++k) {
      lower_.push_back(offset + k - 1);
      upper_.push_back(offset + k);
      deltas.push_back(s.tau(k) - s.tau(k - 1));
    }
    offset += s.points();
  }
  rows_ = offset;
  delta_ = Eigen::Map<const VectorXd>(deltas.data(), static_cast<Index>(deltas.size()));
}

std::vector<Index> Grid::series_breaks() const {
  std::vector<Index> out;
  for (std::size_t s = 1; s < series_.size(); ++s) out.push_back(series_[s].offset);
  return out;
}

SeriesGrid build_series_grid(const VectorXd& time, Index refinement) {
  if (refinement < 1) throw std::invalid_argument("build_grid: refinement must be >= 1");
  if (time.size() < 1) throw std::invalid_argument("build_grid: empty time vector");
  SeriesGrid g;
  const Index m = time.size();
  g.tau.resize((m - 1) * refinement + 1);
  for (Index j = 0; j < m; ++j) {
    g.meas_index.push_back(j * refinement);
    g.tau(j * refinement) = time(j);
    if (j + 1 == m) break;
    const double step = (time(j + 1) - time(j)) / static_cast<double>(refinement);
    for (Index s = 1; s < refinement; ++s) {
      g.tau(j * refinement + s) = time(j) + step * static_cast<double>(s);
    }
  }
  return g;
}

Grid build_grid(const Dataset& d, Index refinement) {
  std::vector<SeriesGrid> parts;
  parts.reserve(d.series.size());
  for (const auto& s : d.series) parts.push_back(build_series_grid(s.time, refinement));
  return Grid(std::move(parts));
}

MatrixXd Trajectory::lower_states() const {
  const auto& rows = grid.lower_rows();
  MatrixXd out(static_cast<Index>(rows.size()), X.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = X.row(rows[k]);
  return out;
}

VectorXd Trajectory::increments(Index col) const {
  const auto& lo = grid.lower_rows();
  const auto& up = grid.upper_rows();
  VectorXd out(static_cast<Index>(lo.size()));
  for (std::size_t k = 0; k < lo.size(); ++k) {
    out(static_cast<Index>(k)) = X(up[k], col) - X(lo[k], col);
  }
  return out;
}

Trajectory interpolate_trajectory(const Dataset& d, const Grid& grid) {
  const Index dim = d.dim();
  Trajectory traj;
  traj.grid = grid;
  traj.X = MatrixXd::Zero(grid.rows(), dim);

  VectorXd fallback = VectorXd::Zero(dim);
  for (Index j = 0; j < dim; ++j) {
    double sum = 0.0;
    Index count = 0;
    for (const auto& s : d.series) {
      for (Index k = 0; k < s.length(); ++k) {
        if (s.observed(k, j)) {
          sum += s.values(k, j);
          ++count;
        }
      }
    }
    if (count > 0) fallback(j) = sum / static_cast<double>(count);
  }

  for (std::size_t si = 0; si < d.series.size(); ++si) {
    const Series& s = d.series[si];
    const SeriesGrid& g = grid.series()[si];
    for (Index j = 0; j < dim; ++j) {
      std::vector<Index> obs;
      for (Index k = 0; k < s.length(); ++k) {
        if (s.observed(k, j)) obs.push_back(k);
      }
      for (Index r = 0; r < g.points(); ++r) {
        double v = fallback(j);
        if (!obs.empty()) {
          const double t = g.tau(r);
          if (t <= s.time(obs.front())) {
            v = s.values(obs.front(), j);
          } else if (t >= s.time(obs.back())) {
            v = s.values(obs.back(), j);
          } else {
            std::size_t u = 1;
            while (s.time(obs[u]) < t) ++u;
            const Index k0 = obs[u - 1];
            const Index k1 = obs[u];
            const double w = (t - s.time(k0)) / (s.time(k1) - s.time(k0));
            v = (1.0 - w) * s.values(k0, j) + w * s.values(k1, j);
          }
        }
        traj.X(g.offset + r, j) = v;
      }
    }
  }
  return traj;
}

}  // namespace gpdyn
