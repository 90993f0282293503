#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "shelab/heat_kernel.hpp"

namespace shelab {

/// Uniform periodic grid of cell centers on [-pi, pi].
struct Grid {
  int n_cells;
  double dx;

  explicit Grid(int n) : n_cells(n), dx(kTwoPi / n) {
    if (n < 2) throw std::invalid_argument("Grid: need at least 2 cells");
  }

  double center(int i) const { return -kPi + (i + 0.5) * dx; }

  int cell_of(double x) const {
    double s = (x + kPi) / dx;
    int i = static_cast<int>(std::floor(s));
    i %= n_cells;
    if (i < 0) i += n_cells;
    return i;
  }

  bool operator==(const Grid& o) const { return n_cells == o.n_cells; }
};

/// Spatial profile at one instant; values are cell-center samples.
struct Field {
  Grid grid;
  double time = 0.0;
  std::vector<double> values;

  explicit Field(const Grid& g, double fill = 0.0)
      : grid(g), values(static_cast<std::size_t>(g.n_cells), fill) {}

  double min_value() const {
    double m = values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double max_value() const {
    double m = values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline Field constant_field(const Grid& g, double c) {
  if (!(c >= 0.0)) throw std::invalid_argument("constant_field: value must be nonnegative");
  return Field(g, c);
}

}  // namespace shelab
