#pragma once

#include <vector>

#include "qbbgky/hierarchy.hpp"
#include "qbbgky/model.hpp"

namespace qbbgky {

// Uniform centered position lattice with cell-midpoint sampling.
struct SpatialGrid {
  int dims = 1;
  int points_per_dim = 1;
  double x_max = 1.0;

  int point_count() const {
    int g = 1;
    for (int i = 0; i < dims; ++i) g *= points_per_dim;
    return g;
  }
  double dx() const { return 2.0 * x_max / points_per_dim; }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dims; ++i) v *= dx();
    return v;
  }
  std::vector<double> position_of(int index) const;

  // Dual lattice of a momentum grid: extent pi/dp per axis and matching point
  // count, which makes the lattice plane waves exactly orthogonal and the
  // spatial sum rules machine-precision identities.
  static SpatialGrid dual_of(const ModeGrid& grid);
};

// D(p_k) = Gamma^(1,1)(k;k) / cell_volume (continuum normalization; the
// per-leg 1/((2pi)^d 2E) measure is already absorbed in the discrete modes).
std::vector<double> momentum_density(const HierarchyState& state, const ModeGrid& grid);

// Free-field energy density on the spatial grid, from Gamma^(2,0), its
// conjugate, and Gamma^(1,1), with per-leg weights sqrt(cellvol/((2pi)^d 2E)).
std::vector<double> energy_density(const HierarchyState& state, const ModelSpec& model,
                                   const SpatialGrid& xs);

// Particle density with constant per-leg weight sqrt(cellvol/(2pi)^d);
// integrates to total_number exactly on the dual lattice.
std::vector<double> number_density(const HierarchyState& state, const ModelSpec& model,
                                   const SpatialGrid& xs);

// Sum over modes of Gamma^(1,1)(k;k).
double total_number(const HierarchyState& state);

}  // namespace qbbgky
