#include "qbbgky/observables.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qbbgky/errors.hpp"

namespace qbbgky {

std::vector<double> SpatialGrid::position_of(int index) const {
  std::vector<double> x(static_cast<std::size_t>(dims));
  for (int i = dims - 1; i >= 0; --i) {
    int digit = index % points_per_dim;
    index /= points_per_dim;
    x[static_cast<std::size_t>(i)] = -x_max + (digit + 0.5) * dx();
  }
  return x;
}

SpatialGrid SpatialGrid::dual_of(const ModeGrid& grid) {
  SpatialGrid xs;
  xs.dims = grid.dims;
  xs.points_per_dim = grid.points_per_dim;
  xs.x_max = std::numbers::pi / grid.dp();
  return xs;
}

namespace {

double two_pi_pow(int dims) {
  double v = 1.0;
  for (int i = 0; i < dims; ++i) v *= 2.0 * std::numbers::pi;
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> momentum_density(const HierarchyState& state, const ModeGrid& grid) {
  const GammaTensor& g11 = state.stored(1, 1);
  int M = grid.mode_count();
  std::vector<double> out(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) {
    int modes[2] = {k, k};
    out[static_cast<std::size_t>(k)] = g11.at(modes).real() / grid.cell_volume();
  }
  return out;
}

std::vector<double> energy_density(const HierarchyState& state, const ModelSpec& model,
                                   const SpatialGrid& xs) {
  if (!state.in_range(2, 0)) {
    throw StateOrderError("energy_density needs Gamma^(2,0); state order is too low");
  }
  const GammaTensor& g20 = state.stored(2, 0);
  const GammaTensor& g11 = state.stored(1, 1);
  const ModeGrid& grid = model.grid;
  int M = grid.mode_count();

  std::vector<std::vector<double>> momenta(static_cast<std::size_t>(M));
  std::vector<double> energy(static_cast<std::size_t>(M));
  std::vector<double> w(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) {
    momenta[static_cast<std::size_t>(k)] = grid.momentum_of(k);
    energy[static_cast<std::size_t>(k)] = model.mode_energy(k);
    w[static_cast<std::size_t>(k)] =
        std::sqrt(grid.cell_volume() /
                  (two_pi_pow(grid.dims) * 2.0 * energy[static_cast<std::size_t>(k)]));
  }

  double m2 = model.mass * model.mass;
  std::vector<double> out(static_cast<std::size_t>(xs.point_count()));
  double max_imag = 0.0;
  for (int xi = 0; xi < xs.point_count(); ++xi) {
    std::vector<double> x = xs.position_of(xi);
    Complex total = 0.0;
    for (int k = 0; k < M; ++k) {
      for (int p = 0; p < M; ++p) {
        if (grid.species_of(k) != grid.species_of(p)) continue;
        const std::vector<double>& pk = momenta[static_cast<std::size_t>(k)];
        const std::vector<double>& pp = momenta[static_cast<std::size_t>(p)];
        double ww = w[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(p)];
        double pk_dot_pp = dot(pk, pp);
        int kp[2] = {k, p};
        int pk_idx[2] = {p, k};

        double phase_sum = dot(x, pk) + dot(x, pp);
        Complex plane_sum{std::cos(phase_sum), std::sin(phase_sum)};
        Complex pair = ww * (m2 - energy[static_cast<std::size_t>(p)] *
                                      energy[static_cast<std::size_t>(k)] +
                             pk_dot_pp) *
                       plane_sum * g20.at(kp);
        total += pair + std::conj(pair);

        double phase_diff = dot(x, pk) - dot(x, pp);
        Complex plane_diff{std::cos(phase_diff), -std::sin(phase_diff)};
        total += ww * (m2 + energy[static_cast<std::size_t>(p)] *
                                energy[static_cast<std::size_t>(k)] +
                       pk_dot_pp) *
                 plane_diff * g11.at(pk_idx);
      }
    }
    max_imag = std::max(max_imag, std::abs(total.imag()));
    out[static_cast<std::size_t>(xi)] = total.real();
  }
  if (max_imag > 1e-10) {
    throw NumericalError("energy density imaginary residual " + format_value(max_imag));
  }
  return out;
}

std::vector<double> number_density(const HierarchyState& state, const ModelSpec& model,
                                   const SpatialGrid& xs) {
  const GammaTensor& g11 = state.stored(1, 1);
  const ModeGrid& grid = model.grid;
  int M = grid.mode_count();
  double u2 = grid.cell_volume() / two_pi_pow(grid.dims);

  std::vector<std::vector<double>> momenta(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) momenta[static_cast<std::size_t>(k)] = grid.momentum_of(k);

  std::vector<double> out(static_cast<std::size_t>(xs.point_count()));
  for (int xi = 0; xi < xs.point_count(); ++xi) {
    std::vector<double> x = xs.position_of(xi);
    Complex total = 0.0;
    for (int k = 0; k < M; ++k) {
      for (int p = 0; p < M; ++p) {
        if (grid.species_of(k) != grid.species_of(p)) continue;
        double phase = dot(x, momenta[static_cast<std::size_t>(k)]) -
                       dot(x, momenta[static_cast<std::size_t>(p)]);
        Complex plane{std::cos(phase), -std::sin(phase)};
        int pk_idx[2] = {p, k};
        total += u2 * plane * g11.at(pk_idx);
      }
    }
    out[static_cast<std::size_t>(xi)] = total.real();
  }
  return out;
}

double total_number(const HierarchyState& state) {
  const GammaTensor& g11 = state.stored(1, 1);
  double total = 0.0;
  for (int k = 0; k < state.mode_count(); ++k) {
    int modes[2] = {k, k};
    total += g11.at(modes).real();
  }
  return total;
}

}  // namespace qbbgky
