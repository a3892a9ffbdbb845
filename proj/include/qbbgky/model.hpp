#pragma once

#include <array>
#include <vector>

#include "qbbgky/errors.hpp"
#include "qbbgky/ladder.hpp"

namespace qbbgky {

// Uniform centered momentum lattice. Flat mode index folds the grid point and
// the species: mode = grid_point * n_species + species.
struct ModeGrid {
  int dims = 1;
  int points_per_dim = 1;
  double p_max = 1.0;
  int n_species = 1;

  int grid_points() const {
    int g = 1;
    for (int i = 0; i < dims; ++i) g *= points_per_dim;
    return g;
  }
  int mode_count() const { return grid_points() * n_species; }
  double dp() const { return 2.0 * p_max / points_per_dim; }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dims; ++i) v *= dp();
    return v;
  }
  int grid_point_of(int mode) const { return mode / n_species; }
  int species_of(int mode) const { return mode % n_species; }

  // Momentum components of a mode: p_j = -p_max + (c_j + 1/2) dp, with c the
  // row-major digits of the grid point.
  std::vector<double> momentum_of(int mode) const;

  void validate() const;
};

struct InteractionKernel {
  enum class Variant { Constant, Separable, Tabulated };

  Variant variant = Variant::Constant;
  double constant_value = 1.0;
  std::vector<double> separable_f;     // length M; h_jk = f_j f_k
  std::vector<double> table;           // M*M row-major symmetric

  double evaluate(int j, int k, int mode_count) const;
  void validate(int mode_count) const;

  static InteractionKernel constant(double value) {
    InteractionKernel k;
    k.variant = Variant::Constant;
    k.constant_value = value;
    return k;
  }
  static InteractionKernel separable(std::vector<double> f) {
    InteractionKernel k;
    k.variant = Variant::Separable;
    k.separable_f = std::move(f);
    return k;
  }
  static InteractionKernel tabulated(std::vector<double> t) {
    InteractionKernel k;
    k.variant = Variant::Tabulated;
    k.table = std::move(t);
    return k;
  }
};

struct ModelSpec {
  ModeGrid grid;
  double mass = 1.0;
  InteractionKernel kernel = InteractionKernel::constant(1.0);
  double coupling = 0.0;

  void validate() const;
  double mode_energy(int mode) const;
};

// E_p = sqrt(|p|^2 + m^2), natural units.
double dispersion(const std::vector<double>& p, double mass);

// H_free = sum_k E_k b†_k b_k.
LadderPolynomial build_free_hamiltonian(const ModelSpec& model);

// H_int = (g/2) sum_{j,k} h_jk b†_j b†_k b_j b_k, normal-ordered.
LadderPolynomial build_two_body_hamiltonian(const ModelSpec& model);

// Hamiltonian split by filtration grade: pieces[i] holds the terms of factor
// count exactly i+1 (grades 2..5). Scalar terms are dropped; they generate no
// dynamics.
struct GradedHamiltonian {
  std::array<LadderPolynomial, 4> pieces;

  LadderPolynomial& grade(int g) { return pieces.at(static_cast<std::size_t>(g - 2)); }
  const LadderPolynomial& grade(int g) const {
    return pieces.at(static_cast<std::size_t>(g - 2));
  }
  LadderPolynomial total() const;
};

// Splits an arbitrary normal-ordered H by degree. Degree > 4 is rejected.
GradedHamiltonian grade_hamiltonian(const LadderPolynomial& H);

// Free + two-body pieces of the model.
GradedHamiltonian assemble_hamiltonian(const ModelSpec& model);

}  // namespace qbbgky
