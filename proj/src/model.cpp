#include "qbbgky/model.hpp"

#include <cmath>
#include <string>

namespace qbbgky {

std::vector<double> ModeGrid::momentum_of(int mode) const {
  if (mode < 0 || mode >= mode_count()) {
    throw InvalidModelError("mode " + std::to_string(mode) + " outside grid of " +
                            std::to_string(mode_count()) + " modes");
  }
  int g = grid_point_of(mode);
  std::vector<double> p(static_cast<std::size_t>(dims));
  for (int i = dims - 1; i >= 0; --i) {
    int digit = g % points_per_dim;
    g /= points_per_dim;
    p[static_cast<std::size_t>(i)] = -p_max + (digit + 0.5) * dp();
  }
  return p;
}

void ModeGrid::validate() const {
  if (dims < 1 || dims > 3) throw InvalidModelError("grid dims must be 1, 2, or 3");
  if (points_per_dim < 1) throw InvalidModelError("points_per_dim must be >= 1");
  if (n_species < 1) throw InvalidModelError("n_species must be >= 1");
  if (!(p_max > 0.0)) throw InvalidModelError("p_max must be > 0");
}

double InteractionKernel::evaluate(int j, int k, int mode_count) const {
  if (j < 0 || k < 0 || j >= mode_count || k >= mode_count) {
    throw InvalidModelError("kernel index outside mode range");
  }
  switch (variant) {
    case Variant::Constant:
      return constant_value;
    case Variant::Separable:
      return separable_f[static_cast<std::size_t>(j)] *
             separable_f[static_cast<std::size_t>(k)];
    case Variant::Tabulated:
      return table[static_cast<std::size_t>(j) * static_cast<std::size_t>(mode_count) +
                   static_cast<std::size_t>(k)];
  }
  throw InvalidModelError("unknown kernel variant");
}

void InteractionKernel::validate(int mode_count) const {
  std::size_t m = static_cast<std::size_t>(mode_count);
  switch (variant) {
    case Variant::Constant:
      return;
    case Variant::Separable:
      if (separable_f.size() != m) {
        throw InvalidModelError("separable kernel length " +
                                std::to_string(separable_f.size()) + " != mode count " +
                                std::to_string(mode_count));
      }
      return;
    case Variant::Tabulated:
      if (table.size() != m * m) {
        throw InvalidModelError("tabulated kernel must be M x M");
      }
      for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = j + 1; k < m; ++k) {
          if (table[j * m + k] != table[k * m + j]) {
            throw InvalidModelError("kernel table is not symmetric at (" +
                                    std::to_string(j) + "," + std::to_string(k) + ")");
          }
        }
      }
      return;
  }
  throw InvalidModelError("unknown kernel variant");
}

void ModelSpec::validate() const {
  grid.validate();
  if (mass < 0.0) throw InvalidModelError("mass must be >= 0");
  kernel.validate(grid.mode_count());
}

double ModelSpec::mode_energy(int mode) const {
  return dispersion(grid.momentum_of(mode), mass);
}

double dispersion(const std::vector<double>& p, double mass) {
  double p2 = 0.0;
  for (double pi : p) p2 += pi * pi;
  return std::sqrt(p2 + mass * mass);
}

LadderPolynomial build_free_hamiltonian(const ModelSpec& model) {
  model.validate();
  LadderPolynomial h;
  int M = model.grid.mode_count();
  for (int k = 0; k < M; ++k) {
    h.add_term({create(k), annihilate(k)}, model.mode_energy(k));
  }
  return h;
}

LadderPolynomial build_two_body_hamiltonian(const ModelSpec& model) {
  model.validate();
  LadderPolynomial h;
  int M = model.grid.mode_count();
  double g = model.coupling;
  for (int j = 0; j < M; ++j) {
    for (int k = 0; k < M; ++k) {
      double hjk = model.kernel.evaluate(j, k, M);
      if (hjk == 0.0 || g == 0.0) continue;
      OpSequence seq{create(std::min(j, k)), create(std::max(j, k)),
                     annihilate(std::min(j, k)), annihilate(std::max(j, k))};
      h.add_term(std::move(seq), 0.5 * g * hjk);
    }
  }
  return h;
}

LadderPolynomial GradedHamiltonian::total() const {
  LadderPolynomial sum;
  for (const auto& piece : pieces) sum += piece;
  return sum;
}

GradedHamiltonian grade_hamiltonian(const LadderPolynomial& H) {
  GradedHamiltonian graded;
  for (const auto& [seq, coeff] : H.terms()) {
    int degree = static_cast<int>(seq.size());
    if (degree == 0) continue;
    if (degree > 4) {
      throw UnsupportedInteractionError("Hamiltonian term of degree " +
                                        std::to_string(degree) + " exceeds the cap of 4");
    }
    graded.grade(degree + 1).add_term(seq, coeff);
  }
  return graded;
}

GradedHamiltonian assemble_hamiltonian(const ModelSpec& model) {
  LadderPolynomial h = build_free_hamiltonian(model);
  h += build_two_body_hamiltonian(model);
  return grade_hamiltonian(normal_order(h, model.grid.mode_count()));
}

}  // namespace qbbgky
