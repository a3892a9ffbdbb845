#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <vector>

#include "qbbgky/errors.hpp"
#include "qbbgky/hierarchy.hpp"
#include "qbbgky/ladder.hpp"

namespace qbbgky {

// Occupation-number basis with per-mode cutoff n_max and an optional cap on
// the total particle number. Enumeration is lexicographic in the occupation
// vectors, so indices are deterministic.
class FockBasis {
 public:
  FockBasis(int mode_count, int n_max, int total_cap = -1);

  int mode_count() const { return mode_count_; }
  int n_max() const { return n_max_; }
  int total_cap() const { return total_cap_; }
  int dim() const { return static_cast<int>(states_.size()); }

  const std::vector<int>& state(int index) const {
    return states_[static_cast<std::size_t>(index)];
  }
  // -1 when the occupation vector lies outside the basis.
  int index_of(const std::vector<int>& occupation) const;

  // True when any occupation sits at a cutoff (n_k = n_max, or total at cap).
  bool on_boundary(int index) const;

 private:
  int mode_count_, n_max_, total_cap_;
  std::vector<std::vector<int>> states_;
  std::map<std::vector<int>, int> index_;
};

// Matrix of a ladder polynomial on the truncated basis. Factors apply right
// to left; paths leaving the basis are dropped, so the matrix of a product
// equals the product of the factor matrices on the cutoff space.
Eigen::MatrixXcd matrix_of(const LadderPolynomial& poly, const FockBasis& basis);

class FockDensityMatrix {
 public:
  FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd rho);

  const FockBasis& basis() const { return *basis_; }
  const Eigen::MatrixXcd& rho() const { return rho_; }
  Eigen::MatrixXcd& rho() { return rho_; }

  // Checks Hermiticity, unit trace, and positive semidefiniteness.
  void validate(double herm_tol = 1e-12, double trace_tol = 1e-12,
                double psd_tol = 1e-10) const;

  // Total probability weight on cutoff-boundary basis states.
  double boundary_weight() const;

 private:
  std::shared_ptr<const FockBasis> basis_;
  Eigen::MatrixXcd rho_;
};

// Unit basis vector for an occupation vector; CutoffError when outside.
Eigen::VectorXcd fock_state_vector(const FockBasis& basis, const std::vector<int>& occ);

// Truncated exponential coherent state, renormalized. CutoffError when the
// dropped tail weight exceeds tail_tol.
Eigen::VectorXcd coherent_state_vector(const FockBasis& basis,
                                       const std::vector<Complex>& alpha,
                                       double tail_tol = 1e-12);

FockDensityMatrix density_from_vector(const FockBasis& basis,
                                      const Eigen::VectorXcd& psi);

// Product of per-mode geometric (thermal) diagonals. The geometric parameter
// of each mode is tuned by bisection so the truncated mean occupation matches
// occupations[k] exactly.
FockDensityMatrix thermal_density(const FockBasis& basis,
                                  const std::vector<double>& occupations);

// rho(t) = e^{-iHt} rho0 e^{+iHt} via eigendecomposition of matrix_of(H).
std::vector<FockDensityMatrix> evolve_density(const FockDensityMatrix& rho0,
                                              const LadderPolynomial& H,
                                              const std::vector<double>& t_grid);

// Gamma^(m,n)(p;p') = Tr(rho b†_{p'_1}..b†_{p'_n} b_{p_1}..b_{p_m}).
GammaTensor reduced_density(const FockDensityMatrix& rho, int m, int n);

// HierarchyState whose stored tensors are the reduced densities of rho.
HierarchyState hierarchy_from_oracle(const FockDensityMatrix& rho, int K);

}  // namespace qbbgky
