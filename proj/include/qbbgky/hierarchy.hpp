#pragma once

#include <map>
#include <utility>
#include <vector>

#include "qbbgky/errors.hpp"
#include "qbbgky/model.hpp"
#include "qbbgky/util.hpp"

namespace qbbgky {

// Dense complex tensor of shape M^(m+n), indexed row-major by the m
// annihilation modes followed by the n creation modes.
class GammaTensor {
 public:
  GammaTensor() = default;
  GammaTensor(int m, int n, int mode_count)
      : m_(m), n_(n), mode_count_(mode_count), data_(tensor_size(mode_count, m + n)) {}

  int order_m() const { return m_; }
  int order_n() const { return n_; }
  int rank() const { return m_ + n_; }
  int mode_count() const { return mode_count_; }

  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  Complex& at(const int* modes) { return data_[flat_index(modes, rank(), mode_count_)]; }
  const Complex& at(const int* modes) const {
    return data_[flat_index(modes, rank(), mode_count_)];
  }
  Complex& at(std::initializer_list<int> modes) {
    return at(std::data(modes));
  }
  const Complex& at(std::initializer_list<int> modes) const {
    return at(std::data(modes));
  }

 private:
  int m_ = 0, n_ = 0, mode_count_ = 0;
  std::vector<Complex> data_;
};

// Group average over permutations of the annihilation block and, separately,
// the creation block. Idempotent projector onto bosonic-symmetric tensors.
GammaTensor symmetrize(const GammaTensor& tensor);

// Max entrywise deviation from the symmetrized tensor.
double symmetry_residual(const GammaTensor& tensor);

// max |a - b| entrywise; shapes must agree.
double max_abs_diff(const GammaTensor& a, const GammaTensor& b);

double max_abs(const GammaTensor& tensor);

bool all_finite(const GammaTensor& tensor);

// Reduced-density-matrix collection Gamma^(m,n) for all 1 <= m+n <= K-1.
// Only m >= n tensors are stored; the m < n ones are the conjugate
// transposes, so Hermiticity of the collection holds by construction.
// Gamma^(0,0) is implicitly the constant 1.
class HierarchyState {
 public:
  HierarchyState() = default;
  HierarchyState(int mode_count, int K);

  int mode_count() const { return mode_count_; }
  int order_K() const { return K_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }

  // True when (m,n) lies in the stored range m+n <= K-1 (either of m >= n or
  // its implied conjugate partner).
  bool in_range(int m, int n) const;

  // Stored (m >= n) tensor orders, deterministic order.
  const std::vector<std::pair<int, int>>& stored_orders() const { return orders_; }

  const GammaTensor& stored(int m, int n) const;
  GammaTensor& stored_mutable(int m, int n);

  // Writes a stored tensor; symmetrizes and, for m == n, projects onto the
  // Hermitian part, so state invariants survive floating-point drift.
  void set_gamma(const GammaTensor& tensor);

  // Materializes Gamma^(m,n) for any in-range order, conjugate-transposing
  // when m < n. (0,0) yields a rank-0 tensor holding 1.
  GammaTensor get_gamma(int m, int n) const;

  // Single entry Gamma^(m,n)(annih; create) for in-range orders.
  Complex entry(const int* annih, int m, const int* create, int n) const;

  // Max Hermiticity violation over stored m == n tensors.
  double hermiticity_residual() const;

  // Max bosonic-symmetry violation over stored tensors.
  double symmetry_residual_max() const;

  bool finite() const;

 private:
  int mode_count_ = 0;
  int K_ = 0;
  double time_ = 0.0;
  std::vector<std::pair<int, int>> orders_;
  std::map<std::pair<int, int>, GammaTensor> tensors_;
};

// Gamma^(m,n)(p;p') = prod_i alpha_{p_i} * prod_j conj(alpha_{p'_j}).
HierarchyState init_coherent(const ModeGrid& grid, const std::vector<Complex>& alpha,
                             int K);
HierarchyState init_coherent(int mode_count, const std::vector<Complex>& alpha, int K);

// Gaussian (Wick-factorized) state with diagonal Gamma^(1,1) = diag(n_k):
// Gamma^(m,m)(p;p') = permanent of [delta_{p_i p'_j} n_{p_i}], zero otherwise.
HierarchyState init_gaussian(const ModeGrid& grid, const std::vector<double>& occupations,
                             int K);
HierarchyState init_gaussian(int mode_count, const std::vector<double>& occupations,
                             int K);

HierarchyState init_vacuum(int mode_count, int K);

// Max entrywise difference over all orders with m+n <= order_cap-1.
double distance(const HierarchyState& a, const HierarchyState& b, int order_cap);

}  // namespace qbbgky
