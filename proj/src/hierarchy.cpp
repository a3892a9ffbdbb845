#include "qbbgky/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qbbgky {

namespace {

std::size_t canonical_key(std::size_t idx, int m, int n, int M) {
  int modes[16];
  int rank = m + n;
  unflatten_index(idx, rank, M, modes);
  std::sort(modes, modes + m);
  std::sort(modes + m, modes + rank);
  return flat_index(modes, rank, M);
}

// Permanent of a k x k matrix by expansion over the first free column set.
Complex permanent(const std::vector<Complex>& a, int k, unsigned cols, int row) {
  if (row == k) return 1.0;
  Complex sum = 0.0;
  for (int j = 0; j < k; ++j) {
    if (cols & (1u << j)) continue;
    Complex aij = a[static_cast<std::size_t>(row * k + j)];
    if (aij == Complex{0.0, 0.0}) continue;
    sum += aij * permanent(a, k, cols | (1u << j), row + 1);
  }
  return sum;
}

}  // namespace

GammaTensor symmetrize(const GammaTensor& tensor) {
  int m = tensor.order_m(), n = tensor.order_n(), M = tensor.mode_count();
  if (tensor.rank() <= 1 || (m <= 1 && n <= 1)) return tensor;
  std::vector<Complex> sums(tensor.size(), Complex{0.0, 0.0});
  std::vector<int> counts(tensor.size(), 0);
  for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
    std::size_t key = canonical_key(idx, m, n, M);
    sums[key] += tensor.data()[idx];
    counts[key] += 1;
  }
  GammaTensor out(m, n, M);
  for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
    std::size_t key = canonical_key(idx, m, n, M);
    out.data()[idx] = sums[key] / static_cast<double>(counts[key]);
  }
  return out;
}

double symmetry_residual(const GammaTensor& tensor) {
  return max_abs_diff(tensor, symmetrize(tensor));
}

double max_abs_diff(const GammaTensor& a, const GammaTensor& b) {
  if (a.order_m() != b.order_m() || a.order_n() != b.order_n() ||
      a.mode_count() != b.mode_count()) {
    throw ConfigError("tensor shape mismatch in max_abs_diff");
  }
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    r = std::max(r, std::abs(a.data()[i] - b.data()[i]));
  }
  return r;
}

double max_abs(const GammaTensor& tensor) {
  double r = 0.0;
  for (const Complex& z : tensor.data()) r = std::max(r, std::abs(z));
  return r;
}

bool all_finite(const GammaTensor& tensor) {
  for (const Complex& z : tensor.data()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

HierarchyState::HierarchyState(int mode_count, int K) : mode_count_(mode_count), K_(K) {
  if (mode_count < 1) throw ConfigError("mode count must be >= 1");
  if (K < 1) throw ConfigError("hierarchy order K must be >= 1");
  for (int total = 1; total <= K - 1; ++total) {
    for (int n = 0; total - n >= n; ++n) {
      int m = total - n;
      orders_.emplace_back(m, n);
      tensors_.emplace(std::make_pair(m, n), GammaTensor(m, n, mode_count));
    }
  }
}

bool HierarchyState::in_range(int m, int n) const {
  return m >= 0 && n >= 0 && m + n <= K_ - 1;
}

const GammaTensor& HierarchyState::stored(int m, int n) const {
  auto it = tensors_.find({m, n});
  if (it == tensors_.end()) {
    throw StateOrderError("Gamma^(" + std::to_string(m) + "," + std::to_string(n) +
                          ") is not stored (K=" + std::to_string(K_) + ")");
  }
  return it->second;
}

GammaTensor& HierarchyState::stored_mutable(int m, int n) {
  auto it = tensors_.find({m, n});
  if (it == tensors_.end()) {
    throw StateOrderError("Gamma^(" + std::to_string(m) + "," + std::to_string(n) +
                          ") is not stored (K=" + std::to_string(K_) + ")");
  }
  return it->second;
}

void HierarchyState::set_gamma(const GammaTensor& tensor) {
  int m = tensor.order_m(), n = tensor.order_n();
  if (m < n) throw StateOrderError("only m >= n tensors are stored; set the conjugate");
  if (!in_range(m, n)) {
    throw StateOrderError("Gamma^(" + std::to_string(m) + "," + std::to_string(n) +
                          ") exceeds stored range K-1=" + std::to_string(K_ - 1));
  }
  if (tensor.mode_count() != mode_count_) {
    throw ConfigError("tensor mode count differs from state mode count");
  }
  GammaTensor sym = symmetrize(tensor);
  if (m == n) {
    // Project onto the Hermitian part: average with the conjugate transpose
    // (swap the annihilation and creation blocks).
    GammaTensor herm(m, n, mode_count_);
    int modes[16], swapped[16];
    int rank = m + n;
    for (std::size_t idx = 0; idx < sym.size(); ++idx) {
      unflatten_index(idx, rank, mode_count_, modes);
      for (int i = 0; i < m; ++i) {
        swapped[i] = modes[m + i];
        swapped[m + i] = modes[i];
      }
      std::size_t partner = flat_index(swapped, rank, mode_count_);
      herm.data()[idx] = 0.5 * (sym.data()[idx] + std::conj(sym.data()[partner]));
    }
    tensors_.at({m, n}) = std::move(herm);
  } else {
    tensors_.at({m, n}) = std::move(sym);
  }
}

GammaTensor HierarchyState::get_gamma(int m, int n) const {
  if (!in_range(m, n)) {
    throw StateOrderError("Gamma^(" + std::to_string(m) + "," + std::to_string(n) +
                          ") is out of range for K=" + std::to_string(K_) +
                          "; apply a closure");
  }
  if (m == 0 && n == 0) {
    GammaTensor unit(0, 0, mode_count_);
    unit.data()[0] = 1.0;
    return unit;
  }
  if (m >= n) return stored(m, n);
  const GammaTensor& base = stored(n, m);
  GammaTensor out(m, n, mode_count_);
  int modes[16], swapped[16];
  int rank = m + n;
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    unflatten_index(idx, rank, mode_count_, modes);
    for (int i = 0; i < n; ++i) swapped[i] = modes[m + i];
    for (int i = 0; i < m; ++i) swapped[n + i] = modes[i];
    out.data()[idx] = std::conj(base.data()[flat_index(swapped, rank, mode_count_)]);
  }
  return out;
}

Complex HierarchyState::entry(const int* annih, int m, const int* create, int n) const {
  if (m == 0 && n == 0) return 1.0;
  int modes[16];
  if (m >= n) {
    for (int i = 0; i < m; ++i) modes[i] = annih[i];
    for (int i = 0; i < n; ++i) modes[m + i] = create[i];
    return stored(m, n).at(modes);
  }
  for (int i = 0; i < n; ++i) modes[i] = create[i];
  for (int i = 0; i < m; ++i) modes[n + i] = annih[i];
  return std::conj(stored(n, m).at(modes));
}

double HierarchyState::hermiticity_residual() const {
  double r = 0.0;
  int modes[16], swapped[16];
  for (const auto& [order, tensor] : tensors_) {
    auto [m, n] = order;
    if (m != n) continue;
    int rank = m + n;
    for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
      unflatten_index(idx, rank, mode_count_, modes);
      for (int i = 0; i < m; ++i) {
        swapped[i] = modes[m + i];
        swapped[m + i] = modes[i];
      }
      std::size_t partner = flat_index(swapped, rank, mode_count_);
      r = std::max(r, std::abs(tensor.data()[idx] - std::conj(tensor.data()[partner])));
    }
  }
  return r;
}

double HierarchyState::symmetry_residual_max() const {
  double r = 0.0;
  for (const auto& [order, tensor] : tensors_) {
    r = std::max(r, symmetry_residual(tensor));
  }
  return r;
}

bool HierarchyState::finite() const {
  for (const auto& [order, tensor] : tensors_) {
    if (!all_finite(tensor)) return false;
  }
  return true;
}

HierarchyState init_coherent(int mode_count, const std::vector<Complex>& alpha, int K) {
  if (static_cast<int>(alpha.size()) != mode_count) {
    throw ConfigError("alpha length " + std::to_string(alpha.size()) +
                      " != mode count " + std::to_string(mode_count));
  }
  HierarchyState state(mode_count, K);
  int modes[16];
  for (auto [m, n] : state.stored_orders()) {
    GammaTensor tensor(m, n, mode_count);
    int rank = m + n;
    for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
      unflatten_index(idx, rank, mode_count, modes);
      Complex v = 1.0;
      for (int i = 0; i < m; ++i) v *= alpha[static_cast<std::size_t>(modes[i])];
      for (int i = 0; i < n; ++i) {
        v *= std::conj(alpha[static_cast<std::size_t>(modes[m + i])]);
      }
      tensor.data()[idx] = v;
    }
    state.set_gamma(tensor);
  }
  return state;
}

HierarchyState init_coherent(const ModeGrid& grid, const std::vector<Complex>& alpha,
                             int K) {
  return init_coherent(grid.mode_count(), alpha, K);
}

HierarchyState init_gaussian(int mode_count, const std::vector<double>& occupations,
                             int K) {
  if (static_cast<int>(occupations.size()) != mode_count) {
    throw ConfigError("occupations length != mode count");
  }
  for (double nk : occupations) {
    if (nk < 0.0) throw ConfigError("occupations must be >= 0");
  }
  HierarchyState state(mode_count, K);
  int modes[16];
  for (auto [m, n] : state.stored_orders()) {
    if (m != n) continue;  // zero tensor already in place
    GammaTensor tensor(m, n, mode_count);
    int rank = m + n;
    std::vector<Complex> pairing(static_cast<std::size_t>(m * m));
    for (std::size_t idx = 0; idx < tensor.size(); ++idx) {
      unflatten_index(idx, rank, mode_count, modes);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          pairing[static_cast<std::size_t>(i * m + j)] =
              modes[i] == modes[m + j] ? occupations[static_cast<std::size_t>(modes[i])]
                                       : 0.0;
        }
      }
      tensor.data()[idx] = permanent(pairing, m, 0u, 0);
    }
    state.set_gamma(tensor);
  }
  return state;
}

HierarchyState init_gaussian(const ModeGrid& grid, const std::vector<double>& occupations,
                             int K) {
  return init_gaussian(grid.mode_count(), occupations, K);
}

HierarchyState init_vacuum(int mode_count, int K) {
  return HierarchyState(mode_count, K);
}

double distance(const HierarchyState& a, const HierarchyState& b, int order_cap) {
  if (a.mode_count() != b.mode_count()) {
    throw ConfigError("states have incompatible mode counts");
  }
  if (a.order_K() < order_cap || b.order_K() < order_cap) {
    throw StateOrderError("distance order_cap exceeds a state's stored range");
  }
  double r = 0.0;
  for (auto [m, n] : a.stored_orders()) {
    if (m + n > order_cap - 1) continue;
    r = std::max(r, max_abs_diff(a.stored(m, n), b.stored(m, n)));
  }
  return r;
}

}  // namespace qbbgky
