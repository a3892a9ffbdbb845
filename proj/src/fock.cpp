#include "qbbgky/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qbbgky {

namespace {

int total_occupation(const std::vector<int>& occ) {
  return std::accumulate(occ.begin(), occ.end(), 0);
}

// Applies one ladder factor to an occupation vector in place. Returns false
// when the path leaves the truncated basis (or is annihilated to zero).
bool apply_factor(const LadderOp& op, std::vector<int>& occ, double& amp, int n_max,
                  int total_cap, int& total) {
  int& nk = occ[static_cast<std::size_t>(op.mode)];
  if (op.kind == OpKind::Annihilate) {
    if (nk == 0) return false;
    amp *= std::sqrt(static_cast<double>(nk));
    nk -= 1;
    total -= 1;
  } else {
    nk += 1;
    total += 1;
    if (nk > n_max || (total_cap >= 0 && total > total_cap)) return false;
    amp *= std::sqrt(static_cast<double>(nk));
  }
  return true;
}

}  // namespace

FockBasis::FockBasis(int mode_count, int n_max, int total_cap)
    : mode_count_(mode_count), n_max_(n_max), total_cap_(total_cap) {
  if (mode_count < 1) throw ConfigError("Fock basis needs at least one mode");
  if (n_max < 0) throw ConfigError("n_max must be >= 0");
  std::vector<int> occ(static_cast<std::size_t>(mode_count), 0);
  while (true) {
    if (total_cap_ < 0 || total_occupation(occ) <= total_cap_) {
      index_.emplace(occ, static_cast<int>(states_.size()));
      states_.push_back(occ);
    }
    int i = mode_count - 1;
    for (; i >= 0; --i) {
      if (++occ[static_cast<std::size_t>(i)] <= n_max) break;
      occ[static_cast<std::size_t>(i)] = 0;
    }
    if (i < 0) break;
  }
}

int FockBasis::index_of(const std::vector<int>& occupation) const {
  auto it = index_.find(occupation);
  return it == index_.end() ? -1 : it->second;
}

bool FockBasis::on_boundary(int index) const {
  const std::vector<int>& occ = states_[static_cast<std::size_t>(index)];
  for (int nk : occ) {
    if (nk == n_max_) return true;
  }
  return total_cap_ >= 0 && total_occupation(occ) == total_cap_;
}

Eigen::MatrixXcd matrix_of(const LadderPolynomial& poly, const FockBasis& basis) {
  validate_modes(poly, basis.mode_count());
  int dim = basis.dim();
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
  parallel_chunks(static_cast<std::size_t>(dim), [&](std::size_t begin, std::size_t end) {
    std::vector<int> occ;
    for (std::size_t col = begin; col < end; ++col) {
      for (const auto& [seq, coeff] : poly.terms()) {
        occ = basis.state(static_cast<int>(col));
        double amp = 1.0;
        int total = total_occupation(occ);
        bool alive = true;
        for (auto it = seq.rbegin(); it != seq.rend() && alive; ++it) {
          alive = apply_factor(*it, occ, amp, basis.n_max(), basis.total_cap(), total);
        }
        if (!alive) continue;
        int row = basis.index_of(occ);
        if (row < 0) continue;
        mat(row, static_cast<Eigen::Index>(col)) += coeff * amp;
      }
    }
  });
  return mat;
}

FockDensityMatrix::FockDensityMatrix(FockBasis basis, Eigen::MatrixXcd rho)
    : basis_(std::make_shared<FockBasis>(std::move(basis))), rho_(std::move(rho)) {
  if (rho_.rows() != basis_->dim() || rho_.cols() != basis_->dim()) {
    throw ConfigError("density matrix dimension differs from basis dimension");
  }
}

void FockDensityMatrix::validate(double herm_tol, double trace_tol, double psd_tol) const {
  double herm = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > herm_tol) {
    throw NumericalError("density matrix Hermiticity residual " + format_value(herm));
  }
  double tr = std::abs(rho_.trace() - Complex{1.0, 0.0});
  if (tr > trace_tol) {
    throw NumericalError("density matrix trace deviates from 1 by " + format_value(tr));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      0.5 * (rho_ + rho_.adjoint()), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition failed during density validation");
  }
  if (solver.eigenvalues().minCoeff() < -psd_tol) {
    throw NumericalError("density matrix has negative eigenvalue " +
                         format_value(solver.eigenvalues().minCoeff()));
  }
}

double FockDensityMatrix::boundary_weight() const {
  double w = 0.0;
  for (int j = 0; j < basis_->dim(); ++j) {
    if (basis_->on_boundary(j)) w += rho_(j, j).real();
  }
  return w;
}

Eigen::VectorXcd fock_state_vector(const FockBasis& basis, const std::vector<int>& occ) {
  if (static_cast<int>(occ.size()) != basis.mode_count()) {
    throw ConfigError("occupation vector length differs from mode count");
  }
  int idx = basis.index_of(occ);
  if (idx < 0) {
    throw CutoffError("requested Fock state lies outside the truncated basis");
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis.dim());
  psi(idx) = 1.0;
  return psi;
}

Eigen::VectorXcd coherent_state_vector(const FockBasis& basis,
                                       const std::vector<Complex>& alpha,
                                       double tail_tol) {
  if (static_cast<int>(alpha.size()) != basis.mode_count()) {
    throw ConfigError("alpha length differs from mode count");
  }
  Eigen::VectorXcd psi(basis.dim());
  for (int j = 0; j < basis.dim(); ++j) {
    const std::vector<int>& occ = basis.state(j);
    Complex v = 1.0;
    for (int k = 0; k < basis.mode_count(); ++k) {
      int nk = occ[static_cast<std::size_t>(k)];
      for (int r = 1; r <= nk; ++r) {
        v *= alpha[static_cast<std::size_t>(k)] / std::sqrt(static_cast<double>(r));
      }
    }
    psi(j) = v;
  }
  double norm2 = psi.squaredNorm();
  double full = 0.0;
  for (const Complex& a : alpha) full += std::norm(a);
  double tail = 1.0 - norm2 * std::exp(-full);
  if (tail > tail_tol) {
    throw CutoffError("coherent-state tail weight " + format_value(tail) +
                      " exceeds tolerance; raise n_max");
  }
  return psi / std::sqrt(norm2);
}

FockDensityMatrix density_from_vector(const FockBasis& basis, const Eigen::VectorXcd& psi) {
  if (psi.size() != basis.dim()) {
    throw ConfigError("state vector dimension differs from basis dimension");
  }
  Eigen::MatrixXcd rho = psi * psi.adjoint();
  return FockDensityMatrix(basis, std::move(rho));
}

FockDensityMatrix thermal_density(const FockBasis& basis,
                                  const std::vector<double>& occupations) {
  int M = basis.mode_count();
  if (static_cast<int>(occupations.size()) != M) {
    throw ConfigError("occupations length differs from mode count");
  }
  int n_max = basis.n_max();
  auto truncated_mean = [n_max](double q) {
    double z = 0.0, zn = 0.0, w = 1.0;
    for (int n = 0; n <= n_max; ++n) {
      z += w;
      zn += n * w;
      w *= q;
    }
    return zn / z;
  };
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) {
    double target = occupations[static_cast<std::size_t>(k)];
    if (target < 0.0) throw ConfigError("occupations must be >= 0");
    if (target >= static_cast<double>(n_max) - 1e-9) {
      throw CutoffError("occupation too close to n_max for a thermal profile");
    }
    double q = 0.0;
    if (target > 0.0) {
      double lo = 0.0, hi = 1.0;
      while (truncated_mean(hi) < target) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (truncated_mean(mid) < target ? lo : hi) = mid;
      }
      q = 0.5 * (lo + hi);
    }
    std::vector<double>& w = weights[static_cast<std::size_t>(k)];
    w.resize(static_cast<std::size_t>(n_max) + 1);
    double z = 0.0, pw = 1.0;
    for (int n = 0; n <= n_max; ++n) {
      w[static_cast<std::size_t>(n)] = pw;
      z += pw;
      pw *= q;
    }
    for (double& x : w) x /= z;
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.dim(), basis.dim());
  double trace = 0.0;
  for (int j = 0; j < basis.dim(); ++j) {
    const std::vector<int>& occ = basis.state(j);
    double p = 1.0;
    for (int k = 0; k < M; ++k) {
      p *= weights[static_cast<std::size_t>(k)][static_cast<std::size_t>(occ[static_cast<std::size_t>(k)])];
    }
    rho(j, j) = p;
    trace += p;
  }
  rho /= trace;
  return FockDensityMatrix(basis, std::move(rho));
}

std::vector<FockDensityMatrix> evolve_density(const FockDensityMatrix& rho0,
                                              const LadderPolynomial& H,
                                              const std::vector<double>& t_grid) {
  const FockBasis& basis = rho0.basis();
  Eigen::MatrixXcd Hm = matrix_of(H, basis);
  double herm = (Hm - Hm.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) {
    throw NumericalError("Hamiltonian matrix is not Hermitian (residual " +
                         format_value(herm) + ")");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (Hm + Hm.adjoint()));
  if (solver.info() != Eigen::Success) {
    throw NumericalError("Hamiltonian eigendecomposition failed");
  }
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const Eigen::MatrixXcd& V = solver.eigenvectors();
  Eigen::MatrixXcd B = V.adjoint() * rho0.rho() * V;

  std::vector<FockDensityMatrix> out;
  out.reserve(t_grid.size());
  int dim = basis.dim();
  Eigen::MatrixXcd phased(dim, dim);
  for (double t : t_grid) {
    for (int j = 0; j < dim; ++j) {
      for (int k = 0; k < dim; ++k) {
        double w = -(lambda(j) - lambda(k)) * t;
        phased(j, k) = B(j, k) * Complex{std::cos(w), std::sin(w)};
      }
    }
    out.emplace_back(basis, Eigen::MatrixXcd(V * phased * V.adjoint()));
  }
  return out;
}

GammaTensor reduced_density(const FockDensityMatrix& rho, int m, int n) {
  const FockBasis& basis = rho.basis();
  int M = basis.mode_count();
  GammaTensor tensor(m, n, M);
  int rank = m + n;
  if (rank == 0) {
    tensor.data()[0] = rho.rho().trace();
    return tensor;
  }
  parallel_chunks(tensor.size(), [&](std::size_t begin, std::size_t end) {
    int modes[16];
    std::vector<int> occ;
    for (std::size_t idx = begin; idx < end; ++idx) {
      unflatten_index(idx, rank, M, modes);
      Complex sum = 0.0;
      for (int col = 0; col < basis.dim(); ++col) {
        occ = basis.state(col);
        double amp = 1.0;
        int total = total_occupation(occ);
        bool alive = true;
        // Annihilation factors b_{p_1}..b_{p_m} act first, then the creates.
        for (int i = m - 1; i >= 0 && alive; --i) {
          alive = apply_factor(annihilate(modes[i]), occ, amp, basis.n_max(),
                               basis.total_cap(), total);
        }
        for (int i = rank - 1; i >= m && alive; --i) {
          alive = apply_factor(create(modes[i]), occ, amp, basis.n_max(),
                               basis.total_cap(), total);
        }
        if (!alive) continue;
        int row = basis.index_of(occ);
        if (row < 0) continue;
        sum += rho.rho()(col, row) * amp;
      }
      tensor.data()[idx] = sum;
    }
  });
  return tensor;
}

HierarchyState hierarchy_from_oracle(const FockDensityMatrix& rho, int K) {
  HierarchyState state(rho.basis().mode_count(), K);
  for (auto [m, n] : state.stored_orders()) {
    state.set_gamma(reduced_density(rho, m, n));
  }
  return state;
}

}  // namespace qbbgky
