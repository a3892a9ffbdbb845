#include <doctest.h>

#include <map>
#include <random>

#include "qbbgky/contraction.hpp"
#include "qbbgky/fock.hpp"
#include "qbbgky/hierarchy.hpp"
#include "test_helpers.hpp"

using namespace qbbgky;
using qbbgky::testing::random_hermitian_poly;

namespace {

ModelSpec two_mode_model(double coupling) {
  ModelSpec model;
  model.grid = {.dims = 1, .points_per_dim = 2, .p_max = 1.0};
  model.mass = 1.0;
  model.coupling = coupling;
  model.kernel = InteractionKernel::constant(1.0);
  return model;
}

// Exact moment table of a low-occupation pure state, for feeding programs.
struct MomentTable {
  std::map<std::pair<int, int>, GammaTensor> moments;

  MomentTable(const FockDensityMatrix& rho, int max_rank) {
    for (int m = 0; m <= max_rank; ++m) {
      for (int n = 0; m + n <= max_rank; ++n) {
        moments.emplace(std::make_pair(m, n), reduced_density(rho, m, n));
      }
    }
  }

  SourceFn source() const {
    return [this](int m, int n, const int* annih, const int* create) -> Complex {
      const GammaTensor& g = moments.at({m, n});
      int modes[16];
      for (int i = 0; i < m; ++i) modes[i] = annih[i];
      for (int j = 0; j < n; ++j) modes[m + j] = create[j];
      return g.at(modes);
    };
  }
};

LadderPolynomial monomial_for_order(int m, int n, const int* modes) {
  OpSequence seq;
  for (int j = 0; j < n; ++j) seq.push_back(create(modes[m + j]));
  for (int i = 0; i < m; ++i) seq.push_back(annihilate(modes[i]));
  return LadderPolynomial::monomial(seq);
}

}  // namespace

TEST_SUITE("contraction") {

TEST_CASE("kernel store symmetrizes quartic coefficients") {
  ModelSpec model = two_mode_model(0.8);
  LadderPolynomial h_int = build_two_body_hamiltonian(model);
  KernelStore kernels = build_kernel_store(h_int, 2);
  REQUIRE(kernels.count("H_c2_a2") == 1);
  const KernelTensor& k = kernels.at("H_c2_a2");
  CHECK(k.create_rank == 2);
  CHECK(k.annihilate_rank == 2);
  int diag[4] = {0, 0, 0, 0};
  CHECK(k.at(diag).real() == doctest::Approx(0.4));
  int cross[4] = {0, 1, 0, 1};
  CHECK(k.at(cross).real() == doctest::Approx(0.2));
  int cross2[4] = {1, 0, 0, 1};
  CHECK(k.at(cross2).real() == doctest::Approx(0.2));
}

TEST_CASE("kernel store carries quadratic coefficients verbatim") {
  ModelSpec model = two_mode_model(0.0);
  LadderPolynomial h = build_free_hamiltonian(model);
  KernelStore kernels = build_kernel_store(h, 2);
  REQUIRE(kernels.count("H_c1_a1") == 1);
  const KernelTensor& k = kernels.at("H_c1_a1");
  int e0[2] = {0, 0};
  int e1[2] = {1, 1};
  int off[2] = {0, 1};
  CHECK(k.at(e0).real() == doctest::Approx(model.mode_energy(0)));
  CHECK(k.at(e1).real() == doctest::Approx(model.mode_energy(1)));
  CHECK(std::abs(k.at(off)) == 0.0);
}

TEST_CASE("kernel store rejects non-normal-ordered input") {
  LadderPolynomial bad = LadderPolynomial::monomial({annihilate(0), create(0)});
  CHECK_THROWS_AS(build_kernel_store(bad, 1), ConfigError);
}

TEST_CASE("free theory compiles to a diagonal phase law") {
  ModelSpec model = two_mode_model(0.0);
  LadderPolynomial H = normal_order(build_free_hamiltonian(model), 2);
  ContractionProgram program = compile_rhs_normal(H, 1, 0, 2);
  KernelStore kernels = build_kernel_store(H, 2);
  HierarchyState state = init_coherent(2, {Complex{0.5, 0.1}, Complex{-0.2, 0.3}}, 3);
  SourceFn src = [&](int m, int n, const int* annih, const int* create) {
    return state.entry(annih, m, create, n);
  };
  for (int p = 0; p < 2; ++p) {
    int free_modes[1] = {p};
    Complex value = evaluate_program_entry(program, kernels, src, free_modes, 2);
    Complex expected = Complex{0.0, -1.0} * model.mode_energy(p) *
                       state.stored(1, 0).at({p});
    CHECK(std::abs(value - expected) <= 1e-14);
  }
}

TEST_CASE("compiled programs match the matrix commutator") {
  // d/dt Gamma^(m,n)(p;p') = -i Tr(rho [X, H]) with
  // X = b†_{p'_1}..b†_{p'_n} b_{p_1}..b_{p_m}, checked on a low-occupation
  // pure state where the truncated matrices are exact.
  std::mt19937 rng(2026);
  FockBasis basis(2, 8);
  Eigen::VectorXcd psi = fock_state_vector(basis, {0, 0});
  psi += 0.7 * fock_state_vector(basis, {1, 0});
  psi += Complex{0.2, 0.4} * fock_state_vector(basis, {1, 1});
  psi += Complex{0.0, -0.3} * fock_state_vector(basis, {2, 1});
  psi += 0.25 * fock_state_vector(basis, {2, 2});
  psi.normalize();
  FockDensityMatrix rho = density_from_vector(basis, psi);
  MomentTable table(rho, 6);
  SourceFn src = table.source();

  for (int trial = 0; trial < 6; ++trial) {
    LadderPolynomial H = normal_order(random_hermitian_poly(rng, 2, 4, 5), 2);
    if (H.degree() < 1) continue;
    KernelStore kernels = build_kernel_store(H, 2);
    Eigen::MatrixXcd Hm = matrix_of(H, basis);
    for (auto [m, n] : std::vector<std::pair<int, int>>{{1, 0}, {2, 0}, {1, 1}, {2, 1}}) {
      ContractionProgram program = compile_rhs_normal(H, m, n, 2);
      int modes[4];
      for (int i = 0; i < m + n; ++i) modes[i] = 0;
      do {
        Complex value = evaluate_program_entry(program, kernels, src, modes, 2);
        Eigen::MatrixXcd Xm = matrix_of(monomial_for_order(m, n, modes), basis);
        Complex bracket = psi.dot((Xm * Hm - Hm * Xm) * psi);
        Complex expected = Complex{0.0, -1.0} * bracket;
        CHECK(std::abs(value - expected) <= 1e-9);
      } while (next_tuple(modes, m + n, 2));
    }
  }
}

TEST_CASE("program sets cover every stored order") {
  ModelSpec model = two_mode_model(0.5);
  LadderPolynomial H =
      normal_order(build_free_hamiltonian(model) + build_two_body_hamiltonian(model), 2);
  ProgramSet programs = compile_programs(H, 4, 2);
  HierarchyState probe(2, 4);
  CHECK(programs.size() == probe.stored_orders().size());
  for (auto [m, n] : probe.stored_orders()) {
    REQUIRE(programs.count({m, n}) == 1);
    CHECK(programs.at({m, n}).target_m == m);
    CHECK(programs.at({m, n}).target_n == n);
  }
}

TEST_CASE("compilation rejects invalid Hamiltonians") {
  LadderPolynomial sextic = LadderPolynomial::monomial(
      {create(0), create(0), create(0), annihilate(0), annihilate(0), annihilate(0)});
  CHECK_THROWS_AS(compile_rhs_normal(sextic, 1, 0, 1), UnsupportedInteractionError);
  LadderPolynomial skew = LadderPolynomial::monomial({annihilate(0)}, {0.0, 1.0});
  CHECK_THROWS_AS(compile_rhs_normal(skew, 1, 0, 1), InvalidModelError);
  LadderPolynomial number = LadderPolynomial::monomial({create(0), annihilate(0)});
  CHECK_THROWS_AS(compile_rhs_normal(number, 0, 0, 1), ConfigError);
}

TEST_CASE("evaluation requires the referenced kernels") {
  ModelSpec model = two_mode_model(0.5);
  LadderPolynomial quartic = normal_order(build_two_body_hamiltonian(model), 2);
  ContractionProgram program = compile_rhs_normal(quartic, 1, 0, 2);
  KernelStore empty;
  HierarchyState state = init_coherent(2, {Complex{0.1, 0.0}, Complex{0.2, 0.0}}, 3);
  SourceFn src = [&](int m, int n, const int* annih, const int* create) {
    return state.entry(annih, m, create, n);
  };
  int free_modes[1] = {0};
  CHECK_THROWS_AS(evaluate_program_entry(program, empty, src, free_modes, 2), ConfigError);
}

}  // TEST_SUITE
