#include <doctest.h>

#include <cmath>

#include "qbbgky/fock.hpp"
#include "qbbgky/model.hpp"

using namespace qbbgky;

TEST_SUITE("model") {

TEST_CASE("relativistic dispersion") {
  CHECK(dispersion({0.0}, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dispersion({3.0}, 4.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(dispersion({1.0, 1.0, 1.0}, 0.0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("momentum grid uses cell midpoints") {
  ModeGrid grid{.dims = 1, .points_per_dim = 4, .p_max = 2.0};
  CHECK(grid.mode_count() == 4);
  CHECK(grid.dp() == doctest::Approx(1.0));
  CHECK(grid.momentum_of(0)[0] == doctest::Approx(-1.5));
  CHECK(grid.momentum_of(1)[0] == doctest::Approx(-0.5));
  CHECK(grid.momentum_of(3)[0] == doctest::Approx(1.5));
  CHECK(grid.cell_volume() == doctest::Approx(1.0));
}

TEST_CASE("multi-dimensional grids flatten row-major") {
  ModeGrid grid{.dims = 2, .points_per_dim = 3, .p_max = 1.5};
  CHECK(grid.mode_count() == 9);
  std::vector<double> p = grid.momentum_of(5);  // digits (1, 2)
  CHECK(p[0] == doctest::Approx(0.0));
  CHECK(p[1] == doctest::Approx(1.0));
  CHECK(grid.cell_volume() == doctest::Approx(1.0));
}

TEST_CASE("species interleave within each grid point") {
  ModeGrid grid{.dims = 1, .points_per_dim = 2, .p_max = 1.0, .n_species = 2};
  CHECK(grid.mode_count() == 4);
  CHECK(grid.grid_point_of(0) == 0);
  CHECK(grid.species_of(0) == 0);
  CHECK(grid.species_of(1) == 1);
  CHECK(grid.grid_point_of(3) == 1);
  CHECK(grid.species_of(3) == 1);
  CHECK(grid.momentum_of(0) == grid.momentum_of(1));
}

TEST_CASE("grid validation rejects bad shapes") {
  ModeGrid bad{.dims = 4};
  CHECK_THROWS_AS(bad.validate(), InvalidModelError);
  ModeGrid bad2{.dims = 1, .points_per_dim = 0};
  CHECK_THROWS_AS(bad2.validate(), InvalidModelError);
  ModeGrid bad3{.dims = 1, .points_per_dim = 2, .p_max = -1.0};
  CHECK_THROWS_AS(bad3.validate(), InvalidModelError);
  CHECK_THROWS_AS(ModeGrid{}.momentum_of(5), InvalidModelError);
}

TEST_CASE("free Hamiltonian carries one number term per mode") {
  ModelSpec model;
  model.grid = {.dims = 1, .points_per_dim = 2, .p_max = 2.0};
  model.mass = 1.0;
  LadderPolynomial h = build_free_hamiltonian(model);
  CHECK(h.size() == 2);
  for (int k = 0; k < 2; ++k) {
    Complex c = h.coefficient_of({create(k), annihilate(k)});
    CHECK(c.real() == doctest::Approx(model.mode_energy(k)).epsilon(1e-15));
    CHECK(c.imag() == 0.0);
  }
}

TEST_CASE("two-body Hamiltonian merges symmetric pairs") {
  ModelSpec model;
  model.grid = {.dims = 1, .points_per_dim = 2, .p_max = 1.0};
  model.coupling = 0.8;
  model.kernel = InteractionKernel::constant(1.0);
  LadderPolynomial h = build_two_body_hamiltonian(model);
  CHECK(h.coefficient_of({create(0), create(0), annihilate(0), annihilate(0)}).real() ==
        doctest::Approx(0.4));
  CHECK(h.coefficient_of({create(1), create(1), annihilate(1), annihilate(1)}).real() ==
        doctest::Approx(0.4));
  CHECK(h.coefficient_of({create(0), create(1), annihilate(0), annihilate(1)}).real() ==
        doctest::Approx(0.8));
  CHECK(is_hermitian(h));
}

TEST_CASE("two-body matrix elements count pairs") {
  // <n0,n1|H_int|n0,n1> = (g/2)[n0(n0-1) + n1(n1-1)] + g h01 n0 n1 for h = 1.
  ModelSpec model;
  model.grid = {.dims = 1, .points_per_dim = 2, .p_max = 1.0};
  model.coupling = 1.0;
  LadderPolynomial h = build_two_body_hamiltonian(model);
  FockBasis basis(2, 3);
  Eigen::MatrixXcd hm = matrix_of(h, basis);
  int idx = basis.index_of({2, 1});
  CHECK(hm(idx, idx).real() == doctest::Approx(0.5 * 2.0 + 2.0));
  int idx2 = basis.index_of({3, 0});
  CHECK(hm(idx2, idx2).real() == doctest::Approx(0.5 * 3.0 * 2.0));
}

TEST_CASE("separable and tabulated kernels evaluate pointwise") {
  InteractionKernel sep = InteractionKernel::separable({2.0, 3.0});
  CHECK(sep.evaluate(0, 1, 2) == doctest::Approx(6.0));
  CHECK(sep.evaluate(1, 1, 2) == doctest::Approx(9.0));
  InteractionKernel tab = InteractionKernel::tabulated({1.0, 0.5, 0.5, 2.0});
  CHECK(tab.evaluate(0, 1, 2) == doctest::Approx(0.5));
  CHECK_NOTHROW(tab.validate(2));
  InteractionKernel bad = InteractionKernel::tabulated({1.0, 0.5, 0.4, 2.0});
  CHECK_THROWS_AS(bad.validate(2), InvalidModelError);
  InteractionKernel short_sep = InteractionKernel::separable({2.0});
  CHECK_THROWS_AS(short_sep.validate(2), InvalidModelError);
}

TEST_CASE("grading splits by polynomial degree") {
  ModelSpec model;
  model.grid = {.dims = 1, .points_per_dim = 2, .p_max = 1.0};
  model.coupling = 0.5;
  GradedHamiltonian graded = assemble_hamiltonian(model);
  CHECK(!graded.grade(3).empty());   // quadratic piece
  CHECK(graded.grade(4).empty());    // no cubic piece
  CHECK(!graded.grade(5).empty());   // quartic piece
  LadderPolynomial total = graded.total();
  LadderPolynomial expected =
      normal_order(build_free_hamiltonian(model) + build_two_body_hamiltonian(model), 2);
  LadderPolynomial diff = total - expected;
  CHECK(diff.empty());
}

TEST_CASE("interactions beyond quartic are rejected") {
  LadderPolynomial sextic = LadderPolynomial::monomial(
      {create(0), create(0), create(0), annihilate(0), annihilate(0), annihilate(0)});
  CHECK_THROWS_AS(grade_hamiltonian(sextic), UnsupportedInteractionError);
}

}  // TEST_SUITE
