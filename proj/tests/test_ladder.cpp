#include <doctest.h>

#include <random>

#include "qbbgky/ladder.hpp"
#include "test_helpers.hpp"

using namespace qbbgky;
using qbbgky::testing::interior_matrix_diff;
using qbbgky::testing::random_hermitian_poly;
using qbbgky::testing::random_poly;

namespace {

Complex coeff(const LadderPolynomial& poly, const OpSequence& seq) {
  return poly.coefficient_of(seq);
}

}  // namespace

TEST_SUITE("ladder") {

TEST_CASE("normal ordering of b bd produces the canonical commutator") {
  LadderPolynomial poly = LadderPolynomial::monomial({annihilate(0), create(0)});
  LadderPolynomial no = normal_order(poly);
  CHECK(no.size() == 2);
  CHECK(coeff(no, {create(0), annihilate(0)}) == Complex{1.0, 0.0});
  CHECK(coeff(no, {}) == Complex{1.0, 0.0});
}

TEST_CASE("normal ordering of a two-mode product expands all contractions") {
  // b0 b1 bd1 bd0 = bd0 bd1 b0 b1 + bd0 b0 + bd1 b1 + 1 (modes commute).
  LadderPolynomial poly =
      LadderPolynomial::monomial({annihilate(0), annihilate(1), create(1), create(0)});
  LadderPolynomial no = normal_order(poly);
  CHECK(no.size() == 4);
  CHECK(coeff(no, {create(0), create(1), annihilate(0), annihilate(1)}) == Complex{1.0, 0.0});
  CHECK(coeff(no, {create(0), annihilate(0)}) == Complex{1.0, 0.0});
  CHECK(coeff(no, {create(1), annihilate(1)}) == Complex{1.0, 0.0});
  CHECK(coeff(no, {}) == Complex{1.0, 0.0});
}

TEST_CASE("idempotence: normal ordering a normal form changes nothing") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    LadderPolynomial poly = random_poly(rng, 3, 4, 5);
    LadderPolynomial once = normal_order(poly);
    LadderPolynomial twice = normal_order(once);
    LadderPolynomial diff = once - twice;
    CHECK(diff.empty());
  }
}

TEST_CASE("commutator with the number operator lowers by one") {
  LadderPolynomial b0 = LadderPolynomial::monomial({annihilate(0)});
  LadderPolynomial number = LadderPolynomial::monomial({create(0), annihilate(0)});
  LadderPolynomial comm = commutator(b0, number);
  CHECK(comm.size() == 1);
  CHECK(coeff(comm, {annihilate(0)}) == Complex{1.0, 0.0});
}

TEST_CASE("commutator with a quartic interaction term") {
  LadderPolynomial b0 = LadderPolynomial::monomial({annihilate(0)});
  LadderPolynomial quartic =
      LadderPolynomial::monomial({create(0), create(1), annihilate(0), annihilate(1)});
  LadderPolynomial comm = commutator(b0, quartic);
  CHECK(comm.size() == 1);
  CHECK(coeff(comm, {create(1), annihilate(0), annihilate(1)}) == Complex{1.0, 0.0});
}

TEST_CASE("commutators of commuting pieces vanish exactly") {
  // Total number operator commutes with any number-conserving polynomial.
  LadderPolynomial number;
  for (int k = 0; k < 2; ++k) {
    number += LadderPolynomial::monomial({create(k), annihilate(k)});
  }
  LadderPolynomial h = LadderPolynomial::monomial({create(0), annihilate(1)}, {0.3, 0.7});
  h += LadderPolynomial::monomial({create(1), annihilate(0)}, {0.3, -0.7});
  h += LadderPolynomial::monomial({create(0), create(1), annihilate(0), annihilate(1)}, 0.9);
  CHECK(commutator(h, number).empty());
}

TEST_CASE("Jacobi identity holds coefficient-wise") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    LadderPolynomial a = random_poly(rng, 2, 3, 4);
    LadderPolynomial b = random_poly(rng, 2, 3, 4);
    LadderPolynomial c = random_poly(rng, 2, 3, 4);
    LadderPolynomial total = commutator(commutator(a, b), c);
    total += commutator(commutator(b, c), a);
    total += commutator(commutator(c, a), b);
    double worst = 0.0;
    for (const auto& [seq, value] : total.terms()) worst = std::max(worst, std::abs(value));
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("i[A,B] of Hermitian inputs is Hermitian") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    LadderPolynomial a = random_hermitian_poly(rng, 2, 3, 4);
    LadderPolynomial b = random_hermitian_poly(rng, 2, 3, 4);
    LadderPolynomial comm = commutator(a, b);
    comm *= Complex{0.0, 1.0};
    CHECK(is_hermitian(comm));
  }
}

TEST_CASE("commutator degree drops by at least two") {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    LadderPolynomial a = random_poly(rng, 2, 4, 4);
    LadderPolynomial b = random_poly(rng, 2, 4, 4);
    LadderPolynomial comm = commutator(a, b);
    if (comm.empty()) continue;
    CHECK(comm.degree() <= a.degree() + b.degree() - 2);
  }
}

TEST_CASE("adjoint is an involution and detects Hermiticity") {
  LadderPolynomial h = LadderPolynomial::monomial({create(0), annihilate(0)}, 2.0);
  CHECK(is_hermitian(h));
  LadderPolynomial b0 = LadderPolynomial::monomial({annihilate(0)});
  CHECK(!is_hermitian(b0));
  CHECK(is_hermitian(b0 + adjoint(b0)));
  LadderPolynomial anti = b0 * Complex{0.0, 1.0} + adjoint(b0) * Complex{0.0, -1.0};
  CHECK(is_hermitian(anti));
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    LadderPolynomial p = random_poly(rng, 3, 4, 5);
    LadderPolynomial diff = adjoint(adjoint(p)) - normal_order(p);
    double worst = 0.0;
    for (const auto& [seq, value] : diff.terms()) worst = std::max(worst, std::abs(value));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("tiny coefficients are dropped and scalar zero clears") {
  LadderPolynomial p = LadderPolynomial::monomial({annihilate(0)}, 0.5);
  p.add_term({annihilate(0)}, -0.5);
  CHECK(p.empty());
  LadderPolynomial q = LadderPolynomial::monomial({annihilate(0)}, 1.0);
  q *= Complex{0.0, 0.0};
  CHECK(q.empty());
}

TEST_CASE("mode validation rejects out-of-range modes") {
  LadderPolynomial p = LadderPolynomial::monomial({annihilate(3)});
  CHECK_THROWS_AS(validate_modes(p, 2), InvalidModelError);
  CHECK_NOTHROW(validate_modes(p, 4));
}

TEST_CASE("string rendering names operators by mode") {
  LadderPolynomial p = LadderPolynomial::monomial({create(0), annihilate(1)}, 2.0);
  std::string s = to_string(p);
  CHECK(s.find("bd0") != std::string::npos);
  CHECK(s.find("b1") != std::string::npos);
}

TEST_CASE("normal ordering preserves the matrix representation") {
  std::mt19937 rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    LadderPolynomial poly = random_poly(rng, 2, 4, 5);
    FockBasis basis(2, 8);
    double diff = interior_matrix_diff(poly, normal_order(poly), basis, poly.degree());
    CHECK(diff <= 1e-10);
  }
}

TEST_CASE("commutator matches the matrix commutator on interior columns") {
  std::mt19937 rng(131);
  for (int trial = 0; trial < 10; ++trial) {
    LadderPolynomial a = random_poly(rng, 2, 3, 3);
    LadderPolynomial b = random_poly(rng, 2, 3, 3);
    FockBasis basis(2, 10);
    Eigen::MatrixXcd ma = matrix_of(a, basis);
    Eigen::MatrixXcd mb = matrix_of(b, basis);
    Eigen::MatrixXcd direct = ma * mb - mb * ma;
    Eigen::MatrixXcd symbolic = matrix_of(commutator(a, b), basis);
    // Matrix products clip intermediate states at the basis edge, so compare
    // on columns with headroom for both operators in sequence.
    int room = a.degree() + b.degree();
    double worst = 0.0;
    for (int j = 0; j < basis.dim(); ++j) {
      bool safe = true;
      for (int occ : basis.state(j)) {
        if (occ + room > basis.n_max()) safe = false;
      }
      if (!safe) continue;
      worst = std::max(worst, (direct.col(j) - symbolic.col(j)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-10);
  }
}

}  // TEST_SUITE
