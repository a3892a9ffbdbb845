#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "qbbgky/errors.hpp"
#include "qbbgky/util.hpp"

namespace qbbgky {

// Values chosen so that sorting by (kind, mode) puts creation operators first.
enum class OpKind : std::uint8_t { Create = 0, Annihilate = 1 };

struct LadderOp {
  OpKind kind;
  int mode;

  friend bool operator==(const LadderOp& a, const LadderOp& b) {
    return a.kind == b.kind && a.mode == b.mode;
  }
  friend bool operator<(const LadderOp& a, const LadderOp& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    return a.mode < b.mode;
  }
};

inline LadderOp create(int mode) { return {OpKind::Create, mode}; }
inline LadderOp annihilate(int mode) { return {OpKind::Annihilate, mode}; }

// Operator factors written left to right, acting on kets right factor first.
using OpSequence = std::vector<LadderOp>;

struct Monomial {
  Complex coefficient;
  OpSequence factors;
};

// Coefficients smaller than this after merging are treated as exact zeros.
inline constexpr double kCoeffEpsilon = 1e-14;

// Sparse polynomial in ladder operators, keyed by factor sequence.
// Keys are not forced into normal form; normal_order() produces canonical keys.
class LadderPolynomial {
 public:
  LadderPolynomial() = default;

  static LadderPolynomial scalar(Complex value) {
    LadderPolynomial p;
    p.add_term({}, value);
    return p;
  }
  static LadderPolynomial monomial(OpSequence factors, Complex coefficient = 1.0) {
    LadderPolynomial p;
    p.add_term(std::move(factors), coefficient);
    return p;
  }

  // Merges into an existing term; drops the term if the merged coefficient
  // falls below kCoeffEpsilon.
  void add_term(OpSequence factors, Complex coefficient);

  const std::map<OpSequence, Complex>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  // Max factor count over terms; 0 for scalars and the zero polynomial.
  int degree() const;

  Complex coefficient_of(const OpSequence& factors) const;

  LadderPolynomial& operator+=(const LadderPolynomial& other);
  LadderPolynomial& operator-=(const LadderPolynomial& other);
  LadderPolynomial& operator*=(Complex scale);
  // Formal (non-commutative) product: concatenates factor sequences.
  // The result is generally not normal-ordered.
  LadderPolynomial& operator*=(const LadderPolynomial& other);

  friend LadderPolynomial operator+(LadderPolynomial a, const LadderPolynomial& b) {
    a += b;
    return a;
  }
  friend LadderPolynomial operator-(LadderPolynomial a, const LadderPolynomial& b) {
    a -= b;
    return a;
  }
  friend LadderPolynomial operator*(LadderPolynomial a, Complex s) {
    a *= s;
    return a;
  }
  friend LadderPolynomial operator*(Complex s, LadderPolynomial a) {
    a *= s;
    return a;
  }
  friend LadderPolynomial operator*(LadderPolynomial a, const LadderPolynomial& b) {
    a *= b;
    return a;
  }

 private:
  std::map<OpSequence, Complex> terms_;
};

// Throws InvalidModelError if any factor's mode falls outside [0, mode_count).
void validate_modes(const LadderPolynomial& poly, int mode_count);

// Rewrites into normal form (creates before annihilates, modes non-decreasing
// within each block) using [b_j, b†_k] = δ_jk. Equal as an operator to the
// input; degree never increases. mode_count < 0 skips range validation.
LadderPolynomial normal_order(const LadderPolynomial& poly, int mode_count = -1);

// Normal-ordered a·b − b·a. Monomial pairs whose commutator vanishes cancel
// at integer multiplicity, so symbolic zeros are exact, not round-off small.
LadderPolynomial commutator(const LadderPolynomial& a, const LadderPolynomial& b);

// Hermitian adjoint: reverses factors, swaps kinds, conjugates coefficients.
// Output is normal-ordered.
LadderPolynomial adjoint(const LadderPolynomial& poly);

// Checks term-by-term self-adjointness of a normal-ordered polynomial: the
// reversed-and-conjugated partner of each term must carry the conjugate
// coefficient within tol.
bool is_hermitian(const LadderPolynomial& poly, double tol = 1e-12);

// Max factor count of a normal-ordered polynomial (its filtration grade).
int canonical_degree(const LadderPolynomial& poly);

std::string to_string(const LadderOp& op);
std::string to_string(const LadderPolynomial& poly);

}  // namespace qbbgky
