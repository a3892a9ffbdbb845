#include "qbbgky/ladder.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace qbbgky {

namespace {

// Expands a factor sequence into normal form. Every Wick branch carries unit
// weight under [b_j, b†_k] = δ_jk, so each resulting canonical sequence has a
// nonnegative integer multiplicity. Working in integers here is what makes
// commutator cancellations exact.
std::map<OpSequence, long long> normal_order_counts(const OpSequence& input) {
  std::map<OpSequence, long long> counts;
  std::vector<OpSequence> pending{input};
  while (!pending.empty()) {
    OpSequence seq = std::move(pending.back());
    pending.pop_back();

    std::size_t swap_at = seq.size();
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      if (seq[i].kind == OpKind::Annihilate && seq[i + 1].kind == OpKind::Create) {
        swap_at = i;
        break;
      }
    }
    if (swap_at == seq.size()) {
      // Creates already precede annihilates; like-kind factors commute, so
      // sorting by (kind, mode) canonicalizes without changing the operator.
      std::sort(seq.begin(), seq.end());
      ++counts[seq];
      continue;
    }
    if (seq[swap_at].mode == seq[swap_at + 1].mode) {
      OpSequence contracted;
      contracted.reserve(seq.size() - 2);
      contracted.insert(contracted.end(), seq.begin(), seq.begin() + swap_at);
      contracted.insert(contracted.end(), seq.begin() + swap_at + 2, seq.end());
      pending.push_back(std::move(contracted));
    }
    std::swap(seq[swap_at], seq[swap_at + 1]);
    pending.push_back(std::move(seq));
  }
  return counts;
}

void check_modes(const OpSequence& seq, int mode_count) {
  for (const LadderOp& op : seq) {
    if (op.mode < 0 || (mode_count >= 0 && op.mode >= mode_count)) {
      throw InvalidModelError("ladder operator mode " + std::to_string(op.mode) +
                              " outside [0, " + std::to_string(mode_count) + ")");
    }
  }
}

}  // namespace

void LadderPolynomial::add_term(OpSequence factors, Complex coefficient) {
  auto [it, inserted] = terms_.try_emplace(std::move(factors), coefficient);
  if (!inserted) it->second += coefficient;
  if (std::abs(it->second) < kCoeffEpsilon) terms_.erase(it);
}

int LadderPolynomial::degree() const {
  int d = 0;
  for (const auto& [seq, coeff] : terms_) d = std::max(d, static_cast<int>(seq.size()));
  return d;
}

Complex LadderPolynomial::coefficient_of(const OpSequence& factors) const {
  auto it = terms_.find(factors);
  return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
}

LadderPolynomial& LadderPolynomial::operator+=(const LadderPolynomial& other) {
  for (const auto& [seq, coeff] : other.terms_) add_term(seq, coeff);
  return *this;
}

LadderPolynomial& LadderPolynomial::operator-=(const LadderPolynomial& other) {
  for (const auto& [seq, coeff] : other.terms_) add_term(seq, -coeff);
  return *this;
}

LadderPolynomial& LadderPolynomial::operator*=(Complex scale) {
  if (std::abs(scale) < kCoeffEpsilon) {
    terms_.clear();
    return *this;
  }
  for (auto& [seq, coeff] : terms_) coeff *= scale;
  return *this;
}

LadderPolynomial& LadderPolynomial::operator*=(const LadderPolynomial& other) {
  std::map<OpSequence, Complex> lhs = std::move(terms_);
  terms_.clear();
  for (const auto& [sa, ca] : lhs) {
    for (const auto& [sb, cb] : other.terms_) {
      OpSequence seq;
      seq.reserve(sa.size() + sb.size());
      seq.insert(seq.end(), sa.begin(), sa.end());
      seq.insert(seq.end(), sb.begin(), sb.end());
      add_term(std::move(seq), ca * cb);
    }
  }
  return *this;
}

void validate_modes(const LadderPolynomial& poly, int mode_count) {
  for (const auto& [seq, coeff] : poly.terms()) check_modes(seq, mode_count);
}

LadderPolynomial normal_order(const LadderPolynomial& poly, int mode_count) {
  LadderPolynomial result;
  for (const auto& [seq, coeff] : poly.terms()) {
    check_modes(seq, mode_count);
    for (const auto& [nseq, mult] : normal_order_counts(seq)) {
      result.add_term(nseq, coeff * static_cast<double>(mult));
    }
  }
  return result;
}

LadderPolynomial commutator(const LadderPolynomial& a, const LadderPolynomial& b) {
  LadderPolynomial result;
  for (const auto& [sa, ca] : a.terms()) {
    for (const auto& [sb, cb] : b.terms()) {
      OpSequence ab, ba;
      ab.reserve(sa.size() + sb.size());
      ba.reserve(sa.size() + sb.size());
      ab.insert(ab.end(), sa.begin(), sa.end());
      ab.insert(ab.end(), sb.begin(), sb.end());
      ba.insert(ba.end(), sb.begin(), sb.end());
      ba.insert(ba.end(), sa.begin(), sa.end());

      // Subtract at integer multiplicity so that commuting monomial pairs
      // (and the universal zero-contraction piece) cancel exactly.
      std::map<OpSequence, long long> diff = normal_order_counts(ab);
      for (const auto& [nseq, mult] : normal_order_counts(ba)) {
        auto [it, inserted] = diff.try_emplace(nseq, -mult);
        if (!inserted) it->second -= mult;
      }
      Complex weight = ca * cb;
      for (const auto& [nseq, mult] : diff) {
        if (mult != 0) result.add_term(nseq, weight * static_cast<double>(mult));
      }
    }
  }
  return result;
}

LadderPolynomial adjoint(const LadderPolynomial& poly) {
  LadderPolynomial flipped;
  for (const auto& [seq, coeff] : poly.terms()) {
    OpSequence rev(seq.rbegin(), seq.rend());
    for (LadderOp& op : rev) {
      op.kind = op.kind == OpKind::Create ? OpKind::Annihilate : OpKind::Create;
    }
    flipped.add_term(std::move(rev), std::conj(coeff));
  }
  return normal_order(flipped);
}

bool is_hermitian(const LadderPolynomial& poly, double tol) {
  for (const auto& [seq, coeff] : poly.terms()) {
    OpSequence partner(seq.rbegin(), seq.rend());
    for (LadderOp& op : partner) {
      op.kind = op.kind == OpKind::Create ? OpKind::Annihilate : OpKind::Create;
    }
    std::sort(partner.begin(), partner.end());
    if (std::abs(poly.coefficient_of(partner) - std::conj(coeff)) > tol) return false;
  }
  return true;
}

int canonical_degree(const LadderPolynomial& poly) { return poly.degree(); }

std::string to_string(const LadderOp& op) {
  return (op.kind == OpKind::Create ? "bd" : "b") + std::to_string(op.mode);
}

std::string to_string(const LadderPolynomial& poly) {
  if (poly.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [seq, coeff] : poly.terms()) {
    if (!first) out << " + ";
    first = false;
    out << "(" << coeff.real() << (coeff.imag() < 0 ? "" : "+") << coeff.imag() << "i)";
    for (const LadderOp& op : seq) out << " " << to_string(op);
  }
  return out.str();
}

}  // namespace qbbgky
