#pragma once

// Tseitin translation of bvir formulas into CNF.
//
// Literals are DIMACS-style signed integers; two sentinels stand for the
// constants so that gates over constants fold away before any clause is
// written. AND, XOR and MUX gates are structurally hashed.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bvreach/bvir.hpp"
#include "bvreach/dimspec.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/error.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach {

namespace cnf {

using Lit = int;
using Bits = std::vector<Lit>;  // least significant bit first

inline constexpr Lit kTrue = 1 << 30;
inline constexpr Lit kFalse = -kTrue;

inline bool is_const(Lit l) { return l == kTrue || l == kFalse; }

class Builder {
 public:
  // Variables 1..first_free-1 are reserved for the caller (inputs).
  explicit Builder(int first_free) : next_(first_free) {}

  Lit fresh() { return next_++; }
  int next_var() const { return next_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  std::vector<Clause>& clauses() { return clauses_; }

  // Adds a clause after removing false literals; clauses with a true literal
  // are dropped and an empty clause becomes a contradiction on a fresh var.
  void add_clause(std::vector<Lit> c) {
    std::vector<Lit> out;
    for (Lit l : c) {
      if (l == kTrue) return;
      if (l == kFalse) continue;
      if (std::find(out.begin(), out.end(), -l) != out.end()) return;
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    }
    if (out.empty()) {
      const Lit x = fresh();
      clauses_.push_back({x});
      clauses_.push_back({-x});
      return;
    }
    clauses_.push_back(std::move(out));
  }

  Lit and2(Lit a, Lit b) {
    if (a == kFalse || b == kFalse || a == -b) return kFalse;
    if (a == kTrue) return b;
    if (b == kTrue || a == b) return a;
    if (a > b) std::swap(a, b);
    return gate(0, a, b, 0, [&](Lit g) {
      clauses_.push_back({-g, a});
      clauses_.push_back({-g, b});
      clauses_.push_back({g, -a, -b});
    });
  }

  Lit or2(Lit a, Lit b) { return -and2(-a, -b); }

  Lit xor2(Lit a, Lit b) {
    if (a == kFalse) return b;
    if (b == kFalse) return a;
    if (a == kTrue) return -b;
    if (b == kTrue) return -a;
    if (a == b) return kFalse;
    if (a == -b) return kTrue;
    bool flip = false;
    if (a < 0) {
      a = -a;
      flip = !flip;
    }
    if (b < 0) {
      b = -b;
      flip = !flip;
    }
    if (a > b) std::swap(a, b);
    const Lit g = gate(1, a, b, 0, [&](Lit g) {
      clauses_.push_back({-g, a, b});
      clauses_.push_back({-g, -a, -b});
      clauses_.push_back({g, -a, b});
      clauses_.push_back({g, a, -b});
    });
    return flip ? -g : g;
  }

  Lit xnor2(Lit a, Lit b) { return -xor2(a, b); }

  // s ? t : e
  Lit mux(Lit s, Lit t, Lit e) {
    if (s == kTrue || t == e) return t;
    if (s == kFalse) return e;
    if (t == kTrue) return or2(s, e);
    if (t == kFalse) return and2(-s, e);
    if (e == kTrue) return or2(-s, t);
    if (e == kFalse) return and2(s, t);
    if (t == -e) return xnor2(s, t);
    if (s < 0) {
      s = -s;
      std::swap(t, e);
    }
    return gate(2, s, t, e, [&](Lit g) {
      clauses_.push_back({-s, -t, g});
      clauses_.push_back({-s, t, -g});
      clauses_.push_back({s, -e, g});
      clauses_.push_back({s, e, -g});
      clauses_.push_back({-t, -e, g});
      clauses_.push_back({t, e, -g});
    });
  }

  Lit and_all(const std::vector<Lit>& xs) {
    Lit r = kTrue;
    for (Lit x : xs) r = and2(r, x);
    return r;
  }

  Lit or_all(const std::vector<Lit>& xs) {
    Lit r = kFalse;
    for (Lit x : xs) r = or2(r, x);
    return r;
  }

  // ---- word-level circuits ----

  static Bits constant(uint32_t w, uint64_t v) {
    Bits r(w);
    for (uint32_t i = 0; i < w; ++i) r[i] = ((v >> i) & 1) ? kTrue : kFalse;
    return r;
  }

  Bits fresh_bits(uint32_t w) {
    Bits r(w);
    for (auto& l : r) l = fresh();
    return r;
  }

  static Bits negate_bits(const Bits& a) {
    Bits r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
    return r;
  }

  // Ripple-carry sum truncated to the operand width; carry_out receives the
  // final carry.
  Bits add(const Bits& a, const Bits& b, Lit carry_in = kFalse, Lit* carry_out = nullptr) {
    Bits r(a.size());
    Lit c = carry_in;
    for (size_t i = 0; i < a.size(); ++i) {
      const Lit t = xor2(a[i], b[i]);
      r[i] = xor2(t, c);
      c = or2(and2(a[i], b[i]), and2(c, t));
    }
    if (carry_out) *carry_out = c;
    return r;
  }

  Bits sub(const Bits& a, const Bits& b) { return add(a, negate_bits(b), kTrue); }
  Bits neg(const Bits& a) { return add(constant(static_cast<uint32_t>(a.size()), 0), negate_bits(a), kTrue); }

  // Shift-and-add product with `out_width` result bits.
  Bits mul(const Bits& a, const Bits& b, size_t out_width) {
    Bits acc = constant(static_cast<uint32_t>(out_width), 0);
    for (size_t i = 0; i < b.size() && i < out_width; ++i) {
      if (b[i] == kFalse) continue;
      Bits partial = constant(static_cast<uint32_t>(out_width), 0);
      for (size_t j = 0; j < a.size() && i + j < out_width; ++j) partial[i + j] = and2(a[j], b[i]);
      acc = add(acc, partial);
    }
    return acc;
  }

  Lit eq(const Bits& a, const Bits& b) {
    std::vector<Lit> bits(a.size());
    for (size_t i = 0; i < a.size(); ++i) bits[i] = xnor2(a[i], b[i]);
    return and_all(bits);
  }

  // a <u b: no carry out of a + ~b + 1.
  Lit ult(const Bits& a, const Bits& b) {
    Lit c = kTrue;
    for (size_t i = 0; i < a.size(); ++i) {
      const Lit nb = -b[i];
      c = or2(and2(a[i], nb), and2(c, xor2(a[i], nb)));
    }
    return -c;
  }

  Lit slt(const Bits& a, const Bits& b) {
    Bits x = a, y = b;
    x.back() = -x.back();
    y.back() = -y.back();
    return ult(x, y);
  }

  Bits ite(Lit s, const Bits& t, const Bits& e) {
    Bits r(t.size());
    for (size_t i = 0; i < t.size(); ++i) r[i] = mux(s, t[i], e[i]);
    return r;
  }

  enum class Shift { Left, LogicalRight, ArithRight };

  Bits shift(const Bits& a, const Bits& amount, Shift kind) {
    const size_t w = a.size();
    const Lit fill = kind == Shift::ArithRight ? a.back() : kFalse;
    Bits cur = a;
    std::vector<Lit> too_far;
    for (size_t j = 0; j < amount.size(); ++j) {
      if (j >= 63 || (uint64_t{1} << j) >= w) {
        too_far.push_back(amount[j]);
        continue;
      }
      const size_t k = size_t{1} << j;
      Bits shifted(w);
      for (size_t i = 0; i < w; ++i) {
        if (kind == Shift::Left) {
          shifted[i] = i >= k ? cur[i - k] : kFalse;
        } else {
          shifted[i] = i + k < w ? cur[i + k] : fill;
        }
      }
      cur = ite(amount[j], shifted, cur);
    }
    const Lit over = or_all(too_far);
    Bits filled(w, fill);
    return ite(over, filled, cur);
  }

  // Unsigned quotient and remainder under SMT-LIB totalization, through
  // fresh q, r constrained by q*d + r = a ∧ r <u d when d ≠ 0, and
  // q = ~0, r = a otherwise.
  std::pair<Bits, Bits> udivrem(const Bits& a, const Bits& d) {
    auto key = std::make_pair(a, d);
    if (auto it = divs_.find(key); it != divs_.end()) return it->second;
    const size_t w = a.size();
    const Lit nz = or_all(d);
    std::pair<Bits, Bits> qr;
    if (nz == kFalse) {
      qr = {constant(static_cast<uint32_t>(w), ~uint64_t{0}), a};
    } else {
      Bits q = fresh_bits(static_cast<uint32_t>(w)), r = fresh_bits(static_cast<uint32_t>(w));
      Bits q2 = q, d2 = d, r2 = r, a2 = a;
      q2.resize(2 * w, kFalse);
      d2.resize(2 * w, kFalse);
      r2.resize(2 * w, kFalse);
      a2.resize(2 * w, kFalse);
      const Bits sum = add(mul(q2, d2, 2 * w), r2);
      for (size_t i = 0; i < 2 * w; ++i) {
        add_clause({-nz, -sum[i], a2[i]});
        add_clause({-nz, sum[i], -a2[i]});
      }
      add_clause({-nz, ult(r, d)});
      for (size_t i = 0; i < w; ++i) {
        add_clause({nz, q[i]});
        add_clause({nz, -r[i], a[i]});
        add_clause({nz, r[i], -a[i]});
      }
      qr = {std::move(q), std::move(r)};
    }
    divs_.emplace(std::move(key), qr);
    return qr;
  }

  // Signed division through absolute values, as SMT-LIB defines bvsdiv and
  // bvsrem.
  std::pair<Bits, Bits> sdivrem(const Bits& a, const Bits& b) {
    const Lit sa = a.back(), sb = b.back();
    const Bits ua = ite(sa, neg(a), a), ub = ite(sb, neg(b), b);
    const auto [q, r] = udivrem(ua, ub);
    return {ite(xor2(sa, sb), neg(q), q), ite(sa, neg(r), r)};
  }

 private:
  template <typename Emit>
  Lit gate(int kind, Lit a, Lit b, Lit c, Emit emit) {
    const std::array<Lit, 4> key{kind, a, b, c};
    if (auto it = gates_.find(key); it != gates_.end()) return it->second;
    const Lit g = fresh();
    emit(g);
    gates_.emplace(key, g);
    return g;
  }

  struct KeyHash {
    size_t operator()(const std::array<Lit, 4>& k) const {
      size_t h = 0;
      for (Lit x : k) h = h * 1000003u ^ std::hash<int>()(x);
      return h;
    }
  };

  int next_;
  std::vector<Clause> clauses_;
  std::unordered_map<std::array<Lit, 4>, Lit, KeyHash> gates_;
  std::map<std::pair<Bits, Bits>, std::pair<Bits, Bits>> divs_;
};

// Blasts bvir formulas whose variables are state slots. Current state bit j
// (1-based, as in StateSpace) is variable j; the primed copy is s + j; gates
// and division outputs are numbered from 2s + 1.
class Blaster {
 public:
  explicit Blaster(const StateSpace& space) : Blaster(widths_of(space)) {}

  // Slot i occupies the next widths[i] state bits.
  explicit Blaster(const std::vector<uint32_t>& widths) : s_(0), b_(1) {
    for (uint32_t w : widths) {
      slots_.emplace_back(s_ + 1, w);
      s_ += static_cast<int>(w);
    }
    b_ = Builder(2 * s_ + 1);
  }

  Builder& builder() { return b_; }
  int state_bits() const { return s_; }

  Lit blast(const bv::BoolExpr& e) { return lit(e.node()); }
  Bits blast(const bv::BvExpr& e) { return bits(e.node()); }

  Bits var_bits(size_t slot, bool primed) const {
    if (slot >= slots_.size()) throw Error(ErrorKind::Internal, "bitblast: unknown state slot");
    const auto [first, width] = slots_[slot];
    Bits r(width);
    for (uint32_t i = 0; i < width; ++i) r[i] = static_cast<int>(first + i) + (primed ? s_ : 0);
    return r;
  }

 private:
  Lit lit(const bv::NodePtr& n) {
    if (auto it = lits_.find(n.get()); it != lits_.end()) return it->second;
    const Lit r = compute_lit(*n);
    lits_.emplace(n.get(), r);
    keep_.push_back(n);
    return r;
  }

  const Bits& bits(const bv::NodePtr& n) {
    if (auto it = words_.find(n.get()); it != words_.end()) return it->second;
    Bits r = compute_bits(*n);
    keep_.push_back(n);
    return words_.emplace(n.get(), std::move(r)).first->second;
  }

  Lit compute_lit(const bv::Node& n) {
    using bv::Op;
    switch (n.op) {
      case Op::True: return kTrue;
      case Op::False: return kFalse;
      case Op::Not: return -lit(n.kids[0]);
      case Op::AndB: {
        std::vector<Lit> xs;
        for (const auto& k : n.kids) xs.push_back(lit(k));
        return b_.and_all(xs);
      }
      case Op::OrB: {
        std::vector<Lit> xs;
        for (const auto& k : n.kids) xs.push_back(lit(k));
        return b_.or_all(xs);
      }
      case Op::Implies: return b_.or2(-lit(n.kids[0]), lit(n.kids[1]));
      case Op::Bit: return bits(n.kids[0])[n.value];
      default: break;
    }
    const Bits a = bits(n.kids[0]), c = bits(n.kids[1]);
    switch (n.op) {
      case Op::Eq: return b_.eq(a, c);
      case Op::Ne: return -b_.eq(a, c);
      case Op::Ult: return b_.ult(a, c);
      case Op::Ugt: return b_.ult(c, a);
      case Op::Ule: return -b_.ult(c, a);
      case Op::Uge: return -b_.ult(a, c);
      case Op::Slt: return b_.slt(a, c);
      case Op::Sgt: return b_.slt(c, a);
      case Op::Sle: return -b_.slt(c, a);
      case Op::Sge: return -b_.slt(a, c);
      default: break;
    }
    throw Error(ErrorKind::Internal, "bitblast: unexpected boolean node");
  }

  Bits compute_bits(const bv::Node& n) {
    using bv::Op;
    switch (n.op) {
      case Op::Const: return Builder::constant(n.width, n.value);
      case Op::Var: return var_bits(n.slot, n.primed);
      case Op::ZExt: {
        Bits r = bits(n.kids[0]);
        r.resize(n.width, kFalse);
        return r;
      }
      case Op::SExt: {
        Bits r = bits(n.kids[0]);
        const Lit sign = r.back();
        r.resize(n.width, sign);
        return r;
      }
      case Op::Ite: {
        const Lit c = lit(n.kids[0]);
        return b_.ite(c, bits(n.kids[1]), bits(n.kids[2]));
      }
      default: break;
    }
    const Bits a = bits(n.kids[0]), c = bits(n.kids[1]);
    switch (n.op) {
      case Op::Add: return b_.add(a, c);
      case Op::Sub: return b_.sub(a, c);
      case Op::Mul: return b_.mul(a, c, a.size());
      case Op::UDiv: return b_.udivrem(a, c).first;
      case Op::URem: return b_.udivrem(a, c).second;
      case Op::SDiv: return b_.sdivrem(a, c).first;
      case Op::SRem: return b_.sdivrem(a, c).second;
      case Op::And: {
        Bits r(a.size());
        for (size_t i = 0; i < a.size(); ++i) r[i] = b_.and2(a[i], c[i]);
        return r;
      }
      case Op::Or: {
        Bits r(a.size());
        for (size_t i = 0; i < a.size(); ++i) r[i] = b_.or2(a[i], c[i]);
        return r;
      }
      case Op::Xor: {
        Bits r(a.size());
        for (size_t i = 0; i < a.size(); ++i) r[i] = b_.xor2(a[i], c[i]);
        return r;
      }
      case Op::Shl: return b_.shift(a, c, Builder::Shift::Left);
      case Op::LShr: return b_.shift(a, c, Builder::Shift::LogicalRight);
      case Op::AShr: return b_.shift(a, c, Builder::Shift::ArithRight);
      default: break;
    }
    throw Error(ErrorKind::Internal, "bitblast: unexpected bit-vector node");
  }

  static std::vector<uint32_t> widths_of(const StateSpace& space) {
    std::vector<uint32_t> w;
    for (const StateSlot& sl : space.slots()) w.push_back(sl.width);
    return w;
  }

  std::vector<std::pair<uint32_t, uint32_t>> slots_;  // first bit, width
  int s_;
  Builder b_;
  std::unordered_map<const bv::Node*, Lit> lits_;
  std::unordered_map<const bv::Node*, Bits> words_;
  std::vector<bv::NodePtr> keep_;  // pins cached nodes so addresses stay unique
};

// A single formula in CNF with local numbering: 1..s current state bits,
// s+1..2s primed state bits, 2s+1..num_vars auxiliary variables. The root
// is already asserted.
struct Formula {
  int state_bits = 0;
  int num_vars = 0;
  std::vector<Clause> clauses;
};

inline Formula blast_formula(Blaster bl, const bv::BoolExpr& f) {
  const Lit root = bl.blast(f);
  Builder& b = bl.builder();
  if (root != kTrue) b.add_clause({root});
  Formula out;
  out.state_bits = bl.state_bits();
  out.num_vars = b.next_var() - 1;
  out.clauses = std::move(b.clauses());
  return out;
}

inline Formula blast_formula(const StateSpace& space, const bv::BoolExpr& f) { return blast_formula(Blaster(space), f); }

}  // namespace cnf

// Variable layout of one DimSpec step block of n variables: state bits
// 1..s, then the auxiliary blocks of I, U, G and T.
struct VarLayout {
  int s = 0;
  int aux_i = 0, aux_u = 0, aux_g = 0, aux_t = 0;

  int n() const { return s + aux_i + aux_u + aux_g + aux_t; }
  int base_i() const { return s; }
  int base_u() const { return s + aux_i; }
  int base_g() const { return s + aux_i + aux_u; }
  int base_t() const { return s + aux_i + aux_u + aux_g; }
};

namespace cnf {

// Renumbers a locally numbered formula into the step layout.
inline std::vector<Clause> relocate(const Formula& f, int aux_base, int n, bool allow_primed) {
  const int s = f.state_bits;
  std::vector<Clause> out;
  out.reserve(f.clauses.size());
  for (const Clause& c : f.clauses) {
    Clause d;
    d.reserve(c.size());
    for (int l : c) {
      const int v = std::abs(l);
      int m;
      if (v <= s) {
        m = v;
      } else if (v <= 2 * s) {
        if (!allow_primed) throw Error(ErrorKind::Internal, "primed variable outside the transition formula");
        m = n + (v - s);
      } else {
        m = aux_base + (v - 2 * s);
      }
      d.push_back(l < 0 ? -m : m);
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline int aux_count(const Formula& f) { return std::max(0, f.num_vars - 2 * f.state_bits); }

}  // namespace cnf

inline DimSpecProblem blast_system(const EncodedSystem& e, const StateSpace& space, VarLayout* layout_out = nullptr) {
  const cnf::Formula fi = cnf::blast_formula(space, e.init);
  const cnf::Formula fu = cnf::blast_formula(space, e.univ);
  const cnf::Formula fg = cnf::blast_formula(space, e.goal);
  const cnf::Formula ft = cnf::blast_formula(space, transition_relation(space, e.trans));

  VarLayout L;
  L.s = static_cast<int>(space.num_bits());
  L.aux_i = cnf::aux_count(fi);
  L.aux_u = cnf::aux_count(fu);
  L.aux_g = cnf::aux_count(fg);
  L.aux_t = cnf::aux_count(ft);
  if (layout_out) *layout_out = L;

  DimSpecProblem p;
  p.n = L.n();
  p.state_bits = L.s;
  p.i = cnf::relocate(fi, L.base_i(), p.n, false);
  p.u = cnf::relocate(fu, L.base_u(), p.n, false);
  p.g = cnf::relocate(fg, L.base_g(), p.n, false);
  p.t = cnf::relocate(ft, L.base_t(), p.n, true);
  return p;
}

}  // namespace bvreach
