#pragma once

// Bit-vector and boolean formulas over state variables (current and primed).
//
// Nodes are immutable and shared; the two typed handles BvExpr and BoolExpr
// keep sorts apart at compile time. The smart constructors fold constants and
// trivial boolean identities, nothing more.

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bvreach/error.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach::bv {

enum class Op : uint8_t {
  // bit-vector sorted
  Const, Var, Add, Sub, Mul, UDiv, SDiv, URem, SRem, And, Or, Xor, Shl, LShr, AShr, ZExt, SExt, Ite,
  // boolean sorted
  True, False, Not, AndB, OrB, Implies, Eq, Ne, Ugt, Uge, Ult, Ule, Sgt, Sge, Slt, Sle, Bit,
};

inline bool is_bool_op(Op op) { return op >= Op::True; }
inline bool is_cmp_op(Op op) { return op >= Op::Eq && op <= Op::Sle; }
inline bool is_binary_bv_op(Op op) { return op >= Op::Add && op <= Op::AShr; }

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::False;
  uint32_t width = 0;   // 0 for boolean nodes
  uint64_t value = 0;   // Const: value, Bit: index, ZExt/SExt: target width
  uint32_t slot = 0;    // Var
  bool primed = false;  // Var
  std::string name;     // Var
  std::vector<NodePtr> kids;
  size_t hash = 0;
};

inline uint64_t mask(uint32_t w) { return w >= 64 ? ~uint64_t{0} : ((uint64_t{1} << w) - 1); }

inline Node node_of(Op op, uint32_t width = 0, uint64_t value = 0) {
  Node n;
  n.op = op;
  n.width = width;
  n.value = value;
  return n;
}

namespace detail {

inline size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

inline NodePtr make(Node n) {
  size_t h = std::hash<int>()(static_cast<int>(n.op));
  h = mix(h, n.width);
  h = mix(h, std::hash<uint64_t>()(n.value));
  h = mix(h, n.slot);
  h = mix(h, n.primed);
  for (const auto& k : n.kids) h = mix(h, k->hash);
  n.hash = h;
  return std::make_shared<const Node>(std::move(n));
}

}  // namespace detail

// Structural equality.
inline bool same(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (a->hash != b->hash || a->op != b->op || a->width != b->width || a->value != b->value || a->slot != b->slot ||
      a->primed != b->primed || a->kids.size() != b->kids.size()) {
    return false;
  }
  for (size_t i = 0; i < a->kids.size(); ++i) {
    if (!same(a->kids[i], b->kids[i])) return false;
  }
  return true;
}

class BvExpr {
 public:
  BvExpr() = default;
  explicit BvExpr(NodePtr n) : n_(std::move(n)) {}
  const NodePtr& node() const { return n_; }
  uint32_t width() const { return n_->width; }
  bool is_const() const { return n_->op == Op::Const; }
  uint64_t const_value() const { return n_->value; }

 private:
  NodePtr n_;
};

class BoolExpr {
 public:
  BoolExpr() = default;
  explicit BoolExpr(NodePtr n) : n_(std::move(n)) {}
  const NodePtr& node() const { return n_; }
  bool is_true() const { return n_->op == Op::True; }
  bool is_false() const { return n_->op == Op::False; }

 private:
  NodePtr n_;
};

// ---- constructors ---------------------------------------------------------

inline BoolExpr truth(bool v) { return BoolExpr(detail::make(node_of(v ? Op::True : Op::False))); }

inline BvExpr constant(uint32_t width, uint64_t value) {
  if (width == 0 || width > 64) throw Error(ErrorKind::Internal, "bit-vector width out of range");
  Node n = node_of(Op::Const, width, value & mask(width));
  return BvExpr(detail::make(std::move(n)));
}

inline BvExpr var(uint32_t slot, std::string name, uint32_t width, bool primed = false) {
  Node n = node_of(Op::Var, width);
  n.slot = slot;
  n.primed = primed;
  n.name = std::move(name);
  return BvExpr(detail::make(std::move(n)));
}

inline BvExpr var(const StateSpace& s, size_t slot, bool primed = false) {
  return var(static_cast<uint32_t>(slot), s.slot(slot).name, s.slot(slot).width, primed);
}

uint64_t eval_binary(Op op, uint64_t a, uint64_t b, uint32_t w);
bool eval_cmp(Op op, uint64_t a, uint64_t b, uint32_t w);

inline BvExpr binary(Op op, const BvExpr& a, const BvExpr& b) {
  if (!is_binary_bv_op(op)) throw Error(ErrorKind::Internal, "not a binary bit-vector operator");
  if (a.width() != b.width()) throw Error(ErrorKind::Internal, "operand widths differ");
  if (a.is_const() && b.is_const()) return constant(a.width(), eval_binary(op, a.const_value(), b.const_value(), a.width()));
  Node n = node_of(op, a.width());
  n.kids = {a.node(), b.node()};
  return BvExpr(detail::make(std::move(n)));
}

inline BvExpr add(const BvExpr& a, const BvExpr& b) { return binary(Op::Add, a, b); }
inline BvExpr sub(const BvExpr& a, const BvExpr& b) { return binary(Op::Sub, a, b); }
inline BvExpr mul(const BvExpr& a, const BvExpr& b) { return binary(Op::Mul, a, b); }
inline BvExpr sdiv(const BvExpr& a, const BvExpr& b) { return binary(Op::SDiv, a, b); }

inline BvExpr extend(bool is_signed, const BvExpr& a, uint32_t to_width) {
  if (to_width <= a.width() || to_width > 64) throw Error(ErrorKind::Internal, "extension must widen");
  if (a.is_const()) {
    uint64_t v = a.const_value();
    if (is_signed && a.width() < 64 && ((v >> (a.width() - 1)) & 1)) v |= ~mask(a.width());
    return constant(to_width, v);
  }
  Node n = node_of(is_signed ? Op::SExt : Op::ZExt, to_width, to_width);
  n.kids = {a.node()};
  return BvExpr(detail::make(std::move(n)));
}

inline BvExpr ite(const BoolExpr& c, const BvExpr& a, const BvExpr& b) {
  if (a.width() != b.width()) throw Error(ErrorKind::Internal, "ite arms differ in width");
  if (c.is_true()) return a;
  if (c.is_false()) return b;
  if (same(a.node(), b.node())) return a;
  Node n = node_of(Op::Ite, a.width());
  n.kids = {c.node(), a.node(), b.node()};
  return BvExpr(detail::make(std::move(n)));
}

inline BoolExpr bit(const BvExpr& a, uint32_t index) {
  if (index >= a.width()) throw Error(ErrorKind::Internal, "bit index out of range");
  if (a.is_const()) return truth(((a.const_value() >> index) & 1) != 0);
  const NodePtr& n = a.node();
  if (n->op == Op::Ite && n->kids[1]->op == Op::Const && n->kids[2]->op == Op::Const) {
    const bool t = (n->kids[1]->value >> index) & 1, e = (n->kids[2]->value >> index) & 1;
    if (t == e) return truth(t);
    if (t) return BoolExpr(n->kids[0]);
  }
  Node b = node_of(Op::Bit, 0, index);
  b.kids = {a.node()};
  return BoolExpr(detail::make(std::move(b)));
}

inline BoolExpr not_(const BoolExpr& a) {
  if (a.is_true()) return truth(false);
  if (a.is_false()) return truth(true);
  if (a.node()->op == Op::Not) return BoolExpr(a.node()->kids[0]);
  Node n = node_of(Op::Not);
  n.kids = {a.node()};
  return BoolExpr(detail::make(std::move(n)));
}

namespace detail {

inline BoolExpr nary(Op op, std::span<const BoolExpr> xs) {
  const bool is_and = op == Op::AndB;
  std::vector<NodePtr> kids;
  for (const BoolExpr& x : xs) {
    if (is_and ? x.is_false() : x.is_true()) return truth(!is_and);
    if (is_and ? x.is_true() : x.is_false()) continue;
    if (x.node()->op == op) {
      kids.insert(kids.end(), x.node()->kids.begin(), x.node()->kids.end());
    } else {
      kids.push_back(x.node());
    }
  }
  if (kids.empty()) return truth(is_and);
  if (kids.size() == 1) return BoolExpr(kids[0]);
  Node n = node_of(op);
  n.kids = std::move(kids);
  return BoolExpr(make(std::move(n)));
}

}  // namespace detail

inline BoolExpr and_(std::span<const BoolExpr> xs) { return detail::nary(Op::AndB, xs); }
inline BoolExpr or_(std::span<const BoolExpr> xs) { return detail::nary(Op::OrB, xs); }
inline BoolExpr and_(std::initializer_list<BoolExpr> xs) { return and_(std::span<const BoolExpr>(xs.begin(), xs.size())); }
inline BoolExpr or_(std::initializer_list<BoolExpr> xs) { return or_(std::span<const BoolExpr>(xs.begin(), xs.size())); }

inline BoolExpr implies(const BoolExpr& a, const BoolExpr& b) {
  if (a.is_false() || b.is_true()) return truth(true);
  if (a.is_true()) return b;
  if (b.is_false()) return not_(a);
  Node n = node_of(Op::Implies);
  n.kids = {a.node(), b.node()};
  return BoolExpr(detail::make(std::move(n)));
}

inline BoolExpr iff(const BoolExpr& a, const BoolExpr& b) { return and_({implies(a, b), implies(b, a)}); }

inline BoolExpr cmp(Op op, const BvExpr& a, const BvExpr& b) {
  if (!is_cmp_op(op)) throw Error(ErrorKind::Internal, "not a comparison operator");
  if (a.width() != b.width()) throw Error(ErrorKind::Internal, "comparison operand widths differ");
  if (a.is_const() && b.is_const()) return truth(eval_cmp(op, a.const_value(), b.const_value(), a.width()));
  if ((op == Op::Eq || op == Op::Ne) && same(a.node(), b.node())) return truth(op == Op::Eq);
  Node n = node_of(op);
  n.kids = {a.node(), b.node()};
  return BoolExpr(detail::make(std::move(n)));
}

inline BoolExpr eq(const BvExpr& a, const BvExpr& b) { return cmp(Op::Eq, a, b); }
inline BoolExpr ne(const BvExpr& a, const BvExpr& b) { return cmp(Op::Ne, a, b); }

inline BvExpr from_bool(const BoolExpr& c) { return ite(c, constant(1, 1), constant(1, 0)); }
inline BoolExpr to_bool(const BvExpr& v) { return v.width() == 1 ? bit(v, 0) : ne(v, constant(v.width(), 0)); }

// ---- evaluation -----------------------------------------------------------

inline int64_t as_signed(uint64_t v, uint32_t w) {
  if (w >= 64) return static_cast<int64_t>(v);
  return ((v >> (w - 1)) & 1) ? static_cast<int64_t>(v | ~mask(w)) : static_cast<int64_t>(v);
}

// SMT-LIB fixed-size bit-vector semantics, including the totalized division.
inline uint64_t eval_binary(Op op, uint64_t a, uint64_t b, uint32_t w) {
  const uint64_t m = mask(w);
  auto neg = [&](uint64_t x) { return (0 - x) & m; };
  auto msb = [&](uint64_t x) { return ((x >> (w - 1)) & 1) != 0; };
  auto udiv = [&](uint64_t x, uint64_t y) { return y == 0 ? m : x / y; };
  auto urem = [&](uint64_t x, uint64_t y) { return y == 0 ? x : x % y; };
  switch (op) {
    case Op::Add: return (a + b) & m;
    case Op::Sub: return (a - b) & m;
    case Op::Mul: return (a * b) & m;
    case Op::UDiv: return udiv(a, b);
    case Op::URem: return urem(a, b);
    case Op::SDiv: {
      const bool sa = msb(a), sb = msb(b);
      if (!sa && !sb) return udiv(a, b);
      if (sa && !sb) return neg(udiv(neg(a), b));
      if (!sa && sb) return neg(udiv(a, neg(b)));
      return udiv(neg(a), neg(b));
    }
    case Op::SRem: {
      const bool sa = msb(a), sb = msb(b);
      if (!sa && !sb) return urem(a, b);
      if (sa && !sb) return neg(urem(neg(a), b));
      if (!sa && sb) return urem(a, neg(b));
      return neg(urem(neg(a), neg(b)));
    }
    case Op::And: return a & b;
    case Op::Or: return a | b;
    case Op::Xor: return a ^ b;
    case Op::Shl: return b >= w ? 0 : (a << b) & m;
    case Op::LShr: return b >= w ? 0 : (a >> b);
    case Op::AShr: {
      if (b >= w) return msb(a) ? m : 0;
      return static_cast<uint64_t>(as_signed(a, w) >> b) & m;
    }
    default: break;
  }
  throw Error(ErrorKind::Internal, "eval_binary: bad operator");
}

inline bool eval_cmp(Op op, uint64_t a, uint64_t b, uint32_t w) {
  const int64_t x = as_signed(a, w), y = as_signed(b, w);
  switch (op) {
    case Op::Eq: return a == b;
    case Op::Ne: return a != b;
    case Op::Ugt: return a > b;
    case Op::Uge: return a >= b;
    case Op::Ult: return a < b;
    case Op::Ule: return a <= b;
    case Op::Sgt: return x > y;
    case Op::Sge: return x >= y;
    case Op::Slt: return x < y;
    case Op::Sle: return x <= y;
    default: break;
  }
  throw Error(ErrorKind::Internal, "eval_cmp: bad operator");
}

// Values of state variables indexed by slot, for the current and the next
// (primed) state.
struct Valuation {
  std::span<const uint64_t> current;
  std::span<const uint64_t> next;
};

class Evaluator {
 public:
  explicit Evaluator(Valuation v) : v_(v) {}

  uint64_t operator()(const BvExpr& e) { return value(e.node()); }
  bool operator()(const BoolExpr& e) { return value(e.node()) != 0; }

 private:
  uint64_t value(const NodePtr& n) {
    if (n->op == Op::Const) return n->value;
    if (auto it = memo_.find(n.get()); it != memo_.end()) return it->second;
    const uint64_t r = compute(*n);
    memo_.emplace(n.get(), r);
    return r;
  }

  uint64_t compute(const Node& n) {
    switch (n.op) {
      case Op::Var: {
        const auto& src = n.primed ? v_.next : v_.current;
        if (n.slot >= src.size()) throw Error(ErrorKind::Internal, "valuation misses variable " + n.name);
        return src[n.slot] & mask(n.width);
      }
      case Op::ZExt: return value(n.kids[0]);
      case Op::SExt: return static_cast<uint64_t>(as_signed(value(n.kids[0]), n.kids[0]->width)) & mask(n.width);
      case Op::Ite: return value(n.kids[0]) ? value(n.kids[1]) : value(n.kids[2]);
      case Op::True: return 1;
      case Op::False: return 0;
      case Op::Not: return value(n.kids[0]) ? 0 : 1;
      case Op::AndB:
        for (const auto& k : n.kids) {
          if (!value(k)) return 0;
        }
        return 1;
      case Op::OrB:
        for (const auto& k : n.kids) {
          if (value(k)) return 1;
        }
        return 0;
      case Op::Implies: return (!value(n.kids[0]) || value(n.kids[1])) ? 1 : 0;
      case Op::Bit: return (value(n.kids[0]) >> n.value) & 1;
      default: break;
    }
    if (is_binary_bv_op(n.op)) return eval_binary(n.op, value(n.kids[0]), value(n.kids[1]), n.width);
    if (is_cmp_op(n.op)) return eval_cmp(n.op, value(n.kids[0]), value(n.kids[1]), n.kids[0]->width) ? 1 : 0;
    throw Error(ErrorKind::Internal, "evaluator: unexpected node");
  }

  Valuation v_;
  std::unordered_map<const Node*, uint64_t> memo_;
};

inline uint64_t eval(const BvExpr& e, Valuation v) { return Evaluator(v)(e); }
inline bool eval(const BoolExpr& e, Valuation v) { return Evaluator(v)(e); }

// ---- encoding helpers -----------------------------------------------------

enum class OverflowOp { Add, Sub, Mul, SDiv };

// True exactly when the signed result of `a op b` does not fit the operand
// width: sign-bit rules for add/sub, a division check for mul, and
// min / -1 for sdiv.
inline BoolExpr overflow_condition(OverflowOp op, const BvExpr& a, const BvExpr& b) {
  const uint32_t w = a.width();
  if (w != b.width()) throw Error(ErrorKind::Internal, "overflow_condition needs equal widths");
  const uint32_t sb = w - 1;
  const BvExpr min = constant(w, uint64_t{1} << sb);
  const BvExpr minus_one = constant(w, mask(w));
  switch (op) {
    case OverflowOp::Add: {
      const BoolExpr sa = bit(a, sb), sbb = bit(b, sb), sr = bit(add(a, b), sb);
      return or_({and_({sa, sbb, not_(sr)}), and_({not_(sa), not_(sbb), sr})});
    }
    case OverflowOp::Sub: {
      const BoolExpr sa = bit(a, sb), sbb = bit(b, sb), sr = bit(sub(a, b), sb);
      return or_({and_({sa, not_(sbb), not_(sr)}), and_({not_(sa), sbb, sr})});
    }
    case OverflowOp::Mul: {
      const BvExpr zero = constant(w, 0);
      const BoolExpr wrong = ne(sdiv(mul(a, b), a), b);
      return and_({ne(a, zero), or_({wrong, and_({eq(a, minus_one), eq(b, min)})})});
    }
    case OverflowOp::SDiv: return and_({eq(a, min), eq(b, minus_one)});
  }
  return truth(false);
}

// Conjunction of v' = v over the state registers (not curr/pred) whose slot
// is not in `assigned`.
inline BoolExpr same_frame(const StateSpace& s, const std::unordered_set<size_t>& assigned) {
  std::vector<BoolExpr> parts;
  for (size_t i = 2; i < s.slots().size(); ++i) {
    if (assigned.count(i)) continue;
    parts.push_back(eq(var(s, i, true), var(s, i, false)));
  }
  return and_(parts);
}

// Whether any primed variable occurs in the formula.
inline bool mentions_primed(const NodePtr& n) {
  std::vector<const Node*> stack{n.get()};
  std::unordered_set<const Node*> seen;
  while (!stack.empty()) {
    const Node* x = stack.back();
    stack.pop_back();
    if (!seen.insert(x).second) continue;
    if (x->op == Op::Var && x->primed) return true;
    for (const auto& k : x->kids) stack.push_back(k.get());
  }
  return false;
}

// ---- SMT-LIB style printing -----------------------------------------------

inline const char* smt_name(Op op) {
  switch (op) {
    case Op::Add: return "bvadd";
    case Op::Sub: return "bvsub";
    case Op::Mul: return "bvmul";
    case Op::UDiv: return "bvudiv";
    case Op::SDiv: return "bvsdiv";
    case Op::URem: return "bvurem";
    case Op::SRem: return "bvsrem";
    case Op::And: return "bvand";
    case Op::Or: return "bvor";
    case Op::Xor: return "bvxor";
    case Op::Shl: return "bvshl";
    case Op::LShr: return "bvlshr";
    case Op::AShr: return "bvashr";
    case Op::Ite: return "ite";
    case Op::Not: return "not";
    case Op::AndB: return "and";
    case Op::OrB: return "or";
    case Op::Implies: return "=>";
    case Op::Eq: return "=";
    case Op::Ne: return "distinct";
    case Op::Ugt: return "bvugt";
    case Op::Uge: return "bvuge";
    case Op::Ult: return "bvult";
    case Op::Ule: return "bvule";
    case Op::Sgt: return "bvsgt";
    case Op::Sge: return "bvsge";
    case Op::Slt: return "bvslt";
    case Op::Sle: return "bvsle";
    default: return "?";
  }
}

// Register names may start with a digit and primes are not simple-symbol
// characters, so such names are written quoted.
inline std::string smt_symbol(const std::string& name, bool primed) {
  const std::string s = primed ? name + "'" : name;
  if (primed || name.empty() || (name[0] >= '0' && name[0] <= '9')) return "|" + s + "|";
  return s;
}

inline void print_smt(std::ostream& os, const NodePtr& n) {
  switch (n->op) {
    case Op::Const: os << "(_ bv" << n->value << ' ' << n->width << ')'; return;
    case Op::Var: os << smt_symbol(n->name, n->primed); return;
    case Op::True: os << "true"; return;
    case Op::False: os << "false"; return;
    case Op::ZExt:
    case Op::SExt:
      os << "((_ " << (n->op == Op::ZExt ? "zero_extend " : "sign_extend ") << (n->width - n->kids[0]->width) << ") ";
      print_smt(os, n->kids[0]);
      os << ')';
      return;
    case Op::Bit:
      os << "(= ((_ extract " << n->value << ' ' << n->value << ") ";
      print_smt(os, n->kids[0]);
      os << ") #b1)";
      return;
    default: break;
  }
  os << '(' << smt_name(n->op);
  for (const auto& k : n->kids) {
    os << ' ';
    print_smt(os, k);
  }
  os << ')';
}

inline std::string to_smt(const BvExpr& e) {
  std::ostringstream os;
  print_smt(os, e.node());
  return os.str();
}
inline std::string to_smt(const BoolExpr& e) {
  std::ostringstream os;
  print_smt(os, e.node());
  return os.str();
}

}  // namespace bvreach::bv
