#pragma once

// Concrete execution of mini-IR programs and explicit-state exploration.
//
// Both are built on execute_block(), which runs one basic block from a given
// (block, pred, register file) and reports where control goes next. The
// arithmetic here is written against plain integer semantics (two's
// complement via __int128 for overflow checks) and does not share code with
// the symbolic evaluator, so the two can check each other.

#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "bvreach/mir.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach::mir {

// Division or remainder by zero: a runtime fault (routed to error) or the
// SMT-LIB totalization that the symbolic encoding uses.
enum class ZeroDivision { Fault, Total };

struct ExecOptions {
  bool return_check = false;
  ZeroDivision zero_division = ZeroDivision::Fault;
};

enum class Exit { Goto, Ok, Error, Return };
enum class ErrorCause { None, AssertFailed, Overflow, ErrorCall, DivisionByZero, NonzeroReturn };

struct BlockResult {
  Exit exit = Exit::Ok;
  BlockId target = 0;        // for Exit::Goto
  uint64_t return_value = 0; // for Exit::Return
  ErrorCause cause = ErrorCause::None;
};

namespace arith {

__extension__ typedef __int128 wide;

inline int64_t to_signed(uint64_t v, uint32_t w) {
  if (w >= 64) return static_cast<int64_t>(v);
  const uint64_t sign = uint64_t{1} << (w - 1);
  return static_cast<int64_t>((v ^ sign)) - static_cast<int64_t>(sign);
}

inline wide smin(uint32_t w) { return -(static_cast<wide>(1) << (w - 1)); }
inline wide smax(uint32_t w) { return (static_cast<wide>(1) << (w - 1)) - 1; }

inline bool signed_overflow(BinOpKind op, uint64_t a, uint64_t b, uint32_t w) {
  const wide x = to_signed(a, w), y = to_signed(b, w);
  wide r = 0;
  switch (op) {
    case BinOpKind::Add: r = x + y; break;
    case BinOpKind::Sub: r = x - y; break;
    case BinOpKind::Mul: r = x * y; break;
    case BinOpKind::SDiv: return x == smin(w) && y == -1;
    default: return false;
  }
  return r > smax(w) || r < smin(w);
}

inline uint64_t neg(uint64_t v, uint32_t w) { return (~v + 1) & width_mask(w); }

// Value of a binary operation; zero divisors follow SMT-LIB.
inline uint64_t eval(BinOpKind op, uint64_t a, uint64_t b, uint32_t w) {
  const uint64_t m = width_mask(w);
  const bool sa = to_signed(a, w) < 0, sb = to_signed(b, w) < 0;
  switch (op) {
    case BinOpKind::Add: return (a + b) & m;
    case BinOpKind::Sub: return (a - b) & m;
    case BinOpKind::Mul: return (a * b) & m;
    case BinOpKind::UDiv: return b == 0 ? m : a / b;
    case BinOpKind::URem: return b == 0 ? a : a % b;
    case BinOpKind::SDiv: {
      if (b == 0) return sa ? 1 : m;
      const uint64_t ua = sa ? neg(a, w) : a, ub = sb ? neg(b, w) : b;
      const uint64_t q = ua / ub;
      return (sa != sb) ? neg(q, w) : q;
    }
    case BinOpKind::SRem: {
      if (b == 0) return a;
      const uint64_t ua = sa ? neg(a, w) : a, ub = sb ? neg(b, w) : b;
      const uint64_t r = ua % ub;
      return sa ? neg(r, w) : r;
    }
    case BinOpKind::And: return a & b;
    case BinOpKind::Or: return a | b;
    case BinOpKind::Xor: return a ^ b;
    case BinOpKind::Shl: return b >= w ? 0 : (a << b) & m;
    case BinOpKind::LShr: return b >= w ? 0 : a >> b;
    case BinOpKind::AShr: {
      const int64_t s = to_signed(a, w);
      if (b >= w) return s < 0 ? m : 0;
      return static_cast<uint64_t>(s >> b) & m;
    }
  }
  return 0;
}

inline bool compare(CmpPred p, uint64_t a, uint64_t b, uint32_t w) {
  const int64_t x = to_signed(a, w), y = to_signed(b, w);
  switch (p) {
    case CmpPred::Eq: return a == b;
    case CmpPred::Ne: return a != b;
    case CmpPred::Ugt: return a > b;
    case CmpPred::Uge: return a >= b;
    case CmpPred::Ult: return a < b;
    case CmpPred::Ule: return a <= b;
    case CmpPred::Sgt: return x > y;
    case CmpPred::Sge: return x >= y;
    case CmpPred::Slt: return x < y;
    case CmpPred::Sle: return x <= y;
  }
  return false;
}

}  // namespace arith

// Runs block `b` entered from `pred`. `env` is the register file indexed by
// RegId; values defined by the block are written into it as they execute, so
// on an early exit it holds exactly the assignments made so far.
inline BlockResult execute_block(const Program& p, BlockId b, BlockId pred, std::vector<uint64_t>& env,
                                 const ExecOptions& opts = {}) {
  const Block& blk = p.blocks[b];
  auto val = [&](const Operand& o) { return o.is_reg() ? env[o.reg] : o.value; };

  // Phis read their incoming values in parallel. A pred that matches no
  // incoming edge selects the last one.
  std::vector<uint64_t> phi_vals;
  phi_vals.reserve(blk.phis.size());
  for (const Phi& phi : blk.phis) {
    const Operand* chosen = &phi.incoming.back().first;
    for (const auto& [o, from] : phi.incoming) {
      if (from == pred) {
        chosen = &o;
        break;
      }
    }
    phi_vals.push_back(val(*chosen));
  }
  for (size_t k = 0; k < blk.phis.size(); ++k) env[blk.phis[k].dest] = phi_vals[k];

  for (const Instr& ins : blk.body) {
    if (const auto* bo = std::get_if<BinOp>(&ins)) {
      const uint64_t a = val(bo->lhs), c = val(bo->rhs);
      const bool is_div = bo->op == BinOpKind::SDiv || bo->op == BinOpKind::UDiv || bo->op == BinOpKind::SRem ||
                          bo->op == BinOpKind::URem;
      if (is_div && c == 0 && opts.zero_division == ZeroDivision::Fault) {
        return {Exit::Error, 0, 0, ErrorCause::DivisionByZero};
      }
      const bool checked = bo->op == BinOpKind::SDiv ||
                           (bo->nsw && (bo->op == BinOpKind::Add || bo->op == BinOpKind::Sub || bo->op == BinOpKind::Mul));
      if (checked && arith::signed_overflow(bo->op, a, c, bo->width)) {
        return {Exit::Error, 0, 0, ErrorCause::Overflow};
      }
      env[bo->dest] = arith::eval(bo->op, a, c, bo->width);
    } else if (const auto* ic = std::get_if<ICmp>(&ins)) {
      env[ic->dest] = arith::compare(ic->pred, val(ic->lhs), val(ic->rhs), ic->width) ? 1 : 0;
    } else if (const auto* ex = std::get_if<Ext>(&ins)) {
      uint64_t v = val(ex->src);
      if (ex->is_signed) v = static_cast<uint64_t>(arith::to_signed(v, ex->from_width));
      env[ex->dest] = v & width_mask(ex->to_width);
    } else if (const auto* se = std::get_if<Select>(&ins)) {
      env[se->dest] = val(se->cond) ? val(se->then_value) : val(se->else_value);
    } else {
      const auto& call = std::get<Call>(ins);
      switch (call.fn) {
        case Intrinsic::Error: return {Exit::Error, 0, 0, ErrorCause::ErrorCall};
        case Intrinsic::Assert:
          if (val(call.arg) == 0) return {Exit::Error, 0, 0, ErrorCause::AssertFailed};
          break;
        case Intrinsic::Assume:
          if (val(call.arg) == 0) return {Exit::Ok, 0, 0, ErrorCause::None};
          break;
      }
    }
  }

  return std::visit(
      [&](const auto& t) -> BlockResult {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, BrUncond>) {
          return {Exit::Goto, t.target, 0, ErrorCause::None};
        } else if constexpr (std::is_same_v<T, BrCond>) {
          return {Exit::Goto, val(t.cond) ? t.then_block : t.else_block, 0, ErrorCause::None};
        } else if constexpr (std::is_same_v<T, Ret>) {
          const uint64_t v = val(t.value);
          if (opts.return_check && v != 0) return {Exit::Error, 0, v, ErrorCause::NonzeroReturn};
          return {Exit::Return, 0, v, ErrorCause::None};
        } else {
          return {Exit::Ok, 0, 0, ErrorCause::None};
        }
      },
      blk.term);
}

struct ConcreteState {
  BlockId block = 0;
  BlockId pred = 0;
  std::vector<uint64_t> env;
};

struct Outcome {
  enum class Kind { Terminated, ErrorHit, OkHit, FuelExhausted };
  Kind kind = Kind::FuelExhausted;
  uint64_t exit_value = 0;
  uint64_t blocks_executed = 0;
  ErrorCause cause = ErrorCause::None;
  BlockId last_block = 0;
};

// Runs from the entry block with all registers zero. Each block entry costs
// one unit of fuel.
inline Outcome interpret(const Program& p, uint64_t fuel, const ExecOptions& opts = {}) {
  ConcreteState st{p.entry, p.entry, std::vector<uint64_t>(p.registers.size(), 0)};
  Outcome out;
  while (out.blocks_executed < fuel) {
    ++out.blocks_executed;
    out.last_block = st.block;
    const BlockResult r = execute_block(p, st.block, st.pred, st.env, opts);
    switch (r.exit) {
      case Exit::Goto:
        st.pred = st.block;
        st.block = r.target;
        break;
      case Exit::Ok:
        out.kind = Outcome::Kind::OkHit;
        return out;
      case Exit::Error:
        out.kind = Outcome::Kind::ErrorHit;
        out.cause = r.cause;
        out.exit_value = r.return_value;
        return out;
      case Exit::Return:
        out.kind = Outcome::Kind::Terminated;
        out.exit_value = r.return_value;
        return out;
    }
  }
  out.kind = Outcome::Kind::FuelExhausted;
  return out;
}

// A state in the encoded transition system: block codes for curr and pred
// plus the values of the state registers V (in StateSpace slot order).
struct SymState {
  uint64_t curr = 0;
  uint64_t pred = 0;
  std::vector<uint64_t> vars;

  bool operator==(const SymState&) const = default;
};

// One transition of the encoded system from `s`, computed concretely. Sink
// codes loop to themselves; invalid codes have no successor.
inline std::optional<SymState> successor(const Program& p, const StateSpace& space, const SymState& s,
                                         const ExecOptions& opts) {
  const BlockRef at = space.decode_block(s.curr);
  if (at.kind == BlockRef::Kind::Invalid) return std::nullopt;
  if (at.kind != BlockRef::Kind::Program) {
    SymState next = s;
    next.pred = s.curr;
    return next;
  }
  std::vector<uint64_t> env(p.registers.size(), 0);
  const auto& slots = space.slots();
  for (size_t i = 2; i < slots.size(); ++i) env[*slots[i].reg] = s.vars[i - 2];
  const BlockResult r = execute_block(p, at.block, static_cast<BlockId>(s.pred - 1), env, opts);

  SymState next;
  next.pred = s.curr;
  switch (r.exit) {
    case Exit::Goto: next.curr = space.code(r.target); break;
    case Exit::Ok:
    case Exit::Return: next.curr = space.ok_code(); break;
    case Exit::Error: next.curr = space.error_code(); break;
  }
  next.vars.resize(slots.size() - 2);
  for (size_t i = 2; i < slots.size(); ++i) next.vars[i - 2] = env[*slots[i].reg];
  return next;
}

struct BfsResult {
  enum class Kind { Reachable, Unreachable, Abort };
  Kind kind = Kind::Abort;
  uint64_t length = 0;  // transitions on a shortest path to error
  uint64_t states = 0;  // distinct states visited
};

// Explicit-state breadth-first search of the encoded transition system from
// curr = pred = entry with all state registers zero. Registers are never
// read before they are written on any path, so the initial register values
// do not influence reachability.
inline BfsResult bfs_reachable_error(const Program& p, const ExecOptions& base = {}, uint32_t max_bits = 30) {
  const StateSpace space = StateSpace::build(p);
  if (space.num_bits() > max_bits) return {BfsResult::Kind::Abort, 0, 0};
  ExecOptions opts = base;
  opts.zero_division = ZeroDivision::Total;

  const auto& slots = space.slots();
  auto pack = [&](const SymState& s) {
    uint64_t key = s.curr | (s.pred << space.block_width());
    for (size_t i = 2; i < slots.size(); ++i) key |= s.vars[i - 2] << (slots[i].first_bit - 1);
    return key;
  };

  SymState init{space.code(p.entry), space.code(p.entry), std::vector<uint64_t>(space.num_vars(), 0)};
  std::unordered_map<uint64_t, uint64_t> depth;
  std::deque<SymState> queue;
  depth.emplace(pack(init), 0);
  queue.push_back(init);
  while (!queue.empty()) {
    SymState s = std::move(queue.front());
    queue.pop_front();
    const uint64_t d = depth.at(pack(s));
    auto next = successor(p, space, s, opts);
    if (!next) continue;
    if (next->curr == space.error_code()) return {BfsResult::Kind::Reachable, d + 1, depth.size()};
    if (depth.emplace(pack(*next), d + 1).second) queue.push_back(std::move(*next));
  }
  return {BfsResult::Kind::Unreachable, 0, depth.size()};
}

}  // namespace bvreach::mir
