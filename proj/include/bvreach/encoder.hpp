#pragma once

// Translation of a program into the four formulas of a symbolic transition
// system: initial states I, universal constraint U, goal G and transition
// relation T.
//
// Each block is executed symbolically from top to bottom. Registers kept in
// the state are read from state variables; all other registers are inlined.
// Every possible way of leaving the block becomes one guarded transition.

#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "bvreach/bvir.hpp"
#include "bvreach/mir.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach {

struct EncodeOptions {
  bool return_check = false;
};

struct SymbolicTransition {
  uint32_t source = 0;  // block code of curr
  bv::BoolExpr guard;   // over current-state variables, without curr = source
  uint32_t target = 0;
  std::vector<std::pair<size_t, bv::BvExpr>> updates;  // slot -> new value
};

struct EncodedSystem {
  bv::BoolExpr init;
  bv::BoolExpr univ;
  bv::BoolExpr goal;
  std::vector<SymbolicTransition> trans;
};

inline bv::BvExpr block_code(const StateSpace& s, uint64_t code) { return bv::constant(s.block_width(), code); }

inline bv::BoolExpr curr_is(const StateSpace& s, uint64_t code, bool primed = false) {
  return bv::eq(bv::var(s, StateSpace::kCurr, primed), block_code(s, code));
}

inline bv::BoolExpr pred_is(const StateSpace& s, uint64_t code, bool primed = false) {
  return bv::eq(bv::var(s, StateSpace::kPred, primed), block_code(s, code));
}

inline bv::BoolExpr encode_initial(const StateSpace& s, mir::BlockId entry = 0) {
  return bv::and_({curr_is(s, s.code(entry)), pred_is(s, s.code(entry))});
}

inline bv::BoolExpr encode_goal(const StateSpace& s) { return curr_is(s, s.error_code()); }

inline bv::BoolExpr encode_universal(const StateSpace& s) {
  const bv::BvExpr one = block_code(s, 1), max = block_code(s, s.max_code());
  std::vector<bv::BoolExpr> parts;
  for (size_t slot : {StateSpace::kCurr, StateSpace::kPred}) {
    const bv::BvExpr v = bv::var(s, slot);
    parts.push_back(bv::cmp(bv::Op::Uge, v, one));
    parts.push_back(bv::cmp(bv::Op::Ule, v, max));
  }
  return bv::and_(parts);
}

namespace detail {

inline bv::Op to_bv_op(mir::BinOpKind k) {
  switch (k) {
    case mir::BinOpKind::Add: return bv::Op::Add;
    case mir::BinOpKind::Sub: return bv::Op::Sub;
    case mir::BinOpKind::Mul: return bv::Op::Mul;
    case mir::BinOpKind::SDiv: return bv::Op::SDiv;
    case mir::BinOpKind::UDiv: return bv::Op::UDiv;
    case mir::BinOpKind::SRem: return bv::Op::SRem;
    case mir::BinOpKind::URem: return bv::Op::URem;
    case mir::BinOpKind::And: return bv::Op::And;
    case mir::BinOpKind::Or: return bv::Op::Or;
    case mir::BinOpKind::Xor: return bv::Op::Xor;
    case mir::BinOpKind::Shl: return bv::Op::Shl;
    case mir::BinOpKind::LShr: return bv::Op::LShr;
    case mir::BinOpKind::AShr: return bv::Op::AShr;
  }
  return bv::Op::Add;
}

inline bv::Op to_bv_op(mir::CmpPred p) {
  switch (p) {
    case mir::CmpPred::Eq: return bv::Op::Eq;
    case mir::CmpPred::Ne: return bv::Op::Ne;
    case mir::CmpPred::Ugt: return bv::Op::Ugt;
    case mir::CmpPred::Uge: return bv::Op::Uge;
    case mir::CmpPred::Ult: return bv::Op::Ult;
    case mir::CmpPred::Ule: return bv::Op::Ule;
    case mir::CmpPred::Sgt: return bv::Op::Sgt;
    case mir::CmpPred::Sge: return bv::Op::Sge;
    case mir::CmpPred::Slt: return bv::Op::Slt;
    case mir::CmpPred::Sle: return bv::Op::Sle;
  }
  return bv::Op::Eq;
}

class BlockEncoder {
 public:
  BlockEncoder(const mir::Program& p, const StateSpace& s, mir::BlockId b, const EncodeOptions& opts)
      : p_(p), s_(s), b_(b), opts_(opts), env_(p.registers.size()) {
    for (size_t i = 2; i < s.slots().size(); ++i) env_[*s.slot(i).reg] = bv::var(s, i);
  }

  std::vector<SymbolicTransition> run() {
    const mir::Block& blk = p_.blocks[b_];
    guard_ = bv::truth(true);

    std::vector<bv::BvExpr> phi_values;
    for (const mir::Phi& phi : blk.phis) {
      bv::BvExpr e = operand(phi.incoming.back().first, phi.width);
      for (size_t k = phi.incoming.size() - 1; k-- > 0;) {
        const auto& [o, from] = phi.incoming[k];
        e = bv::ite(pred_is(s_, s_.code(from)), operand(o, phi.width), e);
      }
      phi_values.push_back(e);
    }
    for (size_t k = 0; k < blk.phis.size(); ++k) assign(blk.phis[k].dest, phi_values[k]);

    for (const mir::Instr& ins : blk.body) {
      if (!step(ins)) return std::move(out_);
    }
    terminate(blk.term);
    return std::move(out_);
  }

 private:
  bv::BvExpr operand(const mir::Operand& o, uint32_t width) const {
    if (!o.is_reg()) return bv::constant(width, o.value);
    return *env_[o.reg];
  }

  void assign(mir::RegId r, bv::BvExpr e) {
    env_[r] = e;
    if (auto slot = s_.slot_of(r)) {
      for (auto& u : updates_) {
        if (u.first == *slot) {
          u.second = e;
          return;
        }
      }
      updates_.emplace_back(*slot, e);
    }
  }

  void emit(const bv::BoolExpr& cond, uint32_t target) {
    const bv::BoolExpr g = bv::and_({guard_, cond});
    if (g.is_false()) return;
    out_.push_back(SymbolicTransition{s_.code(b_), g, target, updates_});
  }

  // Emits `cond -> target` and narrows the path guard to the complement.
  void split(const bv::BoolExpr& cond, uint32_t target) {
    emit(cond, target);
    guard_ = bv::and_({guard_, bv::not_(cond)});
  }

  // Returns false once the rest of the block is dead.
  bool step(const mir::Instr& ins) {
    if (const auto* bo = std::get_if<mir::BinOp>(&ins)) {
      const bv::BvExpr a = operand(bo->lhs, bo->width), c = operand(bo->rhs, bo->width);
      std::optional<bv::OverflowOp> ov;
      if (bo->op == mir::BinOpKind::SDiv) {
        ov = bv::OverflowOp::SDiv;
      } else if (bo->nsw && bo->op == mir::BinOpKind::Add) {
        ov = bv::OverflowOp::Add;
      } else if (bo->nsw && bo->op == mir::BinOpKind::Sub) {
        ov = bv::OverflowOp::Sub;
      } else if (bo->nsw && bo->op == mir::BinOpKind::Mul) {
        ov = bv::OverflowOp::Mul;
      }
      if (ov) split(bv::overflow_condition(*ov, a, c), s_.error_code());
      assign(bo->dest, bv::binary(to_bv_op(bo->op), a, c));
    } else if (const auto* ic = std::get_if<mir::ICmp>(&ins)) {
      const bv::BoolExpr r = bv::cmp(to_bv_op(ic->pred), operand(ic->lhs, ic->width), operand(ic->rhs, ic->width));
      assign(ic->dest, bv::from_bool(r));
    } else if (const auto* ex = std::get_if<mir::Ext>(&ins)) {
      assign(ex->dest, bv::extend(ex->is_signed, operand(ex->src, ex->from_width), ex->to_width));
    } else if (const auto* se = std::get_if<mir::Select>(&ins)) {
      const bv::BoolExpr c = bv::to_bool(operand(se->cond, 1));
      assign(se->dest, bv::ite(c, operand(se->then_value, se->width), operand(se->else_value, se->width)));
    } else {
      const auto& call = std::get<mir::Call>(ins);
      switch (call.fn) {
        case mir::Intrinsic::Error:
          emit(bv::truth(true), s_.error_code());
          return false;
        case mir::Intrinsic::Assert:
          split(bv::not_(bv::to_bool(operand(call.arg, call.arg_width))), s_.error_code());
          break;
        case mir::Intrinsic::Assume:
          split(bv::not_(bv::to_bool(operand(call.arg, call.arg_width))), s_.ok_code());
          break;
      }
    }
    return !guard_.is_false();
  }

  void terminate(const mir::Terminator& t) {
    if (const auto* br = std::get_if<mir::BrUncond>(&t)) {
      emit(bv::truth(true), s_.code(br->target));
    } else if (const auto* bc = std::get_if<mir::BrCond>(&t)) {
      const bv::BoolExpr c = bv::to_bool(operand(bc->cond, 1));
      emit(c, s_.code(bc->then_block));
      emit(bv::not_(c), s_.code(bc->else_block));
    } else if (const auto* ret = std::get_if<mir::Ret>(&t)) {
      if (opts_.return_check) {
        const bv::BoolExpr nz = bv::to_bool(operand(ret->value, ret->width));
        emit(nz, s_.error_code());
        emit(bv::not_(nz), s_.ok_code());
      } else {
        emit(bv::truth(true), s_.ok_code());
      }
    } else {
      emit(bv::truth(true), s_.ok_code());
    }
  }

  const mir::Program& p_;
  const StateSpace& s_;
  mir::BlockId b_;
  EncodeOptions opts_;
  std::vector<std::optional<bv::BvExpr>> env_;
  std::vector<std::pair<size_t, bv::BvExpr>> updates_;
  bv::BoolExpr guard_;
  std::vector<SymbolicTransition> out_;
};

}  // namespace detail

inline std::vector<SymbolicTransition> encode_block(const mir::Program& p, const StateSpace& s, mir::BlockId b,
                                                    const EncodeOptions& opts = {}) {
  return detail::BlockEncoder(p, s, b, opts).run();
}

inline std::vector<SymbolicTransition> sink_transitions(const StateSpace& s) {
  return {SymbolicTransition{s.ok_code(), bv::truth(true), s.ok_code(), {}},
          SymbolicTransition{s.error_code(), bv::truth(true), s.error_code(), {}}};
}

// Left side of a transition: curr = source ∧ guard.
inline bv::BoolExpr transition_premise(const StateSpace& s, const SymbolicTransition& t) {
  return bv::and_({curr_is(s, t.source), t.guard});
}

// Right side: curr' = target ∧ pred' = source ∧ updates ∧ frame.
inline bv::BoolExpr transition_effect(const StateSpace& s, const SymbolicTransition& t) {
  std::vector<bv::BoolExpr> parts{curr_is(s, t.target, true), pred_is(s, t.source, true)};
  std::unordered_set<size_t> assigned;
  for (const auto& [slot, e] : t.updates) {
    parts.push_back(bv::eq(bv::var(s, slot, true), e));
    assigned.insert(slot);
  }
  parts.push_back(bv::same_frame(s, assigned));
  return bv::and_(parts);
}

inline bv::BoolExpr transition_formula(const StateSpace& s, const SymbolicTransition& t) {
  return bv::implies(transition_premise(s, t), transition_effect(s, t));
}

inline bv::BoolExpr transition_relation(const StateSpace& s, const std::vector<SymbolicTransition>& ts) {
  std::vector<bv::BoolExpr> parts;
  for (const auto& t : ts) parts.push_back(transition_formula(s, t));
  return bv::and_(parts);
}

inline EncodedSystem encode_program(const mir::Program& p, const StateSpace& s, const EncodeOptions& opts = {}) {
  EncodedSystem e;
  e.init = encode_initial(s, p.entry);
  e.univ = encode_universal(s);
  e.goal = encode_goal(s);
  for (mir::BlockId b = 0; b < p.blocks.size(); ++b) {
    auto ts = encode_block(p, s, b, opts);
    e.trans.insert(e.trans.end(), std::make_move_iterator(ts.begin()), std::make_move_iterator(ts.end()));
  }
  for (auto& t : sink_transitions(s)) e.trans.push_back(std::move(t));
  return e;
}

// `--dump-transitions`: one line per transition, premise => effect.
inline void dump_transitions(std::ostream& os, const StateSpace& s, const EncodedSystem& e) {
  for (const auto& t : e.trans) {
    os << "[" << s.block_name(t.source) << " -> " << s.block_name(t.target) << "] "
       << bv::to_smt(transition_premise(s, t)) << " => " << bv::to_smt(transition_effect(s, t)) << '\n';
  }
}

// `--dump-smt`: the four formulas as SMT-LIB definitions.
inline void dump_smt(std::ostream& os, const StateSpace& s, const EncodedSystem& e) {
  for (const StateSlot& sl : s.slots()) {
    for (bool primed : {false, true}) {
      os << "(declare-fun " << bv::smt_symbol(sl.name, primed) << " () (_ BitVec " << sl.width << "))\n";
    }
  }
  os << "(define-fun init () Bool " << bv::to_smt(e.init) << ")\n";
  os << "(define-fun universal () Bool " << bv::to_smt(e.univ) << ")\n";
  os << "(define-fun goal () Bool " << bv::to_smt(e.goal) << ")\n";
  os << "(define-fun trans () Bool " << bv::to_smt(transition_relation(s, e.trans)) << ")\n";
}

}  // namespace bvreach
