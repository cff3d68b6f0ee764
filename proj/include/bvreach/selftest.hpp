#pragma once

// Built-in consistency suites run by `bvreach selftest`: exhaustive small
// width checks of the overflow conditions and of the bit-blaster against the
// evaluator, file-format round trips, and an end-to-end comparison of the
// engines with explicit-state search.

#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "bvreach/bitblast.hpp"
#include "bvreach/bvir.hpp"
#include "bvreach/dimspec.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/engines.hpp"
#include "bvreach/interpreter.hpp"
#include "bvreach/parser.hpp"
#include "bvreach/sat.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach {

// A blasted expression loaded into a solver, evaluated by fixing its input
// slots through assumptions and reading back the output bits.
class CircuitEval {
 public:
  CircuitEval(const std::vector<uint32_t>& widths, const bv::BvExpr& e) : bl_(widths) {
    out_ = bl_.blast(e);
    load();
  }
  CircuitEval(const std::vector<uint32_t>& widths, const bv::BoolExpr& e) : bl_(widths) {
    out_ = {bl_.blast(e)};
    load();
  }

  // Returns nullopt if the clauses are unsatisfiable under the inputs.
  std::optional<uint64_t> eval(const std::vector<uint64_t>& values) {
    std::vector<sat::Lit> as;
    for (size_t slot = 0; slot < values.size(); ++slot) {
      const cnf::Bits in = bl_.var_bits(slot, false);
      for (size_t i = 0; i < in.size(); ++i) as.push_back(sat::from_dimacs(((values[slot] >> i) & 1) ? in[i] : -in[i]));
    }
    if (solver_.solve(as) != sat::Result::Sat) return std::nullopt;
    uint64_t r = 0;
    for (size_t i = 0; i < out_.size(); ++i) {
      const cnf::Lit l = out_[i];
      const bool bit = l == cnf::kTrue || (l != cnf::kFalse && solver_.model_value(sat::from_dimacs(l)));
      if (bit) r |= uint64_t{1} << i;
    }
    return r;
  }

 private:
  void load() {
    solver_.ensure_vars(bl_.builder().next_var());
    for (const Clause& c : bl_.builder().clauses()) {
      std::vector<sat::Lit> ls;
      for (int d : c) ls.push_back(sat::from_dimacs(d));
      solver_.add_clause(ls);
    }
  }

  cnf::Blaster bl_;
  cnf::Bits out_;
  sat::Solver solver_;
};

// Signed range check: does the exact result of `a op b` leave the signed
// range of width w?
inline bool signed_range_overflow(bv::OverflowOp op, uint64_t a, uint64_t b, uint32_t w) {
  const int64_t x = bv::as_signed(a, w), y = bv::as_signed(b, w);
  const int64_t lo = -(int64_t{1} << (w - 1)), hi = (int64_t{1} << (w - 1)) - 1;
  int64_t r = 0;
  switch (op) {
    case bv::OverflowOp::Add: r = x + y; break;
    case bv::OverflowOp::Sub: r = x - y; break;
    case bv::OverflowOp::Mul: r = x * y; break;
    case bv::OverflowOp::SDiv: return x == lo && y == -1;
  }
  return r < lo || r > hi;
}

struct SelftestHooks {
  // Replaces the overflow condition under test (fault injection).
  std::function<bv::BoolExpr(bv::OverflowOp, const bv::BvExpr&, const bv::BvExpr&)> overflow = bv::overflow_condition;
};

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace selftest {

inline constexpr bv::OverflowOp kOverflowOps[] = {bv::OverflowOp::Add, bv::OverflowOp::Sub, bv::OverflowOp::Mul,
                                                  bv::OverflowOp::SDiv};

inline const char* name(bv::OverflowOp op) {
  switch (op) {
    case bv::OverflowOp::Add: return "add";
    case bv::OverflowOp::Sub: return "sub";
    case bv::OverflowOp::Mul: return "mul";
    case bv::OverflowOp::SDiv: return "sdiv";
  }
  return "?";
}

// Counts disagreements between the blasted overflow condition and the range
// check over all operand pairs of the given width.
inline uint64_t overflow_mismatches(uint32_t w, bv::OverflowOp op, const SelftestHooks& hooks) {
  const bv::BvExpr a = bv::var(0, "a", w), b = bv::var(1, "b", w);
  CircuitEval c({w, w}, hooks.overflow(op, a, b));
  uint64_t bad = 0;
  for (uint64_t x = 0; x < (uint64_t{1} << w); ++x) {
    for (uint64_t y = 0; y < (uint64_t{1} << w); ++y) {
      const auto got = c.eval({x, y});
      if (!got || (*got != 0) != signed_range_overflow(op, x, y, w)) ++bad;
    }
  }
  return bad;
}

inline SelftestResult overflow_table(const SelftestHooks& hooks) {
  uint64_t bad = 0, cases = 0;
  for (uint32_t w : {4u, 5u}) {
    for (bv::OverflowOp op : kOverflowOps) {
      bad += overflow_mismatches(w, op, hooks);
      cases += uint64_t{1} << (2 * w);
    }
  }
  return {"overflow-table", bad == 0, std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches"};
}

inline constexpr bv::Op kBinaryOps[] = {bv::Op::Add, bv::Op::Sub,  bv::Op::Mul, bv::Op::UDiv, bv::Op::SDiv,
                                        bv::Op::URem, bv::Op::SRem, bv::Op::And, bv::Op::Or,   bv::Op::Xor,
                                        bv::Op::Shl,  bv::Op::LShr, bv::Op::AShr};
inline constexpr bv::Op kCmpOps[] = {bv::Op::Eq,  bv::Op::Ne,  bv::Op::Ugt, bv::Op::Uge, bv::Op::Ult,
                                     bv::Op::Ule, bv::Op::Sgt, bv::Op::Sge, bv::Op::Slt, bv::Op::Sle};

inline SelftestResult blaster_equivalence(uint32_t w = 4) {
  const bv::BvExpr a = bv::var(0, "a", w), b = bv::var(1, "b", w);
  const uint64_t m = uint64_t{1} << w;
  uint64_t bad = 0, cases = 0;
  auto check = [&](CircuitEval& c, auto&& expected) {
    for (uint64_t x = 0; x < m; ++x) {
      for (uint64_t y = 0; y < m; ++y) {
        const auto got = c.eval({x, y});
        ++cases;
        if (!got || *got != expected(x, y)) ++bad;
      }
    }
  };
  for (bv::Op op : kBinaryOps) {
    const bv::BvExpr e = bv::binary(op, a, b);
    CircuitEval c({w, w}, e);
    check(c, [&](uint64_t x, uint64_t y) {
      const uint64_t v[] = {x, y};
      return bv::eval(e, {v, {}});
    });
  }
  for (bv::Op op : kCmpOps) {
    const bv::BoolExpr e = bv::cmp(op, a, b);
    CircuitEval c({w, w}, e);
    check(c, [&](uint64_t x, uint64_t y) {
      const uint64_t v[] = {x, y};
      return bv::eval(e, {v, {}}) ? uint64_t{1} : uint64_t{0};
    });
  }
  return {"blaster-equivalence", bad == 0, std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches"};
}

// The bvir evaluator against the interpreter's arithmetic.
inline SelftestResult evaluator_vs_interpreter() {
  static constexpr std::pair<mir::BinOpKind, bv::Op> ops[] = {
      {mir::BinOpKind::Add, bv::Op::Add},   {mir::BinOpKind::Sub, bv::Op::Sub},   {mir::BinOpKind::Mul, bv::Op::Mul},
      {mir::BinOpKind::UDiv, bv::Op::UDiv}, {mir::BinOpKind::SDiv, bv::Op::SDiv}, {mir::BinOpKind::URem, bv::Op::URem},
      {mir::BinOpKind::SRem, bv::Op::SRem}, {mir::BinOpKind::And, bv::Op::And},   {mir::BinOpKind::Or, bv::Op::Or},
      {mir::BinOpKind::Xor, bv::Op::Xor},   {mir::BinOpKind::Shl, bv::Op::Shl},   {mir::BinOpKind::LShr, bv::Op::LShr},
      {mir::BinOpKind::AShr, bv::Op::AShr}};
  uint64_t bad = 0, cases = 0;
  for (uint32_t w : {1u, 4u, 5u}) {
    for (const auto& [mk, bk] : ops) {
      for (uint64_t x = 0; x < (uint64_t{1} << w); ++x) {
        for (uint64_t y = 0; y < (uint64_t{1} << w); ++y) {
          ++cases;
          if (mir::arith::eval(mk, x, y, w) != bv::eval_binary(bk, x, y, w)) ++bad;
        }
      }
    }
  }
  return {"evaluator-vs-interpreter", bad == 0, std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches"};
}

inline constexpr const char* kSampleProgram = R"(define i32 @main() {
entry:
  br label %loop

loop:
  %x = phi i4 [ 10, %entry ], [ %y, %loop ]
  %y = add i4 %x, 2
  %c = icmp uge i4 %y, 3
  br i1 %c, label %loop, label %check

check:
  %r = urem i4 %y, 2
  %odd = icmp ne i4 %r, 0
  call void @__VERIFIER_assert(i1 %odd)
  ret i32 0
}
)";

inline SelftestResult roundtrip_and_engines() {
  const mir::Program p = mir::parse(std::string_view(kSampleProgram));
  if (mir::parse(mir::to_text(p)) != p) return {"pipeline", false, "program print/parse round trip differs"};
  const StateSpace s = StateSpace::build(p);
  const DimSpecProblem d = blast_system(encode_program(p, s), s);
  const std::string text = dimspec::to_string(d);
  if (dimspec::to_string(dimspec::read_string(text)) != text) return {"pipeline", false, "DimSpec round trip differs"};
  const mir::BfsResult bfs = mir::bfs_reachable_error(p);
  const engine::Verdict inc = engine::solve_incremental(d);
  const engine::Verdict ic3 = engine::solve_ic3(d);
  const bool ok = bfs.kind == mir::BfsResult::Kind::Reachable && inc.answer == engine::Answer::Sat &&
                  static_cast<uint64_t>(inc.k) == bfs.length && ic3.answer == engine::Answer::Sat;
  return {"pipeline", ok,
          "bfs=" + std::to_string(bfs.length) + " inc=" + std::to_string(inc.k) + " ic3=" +
              std::string(engine::to_string(ic3.answer))};
}

inline SelftestResult sat_random(int instances = 100, uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  int bad = 0;
  for (int t = 0; t < instances; ++t) {
    const int n = 3 + static_cast<int>(rng() % 10);
    const int m = static_cast<int>(rng() % (5 * n)) + 1;
    std::vector<Clause> cs(m);
    for (auto& c : cs) {
      for (int j = 0; j < 3; ++j) {
        const int v = 1 + static_cast<int>(rng() % n);
        c.push_back(rng() & 1 ? v : -v);
      }
    }
    bool brute = false;
    for (uint64_t a = 0; a < (uint64_t{1} << n) && !brute; ++a) {
      bool all = true;
      for (const auto& c : cs) {
        bool sat = false;
        for (int l : c) sat = sat || (((a >> (std::abs(l) - 1)) & 1) == (l > 0 ? 1u : 0u));
        all = all && sat;
      }
      brute = all;
    }
    sat::Solver s(seed + t);
    for (const auto& c : cs) {
      std::vector<sat::Lit> ls;
      for (int l : c) ls.push_back(sat::from_dimacs(l));
      s.add_clause(ls);
    }
    const bool got = s.solve() == sat::Result::Sat;
    if (got != brute) ++bad;
  }
  return {"sat-random", bad == 0, std::to_string(instances) + " instances, " + std::to_string(bad) + " mismatches"};
}

}  // namespace selftest

inline std::vector<SelftestResult> run_selftests(const SelftestHooks& hooks = {}) {
  std::vector<SelftestResult> out;
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, e.what()});
    }
  };
  guarded("overflow-table", [&] { return selftest::overflow_table(hooks); });
  guarded("blaster-equivalence", [] { return selftest::blaster_equivalence(); });
  guarded("evaluator-vs-interpreter", [] { return selftest::evaluator_vs_interpreter(); });
  guarded("pipeline", [] { return selftest::roundtrip_and_engines(); });
  guarded("sat-random", [] { return selftest::sat_random(); });
  return out;
}

}  // namespace bvreach
