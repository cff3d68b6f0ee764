#include <gtest/gtest.h>

#include <random>

#include "bvreach/bitblast.hpp"
#include "bvreach/cli.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/interpreter.hpp"
#include "bvreach/parser.hpp"
#include "bvreach/sat.hpp"
#include "bvreach/selftest.hpp"

using namespace bvreach;
using bv::Op;

namespace {

const std::string kFixtures = BVREACH_FIXTURES;

sat::Solver load(const std::vector<Clause>& clauses, int num_vars) {
  sat::Solver s;
  s.ensure_vars(num_vars);
  for (const Clause& c : clauses) {
    std::vector<sat::Lit> ls;
    for (int d : c) ls.push_back(sat::from_dimacs(d));
    s.add_clause(ls);
  }
  return s;
}

class RandomExpr {
 public:
  RandomExpr(uint64_t seed, uint32_t w) : rng_(seed), w_(w) {}

  bv::BvExpr bv(int depth) {
    const int r = pick(0, depth <= 0 ? 2 : 9);
    if (r == 0) return bv::constant(w_, rng_());
    if (r <= 2) return bv::var(static_cast<uint32_t>(r - 1), r == 1 ? "x" : "y", w_);
    if (r <= 6) {
      static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::UDiv, Op::URem, Op::SDiv, Op::SRem,
                               Op::And, Op::Or,  Op::Xor, Op::Shl,  Op::LShr, Op::AShr};
      return bv::binary(ops[pick(0, 12)], bv(depth - 1), bv(depth - 1));
    }
    if (r == 7) return bv::ite(cond(depth - 1), bv(depth - 1), bv(depth - 1));
    return bv(depth - 1);
  }

  bv::BoolExpr cond(int depth) {
    static const Op cmps[] = {Op::Eq, Op::Ne, Op::Ugt, Op::Uge, Op::Ult, Op::Ule, Op::Sgt, Op::Sge, Op::Slt, Op::Sle};
    const int r = pick(0, 4);
    if (r == 0 && depth > 0) return bv::and_({cond(depth - 1), cond(depth - 1)});
    if (r == 1 && depth > 0) return bv::not_(cond(depth - 1));
    if (r == 2) return bv::bit(bv(depth), static_cast<uint32_t>(pick(0, static_cast<int>(w_) - 1)));
    return bv::cmp(cmps[pick(0, 9)], bv(depth), bv(depth));
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64 rng_;
  uint32_t w_;
};

}  // namespace

TEST(Builder, GateSimplification) {
  cnf::Builder b(3);
  const cnf::Lit x = 1, y = 2;
  EXPECT_EQ(b.and2(x, cnf::kFalse), cnf::kFalse);
  EXPECT_EQ(b.and2(x, cnf::kTrue), x);
  EXPECT_EQ(b.and2(x, -x), cnf::kFalse);
  EXPECT_EQ(b.or2(x, -x), cnf::kTrue);
  EXPECT_EQ(b.xor2(x, x), cnf::kFalse);
  EXPECT_EQ(b.xor2(x, cnf::kTrue), -x);
  EXPECT_EQ(b.mux(cnf::kTrue, x, y), x);
  // Structural hashing returns the same gate for the same inputs.
  EXPECT_EQ(b.and2(x, y), b.and2(y, x));
  EXPECT_EQ(b.xor2(x, y), b.xor2(x, y));
}

TEST(Builder, GateTruthTables) {
  cnf::Builder b(4);
  const cnf::Lit x = 1, y = 2, z = 3;
  const cnf::Lit a = b.and2(x, y), o = b.or2(x, y), e = b.xor2(x, y), m = b.mux(z, x, y);
  sat::Solver s = load(b.clauses(), b.next_var());
  for (int bits = 0; bits < 8; ++bits) {
    const bool vx = bits & 1, vy = bits & 2, vz = bits & 4;
    std::vector<sat::Lit> as = {sat::from_dimacs(vx ? x : -x), sat::from_dimacs(vy ? y : -y),
                                sat::from_dimacs(vz ? z : -z)};
    ASSERT_EQ(s.solve(as), sat::Result::Sat);
    auto val = [&](cnf::Lit l) { return s.model_value(sat::from_dimacs(l)); };
    EXPECT_EQ(val(a), vx && vy);
    EXPECT_EQ(val(o), vx || vy);
    EXPECT_EQ(val(e), vx != vy);
    EXPECT_EQ(val(m), vz ? vx : vy);
  }
}

TEST(Blaster, BinaryOpsAndComparisonsExhaustive) {
  for (uint32_t w : {1u, 2u, 3u}) {
    const auto x = bv::var(0, "x", w), y = bv::var(1, "y", w);
    for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::UDiv, Op::URem, Op::SDiv, Op::SRem, Op::And, Op::Or, Op::Xor, Op::Shl,
                  Op::LShr, Op::AShr}) {
      CircuitEval c({w, w}, bv::binary(op, x, y));
      for (uint64_t a = 0; a < (uint64_t{1} << w); ++a) {
        for (uint64_t b = 0; b < (uint64_t{1} << w); ++b) {
          ASSERT_EQ(c.eval({a, b}), bv::eval_binary(op, a, b, w)) << bv::smt_name(op) << ' ' << a << ' ' << b;
        }
      }
    }
    for (Op op : {Op::Eq, Op::Ne, Op::Ugt, Op::Uge, Op::Ult, Op::Ule, Op::Sgt, Op::Sge, Op::Slt, Op::Sle}) {
      CircuitEval c({w, w}, bv::cmp(op, x, y));
      for (uint64_t a = 0; a < (uint64_t{1} << w); ++a) {
        for (uint64_t b = 0; b < (uint64_t{1} << w); ++b) {
          ASSERT_EQ(c.eval({a, b}), bv::eval_cmp(op, a, b, w) ? 1u : 0u) << bv::smt_name(op);
        }
      }
    }
  }
}

TEST(Blaster, ExtensionsAndIte) {
  const auto x = bv::var(0, "x", 3), y = bv::var(1, "y", 6);
  CircuitEval z({3, 6}, bv::extend(false, x, 6));
  CircuitEval s({3, 6}, bv::extend(true, x, 6));
  CircuitEval t({3, 6}, bv::ite(bv::bit(x, 0), bv::extend(true, x, 6), y));
  for (uint64_t a = 0; a < 8; ++a) {
    EXPECT_EQ(z.eval({a, 0}), a);
    EXPECT_EQ(s.eval({a, 0}), a >= 4 ? a | 0x38 : a);
    EXPECT_EQ(t.eval({a, 21}), (a & 1) ? (a >= 4 ? a | 0x38 : a) : 21);
  }
}

TEST(Blaster, WideArithmetic) {
  // 32-bit spot checks against the evaluator.
  const auto x = bv::var(0, "x", 32), y = bv::var(1, "y", 32);
  std::mt19937_64 rng(1);
  for (Op op : {Op::Add, Op::Mul, Op::UDiv, Op::SRem, Op::AShr}) {
    CircuitEval c({32, 32}, bv::binary(op, x, y));
    for (int i = 0; i < 5; ++i) {
      const uint64_t a = rng() & 0xFFFFFFFF, b = (rng() & 0xFFFF) | (i == 0 ? 0 : 1);
      EXPECT_EQ(c.eval({a, b}), bv::eval_binary(op, a, b, 32)) << bv::smt_name(op);
    }
  }
}

TEST(Blaster, RandomExpressionsMatchEvaluator) {
  for (uint32_t w : {2u, 3u, 4u}) {
    RandomExpr gen(w * 31, w);
    for (int i = 0; i < 40; ++i) {
      const auto e = gen.bv(3);
      const auto c = gen.cond(2);
      CircuitEval ce({w, w}, e);
      CircuitEval cc({w, w}, c);
      for (uint64_t a = 0; a < (uint64_t{1} << w); ++a) {
        for (uint64_t b = 0; b < (uint64_t{1} << w); ++b) {
          const std::vector<uint64_t> v = {a, b};
          ASSERT_EQ(ce.eval(v), bv::eval(e, {v, {}})) << bv::to_smt(e);
          ASSERT_EQ(cc.eval(v), bv::eval(c, {v, {}}) ? 1u : 0u) << bv::to_smt(c);
        }
      }
    }
  }
}

TEST(BlastSystem, LayoutBounds) {
  const auto p = mir::parse(cli::read_file(kFixtures + "/golden.ll"));
  const auto s = StateSpace::build(p);
  VarLayout L;
  const auto d = blast_system(encode_program(p, s), s, &L);
  EXPECT_EQ(d.state_bits, 40);
  EXPECT_EQ(d.n, L.n());
  auto within = [](const std::vector<Clause>& cs, int lo, int hi) {
    for (const auto& c : cs) {
      for (int l : c) {
        if (std::abs(l) < lo || std::abs(l) > hi) return false;
      }
    }
    return true;
  };
  EXPECT_TRUE(within(d.i, 1, d.n));
  EXPECT_TRUE(within(d.u, 1, d.n));
  EXPECT_TRUE(within(d.g, 1, d.n));
  EXPECT_TRUE(within(d.t, 1, 2 * d.n));
  // Next-step literals of T are state bits only.
  for (const auto& c : d.t) {
    for (int l : c) {
      if (std::abs(l) > d.n) {
        EXPECT_LE(std::abs(l), d.n + d.state_bits);
      }
    }
  }
  // I, U and G use their own auxiliary blocks.
  EXPECT_TRUE(within(d.g, 1, L.base_g() + L.aux_g));
}

TEST(BlastSystem, TransitionCnfMatchesInterpreter) {
  // For every valid state of the four-bit example, T has exactly one
  // successor on the next-state bits and it is the concrete successor.
  const auto p = mir::parse(cli::read_file(kFixtures + "/small4.ll"));
  const auto s = StateSpace::build(p);
  const auto d = blast_system(encode_program(p, s), s);
  sat::Solver solver = load(d.t, 2 * d.n);
  const int n = d.n;
  mir::ExecOptions exec;
  exec.zero_division = mir::ZeroDivision::Total;
  auto bits_of = [&](const mir::SymState& st) {
    std::vector<bool> bits;
    auto push = [&](uint64_t v, uint32_t w) {
      for (uint32_t i = 0; i < w; ++i) bits.push_back((v >> i) & 1);
    };
    push(st.curr, s.block_width());
    push(st.pred, s.block_width());
    for (size_t i = 0; i < st.vars.size(); ++i) push(st.vars[i], s.slot(i + 2).width);
    return bits;
  };
  for (uint64_t c = 1; c <= s.max_code(); ++c) {
    for (uint64_t pr = 1; pr <= s.max_code(); ++pr) {
      for (uint64_t y = 0; y < 16; ++y) {
        const mir::SymState st{c, pr, {y}};
        const auto want = mir::successor(p, s, st, exec);
        ASSERT_TRUE(want);
        const auto cur = bits_of(st), nxt = bits_of(*want);
        std::vector<sat::Lit> as;
        for (int i = 0; i < d.state_bits; ++i) as.push_back(sat::Lit::make(i, !cur[i]));
        ASSERT_EQ(solver.solve(as), sat::Result::Sat);
        for (int i = 0; i < d.state_bits; ++i) ASSERT_EQ(solver.model_value(sat::Lit::make(n + i)), nxt[i]);
        // No other successor: forcing any next bit to flip is unsatisfiable.
        for (int i = 0; i < d.state_bits; ++i) {
          auto flipped = as;
          flipped.push_back(sat::Lit::make(n + i, nxt[i]));
          ASSERT_EQ(solver.solve(flipped), sat::Result::Unsat);
        }
      }
    }
  }
}
