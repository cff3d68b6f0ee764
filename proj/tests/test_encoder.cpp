#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "bvreach/cli.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/interpreter.hpp"
#include "bvreach/parser.hpp"
#include "support/random_program.hpp"

using namespace bvreach;

namespace {

const std::string kFixtures = BVREACH_FIXTURES;

mir::Program fixture(const std::string& name) { return mir::parse(cli::read_file(kFixtures + "/" + name)); }

std::vector<uint64_t> state_values(const mir::SymState& s) {
  std::vector<uint64_t> v{s.curr, s.pred};
  v.insert(v.end(), s.vars.begin(), s.vars.end());
  return v;
}

// Applies a transition's effect to a concrete state.
mir::SymState apply(const StateSpace& s, const SymbolicTransition& t, const std::vector<uint64_t>& cur) {
  mir::SymState n;
  n.curr = t.target;
  n.pred = t.source;
  n.vars.assign(cur.begin() + 2, cur.end());
  for (const auto& [slot, e] : t.updates) n.vars[slot - 2] = bv::eval(e, {cur, {}});
  (void)s;
  return n;
}

// Enumerates every state whose curr and pred are valid codes and checks
// that exactly one transition is enabled and that it agrees with the
// concrete successor.
void sweep(const mir::Program& p, const EncodeOptions& opts = {}) {
  const auto s = StateSpace::build(p);
  const auto e = encode_program(p, s, opts);
  mir::ExecOptions exec;
  exec.return_check = opts.return_check;
  exec.zero_division = mir::ZeroDivision::Total;
  uint32_t var_bits = 0;
  for (size_t i = 2; i < s.slots().size(); ++i) var_bits += s.slot(i).width;
  ASSERT_LE(var_bits, 14u);
  for (uint64_t curr = 1; curr <= s.max_code(); ++curr) {
    for (uint64_t pred = 1; pred <= s.max_code(); ++pred) {
      for (uint64_t packed = 0; packed < (uint64_t{1} << var_bits); ++packed) {
        mir::SymState st{curr, pred, {}};
        uint64_t rest = packed;
        for (size_t i = 2; i < s.slots().size(); ++i) {
          st.vars.push_back(rest & ((uint64_t{1} << s.slot(i).width) - 1));
          rest >>= s.slot(i).width;
        }
        const auto cur = state_values(st);
        int enabled = 0;
        mir::SymState next;
        for (const auto& t : e.trans) {
          if (bv::eval(transition_premise(s, t), {cur, {}})) {
            ++enabled;
            next = apply(s, t, cur);
            EXPECT_TRUE(bv::eval(transition_effect(s, t), {cur, state_values(next)}));
          }
        }
        ASSERT_EQ(enabled, 1) << "curr " << curr << " pred " << pred << '\n' << mir::to_text(p);
        const auto expect = mir::successor(p, s, st, exec);
        ASSERT_TRUE(expect);
        ASSERT_EQ(next, *expect) << "curr " << curr << " pred " << pred << '\n' << mir::to_text(p);
      }
    }
  }
}

}  // namespace

TEST(Encoder, SevenBlockTransitions) {
  const auto p = fixture("golden.ll");
  const auto s = StateSpace::build(p);
  const auto e = encode_program(p, s);
  std::multiset<std::pair<uint32_t, uint32_t>> edges;
  for (const auto& t : e.trans) edges.insert({t.source, t.target});
  const std::multiset<std::pair<uint32_t, uint32_t>> expected = {{1, 2}, {2, 3}, {3, 3}, {3, 4}, {4, 5}, {5, 7},
                                                                 {5, 6}, {6, 9}, {7, 8}, {8, 8}, {9, 9}};
  EXPECT_EQ(edges, expected);
}

TEST(Encoder, InitGoalUniversal) {
  const auto s = StateSpace::build(fixture("small4.ll"));
  const auto init = encode_initial(s), goal = encode_goal(s), univ = encode_universal(s);
  auto at = [](uint64_t c, uint64_t p) { return std::vector<uint64_t>{c, p, 0}; };
  EXPECT_TRUE(bv::eval(init, {at(1, 1), {}}));
  EXPECT_FALSE(bv::eval(init, {at(1, 2), {}}));
  EXPECT_TRUE(bv::eval(goal, {at(s.error_code(), 3), {}}));
  EXPECT_FALSE(bv::eval(goal, {at(s.ok_code(), 3), {}}));
  EXPECT_TRUE(bv::eval(univ, {at(s.max_code(), 1), {}}));
  EXPECT_FALSE(bv::eval(univ, {at(0, 1), {}}));
  EXPECT_FALSE(bv::eval(univ, {at(s.max_code() + 1, 1), {}}));
}

TEST(Encoder, CallsSplitTransitions) {
  const auto p = mir::parse(std::string_view(R"(define i32 @main() {
entry:
  %a = add i4 3, 0
  br label %b
b:
  %c = icmp ult i4 %a, 5
  call void @__VERIFIER_assume(i1 %c)
  %d = icmp ne i4 %a, 2
  call void @__VERIFIER_assert(i1 %d)
  %e = add nsw i4 %a, 7
  ret i32 0
})"));
  const auto s = StateSpace::build(p);
  const auto ts = encode_block(p, s, 1);
  ASSERT_EQ(ts.size(), 4u);
  EXPECT_EQ(ts[0].target, s.ok_code());     // assumption violated
  EXPECT_EQ(ts[1].target, s.error_code());  // assertion violated
  EXPECT_EQ(ts[2].target, s.error_code());  // signed overflow
  EXPECT_EQ(ts[3].target, s.ok_code());     // return
}

TEST(Encoder, ErrorCallStopsTheBlock) {
  const auto p = mir::parse(std::string_view(R"(define i32 @main() {
entry:
  call void @__VERIFIER_error()
  %x = sdiv i8 1, 0
  unreachable
})"));
  const auto s = StateSpace::build(p);
  const auto ts = encode_block(p, s, 0);
  ASSERT_EQ(ts.size(), 1u);
  EXPECT_EQ(ts[0].target, s.error_code());
  EXPECT_TRUE(ts[0].guard.is_true());
}

TEST(Encoder, ReturnCheck) {
  const auto p = mir::parse(std::string_view("define i32 @main() { entry: ret i32 3 }"));
  const auto s = StateSpace::build(p);
  const auto plain = encode_block(p, s, 0);
  ASSERT_EQ(plain.size(), 1u);
  EXPECT_EQ(plain[0].target, s.ok_code());
  const auto checked = encode_block(p, s, 0, EncodeOptions{true});
  ASSERT_EQ(checked.size(), 1u);  // the value is the constant 3
  EXPECT_EQ(checked[0].target, s.error_code());
}

TEST(Encoder, SweepFixtures) {
  sweep(fixture("small4.ll"));
  sweep(fixture("path2.ll"));
  sweep(fixture("ret0.ll"));
  sweep(fixture("nsw4.ll"));
  sweep(mir::parse(std::string_view("define i32 @main() { entry: ret i32 3 }")), EncodeOptions{true});
}

TEST(Encoder, SweepRandomPrograms) {
  testsupport::RandomProgramOptions o;
  o.max_blocks = 3;
  o.max_width = 3;
  testsupport::ProgramGenerator gen(4242, o);
  int done = 0;
  while (done < 40) {
    const auto p = mir::parse(gen.next());
    const auto s = StateSpace::build(p);
    if (s.num_bits() - 2 * s.block_width() > 10) continue;
    sweep(p);
    if (HasFatalFailure()) return;
    ++done;
  }
}

TEST(Encoder, DumpsAreDeterministic) {
  const auto p = fixture("golden.ll");
  const auto s = StateSpace::build(p);
  std::ostringstream a, b;
  dump_transitions(a, s, encode_program(p, s));
  dump_transitions(b, s, encode_program(p, s));
  const std::string text = a.str();
  EXPECT_EQ(text, b.str());
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 11);
  EXPECT_NE(text.find("[bb1 -> bb1]"), std::string::npos);

  std::ostringstream smt;
  dump_smt(smt, s, encode_program(p, s));
  EXPECT_NE(smt.str().find("(declare-fun |tmp2'| () (_ BitVec 32))"), std::string::npos);
  EXPECT_NE(smt.str().find("(define-fun goal () Bool (= curr (_ bv9 4)))"), std::string::npos);
}
