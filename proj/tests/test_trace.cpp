#include <gtest/gtest.h>

#include <sstream>

#include "bvreach/bitblast.hpp"
#include "bvreach/cli.hpp"
#include "bvreach/trace.hpp"

using namespace bvreach;

namespace {

const std::string kFixtures = BVREACH_FIXTURES;

struct Loaded {
  mir::Program program;
  StateSpace space;
  DimSpecProblem problem;
};

Loaded load(const std::string& name) {
  Loaded l;
  l.program = mir::parse(cli::read_file(kFixtures + "/" + name));
  l.space = StateSpace::build(l.program);
  l.problem = blast_system(encode_program(l.program, l.space), l.space);
  return l;
}

std::vector<bool> bits_of(const StateSpace& s, const mir::SymState& st) {
  std::vector<bool> bits(s.num_bits());
  auto put = [&](size_t slot, uint64_t v) {
    const auto& sl = s.slot(slot);
    for (uint32_t i = 0; i < sl.width; ++i) bits[sl.first_bit - 1 + i] = (v >> i) & 1;
  };
  put(StateSpace::kCurr, st.curr);
  put(StateSpace::kPred, st.pred);
  for (size_t i = 0; i < st.vars.size(); ++i) put(i + 2, st.vars[i]);
  return bits;
}

}  // namespace

TEST(Trace, DecodeState) {
  const auto l = load("small4.ll");
  const mir::SymState st{2, 1, {11}};
  EXPECT_EQ(decode_state(l.space, bits_of(l.space, st)), st);
  EXPECT_THROW(decode_state(l.space, std::vector<bool>(3)), Error);
}

TEST(Trace, SmallExample) {
  const auto l = load("small4.ll");
  const auto v = engine::solve_incremental(l.problem);
  const auto trace = extract_trace(v, l.program, l.space);
  ASSERT_EQ(trace.size(), 6u);
  EXPECT_EQ(trace[0].block, "entry");
  EXPECT_EQ(trace[4].block, "done");
  EXPECT_EQ(trace[5].block, "error");
  EXPECT_EQ(trace[5].pred, "done");
  std::ostringstream os;
  print_trace(os, trace);
  EXPECT_NE(os.str().find("step 2: bb1 (from bb1) y=12\nstep 3: bb1 (from bb1) y=14\nstep 4: done (from bb1) y=0\n"
                          "step 5: error (from done) y=0\n"),
            std::string::npos)
      << os.str();
}

TEST(Trace, WrappingExample) {
  const auto l = load("example3.ll");
  engine::Limits lim;
  lim.deadline = std::chrono::steady_clock::now() + std::chrono::seconds(120);
  const auto v = engine::solve_ic3(l.problem, lim);
  ASSERT_EQ(v.answer, engine::Answer::Sat);
  const auto trace = extract_trace(v, l.program, l.space);
  EXPECT_EQ(trace.size(), 55u);
  EXPECT_EQ(trace.back().pred, "bb1.i");
  EXPECT_EQ(trace[trace.size() - 2].block, "bb1.i");
}

TEST(Trace, TamperedPathsAreRejected) {
  const auto l = load("small4.ll");
  const auto good = engine::solve_incremental(l.problem);
  auto v = good;
  v.states[3] = bits_of(l.space, mir::SymState{2, 2, {13}});
  EXPECT_THROW(extract_trace(v, l.program, l.space), Error);
  v = good;
  v.states.pop_back();
  EXPECT_THROW(extract_trace(v, l.program, l.space), Error);  // no longer ends in error
  v = good;
  v.states[0] = bits_of(l.space, mir::SymState{2, 1, {0}});
  EXPECT_THROW(extract_trace(v, l.program, l.space), Error);
  v = good;
  v.states[1] = bits_of(l.space, mir::SymState{7, 1, {0}});
  EXPECT_THROW(extract_trace(v, l.program, l.space), Error);
  v.answer = engine::Answer::Unsat;
  try {
    extract_trace(v, l.program, l.space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Internal);
  }
}
