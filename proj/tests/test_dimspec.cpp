#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "bvreach/dimspec.hpp"
#include "support/cnf_oracle.hpp"
#include "support/explicit_system.hpp"

using namespace bvreach;

namespace {

// Two bits counting 0, 1, 2, 3 from zero; goal is the value 3.
DimSpecProblem counter() {
  DimSpecProblem p;
  p.n = 2;
  p.i = {{-1}, {-2}};
  p.g = {{1}, {2}};
  // x1' = !x1, x2' = x2 xor x1
  p.t = {{1, 3}, {-1, -3}, {-1, -2, -4}, {1, 2, -4}, {1, -2, 4}, {-1, 2, 4}};
  return p;
}

int error_line(const std::string& text) {
  try {
    dimspec::read_string(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Format);
    return e.line();
  }
  ADD_FAILURE() << "accepted: " << text;
  return -1;
}

}  // namespace

TEST(DimSpec, WriteFormat) {
  DimSpecProblem p = counter();
  p.state_bits = 2;
  const std::string text = dimspec::to_string(p);
  EXPECT_EQ(text.substr(0, 32), "c state_bits 2\ni cnf 2 2\n-1 0\n-2");
  EXPECT_NE(text.find("u cnf 2 0\n"), std::string::npos);
  EXPECT_NE(text.find("t cnf 4 6\n"), std::string::npos);
}

TEST(DimSpec, RoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    DimSpecProblem p = testsupport::random_problem(rng, 2 + i % 4);
    if (i % 2) p.state_bits = 1;
    EXPECT_EQ(dimspec::read_string(dimspec::to_string(p)), p);
  }
}

TEST(DimSpec, ReaderAcceptsCommentsAndSplitClauses) {
  const auto p = dimspec::read_string("c hello\ni cnf 2 1\n1\n -2 0\nu cnf 2 0\ng cnf 2 1\n2 0\nt cnf 4 1\n3 -4 0\n");
  EXPECT_EQ(p.n, 2);
  EXPECT_EQ(p.i, (std::vector<Clause>{{1, -2}}));
  EXPECT_EQ(p.num_state_bits(), 2);
}

TEST(DimSpec, ReaderErrorsCarryLineNumbers) {
  const std::string ok_tail = "u cnf 2 0\ng cnf 2 0\nt cnf 4 0\n";
  EXPECT_EQ(error_line("u cnf 2 0\n"), 1);                                   // wrong order
  EXPECT_EQ(error_line("i cnf 2 1\n3 0\n" + ok_tail), 2);                    // out of range
  EXPECT_EQ(error_line("i cnf 2 1\n0\n" + ok_tail), 2);                      // empty clause
  EXPECT_EQ(error_line("i cnf 2 0\n1 0\n" + ok_tail), 2);                    // too many clauses
  EXPECT_EQ(error_line("i cnf 2 0\nu cnf 3 0\ng cnf 2 0\nt cnf 4 0\n"), 2);  // inconsistent n
  EXPECT_EQ(error_line("i cnf 2 0\nu cnf 2 0\ng cnf 2 0\nt cnf 4 1\n5 0\n"), 5);
  EXPECT_EQ(error_line("i cnf 2 0\nu cnf 2 0\ng cnf 2 0\nt cnf 4 0\nx 0\n"), 5);
  EXPECT_EQ(error_line("1 0\n"), 1);
  EXPECT_EQ(error_line("i cnf x 0\n"), 1);
  EXPECT_THROW(dimspec::read_string("i cnf 2 0\nu cnf 2 0\n"), Error);
  EXPECT_THROW(dimspec::read_string("i cnf 2 1\n1\n" + ok_tail), Error);
}

TEST(DimSpec, Shift) {
  EXPECT_EQ(dimspec::shift(3, 0, 5), 3);
  EXPECT_EQ(dimspec::shift(3, 2, 5), 13);
  EXPECT_EQ(dimspec::shift(-3, 2, 5), -13);
}

TEST(DimSpec, UnrollMatchesExplicitLayers) {
  const auto p = counter();
  const auto L = testsupport::layers(p, 5);
  for (int k = 0; k <= 5; ++k) {
    const auto f = dimspec::unroll(p, k);
    EXPECT_EQ(testsupport::brute_force_sat(f, (k + 1) * p.n), k == 3) << k;
    EXPECT_EQ(testsupport::goal_at(p, L[k]), k == 3);
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 80; ++i) {
    const auto q = testsupport::random_problem(rng, 3);
    const auto layers = testsupport::layers(q, 3);
    for (int k = 0; k <= 3; ++k) {
      ASSERT_EQ(testsupport::brute_force_sat(dimspec::unroll(q, k), (k + 1) * q.n), testsupport::goal_at(q, layers[k]))
          << dimspec::to_string(q) << "k=" << k;
    }
  }
}

TEST(DimSpec, ExportAndReadDimacs) {
  const auto p = counter();
  std::ostringstream os;
  dimspec::export_unrolled_dimacs(os, p, 3);
  const auto f = dimspec::unroll(p, 3);
  EXPECT_NE(os.str().find("p cnf 8 " + std::to_string(f.size()) + "\n"), std::string::npos);
  std::istringstream is(os.str());
  int vars = 0;
  EXPECT_EQ(dimspec::read_dimacs(is, &vars), f);
  EXPECT_EQ(vars, 8);
  std::istringstream bad("p cnf 2 1\n3 0\n");
  EXPECT_THROW(dimspec::read_dimacs(bad), Error);
  std::istringstream count("p cnf 2 2\n1 0\n");
  EXPECT_THROW(dimspec::read_dimacs(count), Error);
}
