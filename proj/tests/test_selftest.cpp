#include <gtest/gtest.h>

#include <sstream>

#include "bvreach/cli.hpp"
#include "bvreach/selftest.hpp"

using namespace bvreach;

TEST(Selftest, AllChecksPass) {
  for (const auto& r : run_selftests()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Selftest, DetectsABrokenOverflowCondition) {
  SelftestHooks never;
  never.overflow = [](bv::OverflowOp, const bv::BvExpr&, const bv::BvExpr&) { return bv::truth(false); };
  std::ostringstream out;
  EXPECT_NE(cli::cmd_selftest(out, never), 0);
  EXPECT_NE(out.str().find("FAIL overflow-table"), std::string::npos) << out.str();

  // Dropping the division case alone is also caught.
  SelftestHooks no_div;
  no_div.overflow = [](bv::OverflowOp op, const bv::BvExpr& a, const bv::BvExpr& b) {
    return op == bv::OverflowOp::SDiv ? bv::truth(false) : bv::overflow_condition(op, a, b);
  };
  const auto results = run_selftests(no_div);
  EXPECT_FALSE(results.front().passed);
}

TEST(Selftest, CommandSummary) {
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_selftest(out), 0);
  EXPECT_NE(out.str().find("selftest passed"), std::string::npos);
}

TEST(Selftest, SignedRangeOverflowOracle) {
  EXPECT_TRUE(signed_range_overflow(bv::OverflowOp::Add, 7, 1, 4));
  EXPECT_FALSE(signed_range_overflow(bv::OverflowOp::SDiv, 8, 0, 4));
  EXPECT_TRUE(signed_range_overflow(bv::OverflowOp::SDiv, 8, 15, 4));
}
