// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bvreach/bitblast.hpp"
#include "bvreach/cli.hpp"
#include "bvreach/dimspec.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/engines.hpp"
#include "bvreach/interpreter.hpp"
#include "bvreach/parser.hpp"
#include "bvreach/sat.hpp"
#include "bvreach/selftest.hpp"
#include "bvreach/statespace.hpp"
#include "support/cnf_oracle.hpp"
#include "support/random_program.hpp"

namespace fs = std::filesystem;
using namespace bvreach;

namespace {

const std::string kFixtures = BVREACH_FIXTURES;

struct Outcome {
  bool pass = false;
  std::string detail;
};

mir::Program load(const std::string& rel) { return mir::parse(cli::read_file(kFixtures + "/" + rel)); }

sat::Solver load_solver(const std::vector<Clause>& clauses, int num_vars) {
  sat::Solver s;
  s.ensure_vars(num_vars);
  for (const Clause& c : clauses) {
    std::vector<sat::Lit> ls;
    for (int d : c) ls.push_back(sat::from_dimacs(d));
    s.add_clause(ls);
  }
  return s;
}

// f and g are equivalent iff f xor g has no model.
bool equivalent(const StateSpace& space, const bv::BoolExpr& f, const bv::BoolExpr& g) {
  cnf::Blaster bl(space);
  const cnf::Lit a = bl.blast(f), b = bl.blast(g);
  const cnf::Lit x = bl.builder().xor2(a, b);
  if (x == cnf::kFalse) return true;
  if (x == cnf::kTrue) return false;
  sat::Solver s = load_solver(bl.builder().clauses(), bl.builder().next_var());
  return s.solve({sat::from_dimacs(x)}) == sat::Result::Unsat;
}

// 1. Each encoded transition of the seven-block program matches the
// hand-written formula for its edge.
Outcome golden_transitions() {
  const auto p = load("golden.ll");
  const auto s = StateSpace::build(p);
  const auto e = encode_program(p, s);

  auto cur = [&](int slot) { return bv::var(s, slot, false); };
  auto nxt = [&](int slot) { return bv::var(s, slot, true); };
  auto k = [&](uint64_t v) { return bv::constant(s.block_width(), v); };
  auto c32 = [](uint64_t v) { return bv::constant(32, v); };
  const auto curr = cur(0), pred = cur(1), tmp2 = cur(2);
  const auto curr1 = nxt(0), pred1 = nxt(1), tmp21 = nxt(2);
  auto step = [&](uint64_t from, uint64_t to, bv::BoolExpr extra = bv::truth(true), std::optional<bv::BvExpr> t = {}) {
    const auto premise = bv::and_({bv::eq(curr, k(from)), extra});
    const auto effect =
        bv::and_({bv::eq(curr1, k(to)), bv::eq(pred1, k(from)), bv::eq(tmp21, t ? *t : tmp2)});
    return bv::implies(premise, effect);
  };
  const auto inc = bv::add(c32(2), bv::ite(bv::eq(pred, k(2)), c32(10), tmp2));
  const auto rem = bv::binary(bv::Op::URem, bv::ite(bv::eq(pred, k(4)), tmp2, c32(10)), c32(2));

  struct Expected {
    uint64_t from, to;
    bv::BoolExpr f;
  };
  const std::vector<Expected> expected = {
      {1, 2, step(1, 2)},
      {2, 3, step(2, 3)},
      {3, 3, step(3, 3, bv::cmp(bv::Op::Ule, c32(10), inc), inc)},
      {3, 4, step(3, 4, bv::cmp(bv::Op::Ugt, c32(10), inc), inc)},
      {4, 5, step(4, 5)},
      {5, 7, step(5, 7, bv::ne(c32(0), rem))},
      {5, 6, step(5, 6, bv::eq(c32(0), rem))},
      {6, 9, step(6, 9)},
      {7, 8, step(7, 8)},
      {8, 8, step(8, 8)},
      {9, 9, step(9, 9)},
  };
  int matched = 0;
  std::string detail;
  for (const auto& x : expected) {
    bool ok = false;
    for (const auto& t : e.trans) {
      if (t.source == x.from && t.target == x.to && equivalent(s, transition_formula(s, t), x.f)) ok = true;
    }
    if (ok) {
      ++matched;
    } else {
      detail += " missing " + std::to_string(x.from) + "->" + std::to_string(x.to);
    }
  }
  const bool exact_count = e.trans.size() == expected.size();
  if (!exact_count) detail += " encoder produced " + std::to_string(e.trans.size()) + " transitions";
  return {matched == 11 && exact_count, std::to_string(matched) + "/11 equivalent" + detail};
}

// 2. State bit counts of the seven-block and five-block programs.
Outcome state_bits() {
  const auto g = StateSpace::build(load("golden.ll"));
  const auto f = StateSpace::build(load("example3.ll"));
  const bool ok = g.block_width() == 4 && g.num_bits() == 40 && g.num_vars() == 1 && g.slots().size() == 3 &&
                  f.num_bits() == 38 && f.block_width() == 3;
  return {ok, "seven-block: width " + std::to_string(g.block_width()) + ", n=" + std::to_string(g.num_bits()) +
                  "; five-block: n=" + std::to_string(f.num_bits())};
}

// 3. Verdicts of the full pipeline against explicit-state search.
Outcome oracle_equivalence() {
  testsupport::ProgramGenerator gen(20240607);
  const fs::path dir = fs::temp_directory_path() / "bvreach_acceptance";
  fs::create_directories(dir);
  int agree = 0, total = 0, reachable = 0, k_match = 0;
  std::string detail;
  for (int i = 0; i < 150; ++i) {
    const std::string text = gen.next();
    const auto p = mir::parse(text);
    const auto bfs = mir::bfs_reachable_error(p);
    if (bfs.kind == mir::BfsResult::Kind::Abort) continue;
    ++total;
    const fs::path file = dir / ("p" + std::to_string(i) + ".ll");
    std::ofstream(file) << text;
    cli::Options o;
    o.timeout_s = 60;
    std::ostringstream out, err;
    const int rc = cli::cmd_check(file.string(), o, out, err);
    const int want = bfs.kind == mir::BfsResult::Kind::Reachable ? cli::kExitSat : cli::kExitUnsat;
    if (rc == want) {
      ++agree;
    } else if (detail.size() < 200) {
      detail += " program " + std::to_string(i) + " rc " + std::to_string(rc);
    }
    if (bfs.kind == mir::BfsResult::Kind::Reachable) {
      ++reachable;
      const auto s = StateSpace::build(p);
      const auto v = engine::solve_incremental(blast_system(encode_program(p, s), s));
      if (v.answer == engine::Answer::Sat && static_cast<uint64_t>(v.k) == bfs.length) {
        ++k_match;
      } else if (detail.size() < 200) {
        detail += " program " + std::to_string(i) + " k " + std::to_string(v.k) + " vs " + std::to_string(bfs.length);
      }
    }
  }
  fs::remove_all(dir);
  const bool ok = total >= 100 && agree == total && k_match == reachable;
  return {ok, std::to_string(agree) + "/" + std::to_string(total) + " verdicts agree, " + std::to_string(k_match) +
                  "/" + std::to_string(reachable) + " shortest lengths" + detail};
}

// 4. Blasted overflow conditions against exact integer arithmetic.
Outcome overflow_table() {
  uint64_t cases = 0, bad = 0;
  for (uint32_t w : {4u, 5u}) {
    const int64_t lo = -(int64_t{1} << (w - 1)), hi = (int64_t{1} << (w - 1)) - 1;
    auto to_int = [&](uint64_t x) { return x > static_cast<uint64_t>(hi) ? static_cast<int64_t>(x) - (int64_t{1} << w) : static_cast<int64_t>(x); };
    for (auto op : {bv::OverflowOp::Add, bv::OverflowOp::Sub, bv::OverflowOp::Mul, bv::OverflowOp::SDiv}) {
      CircuitEval c({w, w}, bv::overflow_condition(op, bv::var(0, "a", w), bv::var(1, "b", w)));
      for (uint64_t x = 0; x < (uint64_t{1} << w); ++x) {
        for (uint64_t y = 0; y < (uint64_t{1} << w); ++y) {
          const int64_t a = to_int(x), b = to_int(y);
          bool expect = false;
          switch (op) {
            case bv::OverflowOp::Add: expect = a + b < lo || a + b > hi; break;
            case bv::OverflowOp::Sub: expect = a - b < lo || a - b > hi; break;
            case bv::OverflowOp::Mul: expect = a * b < lo || a * b > hi; break;
            // The quotient leaves the range only for lo / -1; division by
            // zero has no integer result and is not an overflow.
            case bv::OverflowOp::SDiv: expect = b != 0 && (a / b < lo || a / b > hi); break;
          }
          const auto got = c.eval({x, y});
          ++cases;
          if (!got || (*got != 0) != expect) ++bad;
        }
      }
    }
  }
  return {bad == 0, std::to_string(cases) + " cases, " + std::to_string(bad) + " mismatches"};
}

// 5. Incremental finds every error and runs out of steps on safe loops;
// IC3 decides most of them with checked invariants.
Outcome complementarity() {
  const std::vector<std::string> names = {"odd", "mask", "pair", "sum", "wrap", "shift"};
  int inc_ok = 0, ic3_ok = 0, certified = 0, unsat = 0;
  std::string detail;
  for (const auto& name : names) {
    for (bool safe : {false, true}) {
      const std::string file = "loops/" + name + (safe ? "_true.ll" : "_false.ll");
      const auto p = load(file);
      const auto s = StateSpace::build(p);
      const auto d = blast_system(encode_program(p, s), s);
      engine::Limits inc_lim;
      inc_lim.max_steps = 40;
      const auto inc = engine::solve_incremental(d, inc_lim);
      const bool inc_good = safe ? inc.answer == engine::Answer::Unknown && inc.reason == engine::UnknownReason::Bound
                                 : inc.answer == engine::Answer::Sat;
      if (inc_good) {
        ++inc_ok;
      } else {
        detail += " inc:" + file;
      }
      engine::Limits ic3_lim;
      ic3_lim.deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
      const auto ic3 = engine::solve_ic3(d, ic3_lim);
      if (ic3.answer == (safe ? engine::Answer::Unsat : engine::Answer::Sat)) ++ic3_ok;
      if (ic3.answer == engine::Answer::Unsat) {
        ++unsat;
        if (engine::check_invariant(d, ic3.invariant).empty()) {
          ++certified;
        } else {
          detail += " uncertified:" + file;
        }
      }
    }
  }
  const bool ok = inc_ok == 12 && ic3_ok >= 10 && certified == unsat;
  return {ok, "inc " + std::to_string(inc_ok) + "/12, ic3 " + std::to_string(ic3_ok) + "/12, invariants " +
                  std::to_string(certified) + "/" + std::to_string(unsat) + detail};
}

// 6. A shortest path of length 2 takes three solver calls.
Outcome solve_count() {
  const auto p = load("path2.ll");
  const auto bfs = mir::bfs_reachable_error(p);
  const auto s = StateSpace::build(p);
  const auto v = engine::solve_incremental(blast_system(encode_program(p, s), s));
  const bool ok = bfs.kind == mir::BfsResult::Kind::Reachable && bfs.length == 2 && v.answer == engine::Answer::Sat &&
                  v.stats.solves == 3;
  return {ok, "path length " + std::to_string(bfs.length) + ", " + std::to_string(v.stats.solves) + " solves"};
}

// 7. The SAT solver against enumeration on random 3-CNF.
Outcome sat_differential() {
  std::mt19937_64 rng(7);
  int bad = 0, sat_count = 0;
  for (int i = 0; i < 500; ++i) {
    const int n = std::uniform_int_distribution<int>(3, 20)(rng);
    const int m = static_cast<int>(n * std::uniform_real_distribution<double>(3.0, 5.5)(rng));
    const auto f = testsupport::random_3cnf(rng, n, m);
    sat::Solver s = load_solver(f, n);
    const auto r = s.solve({});
    const bool expect = testsupport::brute_force_sat(f, n);
    if ((r == sat::Result::Sat) != expect) {
      ++bad;
      continue;
    }
    if (r == sat::Result::Sat) {
      ++sat_count;
      uint64_t a = 0;
      for (int v = 1; v <= n; ++v) {
        if (s.model_value(sat::from_dimacs(v))) a |= uint64_t{1} << (v - 1);
      }
      if (!testsupport::holds(f, a)) ++bad;
    }
  }
  return {bad == 0, "500 instances, " + std::to_string(sat_count) + " sat, " + std::to_string(bad) + " mismatches"};
}

// 8. DimSpec text is stable under write/read/write, and the exported F_k of
// the four-bit running example is satisfiable exactly from the shortest
// path length on.
Outcome format_stability() {
  int stable = 0, files = 0;
  std::string detail;
  std::vector<std::string> inputs;
  for (const auto& entry : fs::recursive_directory_iterator(kFixtures)) {
    if (entry.path().extension() == ".ll" && entry.path().filename() != "trunc.ll") inputs.push_back(entry.path().string());
  }
  for (const auto& file : inputs) {
    ++files;
    const auto p = mir::parse(cli::read_file(file));
    const auto s = StateSpace::build(p);
    const std::string once = dimspec::to_string(blast_system(encode_program(p, s), s));
    if (dimspec::to_string(dimspec::read_string(once)) == once) {
      ++stable;
    } else {
      detail += " unstable:" + fs::path(file).filename().string();
    }
  }

  const std::string input = kFixtures + "/small4.ll";
  const auto bfs = mir::bfs_reachable_error(mir::parse(cli::read_file(input)));
  const fs::path out = fs::temp_directory_path() / "bvreach_fk.cnf";
  int agree = 0;
  const int last = static_cast<int>(bfs.length) + 3;
  for (int k = 0; k <= last; ++k) {
    cli::Options o;
    o.export_dimacs = k;
    std::ostringstream sink, err;
    if (cli::cmd_encode(input, out.string(), o, sink, err) != cli::kExitOk) break;
    std::ifstream in(out);
    int nv = 0;
    const auto clauses = dimspec::read_dimacs(in, &nv);
    sat::Solver s = load_solver(clauses, nv);
    const bool is_sat = s.solve({}) == sat::Result::Sat;
    if (is_sat == (static_cast<uint64_t>(k) >= bfs.length)) ++agree;
  }
  fs::remove(out);
  const bool ok = stable == files && files > 0 && bfs.kind == mir::BfsResult::Kind::Reachable && agree == last + 1;
  return {ok, std::to_string(stable) + "/" + std::to_string(files) + " files stable, F_k agrees for " +
                  std::to_string(agree) + "/" + std::to_string(last + 1) + " bounds (L=" + std::to_string(bfs.length) +
                  ")" + detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 golden transitions", golden_transitions}, {"2 state bits", state_bits},
      {"3 oracle equivalence", oracle_equivalence}, {"4 overflow table", overflow_table},
      {"5 engine complementarity", complementarity}, {"6 solve count", solve_count},
      {"7 sat differential", sat_differential},     {"8 format stability", format_stability},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << ms << " ms]" << std::endl;
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
