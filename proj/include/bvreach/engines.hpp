#pragma once

// Decision procedures for DimSpec problems.
//
// solve_incremental unrolls F_k one step at a time on a single incremental
// solver, guarding each goal copy with an activation literal. It finds the
// shortest counterexample but cannot prove safety.
//
// solve_ic3 maintains frames F_0 = I, F_1, ..., F_k of clauses over one step
// block and refines them until a counterexample is built from proof
// obligations or two adjacent frames coincide. Every invariant it returns is
// re-checked with fresh solvers.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bvreach/dimspec.hpp"
#include "bvreach/error.hpp"
#include "bvreach/sat.hpp"

namespace bvreach::engine {

enum class Answer { Sat, Unsat, Unknown };
enum class UnknownReason { None, Bound, Timeout };

inline std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::Sat: return "sat";
    case Answer::Unsat: return "unsat";
    case Answer::Unknown: return "unknown";
  }
  return "unknown";
}

inline std::string_view to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::None: return "none";
    case UnknownReason::Bound: return "bound";
    case UnknownReason::Timeout: return "timeout";
  }
  return "none";
}

struct Stats {
  uint64_t solves = 0;
  uint64_t conflicts = 0;
  uint64_t phases = 0;  // unrolling steps or IC3 major steps
  uint64_t peak_clauses = 0;
  double time_ms = 0;
};

struct Verdict {
  Answer answer = Answer::Unknown;
  UnknownReason reason = UnknownReason::None;
  int k = 0;  // path length on SAT, frame count for IC3, last bound otherwise
  std::vector<std::vector<bool>> states;  // SAT: state bits 1..s of each step
  std::vector<Clause> invariant;          // UNSAT from IC3: clauses over one step block
  Stats stats;
};

struct Limits {
  int max_steps = 4096;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  const std::atomic<bool>* stop = nullptr;
  uint64_t seed = 0;
};

namespace detail {

struct OutOfBudget {};

inline bool expired(const Limits& lim) {
  if (lim.stop && lim.stop->load(std::memory_order_relaxed)) return true;
  return lim.deadline && std::chrono::steady_clock::now() >= *lim.deadline;
}

inline sat::Budget budget_of(const Limits& lim) { return sat::Budget{lim.deadline, -1, lim.stop}; }

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---- incremental unrolling ------------------------------------------------

inline Verdict solve_incremental(const DimSpecProblem& p, const Limits& lim = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = p.n;
  const int stride = n + 1;  // n step variables plus the step's activation literal
  sat::Solver solver(lim.seed);
  solver.set_budget(detail::budget_of(lim));

  // DIMACS literal d of a formula placed at `step` (T spans step and step+1).
  auto lit = [&](int d, int step) {
    const int v = std::abs(d) - 1;
    return sat::Lit::make((step + v / n) * stride + v % n, d < 0);
  };
  auto act = [&](int step) { return sat::Lit::make(step * stride + n); };
  std::vector<sat::Lit> buf;
  auto add = [&](const std::vector<Clause>& cs, int step, std::optional<sat::Lit> guard) {
    for (const Clause& c : cs) {
      buf.clear();
      for (int d : c) buf.push_back(lit(d, step));
      if (guard) buf.push_back(*guard);
      solver.add_clause(buf);
    }
  };

  Verdict v;
  auto finish = [&](Answer a, UnknownReason r, int k) {
    v.answer = a;
    v.reason = r;
    v.k = k;
    v.stats.solves = solver.stats().solves;
    v.stats.conflicts = solver.stats().conflicts;
    v.stats.time_ms = detail::elapsed_ms(t0);
    return v;
  };
  auto note_size = [&] {
    v.stats.peak_clauses = std::max<uint64_t>(v.stats.peak_clauses, solver.num_clauses() + solver.num_learnts());
  };

  add(p.i, 0, std::nullopt);
  for (int k = 0; k <= lim.max_steps; ++k) {
    if (k > 0) add(p.t, k - 1, std::nullopt);
    add(p.u, k, std::nullopt);
    add(p.g, k, act(k));
    note_size();
    ++v.stats.phases;
    if (!solver.okay()) return finish(Answer::Unknown, UnknownReason::Bound, lim.max_steps);
    const sat::Lit a = ~act(k);
    switch (solver.solve(std::span<const sat::Lit>(&a, 1))) {
      case sat::Result::Sat: {
        const int s = p.num_state_bits();
        v.states.assign(k + 1, std::vector<bool>(s));
        for (int i = 0; i <= k; ++i) {
          for (int x = 1; x <= s; ++x) v.states[i][x - 1] = solver.model_value(lit(x, i));
        }
        return finish(Answer::Sat, UnknownReason::None, k);
      }
      case sat::Result::Unsat:
        solver.add_clause({act(k)});
        solver.simplify();
        break;
      case sat::Result::Unknown: return finish(Answer::Unknown, UnknownReason::Timeout, k);
    }
  }
  return finish(Answer::Unknown, UnknownReason::Bound, lim.max_steps);
}

// ---- IC3 --------------------------------------------------------------------

struct Ic3Options {
  // Re-verifies frame monotonicity and relative inductiveness with fresh
  // solvers after every major step. Slow; meant for tests.
  bool check_frames = false;
};

// Checks that `inv` is an inductive invariant of `p`:
//   I ∧ U ⇒ Inv,  Inv ∧ U ∧ T ∧ U' ⇒ Inv',  Inv ∧ U ∧ G unsatisfiable.
// Returns an empty string on success, otherwise which check failed.
inline std::string check_invariant(const DimSpecProblem& p, const std::vector<Clause>& inv, uint64_t seed = 0) {
  auto to_lits = [](const Clause& c, int offset) {
    std::vector<sat::Lit> out;
    for (int d : c) out.push_back(sat::from_dimacs(d > 0 ? d + offset : d - offset));
    return out;
  };
  auto add_all = [&](sat::Solver& s, const std::vector<Clause>& cs, int offset) {
    for (const Clause& c : cs) s.add_clause(to_lits(c, offset));
  };
  {
    sat::Solver s(seed);
    add_all(s, p.i, 0);
    add_all(s, p.u, 0);
    for (const Clause& c : inv) {
      std::vector<sat::Lit> neg;
      for (sat::Lit l : to_lits(c, 0)) neg.push_back(~l);
      if (s.solve(neg) != sat::Result::Unsat) return "initiation";
    }
  }
  {
    sat::Solver s(seed);
    add_all(s, inv, 0);
    add_all(s, p.u, 0);
    add_all(s, p.t, 0);
    add_all(s, p.u, p.n);
    for (const Clause& c : inv) {
      std::vector<sat::Lit> neg;
      for (sat::Lit l : to_lits(c, p.n)) neg.push_back(~l);
      if (s.solve(neg) != sat::Result::Unsat) return "consecution";
    }
  }
  {
    sat::Solver s(seed);
    add_all(s, inv, 0);
    add_all(s, p.u, 0);
    add_all(s, p.g, 0);
    if (s.solve() != sat::Result::Unsat) return "safety";
  }
  return {};
}

class Ic3 {
 public:
  using Cube = std::vector<int>;  // DIMACS literals over state bits, sorted by variable

  Ic3(const DimSpecProblem& p, const Limits& lim, const Ic3Options& opts)
      : p_(p), lim_(lim), opts_(opts), n_(p.n), s_(p.num_state_bits()) {}

  Verdict run() {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = search();
    } catch (const detail::OutOfBudget&) {
      v = Verdict{};
      v.answer = Answer::Unknown;
      v.reason = UnknownReason::Timeout;
      v.k = static_cast<int>(frames_.size()) - 1;
    }
    v.stats.solves = solves_;
    v.stats.conflicts = conflicts_;
    v.stats.phases = phases_;
    v.stats.peak_clauses = peak_clauses_;
    v.stats.time_ms = detail::elapsed_ms(t0);
    return v;
  }

  // Frame contents F_1..F_k as cubes (for inspection in tests).
  std::vector<std::vector<Cube>> frame_cubes() const {
    std::vector<std::vector<Cube>> out(frames_.size());
    for (size_t i = 1; i < frames_.size(); ++i) {
      for (size_t j = i; j < frames_.size(); ++j) out[i].insert(out[i].end(), frames_[j].delta.begin(), frames_[j].delta.end());
    }
    return out;
  }

 private:
  struct Frame {
    std::unique_ptr<sat::Solver> solver;
    std::vector<Cube> delta;  // lemmas whose highest frame is this one
  };

  struct Obligation {
    Cube cube;
    int frame;
    int parent;  // index into obligations_, -1 for the bad state
  };

  // ---- solver plumbing ----

  sat::Lit lit(int d) const { return sat::from_dimacs(d); }
  sat::Lit primed(int d) const { return sat::from_dimacs(d > 0 ? d + n_ : d - n_); }

  void add(sat::Solver& s, const std::vector<Clause>& cs, int offset, std::optional<sat::Lit> guard) {
    std::vector<sat::Lit> buf;
    for (const Clause& c : cs) {
      buf.clear();
      for (int d : c) buf.push_back(sat::from_dimacs(d > 0 ? d + offset : d - offset));
      if (guard) buf.push_back(*guard);
      s.add_clause(buf);
    }
  }

  std::unique_ptr<sat::Solver> make_solver(bool with_transition) {
    auto s = std::make_unique<sat::Solver>(lim_.seed);
    s->set_budget(detail::budget_of(lim_));
    s->ensure_vars(2 * n_ + 2);
    add(*s, p_.u, 0, std::nullopt);
    if (with_transition) {
      add(*s, p_.t, 0, t_act());
      add(*s, p_.u, n_, t_act());
      add(*s, p_.g, 0, g_act());
    }
    return s;
  }

  // Activation literals: positive in the guarded clauses, assumed negative.
  sat::Lit t_act() const { return sat::Lit::make(2 * n_); }
  sat::Lit g_act() const { return sat::Lit::make(2 * n_ + 1); }

  sat::Result solve(sat::Solver& s, std::span<const sat::Lit> assumptions) {
    if (detail::expired(lim_)) throw detail::OutOfBudget{};
    const uint64_t before = s.stats().conflicts;
    const sat::Result r = s.solve(assumptions);
    ++solves_;
    conflicts_ += s.stats().conflicts - before;
    peak_clauses_ = std::max<uint64_t>(peak_clauses_, s.num_clauses() + s.num_learnts());
    if (r == sat::Result::Unknown) throw detail::OutOfBudget{};
    return r;
  }

  Cube state_cube(const sat::Solver& s) const {
    Cube c(s_);
    for (int x = 1; x <= s_; ++x) c[x - 1] = s.model_value(lit(x)) ? x : -x;
    return c;
  }

  void add_frame() {
    Frame f;
    f.solver = make_solver(true);
    if (frames_.empty()) add(*f.solver, p_.i, 0, std::nullopt);
    frames_.push_back(std::move(f));
  }

  int top() const { return static_cast<int>(frames_.size()) - 1; }

  // ---- queries ----

  bool intersects_init(const Cube& c) {
    std::vector<sat::Lit> as;
    for (int d : c) as.push_back(lit(d));
    return solve(*init_, as) == sat::Result::Sat;
  }

  // Is F_{i-1} ∧ ¬c ∧ U ∧ T ∧ U' ∧ c' unsatisfiable? On success `core`
  // receives the cube literals whose primed copies appear in the final
  // conflict; otherwise `pred` receives the full predecessor state.
  bool relatively_inductive(const Cube& c, int i, Cube* core, Cube* pred) {
    sat::Solver& s = *frames_[i - 1].solver;
    const sat::Var tmp = s.new_var();
    std::vector<sat::Lit> clause;
    for (int d : c) clause.push_back(~lit(d));
    clause.push_back(sat::Lit::make(tmp));
    s.add_clause(clause);

    std::vector<sat::Lit> as{~t_act(), sat::Lit::make(tmp, true)};
    for (int d : c) as.push_back(primed(d));
    const sat::Result r = solve(s, as);
    bool ok = r == sat::Result::Unsat;
    if (ok && core) {
      core->clear();
      std::set<int> in_core;
      for (sat::Lit l : s.core()) in_core.insert(sat::to_dimacs(l));
      for (int d : c) {
        if (in_core.count(d > 0 ? d + n_ : d - n_)) core->push_back(d);
      }
    }
    if (!ok && pred) *pred = state_cube(s);
    s.add_clause({sat::Lit::make(tmp)});
    if (++retired_ % 256 == 0) s.simplify();
    return ok;
  }

  // Cube shrinking: core first, then drop literals one at a time while the
  // cube stays relatively inductive and disjoint from I ∧ U.
  Cube generalize(Cube c, int i, const Cube& core) {
    if (!core.empty() && core.size() < c.size() && !intersects_init(core)) c = core;
    for (size_t j = 0; j < c.size() && c.size() > 1;) {
      Cube cand = c;
      cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(j));
      Cube cand_core;
      if (!intersects_init(cand) && relatively_inductive(cand, i, &cand_core, nullptr)) {
        if (!cand_core.empty() && cand_core.size() < cand.size() && !intersects_init(cand_core)) cand = cand_core;
        c = std::move(cand);
        j = 0;
        continue;
      }
      ++j;
    }
    return c;
  }

  void add_lemma(const Cube& c, int level) {
    frames_[level].delta.push_back(c);
    std::vector<sat::Lit> clause;
    for (int d : c) clause.push_back(~lit(d));
    for (int j = 1; j <= level; ++j) frames_[j].solver->add_clause(clause);
  }

  static bool by_var(int a, int b) { return std::abs(a) < std::abs(b) || (std::abs(a) == std::abs(b) && a < b); }

  // Whether some lemma of F_i subsumes (blocks) the cube.
  bool blocked(const Cube& c, int i) const {
    for (int j = i; j <= top(); ++j) {
      for (const Cube& l : frames_[j].delta) {
        if (std::includes(c.begin(), c.end(), l.begin(), l.end(), by_var)) return true;
      }
    }
    return false;
  }

  // Blocks a bad cube at the top frame. Returns the index of the initial
  // obligation of a counterexample chain, or -1 when the cube was blocked.
  int block(const Cube& bad) {
    obligations_.clear();
    auto cmp = [&](int a, int b) {
      const auto& x = obligations_[a];
      const auto& y = obligations_[b];
      return x.frame != y.frame ? x.frame > y.frame : a < b;
    };
    std::priority_queue<int, std::vector<int>, decltype(cmp)> queue(cmp);
    obligations_.push_back({bad, top(), -1});
    queue.push(0);
    while (!queue.empty()) {
      const int id = queue.top();
      const Obligation ob = obligations_[id];
      if (blocked(ob.cube, ob.frame)) {
        queue.pop();
        continue;
      }
      Cube core, pred;
      if (!relatively_inductive(ob.cube, ob.frame, &core, &pred)) {
        obligations_.push_back({pred, ob.frame - 1, id});
        const int pid = static_cast<int>(obligations_.size()) - 1;
        if (ob.frame - 1 == 0 || intersects_init(pred)) return pid;
        queue.push(pid);
        continue;
      }
      queue.pop();
      const Cube g = generalize(ob.cube, ob.frame, core);
      int level = ob.frame;
      while (level < top() && relatively_inductive(g, level + 1, nullptr, nullptr)) ++level;
      add_lemma(g, level);
      if (level < top()) {
        obligations_.push_back({ob.cube, level + 1, ob.parent});
        queue.push(static_cast<int>(obligations_.size()) - 1);
      }
    }
    return -1;
  }

  // Moves lemmas forward; returns the index i of a frame with an empty delta
  // (F_i = F_{i+1}) if one appears.
  std::optional<int> propagate() {
    for (int i = 1; i < top(); ++i) {
      std::vector<Cube> keep;
      for (const Cube& c : frames_[i].delta) {
        std::vector<sat::Lit> as{~t_act()};
        for (int d : c) as.push_back(primed(d));
        if (solve(*frames_[i].solver, as) == sat::Result::Unsat) {
          // Solvers 1..i already hold the clause.
          frames_[i + 1].delta.push_back(c);
          std::vector<sat::Lit> clause;
          for (int d : c) clause.push_back(~lit(d));
          frames_[i + 1].solver->add_clause(clause);
        } else {
          keep.push_back(c);
        }
      }
      frames_[i].delta = std::move(keep);
      if (frames_[i].delta.empty()) return i;
    }
    return std::nullopt;
  }

  std::vector<Clause> invariant_from(int i) const {
    std::vector<Clause> inv;
    for (int j = i; j <= top(); ++j) {
      for (const Cube& c : frames_[j].delta) {
        Clause cl;
        for (int d : c) cl.push_back(-d);
        inv.push_back(std::move(cl));
      }
    }
    return inv;
  }

  void check_frames() {
    if (!frames_[0].delta.empty()) throw Error(ErrorKind::Internal, "ic3: F_0 differs from I");
    const auto cubes = frame_cubes();
    for (int i = 1; i < top(); ++i) {
      std::set<Cube> a(cubes[i].begin(), cubes[i].end());
      for (const Cube& c : cubes[i + 1]) {
        if (!a.count(c)) throw Error(ErrorKind::Internal, "ic3: frames are not monotone");
      }
    }
    for (int i = 0; i < top(); ++i) {
      sat::Solver s(lim_.seed);
      add(s, i == 0 ? p_.i : std::vector<Clause>{}, 0, std::nullopt);
      if (i > 0) {
        for (const Cube& c : cubes[i]) {
          std::vector<sat::Lit> cl;
          for (int d : c) cl.push_back(~lit(d));
          s.add_clause(cl);
        }
      }
      add(s, p_.u, 0, std::nullopt);
      add(s, p_.t, 0, std::nullopt);
      add(s, p_.u, n_, std::nullopt);
      for (const Cube& c : cubes[i + 1]) {
        std::vector<sat::Lit> as;
        for (int d : c) as.push_back(primed(d));
        if (s.solve(as) != sat::Result::Unsat) throw Error(ErrorKind::Internal, "ic3: frame is not relatively inductive");
      }
    }
    for (const Cube& c : cubes.size() > 1 ? cubes[1] : std::vector<Cube>{}) {
      if (intersects_init(c)) throw Error(ErrorKind::Internal, "ic3: lemma excludes an initial state");
    }
  }

  Verdict counterexample(int id) {
    Verdict v;
    v.answer = Answer::Sat;
    for (int j = id; j >= 0; j = obligations_[j].parent) {
      std::vector<bool> st(s_);
      for (int d : obligations_[j].cube) st[std::abs(d) - 1] = d > 0;
      v.states.push_back(std::move(st));
    }
    v.k = static_cast<int>(v.states.size()) - 1;
    return v;
  }

  Verdict search() {
    init_ = make_solver(false);
    add(*init_, p_.i, 0, std::nullopt);

    {
      auto zero = make_solver(false);
      add(*zero, p_.i, 0, std::nullopt);
      add(*zero, p_.g, 0, std::nullopt);
      if (solve(*zero, {}) == sat::Result::Sat) {
        Verdict v;
        v.answer = Answer::Sat;
        v.k = 0;
        const Cube c = state_cube(*zero);
        std::vector<bool> st(s_);
        for (int d : c) st[std::abs(d) - 1] = d > 0;
        v.states.push_back(std::move(st));
        return v;
      }
    }

    add_frame();
    add_frame();
    for (;;) {
      ++phases_;
      for (;;) {
        const sat::Lit a = ~g_act();
        if (solve(*frames_[top()].solver, std::span<const sat::Lit>(&a, 1)) != sat::Result::Sat) break;
        const Cube bad = state_cube(*frames_[top()].solver);
        const int cex = block(bad);
        if (cex >= 0) return counterexample(cex);
      }
      add_frame();
      const std::optional<int> fixpoint = propagate();
      if (opts_.check_frames) check_frames();
      if (fixpoint) {
        Verdict v;
        v.answer = Answer::Unsat;
        v.k = top();
        v.invariant = invariant_from(*fixpoint + 1);
        const std::string failed = check_invariant(p_, v.invariant, lim_.seed);
        if (!failed.empty()) throw Error(ErrorKind::Internal, "ic3 invariant fails the " + failed + " check");
        return v;
      }
    }
  }

  const DimSpecProblem& p_;
  Limits lim_;
  Ic3Options opts_;
  int n_;
  int s_;
  std::vector<Frame> frames_;
  std::unique_ptr<sat::Solver> init_;
  std::vector<Obligation> obligations_;
  uint64_t solves_ = 0, conflicts_ = 0, phases_ = 0, peak_clauses_ = 0, retired_ = 0;
};

inline Verdict solve_ic3(const DimSpecProblem& p, const Limits& lim = {}, const Ic3Options& opts = {}) {
  return Ic3(p, lim, opts).run();
}

}  // namespace bvreach::engine
