#pragma once

// Incremental CDCL SAT solver with an assumption-based interface.
//
// Feature set: two watched literals with blockers, first-UIP learning with
// local clause minimization, exponential VSIDS, phase saving, Luby restarts,
// activity-based learnt clause reduction. No preprocessing.
//
// Usage follows the add(C) / solve(A) pattern: clauses are added permanently,
// solve() is called under a set of assumption literals, and on UNSAT the
// solver reports a subset of the assumptions responsible (the core).

#include <algorithm>
#include <atomic>
#include <cassert>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

namespace bvreach::sat {

using Var = int32_t;

struct Lit {
  int32_t x = -2;

  static constexpr Lit make(Var v, bool negated = false) { return Lit{2 * v + (negated ? 1 : 0)}; }

  constexpr Var var() const { return x >> 1; }
  constexpr bool negated() const { return (x & 1) != 0; }
  constexpr Lit operator~() const { return Lit{x ^ 1}; }
  constexpr auto operator<=>(const Lit&) const = default;
};

inline constexpr Lit kUndefLit{-2};

// DIMACS integers (1-based, sign = polarity) to solver literals and back.
inline Lit from_dimacs(int32_t d) { return Lit::make(std::abs(d) - 1, d < 0); }
inline int32_t to_dimacs(Lit l) { return l.negated() ? -(l.var() + 1) : (l.var() + 1); }

enum class Result { Sat, Unsat, Unknown };

// Resource limits checked between conflicts. All limits are optional.
struct Budget {
  std::optional<std::chrono::steady_clock::time_point> deadline;
  int64_t max_conflicts = -1;  // per solve() call, -1 = unlimited
  const std::atomic<bool>* stop = nullptr;
};

struct Stats {
  uint64_t solves = 0;
  uint64_t conflicts = 0;
  uint64_t decisions = 0;
  uint64_t propagations = 0;
  uint64_t restarts = 0;
};

class Solver {
 public:
  explicit Solver(uint64_t seed = 0) : rng_(seed) {}

  Var new_var() {
    const Var v = static_cast<Var>(assigns_.size());
    assigns_.push_back(kUndef);
    level_.push_back(0);
    reason_.push_back(kNoReason);
    activity_.push_back(0.0);
    polarity_.push_back(true);  // true = prefer the negative literal
    seen_.push_back(0);
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
  }

  void ensure_vars(int32_t count) {
    while (num_vars() < count) new_var();
  }

  int32_t num_vars() const { return static_cast<int32_t>(assigns_.size()); }
  size_t num_clauses() const { return num_problem_; }
  size_t num_learnts() const { return learnts_.size(); }
  bool okay() const { return ok_; }
  const Stats& stats() const { return stats_; }
  void set_budget(Budget b) { budget_ = b; }

  // Adds a clause permanently. Variables are created on demand. Returns false
  // once the clause set is known to be unsatisfiable.
  bool add_clause(std::span<const Lit> lits) {
    if (!ok_) return false;
    Var max_var = -1;
    for (Lit l : lits) max_var = std::max(max_var, l.var());
    ensure_vars(max_var + 1);
    cancel_until(0);

    std::vector<Lit> c(lits.begin(), lits.end());
    std::sort(c.begin(), c.end());
    std::vector<Lit> out;
    Lit prev = kUndefLit;
    for (Lit l : c) {
      if (value(l) == kTrue || l == ~prev) return true;
      if (value(l) != kFalse && l != prev) out.push_back(l);
      prev = l;
    }
    if (out.empty()) {
      ok_ = false;
      return false;
    }
    if (out.size() == 1) {
      enqueue(out[0], kNoReason);
      ok_ = (propagate() == kNoReason);
      return ok_;
    }
    const uint32_t cr = alloc_clause(std::move(out), false);
    attach(cr);
    ++num_problem_;
    return true;
  }

  bool add_clause(std::initializer_list<Lit> lits) {
    return add_clause(std::span<const Lit>(lits.begin(), lits.size()));
  }

  // Solves under the given assumptions. On Sat, model() holds a total
  // assignment; on Unsat, core() holds a subset of the assumptions whose
  // conjunction with the clauses is unsatisfiable (empty if the clauses alone
  // are unsatisfiable).
  Result solve(std::span<const Lit> assumptions = {}) {
    ++stats_.solves;
    model_.clear();
    core_.clear();
    if (!ok_) return Result::Unsat;
    Var max_var = -1;
    for (Lit l : assumptions) max_var = std::max(max_var, l.var());
    ensure_vars(max_var + 1);
    assumptions_.assign(assumptions.begin(), assumptions.end());

    solve_conflicts_ = 0;
    if (max_learnts_ <= 0) max_learnts_ = std::max<double>(num_problem_ / 3.0, 2000.0);

    Result status = Result::Unknown;
    for (int restart = 0; status == Result::Unknown; ++restart) {
      const double budget = luby(2.0, restart) * kRestartFirst;
      status = search(static_cast<int64_t>(budget));
      if (status == Result::Unknown && out_of_budget()) break;
      if (status == Result::Unknown) ++stats_.restarts;
    }
    if (status == Result::Sat) {
      model_.resize(assigns_.size());
      for (size_t v = 0; v < assigns_.size(); ++v) model_[v] = (assigns_[v] == kTrue);
    }
    cancel_until(0);
    return status;
  }

  Result solve(std::initializer_list<Lit> assumptions) {
    return solve(std::span<const Lit>(assumptions.begin(), assumptions.size()));
  }

  const std::vector<bool>& model() const { return model_; }
  bool model_value(Var v) const { return v < static_cast<Var>(model_.size()) && model_[v]; }
  bool model_value(Lit l) const { return model_value(l.var()) != l.negated(); }
  const std::vector<Lit>& core() const { return core_; }

  // Removes clauses satisfied at decision level 0. Disabled activation-literal
  // clauses go away this way.
  void simplify() {
    if (!ok_) return;
    cancel_until(0);
    if (propagate() != kNoReason) {
      ok_ = false;
      return;
    }
    auto sweep = [&](std::vector<uint32_t>& list, bool problem) {
      size_t j = 0;
      for (uint32_t cr : list) {
        if (satisfied(clauses_[cr])) {
          remove_clause(cr);
          if (problem) --num_problem_;
        } else {
          list[j++] = cr;
        }
      }
      list.resize(j);
    };
    sweep(learnts_, false);
    sweep(problem_, true);
    clean_watches();
  }

  // DIMACS dump of the permanent clause database, including level-0 units.
  void write_dimacs(std::ostream& os) const {
    size_t units = 0;
    for (size_t i = 0; i < trail_.size() && (trail_lim_.empty() || i < static_cast<size_t>(trail_lim_[0])); ++i) ++units;
    os << "p cnf " << num_vars() << ' ' << (ok_ ? num_problem_ + units : 1) << '\n';
    if (!ok_) {
      os << "0\n";
      return;
    }
    for (size_t i = 0; i < units; ++i) os << to_dimacs(trail_[i]) << " 0\n";
    for (uint32_t cr : problem_) {
      for (Lit l : clauses_[cr].lits) os << to_dimacs(l) << ' ';
      os << "0\n";
    }
  }

 private:
  using LBool = uint8_t;
  static constexpr LBool kTrue = 0, kFalse = 1, kUndef = 2;
  static constexpr uint32_t kNoReason = UINT32_MAX;
  static constexpr double kVarDecay = 0.95;
  static constexpr double kClauseDecay = 0.999;
  static constexpr double kRestartFirst = 100;
  static constexpr double kRandomFreq = 0.005;

  struct Clause {
    std::vector<Lit> lits;
    double activity = 0.0;
    bool learnt = false;
    bool removed = false;
  };

  struct Watcher {
    uint32_t cref;
    Lit blocker;
  };

  LBool value(Lit l) const {
    const LBool a = assigns_[l.var()];
    if (a == kUndef) return kUndef;
    return static_cast<LBool>(a ^ static_cast<LBool>(l.negated()));
  }
  LBool value(Var v) const { return assigns_[v]; }

  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  static double luby(double y, int x) {
    int size = 1, seq = 0;
    for (; size < x + 1; ++seq) size = 2 * size + 1;
    while (size - 1 != x) {
      size = (size - 1) >> 1;
      --seq;
      x = x % size;
    }
    double r = 1.0;
    for (int i = 0; i < seq; ++i) r *= y;
    return r;
  }

  bool out_of_budget() const {
    if (budget_.stop && budget_.stop->load(std::memory_order_relaxed)) return true;
    if (budget_.max_conflicts >= 0 && solve_conflicts_ >= budget_.max_conflicts) return true;
    if (budget_.deadline && std::chrono::steady_clock::now() >= *budget_.deadline) return true;
    return false;
  }

  uint32_t alloc_clause(std::vector<Lit> lits, bool learnt) {
    uint32_t cr;
    if (!free_.empty()) {
      cr = free_.back();
      free_.pop_back();
      clauses_[cr] = Clause{std::move(lits), 0.0, learnt, false};
    } else {
      cr = static_cast<uint32_t>(clauses_.size());
      clauses_.push_back(Clause{std::move(lits), 0.0, learnt, false});
    }
    if (learnt) {
      learnts_.push_back(cr);
    } else {
      problem_.push_back(cr);
    }
    return cr;
  }

  void attach(uint32_t cr) {
    const auto& c = clauses_[cr].lits;
    watches_[(~c[0]).x].push_back({cr, c[1]});
    watches_[(~c[1]).x].push_back({cr, c[0]});
  }

  bool locked(uint32_t cr) const {
    const auto& c = clauses_[cr].lits;
    return value(c[0]) == kTrue && reason_[c[0].var()] == cr;
  }

  void remove_clause(uint32_t cr) {
    Clause& c = clauses_[cr];
    if (locked(cr)) reason_[c.lits[0].var()] = kNoReason;
    c.removed = true;
    c.lits.clear();
    c.lits.shrink_to_fit();
    free_.push_back(cr);
    watches_dirty_ = true;
  }

  void clean_watches() {
    if (!watches_dirty_) return;
    for (auto& ws : watches_) {
      std::erase_if(ws, [&](const Watcher& w) { return clauses_[w.cref].removed; });
    }
    watches_dirty_ = false;
  }

  bool satisfied(const Clause& c) const {
    return std::any_of(c.lits.begin(), c.lits.end(), [&](Lit l) { return value(l) == kTrue; });
  }

  void enqueue(Lit p, uint32_t from) {
    assigns_[p.var()] = p.negated() ? kFalse : kTrue;
    level_[p.var()] = decision_level();
    reason_[p.var()] = from;
    trail_.push_back(p);
  }

  void cancel_until(int lvl) {
    if (decision_level() <= lvl) return;
    for (int i = static_cast<int>(trail_.size()) - 1; i >= trail_lim_[lvl]; --i) {
      const Var v = trail_[i].var();
      assigns_[v] = kUndef;
      reason_[v] = kNoReason;
      polarity_[v] = trail_[i].negated();
      if (heap_index_[v] < 0) heap_insert(v);
    }
    trail_.resize(trail_lim_[lvl]);
    trail_lim_.resize(lvl);
    qhead_ = std::min(qhead_, trail_.size());
  }

  // Returns the conflicting clause, or kNoReason.
  uint32_t propagate() {
    uint32_t confl = kNoReason;
    while (qhead_ < trail_.size()) {
      const Lit p = trail_[qhead_++];
      auto& ws = watches_[p.x];
      ++stats_.propagations;
      size_t i = 0, j = 0;
      const Lit false_lit = ~p;
      while (i < ws.size()) {
        const Watcher w = ws[i];
        if (clauses_[w.cref].removed) {
          ++i;
          continue;
        }
        if (value(w.blocker) == kTrue) {
          ws[j++] = ws[i++];
          continue;
        }
        auto& c = clauses_[w.cref].lits;
        if (c[0] == false_lit) std::swap(c[0], c[1]);
        ++i;
        const Lit first = c[0];
        if (first != w.blocker && value(first) == kTrue) {
          ws[j++] = {w.cref, first};
          continue;
        }
        bool moved = false;
        for (size_t k = 2; k < c.size(); ++k) {
          if (value(c[k]) != kFalse) {
            std::swap(c[1], c[k]);
            watches_[(~c[1]).x].push_back({w.cref, first});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = {w.cref, first};
        if (value(first) == kFalse) {
          confl = w.cref;
          qhead_ = trail_.size();
          while (i < ws.size()) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
      if (confl != kNoReason) break;
    }
    return confl;
  }

  void var_bump(Var v) {
    if ((activity_[v] += var_inc_) > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_index_[v] >= 0) heap_up(heap_index_[v]);
  }

  void clause_bump(Clause& c) {
    if ((c.activity += cla_inc_) > 1e20) {
      for (uint32_t cr : learnts_) clauses_[cr].activity *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  bool redundant(Lit p) const {
    const uint32_t r = reason_[p.var()];
    if (r == kNoReason) return false;
    const auto& c = clauses_[r].lits;
    for (size_t k = 1; k < c.size(); ++k) {
      const Var v = c[k].var();
      if (!seen_[v] && level_[v] > 0) return false;
    }
    return true;
  }

  void analyze(uint32_t confl, std::vector<Lit>& out, int& backtrack_level) {
    int path = 0;
    Lit p = kUndefLit;
    out.assign(1, kUndefLit);
    int index = static_cast<int>(trail_.size()) - 1;
    do {
      Clause& c = clauses_[confl];
      if (c.learnt) clause_bump(c);
      for (size_t k = (p == kUndefLit ? 0 : 1); k < c.lits.size(); ++k) {
        const Lit q = c.lits[k];
        const Var v = q.var();
        if (!seen_[v] && level_[v] > 0) {
          var_bump(v);
          seen_[v] = 1;
          if (level_[v] >= decision_level()) {
            ++path;
          } else {
            out.push_back(q);
          }
        }
      }
      while (!seen_[trail_[index--].var()]) {
      }
      p = trail_[index + 1];
      confl = reason_[p.var()];
      seen_[p.var()] = 0;
      --path;
    } while (path > 0);
    out[0] = ~p;

    analyze_toclear_.assign(out.begin(), out.end());
    size_t j = 1;
    for (size_t i = 1; i < out.size(); ++i) {
      if (!redundant(out[i])) out[j++] = out[i];
    }
    out.resize(j);

    if (out.size() == 1) {
      backtrack_level = 0;
    } else {
      size_t max_i = 1;
      for (size_t i = 2; i < out.size(); ++i) {
        if (level_[out[i].var()] > level_[out[max_i].var()]) max_i = i;
      }
      std::swap(out[1], out[max_i]);
      backtrack_level = level_[out[1].var()];
    }
    for (Lit l : analyze_toclear_) seen_[l.var()] = 0;
  }

  // Expresses the final conflict on assumption p in terms of assumptions.
  void analyze_final(Lit p) {
    core_.clear();
    core_.push_back(~p);
    if (decision_level() == 0) return;
    seen_[p.var()] = 1;
    for (int i = static_cast<int>(trail_.size()) - 1; i >= trail_lim_[0]; --i) {
      const Var x = trail_[i].var();
      if (!seen_[x]) continue;
      if (reason_[x] == kNoReason) {
        if (trail_[i] != ~p) core_.push_back(trail_[i]);
      } else {
        const auto& c = clauses_[reason_[x]].lits;
        for (size_t k = 1; k < c.size(); ++k) {
          if (level_[c[k].var()] > 0) seen_[c[k].var()] = 1;
        }
      }
      seen_[x] = 0;
    }
    seen_[p.var()] = 0;
    std::sort(core_.begin(), core_.end());
    core_.erase(std::unique(core_.begin(), core_.end()), core_.end());
  }

  void reduce_db() {
    std::vector<uint32_t> sorted = learnts_;
    std::sort(sorted.begin(), sorted.end(), [&](uint32_t a, uint32_t b) {
      const auto& ca = clauses_[a];
      const auto& cb = clauses_[b];
      if ((ca.lits.size() > 2) != (cb.lits.size() > 2)) return ca.lits.size() > 2;
      return ca.activity < cb.activity;
    });
    const double extra_lim = cla_inc_ / std::max<double>(1.0, static_cast<double>(sorted.size()));
    std::vector<uint32_t> keep;
    keep.reserve(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) {
      const uint32_t cr = sorted[i];
      const auto& c = clauses_[cr];
      const bool removable = c.lits.size() > 2 && !locked(cr) &&
                             (i < sorted.size() / 2 || c.activity < extra_lim);
      if (removable) {
        remove_clause(cr);
      } else {
        keep.push_back(cr);
      }
    }
    learnts_ = std::move(keep);
    clean_watches();
  }

  Lit pick_branch() {
    Var next = -1;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (!heap_.empty() && coin(rng_) < kRandomFreq) {
      std::uniform_int_distribution<size_t> pick(0, heap_.size() - 1);
      next = heap_[pick(rng_)];
      if (value(next) != kUndef) next = -1;
    }
    while (next < 0 || value(next) != kUndef) {
      if (heap_.empty()) return kUndefLit;
      next = heap_pop();
    }
    return Lit::make(next, polarity_[next]);
  }

  Result search(int64_t conflict_budget) {
    int64_t conflicts_here = 0;
    std::vector<Lit> learnt;
    for (;;) {
      const uint32_t confl = propagate();
      if (confl != kNoReason) {
        ++stats_.conflicts;
        ++conflicts_here;
        ++solve_conflicts_;
        if (decision_level() == 0) {
          ok_ = false;
          return Result::Unsat;
        }
        int bt = 0;
        analyze(confl, learnt, bt);
        cancel_until(bt);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          const uint32_t cr = alloc_clause(learnt, true);
          attach(cr);
          clause_bump(clauses_[cr]);
          enqueue(learnt[0], cr);
        }
        var_inc_ *= 1.0 / kVarDecay;
        cla_inc_ *= 1.0 / kClauseDecay;
        if ((solve_conflicts_ & 63) == 0 && out_of_budget()) {
          cancel_until(0);
          return Result::Unknown;
        }
        continue;
      }

      if (conflicts_here >= conflict_budget || out_of_budget()) {
        cancel_until(0);
        return Result::Unknown;
      }
      if (static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >= max_learnts_) {
        reduce_db();
        max_learnts_ *= 1.1;
      }

      Lit next = kUndefLit;
      while (decision_level() < static_cast<int>(assumptions_.size())) {
        const Lit p = assumptions_[decision_level()];
        if (value(p) == kTrue) {
          trail_lim_.push_back(static_cast<int>(trail_.size()));
        } else if (value(p) == kFalse) {
          analyze_final(~p);
          return Result::Unsat;
        } else {
          next = p;
          break;
        }
      }
      if (next == kUndefLit) {
        ++stats_.decisions;
        next = pick_branch();
        if (next == kUndefLit) return Result::Sat;
      }
      trail_lim_.push_back(static_cast<int>(trail_.size()));
      enqueue(next, kNoReason);
    }
  }

  // Binary max-heap over variable activity.
  bool heap_less(Var a, Var b) const { return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b); }

  void heap_insert(Var v) {
    heap_index_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_index_[v]);
  }

  void heap_up(int i) {
    const Var v = heap_[i];
    while (i > 0) {
      const int parent = (i - 1) >> 1;
      if (!heap_less(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      heap_index_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  void heap_down(int i) {
    const Var v = heap_[i];
    const int size = static_cast<int>(heap_.size());
    for (;;) {
      int child = 2 * i + 1;
      if (child >= size) break;
      if (child + 1 < size && heap_less(heap_[child + 1], heap_[child])) ++child;
      if (!heap_less(heap_[child], v)) break;
      heap_[i] = heap_[child];
      heap_index_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  Var heap_pop() {
    const Var top = heap_.front();
    heap_index_[top] = -1;
    const Var last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_[0] = last;
      heap_index_[last] = 0;
      heap_down(0);
    }
    return top;
  }

  std::vector<Clause> clauses_;
  std::vector<uint32_t> problem_;
  std::vector<uint32_t> learnts_;
  std::vector<uint32_t> free_;
  size_t num_problem_ = 0;
  bool watches_dirty_ = false;

  std::vector<std::vector<Watcher>> watches_;
  std::vector<LBool> assigns_;
  std::vector<int> level_;
  std::vector<uint32_t> reason_;
  std::vector<double> activity_;
  std::vector<bool> polarity_;
  std::vector<uint8_t> seen_;
  std::vector<Lit> analyze_toclear_;
  std::vector<Lit> trail_;
  std::vector<int> trail_lim_;
  size_t qhead_ = 0;

  std::vector<Var> heap_;
  std::vector<int> heap_index_;

  std::vector<Lit> assumptions_;
  std::vector<bool> model_;
  std::vector<Lit> core_;

  double var_inc_ = 1.0;
  double cla_inc_ = 1.0;
  double max_learnts_ = 0.0;
  int64_t solve_conflicts_ = 0;
  bool ok_ = true;
  Budget budget_;
  Stats stats_;
  std::mt19937_64 rng_;
};

}  // namespace bvreach::sat
