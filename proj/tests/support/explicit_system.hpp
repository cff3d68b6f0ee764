#pragma once

// Explicit-state semantics of small DimSpec problems, for checking the
// symbolic engines. A state is an assignment to all n variables packed
// into an integer.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "bvreach/dimspec.hpp"
#include "support/cnf_oracle.hpp"

namespace testsupport {

inline bool holds_pair(const Cnf& t, uint64_t cur, uint64_t next, int n) { return holds(t, cur | (next << n)); }

// States reachable with exactly j transitions, for j = 0..k.
inline std::vector<std::set<uint64_t>> layers(const bvreach::DimSpecProblem& p, int k) {
  const uint64_t count = uint64_t{1} << p.n;
  std::vector<std::set<uint64_t>> out(k + 1);
  for (uint64_t s = 0; s < count; ++s) {
    if (holds(p.i, s) && holds(p.u, s)) out[0].insert(s);
  }
  for (int j = 0; j < k; ++j) {
    for (uint64_t s : out[j]) {
      for (uint64_t t = 0; t < count; ++t) {
        if (holds(p.u, t) && holds_pair(p.t, s, t, p.n)) out[j + 1].insert(t);
      }
    }
  }
  return out;
}

inline bool goal_at(const bvreach::DimSpecProblem& p, const std::set<uint64_t>& layer) {
  for (uint64_t s : layer) {
    if (holds(p.g, s)) return true;
  }
  return false;
}

// Length of the shortest path into G, or nothing if G is unreachable.
inline std::optional<int> shortest_goal(const bvreach::DimSpecProblem& p) {
  const uint64_t count = uint64_t{1} << p.n;
  std::set<uint64_t> seen, frontier;
  for (uint64_t s = 0; s < count; ++s) {
    if (holds(p.i, s) && holds(p.u, s)) frontier.insert(s);
  }
  seen = frontier;
  for (int j = 0; !frontier.empty(); ++j) {
    if (goal_at(p, frontier)) return j;
    std::set<uint64_t> next;
    for (uint64_t s : frontier) {
      for (uint64_t t = 0; t < count; ++t) {
        if (!seen.count(t) && holds(p.u, t) && holds_pair(p.t, s, t, p.n)) next.insert(t);
      }
    }
    seen.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  return std::nullopt;
}

// Random problem over n variables with sparse clauses in each section.
inline bvreach::DimSpecProblem random_problem(std::mt19937_64& rng, int n) {
  bvreach::DimSpecProblem p;
  p.n = n;
  std::uniform_int_distribution<int> var(1, n), tvar(1, 2 * n), sign(0, 1), len(1, 3);
  auto clause = [&](bool two) {
    bvreach::Clause c;
    const int m = len(rng);
    for (int j = 0; j < m; ++j) {
      const int v = two ? tvar(rng) : var(rng);
      c.push_back(sign(rng) ? v : -v);
    }
    return c;
  };
  for (int j = 0; j < n; ++j) p.i.push_back(clause(false));
  if (sign(rng)) p.u.push_back(clause(false));
  p.g.push_back(clause(false));
  p.g.push_back(clause(false));
  for (int j = 0; j < 2 * n; ++j) p.t.push_back(clause(true));
  return p;
}

}  // namespace testsupport
