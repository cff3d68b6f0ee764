#pragma once

// DimSpec files: four CNF sections I, U, G, T over one step block of n
// variables (T over two blocks, 2n variables).
//
//   c state_bits <s>        optional; the first s variables are state bits
//   i cnf <n> <m>
//   <m clauses, one per line, zero-terminated>
//   u cnf <n> <m>
//   g cnf <n> <m>
//   t cnf <2n> <m>

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bvreach/error.hpp"

namespace bvreach {

using Clause = std::vector<int>;

struct DimSpecProblem {
  int n = 0;
  int state_bits = 0;  // 0 when unknown: every variable counts as state
  std::vector<Clause> i, u, g, t;

  bool operator==(const DimSpecProblem&) const = default;

  int num_state_bits() const { return state_bits > 0 ? state_bits : n; }
};

namespace dimspec {

inline void write_section(std::ostream& os, char tag, int vars, const std::vector<Clause>& cs) {
  os << tag << " cnf " << vars << ' ' << cs.size() << '\n';
  for (const Clause& c : cs) {
    for (int l : c) os << l << ' ';
    os << "0\n";
  }
}

inline void write(std::ostream& os, const DimSpecProblem& p) {
  if (p.state_bits > 0) os << "c state_bits " << p.state_bits << '\n';
  write_section(os, 'i', p.n, p.i);
  write_section(os, 'u', p.n, p.u);
  write_section(os, 'g', p.n, p.g);
  write_section(os, 't', 2 * p.n, p.t);
  if (!os) throw Error(ErrorKind::Io, "failed to write DimSpec output");
}

inline std::string to_string(const DimSpecProblem& p) {
  std::ostringstream os;
  write(os, p);
  return os.str();
}

namespace detail {

inline bool parse_int(const std::string& tok, long long& out) {
  if (tok.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoll(tok.c_str(), &end, 10);
  return errno == 0 && end == tok.c_str() + tok.size();
}

}  // namespace detail

inline DimSpecProblem read(std::istream& in) {
  DimSpecProblem p;
  static constexpr char kTags[] = {'i', 'u', 'g', 't'};
  std::vector<Clause>* sections[] = {&p.i, &p.u, &p.g, &p.t};

  int section = -1;       // index of the section being filled
  long long expected = 0; // clauses announced in its header
  long long limit = 0;    // largest variable index allowed
  Clause pending;
  int pending_line = 0;
  bool have_n = false;

  auto finish_section = [&](int line) {
    if (section < 0) return;
    if (!pending.empty()) throw Error(ErrorKind::Format, "clause not terminated by 0", pending_line);
    if (static_cast<long long>(sections[section]->size()) != expected) {
      throw Error(ErrorKind::Format,
                  std::string("section ") + kTags[section] + " announces " + std::to_string(expected) +
                      " clauses but has " + std::to_string(sections[section]->size()),
                  line);
    }
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "c") {
      std::string key;
      if (ls >> key && key == "state_bits") {
        long long v = 0;
        std::string num, extra;
        if (!(ls >> num) || !detail::parse_int(num, v) || v <= 0 || (ls >> extra)) {
          throw Error(ErrorKind::Format, "malformed state_bits comment", lineno);
        }
        if (section >= 0) throw Error(ErrorKind::Format, "state_bits comment after the first section", lineno);
        p.state_bits = static_cast<int>(v);
      }
      continue;
    }
    if (tok.size() == 1 && std::isalpha(static_cast<unsigned char>(tok[0]))) {
      finish_section(lineno);
      const int next = section + 1;
      if (next >= 4 || tok[0] != kTags[next]) {
        throw Error(ErrorKind::Format, "unexpected section tag '" + tok + "'", lineno);
      }
      std::string cnf, vars_tok, clauses_tok, extra;
      long long vars = 0, clauses = 0;
      if (!(ls >> cnf >> vars_tok >> clauses_tok) || cnf != "cnf" || !detail::parse_int(vars_tok, vars) ||
          !detail::parse_int(clauses_tok, clauses) || vars < 0 || clauses < 0 || (ls >> extra)) {
        throw Error(ErrorKind::Format, "malformed header, expected '" + std::string(1, kTags[next]) + " cnf <vars> <clauses>'",
                    lineno);
      }
      if (next == 0) {
        p.n = static_cast<int>(vars);
        have_n = true;
      }
      const long long want = next == 3 ? 2LL * p.n : p.n;
      if (vars != want) {
        throw Error(ErrorKind::Format,
                    "section " + tok + " declares " + std::to_string(vars) + " variables, expected " + std::to_string(want),
                    lineno);
      }
      section = next;
      expected = clauses;
      limit = want;
      continue;
    }
    if (section < 0) throw Error(ErrorKind::Format, "clause before the first section header", lineno);
    do {
      long long v = 0;
      if (!detail::parse_int(tok, v)) throw Error(ErrorKind::Format, "bad literal '" + tok + "'", lineno);
      if (v == 0) {
        if (pending.empty()) throw Error(ErrorKind::Format, "empty clause", lineno);
        if (static_cast<long long>(sections[section]->size()) >= expected) {
          throw Error(ErrorKind::Format, "more clauses than the header announces", lineno);
        }
        sections[section]->push_back(std::move(pending));
        pending.clear();
        continue;
      }
      if (std::llabs(v) > limit) {
        throw Error(ErrorKind::Format, "literal " + tok + " out of range 1.." + std::to_string(limit), lineno);
      }
      if (pending.empty()) pending_line = lineno;
      pending.push_back(static_cast<int>(v));
    } while (ls >> tok);
  }
  if (!have_n || section != 3) throw Error(ErrorKind::Format, "missing sections, expected i, u, g and t", lineno);
  finish_section(lineno);
  if (p.state_bits > p.n) throw Error(ErrorKind::Format, "state_bits exceeds the variable count");
  return p;
}

inline DimSpecProblem read_string(const std::string& text) {
  std::istringstream is(text);
  return read(is);
}

// Variable x of step i in the unrolled formula.
inline int shift(int lit, int step, int n) { return lit > 0 ? lit + step * n : lit - step * n; }

// F_k = I(0) ∧ U(0) ∧ T(0,1) ∧ U(1) ∧ ... ∧ T(k-1,k) ∧ U(k) ∧ G(k) as plain
// clauses over (k+1)·n variables.
inline std::vector<Clause> unroll(const DimSpecProblem& p, int k) {
  std::vector<Clause> out;
  auto add = [&](const std::vector<Clause>& cs, int step) {
    for (const Clause& c : cs) {
      Clause d;
      for (int l : c) d.push_back(shift(l, step, p.n));
      out.push_back(std::move(d));
    }
  };
  add(p.i, 0);
  for (int s = 0; s <= k; ++s) {
    add(p.u, s);
    if (s < k) add(p.t, s);
  }
  add(p.g, k);
  return out;
}

// `--export-dimacs k`: F_k as a single DIMACS CNF file.
inline void export_unrolled_dimacs(std::ostream& os, const DimSpecProblem& p, int k) {
  const std::vector<Clause> cs = unroll(p, k);
  os << "c unrolled to " << k << " steps of " << p.n << " variables\n";
  os << "p cnf " << (k + 1) * p.n << ' ' << cs.size() << '\n';
  for (const Clause& c : cs) {
    for (int l : c) os << l << ' ';
    os << "0\n";
  }
}

// Reader for plain DIMACS CNF (the format export_unrolled_dimacs writes).
inline std::vector<Clause> read_dimacs(std::istream& in, int* num_vars = nullptr) {
  std::vector<Clause> out;
  Clause pending;
  std::string line;
  int lineno = 0;
  bool header = false;
  long long vars = 0, clauses = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok == "c") continue;
    if (tok == "p") {
      std::string cnf;
      if (header || !(ls >> cnf >> vars >> clauses) || cnf != "cnf") {
        throw Error(ErrorKind::Format, "malformed problem line", lineno);
      }
      header = true;
      continue;
    }
    if (!header) throw Error(ErrorKind::Format, "clause before problem line", lineno);
    do {
      long long v = 0;
      if (!detail::parse_int(tok, v) || std::llabs(v) > vars) {
        throw Error(ErrorKind::Format, "bad literal '" + tok + "'", lineno);
      }
      if (v == 0) {
        out.push_back(std::move(pending));
        pending.clear();
      } else {
        pending.push_back(static_cast<int>(v));
      }
    } while (ls >> tok);
  }
  if (!header) throw Error(ErrorKind::Format, "missing problem line", lineno);
  if (!pending.empty()) throw Error(ErrorKind::Format, "clause not terminated by 0", lineno);
  if (static_cast<long long>(out.size()) != clauses) throw Error(ErrorKind::Format, "clause count mismatch", lineno);
  if (num_vars) *num_vars = static_cast<int>(vars);
  return out;
}

}  // namespace dimspec
}  // namespace bvreach
