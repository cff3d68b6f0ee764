#pragma once

// Machine-readable run report: one key=value pair per line in a fixed key
// order.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "bvreach/engines.hpp"
#include "bvreach/error.hpp"

namespace bvreach {

struct RunReport {
  std::string input;
  std::string engine;
  engine::Answer answer = engine::Answer::Unknown;
  engine::UnknownReason reason = engine::UnknownReason::None;
  int64_t k = 0;
  uint64_t frames = 0;
  uint64_t solves = 0;
  uint64_t conflicts = 0;
  uint64_t peak_clauses = 0;
  uint64_t invariant_clauses = 0;
  int64_t encode_ms = 0;
  int64_t solve_ms = 0;
  int64_t time_ms = 0;

  bool operator==(const RunReport&) const = default;

  void write(std::ostream& os) const {
    os << "input=" << input << '\n'
       << "engine=" << engine << '\n'
       << "ans=" << engine::to_string(answer) << '\n'
       << "reason=" << engine::to_string(reason) << '\n'
       << "k=" << k << '\n'
       << "frames=" << frames << '\n'
       << "solves=" << solves << '\n'
       << "conflicts=" << conflicts << '\n'
       << "peak_clauses=" << peak_clauses << '\n'
       << "invariant_clauses=" << invariant_clauses << '\n'
       << "encode_ms=" << encode_ms << '\n'
       << "solve_ms=" << solve_ms << '\n'
       << "time_ms=" << time_ms << '\n';
  }

  std::string to_text() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  // Reads the key=value lines; lines without '=' are ignored so the report
  // can be picked out of mixed output.
  static RunReport parse(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const char* key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw Error(ErrorKind::Format, std::string("report lacks key ") + key);
      return it->second;
    };
    auto num = [&](const char* key) -> int64_t {
      const std::string& v = get(key);
      size_t pos = 0;
      int64_t x = 0;
      try {
        x = std::stoll(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != v.size()) throw Error(ErrorKind::Format, std::string("bad number for ") + key);
      return x;
    };
    RunReport r;
    r.input = get("input");
    r.engine = get("engine");
    const std::string& ans = get("ans");
    if (ans == "sat") {
      r.answer = engine::Answer::Sat;
    } else if (ans == "unsat") {
      r.answer = engine::Answer::Unsat;
    } else if (ans == "unknown") {
      r.answer = engine::Answer::Unknown;
    } else {
      throw Error(ErrorKind::Format, "bad answer " + ans);
    }
    const std::string& reason = get("reason");
    if (reason == "none") {
      r.reason = engine::UnknownReason::None;
    } else if (reason == "bound") {
      r.reason = engine::UnknownReason::Bound;
    } else if (reason == "timeout") {
      r.reason = engine::UnknownReason::Timeout;
    } else {
      throw Error(ErrorKind::Format, "bad reason " + reason);
    }
    r.k = num("k");
    r.frames = static_cast<uint64_t>(num("frames"));
    r.solves = static_cast<uint64_t>(num("solves"));
    r.conflicts = static_cast<uint64_t>(num("conflicts"));
    r.peak_clauses = static_cast<uint64_t>(num("peak_clauses"));
    r.invariant_clauses = static_cast<uint64_t>(num("invariant_clauses"));
    r.encode_ms = num("encode_ms");
    r.solve_ms = num("solve_ms");
    r.time_ms = num("time_ms");
    return r;
  }

  static RunReport parse(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }
};

}  // namespace bvreach
