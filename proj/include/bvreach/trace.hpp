#pragma once

// Decoding of counterexample paths into program states, validated step by
// step against the concrete interpreter.

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bvreach/encoder.hpp"
#include "bvreach/engines.hpp"
#include "bvreach/error.hpp"
#include "bvreach/interpreter.hpp"
#include "bvreach/statespace.hpp"

namespace bvreach {

struct TraceStep {
  std::string block;
  std::string pred;
  std::vector<std::pair<std::string, uint64_t>> values;  // state registers
  mir::SymState state;
};

inline mir::SymState decode_state(const StateSpace& s, const std::vector<bool>& bits) {
  if (bits.size() < s.num_bits()) throw Error(ErrorKind::Internal, "state vector shorter than the state space");
  auto slot_value = [&](const StateSlot& sl) {
    uint64_t v = 0;
    for (uint32_t i = 0; i < sl.width; ++i) {
      if (bits[sl.first_bit - 1 + i]) v |= uint64_t{1} << i;
    }
    return v;
  };
  mir::SymState st;
  st.curr = slot_value(s.slot(StateSpace::kCurr));
  st.pred = slot_value(s.slot(StateSpace::kPred));
  for (size_t i = 2; i < s.slots().size(); ++i) st.vars.push_back(slot_value(s.slot(i)));
  return st;
}

// Decodes a SAT verdict and replays it: the first state must be initial,
// the last must be at error, and each step must be the interpreter's
// successor of the previous one. Any violation is an internal error.
inline std::vector<TraceStep> extract_trace(const engine::Verdict& v, const mir::Program& p, const StateSpace& s,
                                            const EncodeOptions& opts = {}) {
  if (v.answer != engine::Answer::Sat || v.states.empty()) {
    throw Error(ErrorKind::Internal, "trace requested for a verdict without a path");
  }
  mir::ExecOptions exec;
  exec.return_check = opts.return_check;
  exec.zero_division = mir::ZeroDivision::Total;

  std::vector<TraceStep> out;
  for (size_t i = 0; i < v.states.size(); ++i) {
    const mir::SymState st = decode_state(s, v.states[i]);
    for (uint64_t code : {st.curr, st.pred}) {
      if (s.decode_block(code).kind == BlockRef::Kind::Invalid) {
        throw Error(ErrorKind::Internal, "trace step " + std::to_string(i) + " has block code " + std::to_string(code) +
                                             " outside the universal constraint");
      }
    }
    if (i == 0 && (st.curr != s.code(p.entry) || st.pred != s.code(p.entry))) {
      throw Error(ErrorKind::Internal, "trace does not start in the entry block");
    }
    if (i > 0) {
      const auto next = mir::successor(p, s, out.back().state, exec);
      if (!next || !(*next == st)) {
        throw Error(ErrorKind::Internal, "trace step " + std::to_string(i) + " does not replay in the interpreter");
      }
    }
    TraceStep step;
    step.block = s.block_name(st.curr);
    step.pred = s.block_name(st.pred);
    for (size_t j = 2; j < s.slots().size(); ++j) step.values.emplace_back(s.slot(j).name, st.vars[j - 2]);
    step.state = st;
    out.push_back(std::move(step));
  }
  if (out.back().state.curr != s.error_code()) throw Error(ErrorKind::Internal, "trace does not end in error");
  return out;
}

inline void print_trace(std::ostream& os, const std::vector<TraceStep>& trace) {
  for (size_t i = 0; i < trace.size(); ++i) {
    os << "step " << i << ": " << trace[i].block << " (from " << trace[i].pred << ")";
    for (const auto& [name, value] : trace[i].values) os << ' ' << name << '=' << value;
    os << '\n';
  }
}

}  // namespace bvreach
