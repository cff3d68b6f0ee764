#pragma once

// The commands behind the bvreach executable. Each returns the process exit
// code; argument parsing lives in tools/bvreach.cpp.

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "bvreach/bitblast.hpp"
#include "bvreach/dimspec.hpp"
#include "bvreach/encoder.hpp"
#include "bvreach/engines.hpp"
#include "bvreach/error.hpp"
#include "bvreach/parser.hpp"
#include "bvreach/report.hpp"
#include "bvreach/selftest.hpp"
#include "bvreach/statespace.hpp"
#include "bvreach/trace.hpp"

namespace bvreach::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSat = 10;
inline constexpr int kExitUnsat = 20;
inline constexpr int kExitUnknown = 30;

struct Options {
  std::string engine = "both";  // inc | ic3 | both
  int max_steps = 4096;
  double timeout_s = 600;
  bool return_check = false;
  bool dump_smt = false;
  bool dump_transitions = false;
  bool dump_state = false;
  std::optional<int> export_dimacs;
  uint64_t seed = 0;
};

inline int exit_code(engine::Answer a) {
  switch (a) {
    case engine::Answer::Sat: return kExitSat;
    case engine::Answer::Unsat: return kExitUnsat;
    case engine::Answer::Unknown: return kExitUnknown;
  }
  return kExitUnknown;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw Error(ErrorKind::Io, "cannot write " + path);
}

struct EngineRun {
  std::string engine;
  engine::Verdict verdict;
};

// Runs the selected engine. With "both", the incremental engine and IC3 run
// on separate threads; the first SAT or UNSAT answer stops the other.
inline EngineRun run_engines(const DimSpecProblem& p, const Options& opts) {
  engine::Limits lim;
  lim.max_steps = opts.max_steps;
  lim.seed = opts.seed;
  if (opts.timeout_s > 0) {
    lim.deadline = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(opts.timeout_s));
  }
  if (opts.engine == "inc") return {"inc", engine::solve_incremental(p, lim)};
  if (opts.engine == "ic3") return {"ic3", engine::solve_ic3(p, lim)};

  std::atomic<bool> stop{false};
  lim.stop = &stop;
  std::mutex mu;
  std::optional<EngineRun> results[2];
  std::exception_ptr errors[2];
  auto worker = [&](int slot) {
    EngineRun r;
    try {
      r.engine = slot == 0 ? "inc" : "ic3";
      r.verdict = slot == 0 ? engine::solve_incremental(p, lim) : engine::solve_ic3(p, lim);
    } catch (...) {
      std::lock_guard<std::mutex> g(mu);
      errors[slot] = std::current_exception();
      stop = true;
      return;
    }
    std::lock_guard<std::mutex> g(mu);
    if (r.verdict.answer != engine::Answer::Unknown) stop = true;
    results[slot] = std::move(r);
  };
  std::thread inc(worker, 0), ic3(worker, 1);
  inc.join();
  ic3.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  // Prefer a definitive answer; between two, the incremental one carries
  // the shortest path.
  for (auto& r : results) {
    if (r && r->verdict.answer != engine::Answer::Unknown) {
      r->engine = "both/" + r->engine;
      return std::move(*r);
    }
  }
  EngineRun out = std::move(*results[1]);
  if (results[0]->verdict.reason == engine::UnknownReason::Bound &&
      out.verdict.reason != engine::UnknownReason::Timeout) {
    out = std::move(*results[0]);
  }
  out.engine = "both";
  return out;
}

inline RunReport make_report(const std::string& input, const EngineRun& run, int64_t encode_ms) {
  RunReport r;
  r.input = input;
  r.engine = run.engine;
  r.answer = run.verdict.answer;
  r.reason = run.verdict.reason;
  r.k = run.verdict.k;
  r.frames = run.verdict.stats.phases;
  r.solves = run.verdict.stats.solves;
  r.conflicts = run.verdict.stats.conflicts;
  r.peak_clauses = run.verdict.stats.peak_clauses;
  r.invariant_clauses = run.verdict.invariant.size();
  r.encode_ms = encode_ms;
  r.solve_ms = static_cast<int64_t>(run.verdict.stats.time_ms);
  r.time_ms = r.encode_ms + r.solve_ms;
  return r;
}

inline bool valid_engine(const std::string& e) { return e == "inc" || e == "ic3" || e == "both"; }

struct Encoded {
  mir::Program program;
  StateSpace space;
  EncodedSystem system;
  DimSpecProblem problem;
  int64_t ms = 0;
};

inline Encoded encode_file(const std::string& path, const Options& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Encoded e;
  e.program = mir::parse(read_file(path));
  e.space = StateSpace::build(e.program);
  e.system = encode_program(e.program, e.space, EncodeOptions{opts.return_check});
  e.problem = blast_system(e.system, e.space);
  e.ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return e;
}

inline void emit_dumps(const Encoded& e, const Options& opts, std::ostream& out) {
  if (opts.dump_state) e.space.dump(out);
  if (opts.dump_transitions) dump_transitions(out, e.space, e.system);
  if (opts.dump_smt) dump_smt(out, e.space, e.system);
}

// Encodes a program into a DimSpec file, or with --export-dimacs K into the
// unrolled DIMACS formula F_K.
inline int cmd_encode(const std::string& input, const std::string& output, const Options& opts,
                      std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const Encoded e = encode_file(input, opts);
    emit_dumps(e, opts, out);
    std::ostringstream text;
    if (opts.export_dimacs) {
      if (*opts.export_dimacs < 0) {
        err << "error: --export-dimacs needs a non-negative step count\n";
        return kExitUsage;
      }
      dimspec::export_unrolled_dimacs(text, e.problem, *opts.export_dimacs);
    } else {
      dimspec::write(text, e.problem);
    }
    if (!output.empty()) write_file(output, text.str(), out);
    return kExitOk;
  } catch (const Error& ex) {
    err << input << ": " << ex.what() << '\n';
    return ex.kind() == ErrorKind::Internal ? kExitUnknown : kExitInput;
  }
}

inline int cmd_solve(const std::string& input, const Options& opts, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  if (!valid_engine(opts.engine)) {
    err << "error: unknown engine '" << opts.engine << "'\n";
    return kExitUsage;
  }
  DimSpecProblem p;
  try {
    p = dimspec::read_string(read_file(input));
  } catch (const Error& ex) {
    err << input << ": " << ex.what() << '\n';
    return kExitInput;
  }
  try {
    const EngineRun run = run_engines(p, opts);
    make_report(input, run, 0).write(out);
    return exit_code(run.verdict.answer);
  } catch (const Error& ex) {
    err << input << ": " << ex.what() << '\n';
    return kExitUnknown;
  }
}

inline int cmd_check(const std::string& input, const Options& opts, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  if (!valid_engine(opts.engine)) {
    err << "error: unknown engine '" << opts.engine << "'\n";
    return kExitUsage;
  }
  Encoded e;
  try {
    e = encode_file(input, opts);
  } catch (const Error& ex) {
    err << input << ": " << ex.what() << '\n';
    return kExitInput;
  }
  try {
    emit_dumps(e, opts, out);
    const EngineRun run = run_engines(e.problem, opts);
    if (run.verdict.answer == engine::Answer::Sat) {
      const auto trace = extract_trace(run.verdict, e.program, e.space, EncodeOptions{opts.return_check});
      out << "trace:\n";
      print_trace(out, trace);
    }
    make_report(input, run, e.ms).write(out);
    return exit_code(run.verdict.answer);
  } catch (const Error& ex) {
    err << input << ": " << ex.what() << '\n';
    return kExitUnknown;
  }
}

inline int cmd_selftest(std::ostream& out = std::cout, const SelftestHooks& hooks = {}) {
  const auto results = run_selftests(hooks);
  int failed = 0;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  out << (failed == 0 ? "selftest passed" : "selftest failed") << " (" << results.size() - failed << '/'
      << results.size() << ")\n";
  return failed == 0 ? kExitOk : 1;
}

}  // namespace bvreach::cli
