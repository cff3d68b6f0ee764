// bvreach: encode, solve and check reachability of error blocks in mini-IR
// programs.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "bvreach/cli.hpp"

namespace {

void add_engine_flags(CLI::App* cmd, bvreach::cli::Options& o) {
  cmd->add_option("--engine", o.engine, "inc, ic3 or both")
      ->check(CLI::IsMember({"inc", "ic3", "both"}))
      ->envname("BVREACH_ENGINE");
  cmd->add_option("--max-steps", o.max_steps, "step bound for the incremental engine")
      ->check(CLI::NonNegativeNumber)
      ->envname("BVREACH_MAX_STEPS");
  cmd->add_option("--timeout", o.timeout_s, "wall-clock budget in seconds, 0 for none")
      ->check(CLI::NonNegativeNumber)
      ->envname("BVREACH_TIMEOUT");
  cmd->add_option("--seed", o.seed, "solver seed")->envname("BVREACH_SEED");
}

void add_encode_flags(CLI::App* cmd, bvreach::cli::Options& o) {
  cmd->add_flag("--return-check", o.return_check, "treat a nonzero return value of main as an error")
      ->envname("BVREACH_RETURN_CHECK");
  cmd->add_flag("--dump-smt", o.dump_smt, "print I, U, G, T as SMT-LIB text")->envname("BVREACH_DUMP_SMT");
  cmd->add_flag("--dump-transitions", o.dump_transitions, "print one line per symbolic transition")
      ->envname("BVREACH_DUMP_TRANSITIONS");
  cmd->add_flag("--dump-state", o.dump_state, "print the state variable layout")->envname("BVREACH_DUMP_STATE");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = bvreach::cli;
  CLI::App app{"Unbounded reachability checker for mini-IR programs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "bvreach 1.0");

  cli::Options opts;
  std::string input;
  std::string output = "-";

  auto* encode = app.add_subcommand("encode", "encode a program as DimSpec");
  encode->add_option("input", input, "program (.ll)")->required();
  encode->add_option("-o,--output", output, "output path, - for stdout")->envname("BVREACH_OUTPUT");
  encode->add_option("--export-dimacs", opts.export_dimacs, "write the unrolled formula F_K as DIMACS instead")
      ->envname("BVREACH_EXPORT_DIMACS");
  add_encode_flags(encode, opts);

  auto* solve = app.add_subcommand("solve", "solve a DimSpec problem");
  solve->add_option("input", input, "DimSpec file")->required();
  add_engine_flags(solve, opts);

  auto* check = app.add_subcommand("check", "encode, solve and print a validated trace");
  check->add_option("input", input, "program (.ll)")->required();
  add_engine_flags(check, opts);
  add_encode_flags(check, opts);

  auto* selftest = app.add_subcommand("selftest", "run the exhaustive small-width checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*encode) return cli::cmd_encode(input, output, opts);
    if (*solve) return cli::cmd_solve(input, opts);
    if (*check) return cli::cmd_check(input, opts);
    if (*selftest) return cli::cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return cli::kExitUnknown;
  }
  return cli::kExitUsage;
}
