// pmq: analyze, simulate, optimize, sweep and validate power-managed
// queueing servers from scenario files.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmq/pmq.hpp"

namespace {

struct Args {
  std::string scenario;
  std::vector<std::string> sets;
  std::string out;
  std::string format = "csv";
  std::string seed;          // kept textual so range errors surface as ParseError
  std::string replications;
  std::string trace;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--scenario", a.scenario, "scenario file")->required();
  cmd->add_option("--set", a.sets, "override, key=value; repeatable");
  cmd->add_option("--out", a.out, "output directory (default $PMQ_OUT_DIR or ./out)");
  cmd->add_option("--format", a.format, "data file format")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--quiet", a.quiet, "suppress the console summary");
}

void add_sim_opts(CLI::App* cmd, Args& a) {
  cmd->add_option("--seed", a.seed, "root seed for replication streams");
  cmd->add_option("--replications", a.replications, "independent replications");
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  CLI::App app{"power-managed queueing server toolkit"};
  app.require_subcommand(1);

  CLI::App* analyze = app.add_subcommand("analyze", "closed-form metrics");
  CLI::App* simulate = app.add_subcommand("simulate", "discrete-event simulation");
  CLI::App* optimize = app.add_subcommand("optimize", "minimize power under a response budget");
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a grid of configurations");
  CLI::App* validate = app.add_subcommand("validate", "simulation vs closed form");
  for (CLI::App* cmd : {analyze, simulate, optimize, sweep, validate}) {
    add_common(cmd, args);
    add_sim_opts(cmd, args);
  }
  simulate->add_option("--trace", args.trace, "write a per-event CSV trace to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: ParseError: " << e.what() << "\n";
    return 2;
  }

  pmq::RunKind kind = pmq::RunKind::analyze;
  if (simulate->parsed()) kind = pmq::RunKind::simulate;
  if (optimize->parsed()) kind = pmq::RunKind::optimize;
  if (sweep->parsed()) kind = pmq::RunKind::sweep;
  if (validate->parsed()) kind = pmq::RunKind::validate;

  try {
    pmq::RunOptions opt;
    opt.overrides = args.sets;
    if (!args.out.empty()) {
      opt.out_dir = args.out;
    } else if (const char* env = std::getenv("PMQ_OUT_DIR"); env && *env) {
      opt.out_dir = env;
    } else {
      opt.out_dir = "out";
    }
    opt.json = args.format == "json";
    opt.quiet = args.quiet;
    if (!args.seed.empty())
      opt.seed = pmq::detail::parse_u64(args.seed, "--seed");
    if (!args.replications.empty())
      opt.replications = static_cast<std::uint32_t>(
          pmq::detail::parse_u64(args.replications, "--replications"));
    opt.trace_path = args.trace;

    pmq::Scenario sc = pmq::load_scenario(args.scenario);
    const pmq::RunArtifacts art = pmq::run_scenario(kind, sc, opt);
    const auto dir = pmq::write_artifacts(art, opt);
    if (!opt.quiet) {
      std::cout << art.summary;
      std::cout << "wrote: " << dir.string() << "\n";
    }
    return 0;
  } catch (const pmq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
