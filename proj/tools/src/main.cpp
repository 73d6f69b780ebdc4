#include <iostream>

#include <CLI11.hpp>

#include "mssg_cli/cli.hpp"

int main(int argc, char** argv) {
  using namespace mssg::cli;
  CLI::App app{"Free energy and symmetry breaking of multi-species spherical spin glasses"};
  app.require_subcommand(1);
  Options opt;
  std::optional<double> variational;

  auto add_solver_flags = [&](CLI::App* cmd) {
    cmd->add_option("--k-max", opt.k_max, "Largest number of atoms")->check(CLI::PositiveNumber);
    cmd->add_option("--tol", opt.tol, "Stop escalating k below this improvement of B")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seeds", opt.seeds, "Random starts per k")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", opt.seed, "Base seed");
    cmd->add_option("--merge-tol", opt.merge_tol, "Support merge tolerance")
        ->check(CLI::NonNegativeNumber);
  };

  auto* solve = app.add_subcommand("solve", "Minimize B and write a JSON report");
  solve->add_option("--model", opt.model_path, "Model JSON file")->required();
  solve->add_option("--out", opt.out_path, "Report path (stdout if omitted)");
  add_solver_flags(solve);

  auto* verify = app.add_subcommand("verify", "Recompute residuals of a stored report");
  verify->add_option("report", opt.report_path, "Report JSON file")->required();
  verify->add_option("--model", opt.model_path, "Model file to check the report hash against");
  verify->add_option("--out", opt.out_path, "Summary path (stdout if omitted)");

  auto* classify = app.add_subcommand("classify", "Classify the minimizers of a stored report");
  classify->add_option("report", opt.report_path, "Report JSON file")->required();
  classify->add_option("--out", opt.out_path, "Output path (stdout if omitted)");
  classify->add_option("--merge-tol", opt.merge_tol, "Support merge tolerance")
      ->check(CLI::NonNegativeNumber);

  auto* scan = app.add_subcommand("scan", "Solve along a parameter sweep and write CSV");
  scan->add_option("--model", opt.model_path, "Model JSON file")->required();
  scan->add_option("--param", opt.param, "beta, scale, or a dotted path such as terms.0.entries.0.coeff")
      ->required();
  scan->add_option("--range", opt.range, "lo:hi:step")->required();
  scan->add_option("--out", opt.out_path, "CSV path (stdout if omitted)");
  add_solver_flags(scan);

  auto* mc = app.add_subcommand("mc", "Monte Carlo estimate of F_N");
  mc->add_option("--model", opt.model_path, "Model JSON file")->required();
  mc->add_option("--n", opt.n, "Total number of spins")->check(CLI::PositiveNumber);
  mc->add_option("--samples", opt.samples, "Number of configurations")->check(CLI::PositiveNumber);
  mc->add_option("--variational", variational, "Variational value to compare against");
  mc->add_option("--out", opt.out_path, "Output path (stdout if omitted)");
  add_solver_flags(mc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  opt.variational = variational;

  if (solve->parsed()) return cmd_solve(opt, std::cout, std::cerr);
  if (verify->parsed()) return cmd_verify(opt, std::cout, std::cerr);
  if (classify->parsed()) return cmd_classify(opt, std::cout, std::cerr);
  if (scan->parsed()) return cmd_scan(opt, std::cout, std::cerr);
  return cmd_mc(opt, std::cout, std::cerr);
}
