#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mssg/model.hpp"
#include "mssg/solver.hpp"

namespace mssg::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kVerifyFail = 3 };

struct Options {
  std::string model_path;
  std::string report_path;
  std::string out_path;
  int k_max = 64;
  double tol = 1e-8;
  int seeds = 16;
  std::uint64_t seed = 0;
  std::string param;
  std::string range;
  int n = 64;
  long samples = 200'000;
  std::optional<double> variational;
  double merge_tol = 1e-6;
};

/// Reads a JSON file; syntax errors are reported as path:line:column.
nlohmann::json read_json_file(const std::string& path);

struct LoadedModel {
  nlohmann::json raw;
  MixtureModel model;
};
LoadedModel load_model(const std::string& path);

/// "lo:hi:step" -> lo, lo+step, ..., up to hi (a single value when lo == hi).
std::vector<double> parse_range(const std::string& range);

/// Returns the model JSON with the scan parameter set. "beta" multiplies
/// every coefficient by value^2, "scale" by value; any other dotted path
/// (e.g. terms.0.entries.1.coeff) must name a numeric field.
nlohmann::json apply_param(const nlohmann::json& raw, const std::string& path, double value);

SolveConfig solve_config(const Options& opt);

nlohmann::json manifest(const std::string& subcommand, const Options& opt);

/// Full solve report: value, minimizer, b, residuals, classification,
/// local minima, escalation trace.
nlohmann::json solve_report(const MixtureModel& model, const SolveReport& report,
                            const SolveConfig& config, double merge_tol);

struct VerifyOutcome {
  bool pass = false;
  nlohmann::json summary;
};
/// Recomputes every residual from a stored report. Throws ValidationError for
/// unreadable or stale reports.
VerifyOutcome verify_report(const nlohmann::json& report, const std::optional<MixtureModel>& current);

int cmd_solve(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_verify(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_classify(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_scan(const Options& opt, std::ostream& out, std::ostream& err);
int cmd_mc(const Options& opt, std::ostream& out, std::ostream& err);

}  // namespace mssg::cli
