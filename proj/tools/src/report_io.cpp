#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mssg/analysis.hpp"
#include "mssg_cli/cli.hpp"

namespace mssg::cli {

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto pos = msg.find("] "); pos != std::string::npos) msg = msg.substr(pos + 2);
    throw ValidationError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

LoadedModel load_model(const std::string& path) {
  if (path.empty()) throw ValidationError("--model is required");
  nlohmann::json raw = read_json_file(path);
  try {
    MixtureModel model = MixtureModel::from_json(raw);
    return LoadedModel{std::move(raw), std::move(model)};
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::vector<double> parse_range(const std::string& range) {
  std::vector<double> parts;
  std::stringstream ss(range);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("--range: expected lo:hi:step, got \"" + range + "\"");
    }
  }
  if (parts.size() != 3) throw ValidationError("--range: expected lo:hi:step, got \"" + range + "\"");
  const double lo = parts[0];
  const double hi = parts[1];
  const double step = parts[2];
  if (!(hi >= lo)) throw ValidationError("--range: hi must not be below lo");
  if (hi == lo) return {lo};
  if (!(step > 0.0)) throw ValidationError("--range: step must be positive");
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 100000) throw ValidationError("--range: too many rows");
  std::vector<double> out;
  for (long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

nlohmann::json apply_param(const nlohmann::json& raw, const std::string& path, double value) {
  nlohmann::json j = raw;
  if (path == "beta" || path == "scale") {
    const double factor = path == "beta" ? value * value : value;
    if (!j.contains("terms") || !j["terms"].is_array())
      throw ValidationError("--param " + path + ": model has no terms array");
    for (auto& term : j["terms"])
      for (auto& entry : term.at("entries")) {
        if (!entry.contains("coeff") || !entry["coeff"].is_number())
          throw ValidationError("--param " + path + ": non-numeric coefficient");
        entry["coeff"] = entry["coeff"].get<double>() * factor;
      }
    return j;
  }
  nlohmann::json* node = &j;
  std::stringstream ss(path);
  std::string key;
  while (std::getline(ss, key, '.')) {
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw ValidationError("--param " + path + ": \"" + key + "\" is not an index");
      }
      if (idx >= node->size()) throw ValidationError("--param " + path + ": index out of range");
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      throw ValidationError("--param " + path + ": no field \"" + key + "\"");
    }
  }
  if (!node->is_number()) throw ValidationError("--param " + path + ": not a numeric field");
  *node = value;
  return j;
}

SolveConfig solve_config(const Options& opt) {
  SolveConfig c;
  c.k_max = opt.k_max;
  c.tol_B = opt.tol;
  c.multistart_seeds = opt.seeds;
  c.seed = opt.seed;
  c.merge_tol = opt.merge_tol;
  return c;
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json by_species(const MixtureModel& model, const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::object();
  for (int s = 0; s < model.num_species(); ++s) j[model.species()[s].name] = v[s];
  return j;
}

}  // namespace

nlohmann::json manifest(const std::string& subcommand, const Options& opt) {
  nlohmann::json overrides = {{"k_max", opt.k_max},   {"tol", opt.tol},
                              {"seeds", opt.seeds},   {"merge_tol", opt.merge_tol},
                              {"param", opt.param},   {"range", opt.range},
                              {"n", opt.n},           {"samples", opt.samples}};
  if (opt.variational) overrides["variational"] = *opt.variational;
  return {{"tool", "mssg"},
          {"version", "0.1.0"},
          {"subcommand", subcommand},
          {"model_path", opt.model_path.empty() ? opt.report_path : opt.model_path},
          {"output_path", opt.out_path},
          {"seed", opt.seed},
          {"overrides", overrides},
          {"timestamp", utc_timestamp()}};
}

nlohmann::json solve_report(const MixtureModel& model, const SolveReport& report,
                            const SolveConfig& config, double merge_tol) {
  nlohmann::json j;
  j["model_hash"] = model.hash();
  j["model"] = model.to_json();
  j["config"] = {{"k_max", config.k_max},
                 {"tol_B", config.tol_B},
                 {"tol_grad", config.tol_grad},
                 {"multistart_seeds", config.multistart_seeds},
                 {"max_iters", config.max_iters},
                 {"merge_tol", config.merge_tol},
                 {"seed", config.seed}};
  j["value"] = report.value;
  j["minimizer"] = pair_to_json(report.pair, model);
  j["b"] = by_species(model, report.b.b);
  j["a_value"] = report.a_value;
  j["residuals"] = residuals_to_json(report.residuals);
  j["classification"] = classification_to_json(classify_rsb(report.pair, model, merge_tol), model);
  j["h3_strict"] = report.strict_convexity;

  nlohmann::json bound;
  bound["qbar"] = report.bound.qbar;
  nlohmann::json u = nlohmann::json::object();
  for (int s = 0; s < model.num_species(); ++s) {
    const double v = report.bound.u[s];
    u[model.species()[s].name] = std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  }
  bound["u"] = u;
  j["support_bound"] = bound;

  nlohmann::json minima = nlohmann::json::array();
  for (const auto& lm : report.local_minima) {
    minima.push_back({{"value", lm.value},
                      {"minimizer", pair_to_json(lm.pair, model)},
                      {"converged", lm.converged},
                      {"iterations", lm.iterations},
                      {"classification",
                       classification_to_json(classify_rsb(lm.pair, model, merge_tol), model)}});
  }
  j["local_minima"] = minima;

  nlohmann::json trace = nlohmann::json::array();
  for (const auto& e : report.escalation)
    trace.push_back({{"k", e.k},
                     {"best_value", e.best_value},
                     {"atoms", e.atoms},
                     {"converged_starts", e.converged_starts},
                     {"starts", e.starts}});
  j["escalation"] = trace;
  return j;
}

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("report: missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace

VerifyOutcome verify_report(const nlohmann::json& report,
                            const std::optional<MixtureModel>& current) {
  if (!report.is_object() || report.empty()) throw ValidationError("report: empty or not an object");
  const MixtureModel model = MixtureModel::from_json(require(report, "model"));
  const auto& stored_hash = require(report, "model_hash");
  if (!stored_hash.is_string() || stored_hash.get<std::string>() != model.hash())
    throw ValidationError("report: model hash mismatch (embedded model was edited)");
  if (current && current->hash() != model.hash())
    throw ValidationError("report: model hash mismatch (model file changed since the solve)");

  const DiscretePair pair = pair_from_json(require(report, "minimizer"), model);
  const auto& jb = require(report, "b");
  BAssignment b;
  b.b.resize(model.num_species());
  for (int s = 0; s < model.num_species(); ++s) {
    const auto& name = model.species()[s].name;
    if (!jb.is_object() || !jb.contains(name) || !jb[name].is_number())
      throw ValidationError("report.b: missing species \"" + name + "\"");
    b.b[s] = jb[name].get<double>();
  }
  const bool strict = report.contains("h3_strict") && report["h3_strict"].is_boolean()
                          ? report["h3_strict"].get<bool>()
                          : check_convexity(model, ConvexityMode::H3Strict, 10).pass;

  VerifyOutcome out;
  nlohmann::json checks = nlohmann::json::array();
  auto check = [&](const std::string& name, double value, double threshold, bool advisory) {
    const bool ok = std::abs(value) <= threshold;
    checks.push_back({{"name", name},
                      {"value", value},
                      {"threshold", threshold},
                      {"pass", ok},
                      {"advisory", advisory}});
    return ok || advisory;
  };

  bool pass = true;
  try {
    const ResidualBlock block = compute_residuals(pair, model, b, strict);
    const ResidualThresholds thr;
    pass &= check("cs_identity", block.max_cs(), thr.identity, false);
    pass &= check("bridge", block.max_bridge(), thr.identity, false);
    pass &= check("parisi_a", block.max_parisi_a(), thr.identity, false);
    pass &= check("parisi_b", block.max_parisi_b(), thr.identity, !strict);
    pass &= check("a_minus_b", block.a_minus_b, thr.value_gap, false);
    if (report.contains("value") && report["value"].is_number())
      pass &= check("value_matches_B", report["value"].get<double>() - block.b_value, 1e-12, false);
    if (report.contains("residuals") && report["residuals"].is_object()) {
      const bool same = residuals_to_json(block) == report["residuals"];
      checks.push_back({{"name", "stored_residuals_reproduced"}, {"pass", same}, {"advisory", true}});
    }
  } catch (const ConstraintError& e) {
    checks.push_back({{"name", "constraint"}, {"pass", false}, {"message", e.what()}});
    pass = false;
  }
  out.pass = pass;
  out.summary = {{"pass", pass}, {"model_hash", model.hash()}, {"checks", checks}};
  return out;
}

}  // namespace mssg::cli
