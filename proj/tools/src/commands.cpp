#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "mssg/analysis.hpp"
#include "mssg/mc_oracle.hpp"
#include "mssg/parallel.hpp"
#include "mssg_cli/cli.hpp"

namespace mssg::cli {
namespace {

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
}

void emit(const Options& opt, const std::string& text, std::ostream& out) {
  if (opt.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(opt.out_path);
  if (!f) throw ValidationError(opt.out_path + ": cannot write");
  f << text;
}

std::string classes_string(const ClassificationReport& c, const MixtureModel& model) {
  std::string s;
  for (std::size_t i = 0; i < c.classes.size(); ++i) {
    if (i) s += '|';
    for (std::size_t j = 0; j < c.classes[i].size(); ++j) {
      if (j) s += '+';
      s += model.species()[c.classes[i][j]].name;
    }
  }
  return s;
}

std::string report_path_of(const Options& opt) {
  if (opt.report_path.empty()) throw ValidationError("a report file is required");
  return opt.report_path;
}

}  // namespace

int cmd_solve(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto loaded = load_model(opt.model_path);
    const SolveConfig config = solve_config(opt);
    const SolveReport report = minimize_B(loaded.model, config);
    nlohmann::json j = solve_report(loaded.model, report, config, opt.merge_tol);
    j["manifest"] = manifest("solve", opt);
    emit(opt, j.dump(2) + "\n", out);
    if (!opt.out_path.empty()) {
      out << std::setprecision(12) << "B = " << report.value << " (k = " << report.pair.num_atoms()
          << ", residuals " << (residuals_pass(report.residuals) ? "ok" : "above threshold")
          << ")\n";
    }
    if (!report.strict_convexity)
      err << "warning: Hessian of xi is not positive definite everywhere; "
             "Parisi identity (b) is advisory\n";
    return kOk;
  });
}

int cmd_verify(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const nlohmann::json report = read_json_file(report_path_of(opt));
    std::optional<MixtureModel> current;
    std::string source = opt.model_path;
    if (source.empty() && report.is_object() && report.contains("manifest")) {
      const auto& m = report["manifest"];
      if (m.contains("model_path") && m["model_path"].is_string()) {
        const std::string p = m["model_path"].get<std::string>();
        if (!p.empty() && p != opt.report_path && std::filesystem::exists(p)) source = p;
      }
    }
    if (!source.empty()) current = load_model(source).model;
    const VerifyOutcome outcome = verify_report(report, current);
    nlohmann::json summary = outcome.summary;
    summary["manifest"] = manifest("verify", opt);
    emit(opt, summary.dump(2) + "\n", out);
    if (!outcome.pass) err << "verify: residual thresholds not met\n";
    return outcome.pass ? kOk : kVerifyFail;
  });
}

int cmd_classify(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const nlohmann::json report = read_json_file(report_path_of(opt));
    if (!report.is_object() || !report.contains("model") || !report.contains("minimizer"))
      throw ValidationError("report: expected a solve report");
    const MixtureModel model = MixtureModel::from_json(report["model"]);
    nlohmann::json j;
    j["manifest"] = manifest("classify", opt);
    j["model_hash"] = model.hash();
    const DiscretePair best = pair_from_json(report["minimizer"], model);
    j["minimizer"] = classification_to_json(classify_rsb(best, model, opt.merge_tol), model);
    nlohmann::json minima = nlohmann::json::array();
    if (report.contains("local_minima"))
      for (const auto& lm : report["local_minima"]) {
        const DiscretePair pair = pair_from_json(lm.at("minimizer"), model);
        minima.push_back({{"value", lm.value("value", 0.0)},
                          {"classification",
                           classification_to_json(classify_rsb(pair, model, opt.merge_tol), model)}});
      }
    j["local_minima"] = minima;
    emit(opt, j.dump(2) + "\n", out);
    return kOk;
  });
}

int cmd_scan(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto loaded = load_model(opt.model_path);
    if (opt.param.empty()) throw ValidationError("--param is required");
    const std::vector<double> values = parse_range(opt.range.empty() ? "1:1:1" : opt.range);
    std::vector<MixtureModel> models;
    for (double v : values) {
      try {
        models.push_back(MixtureModel::from_json(apply_param(loaded.raw, opt.param, v)));
      } catch (const ValidationError& e) {
        std::ostringstream msg;
        msg << "--param " << opt.param << " = " << v << ": " << e.what();
        throw ValidationError(msg.str());
      }
    }
    SolveConfig config = solve_config(opt);
    config.threads = 1;
    std::vector<std::string> rows(values.size());
    parallel_for(values.size(), worker_count(), [&](std::size_t i) {
      const MixtureModel& model = models[i];
      const SolveReport r = minimize_B(model, config);
      const ClassificationReport c = classify_rsb(r.pair, model, opt.merge_tol);
      std::ostringstream row;
      row << std::setprecision(12) << values[i] << ',' << r.value;
      for (const auto& sp : c.species) row << ',' << sp.rsb_level;
      row << ',' << classes_string(c, model) << ',' << r.residuals.max_binding() << '\n';
      rows[i] = row.str();
    });
    std::ostringstream csv;
    csv << "param,value";
    for (const auto& sp : loaded.model.species()) csv << ",rsb_" << sp.name;
    csv << ",classes,max_residual\n";
    for (const auto& r : rows) csv << r;
    emit(opt, csv.str(), out);
    return kOk;
  });
}

int cmd_mc(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto loaded = load_model(opt.model_path);
    McConfig mc;
    mc.N = opt.n;
    mc.samples = opt.samples;
    mc.seed = opt.seed;
    const McEstimate est = estimate_F(loaded.model, mc);

    double variational = 0.0;
    std::string source = "provided";
    if (opt.variational) {
      variational = *opt.variational;
    } else {
      const MixtureModel emp = empirical_model(loaded.model, est.sizes);
      variational = minimize_B(emp, solve_config(opt)).value;
      source = "solved (empirical weights)";
    }
    nlohmann::json j;
    j["manifest"] = manifest("mc", opt);
    j["model_hash"] = loaded.model.hash();
    nlohmann::json lam = nlohmann::json::object();
    for (int s = 0; s < loaded.model.num_species(); ++s)
      lam[loaded.model.species()[s].name] = est.lambda_hat[s];
    j["estimate"] = {{"F", est.F},
                     {"standard_error", est.standard_error},
                     {"annealed_reference", est.annealed_reference},
                     {"field_reference", est.field_reference},
                     {"sizes", est.sizes},
                     {"lambda_hat", lam},
                     {"covariance_convention", est.covariance_convention},
                     {"N", mc.N},
                     {"samples", mc.samples},
                     {"batches", mc.batches}};
    j["variational"] = {{"value", variational}, {"source", source}};
    const double gap = est.F - variational;
    j["gap"] = gap;
    j["gap_in_standard_errors"] =
        est.standard_error > 0.0 ? nlohmann::json(gap / est.standard_error) : nlohmann::json(nullptr);
    emit(opt, j.dump(2) + "\n", out);
    return kOk;
  });
}

}  // namespace mssg::cli
