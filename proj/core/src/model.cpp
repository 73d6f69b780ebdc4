#include "mssg/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <set>

namespace mssg {
namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

std::vector<std::vector<int>> distinct_permutations(std::vector<int> tuple) {
  std::sort(tuple.begin(), tuple.end());
  std::vector<std::vector<int>> out;
  do {
    out.push_back(tuple);
  } while (std::next_permutation(tuple.begin(), tuple.end()));
  return out;
}

std::string at(const std::string& path, const std::string& msg) {
  return path + ": " + msg;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                              const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError(at(path, std::string("missing field \"") + key + "\""));
  return obj.at(key);
}

double require_number(const nlohmann::json& obj, const char* key,
                      const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number())
    throw ValidationError(at(path + "." + key, "expected a number"));
  return v.get<double>();
}

}  // namespace

MixtureModel::MixtureModel(std::vector<Species> species,
                           std::vector<InteractionTerm> terms)
    : species_(std::move(species)), terms_(std::move(terms)) {
  const int n = num_species();
  if (n < 1) throw ValidationError("species: at least one species is required");

  std::set<std::string> names;
  double lambda_sum = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto& sp = species_[s];
    const std::string path = "species[" + std::to_string(s) + "]";
    if (sp.name.empty()) throw ValidationError(at(path + ".name", "empty name"));
    if (!names.insert(sp.name).second)
      throw ValidationError(at(path + ".name", "duplicate species \"" + sp.name + "\""));
    if (!std::isfinite(sp.lambda) || sp.lambda <= 0.0 || sp.lambda > 1.0)
      throw ValidationError(at(path + ".lambda", "must lie in (0,1]"));
    if (!std::isfinite(sp.h) || sp.h < 0.0)
      throw ValidationError(at(path + ".h", "must be finite and >= 0"));
    lambda_sum += sp.lambda;
  }
  if (std::abs(lambda_sum - 1.0) > 1e-12)
    throw ValidationError("species: lambda weights sum to " +
                          std::to_string(lambda_sum) + ", expected 1");

  std::set<int> degrees;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& term = terms_[i];
    const std::string path = "terms[" + std::to_string(i) + "]";
    if (term.p < 1) throw ValidationError(at(path + ".p", "degree must be >= 1"));
    if (!degrees.insert(term.p).second)
      throw ValidationError(at(path + ".p", "duplicate degree " + std::to_string(term.p)));
    for (const auto& [tuple, c] : term.coefficients) {
      if (static_cast<int>(tuple.size()) != term.p)
        throw ValidationError(at(path, "tuple length differs from p"));
      for (int s : tuple)
        if (s < 0 || s >= n) throw ValidationError(at(path, "species index out of range"));
      if (!std::isfinite(c) || c < 0.0)
        throw ValidationError(at(path, "coefficients must be finite and >= 0"));
      for (const auto& perm : distinct_permutations(tuple)) {
        auto it = term.coefficients.find(perm);
        if (it == term.coefficients.end() || it->second != c)
          throw ValidationError(at(path, "coefficient tensor is not symmetric"));
      }
    }
  }
  std::sort(terms_.begin(), terms_.end(),
            [](const InteractionTerm& a, const InteractionTerm& b) { return a.p < b.p; });

  lambda_.resize(n);
  field_.resize(n);
  for (int s = 0; s < n; ++s) {
    lambda_[s] = species_[s].lambda;
    field_[s] = species_[s].h;
  }
  build_monomials();
}

void MixtureModel::build_monomials() {
  const int n = num_species();
  std::map<std::vector<int>, double> acc;
  for (const auto& term : terms_) {
    for (const auto& [tuple, c] : term.coefficients) {
      if (c == 0.0) continue;
      std::vector<int> exps(n, 0);
      double coeff = c;
      for (int s : tuple) {
        ++exps[s];
        coeff *= lambda_[s];
      }
      acc[exps] += coeff;
    }
  }
  monomials_.clear();
  for (auto& [exps, c] : acc) monomials_.push_back({exps, c});
}

MixtureModel MixtureModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("model: expected a JSON object");
  const auto& jspecies = require(j, "species", "model");
  if (!jspecies.is_array()) throw ValidationError("species: expected an array");

  std::vector<Species> species;
  for (std::size_t s = 0; s < jspecies.size(); ++s) {
    const std::string path = "species[" + std::to_string(s) + "]";
    const auto& js = jspecies[s];
    const auto& name = require(js, "name", path);
    if (!name.is_string()) throw ValidationError(at(path + ".name", "expected a string"));
    Species sp;
    sp.name = name.get<std::string>();
    sp.lambda = require_number(js, "lambda", path);
    sp.h = js.contains("h") ? require_number(js, "h", path) : 0.0;
    species.push_back(std::move(sp));
  }
  auto index_of = [&](const std::string& name) -> int {
    for (std::size_t s = 0; s < species.size(); ++s)
      if (species[s].name == name) return static_cast<int>(s);
    return -1;
  };

  std::vector<InteractionTerm> terms;
  if (j.contains("terms")) {
    const auto& jterms = j.at("terms");
    if (!jterms.is_array()) throw ValidationError("terms: expected an array");
    for (std::size_t i = 0; i < jterms.size(); ++i) {
      const std::string path = "terms[" + std::to_string(i) + "]";
      const auto& jt = jterms[i];
      const auto& jp = require(jt, "p", path);
      if (!jp.is_number_integer()) throw ValidationError(at(path + ".p", "expected an integer"));
      InteractionTerm term;
      term.p = jp.get<int>();
      if (term.p < 1) throw ValidationError(at(path + ".p", "degree must be >= 1"));
      const auto& entries = require(jt, "entries", path);
      if (!entries.is_array()) throw ValidationError(at(path + ".entries", "expected an array"));
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const std::string epath = path + ".entries[" + std::to_string(e) + "]";
        const auto& jtuple = require(entries[e], "tuple", epath);
        if (!jtuple.is_array() || static_cast<int>(jtuple.size()) != term.p)
          throw ValidationError(at(epath + ".tuple", "expected " + std::to_string(term.p) +
                                                         " species names"));
        std::vector<int> tuple;
        for (const auto& jn : jtuple) {
          if (!jn.is_string()) throw ValidationError(at(epath + ".tuple", "expected strings"));
          const int s = index_of(jn.get<std::string>());
          if (s < 0)
            throw ValidationError(at(epath + ".tuple", "unknown species \"" +
                                                           jn.get<std::string>() + "\""));
          tuple.push_back(s);
        }
        const double c = require_number(entries[e], "coeff", epath);
        if (!std::isfinite(c) || c < 0.0)
          throw ValidationError(at(epath + ".coeff", "must be finite and >= 0"));
        for (const auto& perm : distinct_permutations(tuple)) {
          if (!term.coefficients.emplace(perm, c).second)
            throw ValidationError(at(epath + ".tuple", "orbit listed more than once"));
        }
      }
      terms.push_back(std::move(term));
    }
  }
  return MixtureModel(std::move(species), std::move(terms));
}

nlohmann::json MixtureModel::to_json() const {
  nlohmann::json j;
  j["species"] = nlohmann::json::array();
  for (const auto& sp : species_)
    j["species"].push_back({{"name", sp.name}, {"lambda", sp.lambda}, {"h", sp.h}});
  j["terms"] = nlohmann::json::array();
  for (const auto& term : terms_) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [tuple, c] : term.coefficients) {
      if (!std::is_sorted(tuple.begin(), tuple.end())) continue;
      nlohmann::json names = nlohmann::json::array();
      for (int s : tuple) names.push_back(species_[s].name);
      entries.push_back({{"tuple", names}, {"coeff", c}});
    }
    j["terms"].push_back({{"p", term.p}, {"entries", entries}});
  }
  return j;
}

std::string MixtureModel::hash() const {
  const std::string text = to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int MixtureModel::species_index(std::string_view name) const {
  for (int s = 0; s < num_species(); ++s)
    if (species_[s].name == name) return s;
  return -1;
}

double MixtureModel::coefficient(const std::vector<int>& tuple) const {
  for (const auto& term : terms_) {
    if (term.p != static_cast<int>(tuple.size())) continue;
    auto it = term.coefficients.find(tuple);
    return it == term.coefficients.end() ? 0.0 : it->second;
  }
  return 0.0;
}

void MixtureModel::check_domain(const Eigen::VectorXd& q) const {
  if (q.size() != num_species())
    throw std::domain_error("overlap vector has wrong dimension");
  for (Eigen::Index s = 0; s < q.size(); ++s)
    if (!(q[s] >= 0.0 && q[s] <= 1.0))
      throw std::domain_error("overlap outside [0,1]^n");
}

double MixtureModel::xi(const Eigen::VectorXd& q) const {
  check_domain(q);
  double total = 0.0;
  for (const auto& mono : monomials_) {
    double v = mono.coeff;
    for (int s = 0; s < num_species(); ++s) v *= ipow(q[s], mono.exponents[s]);
    total += v;
  }
  return total;
}

Eigen::VectorXd MixtureModel::gradient(const Eigen::VectorXd& q) const {
  check_domain(q);
  const int n = num_species();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (const auto& mono : monomials_) {
    for (int s = 0; s < n; ++s) {
      const int a = mono.exponents[s];
      if (a == 0) continue;
      double v = mono.coeff * a;
      for (int t = 0; t < n; ++t)
        v *= ipow(q[t], t == s ? a - 1 : mono.exponents[t]);
      g[s] += v;
    }
  }
  return g;
}

Eigen::VectorXd MixtureModel::xi_species(const Eigen::VectorXd& q) const {
  return gradient(q).cwiseQuotient(lambda_);
}

double MixtureModel::theta(const Eigen::VectorXd& q) const {
  return q.dot(gradient(q)) - xi(q);
}

Eigen::MatrixXd MixtureModel::hessian(const Eigen::VectorXd& q) const {
  check_domain(q);
  const int n = num_species();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n, n);
  for (const auto& mono : monomials_) {
    for (int s = 0; s < n; ++s) {
      for (int t = s; t < n; ++t) {
        const int as = mono.exponents[s];
        const int at = mono.exponents[t];
        double v = mono.coeff;
        if (s == t) {
          if (as < 2) continue;
          v *= as * (as - 1);
        } else {
          if (as == 0 || at == 0) continue;
          v *= as * at;
        }
        for (int r = 0; r < n; ++r) {
          int e = mono.exponents[r];
          if (r == s) --e;
          if (r == t) --e;
          v *= ipow(q[r], e);
        }
        hess(s, t) += v;
        if (s != t) hess(t, s) += v;
      }
    }
  }
  return hess;
}

double MixtureModel::cross_derivative(const Eigen::VectorXd& q, int s, int t) const {
  return hessian(q)(s, t) / lambda_[s];
}

std::vector<int> MixtureModel::external_field_species() const {
  std::vector<int> out;
  for (int s = 0; s < num_species(); ++s)
    if (field_[s] * field_[s] > 0.0) out.push_back(s);
  return out;
}

MixtureModel MixtureModel::scaled(double factor) const {
  if (!std::isfinite(factor) || factor < 0.0)
    throw ValidationError("scale factor must be finite and >= 0");
  auto terms = terms_;
  for (auto& term : terms)
    for (auto& [tuple, c] : term.coefficients) c *= factor;
  return MixtureModel(species_, std::move(terms));
}

MixtureModel MixtureModel::with_coefficient(const std::vector<int>& tuple,
                                            double value) const {
  auto terms = terms_;
  const int p = static_cast<int>(tuple.size());
  auto it = std::find_if(terms.begin(), terms.end(),
                         [p](const InteractionTerm& t) { return t.p == p; });
  if (it == terms.end()) {
    terms.push_back(InteractionTerm{p, {}});
    it = terms.end() - 1;
  }
  for (const auto& perm : distinct_permutations(tuple)) it->coefficients[perm] = value;
  return MixtureModel(species_, std::move(terms));
}

MixtureModel MixtureModel::with_field(int s, double h) const {
  auto species = species_;
  species.at(s).h = h;
  return MixtureModel(std::move(species), terms_);
}

ConvexityResult check_convexity(const MixtureModel& model, ConvexityMode mode,
                                int grid_resolution) {
  if (grid_resolution < 2) throw std::invalid_argument("grid_resolution must be >= 2");
  const int n = model.num_species();
  const int g = grid_resolution;

  ConvexityResult result;
  result.min_eigenvalue = std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();

  // Odometer over the grid, visited from 1 down to 0 in every coordinate.
  std::vector<int> idx(n, g);
  Eigen::VectorXd q(n);
  for (;;) {
    bool is_origin = true;
    for (int s = 0; s < n; ++s) {
      q[s] = static_cast<double>(idx[s]) / g;
      if (idx[s] != 0) is_origin = false;
    }
    const Eigen::MatrixXd hess = model.hessian(q);
    const double ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                          hess, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
    const bool counts = mode == ConvexityMode::H3 || !is_origin;
    if (counts) {
      result.min_eigenvalue = std::min(result.min_eigenvalue, ev);
      const bool bad = mode == ConvexityMode::H3 ? ev < -1e-10 : !(ev > 1e-10);
      if (bad && ev < worst) {
        worst = ev;
        result.pass = false;
        result.witness = q;
      }
    }
    int s = n - 1;
    while (s >= 0 && idx[s] == 0) {
      idx[s] = g;
      --s;
    }
    if (s < 0) break;
    --idx[s];
  }
  return result;
}

}  // namespace mssg
