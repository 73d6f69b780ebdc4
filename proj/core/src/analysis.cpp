#include "mssg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mssg {

Eigen::MatrixXd cs_identity_residual(const DiscretePair& pair, const MixtureModel& model) {
  const int k = pair.num_atoms();
  const int n = pair.num_species();
  const Eigen::MatrixXd delta = delta_at_atoms(pair);
  const Eigen::MatrixXd& q = pair.points();
  Eigen::MatrixXd res(n, k);
  for (int j = 0; j < k; ++j) {
    const Eigen::VectorXd xs = model.xi_species(q.col(j));
    for (int s = 0; s < n; ++s) res(s, j) = xs[s];
  }
  for (int s = 0; s < n; ++s) {
    const double h2 = model.field()[s] * model.field()[s];
    // zero-mass segment [0, q_1] has constant Delta_1, then each full segment
    // contributes (q_{r+1} - q_r) / (Delta_r Delta_{r+1})
    double rhs = q(s, 0) / (delta(s, 1) * delta(s, 1));
    for (int j = 0; j < k; ++j) {
      if (j > 0) rhs += (q(s, j) - q(s, j - 1)) / (delta(s, j) * delta(s, j + 1));
      res(s, j) += h2 - rhs;
    }
  }
  return res;
}

namespace {

struct ParisiPieces {
  Eigen::MatrixXd xs;
  Eigen::MatrixXd d;
};

ParisiPieces parisi_pieces(const DiscretePair& pair, const MixtureModel& model,
                           const BAssignment& b) {
  const int k = pair.num_atoms();
  const Eigen::MatrixXd ext = pair.extended_points();
  ParisiPieces p;
  p.xs.resize(pair.num_species(), k + 2);
  for (int r = 0; r <= k + 1; ++r) p.xs.col(r) = model.xi_species(ext.col(r));
  p.d = d_at_atoms(pair, model);
  if (b.b.size() != pair.num_species()) throw std::invalid_argument("b has wrong dimension");
  for (int s = 0; s < pair.num_species(); ++s)
    if (!(b.b[s] > p.d(s, 0))) throw ConstraintError("b below d(0)");
  return p;
}

}  // namespace

ParisiResiduals parisi_identity_residuals(const DiscretePair& pair, const MixtureModel& model,
                                          const BAssignment& b) {
  const int k = pair.num_atoms();
  const int n = pair.num_species();
  const auto p = parisi_pieces(pair, model, b);
  ParisiResiduals out;
  out.a.resize(n);
  out.b.resize(n, k);
  for (int s = 0; s < n; ++s) {
    const double bs = b.b[s];
    const double g0 = bs - p.d(s, 0);
    const double h2 = model.field()[s] * model.field()[s];
    const double start = (h2 + p.xs(s, 0)) / (g0 * g0);
    // running value of int_0^{q_r} (xi^s o Phi)' / (b - d)^2
    double integral = (p.xs(s, 1) - p.xs(s, 0)) / (g0 * g0);
    for (int r = 1; r <= k; ++r) {
      out.b(s, r - 1) = pair.points()(s, r - 1) - (start + integral);
      integral += (p.xs(s, r + 1) - p.xs(s, r)) / ((bs - p.d(s, r)) * (bs - p.d(s, r + 1)));
    }
    out.a[s] = 1.0 - 1.0 / bs - start - integral;
  }
  return out;
}

Eigen::MatrixXd bridge_residual(const DiscretePair& pair, const MixtureModel& model,
                                const BAssignment& b) {
  const int k = pair.num_atoms();
  const int n = pair.num_species();
  const auto p = parisi_pieces(pair, model, b);
  const Eigen::MatrixXd delta = delta_at_atoms(pair);
  Eigen::MatrixXd res(n, k);
  for (int s = 0; s < n; ++s)
    for (int r = 1; r <= k; ++r) res(s, r - 1) = b.b[s] - p.d(s, r) - 1.0 / delta(s, r);
  return res;
}

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

double ResidualBlock::max_cs() const { return max_abs(cs); }
double ResidualBlock::max_bridge() const { return max_abs(bridge); }
double ResidualBlock::max_parisi_a() const { return max_abs(parisi_a); }
double ResidualBlock::max_parisi_b() const { return max_abs(parisi_b); }

double ResidualBlock::max_binding() const {
  double worst = std::max({max_cs(), max_bridge(), max_parisi_a()});
  if (!parisi_b_advisory) worst = std::max(worst, max_parisi_b());
  return worst;
}

ResidualBlock compute_residuals(const DiscretePair& pair, const MixtureModel& model,
                                const BAssignment& b, bool strict_convexity) {
  ResidualBlock block;
  block.cs = cs_identity_residual(pair, model);
  const auto parisi = parisi_identity_residuals(pair, model, b);
  block.parisi_a = parisi.a;
  block.parisi_b = parisi.b;
  block.bridge = bridge_residual(pair, model, b);
  block.a_value = eval_A(pair, model, b);
  block.b_value = eval_B(pair, model);
  block.a_minus_b = block.a_value - block.b_value;
  block.parisi_b_advisory = !strict_convexity;
  return block;
}

bool residuals_pass(const ResidualBlock& block, const ResidualThresholds& thresholds) {
  return block.max_binding() <= thresholds.identity &&
         std::abs(block.a_minus_b) <= thresholds.value_gap;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[j] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json residuals_to_json(const ResidualBlock& block) {
  nlohmann::json j;
  j["cs_identity"] = matrix_json(block.cs);
  j["parisi_a"] = std::vector<double>(block.parisi_a.data(),
                                      block.parisi_a.data() + block.parisi_a.size());
  j["parisi_b"] = matrix_json(block.parisi_b);
  j["parisi_b_advisory"] = block.parisi_b_advisory;
  j["bridge"] = matrix_json(block.bridge);
  j["a_value"] = block.a_value;
  j["b_value"] = block.b_value;
  j["a_minus_b"] = block.a_minus_b;
  j["max_cs"] = block.max_cs();
  j["max_bridge"] = block.max_bridge();
  j["max_parisi_a"] = block.max_parisi_a();
  j["max_parisi_b"] = block.max_parisi_b();
  j["pass"] = residuals_pass(block);
  return j;
}

std::string to_string(HypothesisStatus status) {
  switch (status) {
    case HypothesisStatus::QuadraticCoupling: return "QuadraticCoupling";
    case HypothesisStatus::GridVerified: return "GridVerified";
    case HypothesisStatus::VerifiedAtMinimizer: return "VerifiedAtMinimizer";
    case HypothesisStatus::NotVerified: return "NotVerified";
  }
  return "NotVerified";
}

namespace {

// Region of the sufficient condition: q^s or min over the group positive, and
// every field-carrying species positive.
bool in_region(const Eigen::VectorXd& q, int s, const std::vector<int>& group,
               const std::vector<int>& ext, double zero) {
  double group_min = 1.0;
  for (int t : group) group_min = std::min(group_min, q[t]);
  if (!(q[s] > zero || group_min > zero)) return false;
  return std::all_of(ext.begin(), ext.end(), [&](int r) { return q[r] > zero; });
}

bool condition_holds(const MixtureModel& model, const Eigen::VectorXd& q, int s,
                     const std::vector<int>& group, double positivity) {
  double best = -1.0;
  for (int t : group) best = std::max(best, model.cross_derivative(q, s, t));
  return best > positivity;
}

bool grid_verified(const MixtureModel& model, int s, const std::vector<int>& group,
                   const HypothesisOptions& opt) {
  const int n = model.num_species();
  long g = std::lround(1.0 / opt.grid_step);
  auto points = [&](long res) {
    double total = 1.0;
    for (int i = 0; i < n; ++i) total *= static_cast<double>(res + 1);
    return total;
  };
  while (g > 2 && points(g) > static_cast<double>(opt.max_grid_points)) g /= 2;
  const auto ext = model.external_field_species();
  std::vector<long> idx(n, 0);
  Eigen::VectorXd q(n);
  while (true) {
    for (int i = 0; i < n; ++i) q[i] = static_cast<double>(idx[i]) / static_cast<double>(g);
    if (in_region(q, s, group, ext, 0.0) && !condition_holds(model, q, s, group, opt.positivity))
      return false;
    int i = 0;
    while (i < n && ++idx[i] > g) idx[i++] = 0;
    if (i == n) break;
  }
  return true;
}

}  // namespace

HypothesisStatus check_simultaneity_hypothesis(const MixtureModel& model, int s,
                                               const std::vector<int>& group,
                                               const DiscretePair* minimizer,
                                               const HypothesisOptions& options) {
  const int n = model.num_species();
  if (s < 0 || s >= n || group.empty())
    throw std::invalid_argument("simultaneity hypothesis: bad species selection");
  for (int t : group)
    if (t < 0 || t >= n || t == s)
      throw std::invalid_argument("simultaneity hypothesis: bad species selection");

  for (int t : group)
    if (model.coefficient({s, t}) > 0.0) return HypothesisStatus::QuadraticCoupling;
  if (grid_verified(model, s, group, options)) return HypothesisStatus::GridVerified;
  if (minimizer) {
    const auto ext = model.external_field_species();
    bool ok = true;
    for (int j = 0; j < minimizer->num_atoms() && ok; ++j) {
      if (minimizer->mass(j) < 1e-10) continue;
      const Eigen::VectorXd q = minimizer->atom(j);
      if (in_region(q, s, group, ext, options.zero_tol))
        ok = condition_holds(model, q, s, group, options.positivity);
    }
    if (ok) return HypothesisStatus::VerifiedAtMinimizer;
  }
  return HypothesisStatus::NotVerified;
}

bool ClassificationReport::simultaneous(int s, int t) const {
  for (const auto& c : classes)
    if (std::find(c.begin(), c.end(), s) != c.end())
      return std::find(c.begin(), c.end(), t) != c.end();
  return false;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<std::vector<int>> classes() {
    std::vector<std::vector<int>> out;
    std::vector<int> slot(parent.size(), -1);
    for (int i = 0; i < static_cast<int>(parent.size()); ++i) {
      const int root = find(i);
      if (slot[root] < 0) {
        slot[root] = static_cast<int>(out.size());
        out.emplace_back();
      }
      out[slot[root]].push_back(i);
    }
    return out;
  }
};

}  // namespace

ClassificationReport classify_rsb(const DiscretePair& pair, const MixtureModel& model,
                                  double merge_tol, bool is_minimizer) {
  const int n = pair.num_species();
  ClassificationReport report;
  report.is_minimizer = is_minimizer;

  std::vector<std::vector<int>> groups(n);
  for (int s = 0; s < n; ++s) {
    SpeciesSupport sp;
    sp.name = model.species()[s].name;
    sp.support = pushforward_support(pair, s, merge_tol);
    sp.rsb_level = static_cast<int>(sp.support.size()) - 1;
    sp.label = sp.rsb_level == 0 ? "RS" : std::to_string(sp.rsb_level) + "-RSB";
    report.species.push_back(std::move(sp));
    groups[s] = support_groups(pair, s, merge_tol);
  }

  // Two species are simultaneous exactly when they split the atoms into the
  // same consecutive blocks: then Phi^s strictly increases between two atoms
  // iff Phi^t does.
  UnionFind observed(n);
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t)
      if (groups[s] == groups[t]) observed.unite(s, t);
  report.classes = observed.classes();

  for (const auto& c : report.classes) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        SupportBijection bij;
        bij.s = c[i];
        bij.t = c[j];
        const auto& a = report.species[bij.s].support;
        const auto& b = report.species[bij.t].support;
        bij.mass_preserving = a.size() == b.size();
        for (std::size_t g = 0; g < std::min(a.size(), b.size()); ++g) {
          bij.pairs.push_back({a[g].value, b[g].value, a[g].mass});
          if (std::abs(a[g].mass - b[g].mass) > 1e-12) bij.mass_preserving = false;
          if (g > 0 && !(a[g].value > a[g - 1].value && b[g].value > b[g - 1].value))
            bij.increasing = false;
        }
        report.bijections.push_back(std::move(bij));
      }
    }
  }

  UnionFind implied(n);
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      PairHypothesis ph{s, t, check_simultaneity_hypothesis(model, s, {t}, &pair)};
      if (ph.status != HypothesisStatus::NotVerified) implied.unite(s, t);
      report.hypotheses.push_back(ph);
    }
  }
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& c : implied.classes()) {
      for (int s = 0; s < n && !grew; ++s) {
        if (std::find(c.begin(), c.end(), s) != c.end() || c.size() < 2) continue;
        if (check_simultaneity_hypothesis(model, s, c, &pair) != HypothesisStatus::NotVerified)
          grew = implied.unite(s, c.front());
      }
      if (grew) break;
    }
  }
  report.implied_classes = implied.classes();
  return report;
}

nlohmann::json classification_to_json(const ClassificationReport& report,
                                      const MixtureModel& model) {
  auto names = [&](const std::vector<int>& ids) {
    std::vector<std::string> out;
    for (int i : ids) out.push_back(model.species()[i].name);
    return out;
  };
  nlohmann::json j;
  j["is_minimizer"] = report.is_minimizer;
  nlohmann::json species = nlohmann::json::array();
  for (const auto& sp : report.species) {
    nlohmann::json support = nlohmann::json::array();
    for (const auto& p : sp.support) support.push_back({{"value", p.value}, {"mass", p.mass}});
    species.push_back({{"name", sp.name},
                       {"support", support},
                       {"rsb_level", sp.rsb_level},
                       {"label", sp.label}});
  }
  j["species"] = species;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : report.classes) classes.push_back(names(c));
  j["simultaneity_classes"] = classes;
  nlohmann::json bij = nlohmann::json::array();
  for (const auto& b : report.bijections) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : b.pairs) pairs.push_back(p);
    bij.push_back({{"s", model.species()[b.s].name},
                   {"t", model.species()[b.t].name},
                   {"pairs", pairs},
                   {"increasing", b.increasing},
                   {"mass_preserving", b.mass_preserving}});
  }
  j["bijections"] = bij;
  nlohmann::json hyp = nlohmann::json::array();
  for (const auto& h : report.hypotheses)
    hyp.push_back({{"s", model.species()[h.s].name},
                   {"t", model.species()[h.t].name},
                   {"status", to_string(h.status)}});
  j["hypotheses"] = hyp;
  nlohmann::json implied = nlohmann::json::array();
  for (const auto& c : report.implied_classes) implied.push_back(names(c));
  j["implied_classes"] = implied;
  return j;
}

}  // namespace mssg
