#include "mssg/orderparam.hpp"

#include <algorithm>
#include <cmath>

namespace mssg {

DiscretePair::DiscretePair(Eigen::VectorXd cumulative_weights, Eigen::MatrixXd points)
    : m_(std::move(cumulative_weights)), points_(std::move(points)) {
  const Eigen::Index k = m_.size();
  if (k < 1) throw std::invalid_argument("pair needs at least one atom");
  if (points_.cols() != k)
    throw std::invalid_argument("point matrix must have one column per atom");
  if (points_.rows() < 1) throw std::invalid_argument("pair needs at least one species");
  if (std::abs(m_[k - 1] - 1.0) > 1e-12)
    throw std::invalid_argument("cumulative weights must end at 1");
  m_[k - 1] = 1.0;
  double prev = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(m_[j] > prev)) throw std::invalid_argument("cumulative weights must increase strictly");
    prev = m_[j];
  }
  for (Eigen::Index s = 0; s < points_.rows(); ++s) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double v = points_(s, j);
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("points must lie in [0,1]");
      if (j > 0 && v < points_(s, j - 1))
        throw std::invalid_argument("points must be nondecreasing in the atom index");
    }
  }
}

DiscretePair DiscretePair::point_mass(const Eigen::VectorXd& atom) {
  Eigen::VectorXd m(1);
  m[0] = 1.0;
  return DiscretePair(m, atom);
}

double DiscretePair::location(int j, const Eigen::VectorXd& lambda) const {
  return lambda.dot(points_.col(j));
}

bool DiscretePair::satisfies_gap() const {
  return (points_.col(num_atoms() - 1).array() < 1.0).all();
}

Eigen::MatrixXd DiscretePair::extended_points() const {
  const int k = num_atoms();
  Eigen::MatrixXd ext(num_species(), k + 2);
  ext.col(0).setZero();
  ext.middleCols(1, k) = points_;
  ext.col(k + 1).setOnes();
  return ext;
}

DiscretePair DiscretePair::split_atom(int j, double fraction) const {
  if (j < 0 || j >= num_atoms()) throw std::out_of_range("atom index");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must lie in (0,1)");
  const int k = num_atoms();
  Eigen::VectorXd m(k + 1);
  Eigen::MatrixXd pts(num_species(), k + 1);
  const double lower = j == 0 ? 0.0 : m_[j - 1];
  for (int i = 0, o = 0; i < k; ++i, ++o) {
    if (i == j) {
      m[o] = lower + fraction * mass(j);
      pts.col(o) = points_.col(i);
      ++o;
    }
    m[o] = m_[i];
    pts.col(o) = points_.col(i);
  }
  return DiscretePair(m, pts);
}

DiscretePair DiscretePair::refine(const Eigen::VectorXd& grid) const {
  Eigen::MatrixXd pts(num_species(), grid.size());
  int j = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    while (j < num_atoms() && m_[j] < grid[i] - 1e-14) ++j;
    if (j == num_atoms()) throw std::invalid_argument("refinement grid exceeds 1");
    pts.col(i) = points_.col(j);
  }
  for (int a = 0; a < num_atoms(); ++a) {
    const bool present = std::any_of(grid.data(), grid.data() + grid.size(),
                                     [&](double z) { return std::abs(z - m_[a]) <= 1e-14; });
    if (!present) throw std::invalid_argument("refinement grid must contain every weight");
  }
  return DiscretePair(grid, pts);
}

Eigen::MatrixXd delta_at_atoms(const DiscretePair& pair) {
  const int k = pair.num_atoms();
  const Eigen::MatrixXd ext = pair.extended_points();
  const Eigen::VectorXd& m = pair.weights();
  Eigen::MatrixXd delta(pair.num_species(), k + 2);
  delta.col(k + 1).setZero();
  for (int r = k; r >= 1; --r)
    delta.col(r) = delta.col(r + 1) + m[r - 1] * (ext.col(r + 1) - ext.col(r));
  delta.col(0) = delta.col(1);
  return delta;
}

Eigen::MatrixXd d_at_atoms(const DiscretePair& pair, const MixtureModel& model) {
  const int k = pair.num_atoms();
  const Eigen::MatrixXd ext = pair.extended_points();
  const Eigen::VectorXd& m = pair.weights();
  Eigen::MatrixXd xs(pair.num_species(), k + 2);
  for (int r = 0; r <= k + 1; ++r) xs.col(r) = model.xi_species(ext.col(r));
  Eigen::MatrixXd d(pair.num_species(), k + 2);
  d.col(k + 1).setZero();
  for (int r = k; r >= 1; --r) d.col(r) = d.col(r + 1) + m[r - 1] * (xs.col(r + 1) - xs.col(r));
  d.col(0) = d.col(1);
  return d;
}

std::vector<int> support_groups(const DiscretePair& pair, int s, double merge_tol,
                                double min_mass) {
  std::vector<int> groups(pair.num_atoms(), -1);
  int current = -1;
  double first = 0.0;
  for (int j = 0; j < pair.num_atoms(); ++j) {
    if (pair.mass(j) < min_mass) continue;
    const double v = pair.points()(s, j);
    if (current < 0 || v - first > merge_tol) {
      ++current;
      first = v;
    }
    groups[j] = current;
  }
  return groups;
}

std::vector<SupportPoint> pushforward_support(const DiscretePair& pair, int s,
                                              double merge_tol, double min_mass) {
  const auto groups = support_groups(pair, s, merge_tol, min_mass);
  std::vector<SupportPoint> out;
  for (int j = 0; j < pair.num_atoms(); ++j) {
    if (groups[j] < 0) continue;
    if (static_cast<int>(out.size()) <= groups[j]) out.push_back({0.0, 0.0});
    auto& sp = out[groups[j]];
    sp.value += pair.mass(j) * pair.points()(s, j);
    sp.mass += pair.mass(j);
  }
  for (auto& sp : out) sp.value /= sp.mass;
  return out;
}

double pseudometric(const DiscretePair& a, const DiscretePair& b) {
  if (a.num_species() != b.num_species())
    throw std::invalid_argument("pseudometric: species sets differ");
  std::vector<double> grid(a.weights().data(), a.weights().data() + a.num_atoms());
  grid.insert(grid.end(), b.weights().data(), b.weights().data() + b.num_atoms());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double total = 0.0;
  double lower = 0.0;
  int ia = 0;
  int ib = 0;
  for (double z : grid) {
    while (a.weights()[ia] < z) ++ia;
    while (b.weights()[ib] < z) ++ib;
    total += (z - lower) * (a.points().col(ia) - b.points().col(ib)).lpNorm<1>();
    lower = z;
  }
  return total;
}

double cdf(const DiscretePair& pair, const Eigen::VectorXd& lambda, double q) {
  double mass = 0.0;
  for (int j = 0; j < pair.num_atoms(); ++j)
    if (pair.location(j, lambda) <= q) mass = pair.weights()[j];
  return mass;
}

double quantile(const DiscretePair& pair, const Eigen::VectorXd& lambda, double z) {
  if (z <= 0.0) return 0.0;
  for (int j = 0; j < pair.num_atoms(); ++j)
    if (pair.weights()[j] >= z) return pair.location(j, lambda);
  return pair.location(pair.num_atoms() - 1, lambda);
}

IbpSides ibp_quantile_check(const DiscretePair& pair, const Eigen::VectorXd& lambda,
                            const std::function<double(double)>& f, double q) {
  const int k = pair.num_atoms();
  std::vector<double> x(k);
  for (int j = 0; j < k; ++j) x[j] = pair.location(j, lambda);

  // Left side: on [x_j, x_{j+1}) the CDF is m_j, so each piece integrates to
  // m_j (f(b) - f(a)).
  IbpSides out;
  auto piece = [&](double a, double b, double level) {
    a = std::max(a, q);
    if (b > a) out.lhs += level * (f(b) - f(a));
  };
  piece(0.0, k > 0 ? x[0] : 1.0, 0.0);
  for (int j = 0; j < k; ++j) piece(x[j], j + 1 < k ? x[j + 1] : 1.0, pair.weights()[j]);

  // Right side: the quantile function is x_j on (m_{j-1}, m_j].
  const double fq = cdf(pair, lambda, q);
  double tail = 0.0;
  double lower = 0.0;
  for (int j = 0; j < k; ++j) {
    const double upper = pair.weights()[j];
    const double len = upper - std::max(lower, fq);
    if (len > 0.0) tail += len * f(x[j]);
    lower = upper;
  }
  out.rhs = f(1.0) - fq * f(q) - tail;
  return out;
}

nlohmann::json pair_to_json(const DiscretePair& pair, const MixtureModel& model) {
  if (pair.num_species() != model.num_species())
    throw std::invalid_argument("pair and model disagree on species count");
  nlohmann::json j;
  j["m"] = std::vector<double>(pair.weights().data(), pair.weights().data() + pair.num_atoms());
  nlohmann::json pts = nlohmann::json::object();
  for (int s = 0; s < model.num_species(); ++s) {
    std::vector<double> col(pair.num_atoms());
    for (int a = 0; a < pair.num_atoms(); ++a) col[a] = pair.points()(s, a);
    pts[model.species()[s].name] = col;
  }
  j["points"] = pts;
  return j;
}

DiscretePair pair_from_json(const nlohmann::json& j, const MixtureModel& model) {
  if (!j.is_object() || !j.contains("m") || !j.contains("points"))
    throw ValidationError("pair: expected {\"m\": [...], \"points\": {...}}");
  const auto& jm = j.at("m");
  const auto& jp = j.at("points");
  if (!jm.is_array() || !jp.is_object()) throw ValidationError("pair: malformed fields");
  const auto k = static_cast<Eigen::Index>(jm.size());
  Eigen::VectorXd m(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    if (!jm[a].is_number()) throw ValidationError("pair.m: expected numbers");
    m[a] = jm[a].get<double>();
  }
  Eigen::MatrixXd pts(model.num_species(), k);
  for (int s = 0; s < model.num_species(); ++s) {
    const auto& name = model.species()[s].name;
    if (!jp.contains(name)) throw ValidationError("pair.points: missing species \"" + name + "\"");
    const auto& col = jp.at(name);
    if (!col.is_array() || static_cast<Eigen::Index>(col.size()) != k)
      throw ValidationError("pair.points." + name + ": expected " + std::to_string(k) + " values");
    for (Eigen::Index a = 0; a < k; ++a) {
      if (!col[a].is_number()) throw ValidationError("pair.points." + name + ": expected numbers");
      pts(s, a) = col[a].get<double>();
    }
  }
  if (jp.size() != static_cast<std::size_t>(model.num_species()))
    throw ValidationError("pair.points: unexpected species");
  try {
    return DiscretePair(m, pts);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("pair: ") + e.what());
  }
}

}  // namespace mssg
