#include "mssg/functionals.hpp"

#include <cmath>
#include <limits>

namespace mssg {
namespace detail {
namespace {

// Delta_r for r = 1..k of one species (0-based: delta[j] is Delta_{j+1}).
void species_delta(const Eigen::VectorXd& m, const Eigen::MatrixXd& points, int s,
                   Eigen::VectorXd& delta) {
  const Eigen::Index k = m.size();
  delta.resize(k);
  delta[k - 1] = m[k - 1] * (1.0 - points(s, k - 1));
  for (Eigen::Index j = k - 2; j >= 0; --j)
    delta[j] = delta[j + 1] + m[j] * (points(s, j + 1) - points(s, j));
}

}  // namespace

double eval_B_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                  const MixtureModel& model) {
  const Eigen::Index k = m.size();
  const int n = model.num_species();
  for (int s = 0; s < n; ++s)
    if (!(points(s, k - 1) < 1.0)) return std::numeric_limits<double>::infinity();

  double total = 0.0;
  Eigen::VectorXd delta;
  for (int s = 0; s < n; ++s) {
    species_delta(m, points, s, delta);
    const double h2 = model.field()[s] * model.field()[s];
    double bracket = h2 * delta[0] + points(s, 0) / delta[0] + std::log(delta[k - 1]);
    for (Eigen::Index j = 0; j + 1 < k; ++j) {
      const double inc = points(s, j + 1) - points(s, j);
      bracket += std::log1p(m[j] * inc / delta[j + 1]) / m[j];
    }
    total += 0.5 * model.lambda()[s] * bracket;
  }

  double prev = model.xi(points.col(0));
  for (Eigen::Index j = 0; j < k; ++j) {
    const double next =
        j + 1 < k ? model.xi(points.col(j + 1)) : model.xi(Eigen::VectorXd::Ones(n));
    total += 0.5 * m[j] * (next - prev);
    prev = next;
  }
  return total;
}

Eigen::MatrixXd point_brackets_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                   const MixtureModel& model) {
  const Eigen::Index k = m.size();
  const int n = model.num_species();
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index j = 0; j < k; ++j) out.col(j) = model.xi_species(points.col(j));

  Eigen::VectorXd delta;
  for (int s = 0; s < n; ++s) {
    species_delta(m, points, s, delta);
    const double h2 = model.field()[s] * model.field()[s];
    double acc = h2 - points(s, 0) / (delta[0] * delta[0]);
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j > 0) acc -= (points(s, j) - points(s, j - 1)) / (delta[j - 1] * delta[j]);
      out(s, j) += acc;
    }
  }
  return out;
}

Eigen::MatrixXd grad_B_points_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                  const MixtureModel& model) {
  Eigen::MatrixXd grad = point_brackets_raw(m, points, model);
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    const double mass = j == 0 ? m[0] : m[j] - m[j - 1];
    for (Eigen::Index s = 0; s < grad.rows(); ++s)
      grad(s, j) *= -0.5 * model.lambda()[s] * mass;
  }
  return grad;
}

Eigen::VectorXd grad_B_weights_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                   const MixtureModel& model, double step) {
  const Eigen::Index k = m.size();
  Eigen::VectorXd grad(std::max<Eigen::Index>(k - 1, 0));
  Eigen::VectorXd probe = m;
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double lo = j == 0 ? 0.0 : m[j - 1];
    const double room = std::min(m[j] - lo, m[j + 1] - m[j]);
    const double h = std::min(step, 0.25 * room);
    probe[j] = m[j] + h;
    const double up = eval_B_raw(probe, points, model);
    probe[j] = m[j] - h;
    const double down = eval_B_raw(probe, points, model);
    probe[j] = m[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace detail

double eval_B(const DiscretePair& pair, const MixtureModel& model) {
  return detail::eval_B_raw(pair.weights(), pair.points(), model);
}

double eval_B_with_qstar(const DiscretePair& pair, const MixtureModel& model,
                         const Eigen::VectorXd& qstar_point) {
  const int k = pair.num_atoms();
  const int n = model.num_species();
  if (!pair.satisfies_gap()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd delta = delta_at_atoms(pair);
  const Eigen::MatrixXd& q = pair.points();
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    const double qs = qstar_point[s];
    if (!(qs >= q(s, k - 1) && qs < 1.0))
      throw std::invalid_argument("q_* point must lie in [q_k^s, 1)");
    // int_0^{q_*} Phi'/Delta, split at the atoms, then log Delta(q_*) with
    // Delta(u) = 1 - Phi(u) beyond the last atom.
    double integral = q(s, 0) / delta(s, 1);
    for (int r = 1; r < k; ++r)
      integral += std::log(delta(s, r) / delta(s, r + 1)) / pair.weights()[r - 1];
    integral += std::log((1.0 - q(s, k - 1)) / (1.0 - qs));
    const double h2 = model.field()[s] * model.field()[s];
    total += 0.5 * model.lambda()[s] * (h2 * delta(s, 0) + integral + std::log(1.0 - qs));
  }
  const Eigen::MatrixXd ext = pair.extended_points();
  for (int r = 1; r <= k; ++r)
    total += 0.5 * pair.weights()[r - 1] * (model.xi(ext.col(r + 1)) - model.xi(ext.col(r)));
  return total;
}

Eigen::MatrixXd grad_B_points(const DiscretePair& pair, const MixtureModel& model) {
  if (!pair.satisfies_gap())
    throw std::domain_error("grad_B_points: gap condition fails (B is infinite)");
  return detail::grad_B_points_raw(pair.weights(), pair.points(), model);
}

Eigen::VectorXd grad_B_weights(const DiscretePair& pair, const MixtureModel& model,
                               double step) {
  if (!pair.satisfies_gap())
    throw std::domain_error("grad_B_weights: gap condition fails (B is infinite)");
  return detail::grad_B_weights_raw(pair.weights(), pair.points(), model, step);
}

FunctionalEval evaluate_B(const DiscretePair& pair, const MixtureModel& model,
                          bool with_gradient) {
  FunctionalEval out;
  out.value = eval_B(pair, model);
  if (with_gradient) out.gradient = grad_B_points(pair, model);
  return out;
}

namespace {

struct ParisiTerms {
  Eigen::MatrixXd xs;  // xi^s at q_0..q_{k+1}
  Eigen::MatrixXd d;   // d^s at q_0..q_{k+1}
};

ParisiTerms parisi_terms(const DiscretePair& pair, const MixtureModel& model,
                         const BAssignment& b) {
  const int k = pair.num_atoms();
  const Eigen::MatrixXd ext = pair.extended_points();
  ParisiTerms t;
  t.xs.resize(model.num_species(), k + 2);
  for (int r = 0; r <= k + 1; ++r) t.xs.col(r) = model.xi_species(ext.col(r));
  t.d = d_at_atoms(pair, model);
  if (b.b.size() != model.num_species())
    throw std::invalid_argument("b has wrong dimension");
  for (int s = 0; s < model.num_species(); ++s)
    if (!(b.b[s] > t.d(s, 0))) throw ConstraintError("b below d(0)");
  return t;
}

}  // namespace

double eval_A(const DiscretePair& pair, const MixtureModel& model, const BAssignment& b) {
  const int k = pair.num_atoms();
  const auto t = parisi_terms(pair, model, b);
  const Eigen::VectorXd& m = pair.weights();
  double total = 0.0;
  for (int s = 0; s < model.num_species(); ++s) {
    const double bs = b.b[s];
    const double gap0 = bs - t.d(s, 0);
    const double h2 = model.field()[s] * model.field()[s];
    double bracket = (h2 + t.xs(s, 0)) / gap0 + bs - 1.0 - std::log(bs);
    bracket += (t.xs(s, 1) - t.xs(s, 0)) / gap0;
    for (int l = 1; l <= k; ++l) {
      // (1/m_l) log((b - d_{l+1}) / (b - d_l)), with d_l - d_{l+1} = m_l (xi_{l+1} - xi_l)
      const double rise = t.xs(s, l + 1) - t.xs(s, l);
      bracket += std::log1p(m[l - 1] * rise / (bs - t.d(s, l))) / m[l - 1];
    }
    total += 0.5 * model.lambda()[s] * bracket;
  }
  const Eigen::MatrixXd ext = pair.extended_points();
  for (int l = 1; l <= k; ++l)
    total -= 0.5 * m[l - 1] * (model.theta(ext.col(l + 1)) - model.theta(ext.col(l)));
  return total;
}

Eigen::VectorXd dA_db(const DiscretePair& pair, const MixtureModel& model,
                      const BAssignment& b) {
  const int k = pair.num_atoms();
  const auto t = parisi_terms(pair, model, b);
  Eigen::VectorXd out(model.num_species());
  for (int s = 0; s < model.num_species(); ++s) {
    const double bs = b.b[s];
    const double gap0 = bs - t.d(s, 0);
    const double h2 = model.field()[s] * model.field()[s];
    double integral = (t.xs(s, 1) - t.xs(s, 0)) / (gap0 * gap0);
    for (int l = 1; l <= k; ++l) {
      const double rise = t.xs(s, l + 1) - t.xs(s, l);
      integral += rise / ((bs - t.d(s, l)) * (bs - t.d(s, l + 1)));
    }
    const double normalised = -(h2 + t.xs(s, 0)) / (gap0 * gap0) + 1.0 - 1.0 / bs - integral;
    out[s] = 0.5 * model.lambda()[s] * normalised;
  }
  return out;
}

}  // namespace mssg
