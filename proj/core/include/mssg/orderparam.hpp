#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mssg/model.hpp"

namespace mssg {

/// A finitely supported lambda-admissible pair (zeta, Phi).
///
/// Atoms are stored 0-based: atom j has cumulative weight m_{j+1} and point
/// column points().col(j) = (q_{j+1}^s)_s. The implicit sentinels are
/// m_0 = 0, q_0 = 0 and q_{k+1} = 1. Phi between atoms is the piecewise
/// linear interpolant, so every species column must be nondecreasing.
class DiscretePair {
 public:
  /// `points` is n x k (species by atoms). Throws std::invalid_argument if
  /// the weights are not strictly increasing to 1 or a column leaves [0,1]
  /// or decreases.
  DiscretePair(Eigen::VectorXd cumulative_weights, Eigen::MatrixXd points);

  static DiscretePair point_mass(const Eigen::VectorXd& atom);

  int num_atoms() const { return static_cast<int>(m_.size()); }
  int num_species() const { return static_cast<int>(points_.rows()); }

  const Eigen::VectorXd& weights() const { return m_; }
  const Eigen::MatrixXd& points() const { return points_; }
  /// m_j - m_{j-1}, the zeta-mass of atom j.
  double mass(int j) const { return j == 0 ? m_[0] : m_[j] - m_[j - 1]; }
  Eigen::VectorXd atom(int j) const { return points_.col(j); }
  /// q_j = sum_s lambda^s q_j^s.
  double location(int j, const Eigen::VectorXd& lambda) const;

  /// Gap condition: q_k^s < 1 for every species.
  bool satisfies_gap() const;

  /// n x (k+2) matrix with the sentinel columns 0 and 1 attached, so that
  /// column r is q_r in 1-based atom numbering.
  Eigen::MatrixXd extended_points() const;

  /// Replaces atom j by two co-located atoms; `fraction` of its mass goes
  /// to the first copy.
  DiscretePair split_atom(int j, double fraction) const;
  /// Re-expresses the pair on a finer cumulative weight grid (which must
  /// contain every current weight) by duplicating points.
  DiscretePair refine(const Eigen::VectorXd& grid) const;

 private:
  Eigen::VectorXd m_;
  Eigen::MatrixXd points_;
};

/// Delta^s_r for r = 0..k+1 as an n x (k+2) matrix. Delta_0 = Delta_1 and
/// Delta_{k+1} = 0.
Eigen::MatrixXd delta_at_atoms(const DiscretePair& pair);

/// d^s_r for r = 0..k+1 as an n x (k+2) matrix, with
/// d^s_r = sum_{l>=r} m_l (xi^s(q_{l+1}) - xi^s(q_l)), d_0 = d_1, d_{k+1} = 0.
Eigen::MatrixXd d_at_atoms(const DiscretePair& pair, const MixtureModel& model);

struct SupportPoint {
  double value = 0.0;
  double mass = 0.0;
};

/// Support of the pushforward zeta o (Phi^s)^{-1}. Atoms lighter than
/// `min_mass` are ignored; consecutive values are grouped while they stay
/// within `merge_tol` of the group's first value, and each group is reported
/// at its mass-weighted mean.
std::vector<SupportPoint> pushforward_support(const DiscretePair& pair, int s,
                                              double merge_tol,
                                              double min_mass = 1e-10);

/// Group index of every atom under the same rule as pushforward_support
/// (-1 for dropped atoms).
std::vector<int> support_groups(const DiscretePair& pair, int s, double merge_tol,
                                double min_mass = 1e-10);

/// Wasserstein-1 distance between the pushforwards on ([0,1]^n, l1), computed
/// on the union of both cumulative weight grids.
double pseudometric(const DiscretePair& a, const DiscretePair& b);

/// zeta([0, q]) for the scalar atom locations.
double cdf(const DiscretePair& pair, const Eigen::VectorXd& lambda, double q);
/// Q_zeta(z) = inf{q : zeta([0,q]) >= z}.
double quantile(const DiscretePair& pair, const Eigen::VectorXd& lambda, double z);

struct IbpSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of
///   int_q^1 zeta([0,u]) f'(u) du = f(1) - zeta([0,q]) f(q) - int_{zeta([0,q])}^1 f(Q(z)) dz.
/// The left side is integrated over the pieces where the CDF is constant;
/// the right side over the steps of the quantile function. Both are exact.
IbpSides ibp_quantile_check(const DiscretePair& pair, const Eigen::VectorXd& lambda,
                            const std::function<double(double)>& f, double q);

/// {"m": [...], "points": {"<species>": [...]}}
nlohmann::json pair_to_json(const DiscretePair& pair, const MixtureModel& model);
DiscretePair pair_from_json(const nlohmann::json& j, const MixtureModel& model);

}  // namespace mssg
