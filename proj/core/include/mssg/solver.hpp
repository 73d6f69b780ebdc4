#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mssg/analysis.hpp"
#include "mssg/functionals.hpp"
#include "mssg/model.hpp"
#include "mssg/orderparam.hpp"

namespace mssg {

/// Raised when the optimizer cannot produce any finite candidate, or when a
/// derived quantity is degenerate.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SupportBound {
  double qbar = 0.0;
  /// u^s per species (NaN for species that do not constrain the bound).
  Eigen::VectorXd u;
};

/// Bound q_bar < 1 such that minimizers of B may be sought among pairs with
/// every point at most q_bar.
SupportBound support_bound(const MixtureModel& model);

struct SolveConfig {
  int k_max = 64;
  double tol_B = 1e-8;
  double tol_grad = 1e-7;
  int multistart_seeds = 16;
  int max_iters = 5000;
  double merge_tol = 1e-6;
  std::uint64_t seed = 0;
  /// 0 means worker_count().
  int threads = 0;
};

struct LocalMinimum {
  double value = 0.0;
  DiscretePair pair = DiscretePair::point_mass(Eigen::VectorXd::Zero(1));
  bool converged = true;
  int iterations = 0;
};

struct EscalationStep {
  int k = 0;
  double best_value = 0.0;
  /// Atoms left after merging and dropping negligible masses.
  int atoms = 0;
  int converged_starts = 0;
  int starts = 0;
};

struct SolveReport {
  double value = 0.0;
  DiscretePair pair = DiscretePair::point_mass(Eigen::VectorXd::Zero(1));
  BAssignment b;
  double a_value = 0.0;
  ResidualBlock residuals;
  std::vector<LocalMinimum> local_minima;
  std::vector<EscalationStep> escalation;
  SupportBound bound;
  bool strict_convexity = true;
};

/// Minimizes B over pairs with at most k_max atoms (k = 1, 2, 4, ...) and
/// points in [0, q_bar]. Deterministic for a fixed configuration, whatever
/// the thread count. Throws ValidationError if the Hessian of xi is not
/// nonnegative definite on the sample grid.
SolveReport minimize_B(const MixtureModel& model, const SolveConfig& config = {});

/// b^s = d^s(q_k) + 1/Delta^s(q_k).
BAssignment recover_b(const DiscretePair& pair, const MixtureModel& model);

/// Per-species root of dA/db^s by bisection.
BAssignment stationary_b(const DiscretePair& pair, const MixtureModel& model);

/// Solves the point-stationarity system (the C-S identity at every atom)
/// with the weights held fixed. Returns the polished pair, or the input if
/// no improvement was found.
DiscretePair polish_points(const DiscretePair& pair, const MixtureModel& model, double qbar);

}  // namespace mssg
