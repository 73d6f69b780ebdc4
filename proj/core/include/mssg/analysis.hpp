#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mssg/functionals.hpp"
#include "mssg/model.hpp"
#include "mssg/orderparam.hpp"

namespace mssg {

/// xi^s(q_r) + h_s^2 - int_0^{q_r} (Phi^s)'/(Delta^s)^2, n x k. Zero at every
/// atom of a minimizer of B.
Eigen::MatrixXd cs_identity_residual(const DiscretePair& pair, const MixtureModel& model);

struct ParisiResiduals {
  /// Identity (a), one entry per species: LHS - RHS.
  Eigen::VectorXd a;
  /// Identity (b) at every atom, n x k: Phi^s(q_r) - RHS.
  Eigen::MatrixXd b;
};

ParisiResiduals parisi_identity_residuals(const DiscretePair& pair, const MixtureModel& model,
                                          const BAssignment& b);

/// b^s - d^s(q_r) - 1/Delta^s(q_r) at every atom, n x k.
Eigen::MatrixXd bridge_residual(const DiscretePair& pair, const MixtureModel& model,
                                const BAssignment& b);

struct ResidualBlock {
  Eigen::MatrixXd cs;
  Eigen::VectorXd parisi_a;
  Eigen::MatrixXd parisi_b;
  Eigen::MatrixXd bridge;
  double a_value = 0.0;
  double b_value = 0.0;
  double a_minus_b = 0.0;
  /// Identity (b) is only guaranteed under strict convexity.
  bool parisi_b_advisory = false;

  double max_cs() const;
  double max_bridge() const;
  double max_parisi_a() const;
  double max_parisi_b() const;
  /// Largest residual that counts towards pass/fail.
  double max_binding() const;
};

struct ResidualThresholds {
  double identity = 1e-6;
  double value_gap = 1e-8;
};

ResidualBlock compute_residuals(const DiscretePair& pair, const MixtureModel& model,
                                const BAssignment& b, bool strict_convexity);
bool residuals_pass(const ResidualBlock& block, const ResidualThresholds& thresholds = {});

nlohmann::json residuals_to_json(const ResidualBlock& block);

enum class HypothesisStatus { QuadraticCoupling, GridVerified, VerifiedAtMinimizer, NotVerified };

std::string to_string(HypothesisStatus status);

struct HypothesisOptions {
  double grid_step = 0.02;
  double positivity = 1e-12;
  /// Grids larger than this are coarsened until they fit.
  long max_grid_points = 2'000'000;
  /// Threshold above which a minimizer coordinate counts as positive.
  double zero_tol = 1e-6;
};

/// Sufficient condition for every minimizer that is `group`-simultaneous to
/// be (group + {s})-simultaneous. With a one-element group this is the
/// pairwise condition. Returns the strongest status that could be shown.
HypothesisStatus check_simultaneity_hypothesis(const MixtureModel& model, int s,
                                               const std::vector<int>& group,
                                               const DiscretePair* minimizer = nullptr,
                                               const HypothesisOptions& options = {});

struct SpeciesSupport {
  std::string name;
  std::vector<SupportPoint> support;
  int rsb_level = 0;
  std::string label;
};

struct SupportBijection {
  int s = 0;
  int t = 0;
  /// (value in s, value in t, mass) per support point, increasing.
  std::vector<std::array<double, 3>> pairs;
  bool increasing = true;
  bool mass_preserving = true;
};

struct PairHypothesis {
  int s = 0;
  int t = 0;
  HypothesisStatus status = HypothesisStatus::NotVerified;
};

struct ClassificationReport {
  bool is_minimizer = true;
  std::vector<SpeciesSupport> species;
  /// Observed simultaneity classes (finest partition).
  std::vector<std::vector<int>> classes;
  std::vector<SupportBijection> bijections;
  std::vector<PairHypothesis> hypotheses;
  /// Classes that the sufficient conditions (pairwise, then chained) force.
  std::vector<std::vector<int>> implied_classes;

  bool simultaneous(int s, int t) const;
};

ClassificationReport classify_rsb(const DiscretePair& pair, const MixtureModel& model,
                                  double merge_tol, bool is_minimizer = true);

nlohmann::json classification_to_json(const ClassificationReport& report,
                                      const MixtureModel& model);

}  // namespace mssg
