#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace mssg {

/// Raised when a model (or any other input) fails validation.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Species {
  std::string name;
  double lambda = 1.0;
  double h = 0.0;
};

/// A homogeneous degree-p piece of the covariance. The map is keyed by
/// ordered species tuples and holds every ordering of each orbit, so that
/// xi sums over all of S^p exactly once.
struct InteractionTerm {
  int p = 0;
  std::map<std::vector<int>, double> coefficients;
};

/// Covariance function of a multi-species spherical mixture:
///
///   xi(q) = sum_p sum_{(s_1..s_p)} c_{s_1..s_p} lambda^{s_1} q^{s_1} ... lambda^{s_p} q^{s_p}
///
/// with c = beta_p * Delta^2 >= 0 symmetric. Immutable after construction.
/// All evaluators take q in [0,1]^n and throw std::domain_error otherwise.
class MixtureModel {
 public:
  MixtureModel(std::vector<Species> species, std::vector<InteractionTerm> terms);

  /// Parses the model config schema. Each entry's tuple is expanded to all
  /// of its distinct permutations. Throws ValidationError with a path.
  static MixtureModel from_json(const nlohmann::json& j);
  /// Canonical form: one sorted representative per orbit.
  nlohmann::json to_json() const;
  /// FNV-1a over the canonical JSON dump, hex encoded.
  std::string hash() const;

  int num_species() const { return static_cast<int>(species_.size()); }
  const std::vector<Species>& species() const { return species_; }
  const std::vector<InteractionTerm>& terms() const { return terms_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  const Eigen::VectorXd& field() const { return field_; }
  int species_index(std::string_view name) const;

  /// c for an ordered tuple of species indices; 0 when absent.
  double coefficient(const std::vector<int>& tuple) const;

  double xi(const Eigen::VectorXd& q) const;
  /// xi^s(q) = (1/lambda^s) d xi / d q^s.
  Eigen::VectorXd xi_species(const Eigen::VectorXd& q) const;
  /// theta(q) = q . grad xi(q) - xi(q).
  double theta(const Eigen::VectorXd& q) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& q) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& q) const;
  /// d xi^s / d q^t, i.e. hessian(q)(s, t) / lambda^s.
  double cross_derivative(const Eigen::VectorXd& q, int s, int t) const;

  /// Species with h_s^2 > 0.
  std::vector<int> external_field_species() const;

  /// Copy with every coefficient multiplied by `factor`.
  MixtureModel scaled(double factor) const;
  /// Copy with the orbit of `tuple` set to `value`.
  MixtureModel with_coefficient(const std::vector<int>& tuple, double value) const;
  /// Copy with a different external field for one species.
  MixtureModel with_field(int s, double h) const;

 private:
  struct Monomial {
    std::vector<int> exponents;
    double coeff = 0.0;
  };

  void check_domain(const Eigen::VectorXd& q) const;
  void build_monomials();

  std::vector<Species> species_;
  std::vector<InteractionTerm> terms_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd field_;
  std::vector<Monomial> monomials_;
};

enum class ConvexityMode { H3, H3Strict };

struct ConvexityResult {
  bool pass = true;
  double min_eigenvalue = 0.0;
  /// Worst sampled point; meaningful only when pass is false.
  Eigen::VectorXd witness;
};

/// Samples the Hessian on the grid {0, 1/g, ..., 1}^n. H3 requires every
/// eigenvalue >= -1e-10; H3Strict requires the smallest eigenvalue > 1e-10
/// at every sampled q != 0.
ConvexityResult check_convexity(const MixtureModel& model, ConvexityMode mode,
                                int grid_resolution);

}  // namespace mssg
