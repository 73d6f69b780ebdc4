#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mssg/model.hpp"

namespace mssg {

struct McConfig {
  int N = 64;
  long samples = 200'000;
  std::uint64_t seed = 0;
  int batches = 20;
  /// 0 means worker_count().
  int threads = 0;
};

/// N^s with sum N, by largest remainder of lambda^s N (ties to the lower
/// index); every species gets at least one coordinate. Requires N >= n.
std::vector<int> species_sizes(const Eigen::VectorXd& lambda, int N);

/// The model with lambda replaced by the realized N^s / N.
MixtureModel empirical_model(const MixtureModel& model, const std::vector<int>& sizes);

/// One disorder realization of H_N with covariance N xi_hat(R), xi_hat
/// built from the empirical weights.
class RealizedHamiltonian {
 public:
  /// Configurations are concatenated species blocks of lengths sizes[s].
  double operator()(const Eigen::VectorXd& sigma) const;
  const std::vector<int>& sizes() const { return sizes_; }
  int N() const { return N_; }

 private:
  friend RealizedHamiltonian sample_hamiltonian(const MixtureModel&, const McConfig&,
                                                std::uint64_t);
  struct Tensor {
    std::vector<int> tuple;
    double scale = 0.0;
    std::vector<double> entries;
  };
  std::vector<int> sizes_;
  std::vector<int> offsets_;
  int N_ = 0;
  std::vector<Tensor> tensors_;
};

/// Largest tensor entry count accepted by sample_hamiltonian.
inline constexpr std::size_t kMaxTensorEntries = std::size_t{1} << 24;

/// Draws independent standard Gaussian arrays for every ordered species
/// tuple, each scaled by sqrt(c) N^{(1-p)/2}. Throws ValidationError unless
/// p <= 4, N <= 128 and the total entry count stays below kMaxTensorEntries.
RealizedHamiltonian sample_hamiltonian(const MixtureModel& model, const McConfig& config,
                                       std::uint64_t disorder_seed);

/// A uniform point of the product of spheres of radii sqrt(N^s), drawn from
/// the stream (seed, index).
Eigen::VectorXd sample_configuration(const std::vector<int>& sizes, std::uint64_t seed,
                                     std::uint64_t index);

struct McEstimate {
  double F = 0.0;
  double standard_error = 0.0;
  /// xi_hat(1)/2 + field_reference: (1/N) log E Z.
  double annealed_reference = 0.0;
  /// (1/N) sum_s log E exp(h_s <sigma(s), 1>), by quadrature.
  double field_reference = 0.0;
  std::vector<int> sizes;
  Eigen::VectorXd lambda_hat;
  std::string covariance_convention = "N*xi(R)";
};

/// F_hat = (1/N) log[(1/M) sum_m exp(H(sigma_m) + sum_s h_s <sigma_m(s), 1>)]
/// for one disorder realization, with a jackknife error over batches.
/// Bit-identical for any thread count.
McEstimate estimate_F(const MixtureModel& model, const McConfig& config);

/// (1/N) log E exp(h <sigma, 1>) for sigma uniform on the sphere of radius
/// sqrt(n) in R^n.
double sphere_field_term(double h, int n);

}  // namespace mssg
