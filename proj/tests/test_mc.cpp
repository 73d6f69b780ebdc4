#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mssg/mc_oracle.hpp"
#include "mssg/solver.hpp"
#include "support.hpp"

using namespace mssg;
using testing::vec;

namespace {

McConfig small(int N, long samples, std::uint64_t seed = 1) {
  McConfig c;
  c.N = N;
  c.samples = samples;
  c.seed = seed;
  return c;
}

// Empirical covariance of H(sigma1), H(sigma2) over disorder draws,
// compared with N xi(R) in units of its standard error.
double covariance_z(const MixtureModel& model, int N) {
  const auto sizes = species_sizes(model.lambda(), N);
  const Eigen::VectorXd s1 = sample_configuration(sizes, 99, 0);
  const Eigen::VectorXd s2 = sample_configuration(sizes, 99, 1);
  Eigen::VectorXd R(model.num_species());
  int offset = 0;
  for (int s = 0; s < model.num_species(); ++s) {
    R[s] = s1.segment(offset, sizes[s]).dot(s2.segment(offset, sizes[s])) / sizes[s];
    offset += sizes[s];
  }
  // overlaps may be negative; evaluate the polynomial directly
  double target = 0.0;
  for (const auto& term : model.terms())
    for (const auto& [tuple, c] : term.coefficients) {
      double prod = c;
      for (int s : tuple) prod *= model.lambda()[s] * R[s];
      target += prod;
    }
  target *= N;
  const int draws = 10000;
  std::vector<double> prod(draws);
  const McConfig cfg = small(N, 1);
  for (int i = 0; i < draws; ++i) {
    const auto H = sample_hamiltonian(model, cfg, 1000 + i);
    prod[i] = H(s1) * H(s2);
  }
  const double mean = std::accumulate(prod.begin(), prod.end(), 0.0) / draws;
  double ss = 0.0;
  for (double v : prod) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (draws - 1) / draws);
  return (mean - target) / se;
}

}  // namespace

TEST_CASE("species sizes") {
  CHECK(species_sizes(vec({1.0}), 64) == std::vector<int>{64});
  CHECK(species_sizes(vec({0.5, 0.5}), 7) == std::vector<int>{4, 3});
  CHECK(species_sizes(vec({0.3, 0.3, 0.4}), 10) == std::vector<int>{3, 3, 4});
  CHECK(species_sizes(vec({0.01, 0.99}), 10) == std::vector<int>{1, 9});
  CHECK_THROWS_AS(species_sizes(vec({0.5, 0.5}), 1), ValidationError);
}

TEST_CASE("configurations lie on the product of spheres") {
  const std::vector<int> sizes{5, 11};
  const Eigen::VectorXd s = sample_configuration(sizes, 3, 17);
  CHECK(s.head(5).squaredNorm() == doctest::Approx(5.0));
  CHECK(s.tail(11).squaredNorm() == doctest::Approx(11.0));
  CHECK(sample_configuration(sizes, 3, 17) == s);
  CHECK(sample_configuration(sizes, 3, 18) != s);
}

TEST_CASE("hand-sized Hamiltonians") {
  InteractionTerm linear{1, {{{0}, 1.0}}};
  const MixtureModel p1({{"s", 1.0, 0.0}}, {linear});
  const auto H = sample_hamiltonian(p1, small(4, 1), 5);
  // linear in sigma
  const Eigen::VectorXd a = vec({1.0, -1.0, 1.0, 1.0}), b = vec({0.5, 1.0, -1.0, 1.0});
  CHECK(H(a + b) == doctest::Approx(H(a) + H(b)));
  const auto zero = testing::single_species(0.0);
  CHECK(sample_hamiltonian(zero, small(8, 1), 5)(Eigen::VectorXd::Ones(8)) == 0.0);
  // quadratic form: H(-sigma) = H(sigma)
  const auto H2 = sample_hamiltonian(testing::sk(1.0), small(6, 1), 5);
  const Eigen::VectorXd s = sample_configuration({6}, 1, 0);
  CHECK(H2(-s) == doctest::Approx(H2(s)));
}

TEST_CASE("memory guard") {
  InteractionTerm p5{5, {{{0, 0, 0, 0, 0}, 1.0}}};
  CHECK_THROWS_AS(sample_hamiltonian(MixtureModel({{"s", 1.0, 0.0}}, {p5}), small(8, 1), 1),
                  ValidationError);
  CHECK_THROWS_AS(sample_hamiltonian(testing::sk(1.0), small(129, 1), 1), ValidationError);
  CHECK_THROWS_AS(
      sample_hamiltonian(testing::single_species(0.0, 0.0, 1.0), small(128, 1), 1),
      ValidationError);
}

TEST_CASE("covariance matches N xi(R) within five standard errors") {
  InteractionTerm p1{1, {{{0}, 0.7}, {{1}, 1.3}}};
  InteractionTerm p2{2, {{{0, 0}, 1.0}, {{0, 1}, 0.5}, {{1, 0}, 0.5}}};
  InteractionTerm p3{3, {{{1, 1, 1}, 2.0}}};
  const std::vector<Species> sp{{"s", 0.5, 0.0}, {"t", 0.5, 0.0}};
  for (const auto& term : {p1, p2, p3}) {
    CAPTURE(term.p);
    CHECK(std::abs(covariance_z(MixtureModel(sp, {term}), 12)) < 5.0);
  }
}

TEST_CASE("free energy of the trivial model is zero") {
  const auto est = estimate_F(testing::single_species(0.0), small(16, 2000));
  CHECK(est.F == 0.0);
  CHECK(est.standard_error == 0.0);
}

TEST_CASE("estimate is bit-exact across thread counts") {
  auto cfg = small(20, 5000, 7);
  cfg.threads = 1;
  const auto a = estimate_F(testing::sk(0.8), cfg);
  cfg.threads = 3;
  const auto b = estimate_F(testing::sk(0.8), cfg);
  CHECK(a.F == b.F);
  CHECK(a.standard_error == b.standard_error);
}

TEST_CASE("annealed bound") {
  for (double beta : {0.3, 0.7, 1.2}) {
    const auto model = testing::sk(beta, 0.3);
    const auto est = estimate_F(model, small(24, 20000, 3));
    CHECK(est.standard_error >= 0.0);
    CHECK(est.F <= est.annealed_reference + 5 * est.standard_error);
  }
}

TEST_CASE("sphere field term") {
  CHECK(sphere_field_term(0.7, 1) == doctest::Approx(std::log(std::cosh(0.7))));
  // on S^2 the projection <sigma, 1>/3 is uniform on [-1, 1]
  const double a = 3 * 0.4;
  CHECK(sphere_field_term(0.4, 3) == doctest::Approx(std::log(std::sinh(a) / a) / 3).epsilon(1e-10));
  CHECK(sphere_field_term(0.0, 10) == 0.0);
}

TEST_CASE("field-only model agrees with its exact finite-N value") {
  const auto model = testing::single_species(0.0, 1.0);
  const auto est = estimate_F(model, small(16, 200000, 5));
  CHECK(std::abs(est.F - est.field_reference) <= 5 * est.standard_error + 1e-3);
  // the finite-size value approaches the variational one from below
  const double variational = minimize_B(model).value;
  CHECK(std::abs(est.F - variational) <= 0.03);
}

TEST_CASE("invalid configurations") {
  CHECK_THROWS_AS(estimate_F(testing::sk(1.0), small(8, 0)), ValidationError);
  auto cfg = small(8, 100);
  cfg.batches = 1;
  CHECK_THROWS_AS(estimate_F(testing::sk(1.0), cfg), ValidationError);
}
