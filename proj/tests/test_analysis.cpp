#include <doctest.h>

#include <cmath>
#include <random>

#include "mssg/analysis.hpp"
#include "mssg/solver.hpp"
#include "support.hpp"

using namespace mssg;
using testing::pair1;
using testing::vec;

namespace {

BAssignment bvec(std::initializer_list<double> xs) { return {vec(xs)}; }

SolveConfig quick() {
  SolveConfig c;
  c.k_max = 8;
  return c;
}

MixtureModel three_species_rst(double hr) {
  InteractionTerm t{3, {}};
  std::vector<int> tuple{0, 1, 2};
  do t.coefficients[tuple] = 1.0;
  while (std::next_permutation(tuple.begin(), tuple.end()));
  return MixtureModel({{"r", 0.3, hr}, {"s", 0.3, 0.0}, {"t", 0.4, 0.0}}, {t});
}

// quadratic r-t coupling, then r-s-s and s-t-t cubic links
MixtureModel chain() {
  InteractionTerm quad{2, {{{0, 0}, 3.0}, {{1, 1}, 3.0}, {{2, 2}, 3.0},
                           {{0, 2}, 0.5}, {{2, 0}, 0.5}}};
  InteractionTerm cubic{3, {}};
  for (std::vector<int> tuple : {std::vector<int>{0, 1, 1}, std::vector<int>{1, 2, 2}}) {
    std::sort(tuple.begin(), tuple.end());
    do cubic.coefficients[tuple] = 0.5;
    while (std::next_permutation(tuple.begin(), tuple.end()));
  }
  return MixtureModel({{"r", 0.3, 0.0}, {"s", 0.3, 0.0}, {"t", 0.4, 0.0}}, {quad, cubic});
}

}  // namespace

TEST_CASE("C-S identity residual") {
  CHECK(cs_identity_residual(pair1({1.0}, {0.5}), testing::sk(2.0))(0, 0) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK(cs_identity_residual(pair1({1.0}, {0.0}), testing::sk(1.0))(0, 0) == 0.0);
  CHECK(cs_identity_residual(pair1({1.0}, {0.6}), testing::sk(2.0))(0, 0) ==
        doctest::Approx(-1.35).epsilon(1e-12));
}

TEST_CASE("Parisi identity residuals") {
  auto r = parisi_identity_residuals(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0}));
  CHECK(std::abs(r.a[0]) < 1e-14);
  CHECK(std::abs(r.b(0, 0)) < 1e-14);
  r = parisi_identity_residuals(pair1({1.0}, {0.0}), testing::sk(1.0), bvec({2.0}));
  CHECK(std::abs(r.a[0]) < 1e-14);
  r = parisi_identity_residuals(pair1({1.0}, {0.0}), testing::sk(1.0), bvec({3.0}));
  CHECK(r.a[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bridge residual") {
  CHECK(bridge_residual(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0}))(0, 0) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK(bridge_residual(pair1({1.0}, {0.0}), testing::sk(1.0), bvec({2.0}))(0, 0) ==
        doctest::Approx(0.0).scale(1.0));
  const auto p = pair1({1.0}, {0.0});
  const auto m = testing::sk(1.0);
  CHECK(bridge_residual(p, m, bvec({3.0}))(0, 0) == doctest::Approx(1.0));
  CHECK(std::abs(eval_A(p, m, bvec({3.0})) - eval_B(p, m)) > 1e-3);
}

TEST_CASE("residual block and thresholds") {
  const auto good = compute_residuals(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0}), true);
  CHECK(residuals_pass(good));
  CHECK(std::abs(good.a_minus_b) < 1e-14);
  const auto bad = compute_residuals(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({5.0}), true);
  CHECK_FALSE(residuals_pass(bad));
  CHECK(bad.max_bridge() == doctest::Approx(1.0));
  const auto advisory =
      compute_residuals(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0}), false);
  CHECK(advisory.parisi_b_advisory);
  const auto j = residuals_to_json(good);
  CHECK(j.contains("cs_identity"));
}

TEST_CASE("classification of simple pairs") {
  const auto single = classify_rsb(pair1({0.3, 1.0}, {0.0, 0.5}), testing::sk(2.0), 1e-6);
  CHECK(single.classes.size() == 1);
  CHECK(single.species[0].rsb_level == 1);
  CHECK(single.species[0].label == "1-RSB");

  const auto model = testing::two_species(0.5, 1.0, 1.0, 0.5);
  Eigen::MatrixXd same(2, 2);
  same << 0.1, 0.4, 0.1, 0.4;
  const auto sim = classify_rsb(DiscretePair(vec({0.5, 1.0}), same), model, 1e-6);
  CHECK(sim.simultaneous(0, 1));
  REQUIRE(sim.bijections.size() == 1);
  CHECK(sim.bijections[0].increasing);
  CHECK(sim.bijections[0].mass_preserving);
  for (const auto& pr : sim.bijections[0].pairs) CHECK(pr[0] == pr[1]);

  Eigen::MatrixXd apart(2, 2);
  apart << 0.0, 0.5, 0.2, 0.2;
  const auto not_sim = classify_rsb(DiscretePair(vec({0.5, 1.0}), apart), model, 1e-6);
  CHECK_FALSE(not_sim.simultaneous(0, 1));
  CHECK(not_sim.classes.size() == 2);
  CHECK(not_sim.species[1].label == "RS");
}

TEST_CASE("simultaneity hypothesis statuses") {
  CHECK(check_simultaneity_hypothesis(testing::two_species(0.5, 1, 1, 0.3), 0, {1}) ==
        HypothesisStatus::QuadraticCoupling);
  CHECK(check_simultaneity_hypothesis(three_species_rst(0.0), 1, {2}) ==
        HypothesisStatus::NotVerified);
  CHECK(check_simultaneity_hypothesis(three_species_rst(0.5), 1, {2}) ==
        HypothesisStatus::GridVerified);
  const auto c = chain();
  CHECK(check_simultaneity_hypothesis(c, 0, {2}) == HypothesisStatus::QuadraticCoupling);
  CHECK(check_simultaneity_hypothesis(c, 1, {0, 2}) == HypothesisStatus::GridVerified);
  CHECK(to_string(HypothesisStatus::GridVerified) == "GridVerified");
}

TEST_CASE("chained species end up in one class") {
  const auto c = chain();
  const auto r = minimize_B(c, quick());
  const auto report = classify_rsb(r.pair, c, 1e-6);
  REQUIRE(report.implied_classes.size() == 1);
  CHECK(report.implied_classes[0] == std::vector<int>{0, 1, 2});
  CHECK(report.simultaneous(0, 1));
  CHECK(report.simultaneous(1, 2));
  const auto j = classification_to_json(report, c);
  CHECK(j.contains("implied_classes"));
  CHECK(j["species"].size() == 3);
}

TEST_CASE("quadratically coupled minimizers are simultaneous") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 5; ++trial) {
    const auto model = testing::random_coupled(rng);
    const auto r = minimize_B(model, quick());
    const auto report = classify_rsb(r.pair, model, 1e-6);
    CHECK(report.simultaneous(0, 1));
    CHECK(report.species[0].support.size() == report.species[1].support.size());
    for (const auto& bij : report.bijections) {
      CHECK(bij.increasing);
      CHECK(bij.mass_preserving);
    }
  }
}

TEST_CASE("a field keeps the support away from zero") {
  for (double c : {0.5, 2.0, 5.0}) {
    const auto r = minimize_B(testing::single_species(c, 1.0), quick());
    for (const auto& lm : r.local_minima)
      CHECK(pushforward_support(lm.pair, 0, 1e-6).front().value > 1e-4);
  }
  const auto two = minimize_B(testing::two_species(0.5, 2.0, 2.0, 0.5, 1.0, 0.0), quick());
  CHECK(pushforward_support(two.pair, 0, 1e-6).front().value > 1e-4);
}
