#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "mssg/functionals.hpp"
#include "support.hpp"

using namespace mssg;
using testing::pair1;
using testing::vec;

namespace {

BAssignment bvec(std::initializer_list<double> xs) { return {vec(xs)}; }

double max_rel(const Eigen::MatrixXd& fd, const Eigen::MatrixXd& exact) {
  return (fd - exact).lpNorm<Eigen::Infinity>() /
         std::max(exact.lpNorm<Eigen::Infinity>(), 1e-8);
}

}  // namespace

TEST_CASE("B on hand-evaluated pairs") {
  CHECK(eval_B(pair1({1.0}, {0.0}), testing::sk(1.0)) == doctest::Approx(0.25).epsilon(1e-14));
  const double expect = 0.5 * (1.0 + std::log(0.5)) + 0.5 * 1.5;
  CHECK(eval_B(pair1({1.0}, {0.5}), testing::sk(2.0)) ==
        doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.903426).epsilon(1e-6));
  CHECK(eval_B(pair1({1.0}, {0.0}), testing::single_species(0.0, 1.0)) ==
        doctest::Approx(0.5));
  CHECK(std::isinf(eval_B(pair1({1.0}, {1.0}), testing::sk(1.0))));
}

TEST_CASE("B agrees with the closed forms for one and two atoms") {
  const auto model = testing::single_species(0.2, 0.3, 1.5);
  for (double q : {0.0, 0.1, 0.45, 0.8})
    CHECK(eval_B(pair1({1.0}, {q}), model) ==
          doctest::Approx(testing::b_point_mass(model, q)).epsilon(1e-13));
  for (double m : {0.1, 0.5, 0.9})
    for (double q : {0.2, 0.7})
      CHECK(eval_B(pair1({m, 1.0}, {0.0, q}), model) ==
            doctest::Approx(testing::b_one_rsb(model, m, q)).epsilon(1e-13));
}

TEST_CASE("gradient examples") {
  CHECK(grad_B_points(pair1({1.0}, {0.5}), testing::sk(2.0))(0, 0) ==
        doctest::Approx(0.0).scale(1.0));
  CHECK(grad_B_points(pair1({1.0}, {0.0}), testing::sk(1.0))(0, 0) == 0.0);
  // a duplicated weight level after splitting carries no mass on one side
  const auto split = pair1({0.4, 1.0}, {0.3, 0.6}).split_atom(1, 0.5);
  const auto g = grad_B_points(split, testing::sk(1.5));
  CHECK(g.cols() == 3);
  CHECK_THROWS_AS(grad_B_points(pair1({1.0}, {1.0}), testing::sk(1.0)), std::domain_error);
}

TEST_CASE("point gradient matches central differences") {
  std::mt19937_64 rng(21);
  const double step = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_mixture(rng);
    const int k = 1 + static_cast<int>(rng() % 5);
    const auto p = testing::random_pair(rng, model.num_species(), k, 0.9, 1e-3);
    const Eigen::MatrixXd exact = grad_B_points(p, model);
    Eigen::MatrixXd fd(exact.rows(), exact.cols());
    for (int s = 0; s < model.num_species(); ++s)
      for (int j = 0; j < k; ++j) {
        Eigen::MatrixXd up = p.points(), dn = p.points();
        up(s, j) += step;
        dn(s, j) -= step;
        fd(s, j) = (detail::eval_B_raw(p.weights(), up, model) -
                    detail::eval_B_raw(p.weights(), dn, model)) /
                   (2 * step);
      }
    CHECK(max_rel(fd, exact) < 1e-5);
  }
}

TEST_CASE("weight gradient matches a fine-step difference") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = testing::random_mixture(rng);
    const auto p = testing::random_pair(rng, model.num_species(), 3);
    const Eigen::VectorXd g = grad_B_weights(p, model);
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd up = p.weights(), dn = p.weights();
      up[j] += 1e-7;
      dn[j] -= 1e-7;
      const double fd = (detail::eval_B_raw(up, p.points(), model) -
                         detail::eval_B_raw(dn, p.points(), model)) /
                        2e-7;
      CHECK(std::abs(fd - g[j]) <= 1e-5 * std::max(1.0, std::abs(g[j])));
    }
  }
}

TEST_CASE("A on hand-evaluated pairs") {
  CHECK(eval_A(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0})) ==
        doctest::Approx(0.5 * (1.0 + std::log(0.5)) + 0.75).epsilon(1e-13));
  CHECK(eval_A(pair1({1.0}, {0.0}), testing::sk(1.0), bvec({2.0})) ==
        doctest::Approx(0.25).epsilon(1e-13));
  const auto p = pair1({1.0}, {0.0});
  const auto m = testing::sk(1.0);
  const double d0 = d_at_atoms(p, m)(0, 0);
  CHECK(eval_A(p, m, bvec({d0 + 1e6})) > eval_B(p, m) + 1e5);
}

TEST_CASE("A rejects b below d(0)") {
  const auto p = pair1({1.0}, {0.5});
  const auto m = testing::sk(2.0);
  try {
    eval_A(p, m, bvec({2.0}));
    FAIL("expected a constraint error");
  } catch (const ConstraintError& e) {
    CHECK(std::string(e.what()) == "b below d(0)");
  }
  CHECK_THROWS_AS(dA_db(p, m, bvec({1.0})), ConstraintError);
}

TEST_CASE("dA/db examples") {
  CHECK(dA_db(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({4.0}))[0] ==
        doctest::Approx(0.0).scale(1.0));
  // normalised derivative tends to 1
  CHECK(2.0 * dA_db(pair1({1.0}, {0.5}), testing::sk(2.0), bvec({1e8}))[0] ==
        doctest::Approx(1.0).epsilon(1e-6));
  const auto p = pair1({1.0}, {0.0});
  const auto m = testing::sk(1.0);
  CHECK(dA_db(p, m, bvec({d_at_atoms(p, m)(0, 0) + 0.1}))[0] < 0.0);
}

TEST_CASE("dA/db matches central differences") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_mixture(rng);
    const int n = model.num_species();
    const auto p = testing::random_pair(rng, n, 1 + static_cast<int>(rng() % 4));
    const Eigen::MatrixXd d = d_at_atoms(p, model);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    BAssignment b{Eigen::VectorXd(n)};
    for (int s = 0; s < n; ++s) b.b[s] = d(s, 0) + u(rng);
    const Eigen::VectorXd exact = dA_db(p, model, b);
    Eigen::VectorXd fd(n);
    for (int s = 0; s < n; ++s) {
      BAssignment up = b, dn = b;
      up.b[s] += 1e-6;
      dn.b[s] -= 1e-6;
      fd[s] = (eval_A(p, model, up) - eval_A(p, model, dn)) / 2e-6;
    }
    CHECK(max_rel(fd, exact) < 1e-5);
  }
}

TEST_CASE("q_* placement does not change B") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_mixture(rng);
    const int n = model.num_species();
    const auto p = testing::random_pair(rng, n, 1 + static_cast<int>(rng() % 4), 0.9);
    Eigen::VectorXd qs(n);
    for (int s = 0; s < n; ++s) {
      const double last = p.points()(s, p.num_atoms() - 1);
      qs[s] = last + u(rng) * (0.999 - last);
    }
    CHECK(eval_B_with_qstar(p, model, qs) ==
          doctest::Approx(eval_B(p, model)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(eval_B_with_qstar(pair1({1.0}, {0.5}), testing::sk(1.0), vec({0.4})),
                  std::invalid_argument);
}

TEST_CASE("splitting atoms leaves A and B unchanged") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = testing::random_mixture(rng);
    const int n = model.num_species();
    const auto p = testing::random_pair(rng, n, 1 + static_cast<int>(rng() % 4));
    const auto s = p.split_atom(static_cast<int>(rng() % p.num_atoms()), 0.25);
    CHECK(eval_B(s, model) == doctest::Approx(eval_B(p, model)).epsilon(1e-12));
    const Eigen::MatrixXd d = d_at_atoms(p, model);
    BAssignment b{(d.col(0).array() + 0.7).matrix()};
    CHECK(eval_A(s, model, b) == doctest::Approx(eval_A(p, model, b)).epsilon(1e-12));
  }
}

TEST_CASE("evaluate_B bundles value and gradient") {
  const auto r = evaluate_B(pair1({1.0}, {0.3}), testing::sk(1.2), true);
  CHECK(r.gradient.has_value());
  CHECK(r.value == eval_B(pair1({1.0}, {0.3}), testing::sk(1.2)));
  CHECK_FALSE(evaluate_B(pair1({1.0}, {0.3}), testing::sk(1.2), false).gradient.has_value());
}
