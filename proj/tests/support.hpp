#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mssg/model.hpp"
#include "mssg/orderparam.hpp"

namespace testing {

inline mssg::MixtureModel single_species(double c2, double h = 0.0, double c4 = 0.0) {
  std::vector<mssg::InteractionTerm> terms;
  if (c2 > 0) terms.push_back({2, {{{0, 0}, c2}}});
  if (c4 > 0) terms.push_back({4, {{{0, 0, 0, 0}, c4}}});
  return mssg::MixtureModel({{"s", 1.0, h}}, terms);
}

// xi(q) = beta^2 q^2 / 2
inline mssg::MixtureModel sk(double beta, double h = 0.0) {
  return single_species(0.5 * beta * beta, h);
}

// Two species with self couplings css, ctt, symmetric cross coupling cst.
inline mssg::MixtureModel two_species(double lambda_s, double css, double ctt, double cst,
                                      double hs = 0.0, double ht = 0.0, double c4s = 0.0,
                                      double c4t = 0.0) {
  mssg::InteractionTerm quad{2, {}};
  if (css > 0) quad.coefficients[{0, 0}] = css;
  if (ctt > 0) quad.coefficients[{1, 1}] = ctt;
  if (cst > 0) {
    quad.coefficients[{0, 1}] = cst;
    quad.coefficients[{1, 0}] = cst;
  }
  std::vector<mssg::InteractionTerm> terms;
  if (!quad.coefficients.empty()) terms.push_back(quad);
  mssg::InteractionTerm quart{4, {}};
  if (c4s > 0) quart.coefficients[{0, 0, 0, 0}] = c4s;
  if (c4t > 0) quart.coefficients[{1, 1, 1, 1}] = c4t;
  if (!quart.coefficients.empty()) terms.push_back(quart);
  return mssg::MixtureModel({{"s", lambda_s, hs}, {"t", 1.0 - lambda_s, ht}}, terms);
}

// Random two-species model with positive cross coupling; H3strict holds
// because css * ctt > cst^2 and the quartic self terms are convex.
inline mssg::MixtureModel random_coupled(std::mt19937_64& rng, double min_cross = 0.1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double css = 0.5 + 2.5 * u(rng);
  const double ctt = 0.5 + 2.5 * u(rng);
  const double cst = min_cross + 0.8 * u(rng) * (std::sqrt(css * ctt) - min_cross);
  const double lam = 0.25 + 0.5 * u(rng);
  const double c4s = u(rng) < 0.5 ? 3.0 * u(rng) : 0.0;
  const double c4t = u(rng) < 0.5 ? 3.0 * u(rng) : 0.0;
  const double hs = u(rng) < 0.3 ? u(rng) : 0.0;
  const double ht = u(rng) < 0.3 ? u(rng) : 0.0;
  return two_species(lam, css, ctt, cst, hs, ht, c4s, c4t);
}

// Random mixture with up to three species and degrees 1..4 (H3 not enforced).
inline mssg::MixtureModel random_mixture(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1 + static_cast<int>(rng() % 3);
  std::vector<mssg::Species> species;
  double total = 0.0;
  std::vector<double> w(n);
  for (auto& x : w) total += (x = 0.2 + u(rng));
  for (int s = 0; s < n; ++s)
    species.push_back({std::string(1, static_cast<char>('a' + s)), w[s] / total,
                       u(rng) < 0.4 ? 1.5 * u(rng) : 0.0});
  std::vector<mssg::InteractionTerm> terms;
  for (int p = 1; p <= 4; ++p) {
    if (u(rng) < 0.3 && p != 2) continue;
    mssg::InteractionTerm term{p, {}};
    const int entries = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < entries; ++e) {
      std::vector<int> tuple(p);
      for (auto& s : tuple) s = static_cast<int>(rng() % n);
      std::sort(tuple.begin(), tuple.end());
      const double c = 0.1 + 2.0 * u(rng);
      // fill the whole orbit so the coefficient tensor is symmetric
      do term.coefficients[tuple] = c;
      while (std::next_permutation(tuple.begin(), tuple.end()));
    }
    terms.push_back(term);
  }
  return mssg::MixtureModel(species, terms);
}

// Random valid pair with k atoms; columns increase with spacing at least
// min_step and stay below qbar.
inline mssg::DiscretePair random_pair(std::mt19937_64& rng, int n, int k, double qbar = 0.95,
                                      double min_step = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd m(k);
  std::vector<double> cuts(k - 1);
  for (auto& c : cuts) c = 0.05 + 0.9 * u(rng);
  std::sort(cuts.begin(), cuts.end());
  for (int j = 0; j + 1 < k; ++j) m[j] = cuts[j];
  m[k - 1] = 1.0;
  for (int j = 1; j < k; ++j)
    if (m[j] <= m[j - 1] + 1e-3) m[j] = m[j - 1] + 1e-3;
  m[k - 1] = 1.0;
  Eigen::MatrixXd pts(n, k);
  for (int s = 0; s < n; ++s) {
    std::vector<double> col(k);
    for (auto& v : col) v = u(rng) * (qbar - k * min_step);
    std::sort(col.begin(), col.end());
    for (int j = 0; j < k; ++j) pts(s, j) = col[j] + j * min_step;
  }
  return mssg::DiscretePair(m, pts);
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline mssg::DiscretePair pair1(std::initializer_list<double> m,
                                std::initializer_list<double> points) {
  Eigen::MatrixXd pts(1, static_cast<Eigen::Index>(points.size()));
  pts.row(0) = vec(points).transpose();
  return mssg::DiscretePair(vec(m), pts);
}

// Closed-form B(delta_q) for a single species.
inline double b_point_mass(const mssg::MixtureModel& model, double q) {
  const double h = model.field()[0];
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd at(1);
  at[0] = q;
  return 0.5 * (h * h * (1 - q) + q / (1 - q) + std::log(1 - q)) +
         0.5 * (model.xi(one) - model.xi(at));
}

struct GridMin {
  double value;
  double q;
};

// 1-D grid minimization of B(delta_q) on [0, qmax] with the given step.
inline GridMin grid_point_mass(const mssg::MixtureModel& model, double step = 1e-6,
                               double qmax = 0.999) {
  GridMin best{b_point_mass(model, 0.0), 0.0};
  const long n = static_cast<long>(qmax / step);
  for (long i = 1; i <= n; ++i) {
    const double q = i * step;
    const double v = b_point_mass(model, q);
    if (v < best.value) best = {v, q};
  }
  return best;
}

// Closed-form B for the single-species two-atom pair (0 with mass m, q).
inline double b_one_rsb(const mssg::MixtureModel& model, double m, double q) {
  Eigen::VectorXd at(1), one = Eigen::VectorXd::Ones(1), zero = Eigen::VectorXd::Zero(1);
  at[0] = q;
  const double d2 = 1 - q;
  const double d1 = d2 + m * q;
  const double h = model.field()[0];
  return 0.5 * (h * h * d1 + std::log(d1 / d2) / m + std::log(d2)) +
         0.5 * (m * (model.xi(at) - model.xi(zero)) + model.xi(one) - model.xi(at));
}

// Coarse grid over (m, q) followed by successive local refinement.
inline double grid_one_rsb(const mssg::MixtureModel& model) {
  double best = b_one_rsb(model, 0.5, 0.0);
  double bm = 0.5, bq = 0.0;
  for (int i = 1; i < 1000; ++i)
    for (int j = 0; j < 1000; ++j) {
      const double m = i * 1e-3, q = j * 1e-3;
      const double v = b_one_rsb(model, m, q);
      if (v < best) best = v, bm = m, bq = q;
    }
  double width = 2e-3;
  for (int round = 0; round < 8; ++round) {
    const double cm = bm, cq = bq;
    for (int i = -50; i <= 50; ++i)
      for (int j = -50; j <= 50; ++j) {
        const double m = cm + i * width / 50, q = cq + j * width / 50;
        if (m <= 0 || m > 1 || q < 0 || q >= 1) continue;
        const double v = b_one_rsb(model, m, q);
        if (v < best) best = v, bm = m, bq = q;
      }
    width /= 20;
  }
  return best;
}

}  // namespace testing
