#include "mssg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "mssg/isotonic.hpp"
#include "mssg/parallel.hpp"

namespace mssg {

SupportBound support_bound(const MixtureModel& model) {
  const int n = model.num_species();
  const Eigen::VectorXd xs1 = model.xi_species(Eigen::VectorXd::Ones(n));
  SupportBound out;
  out.u = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.qbar = 0.0;
  for (int s = 0; s < n; ++s) {
    const double a = model.field()[s] * model.field()[s] + xs1[s];
    if (!(a > 0.0)) continue;
    const double u = 1.0 - (std::sqrt(1.0 + 4.0 * a) - 1.0) / (2.0 * a);
    out.u[s] = u;
    out.qbar = std::max(out.qbar, ((1.0 - u) * a + u) / ((1.0 - u) * a + 1.0));
  }
  return out;
}

BAssignment recover_b(const DiscretePair& pair, const MixtureModel& model) {
  const int k = pair.num_atoms();
  const Eigen::MatrixXd delta = delta_at_atoms(pair);
  const Eigen::MatrixXd d = d_at_atoms(pair, model);
  BAssignment b;
  b.b.resize(pair.num_species());
  for (int s = 0; s < pair.num_species(); ++s) {
    if (!(delta(s, k) > 0.0)) throw SolverError("recover_b: Delta vanishes at the last atom");
    b.b[s] = d(s, k) + 1.0 / delta(s, k);
  }
  return b;
}

BAssignment stationary_b(const DiscretePair& pair, const MixtureModel& model) {
  if (!pair.satisfies_gap()) throw SolverError("stationary_b: gap condition fails");
  const int k = pair.num_atoms();
  const int n = pair.num_species();
  const Eigen::MatrixXd ext = pair.extended_points();
  Eigen::MatrixXd xs(n, k + 2);
  for (int r = 0; r <= k + 1; ++r) xs.col(r) = model.xi_species(ext.col(r));
  const Eigen::MatrixXd d = d_at_atoms(pair, model);

  BAssignment out;
  out.b.resize(n);
  for (int s = 0; s < n; ++s) {
    const double h2 = model.field()[s] * model.field()[s];
    const double d0 = d(s, 0);
    // (2 / lambda^s) dA/db^s
    auto slope = [&](double b) {
      const double g0 = b - d0;
      double v = 1.0 - 1.0 / b - (h2 + xs(s, 0)) / (g0 * g0) - (xs(s, 1) - xs(s, 0)) / (g0 * g0);
      for (int l = 1; l <= k; ++l)
        v -= (xs(s, l + 1) - xs(s, l)) / ((b - d(s, l)) * (b - d(s, l + 1)));
      return v;
    };
    double lo = d0 + 1e-12 * (1.0 + d0);
    if (slope(lo) >= 0.0) {
      out.b[s] = lo;
      continue;
    }
    double theta = 1.0;
    double hi = d0 + theta;
    int doublings = 0;
    while (slope(hi) <= 0.0) {
      if (++doublings > 60) throw SolverError("stationary_b: no sign change found");
      theta *= 2.0;
      hi = d0 + theta;
    }
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (slope(mid) > 0.0 ? hi : lo) = mid;
    }
    out.b[s] = std::abs(slope(lo)) <= std::abs(slope(hi)) ? lo : hi;
  }
  return out;
}

namespace {

constexpr double kWeightGap = 1e-9;
constexpr double kMinMass = 1e-10;
constexpr double kPruneSlack = 1e-10;

struct State {
  Eigen::VectorXd m;
  Eigen::MatrixXd P;

  int k() const { return static_cast<int>(m.size()); }
  double mass(int j) const { return j == 0 ? m[0] : m[j] - m[j - 1]; }
};

double dot(const State& a, const State& b) {
  return (a.P.array() * b.P.array()).sum() + a.m.dot(b.m);
}

double inf_norm(const State& a) {
  double v = a.P.size() ? a.P.cwiseAbs().maxCoeff() : 0.0;
  if (a.m.size()) v = std::max(v, a.m.cwiseAbs().maxCoeff());
  return v;
}

State axpy(const State& x, double t, const State& d) {
  return State{x.m + t * d.m, x.P + t * d.P};
}

State diff(const State& a, const State& b) { return State{a.m - b.m, a.P - b.P}; }

// Convex combinations of ordered columns can lose order by an ulp.
void restore_order(State& x) {
  for (Eigen::Index s = 0; s < x.P.rows(); ++s)
    for (Eigen::Index j = 1; j < x.P.cols(); ++j) x.P(s, j) = std::max(x.P(s, j), x.P(s, j - 1));
}

void project(State& x, double qbar) {
  Eigen::VectorXd row;
  for (Eigen::Index s = 0; s < x.P.rows(); ++s) {
    row = x.P.row(s).transpose();
    project_monotone_box(row, 0.0, qbar);
    x.P.row(s) = row.transpose();
  }
  const int k = x.k();
  if (k > 1) {
    auto head = x.m.head(k - 1);
    project_weights(head, kWeightGap);
  }
  x.m[k - 1] = 1.0;
}

double value_of(const MixtureModel& model, const State& x) {
  return detail::eval_B_raw(x.m, x.P, model);
}

State gradient_of(const MixtureModel& model, const State& x) {
  State g;
  g.P = detail::grad_B_points_raw(x.m, x.P, model);
  g.m = Eigen::VectorXd::Zero(x.k());
  if (x.k() > 1) g.m.head(x.k() - 1) = detail::grad_B_weights_raw(x.m, x.P, model, 1e-6);
  return g;
}

struct Descent {
  State x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Spectral projected gradient with a nonmonotone Armijo search.
Descent descend(const MixtureModel& model, State x, double qbar, const SolveConfig& cfg) {
  project(x, qbar);
  double f = value_of(model, x);
  State g = gradient_of(model, x);
  Descent best{x, f, false, 0};

  auto projected_step = [&](const State& at, const State& grad, double alpha) {
    State trial = axpy(at, -alpha, grad);
    project(trial, qbar);
    return diff(trial, at);
  };

  double alpha = std::min(1e6, 1.0 / std::max(1e-10, inf_norm(g)));
  std::deque<double> history{f};
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (inf_norm(projected_step(x, g, 1.0)) < cfg.tol_grad) {
      best.converged = true;
      break;
    }
    const State d = projected_step(x, g, alpha);
    const double gd = dot(g, d);
    if (!(gd < 0.0)) {
      best.converged = true;
      break;
    }
    const double fref = *std::max_element(history.begin(), history.end());
    double t = 1.0;
    State xn;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = axpy(x, t, d);
      restore_order(xn);
      fn = value_of(model, xn);
      if (fn <= fref + 1e-4 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    const State gn = gradient_of(model, xn);
    const State s = diff(xn, x);
    const State y = diff(gn, g);
    const double sy = dot(s, y);
    alpha = sy > 0.0 ? std::clamp(dot(s, s) / sy, 1e-12, 1e6) : 1e6;
    x = std::move(xn);
    g = gn;
    f = fn;
    history.push_back(f);
    if (history.size() > 10) history.pop_front();
    if (f < best.value) {
      best.x = x;
      best.value = f;
    }
  }
  best.iterations = it;
  if (!best.converged && it < cfg.max_iters) {
    // line search exhausted: the iterate is stationary to working precision
    best.converged = inf_norm(projected_step(best.x, gradient_of(model, best.x), 1.0)) <
                     std::sqrt(cfg.tol_grad);
  }
  return best;
}

void erase_atom(State& x, int j) {
  const int k = x.k();
  Eigen::VectorXd m(k - 1);
  Eigen::MatrixXd P(x.P.rows(), k - 1);
  for (int i = 0, o = 0; i < k; ++i) {
    if (i == j) continue;
    m[o] = x.m[i];
    P.col(o) = x.P.col(i);
    ++o;
  }
  x.m = std::move(m);
  x.P = std::move(P);
}

// Atom j absorbs atom j+1 at the mass-weighted mean location.
State merge_pair(const State& x, int j) {
  State y = x;
  const double w1 = x.mass(j);
  const double w2 = x.mass(j + 1);
  y.P.col(j + 1) = (w1 * x.P.col(j) + w2 * x.P.col(j + 1)) / (w1 + w2);
  erase_atom(y, j);
  restore_order(y);
  return y;
}

State merge_close(State x, double tol) {
  for (int j = 0; j + 1 < x.k();) {
    if ((x.P.col(j) - x.P.col(j + 1)).lpNorm<Eigen::Infinity>() <= tol)
      x = merge_pair(x, j);
    else
      ++j;
  }
  return x;
}

State drop_light(State x) {
  for (int j = 0; j < x.k() && x.k() > 1;) {
    if (x.mass(j) >= kMinMass) {
      ++j;
      continue;
    }
    if (j + 1 < x.k()) {
      erase_atom(x, j);
    } else {
      const int k = x.k();
      x.m.conservativeResize(k - 1);
      x.P.conservativeResize(Eigen::NoChange, k - 1);
      x.m[k - 2] = 1.0;
    }
  }
  return x;
}

// Greedily merges adjacent atoms while B does not go up by more than the slack.
State prune(const MixtureModel& model, State x) {
  double current = value_of(model, x);
  for (bool changed = true; changed && x.k() > 1;) {
    changed = false;
    double best_value = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j + 1 < x.k(); ++j) {
      const double v = value_of(model, merge_pair(x, j));
      if (v < best_value) {
        best_value = v;
        best_j = j;
      }
    }
    if (best_j >= 0 && best_value <= current + kPruneSlack) {
      x = merge_pair(x, best_j);
      current = std::min(current, best_value);
      changed = true;
    }
  }
  return x;
}

State polish_state(const MixtureModel& model, const State& x, double qbar) {
  const int n = static_cast<int>(x.P.rows());
  const int k = x.k();
  const int dim = n * k;
  auto residual = [&](const Eigen::MatrixXd& P) {
    const Eigen::MatrixXd br = detail::point_brackets_raw(x.m, P, model);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(br.data(), dim));
  };
  auto feasible = [&](Eigen::MatrixXd P) {
    State s{x.m, std::move(P)};
    project(s, qbar);
    return s.P;
  };

  Eigen::MatrixXd P = x.P;
  Eigen::VectorXd F = residual(P);
  const double start_norm = F.lpNorm<Eigen::Infinity>();
  double mu = 1e-8;
  for (int it = 0; it < 200 && F.lpNorm<Eigen::Infinity>() > 1e-15; ++it) {
    Eigen::MatrixXd J(dim, dim);
    for (int c = 0; c < dim; ++c) {
      Eigen::MatrixXd Q = P;
      double& v = Q.data()[c];
      const double h = 1e-7 * std::max(1.0, std::abs(v));
      const double step = v + h <= qbar ? h : -h;
      v += step;
      J.col(c) = (residual(Q) - F) / step;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd rhs = -J.transpose() * F;
    bool improved = false;
    while (mu < 1e10) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += mu * (JtJ.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd delta = A.ldlt().solve(rhs);
      Eigen::MatrixXd cand = P;
      Eigen::Map<Eigen::VectorXd>(cand.data(), dim) += delta;
      cand = feasible(std::move(cand));
      const Eigen::VectorXd Fc = residual(cand);
      if (Fc.squaredNorm() < F.squaredNorm()) {
        P = std::move(cand);
        F = Fc;
        mu = std::max(mu / 10.0, 1e-15);
        improved = true;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  if (!(F.lpNorm<Eigen::Infinity>() < start_norm)) return x;
  State out{x.m, P};
  if (!(value_of(model, out) <= value_of(model, x) + 1e-9)) return x;
  return out;
}

// Merge, drop, prune, polish; repeated once in case polishing brings atoms
// together.
State finish(const MixtureModel& model, State x, double qbar, double merge_tol) {
  for (int round = 0; round < 2; ++round) {
    x = drop_light(merge_close(std::move(x), merge_tol));
    x = prune(model, std::move(x));
    x = polish_state(model, x, qbar);
  }
  return drop_light(merge_close(std::move(x), merge_tol));
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

State stratified_start(int n, int k, double qbar, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  State x;
  x.m.resize(k);
  x.P.resize(n, k);
  for (int j = 0; j < k; ++j) x.m[j] = static_cast<double>(j + 1) / k;
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < k; ++j) x.P(s, j) = qbar * (j + unit()) / k;
  return x;
}

State rs_start(int n, int k) {
  State x;
  x.m.resize(k);
  for (int j = 0; j < k; ++j) x.m[j] = static_cast<double>(j + 1) / k;
  x.P = Eigen::MatrixXd::Zero(n, k);
  return x;
}

// Duplicates the heaviest atom until there are k atoms.
State warm_start(State x, int k) {
  while (x.k() < k) {
    int heavy = 0;
    for (int j = 1; j < x.k(); ++j)
      if (x.mass(j) > x.mass(heavy)) heavy = j;
    const double lower = heavy == 0 ? 0.0 : x.m[heavy - 1];
    const int old_k = x.k();
    State y;
    y.m.resize(old_k + 1);
    y.P.resize(x.P.rows(), old_k + 1);
    for (int i = 0, o = 0; i < old_k; ++i, ++o) {
      if (i == heavy) {
        y.m[o] = lower + 0.5 * x.mass(heavy);
        y.P.col(o) = x.P.col(i);
        ++o;
      }
      y.m[o] = x.m[i];
      y.P.col(o) = x.P.col(i);
    }
    x = std::move(y);
  }
  return x;
}

// Splits the heaviest atom and moves one half up by a small amount.
State nudge(const State& x, double qbar) {
  State y = warm_start(x, x.k() + 1);
  int heavy = 0;
  for (int j = 1; j < y.k(); ++j)
    if (y.mass(j) > y.mass(heavy)) heavy = j;
  const int upper = std::min(heavy + 1, y.k() - 1);
  for (int j = upper; j < y.k(); ++j)
    y.P.col(j) = (y.P.col(j).array() + 1e-3).min(qbar).matrix();
  return y;
}

bool lex_less(const State& a, const State& b) {
  if (a.k() != b.k()) return a.k() < b.k();
  for (int j = 0; j < a.k(); ++j)
    if (a.m[j] != b.m[j]) return a.m[j] < b.m[j];
  for (Eigen::Index i = 0; i < a.P.size(); ++i)
    if (a.P.data()[i] != b.P.data()[i]) return a.P.data()[i] < b.P.data()[i];
  return false;
}

struct Candidate {
  State x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value < b.value;
  return lex_less(a.x, b.x);
}

DiscretePair to_pair(State x) {
  restore_order(x);
  return DiscretePair(x.m, x.P);
}

}  // namespace

DiscretePair polish_points(const DiscretePair& pair, const MixtureModel& model, double qbar) {
  const State x{pair.weights(), pair.points()};
  return to_pair(polish_state(model, x, qbar));
}

SolveReport minimize_B(const MixtureModel& model, const SolveConfig& config) {
  if (config.k_max < 1 || config.multistart_seeds < 0 || config.max_iters < 1 ||
      !(config.tol_B > 0.0) || !(config.tol_grad > 0.0) || !(config.merge_tol >= 0.0))
    throw ValidationError("solve config: parameters must be positive and k_max >= 1");

  const int n = model.num_species();
  int grid = 2;
  while (std::pow(grid + 2, n) <= 20000.0 && grid < 20) ++grid;
  const auto h3 = check_convexity(model, ConvexityMode::H3, grid);
  if (!h3.pass) {
    std::string where;
    for (Eigen::Index i = 0; i < h3.witness.size(); ++i)
      where += (i ? "," : "") + std::to_string(h3.witness[i]);
    throw ValidationError("model: Hessian of xi is not nonnegative definite at q=(" + where + ")");
  }

  SolveReport report;
  report.strict_convexity = check_convexity(model, ConvexityMode::H3Strict, grid).pass;
  report.bound = support_bound(model);
  const double qbar = report.bound.qbar;
  const int workers = worker_count(config.threads);

  std::vector<int> levels;
  for (int k = 1; k < config.k_max; k *= 2) levels.push_back(k);
  levels.push_back(config.k_max);

  std::optional<Candidate> best;
  std::vector<Candidate> last_level;
  for (int k : levels) {
    std::vector<State> starts;
    starts.push_back(rs_start(n, k));
    for (int i = 0; i < config.multistart_seeds; ++i) {
      const std::uint64_t seed =
          splitmix(splitmix(config.seed) ^ (static_cast<std::uint64_t>(k) << 32) ^
                   static_cast<std::uint64_t>(i));
      starts.push_back(stratified_start(n, k, qbar, seed));
    }
    if (best) starts.push_back(warm_start(best->x, k));

    std::vector<Candidate> results(starts.size());
    parallel_for(starts.size(), workers, [&](std::size_t i) {
      const Descent d = descend(model, starts[i], qbar, config);
      results[i] = Candidate{d.x, d.value, d.converged, d.iterations};
    });

    EscalationStep step;
    step.k = k;
    step.starts = static_cast<int>(results.size());
    const Candidate* level_best = nullptr;
    for (const auto& c : results) {
      if (c.converged) ++step.converged_starts;
      if (!std::isfinite(c.value)) continue;
      if (!level_best || better(c, *level_best)) level_best = &c;
    }
    if (!level_best) throw SolverError("minimize_B: every start failed at k=" + std::to_string(k));
    step.best_value = level_best->value;
    step.atoms = drop_light(merge_close(level_best->x, config.merge_tol)).k();
    report.escalation.push_back(step);

    const bool stagnated = best && best->value - level_best->value < config.tol_B;
    if (!best || level_best->value < best->value) best = *level_best;
    last_level = std::move(results);
    if (stagnated) break;
  }

  // Distinct local minima from the final level, post-processed and sorted.
  std::vector<Candidate> pool = last_level;
  pool.push_back(*best);
  std::sort(pool.begin(), pool.end(), better);
  std::vector<Candidate> distinct;
  for (const auto& c : pool) {
    if (!std::isfinite(c.value)) continue;
    const State reduced = drop_light(merge_close(c.x, config.merge_tol));
    bool seen = false;
    for (const auto& d : distinct) {
      if (std::abs(d.value - c.value) <= 1e-7 &&
          pseudometric(to_pair(d.x), to_pair(reduced)) <= 1e-3) {
        seen = true;
        break;
      }
    }
    if (!seen) distinct.push_back(Candidate{reduced, c.value, c.converged, c.iterations});
  }
  std::vector<std::optional<Candidate>> polished(distinct.size());
  parallel_for(distinct.size(), workers, [&](std::size_t i) {
    // Stationary points that are not minima (delta_0 without a field, say)
    // are discarded when a nudged restart finds a clearly lower value.
    if (i > 0) {
      const Descent nudged = descend(model, nudge(distinct[i].x, qbar), qbar, config);
      if (nudged.value < distinct[i].value - 10.0 * config.tol_B) return;
    }
    State x = finish(model, distinct[i].x, qbar, config.merge_tol);
    polished[i] = Candidate{x, value_of(model, x), distinct[i].converged, distinct[i].iterations};
  });
  std::vector<Candidate> finished;
  for (auto& c : polished)
    if (c) finished.push_back(std::move(*c));
  std::sort(finished.begin(), finished.end(), better);

  for (const auto& c : finished)
    report.local_minima.push_back(LocalMinimum{c.value, to_pair(c.x), c.converged, c.iterations});
  report.value = finished.front().value;
  report.pair = report.local_minima.front().pair;
  report.b = recover_b(report.pair, model);
  report.residuals = compute_residuals(report.pair, model, report.b, report.strict_convexity);
  report.a_value = report.residuals.a_value;
  return report;
}

}  // namespace mssg
