#include "mssg/isotonic.hpp"

#include <vector>

namespace mssg {

void isotonic_nondecreasing(Eigen::Ref<Eigen::VectorXd> y) {
  const Eigen::Index n = y.size();
  if (n < 2) return;
  std::vector<double> level;
  std::vector<Eigen::Index> count;
  level.reserve(n);
  count.reserve(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    level.push_back(y[i]);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const auto c1 = count[count.size() - 2];
      const auto c2 = count.back();
      const double merged = (level[level.size() - 2] * c1 + level.back() * c2) / (c1 + c2);
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = c1 + c2;
    }
  }
  Eigen::Index i = 0;
  for (std::size_t b = 0; b < level.size(); ++b)
    for (Eigen::Index c = 0; c < count[b]; ++c) y[i++] = level[b];
}

void project_monotone_box(Eigen::Ref<Eigen::VectorXd> y, double lo, double hi) {
  isotonic_nondecreasing(y);
  y = y.cwiseMax(lo).cwiseMin(hi);
}

void project_weights(Eigen::Ref<Eigen::VectorXd> free_weights, double gap) {
  const Eigen::Index n = free_weights.size();
  if (n == 0) return;
  for (Eigen::Index i = 0; i < n; ++i) free_weights[i] -= static_cast<double>(i + 1) * gap;
  project_monotone_box(free_weights, 0.0, 1.0 - static_cast<double>(n + 1) * gap);
  for (Eigen::Index i = 0; i < n; ++i) free_weights[i] += static_cast<double>(i + 1) * gap;
}

}  // namespace mssg
