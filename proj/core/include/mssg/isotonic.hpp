#pragma once

#include <Eigen/Dense>

namespace mssg {

/// Euclidean projection onto nondecreasing sequences (pool adjacent violators).
void isotonic_nondecreasing(Eigen::Ref<Eigen::VectorXd> y);

/// Projection onto {lo <= y_1 <= ... <= y_n <= hi}.
void project_monotone_box(Eigen::Ref<Eigen::VectorXd> y, double lo, double hi);

/// Projection of free cumulative weights m_1..m_{k-1} onto
/// gap <= m_1, m_{i+1} - m_i >= gap, m_{k-1} <= 1 - gap.
void project_weights(Eigen::Ref<Eigen::VectorXd> free_weights, double gap);

}  // namespace mssg
