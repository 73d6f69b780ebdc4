#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "mssg/model.hpp"
#include "mssg/orderparam.hpp"

namespace mssg {

/// Raised when a Parisi vector violates b^s > d^s(0).
class ConstraintError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Per-species Parisi auxiliary values b^s.
struct BAssignment {
  Eigen::VectorXd b;
};

struct FunctionalEval {
  double value = 0.0;
  std::optional<Eigen::MatrixXd> gradient;
};

/// Discrete Crisanti-Sommers functional. Returns +infinity when the gap
/// condition q_k^s < 1 fails.
double eval_B(const DiscretePair& pair, const MixtureModel& model);

/// B evaluated with q_* moved past the last atom to a point where Phi takes
/// the value `qstar_point` (every entry in [q_k^s, 1)). Equal to eval_B.
double eval_B_with_qstar(const DiscretePair& pair, const MixtureModel& model,
                         const Eigen::VectorXd& qstar_point);

/// dB / dq_l^s as an n x k matrix. Throws std::domain_error when the gap
/// condition fails.
Eigen::MatrixXd grad_B_points(const DiscretePair& pair, const MixtureModel& model);

/// dB / dm_r for the free weights m_1..m_{k-1} by central differences.
/// The step shrinks near neighbouring weights so every probe stays ordered.
Eigen::VectorXd grad_B_weights(const DiscretePair& pair, const MixtureModel& model,
                               double step = 1e-6);

FunctionalEval evaluate_B(const DiscretePair& pair, const MixtureModel& model,
                          bool with_gradient);

/// Parisi functional in closed form on a discrete pair. Throws
/// ConstraintError ("b below d(0)") unless b^s > d^s(0) for all s.
double eval_A(const DiscretePair& pair, const MixtureModel& model, const BAssignment& b);

/// dA / db^s (not the 2/lambda^s-normalised form).
Eigen::VectorXd dA_db(const DiscretePair& pair, const MixtureModel& model,
                      const BAssignment& b);

namespace detail {
// Unvalidated kernels on raw (weights, n x k points) used by the optimizer.
// The caller guarantees strictly increasing weights ending at 1 and ordered
// columns in [0,1).
double eval_B_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                  const MixtureModel& model);
/// D_l^s = h_s^2 - q_1^s/(Delta_1^s)^2 - sum_{r<l} (q_{r+1}^s - q_r^s)/(Delta_r^s Delta_{r+1}^s)
///         + xi^s(q_l), so that dB/dq_l^s = -(lambda^s/2)(m_l - m_{l-1}) D_l^s.
Eigen::MatrixXd point_brackets_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                   const MixtureModel& model);
Eigen::MatrixXd grad_B_points_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                  const MixtureModel& model);
Eigen::VectorXd grad_B_weights_raw(const Eigen::VectorXd& m, const Eigen::MatrixXd& points,
                                   const MixtureModel& model, double step);
}  // namespace detail

}  // namespace mssg
