#pragma once

#include <Eigen/Dense>

#include <vector>

namespace bisac {

/// ||selector * z - center|| <= radius. An infinite radius is ignored.
struct BallConstraint {
    Eigen::MatrixXd selector;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
};

/// normal^T z >= offset
struct LinearConstraint {
    Eigen::VectorXd normal;
    double offset = 0.0;
};

/// minimize objective^T z over an intersection of balls and halfspaces.
struct ConvexProgram {
    Eigen::VectorXd objective;
    std::vector<BallConstraint> balls;
    std::vector<LinearConstraint> halfspaces;

    int dimension() const { return static_cast<int>(objective.size()); }
    /// Largest normalized violation; <= 0 means feasible.
    double max_violation(const Eigen::VectorXd& z) const;
};

struct BarrierOptions {
    double initial_t = 1.0;
    double t_growth = 10.0;
    double gap_tolerance = 1e-8;
    double newton_tolerance = 1e-12;
    int max_newton_steps = 200;
};

struct BarrierResult {
    Eigen::VectorXd z;
    double kkt_residual = 0.0;
    int newton_steps = 0;
    bool interior_found = true;
};

/// Log-barrier interior method with a phase-I search for a strictly interior start.
/// `hint` seeds phase I and is returned unchanged when the objective vanishes.
/// Throws SubproblemInfeasible when the constraint set has no interior point and `hint`
/// is not itself feasible.
/// KKT residual of z with the best nonnegative multipliers: the larger of stationarity
/// |c/|c| + sum lambda_i grad g_i|, complementarity sum lambda_i |g_i| and primal violation.
double kkt_residual(const ConvexProgram& program, const Eigen::VectorXd& z);

BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& hint,
                            const BarrierOptions& options = {});

}  // namespace bisac
