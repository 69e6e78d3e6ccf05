#include "bisac/barrier_solver.hpp"

#include "bisac/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bisac {

namespace {

// Constraints are scaled so each g is dimensionless for balls ((|Sz-c|^2 - r^2)/r^2)
// and in meters for halfspaces ((b - a^T z)/|a|).
struct Local {
    double value;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;  // empty for affine constraints
};

class Constraints {
public:
    explicit Constraints(const ConvexProgram& p) : n_(p.dimension()) {
        for (const auto& b : p.balls) {
            if (std::isfinite(b.radius)) balls_.push_back(b);
        }
        for (const auto& h : p.halfspaces) {
            const double norm = h.normal.norm();
            if (norm > 0.0) halfspaces_.push_back({h.normal / norm, h.offset / norm});
        }
    }

    int count() const { return static_cast<int>(balls_.size() + halfspaces_.size()); }

    std::vector<Local> evaluate(const Eigen::VectorXd& z) const {
        std::vector<Local> out;
        out.reserve(count());
        for (const auto& b : balls_) {
            const double r2 = b.radius * b.radius;
            const Eigen::Vector2d diff = b.selector * z - b.center;
            out.push_back({(diff.squaredNorm() - r2) / r2, 2.0 * b.selector.transpose() * diff / r2,
                           2.0 * b.selector.transpose() * b.selector / r2});
        }
        for (const auto& h : halfspaces_) {
            out.push_back({h.offset - h.normal.dot(z), -h.normal, Eigen::MatrixXd()});
        }
        return out;
    }

    double max_value(const Eigen::VectorXd& z) const {
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& c : evaluate(z)) worst = std::max(worst, c.value);
        return worst;
    }

    int dimension() const { return n_; }

private:
    int n_;
    std::vector<BallConstraint> balls_;
    std::vector<LinearConstraint> halfspaces_;
};

// f_t(w) = t c^T w - sum log(-h_i(w)), where h_i are the constraint values in w-space.
// In phase I, w = (z, s) and h_i = g_i(z) - s plus the bound -1 - s.
class CenteringProblem {
public:
    CenteringProblem(const Constraints& cons, Eigen::VectorXd cost, bool phase_one)
        : cons_(cons), cost_(std::move(cost)), phase_one_(phase_one) {}

    int barrier_terms() const { return cons_.count() + (phase_one_ ? 1 : 0); }

    // Returns false when w is outside the strict interior.
    bool evaluate(const Eigen::VectorXd& w, double t, double* value, Eigen::VectorXd* grad,
                  Eigen::MatrixXd* hess) const {
        const int n = cons_.dimension();
        const int dim = static_cast<int>(w.size());
        const Eigen::VectorXd z = w.head(n);
        const double s = phase_one_ ? w(n) : 0.0;
        // Measured from ref_ so line-search comparisons do not cancel at large t.
        double f = ref_.size() == w.size() ? t * cost_.dot(w - ref_) : t * cost_.dot(w);
        Eigen::VectorXd g = t * cost_;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

        auto add_term = [&](double hv, const Eigen::VectorXd& hg, const Eigen::MatrixXd* hh) {
            if (!(hv < 0.0)) return false;
            f -= std::log(-hv);
            g += hg / (-hv);
            h += hg * hg.transpose() / (hv * hv);
            if (hh != nullptr) h += *hh / (-hv);
            return true;
        };

        for (const auto& c : cons_.evaluate(z)) {
            Eigen::VectorXd cg = Eigen::VectorXd::Zero(dim);
            cg.head(n) = c.grad;
            Eigen::MatrixXd ch;
            if (c.hess.size() > 0) {
                ch = Eigen::MatrixXd::Zero(dim, dim);
                ch.topLeftCorner(n, n) = c.hess;
            }
            double hv = c.value;
            if (phase_one_) {
                hv -= s;
                cg(n) = -1.0;
            }
            if (!add_term(hv, cg, ch.size() > 0 ? &ch : nullptr)) return false;
        }
        if (phase_one_) {
            Eigen::VectorXd cg = Eigen::VectorXd::Zero(dim);
            cg(n) = -1.0;
            if (!add_term(-1.0 - s, cg, nullptr)) return false;
        }
        if (value) *value = f;
        if (grad) *grad = g;
        if (hess) *hess = h;
        return true;
    }

    // Damped Newton on f_t from a strictly feasible w. Returns the number of steps taken.
    int center(Eigen::VectorXd& w, double t, const BarrierOptions& opt, int budget) {
        int steps = 0;
        double f = 0.0;
        ref_ = w;
        Eigen::VectorXd g;
        Eigen::MatrixXd h;
        while (steps < budget) {
            evaluate(w, t, &f, &g, &h);
            h.diagonal().array() += 1e-14 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
            const Eigen::VectorXd dw = h.ldlt().solve(-g);
            const double decrement2 = -g.dot(dw);
            if (!std::isfinite(decrement2) || decrement2 / 2.0 <= opt.newton_tolerance) break;
            double alpha = 1.0;
            double f_new = 0.0;
            bool moved = false;
            for (int ls = 0; ls < 60; ++ls) {
                const Eigen::VectorXd trial = w + alpha * dw;
                if (evaluate(trial, t, &f_new, nullptr, nullptr) && f_new <= f - 0.25 * alpha * decrement2) {
                    // Steps below roundoff mean the center is as good as this t allows.
                    moved = (alpha * dw).norm() > 1e-13 * (1.0 + w.norm());
                    w = trial;
                    break;
                }
                alpha *= 0.5;
            }
            ++steps;
            if (!moved) break;
        }
        return steps;
    }

private:
    const Constraints& cons_;
    Eigen::VectorXd cost_;
    bool phase_one_;
    Eigen::VectorXd ref_;
};

}  // namespace

double ConvexProgram::max_violation(const Eigen::VectorXd& z) const {
    return Constraints(*this).max_value(z);
}

double kkt_residual(const ConvexProgram& program, const Eigen::VectorXd& z) {
    const Constraints cons(program);
    const std::vector<Local> g = cons.evaluate(z);
    const double c_norm = program.objective.norm();
    const Eigen::VectorXd c = c_norm > 0.0 ? Eigen::VectorXd(program.objective / c_norm) : program.objective;
    double violation = 0.0;
    for (const auto& gi : g) violation = std::max(violation, gi.value);

    // Enumerate multiplier supports; there are at most a handful of constraints.
    const int m = static_cast<int>(g.size());
    double best = c.norm();
    for (unsigned mask = 1; mask < (1u << m); ++mask) {
        std::vector<int> idx;
        for (int i = 0; i < m; ++i) {
            if (mask & (1u << i)) idx.push_back(i);
        }
        Eigen::MatrixXd jac(c.size(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) jac.col(static_cast<Eigen::Index>(k)) = g[idx[k]].grad;
        const Eigen::VectorXd lambda = jac.completeOrthogonalDecomposition().solve(-c);
        if (lambda.minCoeff() < 0.0) continue;
        double complementarity = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            complementarity += lambda(static_cast<Eigen::Index>(k)) * std::abs(g[idx[k]].value);
        }
        best = std::min(best, std::max((c + jac * lambda).norm(), complementarity));
    }
    return std::max(best, violation);
}

BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& hint,
                            const BarrierOptions& options) {
    const int n = program.dimension();
    if (hint.size() != n) {
        throw Error(ErrorCode::InvalidInput, "barrier start has wrong dimension");
    }
    const Constraints cons(program);
    BarrierResult result;
    result.z = hint;

    const double c_norm = program.objective.norm();
    if (c_norm == 0.0) {
        if (cons.count() > 0 && cons.max_value(hint) > 1e-9) {
            throw Error(ErrorCode::SubproblemInfeasible, "zero objective with an infeasible start");
        }
        return result;
    }
    if (cons.count() == 0) {
        throw Error(ErrorCode::InvalidInput, "unconstrained linear program is unbounded");
    }

    // Phase I: minimize s subject to g_i(z) <= s, s >= -1.
    Eigen::VectorXd z = hint;
    if (cons.max_value(z) >= -1e-9) {
        Eigen::VectorXd w(n + 1);
        w.head(n) = hint;
        w(n) = std::max(cons.max_value(hint) + 1.0, -0.5);
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + 1);
        cost(n) = 1.0;
        CenteringProblem phase_one(cons, cost, true);
        double t = options.initial_t;
        const double m = phase_one.barrier_terms();
        while (true) {
            result.newton_steps += phase_one.center(w, t, options, options.max_newton_steps);
            if (w(n) < -1e-6 || m / t < 1e-12) break;
            t *= options.t_growth;
        }
        if (!(w(n) < 0.0)) {
            if (cons.max_value(hint) <= 1e-9) {
                result.interior_found = false;
                return result;
            }
            throw Error(ErrorCode::SubproblemInfeasible,
                        "constraint set is empty (phase-I optimum " + std::to_string(w(n)) + ")");
        }
        z = w.head(n);
    }

    // Phase II on the normalized objective.
    const Eigen::VectorXd cost = program.objective / c_norm;
    CenteringProblem phase_two(cons, cost, false);
    double t = options.initial_t;
    const double m = phase_two.barrier_terms();
    while (true) {
        result.newton_steps += phase_two.center(z, t, options, options.max_newton_steps);
        if (m / t < options.gap_tolerance) break;
        t *= options.t_growth;
    }
    result.z = z;
    result.kkt_residual = kkt_residual(program, z);
    return result;
}

}  // namespace bisac
