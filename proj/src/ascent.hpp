#pragma once

// Internal: projected gradient ascent with backtracking line search, shared by
// the single-task and transfer model fits. Not installed.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Core>

namespace perftx::detail {

// Evaluates the objective at theta. Returns false on numerical failure
// (e.g. factorization did not succeed). `grad` may be null for value-only
// evaluations during line search.
using Objective =
    std::function<bool(const Eigen::VectorXd& theta, double& value, Eigen::VectorXd* grad)>;

struct AscentResult {
    Eigen::VectorXd theta;
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool ok = false;
};

inline Eigen::VectorXd clamp_to_box(Eigen::VectorXd theta, const Eigen::VectorXd& lo,
                                    const Eigen::VectorXd& hi) {
    for (Eigen::Index i = 0; i < theta.size(); ++i)
        theta[i] = std::min(hi[i], std::max(lo[i], theta[i]));
    return theta;
}

inline AscentResult ascend(const Objective& objective, Eigen::VectorXd theta,
                           const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int max_iterations,
                           double tolerance) {
    AscentResult res;
    theta = clamp_to_box(std::move(theta), lo, hi);
    double value = 0.0;
    Eigen::VectorXd grad(theta.size());
    if (!objective(theta, value, &grad) || !std::isfinite(value)) return res;

    double trial_step = 1.0;
    constexpr double kArmijo = 1e-4;
    constexpr double kShrink = 0.5;
    constexpr double kMinStep = 1e-12;

    for (int iter = 0; iter < max_iterations; ++iter) {
        if (grad.squaredNorm() < 1e-18) break;

        double t = std::min(trial_step * 2.0, 1e3);
        bool accepted = false;
        Eigen::VectorXd candidate;
        double cand_value = 0.0;
        while (t >= kMinStep) {
            candidate = clamp_to_box(theta + t * grad, lo, hi);
            const Eigen::VectorXd step = candidate - theta;
            if (step.squaredNorm() < 1e-24) {
                t *= kShrink;
                continue;
            }
            if (objective(candidate, cand_value, nullptr) && std::isfinite(cand_value) &&
                cand_value > value + kArmijo * grad.dot(step)) {
                accepted = true;
                break;
            }
            t *= kShrink;
        }
        if (!accepted) break;

        trial_step = t;
        const double improvement = cand_value - value;
        theta = std::move(candidate);
        res.iterations = iter + 1;
        if (!objective(theta, value, &grad)) break;
        if (improvement < tolerance) break;
    }

    res.theta = std::move(theta);
    res.value = value;
    res.ok = true;
    return res;
}

} // namespace perftx::detail
