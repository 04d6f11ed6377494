#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "perftx/errors.hpp"

namespace perftx {

/// Hyperparameters of the squared-exponential ARD kernel plus observation
/// noise and a constant mean:
///   k(x, x') = signal_variance * exp(-1/2 * sum_d (x_d - x'_d)^2 / lengthscales_d^2)
struct KernelParams {
    Eigen::VectorXd lengthscales;   // one per input dimension, > 0
    double signal_variance = 1.0;   // > 0
    double noise_variance = 0.0;    // >= 0
    double mean_constant = 0.0;

    void validate() const;

    /// Conventional starting point for unit-cube inputs and standardized targets.
    static KernelParams defaults(Eigen::Index dimension);
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct FitOptions {
    int restarts = 5;                 // restart 0 starts from the caller's init
    int max_iterations = 200;
    double objective_tolerance = 1e-6;
    std::uint64_t seed = 0;
    std::optional<double> fixed_noise_variance; // exclude noise from optimization
};

struct FitReport {
    int iterations = 0;              // accepted ascent steps of the winning restart
    int restarts = 0;
    double initial_log_marginal = 0.0;
    double final_log_marginal = 0.0;
    double train_seconds = 0.0;
};

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Pairwise kernel matrix over the rows of X (noise not included).
Eigen::MatrixXd gram(const KernelParams& params, const Eigen::MatrixXd& X);

struct LogMarginal {
    double value = 0.0;
    /// Gradient over [log lengthscale_1..d, log signal_variance, log noise_variance, mean_constant].
    Eigen::VectorXd gradient;
};

/// Gaussian log-evidence of y under the GP prior, with analytic gradient.
LogMarginal log_marginal_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y);

/// Fitted single-task GP. Immutable once constructed; safe to share across
/// threads for concurrent prediction.
class GPModel {
public:
    /// Builds the posterior for the given hyperparameters as-is (no
    /// optimization). `params` applies to targets standardized with the given
    /// constants; the defaults mean "use the targets as they are".
    /// Factorization happens here.
    static GPModel from_params(const KernelParams& params, Eigen::MatrixXd X, Eigen::VectorXd y,
                               double y_mean = 0.0, double y_scale = 1.0);

    Prediction predict(const Eigen::VectorXd& x) const;
    void predict_many(const Eigen::MatrixXd& X, Eigen::VectorXd& means,
                      Eigen::VectorXd& variances) const;

    const KernelParams& params() const { return params_; }
    const Eigen::MatrixXd& train_inputs() const { return X_; }
    const Eigen::VectorXd& train_targets() const { return y_; }
    double target_mean() const { return y_mean_; }
    double target_scale() const { return y_scale_; }
    double jitter() const { return jitter_; }
    const FitReport& fit_report() const { return report_; }

    /// Max relative error of L*L^T against K + noise*I + jitter*I, and the
    /// relative residual of alpha; both used by the structural invariants.
    double factorization_error() const;
    double alpha_residual() const;

private:
    friend GPModel fit(const Eigen::MatrixXd&, const Eigen::VectorXd&, const KernelParams&,
                       const FitOptions&);
    GPModel() = default;
    void factorize();

    KernelParams params_;        // in standardized-target space
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;          // raw targets
    double y_mean_ = 0.0;        // standardization constants
    double y_scale_ = 1.0;
    Eigen::MatrixXd L_;          // lower Cholesky factor of K + noise*I + jitter*I
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    FitReport report_;
};

/// Learns hyperparameters by maximizing the marginal likelihood with
/// multi-restart projected gradient ascent and backtracking line search.
/// Targets are standardized internally (zero mean, unit variance); `init` is
/// interpreted in standardized-target space. Deterministic given `opts.seed`.
GPModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelParams& init,
            const FitOptions& opts = {});

} // namespace perftx
