#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "perftx/gp.hpp"

namespace perftx {

/// The two environments of a transfer pair.
enum class TaskTag : std::uint8_t { Source = 0, Target = 1 };

/// Numeric training set for one task: encoded inputs as rows, one target each.
struct TrainingSet {
    Eigen::MatrixXd inputs;
    Eigen::VectorXd targets;

    Eigen::Index size() const { return targets.size(); }
};

/// Hyperparameters of the two-task product kernel
///   k((t, x), (t', x')) = B[t, t'] * k_xx(x, x'),  B = [[1, rho], [rho, 1]]
/// with per-task observation noise. `base` carries the shared input kernel
/// (lengthscales, signal variance) and the constant mean; base.noise_variance
/// is unused here.
struct TransferKernelParams {
    KernelParams base;
    double rho = 0.0;           // inter-task correlation, |rho| < 1
    double noise_source = 0.0;  // >= 0
    double noise_target = 0.0;  // >= 0

    void validate() const;
    static TransferKernelParams defaults(Eigen::Index dimension);
};

struct TransferFitOptions {
    int restarts = 5;
    int max_iterations = 200;
    double objective_tolerance = 1e-6;
    std::uint64_t seed = 0;
    std::optional<double> fixed_noise_source;
    std::optional<double> fixed_noise_target;
    /// Diagnostic mode: hold rho at this value instead of learning it. Used to
    /// reproduce the negative-transfer failure picture.
    std::optional<double> clamp_rho;
};

double transfer_kernel_eval(const TransferKernelParams& params, TaskTag tag_a,
                            const Eigen::VectorXd& a, TaskTag tag_b, const Eigen::VectorXd& b);

/// Joint model over tagged source and target observations. Immutable once
/// constructed; safe to share for concurrent prediction.
class TransferGPModel {
public:
    static TransferGPModel from_params(const TransferKernelParams& params,
                                       Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                                       std::vector<TaskTag> tags, double y_mean = 0.0,
                                       double y_scale = 1.0);

    /// Posterior for the target task.
    Prediction predict_target(const Eigen::VectorXd& x) const;
    void predict_target_many(const Eigen::MatrixXd& X, Eigen::VectorXd& means,
                             Eigen::VectorXd& variances) const;

    /// Fitted inter-task correlation (0 when the model was trained without
    /// source data).
    double task_correlation() const { return params_.rho; }

    const TransferKernelParams& params() const { return params_; }
    const Eigen::MatrixXd& train_inputs() const { return X_; }
    const Eigen::VectorXd& train_targets() const { return y_; }
    const std::vector<TaskTag>& train_tags() const { return tags_; }
    double target_mean() const { return y_mean_; }
    double target_scale() const { return y_scale_; }
    double jitter() const { return jitter_; }
    const FitReport& fit_report() const { return report_; }
    Eigen::Index source_count() const;

private:
    friend TransferGPModel fit_transfer(const TrainingSet&, const TrainingSet&,
                                        const TransferKernelParams&, const TransferFitOptions&);
    TransferGPModel() = default;
    void factorize();

    TransferKernelParams params_; // in standardized-target space
    Eigen::MatrixXd X_;
    Eigen::VectorXd y_;
    std::vector<TaskTag> tags_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::MatrixXd L_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    FitReport report_;
};

/// Maximizes the joint marginal likelihood over source + target observations.
/// With an empty source set this reduces exactly to the single-task fit on the
/// target data (same optimizer, same restart seeds). Targets are standardized
/// jointly; `init` is interpreted in standardized space.
TransferGPModel fit_transfer(const TrainingSet& source, const TrainingSet& target,
                             const TransferKernelParams& init, const TransferFitOptions& opts = {});

} // namespace perftx
