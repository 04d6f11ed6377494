#include "perftx/transfer_gp.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "ascent.hpp"
#include "factorize.hpp"
#include "perftx/rng.hpp"

namespace perftx {

namespace {

using detail::kLog2Pi;

double task_factor(double rho, TaskTag a, TaskTag b) { return a == b ? 1.0 : rho; }

std::vector<Eigen::MatrixXd> squared_diffs(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), d = X.cols();
    std::vector<Eigen::MatrixXd> sq(static_cast<std::size_t>(d));
    for (Eigen::Index k = 0; k < d; ++k) {
        sq[k].resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double diff = X(i, k) - X(j, k);
                sq[k](i, j) = sq[k](j, i) = diff * diff;
            }
    }
    return sq;
}

Eigen::MatrixXd input_kernel(const std::vector<Eigen::MatrixXd>& sq,
                             const Eigen::VectorXd& lengthscales, double signal_variance) {
    const Eigen::Index n = sq.empty() ? 0 : sq[0].rows();
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < sq.size(); ++k)
        E -= (0.5 / (lengthscales[static_cast<Eigen::Index>(k)] *
                     lengthscales[static_cast<Eigen::Index>(k)])) *
             sq[k];
    return signal_variance * E.array().exp().matrix();
}

} // namespace

void TransferKernelParams::validate() const {
    base.validate();
    if (!std::isfinite(rho) || std::abs(rho) >= 1.0)
        throw ValidationError("task correlation must satisfy |rho| < 1");
    if (!std::isfinite(noise_source) || noise_source < 0.0)
        throw ValidationError("source noise variance must be non-negative and finite");
    if (!std::isfinite(noise_target) || noise_target < 0.0)
        throw ValidationError("target noise variance must be non-negative and finite");
}

TransferKernelParams TransferKernelParams::defaults(Eigen::Index dimension) {
    TransferKernelParams p;
    p.base = KernelParams::defaults(dimension);
    p.base.noise_variance = 0.0;
    p.rho = 0.5;
    p.noise_source = 0.01;
    p.noise_target = 0.01;
    return p;
}

double transfer_kernel_eval(const TransferKernelParams& params, TaskTag tag_a,
                            const Eigen::VectorXd& a, TaskTag tag_b, const Eigen::VectorXd& b) {
    params.validate();
    return task_factor(params.rho, tag_a, tag_b) * kernel_eval(params.base, a, b);
}

TransferGPModel TransferGPModel::from_params(const TransferKernelParams& params,
                                             Eigen::MatrixXd inputs, Eigen::VectorXd targets,
                                             std::vector<TaskTag> tags, double y_mean,
                                             double y_scale) {
    params.validate();
    if (inputs.rows() != targets.size() || targets.size() < 1)
        throw ValidationError("TransferGPModel: |y| must equal rows of inputs and be >= 1");
    if (static_cast<Eigen::Index>(tags.size()) != inputs.rows())
        throw ValidationError("TransferGPModel: one task tag per training row required");
    if (inputs.cols() != params.base.lengthscales.size())
        throw ValidationError("TransferGPModel: dimension mismatch");
    if (!std::isfinite(y_mean) || !std::isfinite(y_scale) || y_scale <= 0.0)
        throw ValidationError("TransferGPModel: invalid standardization constants");
    TransferGPModel m;
    m.params_ = params;
    m.X_ = std::move(inputs);
    m.y_ = std::move(targets);
    m.tags_ = std::move(tags);
    m.y_mean_ = y_mean;
    m.y_scale_ = y_scale;
    m.factorize();
    return m;
}

Eigen::Index TransferGPModel::source_count() const {
    Eigen::Index c = 0;
    for (TaskTag t : tags_)
        if (t == TaskTag::Source) ++c;
    return c;
}

void TransferGPModel::factorize() {
    const Eigen::Index n = X_.rows();
    const auto sq = squared_diffs(X_);
    const Eigen::MatrixXd Kxx =
        input_kernel(sq, params_.base.lengthscales, params_.base.signal_variance);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = task_factor(params_.rho, tags_[static_cast<std::size_t>(i)],
                                  tags_[static_cast<std::size_t>(j)]) *
                      Kxx(i, j);
    for (Eigen::Index i = 0; i < n; ++i)
        A(i, i) += tags_[static_cast<std::size_t>(i)] == TaskTag::Source ? params_.noise_source
                                                                         : params_.noise_target;
    if (!detail::chol_with_jitter(A, params_.base.signal_variance, L_, jitter_))
        throw NumericError("TransferGPModel: factorization failed after max jitter");
    const Eigen::VectorXd r =
        ((y_.array() - y_mean_) / y_scale_ - params_.base.mean_constant).matrix();
    alpha_ = L_.triangularView<Eigen::Lower>().transpose().solve(
        L_.triangularView<Eigen::Lower>().solve(r));
}

Prediction TransferGPModel::predict_target(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw ValidationError("predict_target: input dimension mismatch");
    Eigen::VectorXd means(1), vars(1);
    Eigen::MatrixXd Xq(1, x.size());
    Xq.row(0) = x;
    predict_target_many(Xq, means, vars);
    return {means[0], vars[0]};
}

void TransferGPModel::predict_target_many(const Eigen::MatrixXd& Xq, Eigen::VectorXd& means,
                                          Eigen::VectorXd& variances) const {
    if (Xq.cols() != X_.cols()) throw ValidationError("predict_target: input dimension mismatch");
    const Eigen::Index n = X_.rows(), m = Xq.rows();
    const Eigen::VectorXd diff_weights = params_.base.lengthscales.array().square().inverse();
    Eigen::MatrixXd Kstar(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z =
                ((X_.row(i).transpose() - Xq.row(j).transpose()).array().square() *
                 diff_weights.array())
                    .sum();
            Kstar(i, j) = task_factor(params_.rho, tags_[static_cast<std::size_t>(i)],
                                      TaskTag::Target) *
                          params_.base.signal_variance * std::exp(-0.5 * z);
        }
    means = (Kstar.transpose() * alpha_).array() + params_.base.mean_constant;
    Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Kstar);
    variances.resize(m);
    const double prior = params_.base.signal_variance + params_.noise_target;
    for (Eigen::Index j = 0; j < m; ++j)
        variances[j] = std::max(0.0, prior - V.col(j).squaredNorm());
    means = (y_mean_ + y_scale_ * means.array()).matrix();
    variances *= y_scale_ * y_scale_;
}

namespace {

// Unconstrained parameterization. rho = tanh(theta_rho) keeps |rho| < 1;
// entries are dropped from theta when clamped or fixed by the options.
struct TransferLayout {
    Eigen::Index dim = 0;
    bool fit_rho = true;
    double fixed_rho = 0.0;
    bool fit_noise_source = true;
    double fixed_noise_source = 0.0;
    bool fit_noise_target = true;
    double fixed_noise_target = 0.0;

    Eigen::Index size() const {
        return dim + 2 + (fit_rho ? 1 : 0) + (fit_noise_source ? 1 : 0) +
               (fit_noise_target ? 1 : 0);
    }
    Eigen::Index rho_pos() const { return dim + 1; }
    Eigen::Index ns_pos() const { return dim + 1 + (fit_rho ? 1 : 0); }
    Eigen::Index nt_pos() const { return ns_pos() + (fit_noise_source ? 1 : 0); }

    TransferKernelParams to_params(const Eigen::VectorXd& theta) const {
        TransferKernelParams p;
        p.base.lengthscales = theta.head(dim).array().exp();
        p.base.signal_variance = std::exp(theta[dim]);
        p.base.noise_variance = 0.0;
        p.base.mean_constant = theta[size() - 1];
        p.rho = fit_rho ? std::tanh(theta[rho_pos()]) : fixed_rho;
        p.noise_source = fit_noise_source ? std::exp(theta[ns_pos()]) : fixed_noise_source;
        p.noise_target = fit_noise_target ? std::exp(theta[nt_pos()]) : fixed_noise_target;
        return p;
    }

    Eigen::VectorXd from_params(const TransferKernelParams& p) const {
        Eigen::VectorXd theta(size());
        theta.head(dim) = p.base.lengthscales.array().log();
        theta[dim] = std::log(p.base.signal_variance);
        if (fit_rho) theta[rho_pos()] = std::atanh(std::clamp(p.rho, -0.999999, 0.999999));
        if (fit_noise_source) theta[ns_pos()] = std::log(std::max(p.noise_source, 1e-12));
        if (fit_noise_target) theta[nt_pos()] = std::log(std::max(p.noise_target, 1e-12));
        theta[size() - 1] = p.base.mean_constant;
        return theta;
    }
};

} // namespace

TransferGPModel fit_transfer(const TrainingSet& source, const TrainingSet& target,
                             const TransferKernelParams& init, const TransferFitOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    if (target.size() < 1) throw ValidationError("fit_transfer: empty target set");
    if (source.inputs.rows() != source.targets.size() ||
        target.inputs.rows() != target.targets.size())
        throw ValidationError("fit_transfer: inputs/targets size mismatch");
    init.validate();
    if (opts.restarts < 1) throw ValidationError("fit_transfer: need at least one restart");

    const Eigen::Index n_s = source.size(), n_t = target.size();
    const Eigen::Index d = target.inputs.cols();
    if (init.base.lengthscales.size() != d)
        throw ValidationError("fit_transfer: dimension mismatch");

    if (n_s == 0) {
        // Without source observations the joint model is exactly the
        // single-task model on the target data; reuse that path so the two
        // agree bit for bit under shared seeds.
        KernelParams single_init = init.base;
        single_init.noise_variance = std::max(init.noise_target, 1e-12);
        FitOptions single_opts;
        single_opts.restarts = opts.restarts;
        single_opts.max_iterations = opts.max_iterations;
        single_opts.objective_tolerance = opts.objective_tolerance;
        single_opts.seed = opts.seed;
        single_opts.fixed_noise_variance = opts.fixed_noise_target;
        GPModel single = fit(target.inputs, target.targets, single_init, single_opts);

        TransferGPModel m;
        m.params_.base = single.params();
        m.params_.base.noise_variance = 0.0;
        m.params_.rho = 0.0;
        m.params_.noise_source = 0.0;
        m.params_.noise_target = single.params().noise_variance;
        m.X_ = target.inputs;
        m.y_ = target.targets;
        m.tags_.assign(static_cast<std::size_t>(n_t), TaskTag::Target);
        m.y_mean_ = single.target_mean();
        m.y_scale_ = single.target_scale();
        m.factorize();
        m.report_ = single.fit_report();
        m.report_.train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return m;
    }

    if (source.inputs.cols() != d)
        throw ValidationError("fit_transfer: source/target dimension mismatch");

    const Eigen::Index n = n_s + n_t;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    std::vector<TaskTag> tags(static_cast<std::size_t>(n));
    X.topRows(n_s) = source.inputs;
    X.bottomRows(n_t) = target.inputs;
    y.head(n_s) = source.targets;
    y.tail(n_t) = target.targets;
    for (Eigen::Index i = 0; i < n_s; ++i) tags[static_cast<std::size_t>(i)] = TaskTag::Source;
    for (Eigen::Index i = n_s; i < n; ++i) tags[static_cast<std::size_t>(i)] = TaskTag::Target;

    const double y_mean = y.mean();
    const double var = (y.array() - y_mean).square().sum() / static_cast<double>(n);
    const double y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    const Eigen::VectorXd y_std = ((y.array() - y_mean) / y_scale).matrix();

    TransferLayout layout;
    layout.dim = d;
    layout.fit_rho = !opts.clamp_rho.has_value();
    layout.fixed_rho = opts.clamp_rho.value_or(0.0);
    layout.fit_noise_source = !opts.fixed_noise_source.has_value();
    layout.fixed_noise_source = opts.fixed_noise_source.value_or(0.0);
    layout.fit_noise_target = !opts.fixed_noise_target.has_value();
    layout.fixed_noise_target = opts.fixed_noise_target.value_or(0.0);
    if (!layout.fit_rho && std::abs(layout.fixed_rho) >= 1.0)
        throw ValidationError("fit_transfer: clamped rho must satisfy |rho| < 1");

    const auto sq = squared_diffs(X);
    Eigen::MatrixXd cross(n, n); // 1 where tags differ
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cross(i, j) =
                tags[static_cast<std::size_t>(i)] == tags[static_cast<std::size_t>(j)] ? 0.0 : 1.0;

    auto objective = [&](const Eigen::VectorXd& theta, double& value,
                         Eigen::VectorXd* grad) -> bool {
        const TransferKernelParams p = layout.to_params(theta);
        const Eigen::MatrixXd Kxx =
            input_kernel(sq, p.base.lengthscales, p.base.signal_variance);
        const Eigen::MatrixXd Bfac =
            Eigen::MatrixXd::Ones(n, n) + (p.rho - 1.0) * cross;
        Eigen::MatrixXd A = Bfac.cwiseProduct(Kxx);
        for (Eigen::Index i = 0; i < n; ++i)
            A(i, i) += tags[static_cast<std::size_t>(i)] == TaskTag::Source ? p.noise_source
                                                                            : p.noise_target;
        Eigen::MatrixXd L;
        double jitter = 0.0;
        if (!detail::chol_with_jitter(A, p.base.signal_variance, L, jitter)) return false;
        const Eigen::VectorXd r = y_std.array() - p.base.mean_constant;
        const Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().transpose().solve(
            L.triangularView<Eigen::Lower>().solve(r));
        value = -0.5 * r.dot(alpha) - L.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * kLog2Pi;
        if (!std::isfinite(value)) return false;
        if (grad) {
            Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n, n);
            L.triangularView<Eigen::Lower>().solveInPlace(W);
            L.triangularView<Eigen::Lower>().transpose().solveInPlace(W);
            const Eigen::MatrixXd M = alpha * alpha.transpose() - W;
            grad->resize(layout.size());
            const Eigen::ArrayXXd MK = M.array() * Bfac.array() * Kxx.array();
            for (Eigen::Index k = 0; k < d; ++k)
                (*grad)[k] = 0.5 * (MK * sq[static_cast<std::size_t>(k)].array()).sum() /
                             (p.base.lengthscales[k] * p.base.lengthscales[k]);
            double trace_m = M.trace();
            (*grad)[layout.dim] = 0.5 * (MK.sum() + jitter * trace_m);
            if (layout.fit_rho) {
                const double drho = 1.0 - p.rho * p.rho; // d tanh
                (*grad)[layout.rho_pos()] =
                    0.5 * drho * (M.array() * cross.array() * Kxx.array()).sum();
            }
            if (layout.fit_noise_source) {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < n_s; ++i) acc += M(i, i);
                (*grad)[layout.ns_pos()] = 0.5 * p.noise_source * acc;
            }
            if (layout.fit_noise_target) {
                double acc = 0.0;
                for (Eigen::Index i = n_s; i < n; ++i) acc += M(i, i);
                (*grad)[layout.nt_pos()] = 0.5 * p.noise_target * acc;
            }
            (*grad)[layout.size() - 1] = alpha.sum();
        }
        return true;
    };

    Eigen::VectorXd lo(layout.size()), hi(layout.size());
    lo.head(d).setConstant(std::log(1e-3));
    hi.head(d).setConstant(std::log(1e3));
    lo[d] = std::log(1e-4);
    hi[d] = std::log(1e4);
    if (layout.fit_rho) {
        lo[layout.rho_pos()] = -7.0;
        hi[layout.rho_pos()] = 7.0;
    }
    if (layout.fit_noise_source) {
        lo[layout.ns_pos()] = std::log(1e-8);
        hi[layout.ns_pos()] = std::log(10.0);
    }
    if (layout.fit_noise_target) {
        lo[layout.nt_pos()] = std::log(1e-8);
        hi[layout.nt_pos()] = std::log(10.0);
    }
    lo[layout.size() - 1] = -10.0;
    hi[layout.size() - 1] = 10.0;

    detail::AscentResult best;
    double init_value = -std::numeric_limits<double>::infinity();
    {
        double v0;
        if (objective(detail::clamp_to_box(layout.from_params(init), lo, hi), v0, nullptr))
            init_value = v0;
    }
    int restarts_run = 0;
    for (int rstart = 0; rstart < opts.restarts; ++rstart) {
        Eigen::VectorXd theta0;
        if (rstart == 0) {
            theta0 = layout.from_params(init);
        } else {
            Rng rng(derive_seed(opts.seed, {0x5254u, static_cast<std::uint64_t>(rstart)}));
            theta0.resize(layout.size());
            for (Eigen::Index k = 0; k < d; ++k)
                theta0[k] = rng.uniform(std::log(1e-2), std::log(1e1));
            theta0[d] = rng.uniform(std::log(1e-2), std::log(1e2));
            if (layout.fit_rho) theta0[layout.rho_pos()] = std::atanh(rng.uniform(-0.9, 0.9));
            if (layout.fit_noise_source)
                theta0[layout.ns_pos()] = rng.uniform(std::log(1e-6), 0.0);
            if (layout.fit_noise_target)
                theta0[layout.nt_pos()] = rng.uniform(std::log(1e-6), 0.0);
            theta0[layout.size() - 1] = rng.uniform(-1.0, 1.0);
        }
        auto res = detail::ascend(objective, std::move(theta0), lo, hi, opts.max_iterations,
                                  opts.objective_tolerance);
        ++restarts_run;
        if (res.ok && res.value > best.value) best = std::move(res);
    }
    if (!best.ok) throw NumericError("fit_transfer: every restart failed to factorize");

    TransferGPModel model;
    model.params_ = layout.to_params(best.theta);
    model.X_ = std::move(X);
    model.y_ = std::move(y);
    model.tags_ = std::move(tags);
    model.y_mean_ = y_mean;
    model.y_scale_ = y_scale;
    model.factorize();
    model.report_.iterations = best.iterations;
    model.report_.restarts = restarts_run;
    model.report_.initial_log_marginal = init_value;
    model.report_.final_log_marginal = best.value;
    model.report_.train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return model;
}

} // namespace perftx
