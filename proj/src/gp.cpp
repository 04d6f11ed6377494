#include "perftx/gp.hpp"

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

void require_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw ValidationError(std::string(what) + ": non-finite input");
}

/// Pairwise squared differences per input dimension; the kernel and its
/// lengthscale gradients reuse these across optimizer iterations.
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

Eigen::MatrixXd kernel_matrix(const std::vector<Eigen::MatrixXd>& sq,
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

namespace detail {

// Jitter escalation: 0, then 1e-10 * trace/n stepping x10 up to 1e-4 * trace/n.
bool chol_with_jitter(const Eigen::MatrixXd& A, double trace_over_n, Eigen::MatrixXd& L,
                      double& jitter) {
    auto attempt = [&](double j) {
        Eigen::MatrixXd B = A;
        if (j > 0.0) B.diagonal().array() += j;
        Eigen::LLT<Eigen::MatrixXd> llt(B);
        if (llt.info() != Eigen::Success) return false;
        L = llt.matrixL();
        if (!L.allFinite() || (L.diagonal().array() <= 0.0).any()) return false;
        jitter = j;
        return true;
    };
    if (attempt(0.0)) return true;
    for (double scale = 1e-10; scale <= 1e-4 * 1.0000001; scale *= 10.0)
        if (attempt(scale * trace_over_n)) return true;
    return false;
}

} // namespace detail

void KernelParams::validate() const {
    if (lengthscales.size() == 0) throw ValidationError("kernel needs at least one lengthscale");
    if (!lengthscales.allFinite() || (lengthscales.array() <= 0.0).any())
        throw ValidationError("lengthscales must be positive and finite");
    if (!std::isfinite(signal_variance) || signal_variance <= 0.0)
        throw ValidationError("signal variance must be positive and finite");
    if (!std::isfinite(noise_variance) || noise_variance < 0.0)
        throw ValidationError("noise variance must be non-negative and finite");
    if (!std::isfinite(mean_constant)) throw ValidationError("mean constant must be finite");
}

KernelParams KernelParams::defaults(Eigen::Index dimension) {
    KernelParams p;
    p.lengthscales = Eigen::VectorXd::Constant(dimension, 0.5);
    p.signal_variance = 1.0;
    p.noise_variance = 0.01;
    p.mean_constant = 0.0;
    return p;
}

double kernel_eval(const KernelParams& params, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    params.validate();
    if (a.size() != params.lengthscales.size() || b.size() != params.lengthscales.size())
        throw ValidationError("kernel_eval: input dimension does not match lengthscale count");
    require_finite(a, "kernel_eval");
    require_finite(b, "kernel_eval");
    const double z = ((a - b).array() / params.lengthscales.array()).square().sum();
    return params.signal_variance * std::exp(-0.5 * z);
}

Eigen::MatrixXd gram(const KernelParams& params, const Eigen::MatrixXd& X) {
    params.validate();
    if (X.rows() < 1) throw ValidationError("gram: need at least one input row");
    if (X.cols() != params.lengthscales.size())
        throw ValidationError("gram: input dimension does not match lengthscale count");
    if (!X.allFinite()) throw ValidationError("gram: non-finite input");
    return kernel_matrix(squared_diffs(X), params.lengthscales, params.signal_variance);
}

LogMarginal log_marginal_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y) {
    if (X.rows() != y.size() || y.size() < 1)
        throw ValidationError("log_marginal_likelihood: |y| must equal rows of X and be >= 1");
    const auto sq = squared_diffs(X);
    const Eigen::Index n = X.rows(), d = X.cols();
    if (d != params.lengthscales.size())
        throw ValidationError("log_marginal_likelihood: dimension mismatch");
    params.validate();

    const Eigen::MatrixXd K = kernel_matrix(sq, params.lengthscales, params.signal_variance);
    Eigen::MatrixXd A = K;
    A.diagonal().array() += params.noise_variance;
    Eigen::MatrixXd L;
    double jitter = 0.0;
    if (!detail::chol_with_jitter(A, params.signal_variance, L, jitter))
        throw NumericError("log_marginal_likelihood: factorization failed after max jitter");
    A.diagonal().array() += jitter;

    const Eigen::VectorXd r = y.array() - params.mean_constant;
    const Eigen::VectorXd alpha = L.triangularView<Eigen::Lower>().transpose().solve(
        L.triangularView<Eigen::Lower>().solve(r));

    LogMarginal out;
    out.value = -0.5 * r.dot(alpha) - L.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * kLog2Pi;

    // d/dtheta = 1/2 tr((alpha alpha^T - A^-1) dA/dtheta)
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(W);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(W);
    const Eigen::MatrixXd M = alpha * alpha.transpose() - W;

    out.gradient.resize(d + 3);
    for (Eigen::Index k = 0; k < d; ++k) {
        const double inv_l2 = 1.0 / (params.lengthscales[k] * params.lengthscales[k]);
        out.gradient[k] = 0.5 * (M.array() * K.array() * sq[static_cast<std::size_t>(k)].array())
                              .sum() * inv_l2;
    }
    const double trace_m = M.trace();
    // jitter scales with the signal variance, so it contributes to that entry
    out.gradient[d] = 0.5 * ((M.array() * K.array()).sum() + jitter * trace_m);
    out.gradient[d + 1] = 0.5 * params.noise_variance * trace_m;
    out.gradient[d + 2] = alpha.sum();
    return out;
}

GPModel GPModel::from_params(const KernelParams& params, Eigen::MatrixXd X, Eigen::VectorXd y,
                             double y_mean, double y_scale) {
    params.validate();
    if (X.rows() != y.size() || y.size() < 1)
        throw ValidationError("GPModel: |y| must equal rows of X and be >= 1");
    if (X.cols() != params.lengthscales.size())
        throw ValidationError("GPModel: dimension mismatch");
    if (!std::isfinite(y_mean) || !std::isfinite(y_scale) || y_scale <= 0.0)
        throw ValidationError("GPModel: invalid standardization constants");
    GPModel m;
    m.params_ = params;
    m.X_ = std::move(X);
    m.y_ = std::move(y);
    m.y_mean_ = y_mean;
    m.y_scale_ = y_scale;
    m.factorize();
    return m;
}

void GPModel::factorize() {
    Eigen::MatrixXd A = gram(params_, X_);
    A.diagonal().array() += params_.noise_variance;
    if (!detail::chol_with_jitter(A, params_.signal_variance, L_, jitter_))
        throw NumericError("GPModel: factorization failed after max jitter");
    const Eigen::VectorXd r =
        ((y_.array() - y_mean_) / y_scale_ - params_.mean_constant).matrix();
    alpha_ = L_.triangularView<Eigen::Lower>().transpose().solve(
        L_.triangularView<Eigen::Lower>().solve(r));
}

Prediction GPModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != X_.cols()) throw ValidationError("predict: input dimension mismatch");
    Eigen::VectorXd means(1), vars(1);
    Eigen::MatrixXd Xq(1, x.size());
    Xq.row(0) = x;
    predict_many(Xq, means, vars);
    return {means[0], vars[0]};
}

void GPModel::predict_many(const Eigen::MatrixXd& Xq, Eigen::VectorXd& means,
                           Eigen::VectorXd& variances) const {
    if (Xq.cols() != X_.cols()) throw ValidationError("predict: input dimension mismatch");
    const Eigen::Index n = X_.rows(), m = Xq.rows();
    const Eigen::VectorXd diff_weights = params_.lengthscales.array().square().inverse();
    Eigen::MatrixXd Kstar(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double z =
                ((X_.row(i).transpose() - Xq.row(j).transpose()).array().square() *
                 diff_weights.array())
                    .sum();
            Kstar(i, j) = params_.signal_variance * std::exp(-0.5 * z);
        }
    means = (Kstar.transpose() * alpha_).array() + params_.mean_constant;
    Eigen::MatrixXd V = L_.triangularView<Eigen::Lower>().solve(Kstar);
    variances.resize(m);
    const double prior = params_.signal_variance + params_.noise_variance;
    for (Eigen::Index j = 0; j < m; ++j)
        variances[j] = std::max(0.0, prior - V.col(j).squaredNorm());
    // back to output units
    means = (y_mean_ + y_scale_ * means.array()).matrix();
    variances *= y_scale_ * y_scale_;
}

double GPModel::factorization_error() const {
    Eigen::MatrixXd A = gram(params_, X_);
    A.diagonal().array() += params_.noise_variance + jitter_;
    const Eigen::MatrixXd R = L_ * L_.transpose() - A;
    return R.norm() / std::max(1e-300, A.norm());
}

double GPModel::alpha_residual() const {
    Eigen::MatrixXd A = gram(params_, X_);
    A.diagonal().array() += params_.noise_variance + jitter_;
    const Eigen::VectorXd r =
        ((y_.array() - y_mean_) / y_scale_ - params_.mean_constant).matrix();
    const double denom = std::max(r.norm(), 1e-300);
    return (A * alpha_ - r).norm() / denom;
}

namespace {

struct ThetaLayout {
    Eigen::Index dim = 0;
    bool fit_noise = true;
    double fixed_noise = 0.0;

    Eigen::Index size() const { return dim + 2 + (fit_noise ? 1 : 0); }

    KernelParams to_params(const Eigen::VectorXd& theta) const {
        KernelParams p;
        p.lengthscales = theta.head(dim).array().exp();
        p.signal_variance = std::exp(theta[dim]);
        p.noise_variance = fit_noise ? std::exp(theta[dim + 1]) : fixed_noise;
        p.mean_constant = theta[size() - 1];
        return p;
    }

    Eigen::VectorXd from_params(const KernelParams& p) const {
        Eigen::VectorXd theta(size());
        theta.head(dim) = p.lengthscales.array().log();
        theta[dim] = std::log(p.signal_variance);
        if (fit_noise) theta[dim + 1] = std::log(std::max(p.noise_variance, 1e-12));
        theta[size() - 1] = p.mean_constant;
        return theta;
    }
};

} // namespace

GPModel fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const KernelParams& init,
            const FitOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    if (X.rows() != y.size() || y.size() < 1)
        throw ValidationError("fit: |y| must equal rows of X and be >= 1");
    if (X.cols() != init.lengthscales.size()) throw ValidationError("fit: dimension mismatch");
    init.validate();
    if (opts.restarts < 1) throw ValidationError("fit: need at least one restart");

    const Eigen::Index n = X.rows(), d = X.cols();
    const double y_mean = y.mean();
    const double var = (y.array() - y_mean).square().sum() / static_cast<double>(n);
    const double y_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
    const Eigen::VectorXd y_std = ((y.array() - y_mean) / y_scale).matrix();

    ThetaLayout layout;
    layout.dim = d;
    layout.fit_noise = !opts.fixed_noise_variance.has_value();
    layout.fixed_noise = opts.fixed_noise_variance.value_or(0.0);

    const auto sq = squared_diffs(X);
    auto objective = [&](const Eigen::VectorXd& theta, double& value,
                         Eigen::VectorXd* grad) -> bool {
        const KernelParams p = layout.to_params(theta);
        const Eigen::MatrixXd K = kernel_matrix(sq, p.lengthscales, p.signal_variance);
        Eigen::MatrixXd A = K;
        A.diagonal().array() += p.noise_variance;
        Eigen::MatrixXd L;
        double jitter = 0.0;
        if (!detail::chol_with_jitter(A, p.signal_variance, L, jitter)) return false;
        const Eigen::VectorXd r = y_std.array() - p.mean_constant;
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
            for (Eigen::Index k = 0; k < d; ++k)
                (*grad)[k] = 0.5 *
                             (M.array() * K.array() * sq[static_cast<std::size_t>(k)].array())
                                 .sum() /
                             (p.lengthscales[k] * p.lengthscales[k]);
            const double trace_m = M.trace();
            (*grad)[d] = 0.5 * ((M.array() * K.array()).sum() + jitter * trace_m);
            if (layout.fit_noise) (*grad)[d + 1] = 0.5 * p.noise_variance * trace_m;
            (*grad)[layout.size() - 1] = alpha.sum();
        }
        return true;
    };

    // Hard box keeping the factorization well-scaled for standardized targets.
    Eigen::VectorXd lo(layout.size()), hi(layout.size());
    lo.head(d).setConstant(std::log(1e-3));
    hi.head(d).setConstant(std::log(1e3));
    lo[d] = std::log(1e-4);
    hi[d] = std::log(1e4);
    if (layout.fit_noise) {
        lo[d + 1] = std::log(1e-8);
        hi[d + 1] = std::log(10.0);
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
            // log-uniform draws from the documented restart box
            Rng rng(derive_seed(opts.seed, {0x5254u, static_cast<std::uint64_t>(rstart)}));
            theta0.resize(layout.size());
            for (Eigen::Index k = 0; k < d; ++k)
                theta0[k] = rng.uniform(std::log(1e-2), std::log(1e1));
            theta0[d] = rng.uniform(std::log(1e-2), std::log(1e2));
            if (layout.fit_noise) theta0[d + 1] = rng.uniform(std::log(1e-6), 0.0);
            theta0[layout.size() - 1] = rng.uniform(-1.0, 1.0);
        }
        auto res = detail::ascend(objective, std::move(theta0), lo, hi, opts.max_iterations,
                                  opts.objective_tolerance);
        ++restarts_run;
        if (res.ok && res.value > best.value) best = std::move(res);
    }
    if (!best.ok) throw NumericError("fit: every restart failed to factorize");

    GPModel model;
    model.params_ = layout.to_params(best.theta);
    model.X_ = X;
    model.y_ = y;
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
