#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "perftx/harness.hpp"
#include "perftx/rng.hpp"
#include "perftx/synthetic.hpp"
#include "perftx/transfer_gp.hpp"

using namespace perftx;

namespace {

TransferKernelParams make_params(double lengthscale, double sf2, double rho, double noise_s,
                                 double noise_t, double mu0 = 0.0) {
    TransferKernelParams p;
    p.base.lengthscales = Eigen::VectorXd::Constant(1, lengthscale);
    p.base.signal_variance = sf2;
    p.base.noise_variance = 0.0;
    p.base.mean_constant = mu0;
    p.rho = rho;
    p.noise_source = noise_s;
    p.noise_target = noise_t;
    return p;
}

/// Samples n distinct grid points of a scenario and returns the encoded
/// inputs paired with the requested response.
TrainingSet sample_response(const ResponsePair& pair, long n, std::uint64_t seed, bool source) {
    Rng rng(seed);
    auto idx = rng.sample_indices(static_cast<std::size_t>(pair.space().cardinality()),
                                  static_cast<std::size_t>(n));
    TrainingSet set;
    set.inputs.resize(n, pair.encoded_grid().cols());
    set.targets.resize(n);
    for (long i = 0; i < n; ++i) {
        const auto ord = idx[static_cast<std::size_t>(i)];
        set.inputs.row(i) = pair.encoded_grid().row(static_cast<Eigen::Index>(ord));
        set.targets[i] = source ? pair.source_at_ordinal(ord) : pair.target_at_ordinal(ord);
    }
    return set;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

} // namespace

TEST_CASE("same-task kernel at zero distance is the signal variance") {
    auto p = make_params(1.0, 1.9, 0.4, 0.0, 0.0);
    Eigen::VectorXd x(1);
    x << 0.5;
    CHECK(transfer_kernel_eval(p, TaskTag::Target, x, TaskTag::Target, x) ==
          doctest::Approx(1.9).epsilon(1e-12));
}

TEST_CASE("independent tasks have zero cross-covariance") {
    auto p = make_params(1.0, 1.0, 0.0, 0.0, 0.0);
    Eigen::VectorXd a(1), b(1);
    a << 0.1;
    b << 0.9;
    CHECK(transfer_kernel_eval(p, TaskTag::Source, a, TaskTag::Target, b) == 0.0);
}

TEST_CASE("cross-task kernel is rho times the input kernel") {
    auto p = make_params(1.0, 1.0, 0.9, 0.0, 0.0);
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 1.0;
    CHECK(transfer_kernel_eval(p, TaskTag::Source, a, TaskTag::Target, b) ==
          doctest::Approx(0.9 * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("joint kernel matrix is positive semi-definite for any |rho| < 1") {
    std::mt19937_64 gen(808);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 6;
        auto p = make_params(unif(0.3, 1.5), unif(0.5, 2.0), unif(-0.99, 0.99), 0.0, 0.0);
        Eigen::MatrixXd X(n, 1);
        std::vector<TaskTag> tags(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = unif(0.0, 1.0);
            tags[static_cast<std::size_t>(i)] = (gen() & 1) ? TaskTag::Source : TaskTag::Target;
        }
        Eigen::MatrixXd K(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                K(i, j) = transfer_kernel_eval(p, tags[static_cast<std::size_t>(i)], X.row(i),
                                               tags[static_cast<std::size_t>(j)], X.row(j));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("with rho = 0 the target prediction decouples from the source block") {
    std::mt19937_64 gen(99);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    auto p = make_params(0.5, 1.2, 0.0, 0.05, 0.02, 0.3);
    const Eigen::Index n_s = 4, n_t = 3;
    Eigen::MatrixXd X(n_s + n_t, 1);
    Eigen::VectorXd y(n_s + n_t);
    std::vector<TaskTag> tags(n_s + n_t);
    for (Eigen::Index i = 0; i < n_s + n_t; ++i) {
        X(i, 0) = unif(0.0, 1.0);
        y[i] = unif(-1.0, 1.0);
        tags[static_cast<std::size_t>(i)] = i < n_s ? TaskTag::Source : TaskTag::Target;
    }
    auto joint = TransferGPModel::from_params(p, X, y, tags);

    KernelParams single = p.base;
    single.noise_variance = p.noise_target;
    auto alone = GPModel::from_params(single, X.bottomRows(n_t), y.tail(n_t));

    for (int q = 0; q < 8; ++q) {
        Eigen::VectorXd x(1);
        x << unif(0.0, 1.0);
        const auto a = joint.predict_target(x);
        const auto b = alone.predict(x);
        CHECK(std::abs(a.mean - b.mean) < 1e-8);
        CHECK(std::abs(a.variance - b.variance) < 1e-8);
    }
}

TEST_CASE("target prediction matches the dense transfer oracle") {
    std::mt19937_64 gen(2718);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    for (int t = 0; t < 10; ++t) {
        auto p = make_params(unif(0.3, 1.5), unif(0.5, 2.0), unif(-0.9, 0.9), unif(1e-3, 0.2),
                             unif(1e-3, 0.2), unif(-0.5, 0.5));
        const Eigen::Index n = 7;
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        std::vector<TaskTag> tags(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = unif(0.0, 1.0);
            y[i] = unif(-1.5, 1.5);
            tags[static_cast<std::size_t>(i)] = i < 4 ? TaskTag::Source : TaskTag::Target;
        }
        auto model = TransferGPModel::from_params(p, X, y, tags);
        Eigen::VectorXd x(1);
        x << unif(0.0, 1.0);
        const auto pred = model.predict_target(x);
        const auto exact = oracle::dense_transfer_predict(p, X, y, tags, x);
        CHECK(std::abs(pred.mean - exact.mean) < 1e-8);
        CHECK(std::abs(pred.variance - exact.variance) < 1e-8);
    }
}

TEST_CASE("interpolation at a noiseless target training point") {
    auto p = make_params(0.4, 1.0, 0.6, 0.01, 0.0);
    Eigen::MatrixXd X(4, 1);
    X << 0.1, 0.7, 0.3, 0.9;
    Eigen::VectorXd y(4);
    y << 1.0, 0.2, -0.4, 0.8;
    std::vector<TaskTag> tags = {TaskTag::Source, TaskTag::Source, TaskTag::Target,
                                 TaskTag::Target};
    auto model = TransferGPModel::from_params(p, X, y, tags);
    for (Eigen::Index i = 2; i < 4; ++i) {
        const auto pred = model.predict_target(X.row(i));
        CHECK(std::abs(pred.mean - y[i]) <= 1e-6);
        CHECK(pred.variance <= 1e-6);
    }
}

TEST_CASE("fitting without source data reduces to the single-task fit") {
    ScenarioSpec spec;
    spec.family = ScenarioFamily::Demo1d;
    spec.seed = 5;
    auto pair = make_scenario(spec);
    auto target = sample_response(pair, 6, 11, false);

    TransferFitOptions topts;
    topts.seed = 77;
    TrainingSet empty;
    empty.inputs.resize(0, 1);
    empty.targets.resize(0);
    auto joint = fit_transfer(empty, target, TransferKernelParams::defaults(1), topts);
    CHECK(joint.task_correlation() == 0.0);
    CHECK(joint.source_count() == 0);

    KernelParams init = TransferKernelParams::defaults(1).base;
    init.noise_variance = std::max(TransferKernelParams::defaults(1).noise_target, 1e-12);
    FitOptions sopts;
    sopts.seed = 77;
    auto single = fit(target.inputs, target.targets, init, sopts);

    for (int q = 0; q < 10; ++q) {
        Eigen::VectorXd x(1);
        x << q / 9.0;
        const auto a = joint.predict_target(x);
        const auto b = single.predict(x);
        CHECK(std::abs(a.mean - b.mean) < 1e-6);
        CHECK(std::abs(a.variance - b.variance) < 1e-6);
    }
}

TEST_CASE("an identical-response source fits a correlation near one") {
    ScenarioSpec spec;
    spec.family = ScenarioFamily::Demo1d;
    spec.noise_level = 0.0;
    spec.miscalibration = 0.0;
    spec.seed = 3;
    auto pair = make_scenario(spec); // source == target exactly
    auto source = sample_response(pair, 9, 21, true);
    auto target = sample_response(pair, 3, 22, false);
    TransferFitOptions opts;
    opts.seed = 9;
    auto model = fit_transfer(source, target, TransferKernelParams::defaults(1), opts);
    CHECK(model.task_correlation() >= 0.9);
}

TEST_CASE("a misleading constant source fits a correlation near zero") {
    std::vector<double> rhos;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioSpec spec;
        spec.family = ScenarioFamily::Demo1d;
        spec.misleading = true;
        spec.seed = seed;
        auto pair = make_scenario(spec);
        auto source = sample_response(pair, 9, derive_seed(seed, {1}), true);
        auto target = sample_response(pair, 3, derive_seed(seed, {2}), false);
        TransferFitOptions opts;
        opts.seed = seed;
        auto model = fit_transfer(source, target, TransferKernelParams::defaults(1), opts);
        rhos.push_back(std::abs(model.task_correlation()));
    }
    CHECK(median(rhos) <= 0.3);
}

TEST_CASE("an anti-correlated source fits a negative correlation") {
    std::vector<double> rhos;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioSpec spec;
        spec.family = ScenarioFamily::Demo1d;
        spec.seed = seed;
        auto pair = make_scenario(spec);
        auto source = sample_response(pair, 9, derive_seed(seed, {1}), false);
        source.targets = -source.targets; // g = -f
        auto target = sample_response(pair, 4, derive_seed(seed, {2}), false);
        TransferFitOptions opts;
        opts.seed = seed;
        auto model = fit_transfer(source, target, TransferKernelParams::defaults(1), opts);
        rhos.push_back(model.task_correlation());
    }
    CHECK(median(rhos) <= -0.5);
}

TEST_CASE("source samples never increase target posterior variance at fixed params") {
    std::mt19937_64 gen(31);
    auto unif = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
    };
    for (int t = 0; t < 10; ++t) {
        auto p = make_params(unif(0.3, 1.0), 1.0, unif(-0.9, 0.9), 0.05, 0.05);
        const Eigen::Index n_s = 5, n_t = 3;
        Eigen::MatrixXd X(n_s + n_t, 1);
        Eigen::VectorXd y(n_s + n_t);
        std::vector<TaskTag> tags(n_s + n_t);
        for (Eigen::Index i = 0; i < n_s + n_t; ++i) {
            X(i, 0) = unif(0.0, 1.0);
            y[i] = unif(-1.0, 1.0);
            tags[static_cast<std::size_t>(i)] = i < n_s ? TaskTag::Source : TaskTag::Target;
        }
        auto with_source = TransferGPModel::from_params(p, X, y, tags);
        auto without = TransferGPModel::from_params(
            p, X.bottomRows(n_t), y.tail(n_t),
            std::vector<TaskTag>(static_cast<std::size_t>(n_t), TaskTag::Target));
        for (int q = 0; q < 5; ++q) {
            Eigen::VectorXd x(1);
            x << unif(0.0, 1.0);
            CHECK(with_source.predict_target(x).variance <=
                  without.predict_target(x).variance + 1e-9);
        }
    }
}

TEST_CASE("transfer with 18 source samples improves on 4 target-only samples") {
    // 2D surface, few target points: the source data should cut the error.
    std::vector<double> ape_transfer, ape_alone;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioSpec spec;
        spec.family = ScenarioFamily::Surface2d;
        spec.miscalibration = 0.3;
        spec.noise_level = 2.0;
        spec.seed = 40 + seed;
        auto pair = make_scenario(spec);
        auto source = sample_response(pair, 18, derive_seed(seed, {1}), true);
        auto target = sample_response(pair, 4, derive_seed(seed, {2}), false);
        TrainingSet eval = sample_response(pair, 200, derive_seed(seed, {3}), false);

        TransferFitOptions topts;
        topts.seed = seed;
        auto joint = fit_transfer(source, target, TransferKernelParams::defaults(2), topts);
        FitOptions sopts;
        sopts.seed = seed;
        auto alone = fit(target.inputs, target.targets, KernelParams::defaults(2), sopts);

        ape_transfer.push_back(mean_ape(joint, eval).mean);
        ape_alone.push_back(mean_ape(alone, eval).mean);
    }
    CHECK(median(ape_transfer) < median(ape_alone));
}

TEST_CASE("clamped rho is honored and excluded from optimization") {
    ScenarioSpec spec;
    spec.family = ScenarioFamily::Demo1d;
    spec.misleading = true;
    spec.seed = 12;
    auto pair = make_scenario(spec);
    auto source = sample_response(pair, 9, 5, true);
    auto target = sample_response(pair, 3, 6, false);
    TransferFitOptions opts;
    opts.seed = 4;
    opts.clamp_rho = 0.9;
    auto model = fit_transfer(source, target, TransferKernelParams::defaults(1), opts);
    CHECK(model.task_correlation() == 0.9);
}

TEST_CASE("empty target set is rejected") {
    TrainingSet source, target;
    source.inputs.resize(2, 1);
    source.inputs << 0.0, 1.0;
    source.targets.resize(2);
    source.targets << 1.0, 2.0;
    target.inputs.resize(0, 1);
    target.targets.resize(0);
    CHECK_THROWS_AS(fit_transfer(source, target, TransferKernelParams::defaults(1), {}),
                    ValidationError);
}
