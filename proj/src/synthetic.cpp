#include "perftx/synthetic.hpp"

#include <cmath>

#include "perftx/rng.hpp"

namespace perftx {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double demo1d_target(const Eigen::VectorXd& enc) {
    const double x = 6.0 * enc[0];
    return std::sin(x) + 0.3 * x;
}

double surface2d_target(const Eigen::VectorXd& enc) {
    const double u = enc[0], v = enc[1];
    return 15.0 + 70.0 * logistic(10.0 * (u - 0.5)) +
           40.0 * std::exp(-8.0 * (v - 0.75) * (v - 0.75)) * logistic(8.0 * (u - 0.3));
}

ConfigurationSpace demo1d_space() {
    ParameterSpec x;
    x.name = "x";
    x.kind = ParamKind::NumericRange;
    x.min = 0;
    x.max = 199;
    x.grid.resize(200);
    for (int i = 0; i < 200; ++i) x.grid[static_cast<std::size_t>(i)] = i;
    return build_space({x});
}

ConfigurationSpace surface2d_space() {
    auto log_grid = [](double from, double to, int count) {
        std::vector<double> g(static_cast<std::size_t>(count));
        const double lf = std::log(from), lt = std::log(to);
        for (int i = 0; i < count; ++i)
            g[static_cast<std::size_t>(i)] = std::exp(lf + (lt - lf) * i / (count - 1));
        g.front() = from;
        g.back() = to;
        return g;
    };
    ParameterSpec particles;
    particles.name = "particles";
    particles.kind = ParamKind::NumericRange;
    particles.min = 5;
    particles.max = 10000;
    particles.grid = log_grid(5, 10000, 25);
    particles.scale = ParamScale::Log;
    ParameterSpec refinements;
    refinements.name = "refinements";
    refinements.kind = ParamKind::NumericRange;
    refinements.min = 1;
    refinements.max = 10000;
    refinements.grid = log_grid(1, 10000, 27);
    refinements.scale = ParamScale::Log;
    return build_space({particles, refinements});
}

/// Smooth unit-variance perturbation: sum of 32 seeded random cosine features,
/// normalized to exact zero mean / unit variance over the grid.
std::vector<double> smooth_perturbation(const Eigen::MatrixXd& encoded, std::uint64_t seed) {
    constexpr int kFeatures = 32;
    const Eigen::Index n = encoded.rows(), d = encoded.cols();
    Rng rng(derive_seed(seed, {0xF0F0u}));
    Eigen::MatrixXd omega(kFeatures, d);
    Eigen::VectorXd phase(kFeatures);
    for (int m = 0; m < kFeatures; ++m) {
        for (Eigen::Index k = 0; k < d; ++k) omega(m, k) = 4.0 * rng.normal();
        phase[m] = rng.uniform(0.0, 6.283185307179586476925286766559);
    }
    std::vector<double> eta(static_cast<std::size_t>(n));
    const double scale = std::sqrt(2.0 / kFeatures);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int m = 0; m < kFeatures; ++m)
            acc += std::cos(omega.row(m).dot(encoded.row(i)) + phase[m]);
        eta[static_cast<std::size_t>(i)] = scale * acc;
    }
    double mean = 0.0;
    for (double v : eta) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : eta) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = var > 1e-24 ? std::sqrt(var) : 1.0;
    for (double& v : eta) v = (v - mean) / sd;
    return eta;
}

} // namespace

void ScenarioSpec::validate() const {
    if (!(noise_level >= 0.0) || !std::isfinite(noise_level))
        throw ValidationError("scenario noise_level must be non-negative");
    if (!(miscalibration > -1.0) || !std::isfinite(miscalibration))
        throw ValidationError("scenario miscalibration must be > -1");
}

double ResponsePair::target_at(const Configuration& c) const {
    return target_at_ordinal(space_.ordinal_of(c));
}

double ResponsePair::source_at(const Configuration& c) const {
    return source_at_ordinal(space_.ordinal_of(c));
}

double ResponsePair::target_at_ordinal(std::uint64_t ordinal) const {
    if (ordinal >= target_.size()) throw ValidationError("ordinal outside scenario grid");
    return target_[static_cast<std::size_t>(ordinal)];
}

double ResponsePair::source_at_ordinal(std::uint64_t ordinal) const {
    if (ordinal >= source_.size()) throw ValidationError("ordinal outside scenario grid");
    return source_[static_cast<std::size_t>(ordinal)];
}

double ResponsePair::target_minimum() const {
    double best = target_[0];
    for (double v : target_) best = std::min(best, v);
    return best;
}

ResponsePair make_scenario(const ScenarioSpec& spec) {
    spec.validate();
    ResponsePair pair;
    pair.spec_ = spec;
    switch (spec.family) {
    case ScenarioFamily::Demo1d: pair.space_ = demo1d_space(); break;
    case ScenarioFamily::Surface2d: pair.space_ = surface2d_space(); break;
    default: throw ValidationError("unknown scenario family");
    }

    const auto configs = enumerate_space(pair.space_);
    pair.encoded_ = encode_all(pair.space_, configs);
    const std::size_t n = configs.size();
    pair.target_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd enc = pair.encoded_.row(i);
        pair.target_[i] = spec.family == ScenarioFamily::Demo1d ? demo1d_target(enc)
                                                                : surface2d_target(enc);
    }

    double t_mean = 0.0;
    for (double v : pair.target_) t_mean += v;
    t_mean /= static_cast<double>(n);

    pair.source_.resize(n);
    if (spec.misleading) {
        for (std::size_t i = 0; i < n; ++i) pair.source_[i] = t_mean;
        return pair;
    }

    double t_var = 0.0;
    for (double v : pair.target_) t_var += (v - t_mean) * (v - t_mean);
    t_var /= static_cast<double>(n);
    const double t_sd = std::sqrt(std::max(t_var, 0.0));
    const double amplitude = (spec.noise_level / 100.0) * kNoisePercentGain * t_sd;

    if (amplitude > 0.0) {
        const auto eta = smooth_perturbation(pair.encoded_, spec.seed);
        for (std::size_t i = 0; i < n; ++i)
            pair.source_[i] = (1.0 + spec.miscalibration) * pair.target_[i] + amplitude * eta[i];
    } else {
        for (std::size_t i = 0; i < n; ++i)
            pair.source_[i] = (1.0 + spec.miscalibration) * pair.target_[i];
    }
    return pair;
}

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    if (n < 2) throw ValidationError("correlation needs at least two points");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    if (saa <= 1e-300 || sbb <= 1e-300)
        throw ValidationError("correlation undefined: zero variance in a response");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

} // namespace

double correlation(const ResponsePair& pair) {
    return pearson(pair.source_table(), pair.target_table());
}

double correlation(const ResponsePair& pair, std::size_t n, std::uint64_t seed) {
    const std::size_t card = pair.target_table().size();
    if (n > card) throw ValidationError("correlation sample exceeds grid size");
    Rng rng(derive_seed(seed, {0xC0881u}));
    const auto idx = rng.sample_indices(card, n);
    std::vector<double> s(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = pair.source_table()[idx[i]];
        t[i] = pair.target_table()[idx[i]];
    }
    return pearson(s, t);
}

} // namespace perftx
