#include "perftx/adapt_loop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "perftx/rng.hpp"

namespace perftx {

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

void AdaptPolicy::validate() const {
    if (!std::isfinite(kappa) || kappa < 0.0)
        throw ValidationError("policy kappa must be finite and non-negative");
}

void EpisodeOptions::validate() const {
    if (max_steps < 1) throw ValidationError("episode needs at least one step");
    if (warm_source_samples < 0) throw ValidationError("warm source sample count must be >= 0");
    if (!(measurement_noise >= 0.0)) throw ValidationError("measurement noise must be >= 0");
    if (fit_restarts < 1 || fit_max_iterations < 1)
        throw ValidationError("fit options out of range");
    if (full_refit_limit < 1) throw ValidationError("full refit limit must be >= 1");
    if (candidate_cap < 1) throw ValidationError("candidate cap must be >= 1");
    cost.validate();
}

double Trace::cumulative_regret() const {
    double acc = 0.0;
    for (const auto& e : entries) acc += e.regret;
    return acc;
}

AdaptiveLoop::AdaptiveLoop(const ResponsePair& environment, AdaptPolicy policy,
                           EpisodeOptions opts)
    : env_(environment), policy_(policy), opts_(std::move(opts)),
      pending_pred_mean_(std::numeric_limits<double>::quiet_NaN()),
      pending_pred_std_(std::numeric_limits<double>::quiet_NaN()) {
    policy_.validate();
    opts_.validate();

    const std::uint64_t card = env_.space().cardinality();
    if (card <= opts_.enumerate_threshold) {
        candidates_.resize(static_cast<std::size_t>(card));
        for (std::uint64_t i = 0; i < card; ++i) candidates_[static_cast<std::size_t>(i)] = i;
    } else {
        Rng rng(derive_seed(opts_.seed, {0xCA9Du}));
        auto idx = rng.sample_indices(static_cast<std::size_t>(card), opts_.candidate_cap);
        candidates_.assign(idx.begin(), idx.end());
        std::sort(candidates_.begin(), candidates_.end());
    }
    if (candidates_.empty()) throw ValidationError("empty candidate set");

    const Eigen::Index d = env_.encoded_grid().cols();
    candidate_inputs_.resize(static_cast<Eigen::Index>(candidates_.size()), d);
    for (std::size_t i = 0; i < candidates_.size(); ++i)
        candidate_inputs_.row(static_cast<Eigen::Index>(i)) =
            env_.encoded_grid().row(static_cast<Eigen::Index>(candidates_[i]));

    if (opts_.warm_source_samples > 0) {
        Rng rng(derive_seed(opts_.seed, {0x50C5u}));
        auto idx = rng.sample_indices(static_cast<std::size_t>(card),
                                      static_cast<std::size_t>(opts_.warm_source_samples));
        source_set_.inputs.resize(static_cast<Eigen::Index>(idx.size()), d);
        source_set_.targets.resize(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            source_set_.inputs.row(static_cast<Eigen::Index>(i)) =
                env_.encoded_grid().row(static_cast<Eigen::Index>(idx[i]));
            source_set_.targets[static_cast<Eigen::Index>(i)] =
                env_.source_at_ordinal(idx[i]);
        }
    }

    Rng start_rng(derive_seed(opts_.seed, {0x57A7u}));
    current_ = candidates_[start_rng.uniform_index(candidates_.size())];
    trace_.true_minimum = env_.target_minimum();
}

void AdaptiveLoop::refit(int step) {
    const Eigen::Index d = env_.encoded_grid().cols();
    const long n_obs = static_cast<long>(observed_ordinals_.size());
    TrainingSet target_set;
    target_set.inputs.resize(n_obs, d);
    target_set.targets.resize(n_obs);
    for (long i = 0; i < n_obs; ++i) {
        target_set.inputs.row(i) = env_.encoded_grid().row(
            static_cast<Eigen::Index>(observed_ordinals_[static_cast<std::size_t>(i)]));
        target_set.targets[i] = observed_values_[static_cast<std::size_t>(i)];
    }

    if (n_obs <= opts_.full_refit_limit || !model_) {
        TransferFitOptions fit_opts;
        fit_opts.restarts = opts_.fit_restarts;
        fit_opts.max_iterations = opts_.fit_max_iterations;
        fit_opts.objective_tolerance = opts_.fit_tolerance;
        fit_opts.seed = derive_seed(opts_.seed, {0xF17u, static_cast<std::uint64_t>(step)});
        model_ = fit_transfer(source_set_, target_set,
                              TransferKernelParams::defaults(d), fit_opts);
        return;
    }

    // Past the refit limit hyperparameters stay frozen; the factorization is
    // rebuilt over the extended data in standardized space.
    const TransferKernelParams frozen = model_->params();
    const double y_mean = model_->target_mean();
    const double y_scale = model_->target_scale();
    const Eigen::Index n_s = source_set_.size();
    Eigen::MatrixXd X(n_s + n_obs, d);
    Eigen::VectorXd y(n_s + n_obs);
    std::vector<TaskTag> tags(static_cast<std::size_t>(n_s + n_obs));
    if (n_s > 0) {
        X.topRows(n_s) = source_set_.inputs;
        y.head(n_s) = source_set_.targets;
    }
    X.bottomRows(n_obs) = target_set.inputs;
    y.tail(n_obs) = target_set.targets;
    for (Eigen::Index i = 0; i < n_s; ++i) tags[static_cast<std::size_t>(i)] = TaskTag::Source;
    for (Eigen::Index i = n_s; i < n_s + n_obs; ++i)
        tags[static_cast<std::size_t>(i)] = TaskTag::Target;
    model_ = TransferGPModel::from_params(frozen, std::move(X), std::move(y), std::move(tags),
                                          y_mean, y_scale);
}

std::uint64_t AdaptiveLoop::plan(double& pred_mean, double& pred_std) const {
    Eigen::VectorXd means, vars;
    model_->predict_target_many(candidate_inputs_, means, vars);
    Eigen::Index best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < means.size(); ++i) {
        const double stddev = std::sqrt(std::max(0.0, vars[i]));
        const double score = policy_.kind == AdaptPolicy::Kind::GreedyMean
                                 ? means[i]
                                 : means[i] - policy_.kappa * stddev;
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    pred_mean = means[best];
    pred_std = std::sqrt(std::max(0.0, vars[best]));
    return candidates_[static_cast<std::size_t>(best)];
}

AdaptiveLoop::StepOutcome AdaptiveLoop::step() {
    const int step = ++step_index_;

    // Monitor
    double measured = env_.target_at_ordinal(current_);
    if (opts_.measurement_noise > 0.0) {
        Rng noise_rng(derive_seed(opts_.seed, {0x0B5Eu, static_cast<std::uint64_t>(step)}));
        measured += opts_.measurement_noise * noise_rng.normal();
    }
    cumulative_cost_ += opts_.cost.cost_target;

    TraceEntry entry;
    entry.step = step;
    entry.config_ordinal = current_;
    entry.measured = measured;
    entry.pred_mean = pending_pred_mean_;
    entry.pred_std = pending_pred_std_;
    entry.cumulative_cost = cumulative_cost_;
    entry.regret = measured - trace_.true_minimum;
    trace_.entries.push_back(entry);

    // Analyze / knowledge update
    observed_ordinals_.push_back(current_);
    observed_values_.push_back(measured);
    refit(step);

    // Plan + Execute
    StepOutcome outcome;
    outcome.measured_ordinal = current_;
    outcome.measured = measured;
    outcome.chosen_ordinal = plan(pending_pred_mean_, pending_pred_std_);
    current_ = outcome.chosen_ordinal;
    return outcome;
}

Trace run_episode(const ResponsePair& environment, const AdaptPolicy& policy,
                  const EpisodeOptions& opts) {
    AdaptiveLoop loop(environment, policy, opts);
    for (int s = 0; s < opts.max_steps; ++s) loop.step();
    return loop.trace();
}

void write_trace_csv(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "step,config_id,measured,pred_mean,pred_std,cum_cost,regret\n";
    for (const auto& e : trace.entries)
        out << e.step << ',' << e.config_ordinal << ',' << format_double(e.measured) << ','
            << format_double(e.pred_mean) << ',' << format_double(e.pred_std) << ','
            << format_double(e.cumulative_cost) << ',' << format_double(e.regret) << '\n';
}

} // namespace perftx
