#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perftx/cost_model.hpp"
#include "perftx/synthetic.hpp"
#include "perftx/transfer_gp.hpp"

namespace perftx {

/// Planner used in the Plan phase of the loop (minimization orientation):
/// greedy-mean picks the smallest predicted mean, lcb the smallest
/// mean - kappa * std (the optimistic bound for a minimizer).
struct AdaptPolicy {
    enum class Kind { GreedyMean, Lcb };
    Kind kind = Kind::Lcb;
    double kappa = 1.0;

    void validate() const;
};

struct EpisodeOptions {
    int max_steps = 10;
    CostParams cost;                 // only the target sample cost accrues in the loop
    std::uint64_t seed = 0;
    long warm_source_samples = 0;    // pre-paid source observations seeding the model
    double measurement_noise = 0.0;  // std of seeded Gaussian noise on monitored values
    int fit_restarts = 2;
    int fit_max_iterations = 200;
    double fit_tolerance = 1e-6;
    long full_refit_limit = 200;     // beyond this, hyperparameters freeze
    std::uint64_t enumerate_threshold = 10000; // plan over the full grid up to here
    std::size_t candidate_cap = 1000;          // seeded subset size beyond it

    void validate() const;
};

struct TraceEntry {
    int step = 0;                    // 1-based
    std::uint64_t config_ordinal = 0; // configuration measured at this step
    double measured = 0.0;
    double pred_mean = 0.0;          // model's belief when this configuration was chosen
    double pred_std = 0.0;           // (nan on step 1: the start configuration is seeded)
    double cumulative_cost = 0.0;
    double regret = 0.0;             // measured - true minimum of the target response
};

struct Trace {
    std::vector<TraceEntry> entries;
    double true_minimum = 0.0;

    double cumulative_regret() const;
};

/// One Monitor-Analyze-Plan-Execute cycle per step(); the learned model is the
/// shared knowledge. An episode is strictly sequential; run independent
/// episodes with distinct seeds for concurrency.
class AdaptiveLoop {
public:
    AdaptiveLoop(const ResponsePair& environment, AdaptPolicy policy, EpisodeOptions opts);

    struct StepOutcome {
        std::uint64_t measured_ordinal = 0;
        double measured = 0.0;
        std::uint64_t chosen_ordinal = 0;
    };

    StepOutcome step();

    int step_index() const { return step_index_; }
    std::uint64_t current_configuration() const { return current_; }
    double cumulative_cost() const { return cumulative_cost_; }
    long observation_count() const { return static_cast<long>(observed_ordinals_.size()); }
    const TransferGPModel* model() const { return model_ ? &*model_ : nullptr; }
    const Trace& trace() const { return trace_; }

private:
    void refit(int step);
    std::uint64_t plan(double& pred_mean, double& pred_std) const;

    const ResponsePair& env_;
    AdaptPolicy policy_;
    EpisodeOptions opts_;
    std::vector<std::uint64_t> candidates_; // ascending ordinals
    Eigen::MatrixXd candidate_inputs_;
    TrainingSet source_set_;
    std::vector<std::uint64_t> observed_ordinals_;
    std::vector<double> observed_values_;
    std::optional<TransferGPModel> model_;
    std::uint64_t current_ = 0;
    int step_index_ = 0;
    double cumulative_cost_ = 0.0;
    double pending_pred_mean_;
    double pending_pred_std_;
    Trace trace_;
};

Trace run_episode(const ResponsePair& environment, const AdaptPolicy& policy,
                  const EpisodeOptions& opts);

void write_trace_csv(const Trace& trace, const std::string& path);

} // namespace perftx
