#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perftx/cost_model.hpp"
#include "perftx/datasets.hpp"
#include "perftx/synthetic.hpp"
#include "perftx/transfer_gp.hpp"

namespace perftx {

/// Absolute percentage error in percent: |predicted - actual| / actual * 100.
/// Errors out for actual == 0, where the metric is undefined.
double ape(double predicted, double actual);

struct ApeStats {
    double mean = 0.0;
    double stddev = 0.0; // population
};

ApeStats mean_ape(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);
ApeStats mean_ape(const GPModel& model, const TrainingSet& eval_set);
ApeStats mean_ape(const TransferGPModel& model, const TrainingSet& eval_set);

struct SweepDataCsv {
    std::string space_path;
    std::string measurements_path;
    std::string source_label = "source";
    std::string target_label = "target";
};

/// One evaluation-protocol run: sweep source x target sample sizes with
/// repetitions, measuring accuracy, predictive variance and timings per cell.
struct SweepSpec {
    // exactly one of the two data sources
    std::optional<ScenarioSpec> scenario;
    std::optional<SweepDataCsv> csv;

    // cell sizes: explicit counts win over fractions (of the full space for
    // synthetic data, of the environment pools for CSV data)
    std::vector<double> source_fractions;
    std::vector<double> target_fractions;
    std::vector<long> source_counts;
    std::vector<long> target_counts;

    int repetitions = 3;
    double eval_fraction = 0.3;
    std::uint64_t master_seed = 0;
    std::optional<CostParams> cost;

    int fit_restarts = 2;
    int fit_max_iterations = 200;
    double fit_tolerance = 1e-6;
    std::optional<double> clamp_rho; // diagnostic negative-transfer mode

    int jobs = 1;

    void validate() const;
};

SweepSpec sweep_spec_from_json(const std::string& json_text);
SweepSpec sweep_spec_from_file(const std::string& path);
std::string sweep_spec_to_json(const SweepSpec& spec);

struct CellResult {
    long n_source = 0;
    long n_target = 0;
    int repetition = 0;
    bool skipped = false;
    double mean_ape = 0.0;
    double std_ape = 0.0;
    double mean_pred_var = 0.0;
    double train_seconds = 0.0;
    double eval_ms = 0.0; // per prediction, from a 1000-prediction batch
};

struct SweepReport {
    std::vector<std::pair<long, long>> cells; // (n_source, n_target) in run order
    std::vector<CellResult> results;          // cell-major, repetition-minor
    int repetitions = 0;
    std::uint64_t master_seed = 0;
    std::string spec_json;
    std::uint64_t spec_hash = 0;
    std::size_t zero_actual_dropped = 0;

    std::vector<const CellResult*> cell_results(long n_source, long n_target) const;
    double mean_metric(long n_source, long n_target, double CellResult::*metric) const;
    double median_metric(long n_source, long n_target, double CellResult::*metric) const;
    double std_metric(long n_source, long n_target, double CellResult::*metric) const;

    /// Per-cell aggregate errors (mean over repetitions) for the cost module.
    std::vector<CellError> cell_errors() const;
};

/// Runs the full protocol. Deterministic given the spec and master seed
/// (timing fields aside): each (cell, repetition) derives its own seed, so
/// results are identical regardless of `jobs`.
SweepReport run_sweep(const SweepSpec& spec);

/// Cost-annotated view of a finished sweep.
struct AnnotatedReport {
    CostParams cost;
    std::vector<CellError> cells;       // aggregated, with costs applied
    std::vector<CostErrorPoint> points; // (total cost, mean APE) per cell
};

AnnotatedReport summarize(const SweepReport& report, const CostParams& cost);

void write_report_csv(const SweepReport& report, const std::string& path);
void write_report_json(const SweepReport& report, const std::string& path);

} // namespace perftx
