#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perftx/errors.hpp"

namespace perftx {

/// Shape of the training-cost term. Cubic matches the O(n^3) scaling of exact
/// GP training; the coefficient is user-supplied.
enum class TrainingCostForm { Zero, Linear, Cubic };

struct CostParams {
    double cost_source = 0.0; // per source sample
    double cost_target = 0.0; // per target sample
    TrainingCostForm training_form = TrainingCostForm::Zero;
    double training_coefficient = 0.0;
    double budget = std::numeric_limits<double>::infinity();

    void validate() const;
    /// Source samples are expected to be the cheap ones; an inverted ratio is
    /// legal but worth a warning upstream.
    bool inverted_cost_ratio() const { return cost_source > cost_target; }
    double training_cost(long n_source, long n_target) const;
};

double total_cost(const CostParams& cp, long n_source, long n_target);

struct Allocation {
    long n_source = 0;
    long n_target = 0;
    double total_cost = 0.0;
    std::optional<double> mean_ape; // filled once evaluated
    std::optional<double> std_ape;
};

/// Budget-feasible subset of the grid cross product, sorted by total cost
/// ascending with ties broken by n_target descending (prefer target data at
/// equal cost).
std::vector<Allocation> feasible_allocations(const CostParams& cp,
                                             const std::vector<long>& source_grid,
                                             const std::vector<long>& target_grid);

struct CostErrorPoint {
    double cost = 0.0;
    double error = 0.0;
};

/// Non-dominated subset (no other point with cost <= and error <= and one
/// strict), sorted by cost ascending; exact duplicates keep one representative.
std::vector<CostErrorPoint> pareto_front(std::vector<CostErrorPoint> points);

/// Evaluated sweep cell used by the indifference-curve extraction.
struct CellError {
    long n_source = 0;
    long n_target = 0;
    double mean_ape = 0.0;
    double std_ape = 0.0;
};

/// For each error level, every cell whose mean APE is within the relative
/// tolerance of it, sorted by total cost under `cp`.
std::map<double, std::vector<CellError>>
indifference_levels(const std::vector<CellError>& cells, const std::vector<double>& levels,
                    double relative_tolerance, const CostParams& cp);

void write_allocations_csv(const std::vector<CellError>& cells, const CostParams& cp,
                           const std::string& path);
void write_pareto_csv(const std::vector<CostErrorPoint>& front, const std::string& path);
void write_indifference_csv(const std::map<double, std::vector<CellError>>& levels,
                            const CostParams& cp, const std::string& path);

} // namespace perftx
