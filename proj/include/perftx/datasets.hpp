#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "perftx/config_space.hpp"
#include "perftx/synthetic.hpp"
#include "perftx/transfer_gp.hpp"

namespace perftx {

struct MeasurementRow {
    Configuration config;
    double performance = 0.0;
    std::string environment = "default";
    int replicates = 1; // bookkeeping only; values arrive pre-averaged
};

/// Configuration-performance measurements over one space. Immutable after
/// load; thread-safe for reads.
struct MeasurementTable {
    ConfigurationSpace space;
    std::vector<MeasurementRow> rows;
    std::string name;
    std::string performance_unit;
    std::size_t dropped_rows = 0; // rows with missing/non-finite performance

    void require_nonempty() const;
};

/// Reads the canonical measurement CSV: UTF-8, comma-separated, '.' decimal,
/// mandatory header, '#' comment lines ignored. Columns are the space's
/// parameter names plus `performance` and optional `environment` /
/// `replicates`. Rows with an empty or non-finite performance cell are dropped
/// and counted in `dropped_rows`; any other malformed row is an error with its
/// line number. Values and labels do not contain commas (no quoting).
MeasurementTable load_measurements_csv(const std::string& path, const ConfigurationSpace& space);

void save_measurements_csv(const MeasurementTable& table, const std::string& path);

/// Full-grid measurement table for a synthetic scenario, both environments
/// tagged "source" / "target".
MeasurementTable to_measurement_table(const ResponsePair& pair);

/// Partitions rows exactly by environment label; both labels must be present.
std::pair<MeasurementTable, MeasurementTable>
split_by_environment(const MeasurementTable& table, const std::string& source_label,
                     const std::string& target_label);

struct Split {
    std::vector<std::size_t> train_pool;
    std::vector<std::size_t> eval_set;
    std::uint64_t seed = 0;
};

/// Seeded disjoint split; eval size = round-half-up(eval_fraction * n), at
/// least 1, and the train pool must stay non-empty.
Split holdout(const MeasurementTable& table, double eval_fraction, std::uint64_t seed);

/// Encodes the selected rows into a numeric training set.
TrainingSet to_training_set(const MeasurementTable& table, const std::vector<std::size_t>& rows);

} // namespace perftx
