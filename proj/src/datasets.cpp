#include "perftx/datasets.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "perftx/rng.hpp"

namespace perftx {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

void MeasurementTable::require_nonempty() const {
    if (rows.empty()) throw ValidationError("measurement table has no valid rows");
}

MeasurementTable load_measurements_csv(const std::string& path,
                                       const ConfigurationSpace& space) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open measurement file '" + path + "'");

    MeasurementTable table;
    table.space = space;
    table.name = path;

    std::string line;
    std::size_t line_no = 0;
    // header
    std::vector<int> column_kind; // >=0: parameter index; -1 performance; -2 environment; -3 replicates
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto header = split_csv_line(line);
        bool have_perf = false;
        std::vector<bool> seen(space.dimension(), false);
        for (const auto& col : header) {
            if (col == "performance") {
                column_kind.push_back(-1);
                have_perf = true;
            } else if (col == "environment") {
                column_kind.push_back(-2);
            } else if (col == "replicates") {
                column_kind.push_back(-3);
            } else {
                std::size_t pi;
                try {
                    pi = space.parameter_index(col);
                } catch (const ValidationError&) {
                    throw ValidationError(path + ":" + std::to_string(line_no) +
                                          ": unknown column '" + col + "'");
                }
                if (seen[pi])
                    throw ValidationError(path + ":" + std::to_string(line_no) +
                                          ": duplicate column '" + col + "'");
                seen[pi] = true;
                column_kind.push_back(static_cast<int>(pi));
            }
        }
        if (!have_perf)
            throw ValidationError(path + ": header lacks a 'performance' column");
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (!seen[i])
                throw ValidationError(path + ": header lacks parameter column '" +
                                      space.parameters()[i].name + "'");
        break;
    }
    if (column_kind.empty()) throw ValidationError(path + ": missing header row");

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != column_kind.size())
            throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(column_kind.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        MeasurementRow row;
        row.config.indices.resize(space.dimension());
        bool drop = false;
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const int kind = column_kind[f];
            const std::string& cell = fields[f];
            try {
                if (kind >= 0) {
                    row.config.indices[static_cast<std::size_t>(kind)] =
                        space.domain_index(static_cast<std::size_t>(kind), cell);
                } else if (kind == -1) {
                    if (cell.empty()) {
                        drop = true;
                        continue;
                    }
                    std::size_t pos = 0;
                    row.performance = std::stod(cell, &pos);
                    if (pos != cell.size()) throw ValidationError("trailing characters");
                    if (!std::isfinite(row.performance)) drop = true;
                } else if (kind == -2) {
                    row.environment = cell;
                } else {
                    row.replicates = std::stoi(cell);
                    if (row.replicates < 1) throw ValidationError("replicates must be >= 1");
                }
            } catch (const std::exception& e) {
                throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (drop) {
            ++table.dropped_rows;
            continue;
        }
        table.rows.push_back(std::move(row));
    }
    table.require_nonempty();
    return table;
}

void save_measurements_csv(const MeasurementTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write measurement file '" + path + "'");
    const auto& params = table.space.parameters();
    for (const auto& p : params) out << p.name << ',';
    out << "performance,environment,replicates\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < params.size(); ++i)
            out << params[i].value_text(row.config.indices[i]) << ',';
        out << format_double(row.performance) << ',' << row.environment << ','
            << row.replicates << '\n';
    }
}

MeasurementTable to_measurement_table(const ResponsePair& pair) {
    MeasurementTable table;
    table.space = pair.space();
    table.name = "synthetic";
    const std::uint64_t card = pair.space().cardinality();
    table.rows.reserve(2 * static_cast<std::size_t>(card));
    for (std::uint64_t ord = 0; ord < card; ++ord) {
        MeasurementRow s;
        s.config = pair.space().configuration_at(ord);
        s.performance = pair.source_at_ordinal(ord);
        s.environment = "source";
        table.rows.push_back(s);
    }
    for (std::uint64_t ord = 0; ord < card; ++ord) {
        MeasurementRow t;
        t.config = pair.space().configuration_at(ord);
        t.performance = pair.target_at_ordinal(ord);
        t.environment = "target";
        table.rows.push_back(t);
    }
    return table;
}

std::pair<MeasurementTable, MeasurementTable>
split_by_environment(const MeasurementTable& table, const std::string& source_label,
                     const std::string& target_label) {
    MeasurementTable source, target;
    source.space = target.space = table.space;
    source.name = table.name + ":" + source_label;
    target.name = table.name + ":" + target_label;
    for (const auto& row : table.rows) {
        if (row.environment == source_label) source.rows.push_back(row);
        else if (row.environment == target_label) target.rows.push_back(row);
    }
    if (source.rows.empty())
        throw ValidationError("environment label '" + source_label + "' not present");
    if (target.rows.empty())
        throw ValidationError("environment label '" + target_label + "' not present");
    return {std::move(source), std::move(target)};
}

Split holdout(const MeasurementTable& table, double eval_fraction, std::uint64_t seed) {
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw ValidationError("eval fraction must lie in (0, 1)");
    const std::size_t n = table.rows.size();
    // round half up
    std::size_t n_eval = static_cast<std::size_t>(
        std::floor(eval_fraction * static_cast<double>(n) + 0.5));
    if (n_eval < 1) n_eval = 1;
    if (n_eval >= n)
        throw ValidationError("degenerate split: evaluation set would consume every row");
    Rng rng(derive_seed(seed, {0x5B17u}));
    auto idx = rng.sample_indices(n, n);
    Split split;
    split.seed = seed;
    split.eval_set.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_eval));
    split.train_pool.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_eval), idx.end());
    return split;
}

TrainingSet to_training_set(const MeasurementTable& table, const std::vector<std::size_t>& rows) {
    TrainingSet set;
    set.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.space.dimension()));
    set.targets.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = table.rows.at(rows[i]);
        set.inputs.row(static_cast<Eigen::Index>(i)) = encode(table.space, row.config);
        set.targets[static_cast<Eigen::Index>(i)] = row.performance;
    }
    return set;
}

} // namespace perftx
