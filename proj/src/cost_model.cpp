#include "perftx/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace perftx {

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

void CostParams::validate() const {
    if (!(cost_source >= 0.0) || !(cost_target >= 0.0))
        throw ValidationError("per-sample costs must be non-negative");
    if (!(budget >= 0.0)) throw ValidationError("budget must be non-negative");
    if (!(training_coefficient >= 0.0))
        throw ValidationError("training cost coefficient must be non-negative");
}

double CostParams::training_cost(long n_source, long n_target) const {
    const double n = static_cast<double>(n_source + n_target);
    switch (training_form) {
    case TrainingCostForm::Zero: return 0.0;
    case TrainingCostForm::Linear: return training_coefficient * n;
    case TrainingCostForm::Cubic: return training_coefficient * n * n * n;
    }
    return 0.0;
}

double total_cost(const CostParams& cp, long n_source, long n_target) {
    cp.validate();
    if (n_source < 0 || n_target < 0)
        throw ValidationError("sample counts must be non-negative");
    return cp.cost_source * static_cast<double>(n_source) +
           cp.cost_target * static_cast<double>(n_target) +
           cp.training_cost(n_source, n_target);
}

std::vector<Allocation> feasible_allocations(const CostParams& cp,
                                             const std::vector<long>& source_grid,
                                             const std::vector<long>& target_grid) {
    cp.validate();
    if (source_grid.empty() || target_grid.empty())
        throw ValidationError("allocation grids must be non-empty");
    std::vector<Allocation> out;
    for (long ns : source_grid)
        for (long nt : target_grid) {
            const double cost = total_cost(cp, ns, nt);
            if (cost <= cp.budget) out.push_back({ns, nt, cost, std::nullopt, std::nullopt});
        }
    std::stable_sort(out.begin(), out.end(), [](const Allocation& a, const Allocation& b) {
        if (a.total_cost != b.total_cost) return a.total_cost < b.total_cost;
        return a.n_target > b.n_target;
    });
    return out;
}

std::vector<CostErrorPoint> pareto_front(std::vector<CostErrorPoint> points) {
    for (const auto& p : points)
        if (!std::isfinite(p.cost) || !std::isfinite(p.error))
            throw ValidationError("pareto_front: non-finite point");
    std::stable_sort(points.begin(), points.end(),
                     [](const CostErrorPoint& a, const CostErrorPoint& b) {
                         if (a.cost != b.cost) return a.cost < b.cost;
                         return a.error < b.error;
                     });
    std::vector<CostErrorPoint> front;
    for (const auto& p : points) {
        if (!front.empty() && front.back().cost == p.cost && front.back().error == p.error)
            continue; // duplicate representative already kept
        if (front.empty() || p.error < front.back().error) front.push_back(p);
    }
    return front;
}

std::map<double, std::vector<CellError>>
indifference_levels(const std::vector<CellError>& cells, const std::vector<double>& levels,
                    double relative_tolerance, const CostParams& cp) {
    if (cells.empty()) throw ValidationError("indifference_levels: empty grid");
    for (double level : levels)
        if (!(level > 0.0)) throw ValidationError("indifference levels must be positive");
    std::map<double, std::vector<CellError>> out;
    for (double level : levels) {
        std::vector<CellError> members;
        for (const auto& cell : cells)
            if (std::abs(cell.mean_ape - level) <= relative_tolerance * level)
                members.push_back(cell);
        std::stable_sort(members.begin(), members.end(),
                         [&cp](const CellError& a, const CellError& b) {
                             return total_cost(cp, a.n_source, a.n_target) <
                                    total_cost(cp, b.n_source, b.n_target);
                         });
        out[level] = std::move(members);
    }
    return out;
}

void write_allocations_csv(const std::vector<CellError>& cells, const CostParams& cp,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "n_s,n_t,total_cost,feasible,mean_ape,std_ape\n";
    for (const auto& cell : cells) {
        const double cost = total_cost(cp, cell.n_source, cell.n_target);
        out << cell.n_source << ',' << cell.n_target << ',' << format_double(cost) << ','
            << (cost <= cp.budget ? 1 : 0) << ',' << format_double(cell.mean_ape) << ','
            << format_double(cell.std_ape) << '\n';
    }
}

void write_pareto_csv(const std::vector<CostErrorPoint>& front, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "cost,error\n";
    for (const auto& p : front)
        out << format_double(p.cost) << ',' << format_double(p.error) << '\n';
}

void write_indifference_csv(const std::map<double, std::vector<CellError>>& levels,
                            const CostParams& cp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "level,n_s,n_t,total_cost,mean_ape\n";
    for (const auto& [level, members] : levels)
        for (const auto& cell : members)
            out << format_double(level) << ',' << cell.n_source << ',' << cell.n_target << ','
                << format_double(total_cost(cp, cell.n_source, cell.n_target)) << ','
                << format_double(cell.mean_ape) << '\n';
}

} // namespace perftx
