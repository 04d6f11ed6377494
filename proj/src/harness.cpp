#include "perftx/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "perftx/rng.hpp"

namespace perftx {

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

double median_of(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

double ape(double predicted, double actual) {
    if (actual == 0.0) throw ValidationError("APE undefined for actual == 0");
    return std::abs(predicted - actual) / std::abs(actual) * 100.0;
}

ApeStats mean_ape(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
    if (predicted.size() != actual.size() || actual.size() < 1)
        throw ValidationError("mean_ape: size mismatch or empty evaluation set");
    const Eigen::Index n = actual.size();
    double sum = 0.0;
    std::vector<double> errs(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (actual[i] == 0.0)
            throw ValidationError("mean_ape: actual == 0 at evaluation row " + std::to_string(i));
        errs[static_cast<std::size_t>(i)] = ape(predicted[i], actual[i]);
        sum += errs[static_cast<std::size_t>(i)];
    }
    ApeStats stats;
    stats.mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double e : errs) var += (e - stats.mean) * (e - stats.mean);
    stats.stddev = std::sqrt(var / static_cast<double>(n));
    return stats;
}

ApeStats mean_ape(const GPModel& model, const TrainingSet& eval_set) {
    Eigen::VectorXd means, vars;
    model.predict_many(eval_set.inputs, means, vars);
    return mean_ape(means, eval_set.targets);
}

ApeStats mean_ape(const TransferGPModel& model, const TrainingSet& eval_set) {
    Eigen::VectorXd means, vars;
    model.predict_target_many(eval_set.inputs, means, vars);
    return mean_ape(means, eval_set.targets);
}

void SweepSpec::validate() const {
    if (scenario.has_value() == csv.has_value())
        throw ValidationError("sweep spec needs exactly one data source (scenario or csv)");
    const bool have_source = !source_fractions.empty() || !source_counts.empty();
    const bool have_target = !target_fractions.empty() || !target_counts.empty();
    if (!have_source || !have_target)
        throw ValidationError("sweep spec needs source and target sizes");
    for (double f : source_fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("source fractions must lie in [0, 1]");
    for (double f : target_fractions)
        if (!(f > 0.0 && f <= 1.0)) throw ValidationError("target fractions must lie in (0, 1]");
    for (long c : source_counts)
        if (c < 0) throw ValidationError("source counts must be non-negative");
    for (long c : target_counts)
        if (c < 1) throw ValidationError("target counts must be positive");
    if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0))
        throw ValidationError("eval fraction must lie in (0, 1)");
    if (fit_restarts < 1 || fit_max_iterations < 1)
        throw ValidationError("fit options out of range");
    if (jobs < 1) throw ValidationError("jobs must be >= 1");
    if (cost) cost->validate();
    if (scenario) scenario->validate();
}

namespace {

const char* family_name(ScenarioFamily f) {
    return f == ScenarioFamily::Demo1d ? "demo1d" : "surface2d";
}

ScenarioFamily family_from_name(const std::string& s) {
    if (s == "demo1d") return ScenarioFamily::Demo1d;
    if (s == "surface2d") return ScenarioFamily::Surface2d;
    throw ValidationError("unknown scenario family '" + s + "'");
}

const char* cost_form_name(TrainingCostForm f) {
    switch (f) {
    case TrainingCostForm::Zero: return "zero";
    case TrainingCostForm::Linear: return "linear";
    case TrainingCostForm::Cubic: return "cubic";
    }
    return "zero";
}

TrainingCostForm cost_form_from_name(const std::string& s) {
    if (s == "zero") return TrainingCostForm::Zero;
    if (s == "linear") return TrainingCostForm::Linear;
    if (s == "cubic") return TrainingCostForm::Cubic;
    throw ValidationError("unknown training cost form '" + s + "'");
}

nlohmann::json cost_to_json(const CostParams& cp) {
    nlohmann::json j;
    j["cost_source"] = cp.cost_source;
    j["cost_target"] = cp.cost_target;
    j["training_form"] = cost_form_name(cp.training_form);
    j["training_coefficient"] = cp.training_coefficient;
    if (std::isfinite(cp.budget)) j["budget"] = cp.budget;
    return j;
}

CostParams cost_from_json(const nlohmann::json& j) {
    CostParams cp;
    cp.cost_source = j.value("cost_source", 0.0);
    cp.cost_target = j.value("cost_target", 0.0);
    cp.training_form = cost_form_from_name(j.value("training_form", "zero"));
    cp.training_coefficient = j.value("training_coefficient", 0.0);
    if (j.contains("budget")) cp.budget = j["budget"].get<double>();
    cp.validate();
    return cp;
}

} // namespace

SweepSpec sweep_spec_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("sweep spec is not valid JSON: ") + e.what());
    }
    SweepSpec spec;
    const auto& data = j.at("data");
    const std::string kind = data.at("kind").get<std::string>();
    if (kind == "synthetic") {
        ScenarioSpec sc;
        sc.family = family_from_name(data.value("family", "demo1d"));
        sc.noise_level = data.value("noise_level", 0.0);
        sc.miscalibration = data.value("miscalibration", 0.0);
        sc.misleading = data.value("misleading", false);
        sc.seed = data.value("seed", 0ULL);
        spec.scenario = sc;
    } else if (kind == "csv") {
        SweepDataCsv c;
        c.space_path = data.at("space").get<std::string>();
        c.measurements_path = data.at("measurements").get<std::string>();
        c.source_label = data.value("source_label", "source");
        c.target_label = data.value("target_label", "target");
        spec.csv = c;
    } else {
        throw ValidationError("unknown sweep data kind '" + kind + "'");
    }
    spec.source_fractions = j.value("source_fractions", std::vector<double>{});
    spec.target_fractions = j.value("target_fractions", std::vector<double>{});
    spec.source_counts = j.value("source_counts", std::vector<long>{});
    spec.target_counts = j.value("target_counts", std::vector<long>{});
    spec.repetitions = j.value("repetitions", 3);
    spec.eval_fraction = j.value("eval_fraction", 0.3);
    spec.master_seed = j.value("master_seed", 0ULL);
    if (j.contains("cost")) spec.cost = cost_from_json(j["cost"]);
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        spec.fit_restarts = f.value("restarts", 2);
        spec.fit_max_iterations = f.value("max_iterations", 200);
        spec.fit_tolerance = f.value("tolerance", 1e-6);
        if (f.contains("clamp_rho") && !f["clamp_rho"].is_null())
            spec.clamp_rho = f["clamp_rho"].get<double>();
    }
    spec.jobs = j.value("jobs", 1);
    spec.validate();
    return spec;
}

SweepSpec sweep_spec_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open sweep spec '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return sweep_spec_from_json(buf.str());
}

std::string sweep_spec_to_json(const SweepSpec& spec) {
    nlohmann::json j;
    if (spec.scenario) {
        j["data"] = {{"kind", "synthetic"},
                     {"family", family_name(spec.scenario->family)},
                     {"noise_level", spec.scenario->noise_level},
                     {"miscalibration", spec.scenario->miscalibration},
                     {"misleading", spec.scenario->misleading},
                     {"seed", spec.scenario->seed}};
    } else if (spec.csv) {
        j["data"] = {{"kind", "csv"},
                     {"space", spec.csv->space_path},
                     {"measurements", spec.csv->measurements_path},
                     {"source_label", spec.csv->source_label},
                     {"target_label", spec.csv->target_label}};
    }
    if (!spec.source_fractions.empty()) j["source_fractions"] = spec.source_fractions;
    if (!spec.target_fractions.empty()) j["target_fractions"] = spec.target_fractions;
    if (!spec.source_counts.empty()) j["source_counts"] = spec.source_counts;
    if (!spec.target_counts.empty()) j["target_counts"] = spec.target_counts;
    j["repetitions"] = spec.repetitions;
    j["eval_fraction"] = spec.eval_fraction;
    j["master_seed"] = spec.master_seed;
    if (spec.cost) j["cost"] = cost_to_json(*spec.cost);
    j["fit"] = {{"restarts", spec.fit_restarts},
                {"max_iterations", spec.fit_max_iterations},
                {"tolerance", spec.fit_tolerance}};
    if (spec.clamp_rho) j["fit"]["clamp_rho"] = *spec.clamp_rho;
    j["jobs"] = spec.jobs;
    return j.dump(2);
}

namespace {

/// Numeric pools shared by all cells: encoded inputs plus response values per
/// environment.
struct ResolvedData {
    Eigen::MatrixXd source_inputs;
    Eigen::VectorXd source_values;
    Eigen::MatrixXd target_inputs;
    Eigen::VectorXd target_values;
    long space_size = 0; // |X| for fraction resolution on synthetic data
};

ResolvedData resolve_data(const SweepSpec& spec) {
    ResolvedData data;
    if (spec.scenario) {
        const ResponsePair pair = make_scenario(*spec.scenario);
        const auto n = static_cast<Eigen::Index>(pair.space().cardinality());
        data.source_inputs = pair.encoded_grid();
        data.target_inputs = pair.encoded_grid();
        data.source_values.resize(n);
        data.target_values.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            data.source_values[i] = pair.source_at_ordinal(static_cast<std::uint64_t>(i));
            data.target_values[i] = pair.target_at_ordinal(static_cast<std::uint64_t>(i));
        }
        data.space_size = static_cast<long>(n);
    } else {
        const ConfigurationSpace space = load_space_file(spec.csv->space_path);
        const MeasurementTable table =
            load_measurements_csv(spec.csv->measurements_path, space);
        auto [source, target] =
            split_by_environment(table, spec.csv->source_label, spec.csv->target_label);
        std::vector<std::size_t> all_s(source.rows.size()), all_t(target.rows.size());
        for (std::size_t i = 0; i < all_s.size(); ++i) all_s[i] = i;
        for (std::size_t i = 0; i < all_t.size(); ++i) all_t[i] = i;
        const TrainingSet s = to_training_set(source, all_s);
        const TrainingSet t = to_training_set(target, all_t);
        data.source_inputs = s.inputs;
        data.source_values = s.targets;
        data.target_inputs = t.inputs;
        data.target_values = t.targets;
        data.space_size = static_cast<long>(target.rows.size());
    }
    return data;
}

std::vector<long> resolve_sizes(const std::vector<long>& counts,
                                const std::vector<double>& fractions, long base, bool at_least_one) {
    if (!counts.empty()) return counts;
    std::vector<long> out;
    out.reserve(fractions.size());
    for (double f : fractions) {
        long n = round_half_up(f * static_cast<double>(base));
        if (at_least_one && n < 1) n = 1;
        out.push_back(n);
    }
    return out;
}

struct TaskOutcome {
    CellResult result;
    std::size_t zero_dropped = 0;
};

TaskOutcome run_task(const SweepSpec& spec, const ResolvedData& data, long n_source,
                     long n_target, int repetition) {
    TaskOutcome outcome;
    CellResult& res = outcome.result;
    res.n_source = n_source;
    res.n_target = n_target;
    res.repetition = repetition;

    const long pool_t = static_cast<long>(data.target_values.size());
    const long pool_s = static_cast<long>(data.source_values.size());

    // Evaluation set: shared by every cell within a repetition so that cells
    // are directly comparable; rows with a zero actual are dropped (APE is
    // undefined there).
    long eval_n = round_half_up(spec.eval_fraction * static_cast<double>(pool_t));
    eval_n = std::max(1L, std::min(eval_n, pool_t - 1));
    Rng eval_rng(derive_seed(spec.master_seed, {0xE7A1u, static_cast<std::uint64_t>(repetition)}));
    auto eval_idx = eval_rng.sample_indices(static_cast<std::size_t>(pool_t),
                                            static_cast<std::size_t>(eval_n));
    {
        std::vector<std::size_t> kept;
        kept.reserve(eval_idx.size());
        for (std::size_t i : eval_idx) {
            if (data.target_values[static_cast<Eigen::Index>(i)] == 0.0) ++outcome.zero_dropped;
            else kept.push_back(i);
        }
        eval_idx = std::move(kept);
    }
    if (eval_idx.empty()) {
        res.skipped = true;
        return outcome;
    }

    std::vector<char> in_eval(static_cast<std::size_t>(pool_t), 0);
    for (std::size_t i : eval_idx) in_eval[i] = 1;
    std::vector<std::size_t> target_pool;
    target_pool.reserve(static_cast<std::size_t>(pool_t) - eval_idx.size());
    for (long i = 0; i < pool_t; ++i)
        if (!in_eval[static_cast<std::size_t>(i)]) target_pool.push_back(static_cast<std::size_t>(i));

    if (n_target > static_cast<long>(target_pool.size()) || n_source > pool_s) {
        res.skipped = true;
        return outcome;
    }

    const std::uint64_t cell_seed =
        derive_seed(spec.master_seed, {0xCE11u, static_cast<std::uint64_t>(n_source),
                                       static_cast<std::uint64_t>(n_target),
                                       static_cast<std::uint64_t>(repetition)});

    Rng draw_rng(cell_seed);
    auto pick_t = draw_rng.sample_indices(target_pool.size(), static_cast<std::size_t>(n_target));
    Rng source_rng(derive_seed(cell_seed, {1}));
    auto pick_s = source_rng.sample_indices(static_cast<std::size_t>(pool_s),
                                            static_cast<std::size_t>(n_source));

    const Eigen::Index d = data.target_inputs.cols();
    TrainingSet target_set;
    target_set.inputs.resize(n_target, d);
    target_set.targets.resize(n_target);
    for (long i = 0; i < n_target; ++i) {
        const auto row = static_cast<Eigen::Index>(target_pool[pick_t[static_cast<std::size_t>(i)]]);
        target_set.inputs.row(i) = data.target_inputs.row(row);
        target_set.targets[i] = data.target_values[row];
    }

    TrainingSet eval_set;
    eval_set.inputs.resize(static_cast<Eigen::Index>(eval_idx.size()), d);
    eval_set.targets.resize(static_cast<Eigen::Index>(eval_idx.size()));
    for (std::size_t i = 0; i < eval_idx.size(); ++i) {
        eval_set.inputs.row(static_cast<Eigen::Index>(i)) =
            data.target_inputs.row(static_cast<Eigen::Index>(eval_idx[i]));
        eval_set.targets[static_cast<Eigen::Index>(i)] =
            data.target_values[static_cast<Eigen::Index>(eval_idx[i])];
    }

    const std::uint64_t fit_seed = derive_seed(cell_seed, {2});
    Eigen::VectorXd means, vars;
    const auto fit_start = std::chrono::steady_clock::now();
    if (n_source > 0) {
        TrainingSet source_set;
        source_set.inputs.resize(n_source, d);
        source_set.targets.resize(n_source);
        for (long i = 0; i < n_source; ++i) {
            const auto row = static_cast<Eigen::Index>(pick_s[static_cast<std::size_t>(i)]);
            source_set.inputs.row(i) = data.source_inputs.row(row);
            source_set.targets[i] = data.source_values[row];
        }
        TransferFitOptions opts;
        opts.restarts = spec.fit_restarts;
        opts.max_iterations = spec.fit_max_iterations;
        opts.objective_tolerance = spec.fit_tolerance;
        opts.seed = fit_seed;
        opts.clamp_rho = spec.clamp_rho;
        const TransferGPModel model = fit_transfer(
            source_set, target_set, TransferKernelParams::defaults(d), opts);
        res.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                          fit_start)
                                .count();
        model.predict_target_many(eval_set.inputs, means, vars);
        res.eval_ms = [&] {
            const auto batch = eval_set.inputs.replicate(
                (1000 + eval_set.inputs.rows() - 1) / eval_set.inputs.rows(), 1);
            Eigen::VectorXd bm, bv;
            const auto t0 = std::chrono::steady_clock::now();
            model.predict_target_many(batch, bm, bv);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return secs * 1000.0 / static_cast<double>(batch.rows());
        }();
    } else {
        FitOptions opts;
        opts.restarts = spec.fit_restarts;
        opts.max_iterations = spec.fit_max_iterations;
        opts.objective_tolerance = spec.fit_tolerance;
        opts.seed = fit_seed;
        const GPModel model =
            fit(target_set.inputs, target_set.targets, KernelParams::defaults(d), opts);
        res.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                          fit_start)
                                .count();
        model.predict_many(eval_set.inputs, means, vars);
        res.eval_ms = [&] {
            const auto batch = eval_set.inputs.replicate(
                (1000 + eval_set.inputs.rows() - 1) / eval_set.inputs.rows(), 1);
            Eigen::VectorXd bm, bv;
            const auto t0 = std::chrono::steady_clock::now();
            model.predict_many(batch, bm, bv);
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return secs * 1000.0 / static_cast<double>(batch.rows());
        }();
    }

    const ApeStats stats = mean_ape(means, eval_set.targets);
    res.mean_ape = stats.mean;
    res.std_ape = stats.stddev;
    res.mean_pred_var = vars.mean();
    return outcome;
}

} // namespace

SweepReport run_sweep(const SweepSpec& spec) {
    spec.validate();
    const ResolvedData data = resolve_data(spec);

    const long source_base =
        spec.scenario ? data.space_size : static_cast<long>(data.source_values.size());
    const long target_base = spec.scenario ? data.space_size
                                           : static_cast<long>(data.target_values.size());
    const auto source_sizes =
        resolve_sizes(spec.source_counts, spec.source_fractions, source_base, false);
    const auto target_sizes =
        resolve_sizes(spec.target_counts, spec.target_fractions, target_base, true);

    SweepReport report;
    report.repetitions = spec.repetitions;
    report.master_seed = spec.master_seed;
    report.spec_json = sweep_spec_to_json(spec);
    report.spec_hash = fnv1a(report.spec_json);
    for (long ns : source_sizes)
        for (long nt : target_sizes) report.cells.emplace_back(ns, nt);
    report.results.resize(report.cells.size() * static_cast<std::size_t>(spec.repetitions));

    struct Task {
        long ns, nt;
        int rep;
        std::size_t slot;
    };
    std::vector<Task> tasks;
    tasks.reserve(report.results.size());
    std::size_t slot = 0;
    for (const auto& [ns, nt] : report.cells)
        for (int rep = 0; rep < spec.repetitions; ++rep) tasks.push_back({ns, nt, rep, slot++});

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> zero_dropped{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            try {
                TaskOutcome out = run_task(spec, data, tasks[i].ns, tasks[i].nt, tasks[i].rep);
                zero_dropped.fetch_add(out.zero_dropped);
                report.results[tasks[i].slot] = out.result;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (spec.jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int j = 0; j < spec.jobs; ++j) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    // the same rows are dropped in every cell of a repetition; count one pass
    report.zero_actual_dropped =
        zero_dropped.load() / std::max<std::size_t>(1, report.cells.size());
    return report;
}

std::vector<const CellResult*> SweepReport::cell_results(long n_source, long n_target) const {
    std::vector<const CellResult*> out;
    for (const auto& r : results)
        if (r.n_source == n_source && r.n_target == n_target && !r.skipped) out.push_back(&r);
    return out;
}

double SweepReport::mean_metric(long n_source, long n_target,
                                double CellResult::*metric) const {
    const auto rs = cell_results(n_source, n_target);
    if (rs.empty()) throw ValidationError("no results for requested cell");
    double acc = 0.0;
    for (const auto* r : rs) acc += r->*metric;
    return acc / static_cast<double>(rs.size());
}

double SweepReport::median_metric(long n_source, long n_target,
                                  double CellResult::*metric) const {
    const auto rs = cell_results(n_source, n_target);
    if (rs.empty()) throw ValidationError("no results for requested cell");
    std::vector<double> v;
    v.reserve(rs.size());
    for (const auto* r : rs) v.push_back(r->*metric);
    return median_of(std::move(v));
}

double SweepReport::std_metric(long n_source, long n_target,
                               double CellResult::*metric) const {
    const auto rs = cell_results(n_source, n_target);
    if (rs.empty()) throw ValidationError("no results for requested cell");
    double mean = 0.0;
    for (const auto* r : rs) mean += r->*metric;
    mean /= static_cast<double>(rs.size());
    double var = 0.0;
    for (const auto* r : rs) var += (r->*metric - mean) * (r->*metric - mean);
    return std::sqrt(var / static_cast<double>(rs.size()));
}

std::vector<CellError> SweepReport::cell_errors() const {
    std::vector<CellError> out;
    for (const auto& [ns, nt] : cells) {
        const auto rs = cell_results(ns, nt);
        if (rs.empty()) continue; // cell fully skipped
        CellError ce;
        ce.n_source = ns;
        ce.n_target = nt;
        ce.mean_ape = mean_metric(ns, nt, &CellResult::mean_ape);
        ce.std_ape = std_metric(ns, nt, &CellResult::mean_ape);
        out.push_back(ce);
    }
    return out;
}

AnnotatedReport summarize(const SweepReport& report, const CostParams& cost) {
    cost.validate();
    AnnotatedReport annotated;
    annotated.cost = cost;
    annotated.cells = report.cell_errors();
    for (const auto& cell : annotated.cells)
        annotated.points.push_back(
            {total_cost(cost, cell.n_source, cell.n_target), cell.mean_ape});
    return annotated;
}

void write_report_csv(const SweepReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    CostParams cp;
    bool have_cost = false;
    try {
        const auto spec = sweep_spec_from_json(report.spec_json);
        if (spec.cost) {
            cp = *spec.cost;
            have_cost = true;
        }
    } catch (const ValidationError&) {
    }
    out << "n_s,n_t,rep,mean_ape,std_ape,mean_pred_var,train_s,eval_ms,cost,skipped\n";
    for (const auto& r : report.results) {
        out << r.n_source << ',' << r.n_target << ',' << r.repetition << ',';
        if (r.skipped) {
            out << ",,,,,";
        } else {
            out << format_double(r.mean_ape) << ',' << format_double(r.std_ape) << ','
                << format_double(r.mean_pred_var) << ',' << format_double(r.train_seconds) << ','
                << format_double(r.eval_ms) << ',';
        }
        out << (have_cost ? format_double(total_cost(cp, r.n_source, r.n_target)) : "0") << ','
            << (r.skipped ? 1 : 0) << '\n';
    }
}

void write_report_json(const SweepReport& report, const std::string& path) {
    nlohmann::json j;
    j["spec"] = nlohmann::json::parse(report.spec_json);
    {
        std::ostringstream hex;
        hex << std::hex << report.spec_hash;
        j["spec_hash"] = hex.str();
    }
    j["repetitions"] = report.repetitions;
    j["master_seed"] = report.master_seed;
    j["zero_actual_dropped"] = report.zero_actual_dropped;
    j["cells"] = nlohmann::json::array();
    for (const auto& [ns, nt] : report.cells) {
        nlohmann::json cell;
        cell["n_s"] = ns;
        cell["n_t"] = nt;
        const std::size_t rs = report.cell_results(ns, nt).size();
        cell["completed"] = rs;
        if (rs > 0) {
            cell["mean_ape_mean"] = report.mean_metric(ns, nt, &CellResult::mean_ape);
            cell["mean_ape_median"] = report.median_metric(ns, nt, &CellResult::mean_ape);
            cell["mean_ape_std"] = report.std_metric(ns, nt, &CellResult::mean_ape);
            cell["mean_pred_var_mean"] = report.mean_metric(ns, nt, &CellResult::mean_pred_var);
            cell["train_s_mean"] = report.mean_metric(ns, nt, &CellResult::train_seconds);
            cell["eval_ms_mean"] = report.mean_metric(ns, nt, &CellResult::eval_ms);
        }
        j["cells"].push_back(cell);
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

} // namespace perftx
