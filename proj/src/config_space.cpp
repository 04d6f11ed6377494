#include "perftx/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "perftx/rng.hpp"

namespace perftx {

namespace {

std::string format_value(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

std::size_t ParameterSpec::domain_size() const {
    return kind == ParamKind::NumericRange ? grid.size() : labels.size();
}

void ParameterSpec::validate() const {
    if (name.empty()) throw ValidationError("parameter name must be non-empty");
    if (kind == ParamKind::NumericRange) {
        if (grid.empty()) throw ValidationError("parameter '" + name + "': empty grid");
        if (!labels.empty())
            throw ValidationError("parameter '" + name + "': labels not allowed on numeric range");
        for (double v : grid) {
            if (!std::isfinite(v))
                throw ValidationError("parameter '" + name + "': non-finite grid value");
            if (v < min || v > max)
                throw ValidationError("parameter '" + name + "': grid value " + format_value(v) +
                                      " outside [min, max]");
        }
        if (!std::is_sorted(grid.begin(), grid.end()) ||
            std::adjacent_find(grid.begin(), grid.end()) != grid.end())
            throw ValidationError("parameter '" + name + "': grid must be strictly ascending");
        if (scale == ParamScale::Log && min <= 0.0)
            throw ValidationError("parameter '" + name + "': log scale requires positive values");
    } else {
        if (labels.empty()) throw ValidationError("parameter '" + name + "': empty label list");
        if (!grid.empty())
            throw ValidationError("parameter '" + name + "': grid not allowed on categorical");
        std::set<std::string> seen(labels.begin(), labels.end());
        if (seen.size() != labels.size())
            throw ValidationError("parameter '" + name + "': duplicate label");
        if (kind == ParamKind::Binary && labels.size() != 2)
            throw ValidationError("parameter '" + name + "': binary needs exactly two labels");
    }
}

std::string ParameterSpec::value_text(std::size_t index) const {
    if (index >= domain_size()) throw ValidationError("parameter '" + name + "': index out of domain");
    if (kind == ParamKind::NumericRange) return format_value(grid[index]);
    return labels[index];
}

ConfigurationSpace build_space(std::vector<ParameterSpec> specs) {
    std::set<std::string> names;
    std::uint64_t card = specs.empty() ? 0 : 1;
    for (const auto& p : specs) {
        p.validate();
        if (!names.insert(p.name).second)
            throw ValidationError("duplicate parameter name '" + p.name + "'");
        const std::uint64_t size = p.domain_size();
        if (card > std::numeric_limits<std::uint64_t>::max() / size)
            throw ValidationError("configuration space cardinality overflows 64 bits");
        card *= size;
    }
    if (specs.empty()) throw ValidationError("configuration space needs at least one parameter");
    ConfigurationSpace space;
    space.params_ = std::move(specs);
    space.cardinality_ = card;
    return space;
}

bool ConfigurationSpace::contains(const Configuration& c) const {
    if (c.indices.size() != params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (c.indices[i] >= params_[i].domain_size()) return false;
    return true;
}

void ConfigurationSpace::require_valid(const Configuration& c) const {
    if (!contains(c)) throw ValidationError("configuration not valid in this space");
}

std::uint64_t ConfigurationSpace::ordinal_of(const Configuration& c) const {
    require_valid(c);
    std::uint64_t ord = 0;
    for (std::size_t i = 0; i < params_.size(); ++i)
        ord = ord * params_[i].domain_size() + c.indices[i];
    return ord;
}

Configuration ConfigurationSpace::configuration_at(std::uint64_t ordinal) const {
    if (ordinal >= cardinality_) throw ValidationError("ordinal exceeds space cardinality");
    Configuration c;
    c.indices.resize(params_.size());
    for (std::size_t i = params_.size(); i-- > 0;) {
        const std::uint64_t size = params_[i].domain_size();
        c.indices[i] = static_cast<std::uint32_t>(ordinal % size);
        ordinal /= size;
    }
    return c;
}

std::size_t ConfigurationSpace::parameter_index(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    throw ValidationError("unknown parameter '" + name + "'");
}

std::uint32_t ConfigurationSpace::domain_index(std::size_t param, const std::string& text) const {
    const auto& p = params_.at(param);
    if (p.kind == ParamKind::NumericRange) {
        double v = 0.0;
        try {
            std::size_t pos = 0;
            v = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw ValidationError("parameter '" + p.name + "': cannot parse value '" + text + "'");
        }
        return domain_index(param, v);
    }
    auto it = std::find(p.labels.begin(), p.labels.end(), text);
    if (it == p.labels.end())
        throw ValidationError("parameter '" + p.name + "': label '" + text + "' not in domain");
    return static_cast<std::uint32_t>(it - p.labels.begin());
}

std::uint32_t ConfigurationSpace::domain_index(std::size_t param, double numeric) const {
    const auto& p = params_.at(param);
    if (p.kind != ParamKind::NumericRange)
        throw ValidationError("parameter '" + p.name + "': expects a label, not a number");
    // Snap to the grid with a small relative tolerance so that values written
    // with 17 significant digits round-trip exactly through text.
    for (std::size_t i = 0; i < p.grid.size(); ++i) {
        const double g = p.grid[i];
        if (std::abs(numeric - g) <= 1e-9 * std::max(1.0, std::abs(g)))
            return static_cast<std::uint32_t>(i);
    }
    throw ValidationError("parameter '" + p.name + "': value " + format_value(numeric) +
                          " not in grid");
}

std::vector<Configuration> enumerate_space(const ConfigurationSpace& space, std::uint64_t cap) {
    if (space.cardinality() > cap)
        throw ValidationError("enumeration cap exceeded: cardinality " +
                              std::to_string(space.cardinality()) + " > cap " + std::to_string(cap));
    std::vector<Configuration> out;
    out.reserve(static_cast<std::size_t>(space.cardinality()));
    for (std::uint64_t ord = 0; ord < space.cardinality(); ++ord)
        out.push_back(space.configuration_at(ord));
    return out;
}

std::vector<Configuration> random_sample(const ConfigurationSpace& space, std::size_t n,
                                         std::uint64_t seed) {
    if (n > space.cardinality())
        throw ValidationError("cannot sample " + std::to_string(n) +
                              " distinct configurations from a space of " +
                              std::to_string(space.cardinality()));
    Rng rng(seed);
    std::vector<Configuration> out;
    out.reserve(n);
    // Seeded shuffle of ordinals guarantees distinctness. For spaces too large
    // to materialize an index table, fall back to seeded rejection sampling,
    // which preserves distinctness and determinism.
    if (space.cardinality() <= 4000000) {
        auto idx = rng.sample_indices(static_cast<std::size_t>(space.cardinality()), n);
        for (std::size_t i : idx) out.push_back(space.configuration_at(i));
    } else {
        std::set<std::uint64_t> chosen;
        while (chosen.size() < n) {
            std::uint64_t r = rng.next_u64();
            const std::uint64_t m = space.cardinality();
            const std::uint64_t limit = UINT64_MAX - UINT64_MAX % m;
            if (r >= limit) continue;
            if (chosen.insert(r % m).second) out.push_back(space.configuration_at(r % m));
        }
    }
    return out;
}

Eigen::VectorXd encode(const ConfigurationSpace& space, const Configuration& config) {
    space.require_valid(config);
    const auto& params = space.parameters();
    Eigen::VectorXd x(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        const std::uint32_t idx = config.indices[i];
        if (p.kind == ParamKind::NumericRange) {
            const double v = p.grid[idx];
            if (p.scale == ParamScale::Log) {
                const double span = std::log(p.max) - std::log(p.min);
                x[i] = span > 0.0 ? (std::log(v) - std::log(p.min)) / span : 0.0;
            } else {
                const double span = p.max - p.min;
                x[i] = span > 0.0 ? (v - p.min) / span : 0.0;
            }
        } else {
            const std::size_t k = p.labels.size();
            x[i] = k > 1 ? static_cast<double>(idx) / static_cast<double>(k - 1) : 0.0;
        }
    }
    return x;
}

Eigen::MatrixXd encode_all(const ConfigurationSpace& space,
                           const std::vector<Configuration>& configs) {
    Eigen::MatrixXd X(configs.size(), space.dimension());
    for (std::size_t r = 0; r < configs.size(); ++r) X.row(r) = encode(space, configs[r]);
    return X;
}

namespace {

std::vector<double> expand_grid_shorthand(const nlohmann::json& g, const std::string& pname) {
    const double from = g.at("from").get<double>();
    const double to = g.at("to").get<double>();
    const std::int64_t count = g.at("count").get<std::int64_t>();
    const std::string spacing = g.value("spacing", "linear");
    if (count < 2) throw ValidationError("parameter '" + pname + "': grid count must be >= 2");
    if (!(to > from)) throw ValidationError("parameter '" + pname + "': grid needs to > from");
    std::vector<double> grid(static_cast<std::size_t>(count));
    if (spacing == "linear") {
        for (std::int64_t i = 0; i < count; ++i)
            grid[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1);
    } else if (spacing == "log") {
        if (from <= 0.0) throw ValidationError("parameter '" + pname + "': log spacing needs from > 0");
        const double lf = std::log(from), lt = std::log(to);
        for (std::int64_t i = 0; i < count; ++i)
            grid[i] = std::exp(lf + (lt - lf) * static_cast<double>(i) / static_cast<double>(count - 1));
        grid.front() = from;
        grid.back() = to;
    } else {
        throw ValidationError("parameter '" + pname + "': unknown spacing '" + spacing + "'");
    }
    return grid;
}

ParamKind kind_from_text(const std::string& s) {
    if (s == "integer-range") return ParamKind::NumericRange;
    if (s == "categorical") return ParamKind::Categorical;
    if (s == "binary") return ParamKind::Binary;
    throw ValidationError("unknown parameter kind '" + s + "'");
}

std::string kind_to_text(ParamKind k) {
    switch (k) {
    case ParamKind::NumericRange: return "integer-range";
    case ParamKind::Categorical: return "categorical";
    case ParamKind::Binary: return "binary";
    }
    return "integer-range";
}

} // namespace

ConfigurationSpace load_space_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("space definition is not valid JSON: ") + e.what());
    }
    if (!doc.contains("parameters") || !doc["parameters"].is_array())
        throw ValidationError("space definition needs a 'parameters' array");
    std::vector<ParameterSpec> specs;
    for (const auto& jp : doc["parameters"]) {
        ParameterSpec p;
        p.name = jp.at("name").get<std::string>();
        p.kind = kind_from_text(jp.value("kind", "integer-range"));
        if (jp.contains("scale")) {
            const std::string s = jp["scale"].get<std::string>();
            if (s == "log") p.scale = ParamScale::Log;
            else if (s == "linear") p.scale = ParamScale::Linear;
            else throw ValidationError("parameter '" + p.name + "': unknown scale '" + s + "'");
        }
        if (p.kind == ParamKind::NumericRange) {
            if (!jp.contains("grid"))
                throw ValidationError("parameter '" + p.name + "': numeric range needs a grid");
            if (jp["grid"].is_array())
                p.grid = jp["grid"].get<std::vector<double>>();
            else
                p.grid = expand_grid_shorthand(jp["grid"], p.name);
            p.min = jp.contains("min") ? jp["min"].get<double>() : p.grid.front();
            p.max = jp.contains("max") ? jp["max"].get<double>() : p.grid.back();
        } else {
            if (!jp.contains("labels"))
                throw ValidationError("parameter '" + p.name + "': categorical needs labels");
            p.labels = jp["labels"].get<std::vector<std::string>>();
        }
        specs.push_back(std::move(p));
    }
    return build_space(std::move(specs));
}

ConfigurationSpace load_space_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open space definition file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_space_json(buf.str());
}

std::string space_to_json(const ConfigurationSpace& space) {
    nlohmann::json doc;
    doc["parameters"] = nlohmann::json::array();
    for (const auto& p : space.parameters()) {
        nlohmann::json jp;
        jp["name"] = p.name;
        jp["kind"] = kind_to_text(p.kind);
        if (p.kind == ParamKind::NumericRange) {
            jp["min"] = p.min;
            jp["max"] = p.max;
            jp["grid"] = p.grid;
        } else {
            jp["labels"] = p.labels;
        }
        jp["scale"] = p.scale == ParamScale::Log ? "log" : "linear";
        doc["parameters"].push_back(jp);
    }
    return doc.dump(2);
}

} // namespace perftx
