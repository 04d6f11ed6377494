#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "perftx/errors.hpp"

namespace perftx {

enum class ParamKind { NumericRange, Categorical, Binary };
enum class ParamScale { Linear, Log };

/// One configuration parameter: a finite ordered domain plus an encoding hint.
///
/// NumericRange parameters carry (min, max) bounds and an explicit ascending
/// grid of admissible values. Grids are stored as doubles; log-spaced grids
/// (and measured systems generally) need not be integral.
struct ParameterSpec {
    std::string name;
    ParamKind kind = ParamKind::NumericRange;
    double min = 0.0;
    double max = 0.0;
    std::vector<double> grid;          // NumericRange only
    std::vector<std::string> labels;   // Categorical / Binary only
    ParamScale scale = ParamScale::Linear;

    std::size_t domain_size() const;
    void validate() const;

    /// Value of the i-th domain element as text (grid value or label).
    std::string value_text(std::size_t index) const;
};

/// A point in the space, stored as one domain index per parameter.
struct Configuration {
    std::vector<std::uint32_t> indices;

    bool operator==(const Configuration& other) const { return indices == other.indices; }
};

/// Cartesian product of parameter domains.
class ConfigurationSpace {
public:
    ConfigurationSpace() = default;

    const std::vector<ParameterSpec>& parameters() const { return params_; }
    std::size_t dimension() const { return params_.size(); }
    std::uint64_t cardinality() const { return cardinality_; }

    bool contains(const Configuration& c) const;
    void require_valid(const Configuration& c) const;

    /// Lexicographic rank of a configuration (first parameter most significant).
    std::uint64_t ordinal_of(const Configuration& c) const;
    Configuration configuration_at(std::uint64_t ordinal) const;

    /// Index of a parameter by name; throws if absent.
    std::size_t parameter_index(const std::string& name) const;

    /// Maps a raw value (grid number or label) to its domain index.
    std::uint32_t domain_index(std::size_t param, const std::string& text) const;
    std::uint32_t domain_index(std::size_t param, double numeric) const;

private:
    friend ConfigurationSpace build_space(std::vector<ParameterSpec> specs);
    std::vector<ParameterSpec> params_;
    std::uint64_t cardinality_ = 0;
};

ConfigurationSpace build_space(std::vector<ParameterSpec> specs);

/// All configurations in lexicographic order of the parameter grids.
/// Throws if cardinality exceeds `cap`.
std::vector<Configuration> enumerate_space(const ConfigurationSpace& space,
                                           std::uint64_t cap = 1000000);

/// n distinct configurations drawn uniformly without replacement.
/// Identical seed gives identical output on every platform.
std::vector<Configuration> random_sample(const ConfigurationSpace& space, std::size_t n,
                                         std::uint64_t seed);

/// Numeric encoding, one coordinate per parameter:
///   numeric linear  -> (v - min) / (max - min)
///   numeric log     -> (ln v - ln min) / (ln max - ln min)
///   binary          -> {0, 1}
///   categorical (k) -> index / (k - 1)   (ordinal on the declared label order)
/// Single-element domains encode to 0.
Eigen::VectorXd encode(const ConfigurationSpace& space, const Configuration& config);

/// Encodes a batch of configurations into rows of a matrix.
Eigen::MatrixXd encode_all(const ConfigurationSpace& space,
                           const std::vector<Configuration>& configs);

/// Space definition JSON:
///   { "parameters": [ {"name", "kind", "min", "max", "grid", "labels", "scale"} ] }
/// "grid" is either an explicit array or the shorthand
/// {"from", "to", "count", "spacing": "linear"|"log"} expanded deterministically.
ConfigurationSpace load_space_json(const std::string& json_text);
ConfigurationSpace load_space_file(const std::string& path);
std::string space_to_json(const ConfigurationSpace& space);

} // namespace perftx
