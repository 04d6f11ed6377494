#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "perftx/config_space.hpp"

namespace perftx {

enum class ScenarioFamily { Demo1d, Surface2d };

/// Controls how the source response is derived from the target response.
/// noise_level is in percent; the generator adds a seeded smooth perturbation
/// with standard deviation (noise_level / 100) * kNoisePercentGain times the
/// target's standard deviation, so the levels 0..30 span source/target
/// correlations from 1.0 down to roughly 0.25.
struct ScenarioSpec {
    ScenarioFamily family = ScenarioFamily::Demo1d;
    double noise_level = 0.0;      // percent units, >= 0
    double miscalibration = 0.0;   // multiplicative distortion, > -1 (e.g. 0.30)
    bool misleading = false;       // source becomes the constant mean of the target
    std::uint64_t seed = 0;

    void validate() const;
};

/// Amplitude gain applied to noise_level percent (see ScenarioSpec).
inline constexpr double kNoisePercentGain = 12.0;

/// A deterministic source/target response pair over a finite space, with all
/// values precomputed on the grid. Immutable and thread-safe.
class ResponsePair {
public:
    const ConfigurationSpace& space() const { return space_; }
    const ScenarioSpec& spec() const { return spec_; }

    double target_at(const Configuration& c) const;
    double source_at(const Configuration& c) const;
    double target_at_ordinal(std::uint64_t ordinal) const;
    double source_at_ordinal(std::uint64_t ordinal) const;

    const std::vector<double>& target_table() const { return target_; }
    const std::vector<double>& source_table() const { return source_; }

    /// Encoded inputs for the full grid, row i = configuration with ordinal i.
    const Eigen::MatrixXd& encoded_grid() const { return encoded_; }

    double target_minimum() const;

private:
    friend ResponsePair make_scenario(const ScenarioSpec& spec);
    ConfigurationSpace space_;
    ScenarioSpec spec_;
    Eigen::MatrixXd encoded_;
    std::vector<double> target_;
    std::vector<double> source_;
};

/// Builds the documented scenario families:
///
/// demo1d: one parameter with a 200-point grid over indices 0..199; with
/// u = index / 199 and x = 6 u, the target is t(x) = sin(x) + 0.3 x.
///
/// surface2d: two log-scale parameters (25 values in [5, 10000], 27 values in
/// [1, 10000], so 675 grid points); over encoded coordinates (u, v) the target
/// is t(u, v) = 15 + 70 s(10(u - 0.5)) + 40 exp(-8 (v - 0.75)^2) s(8(u - 0.3))
/// with s the logistic function: a low plateau rising to a high plateau with a
/// steep ridge along v = 0.75.
///
/// The source is (1 + miscalibration) * target plus a seeded smooth
/// perturbation realized with 32 random Fourier features, normalized to zero
/// mean and unit variance over the grid, scaled per ScenarioSpec. With
/// misleading = true the source is the constant grid mean of the target.
ResponsePair make_scenario(const ScenarioSpec& spec);

/// Pearson correlation of source vs target responses over the full grid.
/// Throws if either response has zero variance (e.g. a misleading constant
/// source).
double correlation(const ResponsePair& pair);

/// Same over n grid points sampled without replacement.
double correlation(const ResponsePair& pair, std::size_t n, std::uint64_t seed);

} // namespace perftx
