#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "l1af/trace.hpp"

namespace l1af {

/// A non-reflective loss event: position (sample index) and loss in dB.
struct Fault {
    Index position = 0;
    double loss_db = 0.0;
};

struct FiberScenario {
    std::size_t length_samples = 12'000;
    double slope_db_per_km = 0.2;
    std::vector<Fault> faults;
    double bin_spacing_m = 1.0;
    double pulse_rate_hz = 8000.0;
    double acquisition_s = 200.0;
    double p0 = 0.0;
    /// Dark counts per bin per pulse.
    double noise_floor_counts = 5e-4;
    /// Height of the trace end above the noise floor at the 100 s reference
    /// acquisition, in dB. Sets the detection scale.
    double end_margin_db = 6.0;

    /// Throws DataError when positions are not strictly increasing inside
    /// (0, N) or a loss is not positive.
    void validate() const;

    double pulses() const noexcept { return pulse_rate_hz * acquisition_s; }
};

/// The 12 km, 8 kHz test-bench replica: mixed 0.1-1 dB faults with a run of
/// five 0.1-0.3 dB faults inside a 600-sample stretch between 6000 and 8000.
FiberScenario testbench_scenario();

/**
 * xoshiro256** 1.0 (Blackman & Vigna), seeded by expanding a 64-bit seed
 * through splitmix64. Uniform doubles take the top 53 bits.
 */
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform on [0, 1).
    double uniform();
    /// Standard normal by Box-Muller (cosine branch); consumes two uniforms.
    double normal();

private:
    std::uint64_t s_[4];
};

/// Mean at or above which the Poisson sampler uses the rounded normal
/// approximation instead of inversion.
inline constexpr double kPoissonNormalSwitch = 30.0;

/// Draws a Poisson count: sequential inversion below the switch point,
/// max(0, floor(mean + sqrt(mean) * z + 0.5)) at or above it.
std::uint64_t sample_poisson(Xoshiro256& rng, double mean);

std::vector<double> ideal_profile(const FiberScenario& scenario);

/// Detection scale (counts per pulse per linear power unit) putting the
/// profile end `end_margin_db` above the noise floor.
double detection_scale(const FiberScenario& scenario, const std::vector<double>& ideal);

struct SyntheticTrace {
    Trace trace;
    std::vector<double> expected_counts;
    std::vector<std::uint64_t> counts;
    std::size_t clamped_bins = 0;
};

/// Net counts below this (in counts) are clamped before taking logs.
inline constexpr double kCountFloorClamp = 0.5;

/// Converts an ideal dB profile into a Poisson-noisy trace.
SyntheticTrace poissonize(const std::vector<double>& ideal, const FiberScenario& scenario,
                          std::uint64_t seed);

/// ideal_profile followed by poissonize.
SyntheticTrace generate_trace(const FiberScenario& scenario, std::uint64_t seed);

}  // namespace l1af
