#include "l1af/synth.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace l1af {

void FiberScenario::validate() const {
    if (length_samples < 3) throw DataError("scenario needs at least 3 samples");
    if (!(bin_spacing_m > 0.0)) throw DataError("bin spacing must be positive");
    if (!(pulse_rate_hz > 0.0)) throw DataError("pulse rate must be positive");
    if (!(acquisition_s > 0.0)) throw DataError("acquisition time must be positive");
    if (!(noise_floor_counts >= 0.0)) throw DataError("noise floor must be >= 0");
    Index previous = 0;
    for (const auto& f : faults) {
        if (f.position == 0 || f.position >= length_samples) {
            throw DataError("fault position " + std::to_string(f.position) +
                            " outside (0, N)");
        }
        if (f.position <= previous) throw DataError("fault positions must strictly increase");
        if (!(f.loss_db > 0.0)) throw DataError("fault losses must be positive");
        previous = f.position;
    }
}

FiberScenario testbench_scenario() {
    FiberScenario s;
    s.faults = {
        {1500, 0.5}, {3500, 1.0}, {5000, 0.3},
        {6500, 0.2}, {6600, 0.1}, {6700, 0.3}, {6800, 0.15}, {6900, 0.1},
        {7400, 1.0}, {9500, 0.6},
    };
    return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Xoshiro256::next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t sample_poisson(Xoshiro256& rng, double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean >= kPoissonNormalSwitch) {
        const double x = std::floor(mean + std::sqrt(mean) * rng.normal() + 0.5);
        return x <= 0.0 ? 0 : static_cast<std::uint64_t>(x);
    }
    const double u = rng.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    // The tail beyond 1000 is below double resolution for mean < 30.
    while (u > cdf && k < 1000) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

std::vector<double> ideal_profile(const FiberScenario& scenario) {
    scenario.validate();
    std::vector<double> out(scenario.length_samples);
    double loss = 0.0;
    std::size_t next_fault = 0;
    for (Index k = 0; k < out.size(); ++k) {
        while (next_fault < scenario.faults.size() &&
               scenario.faults[next_fault].position <= k) {
            loss += scenario.faults[next_fault].loss_db;
            ++next_fault;
        }
        const double km = static_cast<double>(k) * scenario.bin_spacing_m / 1000.0;
        out[k] = scenario.p0 - scenario.slope_db_per_km * km - loss;
    }
    return out;
}

double detection_scale(const FiberScenario& scenario, const std::vector<double>& ideal) {
    const double end_linear = std::pow(10.0, ideal.back() / 10.0);
    const double floor = scenario.noise_floor_counts > 0.0 ? scenario.noise_floor_counts : 1e-4;
    return floor * std::pow(10.0, scenario.end_margin_db / 10.0) / end_linear;
}

SyntheticTrace poissonize(const std::vector<double>& ideal, const FiberScenario& scenario,
                          std::uint64_t seed) {
    scenario.validate();
    if (ideal.size() < 3) throw DataError("ideal profile needs at least 3 samples");

    const double pulses = scenario.pulses();
    const double scale = detection_scale(scenario, ideal);
    const double dark = pulses * scenario.noise_floor_counts;
    Xoshiro256 rng(seed);

    std::vector<double> samples(ideal.size());
    SyntheticTrace out{Trace({0.0, 0.0, 0.0}), {}, {}, 0};
    out.expected_counts.resize(ideal.size());
    out.counts.resize(ideal.size());
    for (Index k = 0; k < ideal.size(); ++k) {
        const double mean = pulses * (std::pow(10.0, ideal[k] / 10.0) * scale +
                                      scenario.noise_floor_counts);
        const std::uint64_t c = sample_poisson(rng, mean);
        out.expected_counts[k] = mean;
        out.counts[k] = c;
        double net = static_cast<double>(c) - dark;
        if (net < kCountFloorClamp) {
            net = kCountFloorClamp;
            ++out.clamped_bins;
        }
        samples[k] = 10.0 * std::log10(net / (pulses * scale));
    }
    out.trace = Trace(std::move(samples), scenario.bin_spacing_m, "synthetic");
    return out;
}

SyntheticTrace generate_trace(const FiberScenario& scenario, std::uint64_t seed) {
    return poissonize(ideal_profile(scenario), scenario, seed);
}

}  // namespace l1af
