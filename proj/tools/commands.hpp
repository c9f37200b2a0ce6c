#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "l1af/pipeline.hpp"
#include "l1af/synth.hpp"

namespace l1af::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kVerifyFailed = 3 };

/// Thrown for bad flag values that the parser cannot catch on its own.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pipeline flags shared by detect and bench. Unset fields keep the value
/// from the config file (or the default).
struct ConfigOverrides {
    std::optional<std::filesystem::path> config_file;
    std::optional<std::vector<double>> gamma_grid;
    std::optional<std::size_t> lambda_grid_size;
    std::optional<std::size_t> cluster_window;
    std::optional<GramMode> gram_mode;
    bool stage1_only = false;
    bool no_debias = false;
};

/// defaults < config file < flags.
PipelineConfig resolve_config(const ConfigOverrides& overrides);

struct GenerateOptions {
    std::filesystem::path scenario;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> acquisition_s;
};

struct DetectOptions {
    std::filesystem::path trace;
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> plot;
    std::optional<double> bin_spacing;
    ConfigOverrides config;
};

/// Acquisition times from "start:stop:step" (inclusive) or a comma list.
std::vector<double> parse_sweep(const std::string& text);

struct BenchOptions {
    std::filesystem::path scenario;
    std::string sweep = "100:300:20";
    std::size_t seeds = 5;
    std::uint64_t base_seed = 1;
    std::optional<std::filesystem::path> out;
    ConfigOverrides config;
};

struct DetectionScore {
    std::size_t missed = 0;
    std::size_t spurious = 0;
};

/// A fault is missed when no event centroid lies within `window` samples of
/// it; an event is spurious when its centroid is farther than `window` from
/// every fault.
DetectionScore score_events(const std::vector<Fault>& faults,
                            const std::vector<FaultEvent>& events, double window);

struct BenchRow {
    double acquisition_s = 0.0;
    double pulses = 0.0;
    double elapsed_ms = 0.0;
    double missed = 0.0;
    double spurious = 0.0;
    double median_missed = 0.0;
    double median_spurious = 0.0;
    std::size_t failed_runs = 0;
};

/// Seeds base_seed .. base_seed + seeds - 1 at every acquisition time.
/// Failures are counted per point and excluded from the averages.
std::vector<BenchRow> run_bench(const FiberScenario& scenario,
                                const std::vector<double>& acquisitions, std::size_t seeds,
                                std::uint64_t base_seed, const PipelineConfig& config);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

using GramFunction = std::function<double(const StandardizedDesign&, Index, Index)>;

struct VerifyCheck {
    std::string name;
    std::size_t n = 0;
    double value = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct VerifyOptions {
    std::vector<std::size_t> sizes{4, 37, 128};
    std::uint64_t seed = 1;
    /// Gram kernel under test; replaced in negative-control tests.
    GramFunction gram = gram_entry;
};

std::vector<VerifyCheck> run_verify(const VerifyOptions& options);

int cmd_generate(const GenerateOptions& options, std::ostream& out, std::ostream& err);
int cmd_detect(const DetectOptions& options, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace l1af::cli
