#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "l1af/pipeline.hpp"
#include "l1af/synth.hpp"
#include "l1af/trace.hpp"

namespace l1af {

/**
 * Parses trace text. Accepted layouts:
 *   - CSV with an `index,value` header (rows may appear in any index order
 *     but must cover 0..N-1 exactly once);
 *   - one value per line, no header;
 *   - a JSON array of numbers.
 * Lines starting with '#' are comments; `# bin_spacing_m=<x>` sets the
 * spacing when `bin_spacing` is not given.
 */
Trace parse_trace(std::string_view text, std::optional<double> bin_spacing = std::nullopt,
                  std::string label = {});
Trace read_trace(const std::filesystem::path& path,
                 std::optional<double> bin_spacing = std::nullopt);

/// `index,value` CSV with values printed in shortest round-trip form.
void write_trace_csv(std::ostream& out, const Trace& trace);

struct ScenarioFile {
    FiberScenario scenario;
    std::optional<std::uint64_t> seed;
};

ScenarioFile parse_scenario(const nlohmann::json& j);
ScenarioFile read_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const FiberScenario& scenario,
                                std::optional<std::uint64_t> seed = std::nullopt);

/// Overlays the keys present in `j` onto `config`.
void apply_config_json(const nlohmann::json& j, PipelineConfig& config);
nlohmann::json config_to_json(const PipelineConfig& config);

struct RunReport {
    std::vector<FaultEvent> events;
    StageTimings timings;
    nlohmann::json config;
    std::string input_digest;
    double lambda_max = 0.0;
    double slope_db_per_sample = 0.0;
    double intercept_db = 0.0;
    std::vector<PathScore> stage1_scores;
    std::size_t stage1_best = 0;
    std::vector<PathScore> stage2_scores;
    std::size_t stage2_best = 0;
    std::vector<std::string> warnings;
};

RunReport make_report(const Detection& detection, const PipelineConfig& config,
                      std::string input_digest);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);

nlohmann::json events_to_json(const std::vector<FaultEvent>& events);

/// FNV-1a 64-bit digest, lowercase hex.
std::string content_digest(std::string_view bytes);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace l1af
