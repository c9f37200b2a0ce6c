#include "l1af/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace l1af {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, std::size_t line) {
    token = trim(token);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
        throw DataError("line " + std::to_string(line) + ": cannot parse number '" +
                        std::string(token) + "'");
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

Trace parse_trace(std::string_view text, std::optional<double> bin_spacing, std::string label) {
    const std::string_view body = trim(text);
    if (!body.empty() && body.front() == '[') {
        std::vector<double> values;
        try {
            values = json::parse(body).get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw DataError(std::string("malformed JSON trace: ") + e.what());
        }
        return Trace(std::move(values), bin_spacing.value_or(1.0), std::move(label));
    }

    std::optional<double> spacing_meta;
    std::vector<std::pair<long long, double>> indexed;
    std::vector<double> plain;
    bool header_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto key = line.find("bin_spacing_m=");
            if (key != std::string_view::npos) {
                spacing_meta = parse_number(line.substr(key + 14), line_no);
            }
            continue;
        }
        const bool wordy = std::isalpha(static_cast<unsigned char>(line.front())) &&
                           line != "nan" && line != "inf";
        if (!header_seen && indexed.empty() && plain.empty() && wordy) {
            if (line == "index,value") {
                header_seen = true;
            } else if (line != "value") {
                throw DataError("unexpected trace header '" + std::string(line) + "'");
            }
            continue;
        }
        const auto comma = line.find(',');
        if (header_seen) {
            if (comma == std::string_view::npos) {
                throw DataError("line " + std::to_string(line_no) + ": expected index,value");
            }
            const double idx = parse_number(line.substr(0, comma), line_no);
            if (idx < 0 || idx != static_cast<double>(static_cast<long long>(idx))) {
                throw DataError("line " + std::to_string(line_no) + ": bad index");
            }
            indexed.emplace_back(static_cast<long long>(idx),
                                 parse_number(line.substr(comma + 1), line_no));
        } else {
            if (comma != std::string_view::npos) {
                throw DataError("line " + std::to_string(line_no) +
                                ": multi-column rows need an index,value header");
            }
            plain.push_back(parse_number(line, line_no));
        }
    }

    std::vector<double> values;
    if (header_seen) {
        std::sort(indexed.begin(), indexed.end());
        values.reserve(indexed.size());
        for (std::size_t k = 0; k < indexed.size(); ++k) {
            if (indexed[k].first != static_cast<long long>(k)) {
                throw DataError("trace indices must cover 0..N-1 exactly once");
            }
            values.push_back(indexed[k].second);
        }
    } else {
        values = std::move(plain);
    }
    return Trace(std::move(values), bin_spacing.value_or(spacing_meta.value_or(1.0)),
                 std::move(label));
}

Trace read_trace(const std::filesystem::path& path, std::optional<double> bin_spacing) {
    return parse_trace(read_file(path), bin_spacing, path.filename().string());
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    out << "index,value\n";
    const auto& y = trace.samples();
    for (std::size_t k = 0; k < y.size(); ++k) out << k << ',' << format_double(y[k]) << '\n';
}

ScenarioFile parse_scenario(const json& j) {
    ScenarioFile out;
    auto& s = out.scenario;
    try {
        if (!j.is_object()) throw DataError("scenario must be a JSON object");
        s.length_samples = j.at("length_samples").get<std::size_t>();
        s.slope_db_per_km = j.value("slope_db_per_km", s.slope_db_per_km);
        s.faults.clear();
        for (const auto& f : j.value("faults", json::array())) {
            if (!f.is_array() || f.size() != 2) throw DataError("faults must be [pos, loss_db] pairs");
            s.faults.push_back({f[0].get<Index>(), f[1].get<double>()});
        }
        s.bin_spacing_m = j.value("bin_spacing_m", s.bin_spacing_m);
        s.pulse_rate_hz = j.value("pulse_rate_hz", s.pulse_rate_hz);
        s.acquisition_s = j.value("acquisition_s", s.acquisition_s);
        s.p0 = j.value("p0", s.p0);
        s.noise_floor_counts = j.value("noise_floor_counts", s.noise_floor_counts);
        s.end_margin_db = j.value("end_margin_db", s.end_margin_db);
        if (j.contains("seed")) out.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed scenario: ") + e.what());
    }
    s.validate();
    return out;
}

ScenarioFile read_scenario(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError("malformed scenario JSON in " + path.string() + ": " + e.what());
    }
    return parse_scenario(j);
}

json scenario_to_json(const FiberScenario& s, std::optional<std::uint64_t> seed) {
    json faults = json::array();
    for (const auto& f : s.faults) faults.push_back({f.position, f.loss_db});
    json j = {
        {"length_samples", s.length_samples},
        {"slope_db_per_km", s.slope_db_per_km},
        {"faults", faults},
        {"bin_spacing_m", s.bin_spacing_m},
        {"pulse_rate_hz", s.pulse_rate_hz},
        {"acquisition_s", s.acquisition_s},
        {"p0", s.p0},
        {"noise_floor_counts", s.noise_floor_counts},
        {"end_margin_db", s.end_margin_db},
    };
    if (seed) j["seed"] = *seed;
    return j;
}

void apply_config_json(const json& j, PipelineConfig& c) {
    try {
        if (j.contains("gamma_grid")) c.gamma_grid = j.at("gamma_grid").get<std::vector<double>>();
        c.cluster_window = j.value("cluster_window", c.cluster_window);
        c.debias = j.value("debias", c.debias);
        c.stage1_only = j.value("stage1_only", c.stage1_only);
        c.score_debiased = j.value("score_debiased", c.score_debiased);
        c.max_cached_columns = j.value("max_cached_columns", c.max_cached_columns);
        if (j.contains("gram_mode")) {
            const auto mode = j.at("gram_mode").get<std::string>();
            if (mode == "cached") c.gram_mode = GramMode::Cached;
            else if (mode == "ondemand") c.gram_mode = GramMode::OnDemand;
            else throw DataError("gram_mode must be cached or ondemand");
        }
        auto& s = c.solver;
        s.tol = j.value("tol", s.tol);
        s.max_sweeps = j.value("max_sweeps", s.max_sweeps);
        s.lambda_grid_size = j.value("lambda_grid_size", s.lambda_grid_size);
        s.lambda_min_ratio = j.value("lambda_min_ratio", s.lambda_min_ratio);
        s.warm_start = j.value("warm_start", s.warm_start);
        if (j.contains("kernel")) {
            const auto kernel = j.at("kernel").get<std::string>();
            if (kernel == "structured") s.kernel = CorrelationKernel::Structured;
            else if (kernel == "gram") s.kernel = CorrelationKernel::GramEntries;
            else throw DataError("kernel must be structured or gram");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed config: ") + e.what());
    }
}

json config_to_json(const PipelineConfig& c) {
    return {
        {"gamma_grid", c.gamma_grid},
        {"cluster_window", c.cluster_window},
        {"debias", c.debias},
        {"stage1_only", c.stage1_only},
        {"score_debiased", c.score_debiased},
        {"gram_mode", c.gram_mode == GramMode::Cached ? "cached" : "ondemand"},
        {"max_cached_columns", c.max_cached_columns},
        {"tol", c.solver.tol},
        {"max_sweeps", c.solver.max_sweeps},
        {"lambda_grid_size", c.solver.lambda_grid_size},
        {"lambda_min_ratio", c.solver.lambda_min_ratio},
        {"warm_start", c.solver.warm_start},
        {"kernel", c.solver.kernel == CorrelationKernel::Structured ? "structured" : "gram"},
    };
}

namespace {

// BIC is -inf for a perfect fit, which JSON cannot carry; null stands in.
json bic_json(double bic) { return std::isfinite(bic) ? json(bic) : json(nullptr); }

double bic_value(const json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

json scores_json(const std::vector<PathScore>& scores) {
    json out = json::array();
    for (const auto& s : scores) {
        json row = {
            {"lambda", s.lambda},
            {"bic", bic_json(s.score.bic)},
            {"rss", s.score.rss},
            {"df", s.score.df},
            {"support", s.support_size},
            {"sweeps", s.iterations},
            {"converged", s.converged},
        };
        if (s.gamma) row["gamma"] = *s.gamma;
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<PathScore> scores_from_json(const json& j) {
    std::vector<PathScore> out;
    for (const auto& row : j) {
        PathScore s;
        s.lambda = row.at("lambda").get<double>();
        s.score.bic = bic_value(row.at("bic"));
        s.score.rss = row.at("rss").get<double>();
        s.score.df = row.at("df").get<std::size_t>();
        s.support_size = row.at("support").get<std::size_t>();
        s.iterations = row.at("sweeps").get<int>();
        s.converged = row.at("converged").get<bool>();
        if (row.contains("gamma")) s.gamma = row.at("gamma").get<double>();
        out.push_back(s);
    }
    return out;
}

}  // namespace

json events_to_json(const std::vector<FaultEvent>& events) {
    json out = json::array();
    for (const auto& e : events) {
        out.push_back({
            {"position", e.position},
            {"position_m", e.position_m},
            {"magnitude_db", e.magnitude_db},
            {"members", e.members},
        });
    }
    return out;
}

RunReport make_report(const Detection& detection, const PipelineConfig& config,
                      std::string input_digest) {
    RunReport r;
    r.events = detection.events;
    r.timings = detection.diagnostics.timings;
    r.config = config_to_json(config);
    r.input_digest = std::move(input_digest);
    r.lambda_max = detection.diagnostics.lambda_max;
    r.slope_db_per_sample = detection.debiased.slope;
    r.intercept_db = detection.debiased.intercept;
    r.stage1_scores = detection.diagnostics.stage1_scores;
    r.stage1_best = detection.diagnostics.stage1_best;
    r.stage2_scores = detection.diagnostics.stage2_scores;
    r.stage2_best = detection.diagnostics.stage2_best;
    r.warnings = detection.diagnostics.warnings;
    return r;
}

json to_json(const RunReport& r) {
    return {
        {"events", events_to_json(r.events)},
        {"timings_ms",
         {
             {"standardize", r.timings.standardize_ms},
             {"stage1", r.timings.stage1_ms},
             {"stage2", r.timings.stage2_ms},
             {"debias", r.timings.debias_ms},
             {"cluster", r.timings.cluster_ms},
             {"total", r.timings.total_ms},
         }},
        {"config", r.config},
        {"input_digest", r.input_digest},
        {"diagnostics",
         {
             {"lambda_max", r.lambda_max},
             {"slope_db_per_sample", r.slope_db_per_sample},
             {"intercept_db", r.intercept_db},
             {"stage1_bic", scores_json(r.stage1_scores)},
             {"stage1_best", r.stage1_best},
             {"stage2_bic", scores_json(r.stage2_scores)},
             {"stage2_best", r.stage2_best},
             {"warnings", r.warnings},
         }},
    };
}

RunReport report_from_json(const json& j) {
    RunReport r;
    try {
        for (const auto& e : j.at("events")) {
            FaultEvent ev;
            ev.position = e.at("position").get<double>();
            ev.position_m = e.at("position_m").get<double>();
            ev.magnitude_db = e.at("magnitude_db").get<double>();
            ev.members = e.at("members").get<std::vector<Index>>();
            r.events.push_back(std::move(ev));
        }
        const auto& t = j.at("timings_ms");
        r.timings.standardize_ms = t.at("standardize").get<double>();
        r.timings.stage1_ms = t.at("stage1").get<double>();
        r.timings.stage2_ms = t.at("stage2").get<double>();
        r.timings.debias_ms = t.at("debias").get<double>();
        r.timings.cluster_ms = t.at("cluster").get<double>();
        r.timings.total_ms = t.at("total").get<double>();
        r.config = j.at("config");
        r.input_digest = j.at("input_digest").get<std::string>();
        const auto& d = j.at("diagnostics");
        r.lambda_max = d.at("lambda_max").get<double>();
        r.slope_db_per_sample = d.at("slope_db_per_sample").get<double>();
        r.intercept_db = d.at("intercept_db").get<double>();
        r.stage1_scores = scores_from_json(d.at("stage1_bic"));
        r.stage1_best = d.at("stage1_best").get<std::size_t>();
        r.stage2_scores = scores_from_json(d.at("stage2_bic"));
        r.stage2_best = d.at("stage2_best").get<std::size_t>();
        r.warnings = d.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    return r;
}

std::string content_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace l1af
