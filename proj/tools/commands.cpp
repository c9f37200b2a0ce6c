#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "l1af/io.hpp"
#include "l1af/oracle.hpp"

namespace l1af::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    return f;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double parse_number(const std::string& s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw UsageError("not a number: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    }
}

}  // namespace

PipelineConfig resolve_config(const ConfigOverrides& o) {
    PipelineConfig config;
    if (o.config_file) {
        json j;
        try {
            j = json::parse(slurp(*o.config_file));
        } catch (const json::exception& e) {
            throw DataError("malformed config " + o.config_file->string() + ": " + e.what());
        }
        apply_config_json(j, config);
    }
    if (o.gamma_grid) config.gamma_grid = *o.gamma_grid;
    if (o.lambda_grid_size) config.solver.lambda_grid_size = *o.lambda_grid_size;
    if (o.cluster_window) config.cluster_window = *o.cluster_window;
    if (o.gram_mode) config.gram_mode = *o.gram_mode;
    if (o.stage1_only) config.stage1_only = true;
    if (o.no_debias) config.debias = false;
    config.validate();
    return config;
}

std::vector<double> parse_sweep(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw UsageError("sweep must be start:stop:step");
        const double start = parse_number(parts[0]);
        const double stop = parse_number(parts[1]);
        const double step = parse_number(parts[2]);
        if (!(step > 0) || !(start > 0) || stop < start) {
            throw UsageError("sweep needs 0 < start <= stop and step > 0");
        }
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    } else {
        for (const auto& p : split(text, ',')) {
            const double v = parse_number(p);
            if (!(v > 0)) throw UsageError("acquisition times must be positive");
            out.push_back(v);
        }
    }
    if (out.empty()) throw UsageError("empty sweep");
    return out;
}

DetectionScore score_events(const std::vector<Fault>& faults,
                            const std::vector<FaultEvent>& events, double window) {
    DetectionScore s;
    for (const auto& f : faults) {
        const bool hit = std::any_of(events.begin(), events.end(), [&](const FaultEvent& e) {
            return std::abs(e.position - static_cast<double>(f.position)) <= window;
        });
        if (!hit) ++s.missed;
    }
    for (const auto& e : events) {
        const bool near = std::any_of(faults.begin(), faults.end(), [&](const Fault& f) {
            return std::abs(e.position - static_cast<double>(f.position)) <= window;
        });
        if (!near) ++s.spurious;
    }
    return s;
}

std::vector<BenchRow> run_bench(const FiberScenario& scenario,
                                const std::vector<double>& acquisitions, std::size_t seeds,
                                std::uint64_t base_seed, const PipelineConfig& config) {
    std::vector<BenchRow> rows;
    const double window = static_cast<double>(config.cluster_window);
    for (const double acq : acquisitions) {
        FiberScenario sc = scenario;
        sc.acquisition_s = acq;
        BenchRow row;
        row.acquisition_s = acq;
        row.pulses = sc.pulses();
        std::vector<double> missed, spurious, elapsed;
        for (std::size_t s = 0; s < seeds; ++s) {
            try {
                const auto synthetic = generate_trace(sc, base_seed + s);
                const auto t0 = std::chrono::steady_clock::now();
                const auto det = detect(synthetic.trace, config);
                elapsed.push_back(std::chrono::duration<double, std::milli>(
                                      std::chrono::steady_clock::now() - t0)
                                      .count());
                const auto score = score_events(sc.faults, det.events, window);
                missed.push_back(static_cast<double>(score.missed));
                spurious.push_back(static_cast<double>(score.spurious));
            } catch (const std::exception&) {
                ++row.failed_runs;
            }
        }
        auto mean = [](const std::vector<double>& v) {
            if (v.empty()) return std::nan("");
            double sum = 0.0;
            for (double x : v) sum += x;
            return sum / static_cast<double>(v.size());
        };
        row.elapsed_ms = mean(elapsed);
        row.missed = mean(missed);
        row.spurious = mean(spurious);
        row.median_missed = median(missed);
        row.median_spurious = median(spurious);
        rows.push_back(row);
    }
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "acquisition_s,pulses,elapsed_ms,missed,spurious,median_missed,median_spurious,"
           "failed_runs\n";
    for (const auto& r : rows) {
        out << format_double(r.acquisition_s) << ',' << format_double(r.pulses) << ','
            << format_double(std::round(r.elapsed_ms * 1000.0) / 1000.0) << ','
            << format_double(r.missed) << ',' << format_double(r.spurious) << ','
            << format_double(r.median_missed) << ',' << format_double(r.median_spurious) << ','
            << r.failed_runs << '\n';
    }
}

std::vector<VerifyCheck> run_verify(const VerifyOptions& options) {
    std::vector<VerifyCheck> checks;
    auto add = [&](std::string name, std::size_t n, double value, double tol) {
        checks.push_back({std::move(name), n, value, tol, std::isfinite(value) && value <= tol});
    };
    for (const std::size_t n : options.sizes) {
        if (n < 3 || n > oracle::kMaxDenseSize) {
            throw UsageError("verify sizes must lie in [3, " +
                             std::to_string(oracle::kMaxDenseSize) + "]");
        }
        Xoshiro256 rng(options.seed * 1000003u + n);
        std::vector<double> y(n);
        for (std::size_t k = 0; k < n; ++k) {
            y[k] = -0.002 * static_cast<double>(k) + 0.05 * rng.normal();
            if (n >= 6 && k >= n / 3) y[k] -= 0.5;
            if (n >= 6 && k >= 2 * n / 3) y[k] -= 0.3;
        }
        const Trace trace(y);
        const auto design = standardize(trace);
        const auto dense = oracle::materialize(trace);

        double col_err = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                col_err = std::max(col_err, std::abs(dense.matrix(static_cast<Eigen::Index>(k),
                                                                  static_cast<Eigen::Index>(j)) -
                                                     design.column_at(j, k)));
            }
        }
        add("design_columns", n, col_err, 1e-12);

        const Eigen::MatrixXd brute = oracle::brute_gram(dense);
        double gram_err = 0.0;
        double asym = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double g = options.gram(design, i, j);
                gram_err = std::max(gram_err, std::abs(g - brute(static_cast<Eigen::Index>(i),
                                                                 static_cast<Eigen::Index>(j))));
                asym = std::max(asym, std::abs(g - options.gram(design, j, i)));
            }
        }
        add("gram_entry", n, gram_err, 1e-9);
        add("gram_symmetry", n, asym, 1e-12);

        const auto fast = fast_y_inner_products(design);
        const Eigen::VectorXd xy = oracle::brute_xy(dense);
        double xy_err = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            xy_err = std::max(xy_err, std::abs(fast[j] - xy[static_cast<Eigen::Index>(j)]));
        }
        add("fast_y_inner_products", n, xy_err, 1e-9);

        GramProvider gram(design, GramMode::OnDemand);
        const double lmax = lambda_max(gram);
        SolverConfig tight;
        tight.tol = 1e-10;
        tight.max_sweeps = 200'000;

        const auto at_max = coordinate_descent(gram, PenaltySchedule::type1(lmax), {}, tight);
        add("lambda_max_empty_support", n, static_cast<double>(at_max.active_set.size()), 0.0);

        const auto schedule = PenaltySchedule::type1(0.2 * lmax);
        const auto alphas = schedule.alphas(n);
        const auto fit = coordinate_descent(gram, schedule, {}, tight);
        const double scale = std::max(1.0, xy.cwiseAbs().maxCoeff());
        add("kkt_relative", n, kkt_violation(design, fit.beta, alphas) / scale, 1e-6);

        const auto ista = oracle::ista_solve(dense, alphas);
        const double cd_obj = objective_value(design, fit.beta, alphas);
        add("ista_objective_relative", n,
            std::abs(cd_obj - ista.objective) / std::max(1e-300, std::abs(ista.objective)), 1e-8);
    }
    return checks;
}

int cmd_generate(const GenerateOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto file = read_scenario(o.scenario);
        if (o.acquisition_s) {
            file.scenario.acquisition_s = *o.acquisition_s;
            file.scenario.validate();
        }
        const std::uint64_t seed = o.seed.value_or(file.seed.value_or(1));
        const auto synthetic = generate_trace(file.scenario, seed);
        std::ostream* summary = &out;
        if (o.out) {
            auto f = open_out(*o.out);
            write_trace_csv(f, synthetic.trace);
            if (!f) throw DataError("write failed: " + o.out->string());
        } else {
            write_trace_csv(out, synthetic.trace);
            summary = &err;
        }
        *summary << "N=" << synthetic.trace.size() << " faults=" << file.scenario.faults.size()
                 << " acquisition_s=" << format_double(file.scenario.acquisition_s)
                 << " pulses=" << format_double(file.scenario.pulses()) << " seed=" << seed
                 << " clamped_bins=" << synthetic.clamped_bins << '\n';
        return kOk;
    });
}

int cmd_detect(const DetectOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto config = resolve_config(o.config);
        const std::string text = slurp(o.trace);
        const Trace trace = parse_trace(text, o.bin_spacing, o.trace.filename().string());
        const auto det = detect(trace, config);
        const auto report = make_report(det, config, content_digest(text));
        const std::string body = to_json(report).dump(2) + "\n";
        if (o.out) {
            auto f = open_out(*o.out);
            f << body;
        } else {
            out << body;
        }
        if (o.plot) {
            auto f = open_out(*o.plot);
            const auto& fitted = config.debias ? det.debiased.fitted : det.fit.fitted;
            f << "position,raw,fitted\n";
            for (std::size_t k = 0; k < trace.size(); ++k) {
                f << k << ',' << format_double(trace.samples()[k]) << ','
                  << format_double(fitted[k]) << '\n';
            }
        }
        for (const auto& w : report.warnings) err << "warning: " << w << '\n';
        if (o.out) {
            err << det.events.size() << " events, " << std::fixed << std::setprecision(0)
                << report.timings.total_ms << " ms\n";
        }
        return kOk;
    });
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (o.seeds == 0) throw UsageError("--seeds must be positive");
        const auto acquisitions = parse_sweep(o.sweep);
        const auto config = resolve_config(o.config);
        const auto file = read_scenario(o.scenario);
        const auto rows = run_bench(file.scenario, acquisitions, o.seeds, o.base_seed, config);
        if (o.out) {
            auto f = open_out(*o.out);
            write_bench_csv(f, rows);
        } else {
            write_bench_csv(out, rows);
        }
        std::size_t failed = 0;
        for (const auto& r : rows) failed += r.failed_runs;
        if (failed > 0) err << "warning: " << failed << " runs failed\n";
        return kOk;
    });
}

int cmd_verify(const VerifyOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto checks = run_verify(o);
        bool ok = true;
        for (const auto& c : checks) {
            ok = ok && c.passed;
            out << (c.passed ? "PASS " : "FAIL ") << c.name << " N=" << c.n
                << " value=" << std::scientific << std::setprecision(3) << c.value
                << " tol=" << c.tolerance << std::defaultfloat << '\n';
        }
        out << (ok ? "verify: all checks passed\n" : "verify: FAILED\n");
        return ok ? kOk : kVerifyFailed;
    });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Level-shift detection for piecewise-linear traces"};
    app.require_subcommand(1);

    ConfigOverrides overrides;
    std::string gamma_text;
    std::string gram_mode_text;
    std::size_t lambda_grid_size = 0;
    std::size_t cluster_window = 0;
    std::string config_file;
    auto add_pipeline_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file");
        sub->add_option("--gamma-grid", gamma_text, "Comma-separated gamma values");
        sub->add_option("--lambda-grid-size", lambda_grid_size, "Lambda grid points (default 100)");
        sub->add_option("--cluster-window", cluster_window, "Cluster window in samples (default 6)");
        sub->add_option("--gram-mode", gram_mode_text, "cached or ondemand")
            ->check(CLI::IsMember({"cached", "ondemand"}));
        sub->add_flag("--stage1-only", overrides.stage1_only, "Report the plain LASSO selection");
        sub->add_flag("--no-debias", overrides.no_debias, "Skip the least-squares refit");
    };

    GenerateOptions gen;
    std::string gen_scenario, gen_out;
    std::uint64_t gen_seed = 0;
    double gen_acq = 0.0;
    auto* generate = app.add_subcommand("generate", "Write a synthetic trace CSV");
    generate->add_option("scenario", gen_scenario, "Scenario JSON")->required();
    generate->add_option("--out,-o", gen_out, "Output CSV (stdout if omitted)");
    auto* gen_seed_opt = generate->add_option("--seed", gen_seed, "RNG seed");
    auto* gen_acq_opt = generate->add_option("--acquisition", gen_acq, "Acquisition time in s");

    DetectOptions det;
    std::string det_trace, det_out, det_plot;
    double det_spacing = 0.0;
    auto* detect_cmd = app.add_subcommand("detect", "Detect level shifts in a trace");
    detect_cmd->add_option("trace", det_trace, "Trace CSV or JSON array")->required();
    detect_cmd->add_option("--out,-o", det_out, "Report JSON (stdout if omitted)");
    detect_cmd->add_option("--plot", det_plot, "Plot data CSV (position,raw,fitted)");
    auto* spacing_opt = detect_cmd->add_option("--bin-spacing", det_spacing, "Metres per sample");
    add_pipeline_flags(detect_cmd);

    BenchOptions bench;
    std::string bench_scenario, bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "Sweep acquisition time over seeds");
    bench_cmd->add_option("scenario", bench_scenario, "Scenario JSON")->required();
    bench_cmd->add_option("--acquisition", bench.sweep, "start:stop:step or a,b,c (s)");
    bench_cmd->add_option("--seeds", bench.seeds, "Seeds per point");
    bench_cmd->add_option("--seed", bench.base_seed, "First seed");
    bench_cmd->add_option("--out,-o", bench_out, "Output CSV (stdout if omitted)");
    add_pipeline_flags(bench_cmd);

    VerifyOptions verify;
    std::string sizes_text;
    auto* verify_cmd = app.add_subcommand("verify", "Check kernels and solver against oracles");
    verify_cmd->add_option("--sizes", sizes_text, "Comma-separated sizes (3..200)");
    verify_cmd->add_option("--seed", verify.seed, "RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsage;
    }

    try {
        if (!config_file.empty()) overrides.config_file = config_file;
        if (!gamma_text.empty()) {
            std::vector<double> g;
            for (const auto& p : split(gamma_text, ',')) g.push_back(parse_number(p));
            overrides.gamma_grid = g;
        }
        if (lambda_grid_size) overrides.lambda_grid_size = lambda_grid_size;
        if (cluster_window) overrides.cluster_window = cluster_window;
        if (!gram_mode_text.empty()) {
            overrides.gram_mode = gram_mode_text == "cached" ? GramMode::Cached : GramMode::OnDemand;
        }
        if (!sizes_text.empty()) {
            verify.sizes.clear();
            for (const auto& p : split(sizes_text, ',')) {
                const double v = parse_number(p);
                if (v != std::floor(v) || v < 0) throw UsageError("bad size '" + p + "'");
                verify.sizes.push_back(static_cast<std::size_t>(v));
            }
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    if (generate->parsed()) {
        gen.scenario = gen_scenario;
        if (!gen_out.empty()) gen.out = gen_out;
        if (gen_seed_opt->count()) gen.seed = gen_seed;
        if (gen_acq_opt->count()) gen.acquisition_s = gen_acq;
        return cmd_generate(gen, out, err);
    }
    if (detect_cmd->parsed()) {
        det.trace = det_trace;
        if (!det_out.empty()) det.out = det_out;
        if (!det_plot.empty()) det.plot = det_plot;
        if (spacing_opt->count()) det.bin_spacing = det_spacing;
        det.config = overrides;
        return cmd_detect(det, out, err);
    }
    if (bench_cmd->parsed()) {
        bench.scenario = bench_scenario;
        if (!bench_out.empty()) bench.out = bench_out;
        bench.config = overrides;
        return cmd_bench(bench, out, err);
    }
    return cmd_verify(verify, out, err);
}

}  // namespace l1af::cli
