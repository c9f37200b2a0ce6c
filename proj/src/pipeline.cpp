#include "l1af/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace l1af {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<Index> penalized_support(const SparseCoefs& beta) {
    std::vector<Index> out;
    for (const auto& [j, b] : beta) {
        if (j != 0 && b != 0.0) out.push_back(j);
    }
    return out;
}

ModelScore score_fit(const FitResult& fit, const StandardizedDesign& design,
                     const PipelineConfig& config) {
    if (!config.score_debiased) return bic_score(fit, design);
    const auto refit = ols_debias(design, fit.active_set);
    return bic_from(refit.rss, refit.steps.size() + 1, design.n);
}

PathScore make_score(const FitResult& fit, const ModelScore& s) {
    return {fit.lambda, fit.gamma, s, fit.active_set.size(), fit.iterations, fit.converged};
}

std::size_t argmin_bic(const std::vector<PathScore>& scores) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < scores.size(); ++k) {
        if (scores[k].score.bic < scores[best].score.bic) best = k;
    }
    return best;
}

// Smallest lambda leaving every pilot-supported column at zero for the given
// gamma, with the slope fitted freely.
double adaptive_lambda_max(const GramProvider& gram, const SparseCoefs& pilot, double gamma) {
    const double slope = gram.xy(0) / static_cast<double>(gram.size());
    double best = 0.0;
    for (const auto& [j, b] : pilot) {
        if (j == 0 || b == 0.0) continue;
        const double corr = std::abs(gram.xy(j) - slope * gram.entry(j, 0));
        best = std::max(best, corr * std::pow(std::abs(b), gamma));
    }
    return best;
}

FitResult slope_only_fit(const GramProvider& gram, const SolverConfig& solver) {
    return coordinate_descent(gram, PenaltySchedule::type2(0.0, 1.0, {}), {}, solver);
}

}  // namespace

void PipelineConfig::validate() const {
    if (gamma_grid.empty()) throw std::invalid_argument("gamma grid must not be empty");
    for (const double g : gamma_grid) {
        if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("gamma values must be > 0");
    }
    if (cluster_window < 1) throw std::invalid_argument("cluster window must be >= 1");
    solver.validate();
}

ModelScore bic_from(double rss, std::size_t df, std::size_t n) {
    const double nd = static_cast<double>(n);
    ModelScore s;
    s.rss = rss;
    s.df = df;
    s.bic = rss > 0.0 ? nd * std::log(rss / nd) + static_cast<double>(df) * std::log(nd)
                      : -kInfinity;
    return s;
}

ModelScore bic_score(const FitResult& fit, const StandardizedDesign& design) {
    if (fit.fitted.size() != design.n) throw std::invalid_argument("fit has no fitted signal");
    double rss = 0.0;
    for (Index k = 0; k < design.n; ++k) {
        const double r = design.y_centered[k] - (fit.fitted[k] - design.y_mean);
        rss += r * r;
    }
    std::size_t df = 0;
    for (const auto& [j, b] : fit.beta) df += b != 0.0 ? 1 : 0;
    return bic_from(rss, df, design.n);
}

Stage1Result run_stage1(const GramProvider& gram, const PipelineConfig& config) {
    config.validate();
    Stage1Result out;
    out.lambda_max = lambda_max(gram);
    if (!(out.lambda_max > 0.0)) {
        // Nothing a step column can explain; keep the slope-only model.
        out.path.push_back(slope_only_fit(gram, config.solver));
        out.path.back().lambda = 0.0;
    } else {
        out.path = lasso_path(gram, lambda_grid(out.lambda_max, config.solver), config.solver);
    }
    for (const auto& fit : out.path) {
        out.scores.push_back(make_score(fit, score_fit(fit, gram.design(), config)));
    }
    out.best = argmin_bic(out.scores);
    out.pilot = out.path[out.best].beta;
    return out;
}

Stage1Result run_stage1(const Trace& trace, const PipelineConfig& config) {
    const GramProvider gram(standardize(trace), config.gram_mode, config.max_cached_columns);
    return run_stage1(gram, config);
}

Stage2Result run_stage2(const GramProvider& gram, const SparseCoefs& pilot,
                        const PipelineConfig& config) {
    config.validate();
    Stage2Result out;
    if (penalized_support(pilot).empty()) {
        out.warnings.emplace_back("empty pilot: adaptive stage has nothing to reweight");
        out.fit = slope_only_fit(gram, config.solver);
        out.scores.push_back(make_score(out.fit, score_fit(out.fit, gram.design(), config)));
        return out;
    }

    bool have_best = false;
    for (const double gamma : config.gamma_grid) {
        const double lmax = adaptive_lambda_max(gram, pilot, gamma);
        std::vector<FitResult> path;
        if (lmax > 0.0) {
            path = penalty_path(gram, lambda_grid(lmax, config.solver), config.solver,
                                [&](double lambda) {
                                    return PenaltySchedule::type2(lambda, gamma, pilot);
                                });
        } else {
            path.push_back(coordinate_descent(gram, PenaltySchedule::type2(0.0, gamma, pilot),
                                              {}, config.solver));
        }
        for (auto& fit : path) {
            const auto s = make_score(fit, score_fit(fit, gram.design(), config));
            out.scores.push_back(s);
            if (!have_best || s.score.bic < out.scores[out.best].score.bic) {
                out.best = out.scores.size() - 1;
                out.fit = std::move(fit);
                have_best = true;
            }
        }
    }
    return out;
}

Stage2Result run_stage2(const Trace& trace, const SparseCoefs& pilot,
                        const PipelineConfig& config) {
    const GramProvider gram(standardize(trace), config.gram_mode, config.max_cached_columns);
    return run_stage2(gram, pilot, config);
}

DebiasResult ols_debias(const StandardizedDesign& design, const std::vector<Index>& support) {
    const std::size_t n = design.n;
    std::vector<Index> cols{0};
    for (const Index s : support) {
        if (s == 0 || s >= n) {
            throw std::out_of_range("debias support index " + std::to_string(s) +
                                    " must lie in [1, N)");
        }
        cols.push_back(s);
    }
    std::sort(cols.begin() + 1, cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    if (cols.size() + 1 > n) {
        throw std::invalid_argument("debias support too large for the trace length");
    }

    // Incremental Cholesky of the standardized normal matrix; a column whose
    // pivot vanishes relative to its norm is collinear with earlier ones.
    const auto xy = fast_y_inner_products(design);
    DebiasResult out;
    std::vector<Index> kept;
    std::vector<std::vector<double>> chol;  // row r holds L[r][0..r]
    for (const Index c : cols) {
        std::vector<double> row(kept.size() + 1);
        for (std::size_t r = 0; r < kept.size(); ++r) {
            double v = gram_entry(design, c, kept[r]);
            for (std::size_t q = 0; q < r; ++q) v -= row[q] * chol[r][q];
            row[r] = v / chol[r][r];
        }
        double pivot = static_cast<double>(n);
        for (std::size_t q = 0; q < kept.size(); ++q) pivot -= row[q] * row[q];
        if (pivot <= 1e-10 * static_cast<double>(n)) {
            out.dropped.push_back(c);
            continue;
        }
        row.back() = std::sqrt(pivot);
        chol.push_back(std::move(row));
        kept.push_back(c);
    }

    const std::size_t m = kept.size();
    std::vector<double> z(m);
    for (std::size_t r = 0; r < m; ++r) {
        double v = xy[kept[r]];
        for (std::size_t q = 0; q < r; ++q) v -= chol[r][q] * z[q];
        z[r] = v / chol[r][r];
    }
    std::vector<double> b(m);
    for (std::size_t r = m; r-- > 0;) {
        double v = z[r];
        for (std::size_t q = r + 1; q < m; ++q) v -= chol[q][r] * b[q];
        b[r] = v / chol[r][r];
    }

    SparseCoefs standardized;
    out.intercept = design.y_mean;
    for (std::size_t r = 0; r < m; ++r) {
        const Index j = kept[r];
        standardized[j] = b[r];
        if (j == 0) {
            out.slope = b[r] / design.sigma[0];
            out.intercept -= b[r] * design.mu[0] / design.sigma[0];
        } else {
            out.steps[j] = b[r] * (design.l[j] - design.u[j]);
            out.intercept += b[r] * design.u[j];
        }
    }

    out.fitted.resize(n);
    double level = out.intercept;
    auto next = out.steps.begin();
    out.rss = 0.0;
    for (Index k = 0; k < n; ++k) {
        while (next != out.steps.end() && next->first <= k) {
            level += next->second;
            ++next;
        }
        out.fitted[k] = level + out.slope * (static_cast<double>(k) + 1.0);
        const double r = design.y_centered[k] + design.y_mean - out.fitted[k];
        out.rss += r * r;
    }
    return out;
}

DebiasResult ols_debias(const Trace& trace, const std::vector<Index>& support) {
    return ols_debias(standardize(trace), support);
}

std::vector<FaultEvent> cluster_events(const SparseCoefs& steps, std::size_t window,
                                       double bin_spacing) {
    std::vector<FaultEvent> events;
    Index rightmost = 0;
    double weight = 0.0;
    double weighted_pos = 0.0;
    auto close = [&] {
        auto& e = events.back();
        e.position = weight > 0.0 ? weighted_pos / weight
                                  : static_cast<double>(e.members.front());
        e.position_m = e.position * bin_spacing;
    };
    for (const auto& [idx, mag] : steps) {
        if (mag == 0.0) continue;
        if (events.empty() || idx - rightmost > window) {
            if (!events.empty()) close();
            events.emplace_back();
            weight = 0.0;
            weighted_pos = 0.0;
        }
        auto& e = events.back();
        e.members.push_back(idx);
        e.magnitude_db += mag;
        weight += std::abs(mag);
        weighted_pos += std::abs(mag) * static_cast<double>(idx);
        rightmost = idx;
    }
    if (!events.empty()) close();
    return events;
}

Detection detect(const Trace& trace, const PipelineConfig& config) {
    config.validate();
    Detection out;
    auto& diag = out.diagnostics;
    const auto t_start = Clock::now();

    auto t = Clock::now();
    const GramProvider gram(standardize(trace), config.gram_mode, config.max_cached_columns);
    const auto& design = gram.design();
    diag.timings.standardize_ms = elapsed_ms(t);

    t = Clock::now();
    auto stage1 = run_stage1(gram, config);
    diag.timings.stage1_ms = elapsed_ms(t);
    diag.lambda_max = stage1.lambda_max;
    diag.stage1_scores = stage1.scores;
    diag.stage1_best = stage1.best;
    out.pilot = stage1.pilot;

    if (config.stage1_only) {
        out.fit = std::move(stage1.path[stage1.best]);
    } else {
        t = Clock::now();
        auto stage2 = run_stage2(gram, stage1.pilot, config);
        diag.timings.stage2_ms = elapsed_ms(t);
        diag.stage2_scores = std::move(stage2.scores);
        diag.stage2_best = stage2.best;
        diag.warnings.insert(diag.warnings.end(), stage2.warnings.begin(),
                             stage2.warnings.end());
        out.fit = std::move(stage2.fit);
    }
    diag.gram_cached_entries = gram.cached_entries();
    for (const auto& s : diag.stage1_scores) diag.nonconverged_fits += s.converged ? 0 : 1;
    for (const auto& s : diag.stage2_scores) diag.nonconverged_fits += s.converged ? 0 : 1;
    if (diag.nonconverged_fits > 0) {
        diag.warnings.push_back(std::to_string(diag.nonconverged_fits) +
                                " fits hit the sweep limit");
    }

    t = Clock::now();
    if (config.debias) {
        out.debiased = ols_debias(design, out.fit.active_set);
        diag.dropped_columns = out.debiased.dropped;
        if (!out.debiased.dropped.empty()) {
            diag.warnings.push_back("debias dropped collinear columns");
        }
    } else {
        for (const Index j : out.fit.active_set) {
            out.debiased.steps[j] = out.fit.beta.at(j) * (design.l[j] - design.u[j]);
        }
        const auto it = out.fit.beta.find(0);
        out.debiased.slope = it == out.fit.beta.end() ? 0.0 : it->second / design.sigma[0];
        out.debiased.intercept = out.fit.fitted[0] - out.debiased.slope;
        out.debiased.fitted = out.fit.fitted;
        out.debiased.rss = bic_score(out.fit, design).rss;
    }
    diag.timings.debias_ms = elapsed_ms(t);

    t = Clock::now();
    out.events = cluster_events(out.debiased.steps, config.cluster_window, trace.bin_spacing());
    diag.timings.cluster_ms = elapsed_ms(t);
    diag.timings.total_ms = elapsed_ms(t_start);
    return out;
}

}  // namespace l1af
