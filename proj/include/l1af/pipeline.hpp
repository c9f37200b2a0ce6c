#pragma once

#include <optional>
#include <string>
#include <vector>

#include "l1af/gram.hpp"
#include "l1af/solver.hpp"
#include "l1af/trace.hpp"

namespace l1af {

struct PipelineConfig {
    std::vector<double> gamma_grid{0.5, 1.0, 2.0, 4.0};
    SolverConfig solver;
    std::size_t cluster_window = 6;
    bool debias = true;
    /// Report the stage 1 LASSO selection instead of the adaptive one.
    bool stage1_only = false;
    /// Score candidates by the BIC of their OLS refit rather than the shrunk fit.
    bool score_debiased = false;
    GramMode gram_mode = GramMode::Cached;
    std::size_t max_cached_columns = 1024;

    void validate() const;
};

struct ModelScore {
    double bic = 0.0;
    double rss = 0.0;
    std::size_t df = 0;
};

/// n ln(rss/n) + df ln(n); rss == 0 yields -infinity.
ModelScore bic_from(double rss, std::size_t df, std::size_t n);

/// Scores a fit against the centered observations of `design`; df counts
/// nonzero coefficients including the slope.
ModelScore bic_score(const FitResult& fit, const StandardizedDesign& design);

struct PathScore {
    double lambda = 0.0;
    std::optional<double> gamma;
    ModelScore score;
    std::size_t support_size = 0;
    int iterations = 0;
    bool converged = false;
};

struct Stage1Result {
    double lambda_max = 0.0;
    std::vector<FitResult> path;
    std::vector<PathScore> scores;
    std::size_t best = 0;
    SparseCoefs pilot;
};

Stage1Result run_stage1(const GramProvider& gram, const PipelineConfig& config);
Stage1Result run_stage1(const Trace& trace, const PipelineConfig& config);

struct Stage2Result {
    FitResult fit;
    std::vector<PathScore> scores;
    std::size_t best = 0;
    std::vector<std::string> warnings;
};

/**
 * Adaptive stage: a Type 2 path for each gamma, each with its own lambda_max
 * (max over the pilot support of |profiled correlation| * |pilot|^gamma),
 * keeping the lowest-BIC fit. Columns outside the pilot support stay zero.
 */
Stage2Result run_stage2(const GramProvider& gram, const SparseCoefs& pilot,
                        const PipelineConfig& config);
Stage2Result run_stage2(const Trace& trace, const SparseCoefs& pilot,
                        const PipelineConfig& config);

struct DebiasResult {
    /// Step magnitudes in trace units (dB), keyed by sample index.
    SparseCoefs steps;
    /// Model y_k = intercept + slope * (k + 1) + sum_s steps[s] * [k >= s].
    double intercept = 0.0;
    double slope = 0.0;
    std::vector<double> fitted;
    double rss = 0.0;
    /// Support indices dropped as collinear with earlier columns.
    std::vector<Index> dropped;
};

/**
 * Least-squares refit of intercept, slope and unit steps on `support`,
 * solved by Cholesky on the (|support| + 1)-sized normal equations of the
 * centered, standardized columns.
 */
DebiasResult ols_debias(const StandardizedDesign& design, const std::vector<Index>& support);
DebiasResult ols_debias(const Trace& trace, const std::vector<Index>& support);

struct FaultEvent {
    double position = 0.0;
    double position_m = 0.0;
    double magnitude_db = 0.0;
    std::vector<Index> members;
};

/// Greedy left-to-right merge of steps lying within `window` samples of the
/// current cluster's rightmost member.
std::vector<FaultEvent> cluster_events(const SparseCoefs& steps, std::size_t window,
                                       double bin_spacing);

struct StageTimings {
    double standardize_ms = 0.0;
    double stage1_ms = 0.0;
    double stage2_ms = 0.0;
    double debias_ms = 0.0;
    double cluster_ms = 0.0;
    double total_ms = 0.0;
};

struct Diagnostics {
    double lambda_max = 0.0;
    std::vector<PathScore> stage1_scores;
    std::size_t stage1_best = 0;
    std::vector<PathScore> stage2_scores;
    std::size_t stage2_best = 0;
    std::size_t nonconverged_fits = 0;
    std::vector<Index> dropped_columns;
    /// Doubles held by the Gram cache at the end of the run.
    std::size_t gram_cached_entries = 0;
    std::vector<std::string> warnings;
    StageTimings timings;
};

struct Detection {
    std::vector<FaultEvent> events;
    FitResult fit;
    DebiasResult debiased;
    SparseCoefs pilot;
    Diagnostics diagnostics;
};

/// standardize -> stage 1 -> stage 2 -> OLS debias -> clustering.
Detection detect(const Trace& trace, const PipelineConfig& config);

}  // namespace l1af
