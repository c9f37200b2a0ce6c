#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "l1af/gram.hpp"
#include "l1af/trace.hpp"

namespace l1af {

enum class PenaltyKind { Type1, Type2 };

/**
 * Per-coordinate penalty weights on the standardized scale.
 *
 * Type 1 penalizes every step column by lambda. Type 2 divides lambda by
 * |pilot_j|^gamma; a zero pilot coefficient freezes that column at zero
 * (infinite penalty). The slope column is never penalized.
 */
class PenaltySchedule {
public:
    static PenaltySchedule type1(double lambda);
    static PenaltySchedule type2(double lambda, double gamma, SparseCoefs pilot);

    PenaltyKind kind() const noexcept { return kind_; }
    double lambda() const noexcept { return lambda_; }
    double gamma() const noexcept { return gamma_; }
    const SparseCoefs& pilot() const noexcept { return pilot_; }

    double alpha(Index j) const;
    /// Dense alpha vector for a design of size n.
    std::vector<double> alphas(std::size_t n) const;

private:
    PenaltySchedule(PenaltyKind kind, double lambda, double gamma, SparseCoefs pilot);

    PenaltyKind kind_;
    double lambda_;
    double gamma_;
    SparseCoefs pilot_;
};

/**
 * How the solver evaluates sum_{l in A} <X_j, X_l> beta_l.
 *
 * GramEntries sums GramProvider::entry over the active set, O(|A|) per
 * coordinate. Structured uses the factorization <X_i, X_j> = -N L_a U_b
 * (a = min, b = max, both step columns) to carry prefix/suffix sums through
 * an ascending sweep, O(1) per coordinate. Both visit coordinates in the
 * same order and agree to rounding.
 */
enum class CorrelationKernel { Structured, GramEntries };

struct SolverConfig {
    double tol = 1e-7;
    int max_sweeps = 10'000;
    std::size_t lambda_grid_size = 100;
    double lambda_min_ratio = 1e-3;
    bool warm_start = true;
    CorrelationKernel kernel = CorrelationKernel::Structured;

    void validate() const;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

double soft_threshold(double z, double alpha);

/**
 * Smallest lambda for which the Type 1 fit has no step columns, with the
 * slope fitted freely: max_j |<X_j, y - slope fit>| over j >= 1.
 * Returns 0 for a trace the slope column explains exactly.
 */
double lambda_max(const GramProvider& gram);

/// max_j |<X_j, y_centered>| over j >= 1, without profiling the slope.
double max_abs_correlation(const GramProvider& gram);

/// Descending log-spaced grid from lambda_max to ratio * lambda_max.
std::vector<double> lambda_grid(double lambda_max, const SolverConfig& config);

/// Called after every sweep with the sweep number and dense coefficients.
using SweepObserver = std::function<void(int, const std::vector<double>&)>;

/**
 * Covariance-update coordinate descent for
 *   (1/2) ||y - X beta||^2 + sum_j alpha_j |beta_j|
 * over the implicit standardized design. Coordinates are visited in
 * ascending order; after each full sweep that changed something, sweeps are
 * restricted to the active set until they settle, then a full sweep checks
 * for new entries. Hitting max_sweeps returns the last iterate with
 * converged = false.
 */
FitResult coordinate_descent(const GramProvider& gram, const PenaltySchedule& schedule,
                             const SparseCoefs& warm_start, const SolverConfig& config,
                             const SweepObserver& observer = {});

/// One fit per grid value, Type 1 penalties.
std::vector<FitResult> lasso_path(const GramProvider& gram, const std::vector<double>& grid,
                                  const SolverConfig& config);

/// Same as lasso_path with a caller-supplied schedule per lambda.
std::vector<FitResult> penalty_path(
    const GramProvider& gram, const std::vector<double>& grid, const SolverConfig& config,
    const std::function<PenaltySchedule(double)>& schedule_for);

/// Penalized objective of beta under the given per-coordinate alphas.
double objective_value(const StandardizedDesign& design, const SparseCoefs& beta,
                       const std::vector<double>& alphas);

/**
 * Largest KKT violation of beta: for nonzero j, |<X_j, r> - alpha_j sign(beta_j)|;
 * for zero j with finite alpha, max(0, |<X_j, r>| - alpha_j). Residual
 * correlations are computed from the reconstructed residual.
 */
double kkt_violation(const StandardizedDesign& design, const SparseCoefs& beta,
                     const std::vector<double>& alphas);

}  // namespace l1af
