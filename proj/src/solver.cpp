#include "l1af/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

namespace l1af {

PenaltySchedule::PenaltySchedule(PenaltyKind kind, double lambda, double gamma,
                                 SparseCoefs pilot)
    : kind_(kind), lambda_(lambda), gamma_(gamma), pilot_(std::move(pilot)) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
        throw std::invalid_argument("lambda must be finite and >= 0");
    }
    if (kind_ == PenaltyKind::Type2 && !(gamma_ > 0.0)) {
        throw std::invalid_argument("gamma must be > 0");
    }
}

PenaltySchedule PenaltySchedule::type1(double lambda) {
    return {PenaltyKind::Type1, lambda, 1.0, {}};
}

PenaltySchedule PenaltySchedule::type2(double lambda, double gamma, SparseCoefs pilot) {
    return {PenaltyKind::Type2, lambda, gamma, std::move(pilot)};
}

double PenaltySchedule::alpha(Index j) const {
    if (j == 0) return 0.0;
    if (kind_ == PenaltyKind::Type1) return lambda_;
    const auto it = pilot_.find(j);
    if (it == pilot_.end() || it->second == 0.0) return kInfinity;
    return lambda_ / std::pow(std::abs(it->second), gamma_);
}

std::vector<double> PenaltySchedule::alphas(std::size_t n) const {
    std::vector<double> out(n);
    if (kind_ == PenaltyKind::Type1) {
        std::fill(out.begin(), out.end(), lambda_);
    } else {
        std::fill(out.begin(), out.end(), kInfinity);
        for (const auto& [j, b] : pilot_) {
            if (j < n && b != 0.0) out[j] = lambda_ / std::pow(std::abs(b), gamma_);
        }
    }
    if (n > 0) out[0] = 0.0;
    return out;
}

void SolverConfig::validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("solver tol must be > 0");
    if (max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
    if (lambda_grid_size < 2) throw std::invalid_argument("lambda grid needs >= 2 points");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
        throw std::invalid_argument("lambda_min_ratio must lie in (0, 1)");
    }
}

double soft_threshold(double z, double alpha) {
    if (std::abs(z) <= alpha) return 0.0;
    return z > 0.0 ? z - alpha : z + alpha;
}

double max_abs_correlation(const GramProvider& gram) {
    double best = 0.0;
    for (Index j = 1; j < gram.size(); ++j) best = std::max(best, std::abs(gram.xy(j)));
    return best;
}

double lambda_max(const GramProvider& gram) {
    const double n = static_cast<double>(gram.size());
    const double slope = gram.xy(0) / n;
    double best = 0.0;
    for (Index j = 1; j < gram.size(); ++j) {
        best = std::max(best, std::abs(gram.xy(j) - slope * gram.entry(j, 0)));
    }
    return best;
}

std::vector<double> lambda_grid(double lambda_max, const SolverConfig& config) {
    config.validate();
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw std::invalid_argument("lambda_max must be positive and finite");
    }
    const std::size_t m = config.lambda_grid_size;
    const double log_hi = std::log(lambda_max);
    const double log_lo = std::log(lambda_max * config.lambda_min_ratio);
    std::vector<double> grid(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(m - 1);
        grid[k] = std::exp(log_hi + t * (log_lo - log_hi));
    }
    grid.front() = lambda_max;
    grid.back() = lambda_max * config.lambda_min_ratio;
    return grid;
}

double objective_value(const StandardizedDesign& design, const SparseCoefs& beta,
                       const std::vector<double>& alphas) {
    double penalty = 0.0;
    for (const auto& [j, b] : beta) {
        if (b != 0.0) penalty += alphas.at(j) * std::abs(b);
    }
    return 0.5 * residual_sum_squares(design, beta) + penalty;
}

namespace {

// <X_j, r> for all j from the reconstructed residual; r sums to zero, so the
// step correlations reduce to prefix sums.
std::vector<double> residual_correlations(const StandardizedDesign& design,
                                          const SparseCoefs& beta) {
    const auto rec = reconstruct_signal(design, beta, 0.0);
    const std::size_t n = design.n;
    std::vector<double> out(n);
    double x0r = 0.0;
    double prefix = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double r = design.y_centered[k] - rec.fitted[k];
        x0r += design.slope_at(k) * r;
        if (k + 1 < n) {
            prefix += r;
            out[k + 1] = prefix * (design.u[k + 1] - design.l[k + 1]);
        }
    }
    out[0] = x0r;
    return out;
}

SparseCoefs to_sparse(const std::vector<double>& beta) {
    SparseCoefs out;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) out.emplace_hint(out.end(), j, beta[j]);
    }
    return out;
}

}  // namespace

double kkt_violation(const StandardizedDesign& design, const SparseCoefs& beta,
                     const std::vector<double>& alphas) {
    const auto corr = residual_correlations(design, beta);
    double worst = 0.0;
    for (Index j = 0; j < design.n; ++j) {
        const auto it = beta.find(j);
        const double b = it == beta.end() ? 0.0 : it->second;
        double v = 0.0;
        if (b != 0.0) {
            v = std::abs(corr[j] - alphas[j] * (b > 0.0 ? 1.0 : -1.0));
        } else if (std::isfinite(alphas[j])) {
            v = std::max(0.0, std::abs(corr[j]) - alphas[j]);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

namespace {

class CoordinateSweeper {
public:
    CoordinateSweeper(const GramProvider& gram, std::vector<double> alphas,
                      CorrelationKernel kernel)
        : gram_(gram), d_(gram.design()), n_(static_cast<double>(gram.size())),
          alphas_(std::move(alphas)), kernel_(kernel), beta_(gram.size(), 0.0) {}

    void set(Index j, double b) {
        beta_[j] = b;
        activate(j);
    }

    const std::vector<double>& beta() const noexcept { return beta_; }
    const std::vector<Index>& active() const noexcept { return active_; }

    /// Updates every coordinate in `coords` (ascending) once; returns the
    /// largest absolute change. `coords` must contain every nonzero
    /// coordinate when the Structured kernel is used.
    double sweep(const std::vector<Index>& coords) {
        max_change_ = 0.0;
        if (kernel_ == CorrelationKernel::GramEntries) {
            for (const Index j : coords) apply(j, entry_correlation(j));
            return max_change_;
        }

        // below: sum_{1 <= l < j} L_l beta_l; above: sum_{l >= j} U_l beta_l;
        // slope_mix: sum_{l >= 1} <X_0, X_l> beta_l.
        double below = 0.0;
        double above = 0.0;
        double slope_mix = 0.0;
        for (const Index l : active_) {
            if (l == 0) continue;
            above += d_.u[l] * beta_[l];
            slope_mix += gram_.slope_entry(l) * beta_[l];
        }
        for (const Index j : coords) {
            if (j == 0) {
                apply(0, slope_mix);
                continue;
            }
            above -= d_.u[j] * beta_[j];
            const double corr = gram_.slope_entry(j) * beta_[0] -
                                n_ * (d_.u[j] * below + d_.l[j] * above);
            const double old = beta_[j];
            apply(j, corr);
            slope_mix += gram_.slope_entry(j) * (beta_[j] - old);
            below += d_.l[j] * beta_[j];
        }
        return max_change_;
    }

private:
    double entry_correlation(Index j) const {
        double s = 0.0;
        for (const Index l : active_) {
            if (l != j) s += gram_.entry(j, l) * beta_[l];
        }
        return s;
    }

    // Coordinate minimization given the correlation with the other columns.
    void apply(Index j, double others) {
        const double old = beta_[j];
        const double next = soft_threshold(gram_.xy(j) - others, alphas_[j]) / n_;
        if (next == old) return;
        max_change_ = std::max(max_change_, std::abs(next - old));
        beta_[j] = next;
        if (old == 0.0) {
            activate(j);
        } else if (next == 0.0) {
            active_.erase(std::lower_bound(active_.begin(), active_.end(), j));
        }
    }

    void activate(Index j) {
        active_.insert(std::lower_bound(active_.begin(), active_.end(), j), j);
        if (kernel_ == CorrelationKernel::GramEntries) gram_.prepare(j);
    }

    const GramProvider& gram_;
    const StandardizedDesign& d_;
    double n_;
    std::vector<double> alphas_;
    CorrelationKernel kernel_;
    std::vector<double> beta_;
    std::vector<Index> active_;  // ascending, includes the slope when nonzero
    double max_change_ = 0.0;
};

}  // namespace

FitResult coordinate_descent(const GramProvider& gram, const PenaltySchedule& schedule,
                             const SparseCoefs& warm_start, const SolverConfig& config,
                             const SweepObserver& observer) {
    config.validate();
    const std::size_t n = gram.size();
    const auto alphas = schedule.alphas(n);
    CoordinateSweeper sweeper(gram, alphas, config.kernel);

    for (const auto& [j, b] : warm_start) {
        if (j >= n) {
            throw std::out_of_range("warm start index " + std::to_string(j) +
                                    " outside design of size " + std::to_string(n));
        }
        if (b != 0.0 && std::isfinite(alphas[j])) sweeper.set(j, b);
    }

    std::vector<Index> free_coords;
    for (Index j = 0; j < n; ++j) {
        if (std::isfinite(alphas[j])) free_coords.push_back(j);
    }

#ifndef NDEBUG
    double last_objective = objective_value(gram.design(), to_sparse(sweeper.beta()), alphas);
    auto check_descent = [&] {
        const double obj = objective_value(gram.design(), to_sparse(sweeper.beta()), alphas);
        assert(obj <= last_objective + 1e-9 * std::max(1.0, std::abs(last_objective)));
        last_objective = obj;
    };
#else
    auto check_descent = [] {};
#endif

    int sweeps = 0;
    bool converged = false;
    std::vector<Index> snapshot;
    while (sweeps < config.max_sweeps) {
        double change = sweeper.sweep(free_coords);
        ++sweeps;
        check_descent();
        if (observer) observer(sweeps, sweeper.beta());
        if (change < config.tol) {
            converged = true;
            break;
        }
        while (sweeps < config.max_sweeps) {
            snapshot = sweeper.active();
            change = sweeper.sweep(snapshot);
            ++sweeps;
            check_descent();
            if (observer) observer(sweeps, sweeper.beta());
            if (change < config.tol) break;
        }
    }

    FitResult fit;
    fit.beta = to_sparse(sweeper.beta());
    for (const Index j : sweeper.active()) {
        if (j != 0) fit.active_set.push_back(j);
    }
    auto rec = reconstruct_signal(gram.design(), fit.beta, gram.design().y_mean);
    fit.fitted = std::move(rec.fitted);
    fit.level = std::move(rec.level);
    fit.objective = objective_value(gram.design(), fit.beta, alphas);
    fit.lambda = schedule.lambda();
    if (schedule.kind() == PenaltyKind::Type2) fit.gamma = schedule.gamma();
    fit.iterations = sweeps;
    fit.converged = converged;
    return fit;
}

std::vector<FitResult> penalty_path(
    const GramProvider& gram, const std::vector<double>& grid, const SolverConfig& config,
    const std::function<PenaltySchedule(double)>& schedule_for) {
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (grid[k] > grid[k - 1]) throw std::invalid_argument("lambda grid must be descending");
    }
    std::vector<FitResult> path;
    path.reserve(grid.size());
    SparseCoefs warm;
    for (const double lambda : grid) {
        path.push_back(coordinate_descent(gram, schedule_for(lambda), warm, config));
        if (config.warm_start) warm = path.back().beta;
    }
    return path;
}

std::vector<FitResult> lasso_path(const GramProvider& gram, const std::vector<double>& grid,
                                  const SolverConfig& config) {
    return penalty_path(gram, grid, config,
                        [](double lambda) { return PenaltySchedule::type1(lambda); });
}

}  // namespace l1af
