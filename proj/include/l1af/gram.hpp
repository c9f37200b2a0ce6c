#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <vector>

#include "l1af/trace.hpp"

namespace l1af {

/**
 * Closed-form inner product of standardized columns i and j.
 *
 * For step columns the entry is a*U_a*U_b + (b-a)*L_a*U_b + (N-b)*L_a*L_b
 * with a = min(i, j), b = max(i, j). The diagonal is exactly N.
 *
 * Throws std::out_of_range for indices >= N.
 */
double gram_entry(const StandardizedDesign& design, Index i, Index j);

/// gram_entry without bounds checks.
double gram_entry_unchecked(const StandardizedDesign& design, Index i, Index j) noexcept;

/// Writes column j of the Gram matrix to out[0..N). Throws std::out_of_range.
void gram_column(const StandardizedDesign& design, Index j, double* out);

/// The full N x N Gram matrix, column-major. O(N^2) time and memory.
std::vector<double> gram_matrix(const StandardizedDesign& design);

/**
 * <X_j, y_centered> for every column in O(N). Step columns use the prefix sum
 * of y over rows 0..j-1, which is valid because centered y sums to zero.
 */
std::vector<double> fast_y_inner_products(const StandardizedDesign& design);

enum class GramMode { Cached, OnDemand };

/// Supplies Gram entries and column/response correlations to the solver.
///
/// Cached mode stores whole Gram columns for coordinates the solver
/// activates, up to `max_cached_columns`; other entries fall back to the
/// closed form. Both modes return bit-identical values.
class GramProvider {
public:
    explicit GramProvider(StandardizedDesign design,
                          GramMode mode = GramMode::OnDemand,
                          std::size_t max_cached_columns = 1024);
    ~GramProvider();

    GramProvider(const GramProvider&) = delete;
    GramProvider& operator=(const GramProvider&) = delete;

    GramMode mode() const noexcept { return mode_; }
    const StandardizedDesign& design() const noexcept { return design_; }
    std::size_t size() const noexcept { return design_.n; }

    double entry(Index i, Index j) const {
        if (mode_ == GramMode::Cached) {
            if (const double* col = slots_[j].load(std::memory_order_acquire)) return col[i];
            if (const double* col = slots_[i].load(std::memory_order_acquire)) return col[j];
        }
        return gram_entry_unchecked(design_, i, j);
    }

    /// <X_j, X_0>, tabulated for every column.
    double slope_entry(Index j) const { return slope_column_[j]; }

    double xy(Index j) const { return xy_[j]; }
    const std::vector<double>& xy() const noexcept { return xy_; }

    /// Pre-fills the cached column for j. No-op in OnDemand mode, when the
    /// column is already cached, or when the cache is full.
    void prepare(Index j) const;

    std::size_t cached_columns() const;
    /// Doubles allocated for cached entries (0 in OnDemand mode).
    std::size_t cached_entries() const;

private:
    StandardizedDesign design_;
    GramMode mode_;
    std::vector<double> xy_;
    std::vector<double> slope_column_;
    std::size_t max_cached_columns_;

    std::unique_ptr<std::atomic<const double*>[]> slots_;
    mutable std::vector<std::unique_ptr<double[]>> storage_;
    mutable std::mutex fill_mutex_;
};

}  // namespace l1af
