#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace l1af {

using Index = std::size_t;

/// Sparse coefficient vector keyed by column index. Column 0 is the slope.
using SparseCoefs = std::map<Index, double>;

/// Raised for malformed or out-of-contract input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An observed signal in dB with its sampling metadata.
class Trace {
public:
    Trace(std::vector<double> samples, double bin_spacing = 1.0,
          std::string label = {});

    const std::vector<double>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    double bin_spacing() const noexcept { return bin_spacing_; }
    const std::string& label() const noexcept { return label_; }

private:
    std::vector<double> samples_;
    double bin_spacing_;
    std::string label_;
};

/**
 * Column statistics of the implicit N x N design (slope column plus N-1 unit
 * steps) after centering and population-variance scaling. The matrix itself
 * is never stored: a standardized step column j takes the value u[j] on rows
 * 0..j-1 and l[j] on rows j..N-1, and the slope column takes
 * (k + 1 - mu[0]) / sigma[0] on row k.
 */
struct StandardizedDesign {
    std::size_t n = 0;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> u;  // u[0] unused
    std::vector<double> l;  // l[0] unused
    double y_mean = 0.0;
    std::vector<double> y_centered;

    /// Standardized slope column value on row k.
    double slope_at(Index k) const noexcept {
        return (static_cast<double>(k) + 1.0 - mu[0]) / sigma[0];
    }

    /// Standardized value of column j on row k.
    double column_at(Index j, Index k) const noexcept {
        if (j == 0) return slope_at(k);
        return k < j ? u[j] : l[j];
    }
};

StandardizedDesign standardize(const Trace& trace);

/// Column statistics only; y_mean and y_centered are left empty.
StandardizedDesign standardize_columns(std::size_t n);

/// Output of a penalized fit. `beta` lives on the standardized scale.
struct FitResult {
    SparseCoefs beta;
    std::vector<Index> active_set;  // nonzero penalized columns, ascending
    std::vector<double> fitted;
    std::vector<double> level;
    double objective = 0.0;
    double lambda = 0.0;
    std::optional<double> gamma;
    int iterations = 0;
    bool converged = false;
};

struct Reconstruction {
    std::vector<double> fitted;
    std::vector<double> level;
};

/**
 * Evaluates X*beta + y_mean in O(N + |beta|) using a difference array.
 * `level` is `fitted` with the slope contribution removed.
 *
 * Throws std::out_of_range if any index is >= N.
 */
Reconstruction reconstruct_signal(const StandardizedDesign& design,
                                  const SparseCoefs& beta, double y_mean);

/// Residual sum of squares of beta against the centered observations.
double residual_sum_squares(const StandardizedDesign& design,
                            const SparseCoefs& beta);

}  // namespace l1af
