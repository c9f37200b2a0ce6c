#include "l1af/trace.hpp"

#include <cmath>
#include <numeric>

namespace l1af {

Trace::Trace(std::vector<double> samples, double bin_spacing, std::string label)
    : samples_(std::move(samples)), bin_spacing_(bin_spacing),
      label_(std::move(label)) {
    if (samples_.size() < 3) {
        throw DataError("trace needs at least 3 samples, got " +
                        std::to_string(samples_.size()));
    }
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        if (!std::isfinite(samples_[k])) {
            throw DataError("non-finite sample at index " + std::to_string(k));
        }
    }
    if (!(bin_spacing_ > 0.0) || !std::isfinite(bin_spacing_)) {
        throw DataError("bin spacing must be positive and finite");
    }
}

StandardizedDesign standardize_columns(std::size_t n) {
    if (n < 3) throw DataError("design needs N >= 3");
    StandardizedDesign d;
    d.n = n;
    d.mu.resize(n);
    d.sigma.resize(n);
    d.u.assign(n, 0.0);
    d.l.assign(n, 0.0);

    const double nd = static_cast<double>(n);
    d.mu[0] = (nd + 1.0) / 2.0;
    // (1/6)(N+1)(2N+1) - mu0^2 simplifies to (N^2 - 1)/12.
    d.sigma[0] = std::sqrt((nd * nd - 1.0) / 12.0);
    for (Index i = 1; i < n; ++i) {
        const double id = static_cast<double>(i);
        const double m = (nd - id) / nd;
        d.mu[i] = m;
        d.sigma[i] = std::sqrt((id * m * m + (nd - id) * (1.0 - m) * (1.0 - m)) / nd);
        d.u[i] = -m / d.sigma[i];
        d.l[i] = (1.0 - m) / d.sigma[i];
    }
    return d;
}

StandardizedDesign standardize(const Trace& trace) {
    StandardizedDesign d = standardize_columns(trace.size());
    const auto& y = trace.samples();
    d.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    d.y_centered.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) d.y_centered[k] = y[k] - d.y_mean;
    return d;
}

Reconstruction reconstruct_signal(const StandardizedDesign& design,
                                  const SparseCoefs& beta, double y_mean) {
    const std::size_t n = design.n;
    double slope = 0.0;
    double base = y_mean;
    // jumps[k] is the increment applied from row k onwards.
    std::vector<double> jumps(n, 0.0);
    for (const auto& [j, b] : beta) {
        if (j >= n) {
            throw std::out_of_range("coefficient index " + std::to_string(j) +
                                    " outside design of size " + std::to_string(n));
        }
        if (j == 0) {
            slope = b;
            continue;
        }
        base += b * design.u[j];
        jumps[j] += b * (design.l[j] - design.u[j]);
    }

    Reconstruction out;
    out.fitted.resize(n);
    out.level.resize(n);
    double level = base;
    for (Index k = 0; k < n; ++k) {
        level += jumps[k];
        out.level[k] = level;
        out.fitted[k] = level + slope * design.slope_at(k);
    }
    return out;
}

double residual_sum_squares(const StandardizedDesign& design, const SparseCoefs& beta) {
    const auto rec = reconstruct_signal(design, beta, 0.0);
    double rss = 0.0;
    for (Index k = 0; k < design.n; ++k) {
        const double r = design.y_centered[k] - rec.fitted[k];
        rss += r * r;
    }
    return rss;
}

}  // namespace l1af
