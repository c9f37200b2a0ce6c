#include "l1af/gram.hpp"

#include <string>

namespace l1af {

namespace {

void check_index(const StandardizedDesign& d, Index i) {
    if (i >= d.n) {
        throw std::out_of_range("column index " + std::to_string(i) +
                                " outside design of size " + std::to_string(d.n));
    }
}

}  // namespace

double gram_entry(const StandardizedDesign& d, Index i, Index j) {
    check_index(d, i);
    check_index(d, j);
    return gram_entry_unchecked(d, i, j);
}

double gram_entry_unchecked(const StandardizedDesign& d, Index i, Index j) noexcept {
    const double n = static_cast<double>(d.n);
    if (i == j) return n;

    const Index a = i < j ? i : j;
    const Index b = i < j ? j : i;
    if (a == 0) {
        const double bd = static_cast<double>(b);
        const double m0 = d.mu[0];
        return (bd * d.u[b] * ((bd + 1.0) / 2.0 - m0) +
                (n - bd) * d.l[b] * ((bd + 1.0 + n) / 2.0 - m0)) /
               d.sigma[0];
    }
    // The smaller index switches to ones first, so L belongs to it.
    const double ad = static_cast<double>(a);
    const double bd = static_cast<double>(b);
    // Same evaluation order as gram_column, so both modes agree bitwise.
    return d.u[b] * (ad * d.u[a] + (bd - ad) * d.l[a]) + (n - bd) * d.l[a] * d.l[b];
}

void gram_column(const StandardizedDesign& d, Index j, double* out) {
    check_index(d, j);
    const std::size_t n = d.n;
    const double nd = static_cast<double>(n);
    if (j == 0) {
        out[0] = nd;
        for (Index i = 1; i < n; ++i) out[i] = gram_entry_unchecked(d, i, 0);
        return;
    }
    out[0] = gram_entry_unchecked(d, 0, j);
    const double jd = static_cast<double>(j);
    const double uj = d.u[j];
    const double lj = d.l[j];
    // Rows above j pair L of the row with U_j or L_j; rows below use L_j.
    for (Index i = 1; i < j; ++i) {
        const double id = static_cast<double>(i);
        out[i] = uj * (id * d.u[i] + (jd - id) * d.l[i]) + (nd - jd) * d.l[i] * lj;
    }
    out[j] = nd;
    for (Index i = j + 1; i < n; ++i) {
        const double id = static_cast<double>(i);
        out[i] = d.u[i] * (jd * uj + (id - jd) * lj) + (nd - id) * lj * d.l[i];
    }
}

std::vector<double> gram_matrix(const StandardizedDesign& d) {
    std::vector<double> out(d.n * d.n);
    for (Index j = 0; j < d.n; ++j) gram_column(d, j, out.data() + j * d.n);
    return out;
}

std::vector<double> fast_y_inner_products(const StandardizedDesign& d) {
    const std::size_t n = d.n;
    const auto& y = d.y_centered;
    if (y.size() != n) throw DataError("design has no centered observations");

    std::vector<double> out(n, 0.0);
    double x0y = 0.0;
    for (Index k = 0; k < n; ++k) x0y += d.slope_at(k) * y[k];
    out[0] = x0y;

    double prefix = 0.0;
    for (Index j = 1; j < n; ++j) {
        prefix += y[j - 1];
        out[j] = prefix * (d.u[j] - d.l[j]);
    }
    return out;
}

GramProvider::GramProvider(StandardizedDesign design, GramMode mode,
                           std::size_t max_cached_columns)
    : design_(std::move(design)), mode_(mode),
      max_cached_columns_(max_cached_columns) {
    xy_ = fast_y_inner_products(design_);
    slope_column_.resize(design_.n);
    for (Index j = 0; j < design_.n; ++j) slope_column_[j] = gram_entry_unchecked(design_, j, 0);
    if (mode_ == GramMode::Cached) {
        slots_ = std::make_unique<std::atomic<const double*>[]>(design_.n);
        for (Index j = 0; j < design_.n; ++j) slots_[j].store(nullptr);
    }
}

GramProvider::~GramProvider() = default;

void GramProvider::prepare(Index j) const {
    if (mode_ != GramMode::Cached) return;
    if (slots_[j].load(std::memory_order_acquire)) return;

    std::lock_guard lock(fill_mutex_);
    if (slots_[j].load(std::memory_order_relaxed)) return;
    if (storage_.size() >= max_cached_columns_) return;

    auto col = std::make_unique<double[]>(design_.n);
    gram_column(design_, j, col.get());
    slots_[j].store(col.get(), std::memory_order_release);
    storage_.push_back(std::move(col));
}

std::size_t GramProvider::cached_columns() const {
    std::lock_guard lock(fill_mutex_);
    return storage_.size();
}

std::size_t GramProvider::cached_entries() const {
    return cached_columns() * design_.n;
}

}  // namespace l1af
