#include "l1af/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace l1af::oracle {

namespace {

double soft(double z, double a) {
    if (std::abs(z) <= a) return 0.0;
    return z > 0 ? z - a : z + a;
}

void check_size(std::size_t n) {
    if (n < 3) throw std::invalid_argument("dense oracle needs N >= 3");
    if (n > kMaxDenseSize) {
        throw std::invalid_argument("dense oracle limited to N <= " +
                                    std::to_string(kMaxDenseSize));
    }
}

}  // namespace

Eigen::MatrixXd raw_design(std::size_t n) {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index k = 0; k < N; ++k) {
        x(k, 0) = static_cast<double>(k + 1);
        for (Eigen::Index j = 1; j <= k; ++j) x(k, j) = 1.0;
    }
    return x;
}

DenseDesign materialize(std::size_t n) {
    check_size(n);
    DenseDesign out;
    out.matrix = raw_design(n);
    const double nd = static_cast<double>(n);
    for (Eigen::Index j = 0; j < out.matrix.cols(); ++j) {
        auto col = out.matrix.col(j);
        const double mean = col.sum() / nd;
        col.array() -= mean;
        const double sd = std::sqrt(col.squaredNorm() / nd);
        col /= sd;
    }
    return out;
}

DenseDesign materialize(const Trace& trace) {
    DenseDesign out = materialize(trace.size());
    const auto& y = trace.samples();
    out.y_centered = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    out.y_centered.array() -= out.y_centered.mean();
    return out;
}

Eigen::MatrixXd brute_gram(const DenseDesign& dense) {
    return dense.matrix.transpose() * dense.matrix;
}

Eigen::VectorXd brute_xy(const DenseDesign& dense) {
    return dense.matrix.transpose() * dense.y_centered;
}

double dense_objective(const DenseDesign& dense, const Eigen::VectorXd& beta,
                       const std::vector<double>& alphas) {
    const Eigen::VectorXd r = dense.y_centered - dense.matrix * beta;
    double penalty = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) penalty += alphas[static_cast<std::size_t>(j)] * std::abs(beta[j]);
    }
    return 0.5 * r.squaredNorm() + penalty;
}

double dense_kkt_violation(const DenseDesign& dense, const Eigen::VectorXd& beta,
                           const std::vector<double>& alphas) {
    const Eigen::VectorXd corr = dense.matrix.transpose() * (dense.y_centered - dense.matrix * beta);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double a = alphas[static_cast<std::size_t>(j)];
        double v = 0.0;
        if (beta[j] != 0.0) {
            v = std::abs(corr[j] - a * (beta[j] > 0 ? 1.0 : -1.0));
        } else if (std::isfinite(a)) {
            v = std::max(0.0, std::abs(corr[j]) - a);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

double power_iteration(const Eigen::MatrixXd& gram, int iterations) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(gram.rows()).normalized();
    double eig = 0.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd w = gram * v;
        const double next = v.dot(w);
        v = w.normalized();
        if (std::abs(next - eig) <= 1e-15 * std::abs(next)) {
            eig = next;
            break;
        }
        eig = next;
    }
    return eig;
}

IstaResult ista_solve(const DenseDesign& dense, const std::vector<double>& alphas, double tol,
                      int max_iterations) {
    const Eigen::MatrixXd gram = brute_gram(dense);
    const Eigen::VectorXd xy = brute_xy(dense);
    const double step = 1.0 / (1.01 * power_iteration(gram));
    const auto p = gram.rows();
    const double scale = std::max(1.0, xy.cwiseAbs().maxCoeff());

    auto prox = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double a = alphas[static_cast<std::size_t>(j)];
            out[j] = std::isfinite(a) ? soft(v[j], step * a) : 0.0;
        }
        return out;
    };
    auto smooth = [&](const Eigen::VectorXd& b) {
        return 0.5 * b.dot(gram * b) - b.dot(xy);
    };
    auto full = [&](const Eigen::VectorXd& b) {
        double pen = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (b[j] != 0.0) pen += alphas[static_cast<std::size_t>(j)] * std::abs(b[j]);
        }
        return smooth(b) + pen;
    };

    IstaResult out;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd momentum_point = beta;
    double t = 1.0;
    double f_prev = full(beta);
    for (int it = 1; it <= max_iterations; ++it) {
        const Eigen::VectorXd grad = gram * momentum_point - xy;
        Eigen::VectorXd next = prox(momentum_point - step * grad);
        const double f_next = full(next);
        if (f_next > f_prev) {
            // Restart: fall back to a plain proximal step from beta.
            t = 1.0;
            next = prox(beta - step * (gram * beta - xy));
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        momentum_point = next + ((t - 1.0) / t_next) * (next - beta);
        beta = std::move(next);
        t = t_next;
        f_prev = full(beta);

        const Eigen::VectorXd mapped = prox(beta - step * (gram * beta - xy));
        out.stationarity = (beta - mapped).cwiseAbs().maxCoeff() / step;
        out.iterations = it;
        if (out.stationarity <= tol * scale) {
            out.converged = true;
            break;
        }
    }
    out.beta = beta;
    out.objective = dense_objective(dense, beta, alphas);
    return out;
}

Eigen::VectorXd naive_cd(const DenseDesign& dense, const std::vector<double>& alphas, double tol,
                         int max_sweeps, const DenseObserver& observer) {
    const auto& x = dense.matrix;
    const auto p = x.cols();
    const double n = static_cast<double>(x.rows());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd r = dense.y_centered;

    auto update = [&](Eigen::Index j) {
        const double a = alphas[static_cast<std::size_t>(j)];
        if (!std::isfinite(a)) return 0.0;
        const double z = x.col(j).dot(r) + n * beta[j];
        const double next = soft(z, a) / n;
        const double delta = next - beta[j];
        if (delta != 0.0) {
            r -= delta * x.col(j);
            beta[j] = next;
        }
        return std::abs(delta);
    };

    int sweeps = 0;
    while (sweeps < max_sweeps) {
        double change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, update(j));
        ++sweeps;
        if (observer) observer(sweeps, beta);
        if (change < tol) break;
        while (sweeps < max_sweeps) {
            std::vector<Eigen::Index> active;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (beta[j] != 0.0) active.push_back(j);
            }
            change = 0.0;
            for (const auto j : active) change = std::max(change, update(j));
            ++sweeps;
            if (observer) observer(sweeps, beta);
            if (change < tol) break;
        }
    }
    return beta;
}

Eigen::VectorXd dense_ols(const Eigen::MatrixXd& columns, const Eigen::VectorXd& y) {
    Eigen::MatrixXd a(columns.rows(), columns.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(columns.cols()) = columns;
    return a.completeOrthogonalDecomposition().solve(y);
}

std::vector<SupportScore> enumerate_supports(const std::vector<double>& y, std::size_t max_size) {
    const std::size_t n = y.size();
    check_size(n);
    const Eigen::MatrixXd raw = raw_design(n);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    const double nd = static_cast<double>(n);

    std::vector<SupportScore> out;
    std::vector<Index> current;
    auto score = [&] {
        Eigen::MatrixXd cols(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(current.size() + 1));
        cols.col(0) = raw.col(0);
        for (std::size_t q = 0; q < current.size(); ++q) {
            cols.col(static_cast<Eigen::Index>(q + 1)) = raw.col(static_cast<Eigen::Index>(current[q]));
        }
        const Eigen::VectorXd coef = dense_ols(cols, yv);
        Eigen::MatrixXd with_icpt(cols.rows(), cols.cols() + 1);
        with_icpt.col(0).setOnes();
        with_icpt.rightCols(cols.cols()) = cols;
        const double rss = (yv - with_icpt * coef).squaredNorm();
        const double df = static_cast<double>(current.size() + 1);
        const double bic = rss > 0 ? nd * std::log(rss / nd) + df * std::log(nd)
                                   : -std::numeric_limits<double>::infinity();
        out.push_back({current, bic, rss});
    };
    std::function<void(Index)> recurse = [&](Index start) {
        score();
        if (current.size() == max_size) return;
        for (Index j = start; j < n; ++j) {
            current.push_back(j);
            recurse(j + 1);
            current.pop_back();
        }
    };
    recurse(1);
    std::stable_sort(out.begin(), out.end(),
                     [](const SupportScore& a, const SupportScore& b) { return a.bic < b.bic; });
    return out;
}

}  // namespace l1af::oracle
