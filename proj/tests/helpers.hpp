#pragma once

#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "l1af/trace.hpp"

namespace l1af::testing {

/// Noiseless piecewise-linear trace: slope * k plus unit steps scaled by height.
inline std::vector<double> step_signal(std::size_t n, double slope,
                                       const std::vector<std::pair<Index, double>>& steps,
                                       double offset = 0.0) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        double v = offset + slope * static_cast<double>(k);
        for (const auto& [pos, h] : steps) {
            if (k >= pos) v += h;
        }
        y[k] = v;
    }
    return y;
}

/// Random slope, a few random steps, Gaussian noise.
inline std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n,
                                         std::size_t max_steps, double noise) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pos(1, n - 1);
    std::uniform_int_distribution<std::size_t> count(0, max_steps);
    std::normal_distribution<double> gauss(0.0, noise);
    std::vector<std::pair<Index, double>> steps;
    const std::size_t c = count(rng);
    for (std::size_t s = 0; s < c; ++s) steps.emplace_back(pos(rng), unit(rng));
    auto y = step_signal(n, 0.01 * unit(rng), steps, unit(rng));
    for (auto& v : y) v += gauss(rng);
    return y;
}

inline Eigen::VectorXd to_dense(const SparseCoefs& beta, std::size_t n) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& [j, v] : beta) out[static_cast<Eigen::Index>(j)] = v;
    return out;
}

inline SparseCoefs to_sparse(const Eigen::VectorXd& beta) {
    SparseCoefs out;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != 0.0) out[static_cast<Index>(j)] = beta[j];
    }
    return out;
}

inline std::vector<Index> support_of(const SparseCoefs& beta) {
    std::vector<Index> out;
    for (const auto& [j, v] : beta) {
        if (j > 0 && v != 0.0) out.push_back(j);
    }
    return out;
}

}  // namespace l1af::testing
