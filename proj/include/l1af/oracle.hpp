#pragma once

// Brute-force reference implementations for verification only. Nothing here
// calls the closed-form kernels: columns are standardized numerically from
// the explicit 0/1 and ramp matrix.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "l1af/trace.hpp"

namespace l1af::oracle {

inline constexpr std::size_t kMaxDenseSize = 200;

struct DenseDesign {
    Eigen::MatrixXd matrix;      // standardized N x N design
    Eigen::VectorXd y_centered;  // empty when built without a trace
};

/// Explicit standardized design of size n (throws std::invalid_argument for
/// n > kMaxDenseSize or n < 3).
DenseDesign materialize(std::size_t n);
DenseDesign materialize(const Trace& trace);

/// Unstandardized design: column 0 is 1..N, column j >= 1 is the unit step
/// starting at row j.
Eigen::MatrixXd raw_design(std::size_t n);

Eigen::MatrixXd brute_gram(const DenseDesign& dense);
Eigen::VectorXd brute_xy(const DenseDesign& dense);

double dense_objective(const DenseDesign& dense, const Eigen::VectorXd& beta,
                       const std::vector<double>& alphas);

/// Same KKT residual definition as the production check, from X^T r.
double dense_kkt_violation(const DenseDesign& dense, const Eigen::VectorXd& beta,
                           const std::vector<double>& alphas);

/// Largest eigenvalue of X^T X by power iteration.
double power_iteration(const Eigen::MatrixXd& gram, int iterations = 5000);

struct IstaResult {
    Eigen::VectorXd beta;
    double objective = 0.0;
    double stationarity = 0.0;
    int iterations = 0;
    bool converged = false;
};

/**
 * Proximal gradient on (1/2)||y - X b||^2 + sum alpha_j |b_j| with step
 * 1/(1.01 L), Nesterov momentum and function-value restart. Stops when the
 * gradient-mapping sup-norm falls below tol * max(1, ||X^T y||_inf).
 * Infinite alphas pin the coordinate at zero.
 */
IstaResult ista_solve(const DenseDesign& dense, const std::vector<double>& alphas,
                      double tol = 1e-12, int max_iterations = 2'000'000);

using DenseObserver = std::function<void(int, const Eigen::VectorXd&)>;

/// Naive cyclic coordinate descent with explicit residual updates, using the
/// same sweep schedule as the production solver (full sweep, then active-set
/// sweeps until the change drops below tol).
Eigen::VectorXd naive_cd(const DenseDesign& dense, const std::vector<double>& alphas,
                         double tol, int max_sweeps, const DenseObserver& observer = {});

/// Least squares with intercept via complete orthogonal decomposition.
/// Returns [intercept, coefficients...].
Eigen::VectorXd dense_ols(const Eigen::MatrixXd& columns, const Eigen::VectorXd& y);

struct SupportScore {
    std::vector<Index> support;
    double bic = 0.0;
    double rss = 0.0;
};

/// Every step support of size <= max_size, each refit by OLS with intercept
/// and slope, scored with n ln(rss/n) + (|S| + 1) ln n. Sorted by BIC.
std::vector<SupportScore> enumerate_supports(const std::vector<double>& y, std::size_t max_size);

}  // namespace l1af::oracle
