#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace levyhedge {

struct NeutralitySolution {
    std::vector<double> weights;
    std::vector<double> residuals;  // per order, after the solve
    double condition = 0.0;         // of the row-equilibrated matrix
};

inline constexpr double max_neutrality_condition = 1e12;

// Weights w with D^k F + sum_i w_i D^k F_i = 0 for k = 1..n.  target[k-1] = D^k F;
// instruments[i][k-1] = D^k F_i.  Rows are scaled to unit max-norm before the
// condition check, since price derivatives of different orders differ by powers of S.
inline NeutralitySolution solve_neutrality(const std::vector<double>& target,
                                           const std::vector<std::vector<double>>& instruments) {
    const auto n = static_cast<Eigen::Index>(instruments.size());
    if (n == 0) throw DimensionError("no hedging instruments");
    if (static_cast<Eigen::Index>(target.size()) < n) throw DimensionError("target ladder shorter than instrument count");
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& ladder = instruments[static_cast<std::size_t>(i)];
            if (static_cast<Eigen::Index>(ladder.size()) < n)
                throw DimensionError("instrument " + std::to_string(i) + " ladder shorter than " + std::to_string(n));
            a(k, i) = ladder[static_cast<std::size_t>(k)];
        }
        rhs(k) = -target[static_cast<std::size_t>(k)];
    }
    Eigen::VectorXd scale(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double m = a.row(k).cwiseAbs().maxCoeff();
        // An all-zero row cannot be neutralised unless the target is zero there too.
        scale(k) = m > 0.0 ? 1.0 / m : 1.0;
    }
    const Eigen::MatrixXd as = scale.asDiagonal() * a;
    const Eigen::VectorXd bs = scale.asDiagonal() * rhs;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(as);
    const auto sv = svd.singularValues();
    const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : INFINITY;
    if (!(cond <= max_neutrality_condition)) {
        // First order whose row adds no new direction.
        int deficient = static_cast<int>(n);
        for (Eigen::Index k = 1; k <= n; ++k) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(as.topRows(k));
            qr.setThreshold(1e-12);
            if (qr.rank() < k) {
                deficient = static_cast<int>(k);
                break;
            }
        }
        throw UnhedgeableError("instrument set cannot neutralise order " + std::to_string(deficient) +
                                   " (condition number " + std::to_string(cond) + ")",
                               deficient);
    }
    const Eigen::VectorXd w = as.colPivHouseholderQr().solve(bs);
    NeutralitySolution out;
    out.condition = cond;
    for (Eigen::Index i = 0; i < n; ++i) out.weights.push_back(w(i));
    const Eigen::VectorXd res = a * w - rhs;
    for (Eigen::Index k = 0; k < n; ++k) {
        out.residuals.push_back(res(k));
        const double row_norm = std::max(a.row(k).norm() * w.norm(), std::abs(rhs(k)));
        if (std::abs(res(k)) > 1e-8 * std::max(row_norm, 1e-300))
            throw UnhedgeableError("order " + std::to_string(k + 1) + " residual too large after solve", static_cast<int>(k + 1));
    }
    return out;
}

}  // namespace levyhedge
