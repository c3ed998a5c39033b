#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "jump_hedge.hpp"
#include "ledger.hpp"
#include "levy_model.hpp"
#include "swap_hedge.hpp"

namespace levyhedge {

// Taylor coefficients C_i keyed by order.
using CoefficientMap = std::map<int, double>;

struct MinVarWeights {
    double stock_units = 0.0;
    double bank_cash = 0.0;
    std::optional<double> varswap_units;
    double swap_exposure = 0.0;  // the phi multiplying S^2 (dX)^2 in the swap leg
};

// phi = [f1 sigma + int x f2 nu(dx)] / [(sigma^2 + int x^2 nu(dx)) S]
inline double mvp_weight(double f1, double f2_integral_x, double jump_second_moment, double sigma, double spot) {
    const double den = (sigma * sigma + jump_second_moment) * spot;
    if (!(std::abs(den) > 0.0) || !std::isfinite(den)) throw DegenerateModelError("no variance to hedge against");
    return (f1 * sigma + f2_integral_x) / den;
}

namespace detail {

inline double accrual_or_throw(double rate, double dt) {
    if (rate <= 0.0) throw ZeroRateError("minimal-variance bank leg needs r > 0");
    return std::expm1(rate * dt);
}

inline void check_moments(const MomentVector& mv, int need) {
    if (mv.max_order() < need) throw UnsupportedOrderError("moments needed up to order " + std::to_string(need));
}

}  // namespace detail

// Bank and stock only, at most one jump per period.
inline MinVarWeights mvp_bank_stock(const CoefficientMap& c, double spot, const MomentVector& mv, double dt, double rate) {
    MinVarWeights w;
    double cash = 0.0, stock = 0.0;
    bool any = false;
    for (const auto& [i, ci] : c) {
        if (i < 2 || ci == 0.0) continue;
        any = true;
        detail::check_moments(mv, i + 1);
        cash += ci * std::pow(spot, i) * mv[i] * dt;
        stock += ci * std::pow(spot, i - 1) * mv[i + 1];
    }
    if (!any) return w;
    const double var = mv.sigma2 + mv[2];
    if (!(var > 0.0)) throw DegenerateModelError("sigma^2 + m_2 must be > 0");
    w.bank_cash = cash / detail::accrual_or_throw(rate, dt);
    w.stock_units = stock / var;
    return w;
}

enum class SwapWeighting {
    printed,    // phi = sum C_i S^{i-2} m_i / m_2, no stock
    projected,  // joint least-squares projection on stock and swap
};

namespace detail {

inline double swap_bank_bracket(double phi, double spot, const SwapSpec& swap, const RealizedHistory& history,
                                const MomentVector& mv, double dt) {
    const double a = swap.annualiser();
    return phi * spot * spot * (a * (swap.strike - history.sum(2) / a) + swap.unit_price * a / swap.notional - mv[2] * dt);
}

}  // namespace detail

// Bank, stock and a variance swap hedging the orders i >= 3.
inline MinVarWeights mvp_with_varswap(const CoefficientMap& c, double spot, const MomentVector& mv, double dt,
                                      double rate, const SwapSpec& swap, const RealizedHistory& history,
                                      SwapWeighting weighting = SwapWeighting::printed) {
    swap.validate();
    if (swap.order != 2) throw DomainError("minimal-variance swap leg must be a variance swap");
    if (swap.convention == ReturnConvention::log) throw ConventionError("log-return swaps cannot hedge price moves");
    MinVarWeights w;
    w.varswap_units = 0.0;
    bool any = false;
    for (const auto& [i, ci] : c)
        if (i >= 3 && ci != 0.0) any = true;
    if (!any) return w;
    if (!(mv[2] > 0.0)) throw NoJumpVarianceError("m_2 = 0: the variance swap carries no jump exposure");

    double expected = 0.0;
    double phi = 0.0, stock = 0.0;
    if (weighting == SwapWeighting::printed) {
        for (const auto& [i, ci] : c) {
            if (i < 3 || ci == 0.0) continue;
            detail::check_moments(mv, i);
            phi += ci * std::pow(spot, i - 2) * mv[i];
            expected += ci * std::pow(spot, i) * mv[i] * dt;
        }
        phi /= mv[2];
    } else {
        // Normal equations for a S dY^(1) + phi S^2 dY^(2) against sum C_i S^i dY^(i), per unit time.
        double b1 = 0.0, b2 = 0.0;
        for (const auto& [i, ci] : c) {
            if (i < 3 || ci == 0.0) continue;
            detail::check_moments(mv, i + 2);
            b1 += ci * std::pow(spot, i + 1) * mv[i + 1];
            b2 += ci * std::pow(spot, i + 2) * mv[i + 2];
            expected += ci * std::pow(spot, i) * mv[i] * dt;
        }
        detail::check_moments(mv, 4);
        const double a11 = spot * spot * (mv.sigma2 + mv[2]);
        const double a12 = std::pow(spot, 3) * mv[3];
        const double a22 = std::pow(spot, 4) * mv[4];
        const double det = a11 * a22 - a12 * a12;
        if (!(std::abs(det) > 1e-300)) throw DegenerateModelError("stock and swap increments are collinear");
        stock = (b1 * a22 - b2 * a12) / det;
        phi = (a11 * b2 - a12 * b1) / det;
    }
    w.swap_exposure = phi;
    w.stock_units = stock;
    w.varswap_units = phi * swap.annualiser() * spot * spot / swap.notional;
    w.bank_cash = (expected + detail::swap_bank_bracket(phi, spot, swap, history, mv, dt)) /
                  detail::accrual_or_throw(rate, dt);
    return w;
}

// General case.  phis[i] holds phi_extract(i, ...) (index j = 1..i).  The deterministic part uses
// C^(i); the Y^(1) integrand is held as stock and the higher ones are projected.
inline MinVarWeights mvp_general(const CoefficientMap& c, const std::map<int, std::vector<double>>& phis, double spot,
                                 const MomentVector& mv, double dt, double rate,
                                 const SwapSpec* swap = nullptr, const RealizedHistory* history = nullptr) {
    MinVarWeights w;
    const int first = swap ? 3 : 2;
    double expected = 0.0, stock = 0.0, phi = 0.0;
    bool any = false;
    for (const auto& [i, ci] : c) {
        if (i < first || ci == 0.0) continue;
        any = true;
        const auto it = phis.find(i);
        if (it == phis.end() || static_cast<int>(it->second.size()) <= i)
            throw DomainError("missing phi coefficients for order " + std::to_string(i));
        const auto& ph = it->second;
        expected += ci * std::pow(spot, i) * constant_term(i, mv, dt);
        if (!swap) {
            // f1 = phi_1 sigma, int x f2 nu = sum_j phi_j m_{j+1}
            double fx = 0.0;
            for (int j = 1; j <= i; ++j) {
                detail::check_moments(mv, j + 1);
                fx += ph[static_cast<std::size_t>(j)] * mv[j + 1];
            }
            stock += ci * mvp_weight(ph[1] * std::sqrt(mv.sigma2), fx, mv[2], std::sqrt(mv.sigma2), spot);
        } else {
            stock += ci * ph[1] / spot;
            for (int j = 2; j <= i; ++j) phi += ci * ph[static_cast<std::size_t>(j)] * mv[j] / (spot * spot);
        }
    }
    if (!any) {
        if (swap) w.varswap_units = 0.0;
        return w;
    }
    const double acc = detail::accrual_or_throw(rate, dt);
    if (swap) {
        if (!history) throw DomainError("swap leg needs the realised history");
        if (!(mv[2] > 0.0)) throw NoJumpVarianceError("m_2 = 0: the variance swap carries no jump exposure");
        phi /= mv[2];
        w.swap_exposure = phi;
        w.varswap_units = phi * swap->annualiser() * spot * spot / swap->notional;
        expected += detail::swap_bank_bracket(phi, spot, *swap, *history, mv, dt);
    }
    w.stock_units = stock;
    w.bank_cash = expected / acc;
    return w;
}

inline HedgeLedger to_ledger(const MinVarWeights& w, const SwapSpec* swap = nullptr) {
    HedgeLedger f;
    f.bank_cash = w.bank_cash;
    f.stock_units = w.stock_units;
    if (w.varswap_units && swap && *w.varswap_units != 0.0)
        f.add_holding({AssetKind::variance_swap, 2, {}}, *w.varswap_units, swap->unit_price);
    return f;
}

}  // namespace levyhedge
