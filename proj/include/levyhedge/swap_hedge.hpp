#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "errors.hpp"
#include "ledger.hpp"
#include "taylor.hpp"

namespace levyhedge {

enum class ReturnConvention { actual, log };

// Forward on the annualised realised k-th moment over sampling points
// s_i = maturity - (n - i) * interval, i = 1..n.
struct SwapSpec {
    int order = 2;
    double interval = 0.0;  // spacing of the sampling points
    int points = 3;         // n
    double maturity = 0.0;  // s_n
    double strike = 0.0;
    double unit_price = 0.0;
    double notional = 1.0;  // payoff per unit = notional * (realised - strike)
    ReturnConvention convention = ReturnConvention::actual;

    double annualiser() const { return interval * (points - 2); }  // n - 2 returns span the window

    void validate() const {
        if (order < 2) throw DomainError("swap order must be >= 2");
        if (!(interval > 0.0)) throw DomainError("sampling interval must be > 0");
        if (points < 3) throw DomainError("a swap needs at least 3 sampling points");
        if (!(notional > 0.0)) throw DomainError("notional must be > 0");
    }
};

// Sums over the n-2 returns already fixed at time t, one per power.
struct RealizedHistory {
    std::map<int, double> power_sums;

    double sum(int k) const {
        auto it = power_sums.find(k);
        return it == power_sums.end() ? 0.0 : it->second;
    }

    static RealizedHistory from_prices(const std::vector<double>& prices, const std::vector<int>& powers,
                                       ReturnConvention conv = ReturnConvention::actual) {
        RealizedHistory h;
        for (int k : powers) {
            double s = 0.0;
            for (std::size_t i = 1; i < prices.size(); ++i) {
                const double r = conv == ReturnConvention::actual ? (prices[i] - prices[i - 1]) / prices[i - 1]
                                                                  : std::log(prices[i] / prices[i - 1]);
                s += std::pow(r, k);
            }
            h.power_sums[k] = s;
        }
        return h;
    }
};

inline double period_return(double s_prev, double s_next, ReturnConvention conv) {
    return conv == ReturnConvention::actual ? (s_next - s_prev) / s_prev : std::log(s_next / s_prev);
}

inline double realized_moment(double history_sum, double new_return, int k, double interval, int points) {
    if (points < 3 || !(interval > 0.0)) throw DomainError("need interval > 0 and at least 3 points");
    return (std::pow(new_return, k) + history_sum) / (interval * (points - 2));
}

inline void check_alignment(const SwapSpec& swap, const HedgeScenario& sc) {
    const double tol = 1e-9 * std::max(1.0, std::abs(sc.t + sc.delta_t));
    if (std::abs(swap.maturity - (sc.t + sc.delta_t)) > tol || std::abs(swap.interval - sc.delta_t) > tol)
        throw AlignmentError("swap's last two sampling points must be t and t + delta_t");
}

// Value at maturity of one unit of the swap when the final return is dS / S_t.
inline double swap_exit_price(const SwapSpec& swap, const RealizedHistory& history, double spot, double delta_s) {
    const double r = period_return(spot, spot + delta_s, swap.convention);
    return swap.notional *
           (realized_moment(history.sum(swap.order), r, swap.order, swap.interval, swap.points) - swap.strike);
}

// C_k units of the basket that turns a k-th moment swap into C_k (dS)^k over [t, t + dt].
inline HedgeLedger moment_swap_basket(double coefficient, const HedgeScenario& sc, const SwapSpec& swap,
                                      const RealizedHistory& history) {
    swap.validate();
    if (swap.convention == ReturnConvention::log)
        throw ConventionError("log-return swaps cannot replicate powers of the price move");
    check_alignment(swap, sc);
    HedgeLedger f;
    if (coefficient == 0.0) return f;
    if (sc.rate <= 0.0) throw ZeroRateError("swap basket bank leg needs r > 0");
    const int k = swap.order;
    const double sk = std::pow(sc.spot, k);
    const double a = swap.annualiser();
    const double units = a * sk / swap.notional;
    const double realised_so_far = history.sum(k) / a;
    const double cash = (sk * a * (swap.strike - realised_so_far) + units * swap.unit_price) / sc.accrual();
    f.bank_cash = coefficient * cash;
    f.add_holding({k == 2 ? AssetKind::variance_swap : AssetKind::moment_swap, k, {}}, coefficient * units,
                  swap.unit_price);
    return f;
}

inline HedgeLedger variance_swap_basket(double coefficient, const HedgeScenario& sc, const SwapSpec& swap,
                                        const RealizedHistory& history) {
    if (swap.order != 2) throw DomainError("variance swap must have order 2");
    return moment_swap_basket(coefficient, sc, swap, history);
}

}  // namespace levyhedge
