#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "ledger.hpp"
#include "pricer.hpp"

namespace levyhedge {

struct HedgeScenario {
    double spot = 0.0;     // S_t
    double delta_s = 0.0;  // realised move over the period, used only for evaluation
    double delta_t = 0.0;
    double rate = 0.0;
    OptionSpec option;
    double alpha_tol = 0.01;
    double t = 0.0;  // calendar time of the hedge start

    void validate() const {
        if (!(delta_t > 0.0)) throw DomainError("delta_t must be > 0");
        if (!(alpha_tol > 0.0)) throw DomainError("alpha_tol must be > 0");
        if (!(spot > 0.0)) throw DomainError("spot must be > 0");
        if (!(spot + delta_s > 0.0)) throw DomainError("spot + delta_s must be > 0");
    }

    double accrual() const { return std::expm1(rate * delta_t); }
};

// D1 F dt + sum_{i<=p} D2^i F (dS)^i / i!
inline double taylor_approx(const DerivativeLadder& ladder, const HedgeScenario& sc, int p) {
    if (p < 0 || p > ladder.size())
        throw OrderError("truncation " + std::to_string(p) + " outside ladder of length " + std::to_string(ladder.size()));
    double v = ladder.d1 * sc.delta_t;
    double power = 1.0;
    for (int i = 1; i <= p; ++i) {
        power *= sc.delta_s / i;
        v += ladder[i] * power;
    }
    return v;
}

struct QResult {
    int q = 0;
    double error = 0.0;
    std::vector<double> errors;  // |exact - approx(p)| for p = 1..ladder length
};

// Smallest p >= 1 whose Taylor sum lands within alpha_tol of the repriced change.
inline QResult find_q(const DerivativeLadder& ladder, const HedgeScenario& sc, double exact_change) {
    QResult r;
    int best = 0;
    double best_err = INFINITY;
    for (int p = 1; p <= ladder.size(); ++p) {
        const double e = std::abs(exact_change - taylor_approx(ladder, sc, p));
        r.errors.push_back(e);
        if (e < best_err) {
            best_err = e;
            best = p;
        }
        if (e <= sc.alpha_tol && r.q == 0) {
            r.q = p;
            r.error = e;
        }
    }
    if (r.q == 0) throw NeedsHigherOrderError(best_err, best);
    return r;
}

enum class ZeroRatePolicy { error, hold_as_cash };

// Deposit whose interest over the period equals sum_i D1^i F (dt)^i / i!.
inline double bank_term(std::span<const double> d1_series, const HedgeScenario& sc,
                        ZeroRatePolicy policy = ZeroRatePolicy::error) {
    if (sc.rate < 0.0) throw DomainError("negative rates are not supported");
    if (!(sc.delta_t > 0.0)) throw DomainError("delta_t must be > 0");
    double target = 0.0, power = 1.0;
    for (std::size_t i = 0; i < d1_series.size(); ++i) {
        power *= sc.delta_t / static_cast<double>(i + 1);
        target += d1_series[i] * power;
    }
    if (sc.rate == 0.0) {
        if (policy == ZeroRatePolicy::hold_as_cash) return target;
        if (target == 0.0) return 0.0;
        throw ZeroRateError("bank deposit undefined at zero rate");
    }
    return target / sc.accrual();
}

// Supplies the fragment (already scaled by C_i) that replicates C_i (dS)^i.
using BasketProvider = std::function<std::optional<HedgeLedger>(int i, double coefficient)>;

inline HedgeLedger assemble_ledger(const DerivativeLadder& ladder, const HedgeScenario& sc, int q,
                                   const BasketProvider& provider, const std::string& basket_name = "basket",
                                   ZeroRatePolicy policy = ZeroRatePolicy::error) {
    if (q < 1 || q > ladder.size()) throw OrderError("q outside ladder");
    HedgeLedger ledger;
    const double d1[] = {ladder.d1};
    ledger.bank_cash = bank_term(d1, sc, policy);
    ledger.stock_units = ladder[1];
    ledger.term_positions[1] = {ladder[1], "stock"};
    for (int i = 2; i <= q; ++i) {
        const double c = ladder.coefficient(i);
        auto fragment = provider ? provider(i, c) : std::nullopt;
        if (!fragment) throw IncompleteMarketError(i);
        ledger.merge(*fragment);
        ledger.term_positions[i] = {c, basket_name};
    }
    return ledger;
}

}  // namespace levyhedge
