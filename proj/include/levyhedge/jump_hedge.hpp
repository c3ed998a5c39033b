#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "errors.hpp"
#include "ledger.hpp"
#include "levy_model.hpp"
#include "simulation.hpp"
#include "stencil.hpp"
#include "taylor.hpp"

namespace levyhedge {

using Tuple = std::vector<int>;

inline constexpr int default_chaos_order = 12;

namespace detail {

inline void check_chaos_order(int k, int max_order) {
    if (k < 1) throw DomainError("order must be >= 1");
    if (k > max_order)
        throw BudgetExceededError("order " + std::to_string(k) + " above configured maximum " + std::to_string(max_order),
                                  max_order);
}

inline void partitions_rec(int left, int cap, Tuple& cur, std::vector<Tuple>& out) {
    if (left == 0) {
        out.push_back(cur);
        return;
    }
    for (int v = std::min(left, cap); v >= 1; --v) {
        cur.push_back(v);
        partitions_rec(left - v, v, cur, out);
        cur.pop_back();
    }
}

inline void compositions_rec(int left, Tuple& cur, std::vector<Tuple>& out) {
    for (int v = 1; v <= left; ++v) {
        cur.push_back(v);
        out.push_back(cur);
        compositions_rec(left - v, cur, out);
        cur.pop_back();
    }
}

template <class T>
T from_integer(const BigInt& b) {
    if constexpr (std::is_floating_point_v<T>) return b.template convert_to<T>();
    else return T(b);
}

}  // namespace detail

// Integer partitions of k, parts in non-increasing order.
inline std::vector<Tuple> enumerate_partitions(int k, int max_order = default_chaos_order) {
    detail::check_chaos_order(k, max_order);
    std::vector<Tuple> out;
    Tuple cur;
    detail::partitions_rec(k, k, cur, out);
    return out;
}

// Ordered tuples of positive integers with sum <= k.
inline std::vector<Tuple> enumerate_compositions(int k, int max_order = default_chaos_order) {
    detail::check_chaos_order(k, max_order);
    std::vector<Tuple> out;
    Tuple cur;
    detail::compositions_rec(k, cur, out);
    return out;
}

inline BigInt multinomial(std::span<const int> parts) {
    int total = 0;
    BigInt den = 1;
    for (int p : parts) {
        if (p < 0) throw DomainError("negative multinomial part");
        total += p;
        den *= detail::factorial(p);
    }
    return detail::factorial(total) / den;
}

// k! / (prod i_q! prod p_r!): the multinomial of the parts times the multinomial of their
// multiplicities divided by l!.
inline BigInt partition_weight(const Tuple& parts) {
    BigInt w = multinomial(parts);
    std::map<int, int> mult;
    for (int v : parts) ++mult[v];
    for (const auto& [v, count] : mult) w /= detail::factorial(count);
    return w;
}

// The deterministic part of (X_{t+dt} - X_t)^k as a polynomial in dt.
template <class T>
struct CoeffC {
    int k = 0;
    std::vector<T> poly;  // poly[l] multiplies dt^l

    T operator()(const T& dt) const {
        T v = 0;
        for (std::size_t l = poly.size(); l-- > 0;) v = v * dt + poly[l];
        return v;
    }
};

// mprime[q] = m'_q for q = 1..k (index 0 ignored).
template <class T>
CoeffC<T> constant_term_poly(int k, const std::vector<T>& mprime, int max_order = 64) {
    CoeffC<T> c;
    c.k = k;
    if (k == 0) {
        c.poly = {T(1)};
        return c;
    }
    if (static_cast<int>(mprime.size()) <= k) throw UnsupportedOrderError("moments needed up to order " + std::to_string(k));
    c.poly.assign(static_cast<std::size_t>(k) + 1, T(0));
    for (const auto& part : enumerate_partitions(k, max_order)) {
        T term = detail::from_integer<T>(partition_weight(part));
        for (int q : part) term *= mprime[static_cast<std::size_t>(q)];
        c.poly[part.size()] += term;
    }
    return c;
}

inline std::vector<double> primed_moments(const MomentVector& mv, int k) {
    std::vector<double> out(static_cast<std::size_t>(k) + 1, 0.0);
    for (int q = 1; q <= k; ++q) out[static_cast<std::size_t>(q)] = mv.prime(q);
    return out;
}

inline double constant_term(int k, const MomentVector& mv, double dt) {
    if (k == 0) return 1.0;
    return constant_term_poly<double>(k, primed_moments(mv, k))(dt);
}

// Coefficient of the iterated integral over `tuple` in (X_{t+dt} - X_t)^k.
inline double pi_coefficient(const Tuple& tuple, int k, const MomentVector& mv, double dt) {
    int used = 0;
    for (int i : tuple) used += i;
    const int n = k - used;
    if (n < 0) throw DomainError("tuple sum exceeds k");
    Tuple parts = tuple;
    parts.push_back(n);
    return multinomial(parts).convert_to<double>() * constant_term(n, mv, dt);
}

// Iterated integral of the compensated power-jump processes over (0, dt] for a pure-jump,
// finite-activity path: the innermost integrator is Y^(tuple[0]), the outermost Y^(tuple.back()).
// Between jumps each Y^(i) drifts at -m_i, so every level is a polynomial in time.
inline double iterated_jump_integral(const Tuple& tuple, const std::vector<Jump>& jumps, const MomentVector& mv,
                                     double dt) {
    if (mv.sigma2 > 0.0) throw DomainError("exact iterated integrals need a pure-jump path");
    const std::size_t depth = tuple.size();
    std::vector<double> level(depth + 1, 0.0);
    level[0] = 1.0;
    std::vector<double> rate(depth + 1, 0.0);
    for (std::size_t m = 1; m <= depth; ++m) rate[m] = mv[tuple[m - 1]];

    auto advance = [&](double tau) {
        if (tau <= 0.0) return;
        // poly[m] holds level m as a polynomial in the elapsed time.
        std::vector<std::vector<double>> poly(depth + 1);
        poly[0] = {1.0};
        for (std::size_t m = 1; m <= depth; ++m) {
            auto& p = poly[m];
            p.assign(poly[m - 1].size() + 1, 0.0);
            p[0] = level[m];
            for (std::size_t d = 0; d < poly[m - 1].size(); ++d) p[d + 1] -= rate[m] * poly[m - 1][d] / (d + 1.0);
        }
        for (std::size_t m = 1; m <= depth; ++m) {
            double v = 0.0;
            for (std::size_t d = poly[m].size(); d-- > 0;) v = v * tau + poly[m][d];
            level[m] = v;
        }
    };

    double now = 0.0;
    for (const auto& j : jumps) {
        if (j.time <= 0.0 || j.time > dt) throw DomainError("jump time outside (0, dt]");
        advance(j.time - now);
        now = j.time;
        for (std::size_t m = depth; m >= 1; --m) level[m] += level[m - 1] * std::pow(j.size, tuple[m - 1]);
    }
    advance(dt - now);
    return level[depth];
}

// Left-endpoint integrands phi_j (j = 1..n) with
// (dS)^n ~ sum_j phi_j dY^(j) + S^n C^(n), for negligible dt.
inline std::vector<double> phi_extract(int n, const MomentVector& mv, double dt, double spot,
                                       int max_order = default_chaos_order) {
    detail::check_chaos_order(n, max_order);
    std::vector<double> phi(static_cast<std::size_t>(n) + 1, 0.0);
    const double sn = std::pow(spot, n);
    for (int j = 1; j <= n; ++j) phi[static_cast<std::size_t>(j)] = sn * pi_coefficient({j}, n, mv, dt);
    return phi;
}

// Values of the power-jump assets T^(k) held at the hedge start.
struct PathState {
    double t = 0.0;
    std::map<int, double> power_asset;

    double value(int k) const {
        auto it = power_asset.find(k);
        return it == power_asset.end() ? 0.0 : it->second;
    }
};

// T^(k) at t + dt given the power sum of the period's jumps.
inline double power_asset_exit(const PathState& st, int k, double jump_power_sum, double m_k, double rate, double dt) {
    const double y_start = std::exp(-rate * st.t) * st.value(k);
    return std::exp(rate * (st.t + dt)) * (y_start + jump_power_sum - m_k * dt);
}

struct RegimeCheck {
    std::size_t jumps = 0;
    bool diffusion = false;
    bool one_jump() const { return jumps <= 1 && !diffusion; }
};

inline RegimeCheck check_regime(const std::vector<Jump>& period_jumps, const LevyModel& model) {
    return {period_jumps.size(), model.brownian_sigma > 0.0};
}

// At most one jump and negligible dt: (dS)^i = S^i [e^{-r(t+dt)} T_{t+dt} - e^{-rt} T_t + m_i dt].
inline HedgeLedger pja_basket_simple(double coefficient, const HedgeScenario& sc, int i, const PathState& st,
                                     const MomentVector& mv) {
    HedgeLedger f;
    if (coefficient == 0.0) return f;
    if (sc.rate <= 0.0) throw ZeroRateError("power-jump basket bank leg needs r > 0");
    const double si = std::pow(sc.spot, i);
    const double t0 = st.t, dt = sc.delta_t, r = sc.rate;
    const double tt = st.value(i);
    const double units = si * std::exp(-r * (t0 + dt));
    const double cash = si * (std::exp(-r * (t0 + dt)) * tt - std::exp(-r * t0) * tt + mv[i] * dt) / sc.accrual();
    f.bank_cash = coefficient * cash;
    f.add_holding({AssetKind::power_jump_asset, i, {}}, coefficient * units, tt);
    return f;
}

// sigma = 0, one jump, dt not negligible.  The price-move term of the bank formula is held as
// stock instead, since dS is unknown when the position is opened.  Summing the j-expansion over j
// first gives S^i C(i,k) e^{k b dt} g^{i-k} per (dX)^k, g = e^{b dt} - 1, which avoids the
// alternating binomial sums that cancel badly at higher i.
inline HedgeLedger pja_basket_general(double coefficient, const HedgeScenario& sc, int i, const PathState& st,
                                      const MomentVector& mv, double drift_b) {
    HedgeLedger f;
    if (coefficient == 0.0) return f;
    if (sc.rate <= 0.0) throw ZeroRateError("power-jump basket bank leg needs r > 0");
    if (i < 1) throw DomainError("power-jump basket order must be >= 1");
    const double s = sc.spot, r = sc.rate, t0 = st.t, dt = sc.delta_t;
    const double g = std::expm1(drift_b * dt);
    const double disc_end = std::exp(-r * (t0 + dt)), disc_start = std::exp(-r * t0);
    const double si = std::pow(s, i);
    // dX = e^{-b dt} dS / S - (1 - e^{-b dt}), so the k = 1 term is stock plus a constant.
    double cash = (1 - i) * si * std::pow(g, i);
    for (int k = 2; k <= i; ++k) {
        const double ak = si * multinomial(std::vector<int>{k, i - k}).convert_to<double>() *
                          std::exp(k * drift_b * dt) * std::pow(g, i - k);
        const double tk = st.value(k);
        cash += ak * (disc_end * tk - disc_start * tk + mv[k] * dt);
        if (ak != 0.0) f.add_holding({AssetKind::power_jump_asset, k, {}}, coefficient * ak * disc_end, tk);
    }
    f.bank_cash = coefficient * cash / sc.accrual();
    f.stock_units = coefficient * i * std::pow(s, i - 1) * std::pow(g, i - 1);
    return f;
}

// Order-2 case written out: S^2 e^{2b dt} e^{-r(t+dt)} units of T^(2) and 2 S (e^{b dt} - 1) stock.
inline HedgeLedger pja_basket_order2(double coefficient, const HedgeScenario& sc, const PathState& st,
                                     const MomentVector& mv, double drift_b) {
    HedgeLedger f;
    if (coefficient == 0.0) return f;
    if (sc.rate <= 0.0) throw ZeroRateError("power-jump basket bank leg needs r > 0");
    const double s = sc.spot, r = sc.rate, t0 = st.t, dt = sc.delta_t;
    const double g = std::expm1(drift_b * dt);  // e^{b dt} - 1
    const double e2 = std::exp(2.0 * drift_b * dt);
    const double tt = st.value(2);
    const double cash = s * s * e2 * std::exp(-r * (t0 + dt)) * tt - s * s * g * g +
                        s * s * e2 * (-std::exp(-r * t0) * tt + mv[2] * dt);
    f.bank_cash = coefficient * cash / sc.accrual();
    f.stock_units = coefficient * 2.0 * s * g;
    f.add_holding({AssetKind::power_jump_asset, 2, {}}, coefficient * s * s * e2 * std::exp(-r * (t0 + dt)), tt);
    return f;
}

// Negligible dt, any number of jumps: U_theta positions for every theta in I_i plus the constant.
inline HedgeLedger pji_basket(double coefficient, const HedgeScenario& sc, int i, const MomentVector& mv,
                              int max_order = default_chaos_order) {
    HedgeLedger f;
    if (coefficient == 0.0) return f;
    if (sc.rate <= 0.0) throw ZeroRateError("power-jump integral basket bank leg needs r > 0");
    const double si = std::pow(sc.spot, i);
    const double dt = sc.delta_t;
    std::vector<double> cterm(static_cast<std::size_t>(i) + 1);
    for (int n = 0; n <= i; ++n) cterm[static_cast<std::size_t>(n)] = constant_term(n, mv, dt);
    const double disc = std::exp(-sc.rate * dt);
    for (const auto& theta : enumerate_compositions(i, max_order)) {
        Tuple parts = theta;
        const int rest = i - std::accumulate(theta.begin(), theta.end(), 0);
        parts.push_back(rest);
        const double pi = multinomial(parts).convert_to<double>() * cterm[static_cast<std::size_t>(rest)];
        f.add_holding({AssetKind::power_jump_integral, 0, theta}, coefficient * si * pi * disc, 0.0);
    }
    f.bank_cash = coefficient * si * cterm[static_cast<std::size_t>(i)] / sc.accrual();
    return f;
}

}  // namespace levyhedge
