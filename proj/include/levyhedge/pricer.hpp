#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "levy_model.hpp"
#include "simulation.hpp"
#include "stencil.hpp"

namespace levyhedge {

enum class PayoffKind { european_call, european_put, up_and_out, up_and_in, down_and_out, down_and_in };

inline std::string to_string(PayoffKind k) {
    switch (k) {
        case PayoffKind::european_call: return "european_call";
        case PayoffKind::european_put: return "european_put";
        case PayoffKind::up_and_out: return "up_and_out";
        case PayoffKind::up_and_in: return "up_and_in";
        case PayoffKind::down_and_out: return "down_and_out";
        case PayoffKind::down_and_in: return "down_and_in";
    }
    return "?";
}

inline PayoffKind payoff_from_string(const std::string& s) {
    for (auto k : {PayoffKind::european_call, PayoffKind::european_put, PayoffKind::up_and_out, PayoffKind::up_and_in,
                   PayoffKind::down_and_out, PayoffKind::down_and_in})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown payoff kind '" + s + "'");
}

// Barrier kinds are calls with a knock condition checked on the simulation dates.
struct OptionSpec {
    PayoffKind kind = PayoffKind::european_call;
    double strike = 0.0;
    double maturity = 0.0;
    double barrier = 0.0;

    bool is_barrier() const { return kind != PayoffKind::european_call && kind != PayoffKind::european_put; }
    bool is_up() const { return kind == PayoffKind::up_and_out || kind == PayoffKind::up_and_in; }
    bool is_out() const { return kind == PayoffKind::up_and_out || kind == PayoffKind::down_and_out; }

    void validate() const {
        if (!(strike > 0.0)) throw DomainError("strike must be > 0");
        if (!(maturity > 0.0)) throw DomainError("maturity must be > 0");
        if (is_barrier() && !(barrier > 0.0)) throw DomainError("barrier must be > 0");
    }

    // Payoff given terminal price and the running extreme that matters for the barrier.
    double payoff(double terminal, double running_max, double running_min) const {
        const double vanilla = kind == PayoffKind::european_put ? std::max(strike - terminal, 0.0)
                                                                : std::max(terminal - strike, 0.0);
        if (!is_barrier()) return vanilla;
        const bool hit = is_up() ? running_max >= barrier : running_min <= barrier;
        return (hit != is_out()) ? vanilla : 0.0;
    }
};

struct Market {
    double rate = 0.0;
    double dividend = 0.0;  // continuous yield
};

enum class BankruptcyPolicy { discard, absorb };

struct McControls {
    std::size_t paths = 100000;
    int steps = 1;  // monitoring intervals across [0, maturity]
    std::uint64_t seed = 1;
    bool antithetic = true;
    unsigned threads = 0;  // 0: hardware concurrency
    BankruptcyPolicy bankruptcy = BankruptcyPolicy::discard;
};

struct McEstimate {
    double price = 0.0;
    double std_error = 0.0;
    std::size_t paths_used = 0;
    std::size_t bankrupt = 0;
};

inline constexpr std::size_t mc_batch_size = 1024;

// Paths started from S = 1, so any start price s reuses them (common random numbers).
class PathEnsemble {
public:
    static PathEnsemble simulate(const LevyModel& model, const Market& market, double t, double maturity,
                                 const McControls& mc) {
        model.validate();
        if (mc.paths < 1000) throw DomainError("need at least 1000 paths");
        if (mc.steps < 1) throw DomainError("need at least one step");
        if (t < 0.0 || t > maturity) throw DomainError("valuation time outside [0, maturity]");
        PathEnsemble e;
        e.antithetic_ = mc.antithetic;
        e.discount_ = std::exp(-market.rate * (maturity - t));
        e.horizon_ = maturity - t;
        const std::size_t n = mc.antithetic ? (mc.paths + 1) / 2 * 2 : mc.paths;
        e.terminal_.assign(n, 1.0);
        e.max_.assign(n, 1.0);
        e.min_.assign(n, 1.0);
        e.bankrupt_.assign(n, 0);
        if (e.horizon_ <= 0.0) return e;

        // Simulation dates: t, then every monitoring date after t.
        std::vector<double> dates{t};
        const double h = maturity / mc.steps;
        for (int j = 1; j <= mc.steps; ++j) {
            const double d = j == mc.steps ? maturity : j * h;
            if (d > t * (1.0 + 1e-14) + 1e-300) dates.push_back(d);
        }
        if (dates.size() < 2) dates.push_back(maturity);

        LevyModel effective = model;
        effective.drift_b -= market.dividend;
        const bool listed = needs_jump_list(effective);
        const std::size_t batches = (n + mc_batch_size - 1) / mc_batch_size;

        auto run_batch = [&](std::size_t b) {
            RandomStream rng(mc.seed, b);
            const std::size_t lo = b * mc_batch_size, hi = std::min(n, lo + mc_batch_size);
            for (std::size_t i = lo; i < hi; ++i) {
                if (mc.antithetic) {
                    if ((i - lo) % 2 == 0) rng.record();
                    else rng.mirror();
                }
                double z = 1.0, zmax = 1.0, zmin = 1.0;
                bool dead = false;
                for (std::size_t k = 1; k < dates.size(); ++k) {
                    const double dt = dates[k] - dates[k - 1];
                    const auto inc = simulate_increment(effective, dt, rng, listed);
                    if (dead) continue;  // keep consuming draws so the stream stays aligned
                    const auto f = growth_factor(effective, inc, dt);
                    if (!f) {
                        dead = true;
                        z = 0.0;
                        zmin = 0.0;
                        continue;
                    }
                    z *= *f;
                    zmax = std::max(zmax, z);
                    zmin = std::min(zmin, z);
                }
                e.terminal_[i] = z;
                e.max_[i] = zmax;
                e.min_[i] = zmin;
                e.bankrupt_[i] = dead && mc.bankruptcy == BankruptcyPolicy::discard;
            }
        };
        unsigned workers = mc.threads ? mc.threads : std::max(1u, std::thread::hardware_concurrency());
        workers = static_cast<unsigned>(std::min<std::size_t>(workers, batches));
        if (workers <= 1) {
            for (std::size_t b = 0; b < batches; ++b) run_batch(b);
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back([&] {
                    for (std::size_t b; (b = next.fetch_add(1)) < batches;) run_batch(b);
                });
            for (auto& th : pool) th.join();
        }
        for (auto x : e.bankrupt_) e.bankrupt_count_ += x;
        return e;
    }

    std::size_t size() const { return terminal_.size(); }
    double horizon() const { return horizon_; }
    double terminal_ratio(std::size_t i) const { return terminal_[i]; }

    // Discounted price of `option` for start price s.
    McEstimate price(const OptionSpec& option, double s) const {
        if (horizon_ <= 0.0) return {option.payoff(s, s, s), 0.0, size(), 0};
        const std::size_t stride = antithetic_ ? 2 : 1;
        const std::size_t units = size() / stride;
        const std::size_t per_batch = mc_batch_size / stride;
        auto unit_value = [&](std::size_t u, double& v) {
            v = 0.0;
            std::size_t alive = 0;
            for (std::size_t j = u * stride; j < (u + 1) * stride; ++j) {
                if (bankrupt_[j]) continue;
                v += option.payoff(s * terminal_[j], s * max_[j], s * min_[j]);
                ++alive;
            }
            if (alive) v /= static_cast<double>(alive);
            return alive > 0;
        };
        // Sums are taken about the first surviving value so the variance does not cancel.
        double shift = 0.0;
        for (std::size_t u = 0; u < units; ++u)
            if (unit_value(u, shift)) break;
        std::vector<double> sums, squares;
        std::vector<std::size_t> counts;
        for (std::size_t lo = 0; lo < units; lo += per_batch) {
            double sum = 0.0, sq = 0.0;
            std::size_t cnt = 0;
            for (std::size_t u = lo; u < std::min(units, lo + per_batch); ++u) {
                double v;
                if (!unit_value(u, v)) continue;
                v -= shift;
                sum += v;
                sq += v * v;
                ++cnt;
            }
            sums.push_back(sum);
            squares.push_back(sq);
            counts.push_back(cnt);
        }
        const double total = pairwise_sum(sums, 0, sums.size());
        const double total_sq = pairwise_sum(squares, 0, squares.size());
        std::size_t used = 0;
        for (auto c : counts) used += c;
        if (used == 0) throw PricingFailedError("every path went bankrupt");
        const double mean = total / static_cast<double>(used);
        const double var = used > 1 ? std::max(0.0, (total_sq - total * mean) / static_cast<double>(used - 1)) : 0.0;
        return {discount_ * (shift + mean), discount_ * std::sqrt(var / static_cast<double>(used)), used * stride,
                bankrupt_count_};
    }

private:
    static double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
        if (hi - lo == 0) return 0.0;
        if (hi - lo == 1) return v[lo];
        const std::size_t mid = lo + (hi - lo) / 2;
        return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
    }

    std::vector<double> terminal_, max_, min_;
    std::vector<char> bankrupt_;
    std::size_t bankrupt_count_ = 0;
    bool antithetic_ = false;
    double discount_ = 1.0;
    double horizon_ = 0.0;
};

inline McEstimate mc_price(const LevyModel& model, const Market& market, const OptionSpec& option, double s0, double t,
                           const McControls& mc) {
    option.validate();
    if (!(s0 > 0.0)) throw DomainError("spot must be > 0");
    return PathEnsemble::simulate(model, market, t, option.maturity, mc).price(option, s0);
}

struct PriceCurve {
    std::vector<double> s_values;
    std::vector<double> prices;
    std::vector<double> std_errors;
};

inline double uniform_step(const std::vector<double>& s) {
    if (s.empty()) throw GridError("empty price grid");
    if (s.size() == 1) return 0.0;
    const double h = s[1] - s[0];
    if (!(h > 0.0)) throw GridError("price grid must be increasing");
    for (std::size_t i = 1; i < s.size(); ++i)
        if (std::abs((s[i] - s[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(s[i])))
            throw GridError("price grid is not uniform at index " + std::to_string(i));
    return h;
}

inline PriceCurve price_curve(const PathEnsemble& ensemble, const OptionSpec& option, const std::vector<double>& s_values) {
    uniform_step(s_values);
    PriceCurve c;
    c.s_values = s_values;
    for (double s : s_values) {
        if (!(s > 0.0)) throw GridError("price grid must stay positive");
        const auto est = ensemble.price(option, s);
        c.prices.push_back(est.price);
        c.std_errors.push_back(est.std_error);
    }
    return c;
}

inline PriceCurve price_curve(const LevyModel& model, const Market& market, const OptionSpec& option, double t,
                              const std::vector<double>& s_values, const McControls& mc) {
    option.validate();
    uniform_step(s_values);
    return price_curve(PathEnsemble::simulate(model, market, t, option.maturity, mc), option, s_values);
}

// Grid of 2N+1 prices centred on s with spacing h.
inline std::vector<double> centred_grid(double s, double h, int n) {
    std::vector<double> g;
    for (int k = -n; k <= n; ++k) g.push_back(s + k * h);
    return g;
}

// Price-axis spacing when none is configured: a tick-like move.
inline double default_price_step(double s0) { return std::max(0.5, s0 * 1e-4); }

struct DerivativeLadder {
    std::vector<double> d2;  // d2[i-1] = i-th price derivative at (t + dt, S_t)
    double d1 = 0.0;         // time derivative at (t, S_t)
    double s_grid_step = 0.0;
    double spot = 0.0;

    int size() const { return static_cast<int>(d2.size()); }
    double operator[](int i) const { return d2.at(static_cast<std::size_t>(i - 1)); }
    // Taylor coefficient D^i F / i!.
    double coefficient(int i) const { return (*this)[i] / std::tgamma(i + 1.0); }
};

// `curve` is priced at t + time_bump; `price_now` is F(t, S_t) at the curve's centre.
inline DerivativeLadder derivative_ladder(const PriceCurve& curve, double price_now, const StencilTable& table, int p_max,
                                          double time_bump) {
    if (p_max > table.p_max())
        throw OrderError("ladder order " + std::to_string(p_max) + " exceeds table order " + std::to_string(table.p_max()));
    if (p_max < 1) throw OrderError("ladder order must be >= 1");
    if (!(time_bump > 0.0)) throw DomainError("time bump must be > 0");
    const std::size_t need = table.width();
    if (curve.s_values.size() < need)
        throw DimensionError("curve has " + std::to_string(curve.s_values.size()) + " points, stencil needs " +
                             std::to_string(need));
    if (curve.s_values.size() % 2 == 0) throw GridError("curve must have an odd number of points");
    const double h = uniform_step(curve.s_values);
    const std::size_t mid = (curve.s_values.size() - 1) / 2;
    const std::size_t lo = mid - static_cast<std::size_t>(table.half_width());
    std::span<const double> window(curve.prices.data() + lo, need);
    DerivativeLadder ladder;
    ladder.s_grid_step = h;
    ladder.spot = curve.s_values[mid];
    for (int i = 1; i <= p_max; ++i) ladder.d2.push_back(apply_stencil(window, i, h, table));
    ladder.d1 = (curve.prices[mid] - price_now) / time_bump;
    return ladder;
}

// Same ladder for any deterministic pricing function, used for synthetic checks.
inline DerivativeLadder ladder_from_function(const std::function<double(double t, double s)>& f, double t, double s,
                                             double dt, double h, const StencilTable& table, int p_max) {
    PriceCurve c;
    c.s_values = centred_grid(s, h, table.half_width());
    for (double x : c.s_values) c.prices.push_back(f(t + dt, x));
    c.std_errors.assign(c.prices.size(), 0.0);
    return derivative_ladder(c, f(t, s), table, p_max, dt);
}

}  // namespace levyhedge
