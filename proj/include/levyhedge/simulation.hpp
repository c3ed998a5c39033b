#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <boost/math/special_functions/expint.hpp>

#include "errors.hpp"
#include "levy_model.hpp"
#include "random.hpp"

namespace levyhedge {

struct Jump {
    double time;  // offset from the start of the step (or absolute, on a PathGrid)
    double size;
};

struct Increment {
    double dx = 0.0;
    double continuous = 0.0;  // dx minus the recorded jumps
    std::vector<Jump> jumps;
    bool jumps_recorded = true;
};

namespace detail {

// Draws y from the density proportional to exp(-y)/y on (a, inf).
inline double truncated_gamma0(double a, RandomStream& rng) {
    const double w_low = a < 1.0 ? std::log(1.0 / a) : 0.0;
    const double w_high = a < 1.0 ? std::exp(-1.0) : 0.0;
    for (;;) {
        if (a >= 1.0) {
            const double y = a + rng.exponential();
            if (rng.uniform() <= a / y) return y;
            continue;
        }
        if (rng.uniform() * (w_low + w_high) < w_low) {
            const double y = a * std::exp(rng.uniform() * w_low);
            if (rng.uniform() <= std::exp(-y)) return y;
        } else {
            const double y = 1.0 + rng.exponential();
            if (rng.uniform() <= 1.0 / y) return y;
        }
    }
}

inline void add_vg_side(double scale, double nu, double eps, double sign, double dt, RandomStream& rng,
                        Increment& inc) {
    const double a = eps / scale;
    const double rate = boost::math::expint(1, a) / nu;
    const auto n = rng.poisson(rate * dt);
    for (std::uint64_t j = 0; j < n; ++j) {
        const double time = dt * rng.uniform();
        const double size = sign * scale * truncated_gamma0(a, rng);
        inc.jumps.push_back({time, size});
    }
    // Mean contribution of the jumps below eps, kept as drift.
    inc.continuous += sign * (scale / nu) * (-std::expm1(-a)) * dt;
}

}  // namespace detail

// One draw of X_{t+dt} - X_t.  Compound-Poisson jumps are not compensated, so E[dx] = m_1 dt.
// VG increments come from the gamma clock unless jumps must be listed, in which case jumps
// above model.truncation are sampled individually and the rest enter as drift.
inline Increment simulate_increment(const LevyModel& model, double dt, RandomStream& rng,
                                    bool record_jumps = true) {
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    Increment inc;
    const double sb = model.brownian_sigma;
    if (const auto* cp = std::get_if<CompoundPoisson>(&model.jumps)) {
        inc.continuous = sb > 0.0 ? sb * std::sqrt(dt) * rng.normal() : 0.0;
        if (cp->intensity > 0.0) {
            const auto n = rng.poisson(cp->intensity * dt);
            for (std::uint64_t j = 0; j < n; ++j) {
                const double time = dt * rng.uniform();
                const double size = cp->jump_mean + cp->jump_stdev * rng.normal();
                inc.jumps.push_back({time, size});
            }
        }
    } else {
        const auto& vg = std::get<VarianceGamma>(model.jumps);
        if (!record_jumps) {
            const double g = rng.gamma(dt / vg.nu, vg.nu);
            inc.continuous = vg.theta * g + vg.sigma * std::sqrt(g) * rng.normal();
            if (sb > 0.0) inc.continuous += sb * std::sqrt(dt) * rng.normal();
            inc.dx = inc.continuous;
            inc.jumps_recorded = false;
            return inc;
        }
        inc.continuous = sb > 0.0 ? sb * std::sqrt(dt) * rng.normal() : 0.0;
        const auto [up, down] = detail::vg_scales(vg);
        if (up > 0.0) detail::add_vg_side(up, vg.nu, model.truncation, 1.0, dt, rng, inc);
        if (down > 0.0) detail::add_vg_side(down, vg.nu, model.truncation, -1.0, dt, rng, inc);
    }
    std::sort(inc.jumps.begin(), inc.jumps.end(), [](const Jump& a, const Jump& b) { return a.time < b.time; });
    inc.dx = inc.continuous;
    for (const auto& j : inc.jumps) inc.dx += j.size;
    return inc;
}

// Whether the dynamics need individual jumps to move the asset.
inline bool needs_jump_list(const LevyModel& model) { return model.dynamics == Dynamics::stochastic_exponential; }

// S_{t+dt} / S_t for a sampled increment; empty if a jump wiped the asset out.
inline std::optional<double> growth_factor(const LevyModel& model, const Increment& inc, double dt) {
    if (model.dynamics == Dynamics::exponential) return std::exp(model.drift_b * dt + inc.dx);
    const double s2 = model.brownian_sigma * model.brownian_sigma;
    double f = std::exp((model.drift_b - 0.5 * s2) * dt + inc.continuous);
    for (const auto& j : inc.jumps) {
        if (j.size <= -1.0) return std::nullopt;
        f *= 1.0 + j.size;
    }
    return f;
}

inline double evolve_asset(const LevyModel& model, double s, double dt, RandomStream& rng) {
    if (!(s > 0.0)) throw DomainError("asset price must be > 0");
    const auto inc = simulate_increment(model, dt, rng, needs_jump_list(model));
    const auto f = growth_factor(model, inc, dt);
    if (!f) throw BankruptcyError("jump of size <= -1 sends the asset to zero");
    return s * *f;
}

struct PathGrid {
    std::vector<double> times;
    std::vector<double> asset;
    std::vector<double> levy;  // X at each grid time, X(times[0]) = 0
    std::vector<Jump> jumps;   // absolute times in (times.front(), times.back()]
    bool jumps_recorded = true;
};

inline PathGrid simulate_path(const LevyModel& model, double s0, const std::vector<double>& times, RandomStream& rng,
                              bool record_jumps = true) {
    if (times.size() < 2) throw DomainError("path grid needs at least two times");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw GridError("path times must be strictly increasing");
    if (!(s0 > 0.0)) throw DomainError("asset price must be > 0");
    const bool rec = record_jumps || needs_jump_list(model);
    PathGrid path;
    path.times = times;
    path.asset.push_back(s0);
    path.levy.push_back(0.0);
    path.jumps_recorded = rec || !model.is_variance_gamma();
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        const auto inc = simulate_increment(model, dt, rng, rec);
        const auto f = growth_factor(model, inc, dt);
        if (!f) throw BankruptcyError("jump of size <= -1 sends the asset to zero");
        path.asset.push_back(path.asset.back() * *f);
        path.levy.push_back(path.levy.back() + inc.dx);
        for (const auto& j : inc.jumps) {
            // A jump drawn exactly at the step start belongs to this step, never to t0.
            const double at = std::max(times[k - 1] + j.time, std::nextafter(times[k - 1], times[k]));
            path.jumps.push_back({at, j.size});
        }
    }
    return path;
}

struct PowerJumpSeries {
    std::vector<double> times;
    std::vector<double> compensated;  // Y^(i)
    std::vector<double> asset;        // T^(i) = e^{rt} Y^(i)
};

// Y^(i)_t = sum of i-th powers of jumps up to t minus m_i t (for i = 1 the whole of X minus m_1 t).
inline PowerJumpSeries power_jump_path(const PathGrid& path, int i, double m_i, double r) {
    if (i < 1) throw DomainError("power order must be >= 1");
    if (i >= 2 && !path.jumps_recorded)
        throw InsufficientResolutionError("path carries no jump records; resimulate with jump recording");
    PowerJumpSeries out;
    out.times = path.times;
    const double t0 = path.times.front();
    std::size_t next = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        const double t = path.times[k];
        double raw;
        if (i == 1) {
            raw = path.levy[k];
        } else {
            while (next < path.jumps.size() && path.jumps[next].time <= t) sum += std::pow(path.jumps[next++].size, i);
            raw = sum;
        }
        const double y = raw - m_i * (t - t0);
        out.compensated.push_back(y);
        out.asset.push_back(std::exp(r * t) * y);
    }
    return out;
}

}  // namespace levyhedge
