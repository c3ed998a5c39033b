#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace levyhedge {

// Jump sizes Normal(jump_mean, jump_stdev^2) arriving at rate `intensity` per year.
// intensity 0 is allowed and leaves a pure diffusion.
struct CompoundPoisson {
    double intensity = 0.0;
    double jump_mean = 0.0;
    double jump_stdev = 0.0;
};

// Brownian motion with drift theta and volatility sigma run on a gamma clock of variance rate nu.
struct VarianceGamma {
    double theta = 0.0;
    double nu = 1.0;
    double sigma = 0.0;
};

enum class Dynamics {
    stochastic_exponential,  // dS = b S dt + S dX
    exponential,             // S = S0 exp(b t + X)
};

struct LevyModel {
    double drift_b = 0.0;
    double brownian_sigma = 0.0;
    std::variant<CompoundPoisson, VarianceGamma> jumps = CompoundPoisson{};
    Dynamics dynamics = Dynamics::stochastic_exponential;
    // VG jumps smaller than this (in return units) are not recorded individually.
    double truncation = 1e-6;

    bool is_variance_gamma() const { return std::holds_alternative<VarianceGamma>(jumps); }

    void validate() const {
        if (!(brownian_sigma >= 0.0) || !std::isfinite(brownian_sigma))
            throw InvalidModelError("brownian_sigma must be finite and >= 0");
        if (!std::isfinite(drift_b)) throw InvalidModelError("drift_b must be finite");
        if (const auto* cp = std::get_if<CompoundPoisson>(&jumps)) {
            if (!(cp->intensity >= 0.0) || !std::isfinite(cp->intensity))
                throw InvalidModelError("intensity must be finite and >= 0");
            if (!(cp->jump_stdev >= 0.0)) throw InvalidModelError("jump_stdev must be >= 0");
            if (!std::isfinite(cp->jump_mean)) throw InvalidModelError("jump_mean must be finite");
        } else {
            const auto& vg = std::get<VarianceGamma>(jumps);
            if (!(vg.nu > 0.0)) throw InvalidModelError("VG nu must be > 0");
            if (!(vg.sigma >= 0.0)) throw InvalidModelError("VG sigma must be >= 0");
            if (!(truncation > 0.0)) throw InvalidModelError("truncation must be > 0");
        }
    }
};

inline constexpr int max_moment_order = 60;

namespace detail {

// E[J^n] for J ~ Normal(mu, s^2): E[J^n] = mu E[J^{n-1}] + (n-1) s^2 E[J^{n-2}].
inline double normal_raw_moment(double mu, double s, int n) {
    double prev = 1.0, cur = mu;
    if (n == 0) return 1.0;
    for (int k = 2; k <= n; ++k) {
        const double next = mu * cur + (k - 1) * s * s * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Roots of 1 - theta nu u - (sigma^2 nu / 2) u^2 = (1 - a u)(1 - b u).
inline std::pair<double, double> vg_roots(const VarianceGamma& vg) {
    const double s = vg.theta * vg.nu;
    const double disc = std::sqrt(s * s + 2.0 * vg.sigma * vg.sigma * vg.nu);
    return {(s + disc) / 2.0, (s - disc) / 2.0};
}

// Mean sizes of the positive and negative gamma jump components.
inline std::pair<double, double> vg_scales(const VarianceGamma& vg) {
    const double a = std::sqrt(vg.theta * vg.theta + 2.0 * vg.sigma * vg.sigma / vg.nu);
    return {(a / 2.0 + vg.theta / 2.0) * vg.nu, (a / 2.0 - vg.theta / 2.0) * vg.nu};
}

}  // namespace detail

// m_i = integral of x^i against the Levy measure for i >= 2, E[X_1] for i = 1.
inline double levy_moment(const LevyModel& model, int i) {
    if (i < 1) throw UnsupportedOrderError("moment order must be >= 1");
    if (i > max_moment_order)
        throw UnsupportedOrderError("moment order " + std::to_string(i) + " beyond supported range " +
                                    std::to_string(max_moment_order));
    if (const auto* cp = std::get_if<CompoundPoisson>(&model.jumps))
        return cp->intensity * detail::normal_raw_moment(cp->jump_mean, cp->jump_stdev, i);
    const auto& vg = std::get<VarianceGamma>(model.jumps);
    // VG cumulants: (i-1)! (a^i + b^i) / nu.
    const auto [a, b] = detail::vg_roots(vg);
    return std::tgamma(static_cast<double>(i)) * (std::pow(a, i) + std::pow(b, i)) / vg.nu;
}

struct MomentVector {
    std::vector<double> m;  // m[0] unused
    double sigma2 = 0.0;

    int max_order() const { return static_cast<int>(m.size()) - 1; }
    double operator[](int i) const {
        if (i < 1 || i > max_order())
            throw UnsupportedOrderError("moment " + std::to_string(i) + " not available");
        return m[static_cast<std::size_t>(i)];
    }
    double m2_prime() const { return (*this)[2] + sigma2; }
    // m'_q: the second moment absorbs the Brownian variance.
    double prime(int q) const { return q == 2 ? m2_prime() : (*this)[q]; }
};

inline MomentVector moments(const LevyModel& model, int i_max) {
    MomentVector out;
    out.m.assign(static_cast<std::size_t>(i_max) + 1, 0.0);
    for (int i = 1; i <= i_max; ++i) out.m[static_cast<std::size_t>(i)] = levy_moment(model, i);
    out.sigma2 = model.brownian_sigma * model.brownian_sigma;
    return out;
}

// Cumulants of X_{t+dt} - X_t.
inline double increment_cumulant(const MomentVector& mv, int q, double dt) { return mv.prime(q) * dt; }

// Log of E[exp(X_1)].
inline double exponential_compensator(const LevyModel& model) {
    const double s2 = model.brownian_sigma * model.brownian_sigma;
    if (const auto* cp = std::get_if<CompoundPoisson>(&model.jumps)) {
        const double mgf = std::exp(cp->jump_mean + 0.5 * cp->jump_stdev * cp->jump_stdev);
        return 0.5 * s2 + cp->intensity * (mgf - 1.0);
    }
    const auto& vg = std::get<VarianceGamma>(model.jumps);
    const double arg = 1.0 - vg.theta * vg.nu - 0.5 * vg.sigma * vg.sigma * vg.nu;
    if (arg <= 0.0) throw InvalidModelError("VG parameters give no exponential moment of order 1");
    return 0.5 * s2 - std::log(arg) / vg.nu;
}

// The b that makes the discounted asset a martingale at rate r (dividends handled by the caller).
inline double martingale_drift(const LevyModel& model, double r) {
    if (model.dynamics == Dynamics::exponential) return r - exponential_compensator(model);
    return r - levy_moment(model, 1);
}

// Expected S_T / S_0 under the model's own drift.
inline double mean_growth(const LevyModel& model, double T) {
    if (model.dynamics == Dynamics::exponential)
        return std::exp((model.drift_b + exponential_compensator(model)) * T);
    return std::exp((model.drift_b + levy_moment(model, 1)) * T);
}

}  // namespace levyhedge
