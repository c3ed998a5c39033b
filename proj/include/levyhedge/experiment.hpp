#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "jump_hedge.hpp"
#include "ledger.hpp"
#include "levy_model.hpp"
#include "minvar.hpp"
#include "moment_neutral.hpp"
#include "pricer.hpp"
#include "random.hpp"
#include "simulation.hpp"
#include "stencil.hpp"
#include "swap_hedge.hpp"
#include "taylor.hpp"

namespace levyhedge::experiment {

using json = nlohmann::json;

inline const std::vector<std::string>& known_strategies() {
    static const std::vector<std::string> s{"delta",  "taylor+swaps",   "taylor+pja",
                                            "minvar", "minvar+varswap", "moment-neutral"};
    return s;
}

// Published q values at dS = 10, 20, ..., 70 for the default grid.
inline std::optional<int> reference_q(PayoffKind kind, double delta_s) {
    static const std::map<PayoffKind, std::vector<int>> rows{
        {PayoffKind::european_call, {8, 14, 20, 26, 32, 36, 38}},
        {PayoffKind::up_and_out, {9, 15, 22, 27, 32, 36, 39}},
        {PayoffKind::up_and_in, {9, 16, 22, 28, 32, 36, 39}},
        {PayoffKind::down_and_out, {8, 14, 20, 26, 32, 36, 38}},
        {PayoffKind::down_and_in, {9, 16, 22, 28, 32, 36, 39}},
    };
    auto it = rows.find(kind);
    if (it == rows.end()) return std::nullopt;
    const double idx = delta_s / 10.0;
    const int j = static_cast<int>(std::lround(idx));
    if (std::abs(idx - j) > 1e-9 || j < 1 || j > 7) return std::nullopt;
    return it->second[static_cast<std::size_t>(j - 1)];
}

// Compound Poisson defaults; the option set and price step follow the q-table grid.
inline json default_config(const std::string& command = "qtable") {
    json j = {
        {"model",
         {{"kind", "compound_poisson"},
          {"sigma", 0.2},
          {"intensity", 10.0},
          {"jump_mean", 0.0},
          {"jump_stdev", 0.01},
          {"drift_b", 0.05},
          {"dynamics", "stochastic_exponential"}}},
        {"market", {{"rate", 0.05}, {"dividend", 0.0}}},
        {"options",
         json::array({{{"kind", "european_call"}, {"strike", 5000.0}, {"maturity", 1.1416e-4}},
                      {{"kind", "up_and_out"}, {"strike", 5000.0}, {"maturity", 1.1416e-4}, {"barrier", 5050.0}},
                      {{"kind", "up_and_in"}, {"strike", 5000.0}, {"maturity", 1.1416e-4}, {"barrier", 5050.0}},
                      {{"kind", "down_and_out"}, {"strike", 5000.0}, {"maturity", 1.1416e-4}, {"barrier", 4998.0}},
                      {{"kind", "down_and_in"}, {"strike", 5000.0}, {"maturity", 1.1416e-4}, {"barrier", 4998.0}}})},
        {"scenario",
         {{"spot", 5000.0},
          {"t", 0.0},
          {"delta_t", 9.5129e-6},
          {"delta_s", json::array({10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0})},
          {"alpha_tol", 0.01}}},
        {"mc",
         {{"paths", 100000},
          {"steps", 50},
          {"seed", 20240601},
          {"antithetic", true},
          {"threads", 0},
          {"bankruptcy", "discard"}}},
        {"stencil",
         {{"half_width", 25},
          {"p_max", 49},
          {"price_step", 10.0},
          {"table", ""},
          {"budget", default_stencil_budget}}},
        {"strategies", known_strategies()},
        {"pnl",
         {{"scenarios", 2000},
          {"q", 16},
          {"seed", 7},
          {"swap_points", 3},
          {"swap_strike", 0.0},
          {"swap_unit_price", 0.0},
          {"swap_history", nullptr},
          {"swap_weighting", "printed"},
          {"neutral_strikes", nullptr}}},
        {"output", ""},
    };
    if (command == "converge") {
        j["options"] = json::array({j["options"][0]});
        j["scenario"]["delta_s"] = json::array({10.0});
    } else if (command == "pnl") {
        // Daily rebalancing of a three-month call: jumps stay small against the price scale,
        // so a short ladder is accurate over the whole jump law.
        j["options"] = json::array({{{"kind", "european_call"}, {"strike", 5000.0}, {"maturity", 0.25}}});
        j["scenario"]["delta_t"] = 1.0 / 252.0;
        j["mc"]["steps"] = 1;
        j["stencil"]["half_width"] = 8;
        j["stencil"]["p_max"] = 15;
        j["stencil"]["price_step"] = 25.0;
        j["pnl"]["q"] = 6;
        j["pnl"]["neutral_strikes"] = json::array({4750.0, 5250.0});
    }
    return j;
}

// Model fields not given take these values, so a replaced model block never inherits
// parameters of another family.
inline json normalise_model(const json& m) {
    static const std::set<std::string> allowed{"kind",  "sigma",    "intensity", "jump_mean", "jump_stdev", "theta",
                                               "nu",    "vg_sigma", "drift_b",   "dynamics",  "truncation"};
    if (!m.is_object()) throw ConfigError("model must be an object");
    for (const auto& [k, v] : m.items())
        if (!allowed.count(k)) throw ConfigError("unknown model field '" + k + "'");
    json out = m;
    const std::string kind = m.value("kind", std::string("compound_poisson"));
    out["kind"] = kind;
    if (!out.contains("sigma")) out["sigma"] = 0.0;
    if (!out.contains("drift_b")) out["drift_b"] = 0.0;
    if (!out.contains("dynamics")) out["dynamics"] = "stochastic_exponential";
    if (!out.contains("truncation")) out["truncation"] = 1e-6;
    if (kind == "compound_poisson") {
        for (const char* k : {"theta", "nu", "vg_sigma"})
            if (out.contains(k)) throw ConfigError(std::string("field '") + k + "' does not apply to compound_poisson");
        for (const char* k : {"intensity", "jump_mean", "jump_stdev"})
            if (!out.contains(k)) out[k] = 0.0;
    } else if (kind == "variance_gamma") {
        for (const char* k : {"intensity", "jump_mean", "jump_stdev"})
            if (out.contains(k)) throw ConfigError(std::string("field '") + k + "' does not apply to variance_gamma");
        for (const char* k : {"theta", "nu", "vg_sigma"})
            if (!out.contains(k)) throw ConfigError(std::string("variance_gamma needs '") + k + "'");
    } else {
        throw ConfigError("unknown model kind '" + kind + "'");
    }
    return out;
}

// defaults <- flags <- file.  Blocks merge field by field except `model` and `options`,
// which a later layer replaces whole.
inline json merge_layers(const std::vector<json>& layers) {
    json out = json::object();
    for (const auto& layer : layers) {
        if (layer.is_null()) continue;
        if (!layer.is_object()) throw ConfigError("configuration must be a JSON object");
        for (const auto& [k, v] : layer.items()) {
            if (k == "option") {
                out["options"] = json::array({v});
            } else if (k == "model" || k == "options" || k == "strategies" || !v.is_object() || !out.contains(k) ||
                       !out[k].is_object()) {
                out[k] = v;
            } else {
                for (const auto& [k2, v2] : v.items()) out[k][k2] = v2;
            }
        }
    }
    return out;
}

inline std::string config_hash(const json& effective) {
    json h = effective;
    if (h.contains("mc")) h["mc"].erase("threads");
    h.erase("output");
    std::uint64_t x = 0xcbf29ce484222325ULL;
    for (unsigned char c : h.dump()) {
        x ^= c;
        x *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

struct StencilSettings {
    int half_width = 25;
    int p_max = 49;
    double price_step = 0.0;
    std::string table;
    std::uint64_t budget = default_stencil_budget;
};

struct PnlSettings {
    std::size_t scenarios = 2000;
    int q = 16;
    std::uint64_t seed = 7;
    int swap_points = 3;
    double swap_strike = 0.0;
    double swap_unit_price = 0.0;
    std::vector<double> swap_history;  // the n-1 prices ending at the spot
    SwapWeighting weighting = SwapWeighting::printed;
    std::vector<double> neutral_strikes;
};

struct ExperimentConfig {
    json effective;
    std::string hash;
    LevyModel model;
    Market market;
    std::vector<OptionSpec> options;
    double spot = 0.0, t = 0.0, delta_t = 0.0, alpha_tol = 0.01;
    std::vector<double> delta_s;
    McControls mc;
    StencilSettings stencil;
    std::vector<std::string> strategies;
    PnlSettings pnl;
    std::string output;
};

namespace detail {

inline void check_keys(const json& block, const std::string& name, const std::set<std::string>& allowed) {
    if (!block.is_object()) throw ConfigError(name + " must be an object");
    for (const auto& [k, v] : block.items())
        if (!allowed.count(k)) throw ConfigError("unknown " + name + " field '" + k + "'");
}

template <class T>
T get(const json& block, const char* key, const std::string& where) {
    try {
        return block.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline LevyModel parse_model(const json& m, const Market& market) {
    LevyModel model;
    model.brownian_sigma = get<double>(m, "sigma", "model");
    model.truncation = get<double>(m, "truncation", "model");
    const auto dyn = get<std::string>(m, "dynamics", "model");
    if (dyn == "stochastic_exponential") model.dynamics = Dynamics::stochastic_exponential;
    else if (dyn == "exponential") model.dynamics = Dynamics::exponential;
    else throw ConfigError("unknown dynamics '" + dyn + "'");
    if (get<std::string>(m, "kind", "model") == "compound_poisson") {
        model.jumps = CompoundPoisson{get<double>(m, "intensity", "model"), get<double>(m, "jump_mean", "model"),
                                      get<double>(m, "jump_stdev", "model")};
    } else {
        model.jumps = VarianceGamma{get<double>(m, "theta", "model"), get<double>(m, "nu", "model"),
                                    get<double>(m, "vg_sigma", "model")};
    }
    const auto& b = m.at("drift_b");
    if (b.is_string()) {
        if (b.get<std::string>() != "risk_neutral") throw ConfigError("drift_b must be a number or \"risk_neutral\"");
        model.drift_b = martingale_drift(model, market.rate);
    } else {
        model.drift_b = get<double>(m, "drift_b", "model");
    }
    model.validate();
    return model;
}

inline OptionSpec parse_option(const json& o) {
    check_keys(o, "option", {"kind", "strike", "maturity", "barrier"});
    OptionSpec s;
    try {
        s.kind = payoff_from_string(get<std::string>(o, "kind", "option"));
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    s.strike = get<double>(o, "strike", "option");
    s.maturity = get<double>(o, "maturity", "option");
    s.barrier = o.value("barrier", 0.0);
    s.validate();
    return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& merged) {
    using detail::get;
    detail::check_keys(merged, "config",
                       {"model", "market", "options", "scenario", "mc", "stencil", "strategies", "pnl", "output"});
    ExperimentConfig c;
    c.effective = merged;
    c.effective["model"] = normalise_model(merged.at("model"));

    const auto& mk = c.effective.at("market");
    detail::check_keys(mk, "market", {"rate", "dividend"});
    c.market = {get<double>(mk, "rate", "market"), get<double>(mk, "dividend", "market")};
    c.model = detail::parse_model(c.effective["model"], c.market);

    const auto& opts = c.effective.at("options");
    if (!opts.is_array() || opts.empty()) throw ConfigError("options must be a non-empty list");
    for (const auto& o : opts) c.options.push_back(detail::parse_option(o));

    const auto& sc = c.effective.at("scenario");
    detail::check_keys(sc, "scenario", {"spot", "t", "delta_t", "delta_s", "alpha_tol"});
    c.spot = get<double>(sc, "spot", "scenario");
    c.t = get<double>(sc, "t", "scenario");
    c.delta_t = get<double>(sc, "delta_t", "scenario");
    c.delta_s = get<std::vector<double>>(sc, "delta_s", "scenario");
    c.alpha_tol = get<double>(sc, "alpha_tol", "scenario");
    if (c.delta_s.empty()) throw ConfigError("scenario.delta_s must not be empty");
    if (!(c.spot > 0.0) || !(c.delta_t > 0.0) || c.t < 0.0 || !(c.alpha_tol > 0.0))
        throw ConfigError("scenario needs spot > 0, delta_t > 0, t >= 0 and alpha_tol > 0");
    for (const auto& o : c.options)
        if (c.t + c.delta_t > o.maturity * (1.0 + 1e-12)) throw ConfigError("t + delta_t lies beyond an option's maturity");

    const auto& mc = c.effective.at("mc");
    detail::check_keys(mc, "mc", {"paths", "steps", "seed", "antithetic", "threads", "bankruptcy"});
    c.mc.paths = get<std::size_t>(mc, "paths", "mc");
    c.mc.steps = get<int>(mc, "steps", "mc");
    c.mc.seed = get<std::uint64_t>(mc, "seed", "mc");
    c.mc.antithetic = get<bool>(mc, "antithetic", "mc");
    c.mc.threads = get<unsigned>(mc, "threads", "mc");
    const auto bk = get<std::string>(mc, "bankruptcy", "mc");
    if (bk == "discard") c.mc.bankruptcy = BankruptcyPolicy::discard;
    else if (bk == "absorb") c.mc.bankruptcy = BankruptcyPolicy::absorb;
    else throw ConfigError("mc.bankruptcy must be discard or absorb");

    const auto& st = c.effective.at("stencil");
    detail::check_keys(st, "stencil", {"half_width", "p_max", "price_step", "table", "budget"});
    c.stencil.half_width = get<int>(st, "half_width", "stencil");
    c.stencil.p_max = get<int>(st, "p_max", "stencil");
    c.stencil.price_step = st.at("price_step").is_null() ? default_price_step(c.spot) : get<double>(st, "price_step", "stencil");
    c.stencil.table = get<std::string>(st, "table", "stencil");
    c.stencil.budget = get<std::uint64_t>(st, "budget", "stencil");
    if (c.stencil.half_width < 1 || c.stencil.p_max < 1 || c.stencil.p_max > 2 * c.stencil.half_width - 1)
        throw ConfigError("stencil needs 1 <= p_max <= 2 half_width - 1");
    if (!(c.stencil.price_step > 0.0)) throw ConfigError("stencil.price_step must be > 0");
    if (!c.stencil.table.empty() && !std::filesystem::exists(c.stencil.table))
        throw ConfigError("stencil table '" + c.stencil.table + "' does not exist; run `table build` first");

    c.strategies = get<std::vector<std::string>>(c.effective, "strategies", "config");
    for (const auto& s : c.strategies)
        if (std::find(known_strategies().begin(), known_strategies().end(), s) == known_strategies().end())
            throw ConfigError("unknown strategy '" + s + "'");

    const auto& p = c.effective.at("pnl");
    detail::check_keys(p, "pnl",
                       {"scenarios", "q", "seed", "swap_points", "swap_strike", "swap_unit_price", "swap_history",
                        "swap_weighting", "neutral_strikes"});
    c.pnl.scenarios = get<std::size_t>(p, "scenarios", "pnl");
    c.pnl.q = p.at("q").is_null() ? c.stencil.p_max : get<int>(p, "q", "pnl");
    c.pnl.seed = get<std::uint64_t>(p, "seed", "pnl");
    c.pnl.swap_points = get<int>(p, "swap_points", "pnl");
    c.pnl.swap_strike = get<double>(p, "swap_strike", "pnl");
    c.pnl.swap_unit_price = get<double>(p, "swap_unit_price", "pnl");
    if (p.at("swap_history").is_null()) c.pnl.swap_history.assign(static_cast<std::size_t>(std::max(2, c.pnl.swap_points - 1)), c.spot);
    else c.pnl.swap_history = get<std::vector<double>>(p, "swap_history", "pnl");
    if (static_cast<int>(c.pnl.swap_history.size()) != c.pnl.swap_points - 1)
        throw ConfigError("pnl.swap_history must hold swap_points - 1 prices");
    const auto w = get<std::string>(p, "swap_weighting", "pnl");
    if (w == "printed") c.pnl.weighting = SwapWeighting::printed;
    else if (w == "projected") c.pnl.weighting = SwapWeighting::projected;
    else throw ConfigError("pnl.swap_weighting must be printed or projected");
    if (p.at("neutral_strikes").is_null()) c.pnl.neutral_strikes = {c.spot - 50.0, c.spot + 50.0};
    else c.pnl.neutral_strikes = get<std::vector<double>>(p, "neutral_strikes", "pnl");

    c.output = get<std::string>(c.effective, "output", "config");
    c.hash = config_hash(c.effective);
    return c;
}

inline ExperimentConfig load_config(const std::string& command, const json& flags, const std::string& path) {
    json file = nullptr;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config '" + path + "'");
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config '" + path + "': " + e.what());
        }
    }
    return parse_config(merge_layers({default_config(command), flags, file}));
}

struct RunResult {
    std::string csv;
    std::string summary;
    int upstream_errors = 0;
    std::vector<std::string> messages;
};

inline std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline StencilTable stencil_for(const ExperimentConfig& c) {
    if (c.stencil.table.empty()) return build_lookup_table(c.stencil.half_width, c.stencil.p_max, c.stencil.budget);
    auto t = load_table(c.stencil.table);
    if (t.half_width() != c.stencil.half_width || t.p_max() < c.stencil.p_max)
        throw ConfigError("stencil table '" + c.stencil.table + "' has N=" + std::to_string(t.half_width()) +
                          " PMAX=" + std::to_string(t.p_max()) + ", config needs N=" +
                          std::to_string(c.stencil.half_width) + " PMAX>=" + std::to_string(c.stencil.p_max));
    return t;
}

// F(t, .) and F(t + dt, .) on shared seeds; one pair per maturity.
struct EnsemblePair {
    PathEnsemble now, next;
};

inline EnsemblePair ensembles_for(const ExperimentConfig& c, double maturity) {
    return {PathEnsemble::simulate(c.model, c.market, c.t, maturity, c.mc),
            PathEnsemble::simulate(c.model, c.market, c.t + c.delta_t, maturity, c.mc)};
}

inline DerivativeLadder ladder_for(const ExperimentConfig& c, const EnsemblePair& e, const OptionSpec& option,
                                   const StencilTable& table, double price_now) {
    const auto grid = centred_grid(c.spot, c.stencil.price_step, c.stencil.half_width);
    return derivative_ladder(price_curve(e.next, option, grid), price_now, table, c.stencil.p_max, c.delta_t);
}

inline HedgeScenario scenario_for(const ExperimentConfig& c, const OptionSpec& option, double delta_s) {
    HedgeScenario sc;
    sc.spot = c.spot;
    sc.delta_s = delta_s;
    sc.delta_t = c.delta_t;
    sc.rate = c.market.rate;
    sc.option = option;
    sc.alpha_tol = c.alpha_tol;
    sc.t = c.t;
    return sc;
}

inline RunResult run_qtable(const ExperimentConfig& c) {
    const auto table = stencil_for(c);
    RunResult out;
    std::ostringstream csv;
    csv << "option,delta_s,q,error,status,reference_q,config_hash\n";
    std::map<double, EnsemblePair> cache;
    for (const auto& option : c.options) {
        auto it = cache.find(option.maturity);
        if (it == cache.end()) it = cache.emplace(option.maturity, ensembles_for(c, option.maturity)).first;
        const auto& e = it->second;
        const double price_now = e.now.price(option, c.spot).price;
        const auto ladder = ladder_for(c, e, option, table, price_now);
        for (double ds : c.delta_s) {
            const auto sc = scenario_for(c, option, ds);
            const double exact = e.next.price(option, c.spot + ds).price - price_now;
            std::string q, err, status;
            try {
                const auto r = find_q(ladder, sc, exact);
                q = std::to_string(r.q);
                err = num(r.error);
                status = "ok";
            } catch (const NeedsHigherOrderError& ex) {
                q = std::to_string(ex.best_order);
                err = num(ex.best_error);
                status = "needs_higher_order";
                ++out.upstream_errors;
                out.messages.push_back(to_string(option.kind) + " dS=" + num(ds) + ": " + ex.what());
            }
            const auto ref = reference_q(option.kind, ds);
            csv << to_string(option.kind) << ',' << num(ds) << ',' << q << ',' << err << ',' << status << ','
                << (ref ? std::to_string(*ref) : "") << ',' << c.hash << '\n';
        }
    }
    out.csv = csv.str();
    return out;
}

inline RunResult run_convergence(const ExperimentConfig& c) {
    if (c.options.size() != 1 || c.delta_s.size() != 1)
        throw ConfigError("converge takes exactly one option and one delta_s");
    const auto& option = c.options[0];
    const double ds = c.delta_s[0];
    const auto table = stencil_for(c);
    const auto e = ensembles_for(c, option.maturity);
    const auto now = e.now.price(option, c.spot);
    const auto ladder = ladder_for(c, e, option, table, now.price);
    const double exact = e.next.price(option, c.spot + ds).price - now.price;

    RunResult out;
    std::ostringstream csv;
    csv << "term,derivative,coefficient,contribution,cumulative,abs_error,exact_change,mc_price,mc_std_error,config_hash\n";
    double cumulative = ladder.d1 * c.delta_t, power = 1.0;
    for (int i = 1; i <= ladder.size(); ++i) {
        power *= ds / i;
        const double term = ladder[i] * power;
        cumulative += term;
        csv << i << ',' << num(ladder[i]) << ',' << num(ladder.coefficient(i)) << ',' << num(term) << ','
            << num(cumulative) << ',' << num(std::abs(exact - cumulative)) << ',' << num(exact) << ','
            << num(now.price) << ',' << num(now.std_error) << ',' << c.hash << '\n';
    }
    out.csv = csv.str();
    std::ostringstream s;
    s << "price " << num(now.price) << " (se " << num(now.std_error) << "), time term " << num(ladder.d1 * c.delta_t)
      << ", exact change " << num(exact) << "\n";
    out.summary = s.str();
    return out;
}

// One simulated hedge period.
struct PnlScenario {
    double delta_s = 0.0;
    std::size_t jumps = 0;
    bool bankrupt = false;
    std::map<int, double> jump_power_sums;
};

inline std::vector<PnlScenario> simulate_scenarios(const ExperimentConfig& c, int max_power) {
    LevyModel effective = c.model;
    effective.drift_b -= c.market.dividend;
    std::vector<PnlScenario> out(c.pnl.scenarios);
    for (std::size_t i = 0; i < out.size(); ++i) {
        RandomStream rng(c.pnl.seed, i);
        const auto inc = simulate_increment(effective, c.delta_t, rng, true);
        auto& s = out[i];
        s.jumps = inc.jumps.size();
        const auto f = growth_factor(effective, inc, c.delta_t);
        if (!f) {
            s.bankrupt = true;
            continue;
        }
        s.delta_s = c.spot * (*f - 1.0);
        for (int k = 1; k <= max_power; ++k) {
            double sum = 0.0;
            for (const auto& j : inc.jumps) sum += std::pow(j.size, k);
            s.jump_power_sums[k] = sum;
        }
    }
    return out;
}

inline RunResult run_pnl(const ExperimentConfig& c) {
    if (c.options.size() != 1) throw ConfigError("pnl takes exactly one option");
    if (c.pnl.q < 1 || c.pnl.q > c.stencil.p_max) throw ConfigError("pnl.q must lie in [1, p_max]");
    const auto& option = c.options[0];
    const int q = c.pnl.q;
    const auto table = stencil_for(c);
    const auto e = ensembles_for(c, option.maturity);
    const double price_now = e.now.price(option, c.spot).price;
    const auto ladder = ladder_for(c, e, option, table, price_now);
    const auto mv = moments(c.model, std::min(max_moment_order, q + 2));
    const auto sc = scenario_for(c, option, 0.0);

    SwapSpec swap;
    swap.interval = c.delta_t;
    swap.points = c.pnl.swap_points;
    swap.maturity = c.t + c.delta_t;
    swap.strike = c.pnl.swap_strike;
    swap.unit_price = c.pnl.swap_unit_price;
    std::vector<int> powers;
    for (int k = 2; k <= q; ++k) powers.push_back(k);
    const auto history = RealizedHistory::from_prices(c.pnl.swap_history, powers);
    PathState state;
    state.t = c.t;

    // Extra instruments for the moment-neutral book: calls at other strikes on the same paths.
    std::vector<OptionSpec> instruments;
    for (double k : c.pnl.neutral_strikes) {
        OptionSpec o = option;
        o.kind = PayoffKind::european_call;
        o.strike = k;
        o.barrier = 0.0;
        instruments.push_back(o);
    }

    RunResult out;
    std::map<std::string, HedgeLedger> ledgers;
    std::map<std::string, std::string> failures;
    CoefficientMap higher;
    for (int i = 2; i <= q; ++i) higher[i] = ladder.coefficient(i);
    const double d1[] = {ladder.d1};

    auto base = [&] {
        HedgeLedger l;
        l.bank_cash = bank_term(d1, sc);
        l.stock_units = ladder[1];
        return l;
    };
    for (const auto& name : c.strategies) {
        try {
            HedgeLedger l;
            if (name == "delta") {
                l = base();
            } else if (name == "taylor+swaps") {
                l = assemble_ledger(ladder, sc, q, [&](int i, double ci) -> std::optional<HedgeLedger> {
                    SwapSpec s = swap;
                    s.order = i;
                    return moment_swap_basket(ci, sc, s, history);
                }, "moment_swap");
            } else if (name == "taylor+pja") {
                l = assemble_ledger(ladder, sc, q, [&](int i, double ci) -> std::optional<HedgeLedger> {
                    return pja_basket_simple(ci, sc, i, state, mv);
                }, "power_jump_asset");
            } else if (name == "minvar") {
                l = base();
                l.merge(to_ledger(mvp_bank_stock(higher, c.spot, mv, c.delta_t, c.market.rate)));
            } else if (name == "minvar+varswap") {
                l = base();
                l.merge(variance_swap_basket(ladder.coefficient(2), sc, swap, history));
                CoefficientMap rest = higher;
                rest.erase(2);
                l.merge(to_ledger(mvp_with_varswap(rest, c.spot, mv, c.delta_t, c.market.rate, swap, history,
                                                   c.pnl.weighting),
                                  &swap));
            } else if (name == "moment-neutral") {
                const int n = 1 + static_cast<int>(instruments.size());
                if (n > ladder.size()) throw UnhedgeableError("more instruments than ladder orders", ladder.size());
                std::vector<double> target(ladder.d2.begin(), ladder.d2.begin() + n);
                std::vector<std::vector<double>> cols;
                std::vector<double> unit(static_cast<std::size_t>(n), 0.0);
                unit[0] = 1.0;
                cols.push_back(unit);
                std::vector<double> d1_mix{ladder.d1};
                for (const auto& o : instruments) {
                    const double p0 = e.now.price(o, c.spot).price;
                    const auto li = ladder_for(c, e, o, table, p0);
                    cols.emplace_back(li.d2.begin(), li.d2.begin() + n);
                    d1_mix.push_back(li.d1);
                }
                const auto sol = solve_neutrality(target, cols);
                // Replicate dF with -w_i of each instrument; the bank earns the residual time decay.
                double decay = d1_mix[0];
                l.stock_units = -sol.weights[0];
                for (std::size_t i = 1; i < sol.weights.size(); ++i) {
                    decay += sol.weights[i] * d1_mix[i];
                    l.add_holding({AssetKind::option, static_cast<int>(i), {}}, -sol.weights[i],
                                  e.now.price(instruments[i - 1], c.spot).price);
                }
                const double dd[] = {decay};
                l.bank_cash = bank_term(dd, sc);
            }
            ledgers[name] = l;
        } catch (const Error& ex) {
            failures[name] = ex.what();
            ++out.upstream_errors;
            out.messages.push_back(name + ": " + ex.what());
        }
    }

    const auto scenarios = simulate_scenarios(c, q);
    const double accrual = std::expm1(c.market.rate * c.delta_t);
    std::map<std::string, std::vector<double>> residuals;
    std::size_t bankrupt = 0, regime_violations = 0;

    std::ostringstream csv;
    csv << "scenario,delta_s,jumps,option_change";
    for (const auto& name : c.strategies) csv << ",residual_" << name;
    csv << ",tail_bound,one_jump_regime,config_hash\n";

    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& s = scenarios[i];
        if (s.bankrupt) {
            ++bankrupt;
            continue;
        }
        const double s_end = c.spot + s.delta_s;
        const double change = e.next.price(option, s_end).price - price_now;
        std::vector<double> inst_exit;
        for (const auto& o : instruments) inst_exit.push_back(e.next.price(o, s_end).price);
        Marks marks{c.spot, s_end, accrual, [&](const AssetRef& a) -> double {
                        switch (a.kind) {
                        case AssetKind::variance_swap:
                        case AssetKind::moment_swap: {
                            SwapSpec sw = swap;
                            sw.order = a.order;
                            return swap_exit_price(sw, history, c.spot, s.delta_s);
                        }
                        case AssetKind::power_jump_asset:
                            return power_asset_exit(state, a.order, s.jump_power_sums.at(a.order), mv[a.order],
                                                    c.market.rate, c.delta_t);
                        case AssetKind::option:
                            return inst_exit.at(static_cast<std::size_t>(a.order - 1));
                        default:
                            throw DomainError("no exit price for " + a.label());
                        }
                    }};
        RegimeCheck regime{s.jumps, c.model.brownian_sigma > 0.0};
        if (!regime.one_jump()) ++regime_violations;
        double tail = 0.0, power = 1.0;
        for (int k = 1; k <= ladder.size(); ++k) {
            power *= std::abs(s.delta_s) / k;
            if (k > q) tail += std::abs(ladder[k]) * power;
        }
        csv << i << ',' << num(s.delta_s) << ',' << s.jumps << ',' << num(change);
        for (const auto& name : c.strategies) {
            auto it = ledgers.find(name);
            if (it == ledgers.end()) {
                csv << ',';
                continue;
            }
            const double r = change - change_of_value(it->second, marks);
            residuals[name].push_back(r);
            csv << ',' << num(r);
        }
        csv << ',' << num(tail) << ',' << (regime.one_jump() ? 1 : 0) << ',' << c.hash << '\n';
    }
    out.csv = csv.str();

    std::ostringstream sum;
    sum << "strategy,scenarios,mean,sd,max_abs,note,config_hash\n";
    for (const auto& name : c.strategies) {
        if (failures.count(name)) {
            sum << name << ",0,,,," << '"' << failures[name] << '"' << ',' << c.hash << '\n';
            continue;
        }
        const auto& r = residuals[name];
        double m = 0.0, mx = 0.0;
        for (double x : r) {
            m += x;
            mx = std::max(mx, std::abs(x));
        }
        m = r.empty() ? 0.0 : m / static_cast<double>(r.size());
        double v = 0.0;
        for (double x : r) v += (x - m) * (x - m);
        v = r.size() > 1 ? v / static_cast<double>(r.size() - 1) : 0.0;
        std::string note;
        if (name == "taylor+pja") note = "outside one-jump regime in " + std::to_string(regime_violations) + " scenarios";
        if (bankrupt) note += (note.empty() ? "" : "; ") + std::to_string(bankrupt) + " bankrupt scenarios skipped";
        sum << name << ',' << r.size() << ',' << num(m) << ',' << num(std::sqrt(v)) << ',' << num(mx) << ',' << note
            << ',' << c.hash << '\n';
    }
    out.summary = sum.str();
    return out;
}

}  // namespace levyhedge::experiment
