#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levyhedge/experiment.hpp"
#include "levyhedge/stencil.hpp"

using namespace levyhedge;
namespace ex = levyhedge::experiment;

namespace {

struct Flags {
    std::string config;
    std::size_t paths = 0;
    int steps = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string output;
    int half_width = 0;
    int p_max = 0;
    double price_step = 0.0;
    std::string table;
    double alpha_tol = 0.0;
    double spot = 0.0;
    std::vector<double> delta_s;
    std::vector<std::string> strategies;
    std::size_t scenarios = 0;
    int q = 0;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config, "JSON config; its values override flags")->check(CLI::ExistingFile);
    cmd->add_option("--paths", f.paths, "Monte Carlo paths");
    cmd->add_option("--steps", f.steps, "monitoring steps to maturity");
    cmd->add_option("--seed", f.seed, "Monte Carlo seed");
    cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
    cmd->add_option("-o,--output", f.output, "CSV output path (stdout if empty)");
    cmd->add_option("--half-width", f.half_width, "stencil half-width N");
    cmd->add_option("--p-max", f.p_max, "highest derivative order");
    cmd->add_option("--price-step", f.price_step, "spacing of the price grid");
    cmd->add_option("--table", f.table, "stencil table file");
    cmd->add_option("--alpha-tol", f.alpha_tol, "tolerance on the Taylor error");
    cmd->add_option("--spot", f.spot, "spot price at the hedge start");
    cmd->add_option("--delta-s", f.delta_s, "price moves to evaluate");
}

ex::json overlay(const Flags& f, CLI::App* cmd) {
    ex::json j = ex::json::object();
    auto set = [&](const char* flag, const char* block, const char* key, auto value) {
        if (cmd->count(flag)) {
            if (block) j[block][key] = value;
            else j[key] = value;
        }
    };
    set("--paths", "mc", "paths", f.paths);
    set("--steps", "mc", "steps", f.steps);
    set("--seed", "mc", "seed", f.seed);
    set("--threads", "mc", "threads", f.threads);
    set("--output", nullptr, "output", f.output);
    set("--half-width", "stencil", "half_width", f.half_width);
    set("--p-max", "stencil", "p_max", f.p_max);
    set("--price-step", "stencil", "price_step", f.price_step);
    set("--table", "stencil", "table", f.table);
    set("--alpha-tol", "scenario", "alpha_tol", f.alpha_tol);
    set("--spot", "scenario", "spot", f.spot);
    set("--delta-s", "scenario", "delta_s", f.delta_s);
    if (cmd->get_option_no_throw("--strategies")) set("--strategies", nullptr, "strategies", f.strategies);
    if (cmd->get_option_no_throw("--scenarios")) set("--scenarios", "pnl", "scenarios", f.scenarios);
    if (cmd->get_option_no_throw("--q")) set("--q", "pnl", "q", f.q);
    return j;
}

void write(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

std::string summary_path(const std::string& output) {
    if (output.empty()) return {};
    const auto dot = output.rfind('.');
    const auto slash = output.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return output + ".summary.csv";
    return output.substr(0, dot) + ".summary" + output.substr(dot);
}

int report(const ex::RunResult& r, const std::string& output, bool summary_file) {
    write(output, r.csv);
    if (!r.summary.empty()) {
        if (summary_file && !output.empty()) write(summary_path(output), r.summary);
        std::cerr << r.summary;
    }
    for (const auto& m : r.messages) std::cerr << "error: " << m << '\n';
    return r.upstream_errors == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Taylor-expansion hedging experiments for Levy-driven assets"};
    app.require_subcommand(1);

    auto* table = app.add_subcommand("table", "stencil lookup tables");
    table->require_subcommand(1);
    auto* build = table->add_subcommand("build", "build a stencil table in exact arithmetic");
    int n = 25, pmax = 49;
    std::uint64_t budget = default_stencil_budget;
    unsigned table_threads = 1;
    std::string table_out;
    build->add_option("--half-width", n, "stencil half-width N")->check(CLI::PositiveNumber);
    build->add_option("--p-max", pmax, "highest derivative order (<= 2N-1)")->check(CLI::PositiveNumber);
    build->add_option("--budget", budget, "maximum subset enumerations");
    build->add_option("--threads", table_threads, "worker threads");
    build->add_option("-o,--output", table_out, "table file")->required();

    Flags qf, cf, pf;
    auto* qtable = app.add_subcommand("qtable", "smallest Taylor order per price move");
    add_run_flags(qtable, qf);
    auto* converge = app.add_subcommand("converge", "term-by-term Taylor convergence for one move");
    add_run_flags(converge, cf);
    auto* pnl = app.add_subcommand("pnl", "hedge residuals over simulated periods");
    add_run_flags(pnl, pf);
    pnl->add_option("--strategies", pf.strategies, "strategies to run");
    pnl->add_option("--scenarios", pf.scenarios, "number of simulated periods");
    pnl->add_option("--q", pf.q, "Taylor truncation order");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            const auto t = build_lookup_table(n, pmax, budget, table_threads);
            save_table(t, table_out);
            std::cerr << "wrote N=" << n << " PMAX=" << pmax << " to " << table_out << '\n';
            return 0;
        }
        if (qtable->parsed()) {
            const auto c = ex::load_config("qtable", overlay(qf, qtable), qf.config);
            return report(ex::run_qtable(c), c.output, false);
        }
        if (converge->parsed()) {
            const auto c = ex::load_config("converge", overlay(cf, converge), cf.config);
            return report(ex::run_convergence(c), c.output, false);
        }
        if (pnl->parsed()) {
            const auto c = ex::load_config("pnl", overlay(pf, pnl), pf.config);
            return report(ex::run_pnl(c), c.output, true);
        }
    } catch (const BudgetExceededError& e) {
        std::cerr << "error: " << e.what() << " (reachable order " << e.reachable_order << ")\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
