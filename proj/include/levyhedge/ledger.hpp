#pragma once

#include <cmath>
#include <compare>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace levyhedge {

enum class AssetKind {
    variance_swap,
    moment_swap,
    power_jump_asset,     // T^(k) = e^{rt} Y^(k)
    power_jump_integral,  // U_theta, pays e^{r dt} times an iterated integral over the period
    option,               // another traded derivative, identified by `order` as an index
};

struct AssetRef {
    AssetKind kind = AssetKind::moment_swap;
    int order = 0;
    std::vector<int> tuple;

    auto operator<=>(const AssetRef&) const = default;

    std::string label() const {
        static const char* names[] = {"variance_swap", "moment_swap", "power_jump_asset", "power_jump_integral",
                                      "option"};
        std::string s = names[static_cast<int>(kind)];
        if (kind == AssetKind::power_jump_integral) {
            s += "(";
            for (std::size_t i = 0; i < tuple.size(); ++i) s += (i ? "," : "") + std::to_string(tuple[i]);
            return s + ")";
        }
        return s + "[" + std::to_string(order) + "]";
    }
};

struct Holding {
    AssetRef asset;
    double units = 0.0;
    double entry_price = 0.0;
};

struct TermPosition {
    double coefficient = 0.0;
    std::string basket;
};

// Positions opened at t and closed at t + dt.  Nothing is added in between.
struct HedgeLedger {
    double bank_cash = 0.0;
    double stock_units = 0.0;
    std::vector<Holding> holdings;
    std::map<int, TermPosition> term_positions;

    void add_holding(const AssetRef& a, double units, double entry_price) {
        for (auto& h : holdings)
            if (h.asset == a && h.entry_price == entry_price) {
                h.units += units;
                return;
            }
        holdings.push_back({a, units, entry_price});
    }

    void merge(const HedgeLedger& other, double scale = 1.0) {
        bank_cash += scale * other.bank_cash;
        stock_units += scale * other.stock_units;
        for (const auto& h : other.holdings) add_holding(h.asset, scale * h.units, h.entry_price);
    }

    // Cash needed at t to open every position.
    double initial_cost(double spot) const {
        double v = bank_cash + stock_units * spot;
        for (const auto& h : holdings) v += h.units * h.entry_price;
        return v;
    }
};

struct Marks {
    double spot_start = 0.0;
    double spot_end = 0.0;
    double accrual = 0.0;  // e^{r dt} - 1, formed with expm1
    std::function<double(const AssetRef&)> exit_price;
};

inline double change_of_value(const HedgeLedger& ledger, const Marks& marks) {
    double v = ledger.bank_cash * marks.accrual + ledger.stock_units * (marks.spot_end - marks.spot_start);
    for (const auto& h : ledger.holdings) v += h.units * (marks.exit_price(h.asset) - h.entry_price);
    return v;
}

}  // namespace levyhedge
