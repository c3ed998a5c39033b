#pragma once

#include <cstdint>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "errors.hpp"

namespace levyhedge {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) {
    using boost::multiprecision::cpp_bin_float_100;
    if (q == 0) return 0.0;
    const cpp_bin_float_100 v = cpp_bin_float_100(boost::multiprecision::numerator(q)) /
                                cpp_bin_float_100(boost::multiprecision::denominator(q));
    return v.convert_to<double>();
}

inline constexpr std::uint64_t default_stencil_budget = 100'000'000;

namespace detail {

// Sums of squared products stay below 2^512 for every half-width the budget admits.
using Acc = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
    512, 512, boost::multiprecision::signed_magnitude, boost::multiprecision::checked, void>>;

inline BigInt factorial(int n) {
    BigInt f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

inline std::uint64_t binomial_u64(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

// For a fixed c, walks every c-subset of {1..N} once.  With Q the product of the values NOT
// chosen, `total` is the sum of Q^2 over all subsets and excl[y] the sum over subsets that
// contain y, so total - excl[y] sums over the subsets of {1..N} without y.  Multiplying
// 1/prod(chosen)^2 by (N!)^2 gives Q^2, which keeps everything in integers.
struct CombinationSums {
    int n = 0;
    int c = 0;
    int skip = 0;  // value never chosen (0: none)
    bool track_excl = true;
    std::vector<Acc> suffix;  // product of (d+1..n)
    Acc total = 0;
    std::vector<Acc> excl;
    std::uint64_t visits = 0;

    CombinationSums(int n_, int c_, int skip_ = 0, bool track = true) : n(n_), c(c_), skip(skip_), track_excl(track) {
        suffix.assign(static_cast<std::size_t>(n) + 1, Acc(1));
        for (int d = n - 1; d >= 0; --d) suffix[static_cast<std::size_t>(d)] = suffix[static_cast<std::size_t>(d) + 1] * (d + 1);
        excl.assign(static_cast<std::size_t>(n) + 1, Acc(0));
        total = walk(0, 0, Acc(1));
    }

    Acc walk(int d, int chosen, const Acc& q) {
        if (chosen == c) {
            ++visits;
            const Acc full = q * suffix[static_cast<std::size_t>(d)];
            return full * full;
        }
        const int y = d + 1;
        const int available = n - d - ((skip > d) ? 1 : 0);
        if (available < c - chosen) return Acc(0);
        Acc sum = 0;
        if (y != skip) {
            Acc in = walk(d + 1, chosen + 1, q);
            if (track_excl) excl[static_cast<std::size_t>(y)] += in;
            sum += in;
        }
        sum += walk(d + 1, chosen, q * y);
        return sum;
    }
};

inline BigInt to_big(const Acc& a) { return static_cast<BigInt>(a); }

struct OrderShape {
    int c;      // size of the combinations
    bool even;  // p even
    int sign0;  // (-1)^{c1}
};

inline OrderShape order_shape(int p) {
    OrderShape s;
    s.c = (p - 1) / 2;
    s.even = p % 2 == 0;
    s.sign0 = (s.c % 2 == 0) ? -1 : 1;
    return s;
}

// d_k for k != 0 given the combination sum A over subsets avoiding |k|.
inline Rational coefficient_from_sum(int p, int n, int k, const BigInt& a) {
    const auto shape = order_shape(p);
    const int ak = k < 0 ? -k : k;
    BigInt num = factorial(p) * a;
    BigInt den = factorial(n - ak) * factorial(n + ak);
    BigInt kp = ak;
    if (shape.even) kp *= ak;
    den *= kp;
    int sign = (ak % 2 == 0 ? 1 : -1) * shape.sign0;
    // 1/k^{1+c2} keeps the sign of k when the exponent is odd.
    if (k < 0 && !shape.even) sign = -sign;
    Rational r(num, den);
    return sign < 0 ? Rational(-r) : r;
}

}  // namespace detail

// Single coefficient d_k^(p) for the symmetric 2N+1 point stencil.
inline Rational stencil_coefficient_exact(int p, int n, int k) {
    if (p < 1) throw OrderError("derivative order must be >= 1");
    // 2N+1 nodes determine derivatives up to order 2N.
    if (p > 2 * n) throw InsufficientNodesError("need 2N >= p (N=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");
    if (k < -n || k > n) throw DomainError("offset outside -N..N");
    const auto shape = detail::order_shape(p);
    if (k == 0) {
        if (!shape.even) return Rational(0);
        Rational s = 0;
        for (int j = 1; j <= n; ++j) s += stencil_coefficient_exact(p, n, j);
        return Rational(-2 * s);
    }
    const int ak = k < 0 ? -k : k;
    detail::CombinationSums sums(n, shape.c, ak, false);
    return detail::coefficient_from_sum(p, n, k, detail::to_big(sums.total));
}

inline double stencil_coefficient(int p, int n, int k) { return to_double(stencil_coefficient_exact(p, n, k)); }

class StencilTable {
public:
    StencilTable() = default;
    StencilTable(int n, int p_max) : n_(n), p_max_(p_max) {
        exact_.assign(static_cast<std::size_t>(p_max) * width(), Rational(0));
        values_.assign(exact_.size(), 0.0);
    }

    int half_width() const { return n_; }
    int p_max() const { return p_max_; }
    std::size_t width() const { return static_cast<std::size_t>(2 * n_ + 1); }

    const Rational& exact(int p, int k) const { return exact_[index(p, k)]; }
    double operator()(int p, int k) const { return values_[index(p, k)]; }
    std::span<const double> row(int p) const { return {values_.data() + index(p, -n_), width()}; }

    void set(int p, int k, Rational v) {
        const auto i = index(p, k);
        values_[i] = to_double(v);
        exact_[i] = std::move(v);
    }

    std::map<std::string, std::string> metadata;

    friend bool operator==(const StencilTable& a, const StencilTable& b) {
        return a.n_ == b.n_ && a.p_max_ == b.p_max_ && a.exact_ == b.exact_;
    }

private:
    std::size_t index(int p, int k) const {
        if (p < 1 || p > p_max_) throw OrderError("order " + std::to_string(p) + " not in table (p_max " + std::to_string(p_max_) + ")");
        if (k < -n_ || k > n_) throw DomainError("offset outside -N..N");
        return static_cast<std::size_t>(p - 1) * width() + static_cast<std::size_t>(k + n_);
    }

    int n_ = 0;
    int p_max_ = 0;
    std::vector<Rational> exact_;
    std::vector<double> values_;
};

// Number of combination visits a table build performs.
inline std::uint64_t stencil_build_cost(int n, int p_max) {
    std::uint64_t total = 0;
    for (int c = 0; c <= (p_max - 1) / 2; ++c) total += detail::binomial_u64(n, c);
    return total;
}

// Builds all d_k^(p), p <= p_max.  Orders sharing c = floor((p-1)/2) share one enumeration.
inline StencilTable build_lookup_table(int n, int p_max, std::uint64_t budget = default_stencil_budget,
                                       unsigned threads = 1) {
    if (n < 1) throw DomainError("half-width must be >= 1");
    if (p_max < 1) throw OrderError("p_max must be >= 1");
    if (p_max > 2 * n - 1)
        throw InsufficientNodesError("p_max " + std::to_string(p_max) + " needs more than " + std::to_string(2 * n + 1) + " nodes");
    const std::uint64_t cost = stencil_build_cost(n, p_max);
    if (cost > budget) {
        int reachable = 0;
        std::uint64_t used = 0;
        for (int c = 0; c <= (p_max - 1) / 2; ++c) {
            used += detail::binomial_u64(n, c);
            if (used > budget) break;
            reachable = std::min(2 * c + 2, p_max);
        }
        throw BudgetExceededError("stencil build needs " + std::to_string(cost) + " combination visits, budget " +
                                      std::to_string(budget) + "; orders up to " + std::to_string(reachable) +
                                      " fit",
                                  reachable);
    }
    const int c_max = (p_max - 1) / 2;
    std::vector<std::vector<BigInt>> avoid(static_cast<std::size_t>(c_max) + 1);
    auto run = [&](int c) {
        detail::CombinationSums sums(n, c);
        std::vector<BigInt> out(static_cast<std::size_t>(n) + 1);
        for (int y = 1; y <= n; ++y)
            out[static_cast<std::size_t>(y)] = detail::to_big(sums.total - sums.excl[static_cast<std::size_t>(y)]);
        return out;
    };
    if (threads <= 1) {
        for (int c = 0; c <= c_max; ++c) avoid[static_cast<std::size_t>(c)] = run(c);
    } else {
        std::vector<std::future<std::vector<BigInt>>> jobs;
        for (int c = 0; c <= c_max; ++c) jobs.push_back(std::async(std::launch::async, run, c));
        for (int c = 0; c <= c_max; ++c) avoid[static_cast<std::size_t>(c)] = jobs[static_cast<std::size_t>(c)].get();
    }
    StencilTable table(n, p_max);
    for (int p = 1; p <= p_max; ++p) {
        const auto shape = detail::order_shape(p);
        Rational side = 0;
        for (int k = 1; k <= n; ++k) {
            const auto& a = avoid[static_cast<std::size_t>(shape.c)][static_cast<std::size_t>(k)];
            Rational pos = detail::coefficient_from_sum(p, n, k, a);
            Rational neg = shape.even ? pos : Rational(-pos);
            side += pos;
            table.set(p, k, std::move(pos));
            table.set(p, -k, std::move(neg));
        }
        table.set(p, 0, shape.even ? Rational(-2 * side) : Rational(0));
    }
    table.metadata["budget"] = std::to_string(budget);
    table.metadata["visits"] = std::to_string(cost);
    return table;
}

// (1/T^p) sum_k d_k f_k over samples at t0 + kT, k = -N..N.
inline double apply_stencil(std::span<const double> samples, int p, double period, const StencilTable& table) {
    if (samples.size() != table.width())
        throw DimensionError("expected " + std::to_string(table.width()) + " samples, got " + std::to_string(samples.size()));
    if (!(period > 0.0)) throw DomainError("sampling period must be > 0");
    const auto d = table.row(p);
    long double acc = 0.0L;
    for (std::size_t j = 0; j < samples.size(); ++j) acc += static_cast<long double>(d[j]) * samples[j];
    return static_cast<double>(acc / std::pow(static_cast<long double>(period), p));
}

inline constexpr int stencil_file_version = 1;

inline void save_table(const StencilTable& table, std::ostream& os) {
    os << "N=" << table.half_width() << " PMAX=" << table.p_max() << " VERSION=" << stencil_file_version << '\n';
    for (int p = 1; p <= table.p_max(); ++p)
        for (int k = -table.half_width(); k <= table.half_width(); ++k) {
            const auto& q = table.exact(p, k);
            os << p << ' ' << k << ' ' << boost::multiprecision::numerator(q) << '/'
               << boost::multiprecision::denominator(q) << '\n';
        }
}

inline void save_table(const StencilTable& table, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    save_table(table, os);
    if (!os) throw Error("write failed for " + path);
}

namespace detail {

inline int parse_int(const std::string& s, std::size_t line, const std::string& what) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw ParseError(line, "bad " + what + " '" + s + "'");
    }
    if (used != s.size()) throw ParseError(line, "bad " + what + " '" + s + "'");
    return v;
}

inline BigInt parse_big(const std::string& s, std::size_t line) {
    const bool ok = !s.empty() && s.find_first_not_of("0123456789", s[0] == '-' ? 1 : 0) == std::string::npos &&
                    s != "-";
    if (!ok) throw ParseError(line, "bad integer '" + s + "'");
    return BigInt(s);
}

}  // namespace detail

inline StencilTable load_table(std::istream& is) {
    std::string text;
    std::size_t line_no = 0;
    std::map<std::string, std::string> header;
    while (std::getline(is, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(text);
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) throw ParseError(line_no, "header token without '=': " + tok);
            header[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        break;
    }
    if (header.empty()) throw ParseError(line_no, "missing header");
    if (!header.count("VERSION")) throw VersionError("stencil file has no VERSION field");
    if (header["VERSION"] != std::to_string(stencil_file_version))
        throw VersionError("stencil file version " + header["VERSION"] + ", expected " + std::to_string(stencil_file_version));
    if (!header.count("N") || !header.count("PMAX")) throw ParseError(line_no, "header needs N and PMAX");
    const int n = detail::parse_int(header["N"], line_no, "N");
    const int p_max = detail::parse_int(header["PMAX"], line_no, "PMAX");
    if (n < 1 || p_max < 1 || p_max > 2 * n - 1) throw ParseError(line_no, "inconsistent N/PMAX");

    StencilTable table(n, p_max);
    std::vector<char> seen(static_cast<std::size_t>(p_max) * table.width(), 0);
    std::size_t filled = 0;
    while (std::getline(is, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ss(text);
        std::string ps, ks, qs, extra;
        if (!(ss >> ps >> ks >> qs) || (ss >> extra)) throw ParseError(line_no, "expected 'p k numerator/denominator'");
        const int p = detail::parse_int(ps, line_no, "order");
        const int k = detail::parse_int(ks, line_no, "offset");
        if (p < 1 || p > p_max) throw ParseError(line_no, "order " + ps + " outside 1.." + std::to_string(p_max));
        if (k < -n || k > n) throw ParseError(line_no, "offset " + ks + " outside -N..N for N=" + std::to_string(n));
        const auto slash = qs.find('/');
        if (slash == std::string::npos) throw ParseError(line_no, "coefficient must be numerator/denominator");
        const BigInt num = detail::parse_big(qs.substr(0, slash), line_no);
        const BigInt den = detail::parse_big(qs.substr(slash + 1), line_no);
        if (den <= 0) throw ParseError(line_no, "denominator must be positive");
        const auto i = static_cast<std::size_t>(p - 1) * table.width() + static_cast<std::size_t>(k + n);
        if (seen[i]) throw ParseError(line_no, "duplicate entry for p=" + ps + " k=" + ks);
        seen[i] = 1;
        ++filled;
        table.set(p, k, Rational(num, den));
    }
    if (filled != seen.size())
        throw ParseError(line_no, "table has " + std::to_string(filled) + " of " + std::to_string(seen.size()) + " entries");
    return table;
}

inline StencilTable load_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open " + path);
    return load_table(is);
}

}  // namespace levyhedge
