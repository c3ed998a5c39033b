#pragma once

#include <stdexcept>
#include <string>

namespace levyhedge {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedOrderError : Error { using Error::Error; };
struct InvalidModelError : Error { using Error::Error; };
struct BankruptcyError : Error { using Error::Error; };
struct InsufficientResolutionError : Error { using Error::Error; };

struct InsufficientNodesError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct VersionError : Error { using Error::Error; };

struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_number(line) {}
    std::size_t line_number;
};

// Carries how far the work could get before hitting the limit.
struct BudgetExceededError : Error {
    BudgetExceededError(const std::string& what, int reachable)
        : Error(what), reachable_order(reachable) {}
    int reachable_order;
};

struct PricingFailedError : Error { using Error::Error; };
struct GridError : Error { using Error::Error; };
struct OrderError : Error { using Error::Error; };

struct NeedsHigherOrderError : Error {
    NeedsHigherOrderError(double best, int at)
        : Error("tolerance not reached; best error " + std::to_string(best) + " at order " +
                std::to_string(at)),
          best_error(best), best_order(at) {}
    double best_error;
    int best_order;
};

struct ZeroRateError : Error { using Error::Error; };

struct IncompleteMarketError : Error {
    explicit IncompleteMarketError(int i)
        : Error("no hedging basket available for term " + std::to_string(i)), term(i) {}
    int term;
};

struct ConventionError : Error { using Error::Error; };
struct AlignmentError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct DegenerateModelError : Error { using Error::Error; };
struct NoJumpVarianceError : Error { using Error::Error; };

struct UnhedgeableError : Error {
    UnhedgeableError(const std::string& what, int order) : Error(what), deficient_order(order) {}
    int deficient_order;
};

struct ConfigError : Error { using Error::Error; };

}  // namespace levyhedge
