#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace optlab {

using Vec = std::vector<double>;

// Magnitudes above this are treated as numerical blow-up, not as values.
inline constexpr double kOverflowLimit = 1e300;

// Normalized steps skip the update when the sampled gradient is below this.
inline constexpr double kZeroGradientGuard = 1e-300;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct PreconditionError : Error { using Error::Error; };
struct DegenerateError : Error { using Error::Error; };
struct KindMismatchError : Error { using Error::Error; };
struct ContractError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

struct OverflowError : Error {
    std::int64_t iteration = -1;
    explicit OverflowError(const std::string& msg, std::int64_t iter = -1)
        : Error(msg), iteration(iter) {}
};

// Config parse failure; `pointer` is a JSON pointer to the offending field.
struct ConfigError : Error {
    std::string pointer;
    ConfigError(const std::string& msg, std::string ptr)
        : Error(msg + " (at " + ptr + ")"), pointer(std::move(ptr)) {}
};

inline double squared_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(const Vec& v) { return std::sqrt(squared_norm(v)); }

inline bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Stepsize schedules throughout are of the form scale / (t+1)^alpha,
// evaluated lazily; alpha = 1/2 goes through sqrt so that independent
// call sites agree bitwise.
inline double power_stepsize(double scale, double alpha, std::int64_t t) {
    const double base = static_cast<double>(t + 1);
    if (alpha == 0.0) return scale;
    if (alpha == 0.5) return scale / std::sqrt(base);
    return scale / std::pow(base, alpha);
}

}  // namespace optlab
