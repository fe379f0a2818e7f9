#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "optlab/common.hpp"

namespace optlab {

// Axis-aligned box, used as the diagnostics probe region.
struct Box {
    Vec lo, hi;
};

// One quadratic piece a*x^2 + b*x + c on [lo, hi).
struct QuadPiece {
    double lo, hi;
    double a, b, c;
    double value(double x) const { return (a * x + b) * x + c; }
    double slope(double x) const { return 2.0 * a * x + b; }
};

// C^1 piecewise quadratic on the whole real line. Pieces are ordered,
// contiguous, first lo = -inf and last hi = +inf.
struct PiecewiseQuadratic {
    std::vector<QuadPiece> pieces;
    bool symmetric = false;  // built by reflecting about x = 0

    const QuadPiece& piece_at(double x) const;
    double value(double x) const { return piece_at(x).value(x); }
    double slope(double x) const { return piece_at(x).slope(x); }
    // Interior piece boundaries, left to right.
    std::vector<double> boundaries() const;
};

// f(x) = coeff * ||x||^2, or coeff * (x^1)^2 when first_coord_only is set
// (the latter is the 2-D lift used by the noise-only-on-coordinate-2
// construction).
struct QuadraticBody {
    double coeff = 0.5;
    bool first_coord_only = false;
};

struct PiecewiseBody {
    PiecewiseQuadratic pw;
};

using Body = std::variant<QuadraticBody, PiecewiseBody>;

// An evaluable objective with its certified constants. Immutable after
// construction; optimizers never mutate instances.
struct ProblemInstance {
    std::string id;
    int dimension = 1;
    double smoothness_l = 1.0;  // certified Lipschitz constant of the gradient
    double initial_gap = 1.0;   // Delta >= f(x0) - f*
    double optimum_value = 0.0;
    Vec initial_point;
    std::optional<double> gradient_bound;  // G, when certified on the domain
    std::optional<Box> evaluation_domain;
    std::optional<Vec> optimum_point;
    Body body = QuadraticBody{};
    // Builder-specific derived constants (documentation + harness checks).
    std::vector<std::pair<std::string, double>> params;

    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    // Returns (f(x), grad f(x)); throws DimensionError on length mismatch and
    // OverflowError when |value| or ||gradient|| exceeds 1e300.
    std::pair<double, Vec> evaluate(const Vec& x) const;

    const PiecewiseQuadratic* piecewise() const {
        auto* p = std::get_if<PiecewiseBody>(&body);
        return p ? &p->pw : nullptr;
    }
    double param(const std::string& name) const;

    std::string to_json_string() const;
    static ProblemInstance from_json_string(const std::string& text);
};

// One step's observables. Record t describes the pre-step iterate x_t and
// the stochastic gradient sampled at it.
struct TrajectoryRecord {
    std::int64_t t = 0;
    double f_value = 0.0;
    double grad_norm = 0.0;        // ||grad f(x_t)||, true gradient
    double stoch_grad_norm = 0.0;  // ||g(x_t; xi_t)||
    double effective_stepsize = 0.0;
    std::array<double, 4> iterate_summary{};  // first min(dim,4) coordinates
    int summary_len = 0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::uint64_t seed = 0;
    std::string instance_id;
    std::string optimizer_id;
    // Index of the first iterate that could not be recorded because the run
    // exceeded the overflow limit; records end just before it.
    std::optional<std::int64_t> overflow_at;
};

}  // namespace optlab
