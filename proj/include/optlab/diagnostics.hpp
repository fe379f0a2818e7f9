#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "optlab/noise.hpp"
#include "optlab/problem.hpp"

namespace optlab::diagnostics {

struct RateFit {
    double exponent = 0.0;
    double log_intercept = 0.0;
    double r_squared = 0.0;
    std::pair<double, double> fit_window{0.0, 0.0};  // (start_t, end_t)
};

struct MonteCarloStat {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t n = 0;
};

enum class Metric { grad_norm, grad_norm_sq, f_value };

// OLS on (log t, log value) over the trailing window_fraction of the series.
RateFit fit_power_law(const std::vector<std::pair<double, double>>& series,
                      double window_fraction = 0.5);

// Prefix means of a series: out[t] = mean(values[0..t]).
std::vector<double> running_average(const std::vector<double>& values);

// Across-seed mean and standard error of a metric, at a fixed record index
// or averaged over t within each trajectory first. Trajectories are reduced
// in seed-sorted order so the result is independent of input ordering.
MonteCarloStat estimate_expectation(const std::vector<Trajectory>& trajectories, Metric metric,
                                    std::optional<std::int64_t> t);

// Max over probe pairs (uniform in the evaluation domain, plus pairs
// straddling each piece boundary at offsets 1e-1..1e-6) of
// ||grad f(a) - grad f(b)|| / ||a - b||, divided by the certified constant.
double verify_smoothness(const ProblemInstance& instance, std::int64_t n_probes,
                         noise::RngStream& rng);

struct BoundaryJump {
    double x = 0.0;
    double value_jump = 0.0;
    double slope_jump = 0.0;
};

struct C1Report {
    std::vector<BoundaryJump> jumps;
    bool pass = true;
};

// Value/slope jumps at every interior piece boundary; pass iff all jumps
// are <= tol * max(1, local scale).
C1Report check_c1_continuity(const ProblemInstance& instance, double tol);

// Earliest index with grad_norm >= factor * grad_norm(0), if any.
std::optional<std::int64_t> detect_blowup(const Trajectory& trajectory, double factor);

}  // namespace optlab::diagnostics
