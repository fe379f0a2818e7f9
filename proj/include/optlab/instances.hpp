#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "optlab/noise.hpp"
#include "optlab/problem.hpp"

namespace optlab::instances {

// Reported geometry of the trajectory-dependent hard instance.
struct HardInstanceReport {
    std::int64_t t0 = 0;
    double x_t0 = 0.0;
    double x_t0_plus1 = 0.0;
    double delta_tilde = 0.0;  // l * x_t0^2 / 2
    std::vector<double> segment_boundaries;
    Vec phase1_iterates;     // x_0 .. x_{t0+1}, exactly as replayed on the instance
    double x_t0_dd = 0.0;    // compensated-arithmetic cross-check of x_t0
    double cap_sum = 0.0;    // sum of eta_t for t0 < t < T
    double valley_scale = 0.0;  // max(1/l, cap_sum)
};

// f(x) = l ||x||^2 / 2 with f(x0) - f* = delta.
ProblemInstance make_quadratic(double l, double delta, int dimension = 1,
                               double domain_halfwidth = 0.0);

// The 4-segment piecewise quadratic on which decaying-stepsize gradient
// descent first blows up for t0 steps and then stalls in a flat valley.
// Requires eta * l >= 5 and a t0 small enough that (8e)^t0 < 1e290.
std::pair<ProblemInstance, HardInstanceReport> build_sgd_hard_instance(double l, double delta,
                                                                       double eta,
                                                                       std::int64_t horizon_T);

// Flat-valley quadratic x^2 / (4 max{1/l, sum of caps}); certified l-smooth.
ProblemInstance make_momentum_lb_quadratic(double l, double delta,
                                           const std::function<double(std::int64_t)>& stepsize_caps,
                                           std::int64_t horizon_T);

// f(x) = (v0/gamma) x^2 with x0 = gamma/2; constant-stepsize AMSGrad-norm
// bounces between +-gamma/2 on it forever.
ProblemInstance make_amsgrad_oscillator(double v0, double gamma, double l, double delta);

// Quadratic + multiplicative sign-flip oracle on a bounded region; NSGD's
// expected gradient norm cannot reach epsilon on it. Free parameters are
// fixed at the midpoints of their admissible intervals.
std::pair<ProblemInstance, noise::NoiseSpec> make_nsgd_noncvg_instance(double l, double sigma,
                                                                       double epsilon, double delta,
                                                                       double gamma_max);

// 2-D lift of the flat valley with symmetric Frechet-tailed noise on the
// second coordinate; starves AMSGrad-norm's stepsize with probability >= 1/2.
std::pair<ProblemInstance, noise::NoiseSpec> make_amsgrad_slow_instance(
    double l, double delta, double sigma, double zeta, double gamma, double beta2,
    std::int64_t horizon_T);

}  // namespace optlab::instances
