#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "optlab/common.hpp"

namespace optlab::theory {

// Parameter bundle for the bound evaluators; each evaluator pulls exactly
// the fields it needs and rejects requests missing any of them.
struct BoundRequest {
    std::optional<double> eta, gamma, l, sigma, delta, v0, G, zeta, beta2;
    double alpha = 0.5;
    std::int64_t horizon_T = 1;
};

enum class SgdBoundForm { basic, general };

enum class BoundMetric { avg_grad_norm, avg_grad_norm_sq, min_grad_norm };

struct TaggedBound {
    double value = 0.0;
    BoundMetric metric = BoundMetric::avg_grad_norm_sq;
};

enum class Regime { small_stepsize, large_stepsize };

struct RegimeReport {
    std::int64_t tau = 0;
    std::int64_t t0 = 0;
    Regime regime = Regime::small_stepsize;
    double A = 0.0;
    double M = 0.0;
    double delta_tilde_lb = 0.0;
};

// ceil((eta*l)^(1/alpha) - 1), clamped at 0: the first iteration at which
// the decaying stepsize has fallen to 1/l.
std::int64_t tau_sgd(double eta, double l, double alpha);

// floor(eta^2 l^2 / 16 - 1): blow-up horizon of the hard instance.
std::int64_t t0_hard(double eta, double l);

RegimeReport sgd_regime(const BoundRequest& req);

// AMSGrad-norm case split: small regime iff v0 >= gamma*l; tau is the
// bound ceil((l*gamma/v0)^(1/alpha) - 1) on the first small-stepsize step.
RegimeReport amsgrad_regime(const BoundRequest& req);

// Bound on (1/T) sum E||grad f(x_t)||^2 for SGD with eta/(t+1)^alpha.
double sgd_upper_bound(const BoundRequest& req, SgdBoundForm form);

// Same metric under an additional gradient bound G.
double sgd_bounded_grad_bound(const BoundRequest& req);

// Pointwise lower bound |grad f(x_t)| on the hard instance: growth curve for
// t <= t0, plateau (via the guaranteed amplified-gap bound) for t > t0.
double sgd_lower_curve(double eta, double l, double delta, std::int64_t t, std::int64_t t0,
                       std::int64_t horizon_T);

// Bound on (1/T) sum E||grad f(x_t)|| for NSGD with gamma/sqrt(t+1).
double nsgd_upper_bound(const BoundRequest& req);

// Largest epsilon the nonconvergence construction can enforce for the class.
double nsgd_noncvg_threshold(double l, double delta, double sigma, double gamma_max);

// Deterministic AMSGrad-norm upper bound; tagged with the metric it bounds
// (avg norm at alpha = 1/2, avg squared norm otherwise).
TaggedBound amsgrad_det_upper_bound(const BoundRequest& req);

// Deterministic AMSGrad-norm lower bound on the min gradient norm.
double amsgrad_det_lower(const BoundRequest& req);

// Stochastic (Frechet-noise) AMSGrad-norm lower bound on the min gradient
// norm, holding with probability >= 1/2.
double amsgrad_stoch_lower(const BoundRequest& req);

// Shape-only rate templates (unknown numerical constant set to 1); verified
// by fitted exponents, never by absolute dominance.
double nsgdm_rate_template(const BoundRequest& req);
double adagrad_rate_template(const BoundRequest& req);

}  // namespace optlab::theory
