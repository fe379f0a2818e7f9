#include "optlab/theory.hpp"

#include <algorithm>
#include <cmath>

#include "optlab/noise.hpp"

namespace optlab::theory {

namespace {

double need(const std::optional<double>& field, const char* name) {
    if (!field) throw PreconditionError(std::string("bound request missing field '") + name + "'");
    return *field;
}

// exp with overflow reported instead of returned as inf: the exponential
// factors here are the subject of study, not incidental.
double checked_exp(double log_value) {
    if (log_value > 708.0) throw OverflowError("bound value exceeds double range");
    return std::exp(log_value);
}

const double kLog4e = std::log(4.0 * M_E);
const double kLog8e = std::log(8.0 * M_E);

// The noise-accumulation factor A of the upper bounds, per alpha case.
double sgd_A(double delta, double l, double sigma, double eta, double alpha, std::int64_t T) {
    const double Td = static_cast<double>(T);
    const double ls2e2 = l * sigma * sigma * eta * eta;
    if (alpha == 0.5) return delta + ls2e2 / 2.0 * (1.0 + std::log(Td));
    if (alpha > 0.5) return delta + ls2e2 / (2.0 * (1.0 - std::pow(2.0, 1.0 - 2.0 * alpha)));
    return delta / std::pow(Td, 1.0 - 2.0 * alpha) + ls2e2 / (2.0 * (1.0 - 2.0 * alpha));
}

}  // namespace

std::int64_t tau_sgd(double eta, double l, double alpha) {
    if (eta <= 0.0 || l <= 0.0) throw PreconditionError("tau_sgd: eta and l must be positive");
    if (alpha <= 0.0 || alpha >= 1.0) throw PreconditionError("tau_sgd: alpha must lie in (0, 1)");
    const double v = std::exp(std::log(eta * l) / alpha) - 1.0;
    if (v <= 0.0) return 0;
    return static_cast<std::int64_t>(std::ceil(v));
}

std::int64_t t0_hard(double eta, double l) {
    return static_cast<std::int64_t>(std::floor(eta * eta * l * l / 16.0 - 1.0));
}

RegimeReport sgd_regime(const BoundRequest& req) {
    const double eta = need(req.eta, "eta");
    const double l = need(req.l, "l");
    RegimeReport rep;
    rep.tau = tau_sgd(eta, l, req.alpha);
    rep.regime = (eta <= 1.0 / l) ? Regime::small_stepsize : Regime::large_stepsize;
    if (req.delta && req.sigma)
        rep.A = sgd_A(*req.delta, l, *req.sigma, eta, req.alpha, req.horizon_T);
    if (eta * l >= 5.0) {
        rep.t0 = t0_hard(eta, l);
        if (req.delta)
            rep.delta_tilde_lb = 4.0 / (3.0 * eta * l) *
                                 checked_exp((eta * eta * l * l / 16.0 - 2.0) * kLog8e) * *req.delta;
    }
    return rep;
}

RegimeReport amsgrad_regime(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double v0 = need(req.v0, "v0");
    const double alpha = req.alpha;
    if (alpha <= 0.0 || alpha >= 1.0)
        throw PreconditionError("amsgrad_regime: alpha must lie in (0, 1)");
    RegimeReport rep;
    rep.regime = (v0 >= gamma * l) ? Regime::small_stepsize : Regime::large_stepsize;
    const double tau_bound = std::exp(std::log(l * gamma / v0) / alpha) - 1.0;
    rep.tau = tau_bound <= 0.0 ? 0 : static_cast<std::int64_t>(std::ceil(tau_bound));
    if (alpha == 0.5)
        rep.M = l * gamma * gamma * (1.0 + std::log(l * gamma / v0));
    else if (alpha > 0.5)
        rep.M = l * gamma * gamma / (2.0 * (1.0 - std::pow(2.0, 1.0 - 2.0 * alpha)));
    else
        rep.M = gamma * std::pow(l * gamma, 1.0 / alpha - 1.0) /
                (2.0 * (1.0 - 2.0 * alpha) * std::pow(v0, 1.0 / alpha - 2.0));
    return rep;
}

double sgd_upper_bound(const BoundRequest& req, SgdBoundForm form) {
    const double eta = need(req.eta, "eta");
    const double l = need(req.l, "l");
    const double sigma = need(req.sigma, "sigma");
    const double delta = need(req.delta, "delta");
    const double alpha = req.alpha;
    const std::int64_t T = req.horizon_T;
    const double Td = static_cast<double>(T);
    if (alpha <= 0.0 || alpha >= 1.0)
        throw PreconditionError("sgd_upper_bound: alpha must lie in (0, 1)");
    if (form == SgdBoundForm::basic && alpha != 0.5)
        throw PreconditionError("sgd_upper_bound: basic form requires alpha = 1/2");

    const double A = sgd_A(delta, l, sigma, eta, alpha, T);
    const std::int64_t tau = tau_sgd(eta, l, alpha);

    if (tau == 0) {
        // Small-stepsize regime, eta <= 1/l; both forms coincide.
        if (alpha == 0.5) return 2.0 * A / (eta * std::sqrt(Td));
        if (alpha > 0.5) return 2.0 * A / (eta * std::pow(Td, 1.0 - alpha));
        return 2.0 * A / (eta * std::pow(Td, alpha));
    }

    const double taud = static_cast<double>(tau);
    if (form == SgdBoundForm::basic) {
        const double log_val = std::log(4.0 * std::sqrt(2.0) * l * A) + taud * kLog4e -
                               0.5 * std::log(M_PI * Td);
        return checked_exp(log_val);
    }
    // General form: sharper bracket, any alpha in (0, 1).
    if (alpha == 0.5) {
        const double bracket = 1.0 + l * eta * (1.0 + 2.0 * std::sqrt(taud));
        const double log_val = std::log(std::sqrt(2.0) * bracket * A / eta) + taud * kLog4e -
                               0.5 * std::log(M_PI * taud * Td);
        return checked_exp(log_val);
    }
    const double bracket = 1.0 + l * eta * (1.0 + std::pow(taud, 1.0 - alpha) / (1.0 - alpha));
    const double tpow = (alpha > 0.5) ? (1.0 - alpha) : alpha;
    // (4 e^{2 alpha})^tau kept in log space until the end
    const double log_val = std::log(2.0 * bracket * A / eta) + taud * (std::log(4.0) + 2.0 * alpha) -
                           alpha * std::log(2.0 * M_PI * taud) - tpow * std::log(Td);
    return checked_exp(log_val);
}

double sgd_bounded_grad_bound(const BoundRequest& req) {
    const double eta = need(req.eta, "eta");
    const double l = need(req.l, "l");
    const double sigma = need(req.sigma, "sigma");
    const double delta = need(req.delta, "delta");
    const double G = need(req.G, "G");
    const double Td = static_cast<double>(req.horizon_T);
    return (delta / eta + l * eta * (G * G + sigma * sigma) * std::log(Td) / 2.0) / std::sqrt(Td);
}

double sgd_lower_curve(double eta, double l, double delta, std::int64_t t, std::int64_t t0,
                       std::int64_t horizon_T) {
    if (eta * l < 5.0) throw PreconditionError("sgd_lower_curve: requires eta*l >= 5");
    if (t < 1 || t > horizon_T) throw PreconditionError("sgd_lower_curve: t out of range");
    if (t <= t0) {
        const double td = static_cast<double>(t);
        const double log_val = 0.5 * (std::log(2.0 * l * delta / 3.0) - 0.5 * std::log(td)) +
                               td / 2.0 * kLog8e;
        return checked_exp(log_val);
    }
    const double el = eta * l;
    const double dt_lb = 4.0 / (3.0 * el) * checked_exp((el * el / 16.0 - 2.0) * kLog8e) * delta;
    const double Td = static_cast<double>(horizon_T);
    return 0.25 * std::sqrt(dt_lb) *
           std::min(std::sqrt(l), 1.0 / std::sqrt(2.0 * eta) / std::pow(Td, 0.25));
}

double nsgd_upper_bound(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double sigma = need(req.sigma, "sigma");
    const double delta = need(req.delta, "delta");
    const double Td = static_cast<double>(req.horizon_T);
    return 3.0 * (delta / gamma + l * gamma * std::log(Td)) / std::sqrt(Td) + 24.0 * sigma;
}

double nsgd_noncvg_threshold(double l, double delta, double sigma, double gamma_max) {
    if (l <= 0.0 || delta <= 0.0 || sigma <= 0.0 || gamma_max <= 0.0)
        throw PreconditionError("nsgd_noncvg_threshold: parameters must be positive");
    const double third =
        (-delta + std::sqrt(delta * delta + 2.0 * delta * gamma_max * sigma)) / gamma_max;
    return std::min({sigma, std::sqrt(2.0 * l * delta), third});
}

TaggedBound amsgrad_det_upper_bound(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double delta = need(req.delta, "delta");
    const double v0 = need(req.v0, "v0");
    const double alpha = req.alpha;
    const double Td = static_cast<double>(req.horizon_T);
    if (alpha <= 0.0 || alpha >= 1.0)
        throw PreconditionError("amsgrad_det_upper_bound: alpha must lie in (0, 1)");

    if (alpha == 0.5) {
        TaggedBound out;
        out.metric = BoundMetric::avg_grad_norm;
        if (v0 < gamma * l) {
            out.value = std::sqrt(2.0 * delta * std::max(v0, std::sqrt(2.0 * l * delta))) /
                        (std::sqrt(gamma) * std::pow(Td, 0.25));
        } else {
            const double M = l * gamma * gamma * (1.0 + std::log(l * gamma / v0));
            out.value = gamma * gamma * l * l / (v0 * v0 * std::sqrt(Td)) +
                        std::sqrt(2.0 * (M + delta) *
                                  std::max(gamma * l, std::sqrt(2.0 * l * (M + delta)))) /
                            (std::sqrt(gamma) * std::pow(Td, 0.25));
        }
        return out;
    }

    TaggedBound out;
    out.metric = BoundMetric::avg_grad_norm_sq;
    if (v0 < gamma * l) {
        out.value = 2.0 * delta / (gamma * std::pow(Td, 1.0 - alpha)) *
                    std::max(v0, std::sqrt(2.0 * l * delta));
        return out;
    }
    double M;
    if (alpha > 0.5) {
        M = l * gamma * gamma / (2.0 * (1.0 - std::pow(2.0, 1.0 - 2.0 * alpha)));
    } else {
        M = gamma * std::pow(l * gamma, 1.0 / alpha - 1.0) /
            (2.0 * (1.0 - 2.0 * alpha) * std::pow(v0, 1.0 / alpha - 2.0));
    }
    out.value = std::pow(l * gamma / v0, 1.0 / alpha) * gamma * gamma * l * l / Td +
                2.0 * (M + delta) / (gamma * std::pow(Td, 1.0 - alpha)) *
                    std::max(gamma * l, std::sqrt(2.0 * l * (M + delta)));
    return out;
}

double amsgrad_det_lower(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double delta = need(req.delta, "delta");
    const double v0 = need(req.v0, "v0");
    const double alpha = req.alpha;
    if (!(v0 <= l * gamma / 2.0))
        throw PreconditionError("amsgrad_det_lower: requires v0 <= l*gamma/2");
    if (!(gamma <= 4.0 * delta / v0))
        throw PreconditionError("amsgrad_det_lower: requires gamma <= 4*delta/v0");
    if (alpha == 0.0) return v0;
    if (alpha < 0.0 || alpha >= 1.0)
        throw PreconditionError("amsgrad_det_lower: alpha must lie in [0, 1)");
    const double Td = static_cast<double>(req.horizon_T);
    const double inner =
        std::max(1.0 / l, gamma / ((1.0 - alpha) * v0) * std::pow(Td, 1.0 - alpha));
    return std::sqrt(delta / (16.0 * inner));
}

double amsgrad_stoch_lower(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double delta = need(req.delta, "delta");
    const double sigma = need(req.sigma, "sigma");
    const double zeta = need(req.zeta, "zeta");
    const double beta2 = need(req.beta2, "beta2");
    if (zeta <= 0.5 || zeta >= 1.0) throw DomainError("amsgrad_stoch_lower: zeta must lie in (1/2, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw DomainError("amsgrad_stoch_lower: beta2 must lie in [0, 1)");
    const double Td = static_cast<double>(req.horizon_T);
    const double denom_factor = gamma * std::sqrt(2.0 * noise::gamma_function(1.0 - zeta / 2.0)) /
                                (sigma * std::pow(M_E * (1.0 / zeta - 1.0), zeta / 2.0) *
                                 (1.0 - zeta) * std::sqrt(1.0 - beta2));
    const double inner = std::max(1.0 / l, denom_factor * (std::pow(Td, 1.0 - zeta) - zeta));
    return std::sqrt(delta / (16.0 * inner));
}

double nsgdm_rate_template(const BoundRequest& req) {
    const double gamma = need(req.gamma, "gamma");
    const double l = need(req.l, "l");
    const double sigma = need(req.sigma, "sigma");
    const double delta = need(req.delta, "delta");
    const double Td = static_cast<double>(req.horizon_T);
    return (delta / gamma + (sigma + l * gamma) * std::log(Td)) / std::pow(Td, 0.25);
}

double adagrad_rate_template(const BoundRequest& req) {
    const double eta = need(req.eta, "eta");
    const double l = need(req.l, "l");
    const double sigma = need(req.sigma, "sigma");
    const double delta = need(req.delta, "delta");
    const double v0 = need(req.v0, "v0");
    const double Td = static_cast<double>(req.horizon_T);
    const double A = (delta / eta + sigma + l * eta) * (1.0 + std::log(Td));
    return 2.0 * A / std::sqrt(Td) + std::sqrt(v0 * A) / std::sqrt(Td) +
           2.0 * std::sqrt(A * sigma) / std::pow(Td, 0.25);
}

}  // namespace optlab::theory
