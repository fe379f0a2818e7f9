#include <cmath>

#include "doctest.h"
#include "optlab/noise.hpp"
#include "optlab/theory.hpp"

using namespace optlab;
using namespace optlab::theory;

namespace {

BoundRequest sgd_req(double eta, double l, double sigma, double delta, std::int64_t T,
                     double alpha = 0.5) {
    BoundRequest r;
    r.eta = eta;
    r.l = l;
    r.sigma = sigma;
    r.delta = delta;
    r.horizon_T = T;
    r.alpha = alpha;
    return r;
}

}  // namespace

TEST_CASE("tau_sgd") {
    CHECK(tau_sgd(1.0, 2.0, 0.5) == 3);
    CHECK(tau_sgd(0.5, 2.0, 0.5) == 0);   // eta*l = 1
    CHECK(tau_sgd(0.25, 2.0, 0.5) == 0);  // eta*l < 1
    CHECK(tau_sgd(2.0, 8.0, 0.75) == 40);  // ceil(16^{4/3} - 1)
}

TEST_CASE("sgd upper bound, small regime") {
    // eta = 1, l = 1, sigma = 0, delta = 1, T = 100 -> 2A/(eta sqrt(T)) = 0.2
    const double b = sgd_upper_bound(sgd_req(1.0, 1.0, 0.0, 1.0, 100), SgdBoundForm::basic);
    CHECK(b == doctest::Approx(0.2).epsilon(1e-12));
    // sigma = 0, eta <= 1/l: A = delta, forms agree
    const double b2 =
        sgd_upper_bound(sgd_req(1.0, 1.0, 0.0, 1.0, 100), SgdBoundForm::general);
    CHECK(b2 == b);
}

TEST_CASE("sgd upper bound, large regime basic form") {
    // eta = 2, l = 1, sigma = 0, delta = 1, T = 100: tau = 3,
    // bound = 4 sqrt(2) (4e)^3 / sqrt(100 pi)
    const double expect =
        4.0 * std::sqrt(2.0) * std::pow(4.0 * M_E, 3.0) / std::sqrt(100.0 * M_PI);
    const double b = sgd_upper_bound(sgd_req(2.0, 1.0, 0.0, 1.0, 100), SgdBoundForm::basic);
    CHECK(b == doctest::Approx(expect).epsilon(1e-10));
    CHECK(b == doctest::Approx(410.26).epsilon(1e-3));
}

TEST_CASE("sgd upper bound, general alpha branches") {
    // small regime, alpha = 0.75: 2A / (eta T^{1-alpha})
    {
        const auto req = sgd_req(0.5, 1.0, 1.0, 1.0, 256, 0.75);
        const double A = 1.0 + 1.0 * 1.0 * 0.25 / (2.0 * (1.0 - std::pow(2.0, -0.5)));
        const double expect = 2.0 * A / (0.5 * std::pow(256.0, 0.25));
        CHECK(sgd_upper_bound(req, SgdBoundForm::general) == doctest::Approx(expect).epsilon(1e-12));
    }
    // small regime, alpha = 0.25: 2/(eta T^alpha) * (Delta/T^{1-2 alpha} + ...)
    {
        const auto req = sgd_req(1.0, 1.0, 1.0, 2.0, 16, 0.25);
        const double A = 2.0 / std::pow(16.0, 0.5) + 1.0 / (2.0 * 0.5);
        const double expect = 2.0 * A / (1.0 * std::pow(16.0, 0.25));
        CHECK(sgd_upper_bound(req, SgdBoundForm::general) == doctest::Approx(expect).epsilon(1e-12));
    }
    // large regime, alpha = 0.75, eta*l = 2: tau = ceil(2^{4/3} - 1) = 2
    {
        const auto req = sgd_req(2.0, 1.0, 0.0, 1.0, 256, 0.75);
        CHECK(tau_sgd(2.0, 1.0, 0.75) == 2);
        const double tau = 2.0;
        const double bracket = 1.0 + 2.0 * (1.0 + std::pow(tau, 0.25) / 0.25);
        const double expect = 2.0 * std::pow(4.0 * std::exp(1.5), tau) * bracket * 1.0 /
                              (2.0 * std::pow(2.0 * M_PI * tau, 0.75) * std::pow(256.0, 0.25));
        CHECK(sgd_upper_bound(req, SgdBoundForm::general) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("general form carries sharper constants than the basic form for large eta*l") {
    for (double el : {5.0, 6.0, 7.0, 8.0}) {
        for (std::int64_t T : {std::int64_t{100}, std::int64_t{10000}}) {
            const auto req = sgd_req(el, 1.0, 0.0, 1.0, T);
            CHECK(sgd_upper_bound(req, SgdBoundForm::general) <=
                  sgd_upper_bound(req, SgdBoundForm::basic));
        }
    }
}

TEST_CASE("regime consistency: small branch iff tau is zero") {
    for (double eta : {0.2, 0.5, 1.0, 1.0000001, 2.0}) {
        auto rep = sgd_regime(sgd_req(eta, 1.0, 0.0, 1.0, 100));
        CHECK((rep.regime == Regime::small_stepsize) == (rep.tau == 0));
    }
    auto rep = sgd_regime(sgd_req(8.0, 1.0, 1.0, 0.5, 64));
    CHECK(rep.t0 == 3);
    CHECK(rep.tau == 63);
    CHECK(rep.A == doctest::Approx(0.5 + 0.5 * 64.0 * (1.0 + std::log(64.0))).epsilon(1e-12));
    CHECK(rep.delta_tilde_lb ==
          doctest::Approx(4.0 / 24.0 * std::pow(8.0 * M_E, 2.0) * 0.5).epsilon(1e-12));
}

TEST_CASE("amsgrad regime split") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 1.0;
    req.v0 = 2.0;
    req.alpha = 0.5;
    CHECK(amsgrad_regime(req).regime == Regime::small_stepsize);
    req.v0 = 0.25;
    auto rep = amsgrad_regime(req);
    CHECK(rep.regime == Regime::large_stepsize);
    CHECK(rep.tau == 15);  // ceil((1/0.25)^2 - 1)
    CHECK(rep.M == doctest::Approx(1.0 + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("basic form requires alpha = 1/2") {
    CHECK_THROWS_AS(sgd_upper_bound(sgd_req(1.0, 1.0, 0.0, 1.0, 100, 0.75), SgdBoundForm::basic),
                    PreconditionError);
    CHECK_NOTHROW(
        sgd_upper_bound(sgd_req(1.0, 1.0, 0.0, 1.0, 100, 0.75), SgdBoundForm::general));
}

TEST_CASE("bounded-gradient bound") {
    auto req = sgd_req(1.0, 1.0, 0.0, 1.0, 1000);
    req.G = 1.0;
    const double T = 1000.0;
    const double expect = (1.0 / 1.0 + 1.0 * 1.0 * (1.0 + 0.0) * std::log(T) / 2.0) / std::sqrt(T);
    CHECK(sgd_bounded_grad_bound(req) == doctest::Approx(expect).epsilon(1e-12));

    // sigma = G = 0 reduces to Delta/(eta sqrt(T))
    auto req0 = sgd_req(2.0, 1.0, 0.0, 3.0, 400);
    req0.G = 0.0;
    CHECK(sgd_bounded_grad_bound(req0) == doctest::Approx(3.0 / 2.0 / 20.0).epsilon(1e-12));

    // doubling G^2 + sigma^2 doubles the second term exactly
    auto req1 = sgd_req(1.0, 1.0, 1.0, 1.0, 1000);
    req1.G = 1.0;  // G^2 + sigma^2 = 2
    const double base = sgd_bounded_grad_bound(req) - 1.0 / std::sqrt(T);
    const double doubled = sgd_bounded_grad_bound(req1) - 1.0 / std::sqrt(T);
    CHECK(doubled == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("sgd lower curve") {
    // t = 1, l = 1, delta = 0.5: sqrt(2 l delta / 3) * (8e)^{1/2}
    const double expect = std::sqrt(2.0 * 0.5 / 3.0) * std::sqrt(8.0 * M_E);
    CHECK(sgd_lower_curve(8.0, 1.0, 0.5, 1, 3, 64) == doctest::Approx(expect).epsilon(1e-12));

    // curve at t0 dominates the second growth display
    const double second =
        std::sqrt(8.0 * 0.5 / (3.0 * 8.0)) * std::pow(8.0 * M_E, 64.0 / 32.0 - 4.0);
    CHECK(sgd_lower_curve(8.0, 1.0, 0.5, 3, 3, 64) >= second);

    // nondecreasing over the growth phase
    double prev = 0.0;
    for (std::int64_t t = 1; t <= 5; ++t) {
        const double c = sgd_lower_curve(10.0, 1.0, 0.5, t, 5, 64);
        CHECK(c >= prev);
        prev = c;
    }
    // plateau value for t > t0
    const double plat = sgd_lower_curve(8.0, 1.0, 0.5, 10, 3, 64);
    const double dt_lb = 4.0 / 24.0 * std::pow(8.0 * M_E, 2.0) * 0.5;
    CHECK(plat == doctest::Approx(0.25 * std::sqrt(dt_lb) *
                                  std::min(1.0, std::pow(64.0, -0.25) / std::sqrt(16.0)))
                      .epsilon(1e-12));
    CHECK_THROWS_AS(sgd_lower_curve(2.0, 1.0, 0.5, 1, 3, 64), PreconditionError);
}

TEST_CASE("nsgd upper bound and its noise floor") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 1.0;
    req.sigma = 0.0;
    req.delta = 1.0;
    req.horizon_T = 1000;
    const double expect = 3.0 * (1.0 + std::log(1000.0)) / std::sqrt(1000.0);
    CHECK(nsgd_upper_bound(req) == doctest::Approx(expect).epsilon(1e-12));

    req.sigma = 1.0;
    req.horizon_T = 100000000;
    CHECK(nsgd_upper_bound(req) == doctest::Approx(24.0).epsilon(0.01));

    // minimized near gamma* = sqrt(delta / (l log T))
    req.sigma = 0.0;
    req.horizon_T = 1000;
    const double gstar = std::sqrt(1.0 / std::log(1000.0));
    auto at = [&](double g) {
        BoundRequest r = req;
        r.gamma = g;
        return nsgd_upper_bound(r);
    };
    CHECK(at(gstar) <= at(0.9 * gstar));
    CHECK(at(gstar) <= at(1.1 * gstar));
}

TEST_CASE("nsgd nonconvergence threshold") {
    CHECK(nsgd_noncvg_threshold(1.0, 1.0, 1.0, 1.0) ==
          doctest::Approx(std::sqrt(3.0) - 1.0).epsilon(1e-12));
    // gamma_max -> 0: third term tends to sigma
    CHECK(nsgd_noncvg_threshold(1.0, 1.0, 1.0, 1e-9) ==
          doctest::Approx(std::min(1.0, std::sqrt(2.0))).epsilon(1e-6));
    // sigma -> 0 drives the threshold to 0
    CHECK(nsgd_noncvg_threshold(1.0, 1.0, 1e-12, 1.0) <= 2e-12);
}

TEST_CASE("amsgrad deterministic upper bound") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 1.0;
    req.delta = 0.5;
    req.v0 = 0.5;
    req.horizon_T = 16;
    req.alpha = 0.5;
    auto tb = amsgrad_det_upper_bound(req);
    CHECK(tb.metric == BoundMetric::avg_grad_norm);
    CHECK(tb.value == doctest::Approx(0.5).epsilon(1e-12));  // sqrt(2*0.5*1)/16^{1/4}

    // v0 = gamma*l: M = l gamma^2 exactly (log term zero)
    BoundRequest r2 = req;
    r2.v0 = 1.0;
    r2.delta = 1.0;
    const double M = 1.0;  // l gamma^2 (1 + log 1)
    const double expect = 1.0 / std::sqrt(16.0) +
                          std::sqrt(2.0 * (M + 1.0) * std::max(1.0, std::sqrt(2.0 * (M + 1.0)))) /
                              std::pow(16.0, 0.25);
    CHECK(amsgrad_det_upper_bound(r2).value == doctest::Approx(expect).epsilon(1e-12));

    // general-alpha form bounds the squared norm
    BoundRequest r3 = req;
    r3.alpha = 0.75;
    r3.delta = 1.0;
    r3.v0 = 0.5;
    auto tb3 = amsgrad_det_upper_bound(r3);
    CHECK(tb3.metric == BoundMetric::avg_grad_norm_sq);
    CHECK(tb3.value == doctest::Approx(2.0 * 1.0 / (1.0 * std::pow(16.0, 0.25)) *
                                       std::max(0.5, std::sqrt(2.0)))
                           .epsilon(1e-12));
}

TEST_CASE("amsgrad deterministic lower bound") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 4.0;
    req.delta = 4.0;
    req.v0 = 1.0;
    req.horizon_T = 64;
    req.alpha = 0.0;
    CHECK(amsgrad_det_lower(req) == 1.0);  // alpha = 0 case: v0

    req.alpha = 0.5;
    // inner max{1/4, (1/(0.5*1)) * 8} = 16 -> sqrt(4/256) = 0.125
    CHECK(amsgrad_det_lower(req) == doctest::Approx(0.125).epsilon(1e-12));

    BoundRequest bad = req;
    bad.v0 = 3.0;  // violates v0 <= l*gamma/2
    CHECK_THROWS_AS(amsgrad_det_lower(bad), PreconditionError);
}

TEST_CASE("amsgrad stochastic lower bound") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 1.0;
    req.delta = 1.0;
    req.sigma = 1.0;
    req.zeta = 0.75;
    req.beta2 = 0.0;
    req.horizon_T = 10000;
    const double G = noise::gamma_function(1.0 - 0.375);
    const double denom = 1.0 * std::sqrt(2.0 * G) /
                         (1.0 * std::pow(M_E * (1.0 / 0.75 - 1.0), 0.375) * 0.25 * 1.0);
    const double inner = std::max(1.0, denom * (std::pow(10000.0, 0.25) - 0.75));
    CHECK(amsgrad_stoch_lower(req) == doctest::Approx(std::sqrt(1.0 / (16.0 * inner))).epsilon(1e-12));

    // T = 1 reduces the horizon factor to (1 - zeta); tiny gamma hits the 1/l branch
    BoundRequest r1 = req;
    r1.horizon_T = 1;
    r1.gamma = 1e-6;
    CHECK(amsgrad_stoch_lower(r1) == doctest::Approx(std::sqrt(1.0 / 16.0)).epsilon(1e-9));

    BoundRequest bad = req;
    bad.zeta = 0.3;
    CHECK_THROWS_AS(amsgrad_stoch_lower(bad), DomainError);
}

TEST_CASE("shape-only rate templates") {
    BoundRequest req;
    req.gamma = 1.0;
    req.l = 1.0;
    req.sigma = 0.0;
    req.delta = 1.0;
    req.horizon_T = 1000;
    const double T = 1000.0;
    CHECK(nsgdm_rate_template(req) ==
          doctest::Approx((1.0 + std::log(T)) / std::pow(T, 0.25)).epsilon(1e-12));

    BoundRequest ar;
    ar.eta = 1.0;
    ar.l = 1.0;
    ar.sigma = 0.0;
    ar.delta = 1.0;
    ar.v0 = 1.0;
    ar.horizon_T = 1;
    CHECK(adagrad_rate_template(ar) == doctest::Approx(4.0 + std::sqrt(2.0)).epsilon(1e-12));

    // sigma = 0 kills the T^{-1/4} term: value equals the sqrt(T) part alone
    ar.horizon_T = 256;
    const double A = 2.0 * (1.0 + std::log(256.0));
    CHECK(adagrad_rate_template(ar) ==
          doctest::Approx(2.0 * A / 16.0 + std::sqrt(A) / 16.0).epsilon(1e-12));

    // shape minimized over eta near sqrt(delta/l)
    BoundRequest am = ar;
    am.horizon_T = 1000;
    auto at = [&](double eta) {
        BoundRequest r = am;
        r.eta = eta;
        return adagrad_rate_template(r);
    };
    CHECK(at(1.0) <= at(0.8));
    CHECK(at(1.0) <= at(1.25));
}

TEST_CASE("lower bounds stay below upper bounds at matched parameters") {
    for (double gamma : {1.0, 2.0, 4.0}) {
        for (double frac : {0.5, 0.25, 0.125}) {
            BoundRequest req;
            req.gamma = gamma;
            req.l = 1.0;
            req.v0 = gamma * frac;  // <= l*gamma/2
            req.delta = gamma;      // gamma <= 4*delta/v0 holds
            req.alpha = 0.5;
            req.horizon_T = 1000000;
            const double lower = amsgrad_det_lower(req);
            const auto upper = amsgrad_det_upper_bound(req);
            CHECK(lower <= upper.value);
        }
    }
}

TEST_CASE("bound evaluators are monotone nonincreasing in T") {
    // Grids start past the log-term hump of each display.
    const std::vector<std::int64_t> ts{100, 1000, 10000, 100000};
    auto check_mono = [&](auto&& f) {
        double prev = HUGE_VAL;
        for (auto T : ts) {
            const double v = f(T);
            CHECK(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    };
    check_mono([&](std::int64_t T) {
        return sgd_upper_bound(sgd_req(0.5, 1.0, 1.0, 1.0, T), SgdBoundForm::basic);
    });
    check_mono([&](std::int64_t T) {
        return sgd_upper_bound(sgd_req(2.0, 1.0, 1.0, 1.0, T), SgdBoundForm::general);
    });
    check_mono([&](std::int64_t T) {
        BoundRequest r = sgd_req(1.0, 1.0, 1.0, 1.0, T);
        r.G = 2.0;
        return sgd_bounded_grad_bound(r);
    });
    check_mono([&](std::int64_t T) {
        BoundRequest r;
        r.gamma = 1.0;
        r.l = 1.0;
        r.sigma = 0.5;
        r.delta = 1.0;
        r.horizon_T = T;
        return nsgd_upper_bound(r);
    });
    check_mono([&](std::int64_t T) {
        BoundRequest r;
        r.gamma = 1.0;
        r.l = 1.0;
        r.delta = 1.0;
        r.v0 = 0.5;
        r.horizon_T = T;
        return amsgrad_det_upper_bound(r).value;
    });
    check_mono([&](std::int64_t T) {
        BoundRequest r;
        r.gamma = 1.0;
        r.l = 1.0;
        r.delta = 1.0;
        r.sigma = 1.0;
        r.zeta = 0.75;
        r.beta2 = 0.0;
        r.horizon_T = T;
        return amsgrad_stoch_lower(r);
    });
    check_mono([&](std::int64_t T) {
        BoundRequest r;
        r.gamma = 1.0;
        r.l = 1.0;
        r.sigma = 1.0;
        r.delta = 1.0;
        r.horizon_T = T;
        return nsgdm_rate_template(r);
    });
}

TEST_CASE("overflow in the exponential factor is reported") {
    CHECK_THROWS_AS(sgd_upper_bound(sgd_req(40.0, 1.0, 0.0, 1.0, 100), SgdBoundForm::basic),
                    OverflowError);
}

TEST_CASE("missing fields are rejected") {
    BoundRequest empty;
    CHECK_THROWS_AS(sgd_upper_bound(empty, SgdBoundForm::basic), PreconditionError);
    CHECK_THROWS_AS(nsgd_upper_bound(empty), PreconditionError);
    CHECK_THROWS_AS(amsgrad_det_upper_bound(empty), PreconditionError);
}
