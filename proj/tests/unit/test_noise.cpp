#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "optlab/instances.hpp"
#include "optlab/noise.hpp"

using namespace optlab;
using namespace optlab::noise;

TEST_CASE("rng streams are reproducible and distinct") {
    RngStream a(42, 0), b(42, 0), c(42, 1);
    bool same = true, differs = false;
    for (int i = 0; i < 64; ++i) {
        const auto x = a.next_u64();
        if (x != b.next_u64()) same = false;
        if (x != c.next_u64()) differs = true;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("zero spec returns the gradient unchanged") {
    RngStream rng(1, 0);
    const Vec g{0.25, -3.0};
    CHECK(sample_gradient(NoiseSpec::zero(), g, Vec{0, 0}, rng) == g);
}

TEST_CASE("multiplicative branches average to the true gradient") {
    const double delta = 1.25;
    CHECK((1.0 + delta) + (1.0 - delta) == 2.0);
    auto spec = NoiseSpec::multiplicative_sign(1.0, delta, 2.0);
    RngStream rng(3, 0);
    const Vec g{0.5};
    double acc = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) acc += sample_gradient(spec, g, Vec{1.0}, rng)[0];
    CHECK(acc / n == doctest::Approx(0.5).epsilon(0.02));
    // outside the region the oracle is exact
    CHECK(sample_gradient(spec, g, Vec{5.0}, rng) == g);
}

TEST_CASE("gaussian sample variance matches sigma^2") {
    auto spec = NoiseSpec::gaussian(1.0);
    RngStream rng(17, 0);
    const Vec g{2.0};
    double ss = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double d = sample_gradient(spec, g, Vec{0.0}, rng)[0] - g[0];
        ss += d * d;
    }
    const double var = ss / n;
    CHECK(var >= 0.99);
    CHECK(var <= 1.01);
}

TEST_CASE("gaussian total variance is dimension independent") {
    auto spec = NoiseSpec::gaussian(2.0);
    RngStream rng(18, 0);
    const Vec g{0.0, 0.0, 0.0};
    double ss = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const Vec s = sample_gradient(spec, g, g, rng);
        ss += squared_norm(s);
    }
    CHECK(ss / n == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("frechet magnitude inverse CDF fixed points") {
    const double zeta = 0.75, s = 1.3;
    CHECK(frechet_magnitude(zeta, s, std::exp(-1.0)) == doctest::Approx(s).epsilon(1e-12));
    CHECK(frechet_magnitude(zeta, s, 0.5) ==
          doctest::Approx(s * std::pow(std::log(2.0), -zeta / 2.0)).epsilon(1e-12));
}

TEST_CASE("frechet empirical CDF passes a KS check") {
    const double zeta = 0.75, sigma = 1.0;
    auto spec = NoiseSpec::frechet_symmetric(sigma, zeta);
    const double s = *spec.scale_s;
    RngStream rng(5, 0);
    const int n = 1000000;
    std::vector<double> mags(n);
    for (int i = 0; i < n; ++i) mags[i] = std::abs(frechet_symmetric_sample(zeta, s, rng));
    std::sort(mags.begin(), mags.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double F = std::exp(-std::pow(mags[i] / s, -2.0 / zeta));
        ks = std::max(ks, std::abs(F - (i + 1.0) / n));
        ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
    }
    CHECK(ks < 0.002);
}

TEST_CASE("gamma function identities") {
    CHECK(gamma_function(1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gamma_function(2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gamma_function(0.5) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));
    for (double x : {0.55, 0.625, 0.7})
        CHECK(gamma_function(x) * gamma_function(1.0 - x) * std::sin(M_PI * x) / M_PI ==
              doctest::Approx(1.0).epsilon(1e-9));
    for (double x = 0.5; x <= 4.0; x += 0.25)
        CHECK(gamma_function(x + 1.0) == doctest::Approx(x * gamma_function(x)).epsilon(1e-9));
    CHECK_THROWS_AS(gamma_function(0.0), DomainError);
    CHECK_THROWS_AS(gamma_function(-1.5), DomainError);
}

TEST_CASE("all oracles are unbiased") {
    auto quad = instances::make_quadratic(1.0, 0.5, 2);
    const Vec x{0.7, -0.2};
    const Vec grad = quad.gradient(x);
    std::vector<NoiseSpec> specs{NoiseSpec::gaussian(1.0),
                                 NoiseSpec::frechet_symmetric(1.0, 0.75)};
    for (const auto& spec : specs) {
        RngStream rng(11, 0);
        Vec mean(2, 0.0);
        double dev2 = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const Vec g = sample_gradient(spec, grad, x, rng);
            for (int k = 0; k < 2; ++k) mean[k] += g[k] - grad[k];
            dev2 += squared_norm(Vec{g[0] - grad[0], g[1] - grad[1]});
        }
        for (auto& m : mean) m /= n;
        const double se = std::sqrt(dev2 / n) / std::sqrt(static_cast<double>(n));
        CHECK(norm(mean) <= 5.0 * se);
    }
}

TEST_CASE("oracle moment check") {
    auto quad = instances::make_quadratic(1.0, 0.5);
    RngStream rng(2, 0);
    SUBCASE("zero noise") {
        auto mc = oracle_moment_check(NoiseSpec::zero(), quad, Vec{1.0}, 1000, rng);
        CHECK(mc.bias_norm == 0.0);
        CHECK(mc.variance_estimate == 0.0);
    }
    SUBCASE("multiplicative variance inside the region") {
        auto [inst, spec] = instances::make_nsgd_noncvg_instance(1.0, 1.0, 0.5, 1.0, 1.0);
        const Vec x{1.0};
        auto mc = oracle_moment_check(spec, inst, x, 100000, rng);
        const double expect = *spec.delta_noise * *spec.delta_noise * squared_norm(inst.gradient(x));
        CHECK(mc.variance_estimate == doctest::Approx(expect).epsilon(1e-9));
        CHECK(mc.variance_estimate <= spec.sigma * spec.sigma);
    }
    SUBCASE("frechet second moment is s^2 Gamma(1 - zeta)") {
        // With the scale s = sigma / sqrt(Gamma(1 - zeta/2)) the magnitude's
        // true second moment is s^2 Gamma(1 - zeta) (~2.53 sigma^2 at
        // zeta = 0.75), which exceeds sigma^2; the moment check flags it.
        auto [inst, spec] = instances::make_amsgrad_slow_instance(1.0, 1.0, 1.0, 0.75, 1.0, 0.0, 100);
        const double zeta = 0.75;
        const double truth = *spec.scale_s * *spec.scale_s * gamma_function(1.0 - zeta);
        double acc = 0.0;
        std::int64_t hits = 0;
        const int reps = 16;
        for (int k = 0; k < reps; ++k) {
            noise::RngStream r(100 + k, 0);
            auto mc = oracle_moment_check(spec, inst, inst.initial_point, 200000, r);
            acc += mc.variance_estimate;
            hits += mc.variance_violation ? 1 : 0;
        }
        CHECK(acc / reps == doctest::Approx(truth).epsilon(0.12));
        CHECK(hits == reps);  // correctly flagged on every stream
    }
    SUBCASE("n too small") {
        CHECK_THROWS_AS(oracle_moment_check(NoiseSpec::zero(), quad, Vec{1.0}, 10, rng),
                        PreconditionError);
    }
}

TEST_CASE("frechet running maximum beats the polynomial curve on most streams") {
    const double zeta = 0.75, sigma = 1.0;
    auto spec = NoiseSpec::frechet_symmetric(sigma, zeta);
    const double s = *spec.scale_s;
    const double C = s * std::pow(M_E * (1.0 / zeta - 1.0), zeta / 2.0) / std::sqrt(2.0);
    const int T = 10000, streams = 200;
    int good = 0;
    for (int k = 0; k < streams; ++k) {
        RngStream rng(1000 + k, 0);
        double rmax = 0.0;
        bool ok = true;
        for (int t = 0; t < T; ++t) {
            rmax = std::max(rmax, std::abs(frechet_symmetric_sample(zeta, s, rng)));
            if (!(rmax > C * std::pow(t + 1.0, zeta - 0.5))) {
                ok = false;
                break;
            }
        }
        if (ok) ++good;
    }
    CHECK(static_cast<double>(good) / streams >= 0.45);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(NoiseSpec::gaussian(0.0), PreconditionError);
    CHECK_THROWS_AS(NoiseSpec::multiplicative_sign(1.0, 0.5, 1.0), PreconditionError);
    CHECK_THROWS_AS(NoiseSpec::frechet_symmetric(1.0, 0.4), PreconditionError);
    auto spec = NoiseSpec::frechet_symmetric(1.0, 0.75);
    CHECK(*spec.scale_s == doctest::Approx(1.0 / std::sqrt(gamma_function(1.0 - 0.375))));
    RngStream rng(1, 0);
    CHECK_THROWS_AS(sample_gradient(spec, Vec{1.0}, Vec{1.0}, rng), KindMismatchError);
}
