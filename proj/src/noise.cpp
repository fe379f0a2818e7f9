#include "optlab/noise.hpp"

#include <cmath>

namespace optlab::noise {

const char* kind_name(NoiseKind k) {
    switch (k) {
        case NoiseKind::zero: return "zero";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::multiplicative_sign: return "multiplicative_sign";
        case NoiseKind::frechet_symmetric: return "frechet_symmetric";
    }
    return "?";
}

NoiseKind kind_from_name(const std::string& name) {
    if (name == "zero") return NoiseKind::zero;
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "multiplicative_sign") return NoiseKind::multiplicative_sign;
    if (name == "frechet_symmetric") return NoiseKind::frechet_symmetric;
    throw PreconditionError("unknown noise kind '" + name + "'");
}

void NoiseSpec::validate() const {
    if (sigma < 0.0) throw PreconditionError("noise: sigma must be nonnegative");
    switch (kind) {
        case NoiseKind::zero:
            break;
        case NoiseKind::gaussian:
            if (sigma <= 0.0) throw PreconditionError("gaussian noise requires sigma > 0");
            break;
        case NoiseKind::multiplicative_sign:
            if (!delta_noise || !region_halfwidth)
                throw PreconditionError("multiplicative noise requires delta_noise and region_halfwidth");
            if (*delta_noise <= 1.0) throw PreconditionError("multiplicative delta must exceed 1");
            if (*region_halfwidth <= 0.0) throw PreconditionError("region halfwidth must be positive");
            break;
        case NoiseKind::frechet_symmetric:
            if (sigma <= 0.0) throw PreconditionError("frechet noise requires sigma > 0");
            if (!zeta || *zeta <= 0.5 || *zeta >= 1.0)
                throw PreconditionError("frechet noise requires zeta in (1/2, 1)");
            if (!scale_s || *scale_s <= 0.0) throw PreconditionError("frechet noise requires scale_s > 0");
            break;
    }
}

NoiseSpec NoiseSpec::zero() { return NoiseSpec{}; }

NoiseSpec NoiseSpec::gaussian(double sigma) {
    NoiseSpec s;
    s.kind = NoiseKind::gaussian;
    s.sigma = sigma;
    s.validate();
    return s;
}

NoiseSpec NoiseSpec::multiplicative_sign(double sigma, double delta, double halfwidth) {
    NoiseSpec s;
    s.kind = NoiseKind::multiplicative_sign;
    s.sigma = sigma;
    s.delta_noise = delta;
    s.region_halfwidth = halfwidth;
    s.validate();
    return s;
}

NoiseSpec NoiseSpec::frechet_symmetric(double sigma, double zeta) {
    NoiseSpec s;
    s.kind = NoiseKind::frechet_symmetric;
    s.sigma = sigma;
    s.zeta = zeta;
    if (zeta <= 0.5 || zeta >= 1.0) throw PreconditionError("zeta must lie in (1/2, 1)");
    s.scale_s = sigma / std::sqrt(gamma_function(1.0 - zeta / 2.0));
    s.validate();
    return s;
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_index_(stream_index) {
    std::uint64_t sm = seed ^ (0xA3EC647659359ACDULL * (stream_index + 1));
    for (auto& w : s_) w = splitmix64(sm);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t RngStream::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform01_open() {
    double u;
    do {
        u = uniform01();
    } while (u == 0.0);
    return u;
}

double RngStream::standard_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double frechet_magnitude(double zeta, double scale_s, double u) {
    return scale_s * std::pow(-std::log(u), -zeta / 2.0);
}

double frechet_symmetric_sample(double zeta, double scale_s, RngStream& rng) {
    if (zeta <= 0.5 || zeta >= 1.0) throw PreconditionError("zeta must lie in (1/2, 1)");
    const double mag = frechet_magnitude(zeta, scale_s, rng.uniform01_open());
    const bool negative = (rng.next_u64() & 1ULL) != 0;
    return negative ? -mag : mag;
}

double gamma_function(double x) {
    if (!(x > 0.0)) throw DomainError("gamma_function: x must be positive");
    return std::tgamma(x);
}

Vec sample_gradient(const NoiseSpec& spec, const Vec& true_grad, const Vec& x, RngStream& rng) {
    switch (spec.kind) {
        case NoiseKind::zero:
            return true_grad;
        case NoiseKind::gaussian: {
            // Isotropic with total variance sigma^2 regardless of dimension.
            Vec g = true_grad;
            const double per_coord = spec.sigma / std::sqrt(static_cast<double>(g.size()));
            for (auto& gi : g) gi += per_coord * rng.standard_normal();
            return g;
        }
        case NoiseKind::multiplicative_sign: {
            if (std::abs(x[0]) <= *spec.region_halfwidth) {
                const double factor =
                    (rng.next_u64() & 1ULL) ? (1.0 - *spec.delta_noise) : (1.0 + *spec.delta_noise);
                Vec g = true_grad;
                for (auto& gi : g) gi *= factor;
                return g;
            }
            return true_grad;
        }
        case NoiseKind::frechet_symmetric: {
            if (true_grad.size() != 2)
                throw KindMismatchError("frechet_symmetric noise requires a 2-D instance");
            Vec g = true_grad;
            g[1] += frechet_symmetric_sample(*spec.zeta, *spec.scale_s, rng);
            return g;
        }
    }
    throw PreconditionError("invalid noise kind");
}

MomentCheck oracle_moment_check(const NoiseSpec& spec, const ProblemInstance& instance,
                                const Vec& x, std::int64_t n, RngStream& rng) {
    if (n < 1000) throw PreconditionError("oracle_moment_check requires n >= 1000");
    const Vec grad = instance.gradient(x);
    Vec mean(grad.size(), 0.0);
    double m2_sum = 0.0, m2_sumsq = 0.0;
    double dev_sumsq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        Vec g = sample_gradient(spec, grad, x, rng);
        double d2 = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double d = g[k] - grad[k];
            mean[k] += d;
            d2 += d * d;
        }
        m2_sum += d2;
        m2_sumsq += d2 * d2;
        dev_sumsq += d2;
    }
    MomentCheck out;
    out.n = n;
    double bias2 = 0.0;
    for (auto& m : mean) {
        m /= static_cast<double>(n);
        bias2 += m * m;
    }
    out.bias_norm = std::sqrt(bias2);
    out.variance_estimate = m2_sum / static_cast<double>(n);
    const double var_of_d2 =
        std::max(0.0, m2_sumsq / n - out.variance_estimate * out.variance_estimate);
    out.variance_stderr = std::sqrt(var_of_d2 / static_cast<double>(n));
    out.bias_stderr = std::sqrt(dev_sumsq / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
    out.variance_violation =
        out.variance_estimate > spec.sigma * spec.sigma * (1.0 + 5.0 / std::sqrt(static_cast<double>(n)));
    return out;
}

}  // namespace optlab::noise
