#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "optlab/common.hpp"
#include "optlab/problem.hpp"

namespace optlab::noise {

enum class NoiseKind { zero, gaussian, multiplicative_sign, frechet_symmetric };

const char* kind_name(NoiseKind k);
NoiseKind kind_from_name(const std::string& name);

struct NoiseSpec {
    NoiseKind kind = NoiseKind::zero;
    double sigma = 0.0;
    std::optional<double> delta_noise;       // multiplicative kind, > 1
    std::optional<double> region_halfwidth;  // multiplicative kind
    std::optional<double> zeta;              // frechet kind, in (1/2, 1)
    std::optional<double> scale_s;           // frechet kind, derived

    void validate() const;  // throws PreconditionError on a bad combination

    static NoiseSpec zero();
    static NoiseSpec gaussian(double sigma);
    static NoiseSpec multiplicative_sign(double sigma, double delta, double halfwidth);
    // Stores scale_s = sigma / sqrt(Gamma(1 - zeta/2)).
    static NoiseSpec frechet_symmetric(double sigma, double zeta);
};

// Deterministic counter-free stream: splitmix64 over (seed, stream_index)
// seeds a xoshiro256** engine. (seed, stream_index) fully determines the
// sample sequence; reproducibility is per build, not cross-implementation.
class RngStream {
  public:
    static constexpr const char* algorithm_id = "splitmix64+xoshiro256ss-v1";

    explicit RngStream(std::uint64_t seed, std::uint64_t stream_index = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    std::uint64_t next_u64();
    double uniform01();       // [0, 1)
    double uniform01_open();  // (0, 1), zero resampled
    double standard_normal();

  private:
    std::uint64_t seed_, stream_index_;
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Draws g(x; xi) for the given spec; unbiased for every kind.
Vec sample_gradient(const NoiseSpec& spec, const Vec& true_grad, const Vec& x, RngStream& rng);

// Inverse CDF of the heavy-tailed magnitude: s * (-ln u)^(-zeta/2).
double frechet_magnitude(double zeta, double scale_s, double u);

// Signed heavy-tailed draw whose magnitude has CDF exp(-(x/s)^(-2/zeta)).
double frechet_symmetric_sample(double zeta, double scale_s, RngStream& rng);

// Gamma function on (0, 5] (and beyond); DomainError for x <= 0.
double gamma_function(double x);

struct MomentCheck {
    double bias_norm = 0.0;
    double variance_estimate = 0.0;  // mean of ||g - grad||^2
    double bias_stderr = 0.0;
    double variance_stderr = 0.0;
    std::int64_t n = 0;
    bool variance_violation = false;  // variance > sigma^2 (1 + 5/sqrt(n))
};

MomentCheck oracle_moment_check(const NoiseSpec& spec, const ProblemInstance& instance,
                                const Vec& x, std::int64_t n, RngStream& rng);

}  // namespace optlab::noise
