#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "optlab/noise.hpp"
#include "optlab/problem.hpp"

namespace optlab::optim {

// eta_t = eta / (t+1)^alpha
struct SgdConfig {
    double eta = 1.0;
    double alpha = 0.5;  // in [0, 1)
    void validate() const;
};

// x_{t+1} = x_t - gamma_t g/||g||, gamma_t = gamma / (t+1)^alpha
struct NsgdConfig {
    double gamma = 1.0;
    double alpha = 0.5;  // in [0, 1]
    double gamma_max() const { return gamma; }
    void validate() const;
};

// Momentum-normalized variant; moves with g_t first, then samples at the new
// iterate. Default momentum schedule alpha_t = sqrt(2)/sqrt(t+2), so
// alpha_0 = 1 and the initial momentum only sets the first direction.
struct NsgdmConfig {
    double gamma = 1.0;
    double alpha = 0.75;
    std::function<double(std::int64_t)> momentum_schedule;
    Vec initial_momentum;  // empty: runner samples the oracle at x0

    double momentum_weight(std::int64_t t) const;
    void validate() const;
};

struct AmsgradConfig {
    double gamma = 1.0;
    double alpha = 0.5;   // in [0, 1)
    double beta1 = 0.0;   // in [0, 1)
    double beta2 = 0.0;   // in [0, 1]
    double v0 = 1.0;      // > 0
    Vec initial_m;        // empty: zeros
    void validate() const;
};

struct AdagradConfig {
    double eta = 1.0;
    double v0 = 1.0;
    void validate() const;
};

struct MomentumSgdConfig {
    double beta1 = 0.0;  // in [0, 1)
    std::function<double(std::int64_t)> stepsize_schedule;
    Vec initial_m;  // empty: zeros
    void validate() const;
};

using OptimizerConfig = std::variant<SgdConfig, NsgdConfig, NsgdmConfig, AmsgradConfig,
                                     AdagradConfig, MomentumSgdConfig>;

std::string optimizer_id(const OptimizerConfig& cfg);

struct OptimizerState {
    Vec x;
    std::int64_t t = 0;
    std::optional<Vec> m;               // momentum buffer (or g_t for NSGD-M)
    std::optional<double> v_sq;         // AMSGrad second moment
    std::optional<double> v_hat_sq;     // AMSGrad running max, nondecreasing
    std::optional<double> v_accum_sq;   // AdaGrad accumulator, nondecreasing
    double effective_stepsize = 0.0;    // scalar applied to the vector just used
};

OptimizerState init_state(const ProblemInstance& instance, const OptimizerConfig& cfg);

// Steppers are pure in (state, sample, config); they take the state by value
// and return the advanced one. All throw OverflowError when the new iterate
// exceeds 1e300.
OptimizerState sgd_step(OptimizerState s, const Vec& g, const SgdConfig& cfg);
OptimizerState nsgd_step(OptimizerState s, const Vec& g, const NsgdConfig& cfg);
OptimizerState amsgrad_norm_step(OptimizerState s, const Vec& g, const AmsgradConfig& cfg);
OptimizerState adagrad_norm_step(OptimizerState s, const Vec& g, const AdagradConfig& cfg);
OptimizerState momentum_sgd_step(OptimizerState s, const Vec& g, const MomentumSgdConfig& cfg);

// NSGD-M splits into the move (uses the stored g_t) and the momentum update
// with a gradient sampled at the post-move iterate; nsgdm_step composes the
// two. The caller must sample fresh_g at the iterate nsgdm_move produced --
// the runner owns that ordering.
OptimizerState nsgdm_move(OptimizerState s, const NsgdmConfig& cfg);
OptimizerState nsgdm_update_momentum(OptimizerState s, const Vec& fresh_g, const NsgdmConfig& cfg);
OptimizerState nsgdm_step(OptimizerState s, const Vec& fresh_g, const NsgdmConfig& cfg);

// Drives one trajectory of horizon_T steps. Record t holds the pre-step
// iterate x_t, its true gradient norm, and the stochastic gradient sampled
// at it. Overflow truncates the record list and sets overflow_at.
Trajectory run(const ProblemInstance& instance, const OptimizerConfig& cfg,
               const noise::NoiseSpec& spec, std::int64_t horizon_T, std::uint64_t seed,
               std::uint64_t stream_index = 0);

}  // namespace optlab::optim
