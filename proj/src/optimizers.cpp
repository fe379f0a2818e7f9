#include "optlab/optimizers.hpp"

#include <cmath>

namespace optlab::optim {

namespace {

void check_iterate(const Vec& x, std::int64_t t) {
    for (double xi : x)
        if (!std::isfinite(xi) || std::abs(xi) > kOverflowLimit)
            throw OverflowError("iterate exceeds 1e300 at step " + std::to_string(t), t);
}

void require(bool ok, const char* msg) {
    if (!ok) throw PreconditionError(msg);
}

}  // namespace

void SgdConfig::validate() const {
    require(eta > 0.0, "sgd: eta must be positive");
    require(alpha >= 0.0 && alpha < 1.0, "sgd: alpha must lie in [0, 1)");
}

void NsgdConfig::validate() const {
    require(gamma > 0.0, "nsgd: gamma must be positive");
    require(alpha >= 0.0 && alpha <= 1.0, "nsgd: alpha must lie in [0, 1]");
}

double NsgdmConfig::momentum_weight(std::int64_t t) const {
    if (momentum_schedule) return momentum_schedule(t);
    return std::sqrt(2.0) / std::sqrt(static_cast<double>(t + 2));
}

void NsgdmConfig::validate() const {
    require(gamma > 0.0, "nsgdm: gamma must be positive");
    for (std::int64_t t : {std::int64_t{0}, std::int64_t{1}, std::int64_t{7}, std::int64_t{63}}) {
        const double a = momentum_weight(t);
        require(a > 0.0 && a <= 1.0, "nsgdm: momentum weights must lie in (0, 1]");
    }
}

void AmsgradConfig::validate() const {
    require(gamma > 0.0, "amsgrad: gamma must be positive");
    require(alpha >= 0.0 && alpha < 1.0, "amsgrad: alpha must lie in [0, 1)");
    require(beta1 >= 0.0 && beta1 < 1.0, "amsgrad: beta1 must lie in [0, 1)");
    require(beta2 >= 0.0 && beta2 <= 1.0, "amsgrad: beta2 must lie in [0, 1]");
    require(v0 > 0.0, "amsgrad: v0 must be positive");
}

void AdagradConfig::validate() const {
    require(eta > 0.0, "adagrad: eta must be positive");
    require(v0 > 0.0, "adagrad: v0 must be positive");
}

void MomentumSgdConfig::validate() const {
    require(beta1 >= 0.0 && beta1 < 1.0, "momentum_sgd: beta1 must lie in [0, 1)");
    require(static_cast<bool>(stepsize_schedule), "momentum_sgd: stepsize schedule required");
    for (std::int64_t t : {std::int64_t{0}, std::int64_t{1}, std::int64_t{15}}) {
        const double s = stepsize_schedule(t);
        require(s > 0.0 && std::isfinite(s), "momentum_sgd: scheduled stepsizes must be positive and finite");
    }
}

std::string optimizer_id(const OptimizerConfig& cfg) {
    struct Visitor {
        std::string operator()(const SgdConfig&) const { return "sgd"; }
        std::string operator()(const NsgdConfig&) const { return "nsgd"; }
        std::string operator()(const NsgdmConfig&) const { return "nsgdm"; }
        std::string operator()(const AmsgradConfig&) const { return "amsgrad_norm"; }
        std::string operator()(const AdagradConfig&) const { return "adagrad_norm"; }
        std::string operator()(const MomentumSgdConfig&) const { return "momentum_sgd"; }
    };
    return std::visit(Visitor{}, cfg);
}

OptimizerState init_state(const ProblemInstance& instance, const OptimizerConfig& cfg) {
    OptimizerState s;
    s.x = instance.initial_point;
    s.t = 0;
    if (auto* a = std::get_if<AmsgradConfig>(&cfg)) {
        s.v_sq = a->v0 * a->v0;
        s.v_hat_sq = a->v0 * a->v0;
        s.m = a->initial_m.empty() ? Vec(instance.dimension, 0.0) : a->initial_m;
    } else if (auto* ad = std::get_if<AdagradConfig>(&cfg)) {
        s.v_accum_sq = ad->v0 * ad->v0;
    } else if (auto* ms = std::get_if<MomentumSgdConfig>(&cfg)) {
        s.m = ms->initial_m.empty() ? Vec(instance.dimension, 0.0) : ms->initial_m;
    } else if (auto* nm = std::get_if<NsgdmConfig>(&cfg)) {
        if (!nm->initial_momentum.empty()) s.m = nm->initial_momentum;
        // otherwise the runner samples the oracle at x0
    }
    return s;
}

OptimizerState sgd_step(OptimizerState s, const Vec& g, const SgdConfig& cfg) {
    const double eta_t = power_stepsize(cfg.eta, cfg.alpha, s.t);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= eta_t * g[i];
    check_iterate(s.x, s.t);
    s.effective_stepsize = eta_t;
    s.t += 1;
    return s;
}

OptimizerState nsgd_step(OptimizerState s, const Vec& g, const NsgdConfig& cfg) {
    const double gn = norm(g);
    const double gamma_t = power_stepsize(cfg.gamma, cfg.alpha, s.t);
    if (gn > kZeroGradientGuard) {
        for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= gamma_t * (g[i] / gn);
        check_iterate(s.x, s.t);
        s.effective_stepsize = gamma_t / gn;
    } else {
        s.effective_stepsize = 0.0;  // guarded zero step
    }
    s.t += 1;
    return s;
}

OptimizerState nsgdm_move(OptimizerState s, const NsgdmConfig& cfg) {
    if (!s.m) throw ContractError("nsgdm: momentum buffer not initialized");
    const Vec& m = *s.m;
    const double mn = norm(m);
    const double gamma_t = power_stepsize(cfg.gamma, cfg.alpha, s.t);
    if (mn > kZeroGradientGuard) {
        for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= gamma_t * (m[i] / mn);
        check_iterate(s.x, s.t);
        s.effective_stepsize = gamma_t / mn;
    } else {
        s.effective_stepsize = 0.0;
    }
    return s;
}

OptimizerState nsgdm_update_momentum(OptimizerState s, const Vec& fresh_g, const NsgdmConfig& cfg) {
    const double a = cfg.momentum_weight(s.t);
    Vec& m = *s.m;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = (1.0 - a) * m[i] + a * fresh_g[i];
    s.t += 1;
    return s;
}

OptimizerState nsgdm_step(OptimizerState s, const Vec& fresh_g, const NsgdmConfig& cfg) {
    return nsgdm_update_momentum(nsgdm_move(std::move(s), cfg), fresh_g, cfg);
}

OptimizerState amsgrad_norm_step(OptimizerState s, const Vec& g, const AmsgradConfig& cfg) {
    Vec& m = *s.m;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    const double v_new = cfg.beta2 * *s.v_sq + (1.0 - cfg.beta2) * squared_norm(g);
    s.v_sq = v_new;
    s.v_hat_sq = std::max(*s.v_hat_sq, v_new);  // nondecreasing by construction
    const double gamma_t = power_stepsize(cfg.gamma, cfg.alpha, s.t);
    const double eta_t = gamma_t / std::sqrt(*s.v_hat_sq);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= eta_t * m[i];
    check_iterate(s.x, s.t);
    s.effective_stepsize = eta_t;
    s.t += 1;
    return s;
}

OptimizerState adagrad_norm_step(OptimizerState s, const Vec& g, const AdagradConfig& cfg) {
    s.v_accum_sq = *s.v_accum_sq + squared_norm(g);
    const double eta_t = cfg.eta / std::sqrt(*s.v_accum_sq);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= eta_t * g[i];
    check_iterate(s.x, s.t);
    s.effective_stepsize = eta_t;
    s.t += 1;
    return s;
}

OptimizerState momentum_sgd_step(OptimizerState s, const Vec& g, const MomentumSgdConfig& cfg) {
    Vec& m = *s.m;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    const double eta_t = cfg.stepsize_schedule(s.t);
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] -= eta_t * m[i];
    check_iterate(s.x, s.t);
    s.effective_stepsize = eta_t;
    s.t += 1;
    return s;
}

namespace {

TrajectoryRecord make_record(std::int64_t t, double f, const Vec& grad, double stoch_norm,
                             const Vec& x) {
    TrajectoryRecord r;
    r.t = t;
    r.f_value = f;
    r.grad_norm = norm(grad);
    r.stoch_grad_norm = stoch_norm;
    r.summary_len = static_cast<int>(std::min<std::size_t>(x.size(), 4));
    for (int i = 0; i < r.summary_len; ++i) r.iterate_summary[i] = x[i];
    return r;
}

}  // namespace

Trajectory run(const ProblemInstance& instance, const OptimizerConfig& cfg,
               const noise::NoiseSpec& spec, std::int64_t horizon_T, std::uint64_t seed,
               std::uint64_t stream_index) {
    if (horizon_T < 1) throw PreconditionError("run: horizon_T must be >= 1");
    spec.validate();
    std::visit([](const auto& c) { c.validate(); }, cfg);

    noise::RngStream rng(seed, stream_index);
    OptimizerState st = init_state(instance, cfg);

    Trajectory traj;
    traj.seed = seed;
    traj.instance_id = instance.id;
    traj.optimizer_id = optimizer_id(cfg);
    traj.records.reserve(static_cast<std::size_t>(horizon_T));

    const auto* nsgdm_cfg = std::get_if<NsgdmConfig>(&cfg);
    // Pending sample for NSGD-M: the gradient sampled on arrival at the
    // current iterate (Algorithm order: move with g_t, then sample).
    double pending_sample_norm = 0.0;

    for (std::int64_t t = 0; t < horizon_T; ++t) {
        double f_value;
        Vec grad;
        try {
            auto [v, g] = instance.evaluate(st.x);
            f_value = v;
            grad = std::move(g);
        } catch (const OverflowError&) {
            traj.overflow_at = t;
            break;
        }

        try {
            if (nsgdm_cfg) {
                if (t == 0 && !st.m) {
                    // Default initial momentum: one oracle draw at x0.
                    st.m = noise::sample_gradient(spec, grad, st.x, rng);
                    pending_sample_norm = norm(*st.m);
                } else if (t == 0) {
                    pending_sample_norm = norm(*st.m);
                }
                traj.records.push_back(make_record(t, f_value, grad, pending_sample_norm, st.x));
                st = nsgdm_move(std::move(st), *nsgdm_cfg);
                auto [v2, g2] = instance.evaluate(st.x);
                (void)v2;
                Vec fresh = noise::sample_gradient(spec, g2, st.x, rng);
                pending_sample_norm = norm(fresh);
                st = nsgdm_update_momentum(std::move(st), fresh, *nsgdm_cfg);
            } else {
                Vec sample = noise::sample_gradient(spec, grad, st.x, rng);
                traj.records.push_back(make_record(t, f_value, grad, norm(sample), st.x));
                if (auto* c = std::get_if<SgdConfig>(&cfg))
                    st = sgd_step(std::move(st), sample, *c);
                else if (auto* c2 = std::get_if<NsgdConfig>(&cfg))
                    st = nsgd_step(std::move(st), sample, *c2);
                else if (auto* c3 = std::get_if<AmsgradConfig>(&cfg))
                    st = amsgrad_norm_step(std::move(st), sample, *c3);
                else if (auto* c4 = std::get_if<AdagradConfig>(&cfg))
                    st = adagrad_norm_step(std::move(st), sample, *c4);
                else
                    st = momentum_sgd_step(std::move(st), sample, std::get<MomentumSgdConfig>(cfg));
            }
            traj.records.back().effective_stepsize = st.effective_stepsize;
        } catch (const OverflowError&) {
            // The step out of x_t blew up; x_t itself is already recorded.
            traj.overflow_at = t + 1;
            break;
        }
    }
    return traj;
}

}  // namespace optlab::optim
