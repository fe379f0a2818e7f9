#include <algorithm>
#include <cmath>

#include "optlab/harness.hpp"

namespace optlab::harness {

namespace {

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t i = 0; i < count; ++i) s[i] = first + i;
    return s;
}

const std::vector<std::int64_t> kRateGrid{100, 178, 316, 562, 1000, 1778, 3162, 5623, 10000};

ExperimentSpec quadratic_exp(const std::string& id, double l, double delta,
                             const OptimizerSpec& opt, const NoiseSpecConfig& noise,
                             std::int64_t T, std::vector<std::uint64_t> seeds) {
    ExperimentSpec s;
    s.experiment_id = id;
    s.instance_spec = {"quadratic", {{"l", l}, {"delta", delta}}, std::nullopt};
    s.optimizer_spec = opt;
    s.noise_spec = noise;
    s.horizon_T = T;
    s.seeds = std::move(seeds);
    return s;
}

std::vector<Reproduction> build_catalog() {
    std::vector<Reproduction> cat;
    const NoiseSpecConfig zero{"zero", 0.0, std::nullopt};
    const NoiseSpecConfig gauss1{"gaussian", 1.0, std::nullopt};

    {
        Reproduction r;
        r.name = "fig1a-quadratic";
        r.description =
            "untuned SGD vs AdaGrad-norm vs NSGD-M on quadratics with small and large "
            "curvature (eta = 1); SGD blows up on the stiff one, the adaptive methods stay tame";
        for (double l : {1.0, 30.0}) {
            const std::string suffix = (l == 1.0) ? "l1" : "l30";
            auto mk = [&](const std::string& opt_name, const OptimizerSpec& opt) {
                ExperimentSpec s = quadratic_exp("fig1a-" + opt_name + "-" + suffix, l, 2.0, opt,
                                                 zero, 1000, {20240501});
                s.metrics = {"grad_norm", "f_value"};
                s.emit_running_min = true;  // both per-iterate and running-min columns
                return s;
            };
            r.specs.push_back(mk("sgd", {"sgd", {{"eta", 1.0}, {"alpha", 0.5}}}));
            r.specs.push_back(mk("adagrad", {"adagrad", {{"eta", 1.0}, {"v0", 1.0}}}));
            r.specs.push_back(mk("nsgdm", {"nsgdm", {{"gamma", 1.0}, {"alpha", 0.75}}}));
        }
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "thm32-blowup";
        r.description =
            "decaying-stepsize GD on the 4-segment hard instance: gradient grows along the "
            "theoretical lower curve for t <= t0, then stalls on the flat-valley plateau";
        ExperimentSpec s;
        s.experiment_id = "thm32-blowup";
        s.instance_spec = {"sgd_hard", {{"l", 1.0}, {"delta", 0.5}, {"eta", 8.0}}, 64};
        s.optimizer_spec = {"sgd", {{"eta", 8.0}, {"alpha", 0.5}}};
        s.noise_spec = zero;
        s.horizon_T = 65;  // records x_0 .. x_64
        s.seeds = {1};
        s.bounds_to_overlay = {"sgd_lower_curve"};
        s.metrics = {"grad_norm", "f_value", "effective_stepsize"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "nsgd-noncvg";
        r.description =
            "NSGD with gamma_t = 1/sqrt(t+1) on the sign-flip oracle instance; the mean "
            "gradient norm is checked against the epsilon floor and the class threshold "
            "(both floors are expected red for the midpoint instance -- see README)";
        ExperimentSpec s;
        s.experiment_id = "nsgd-noncvg";
        s.instance_spec = {"nsgd_noncvg",
                           {{"l", 1.0}, {"sigma", 1.0}, {"epsilon", 0.5}, {"delta", 1.0},
                            {"gamma_max", 1.0}},
                           std::nullopt};
        s.optimizer_spec = {"nsgd", {{"gamma", 1.0}, {"alpha", 0.5}}};
        s.noise_spec = {"multiplicative_sign", 1.0, std::nullopt};
        s.horizon_T = 1000;
        s.seeds = seed_range(1, 1000);
        s.bounds_to_overlay = {"nsgd_noncvg_threshold"};
        s.metrics = {"grad_norm"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "amsgrad-frechet";
        r.description =
            "AMSGrad-norm under symmetric Frechet-tailed noise on the flat-valley lift; "
            "most seeds keep every gradient above the slow-convergence floor";
        ExperimentSpec s;
        s.experiment_id = "amsgrad-frechet";
        s.instance_spec = {"amsgrad_slow",
                           {{"l", 1.0}, {"delta", 1.0}, {"sigma", 1.0}, {"zeta", 0.75},
                            {"gamma", 1.0}, {"beta2", 0.0}},
                           std::nullopt};
        s.optimizer_spec = {"amsgrad",
                            {{"gamma", 1.0}, {"alpha", 0.5}, {"beta1", 0.0}, {"beta2", 0.0},
                             {"v0", 0.1}}};
        s.noise_spec = {"frechet_symmetric", 1.0, 0.75};
        s.horizon_T = 10000;
        s.seeds = seed_range(1, 200);
        s.bounds_to_overlay = {"amsgrad_stoch_lower"};
        s.metrics = {"grad_norm"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "amsgrad-oscillator";
        r.description =
            "constant-stepsize AMSGrad-norm on the oscillator quadratic: iterates bounce "
            "between +gamma/2 and -gamma/2 with gradient norm pinned at v0";
        ExperimentSpec s;
        s.experiment_id = "amsgrad-oscillator";
        s.instance_spec = {"amsgrad_oscillator",
                           {{"v0", 1.0}, {"gamma", 2.0}, {"l", 1.0}, {"delta", 1.0}},
                           std::nullopt};
        s.optimizer_spec = {"amsgrad",
                            {{"gamma", 2.0}, {"alpha", 0.0}, {"beta1", 0.0}, {"beta2", 0.0},
                             {"v0", 1.0}}};
        s.noise_spec = zero;
        s.horizon_T = 101;  // records x_0 .. x_100
        s.seeds = {1};
        s.bounds_to_overlay = {"amsgrad_det_lower"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "momentum-lb";
        r.description =
            "momentum SGD under capped stepsizes on the flat-valley quadratic keeps every "
            "gradient above sqrt(delta / (16 max{1/l, sum of caps}))";
        for (double b1 : {0.0, 0.9}) {
            ExperimentSpec s;
            s.experiment_id = (b1 == 0.0) ? "momentum-lb-gd" : "momentum-lb-heavy";
            s.instance_spec = {"momentum_lb",
                               {{"l", 1.0}, {"delta", 1.0}, {"cap_scale", 1.0}, {"cap_alpha", 0.5}},
                               std::nullopt};
            s.optimizer_spec = {"momentum_sgd",
                                {{"beta1", b1}, {"schedule_eta", 1.0}, {"schedule_alpha", 0.5}}};
            s.noise_spec = zero;
            s.horizon_T = 1000;
            s.seeds = {1};
            s.metrics = {"grad_norm"};
            r.specs.push_back(std::move(s));
        }
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "bound-sweep";
        r.description =
            "Monte Carlo dominance grid: noisy untuned SGD on the quadratic for several eta, "
            "checked against the closed-form upper bounds (plain and bounded-gradient forms)";
        for (double eta : {0.25, 0.5, 1.0, 2.0}) {
            char id[48];
            std::snprintf(id, sizeof id, "bound-sweep-eta%g", eta);
            ExperimentSpec s;
            s.experiment_id = id;
            s.instance_spec = {"quadratic",
                               {{"l", 1.0}, {"delta", 0.5}, {"domain_halfwidth", 32.0}},
                               std::nullopt};
            s.optimizer_spec = {"sgd", {{"eta", eta}, {"alpha", 0.5}}};
            s.noise_spec = gauss1;
            s.horizon_T = 1000;
            s.seeds = seed_range(1, 500);
            s.bounds_to_overlay = {"sgd_upper_bound", "sgd_upper_bound_general",
                                   "sgd_bounded_grad_bound"};
            s.metrics = {"grad_norm", "grad_norm_sq"};
            r.specs.push_back(std::move(s));
        }
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "amsgrad-det-rate";
        r.description =
            "deterministic AMSGrad-norm on per-horizon flat-valley quadratics: averaged "
            "gradient norm stays under the closed-form bound and decays like T^(-1/4)";
        for (std::int64_t T : kRateGrid) {
            ExperimentSpec s;
            s.experiment_id = "amsgrad-det-rate-T" + std::to_string(T);
            s.instance_spec = {"momentum_lb",
                               {{"l", 1.0}, {"delta", 1.0}, {"cap_scale", 10.0}, {"cap_alpha", 0.5}},
                               std::nullopt};
            s.optimizer_spec = {"amsgrad",
                                {{"gamma", 1.0}, {"alpha", 0.5}, {"beta1", 0.0}, {"beta2", 0.0},
                                 {"v0", 0.1}}};
            s.noise_spec = zero;
            s.horizon_T = T;
            s.seeds = {1};
            s.bounds_to_overlay = {"amsgrad_det_upper_bound"};
            s.metrics = {"grad_norm"};
            r.specs.push_back(std::move(s));
        }
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "adagrad-rate";
        r.description =
            "deterministic AdaGrad-norm on per-horizon flat-valley quadratics: averaged "
            "gradient norm decays like T^(-1/2)";
        for (std::int64_t T : kRateGrid) {
            ExperimentSpec s;
            s.experiment_id = "adagrad-rate-T" + std::to_string(T);
            s.instance_spec = {"momentum_lb",
                               {{"l", 1.0}, {"delta", 1.0}, {"cap_scale", 1.0}, {"cap_alpha", 0.0}},
                               std::nullopt};
            s.optimizer_spec = {"adagrad", {{"eta", 1.0}, {"v0", 1.0}}};
            s.noise_spec = zero;
            s.horizon_T = T;
            s.seeds = {1};
            s.bounds_to_overlay = {"adagrad_rate_template"};
            s.metrics = {"grad_norm"};
            r.specs.push_back(std::move(s));
        }
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "nsgdm-rate";
        r.description =
            "noisy NSGD-M on the quadratic, 100 seeds: running-average gradient norm decays "
            "like T^(-1/4) up to log factors";
        ExperimentSpec s =
            quadratic_exp("nsgdm-rate", 1.0, 2.0, {"nsgdm", {{"gamma", 1.0}, {"alpha", 0.75}}},
                          gauss1, 10000, seed_range(1, 100));
        s.bounds_to_overlay = {"nsgdm_rate_template"};
        s.metrics = {"grad_norm"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    {
        Reproduction r;
        r.name = "nsgd-rate";
        r.description =
            "deterministic normalized GD on the quadratic: running-average gradient norm "
            "decays like T^(-1/2)";
        ExperimentSpec s =
            quadratic_exp("nsgd-rate", 1.0, 2.0, {"nsgd", {{"gamma", 1.0}, {"alpha", 0.5}}}, zero,
                          2500, {1});
        s.bounds_to_overlay = {"nsgd_upper_bound"};
        s.metrics = {"grad_norm"};
        r.specs.push_back(std::move(s));
        cat.push_back(std::move(r));
    }
    return cat;
}

// ---------------------------------------------------------------------------
// Checks

const ExperimentResult& result_by_id(const std::vector<ExperimentResult>& results,
                                     const std::string& id) {
    for (const auto& r : results)
        if (r.spec_echo.experiment_id == id) return r;
    throw IndexError("no experiment '" + id + "' in reproduction");
}

double instance_param(const ExperimentResult& r, const std::string& name) {
    return ProblemInstance::from_json_string(r.instance_json).param(name);
}

Verdict pass_fail(bool ok, const std::string& msg) {
    return Verdict{ok ? "pass" : "fail", msg};
}

std::map<std::string, Verdict> checks_fig1a(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    auto max_ratio = [](const ExperimentResult& r) {
        const auto& g = r.per_seed[0].grad_norm;
        double mx = 0.0;
        for (double x : g) mx = std::max(mx, x);
        return mx / g[0];
    };
    const double sgd30 = max_ratio(result_by_id(results, "fig1a-sgd-l30"));
    v["sgd_blowup_l30"] =
        pass_fail(sgd30 >= 10.0, "max/initial gradient ratio " + std::to_string(sgd30));
    for (const char* name : {"adagrad", "nsgdm"}) {
        const double ratio = max_ratio(result_by_id(results, std::string("fig1a-") + name + "-l30"));
        v[std::string(name) + "_tame_l30"] =
            pass_fail(ratio <= 2.0, "max/initial gradient ratio " + std::to_string(ratio));
    }
    return v;
}

std::map<std::string, Verdict> checks_thm32(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    const auto& r = results.at(0);
    const auto& g = r.per_seed[0].grad_norm;
    const auto t0 = static_cast<std::int64_t>(instance_param(r, "t0"));
    const double delta_tilde = instance_param(r, "delta_tilde");
    const double eta = r.spec_echo.optimizer_spec.fields.at("eta");
    const double l = instance_param(r, "l");
    const double delta = instance_param(r, "delta");
    const auto T_inst = *r.spec_echo.instance_spec.horizon_T;

    const auto& curve = r.bound_values.at("sgd_lower_curve").curve;
    bool growth_ok = true;
    for (std::int64_t t = 1; t <= t0; ++t)
        if (!(g[static_cast<std::size_t>(t)] >= curve[static_cast<std::size_t>(t)])) growth_ok = false;
    v["growth_phase_curve"] = pass_fail(growth_ok, "per-step lower curve over 1 <= t <= t0");

    const double el = eta * l;
    const double t0_display =
        std::sqrt(8.0 * delta / (3.0 * eta)) * std::exp((el * el / 32.0 - 4.0) * std::log(8.0 * M_E));
    v["growth_t0_display"] = pass_fail(g[static_cast<std::size_t>(t0)] >= t0_display,
                                       "|grad(x_t0)| vs second growth display");

    const double plateau =
        0.25 * std::sqrt(delta_tilde) *
        std::min(std::sqrt(l), 1.0 / std::sqrt(2.0 * eta) / std::pow(static_cast<double>(T_inst), 0.25));
    bool plateau_ok = true;
    for (std::int64_t t = t0 + 1; t <= T_inst; ++t)
        if (!(g[static_cast<std::size_t>(t)] >= plateau)) plateau_ok = false;
    v["plateau_floor"] = pass_fail(plateau_ok, "flat-valley floor over t0 < t <= T");
    return v;
}

std::map<std::string, Verdict> checks_nsgd_noncvg(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    const auto& r = results.at(0);
    const double eps = r.spec_echo.instance_spec.fields.at("epsilon");
    const double thr = *r.bound_values.at("nsgd_noncvg_threshold").scalar;
    const auto& rows = r.aggregates.at("grad_norm");
    bool eps_ok = true, thr_ok = true;
    double worst_eps = HUGE_VAL, worst_thr = HUGE_VAL;
    for (const auto& row : rows) {
        if (row.mean < eps) eps_ok = false;
        worst_eps = std::min(worst_eps, row.mean);
        if (row.mean < thr - 3.0 * row.stderr_) thr_ok = false;
        worst_thr = std::min(worst_thr, row.mean - (thr - 3.0 * row.stderr_));
    }
    char m1[128], m2[128];
    std::snprintf(m1, sizeof m1, "min_t mean = %.6g vs epsilon = %.6g", worst_eps, eps);
    std::snprintf(m2, sizeof m2, "min_t (mean - (thr - 3se)) = %.6g, thr = %.6g", worst_thr, thr);
    v["epsilon_floor"] = pass_fail(eps_ok, m1);
    v["threshold_floor"] = pass_fail(thr_ok, m2);
    return v;
}

std::map<std::string, Verdict> checks_amsgrad_frechet(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    const auto& r = results.at(0);
    const double bound = *r.bound_values.at("amsgrad_stoch_lower").scalar;
    std::size_t hits = 0;
    for (const auto& s : r.per_seed) {
        double mn = HUGE_VAL;
        for (double x : s.grad_norm) mn = std::min(mn, x);
        if (mn >= bound) ++hits;
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(r.per_seed.size());
    char msg[128];
    std::snprintf(msg, sizeof msg, "fraction of seeds with min grad >= %.6g: %.3f", bound, frac);
    v["min_grad_fraction"] = pass_fail(frac >= 0.45, msg);
    return v;
}

std::map<std::string, Verdict> checks_oscillator(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    const auto& r = results.at(0);
    const double v0 = r.spec_echo.instance_spec.fields.at("v0");
    const auto& s = r.per_seed[0];
    bool exact = s.length() == static_cast<std::size_t>(r.spec_echo.horizon_T);
    for (double g : s.grad_norm)
        if (g != v0) exact = false;
    for (std::size_t t = 0; t + 2 < s.length(); ++t)
        if (s.x1[t + 2] != s.x1[t]) exact = false;
    v["exact_oscillation"] =
        pass_fail(exact, "gradient norm pinned at v0 with bitwise period-2 iterates");
    return v;
}

std::map<std::string, Verdict> checks_momentum_lb(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    bool ok = true;
    std::string detail;
    for (const auto& r : results) {
        const double S = instance_param(r, "valley_scale");
        const double delta = instance_param(r, "delta");
        const double floor = std::sqrt(delta / (16.0 * S));
        double mn = HUGE_VAL;
        for (double g : r.per_seed[0].grad_norm) mn = std::min(mn, g);
        if (!(mn >= floor)) ok = false;
        detail += r.spec_echo.experiment_id + ": min " + std::to_string(mn) + " vs floor " +
                  std::to_string(floor) + "; ";
    }
    v["min_grad_floor"] = pass_fail(ok, detail);
    return v;
}

std::map<std::string, Verdict> checks_bound_sweep(const std::vector<ExperimentResult>& results) {
    std::map<std::string, Verdict> v;
    for (const char* bound : {"sgd_upper_bound", "sgd_bounded_grad_bound"}) {
        bool all_ok = true;
        std::string detail;
        for (const auto& r : results) {
            const Verdict d = dominance_check(r, bound);
            if (d.status != "pass") all_ok = false;
            detail += r.spec_echo.experiment_id + ": " + d.status + "; ";
        }
        const std::string name =
            (std::string(bound) == "sgd_upper_bound") ? "thm31_dominance" : "propb2_dominance";
        v[name] = pass_fail(all_ok, detail);
    }
    return v;
}

std::map<std::string, Verdict> checks_rate_grid(const std::vector<ExperimentResult>& results,
                                                double lo, double hi, bool with_dominance) {
    std::map<std::string, Verdict> v;
    std::vector<std::pair<double, double>> series;
    bool dom_ok = true;
    std::string dom_detail;
    for (const auto& r : results) {
        const auto [avg, se] = seed_time_average(r, "grad_norm");
        (void)se;
        series.emplace_back(static_cast<double>(r.spec_echo.horizon_T), avg);
        if (with_dominance) {
            const auto& bv = r.bound_values.at("amsgrad_det_upper_bound");
            const std::int64_t T = r.spec_echo.horizon_T;
            if (T == 100 || T == 1000 || T == 10000) {
                if (!(bv.scalar && avg <= *bv.scalar)) dom_ok = false;
                dom_detail += "T=" + std::to_string(T) + ": " + std::to_string(avg) + " vs " +
                              (bv.scalar ? std::to_string(*bv.scalar) : bv.skip_reason) + "; ";
            }
        }
    }
    const auto fit = diagnostics::fit_power_law(series, 1.0);
    char msg[128];
    std::snprintf(msg, sizeof msg, "fitted exponent %.4f, window [%g, %g]", fit.exponent, lo, hi);
    v["rate_exponent"] = pass_fail(fit.exponent >= lo && fit.exponent <= hi, msg);
    if (with_dominance) v["bound_dominance"] = pass_fail(dom_ok, dom_detail);
    return v;
}

std::map<std::string, Verdict> checks_fitted_exponent(const std::vector<ExperimentResult>& results,
                                                      double lo, double hi) {
    std::map<std::string, Verdict> v;
    const auto& r = results.at(0);
    auto it = r.rate_fits.find("grad_norm");
    if (it == r.rate_fits.end()) {
        v["rate_exponent"] = Verdict{"fail", "rate fit unavailable: " +
                                                 (r.rate_fit_skips.count("grad_norm")
                                                      ? r.rate_fit_skips.at("grad_norm")
                                                      : "missing")};
        return v;
    }
    char msg[128];
    std::snprintf(msg, sizeof msg, "fitted exponent %.4f, window [%g, %g]", it->second.exponent, lo,
                  hi);
    v["rate_exponent"] = pass_fail(it->second.exponent >= lo && it->second.exponent <= hi, msg);
    return v;
}

}  // namespace

const std::vector<Reproduction>& list_reproductions() {
    static const std::vector<Reproduction> catalog = build_catalog();
    return catalog;
}

const Reproduction& reproduction_by_name(const std::string& name) {
    for (const auto& r : list_reproductions())
        if (r.name == name) return r;
    throw IndexError("no reproduction named '" + name + "'");
}

namespace detail {

std::map<std::string, Verdict> run_checks_for(const std::string& name,
                                              const std::vector<ExperimentResult>& results) {
    if (name == "fig1a-quadratic") return checks_fig1a(results);
    if (name == "thm32-blowup") return checks_thm32(results);
    if (name == "nsgd-noncvg") return checks_nsgd_noncvg(results);
    if (name == "amsgrad-frechet") return checks_amsgrad_frechet(results);
    if (name == "amsgrad-oscillator") return checks_oscillator(results);
    if (name == "momentum-lb") return checks_momentum_lb(results);
    if (name == "bound-sweep") return checks_bound_sweep(results);
    if (name == "amsgrad-det-rate") return checks_rate_grid(results, -0.35, -0.15, true);
    if (name == "adagrad-rate") return checks_rate_grid(results, -0.6, -0.4, false);
    if (name == "nsgdm-rate") return checks_fitted_exponent(results, -0.6, -0.15);
    if (name == "nsgd-rate") return checks_fitted_exponent(results, -0.6, -0.4);
    return {};
}

}  // namespace detail

}  // namespace optlab::harness
