#include "optlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"

namespace optlab::harness {

using nlohmann::ordered_json;

namespace detail {
std::map<std::string, Verdict> run_checks_for(const std::string& name,
                                              const std::vector<ExperimentResult>& results);
}

namespace {

const std::vector<std::string> kMetricNames{"grad_norm", "grad_norm_sq", "f_value",
                                            "effective_stepsize"};

const std::vector<std::string> kBoundNames{
    "sgd_upper_bound",        "sgd_upper_bound_general", "sgd_bounded_grad_bound",
    "sgd_lower_curve",        "nsgd_upper_bound",         "nsgd_noncvg_threshold",
    "amsgrad_det_upper_bound", "amsgrad_det_lower",       "amsgrad_stoch_lower",
    "nsgdm_rate_template",    "adagrad_rate_template"};

constexpr std::size_t kRetentionCap = 32;

[[noreturn]] void bad_config(const std::string& msg, const std::string& ptr) {
    throw ConfigError(msg, ptr);
}

void reject_unknown(const ordered_json& j, const std::set<std::string>& allowed,
                    const std::string& ptr) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) bad_config("unknown key '" + it.key() + "'", ptr + "/" + it.key());
}

double get_number(const ordered_json& j, const std::string& key, const std::string& ptr) {
    if (!j.contains(key)) bad_config("missing required field '" + key + "'", ptr);
    if (!j[key].is_number()) bad_config("field '" + key + "' must be a number", ptr + "/" + key);
    return j[key].get<double>();
}

double get_number_or(const ordered_json& j, const std::string& key, const std::string& ptr,
                     double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) bad_config("field '" + key + "' must be a number", ptr + "/" + key);
    return j[key].get<double>();
}

struct FieldRule {
    const char* name;
    bool required;
    // 0: positive, 1: nonnegative, 2: unconstrained
    int constraint;
};

void parse_fields(const ordered_json& j, const std::vector<FieldRule>& rules,
                  std::map<std::string, double>& out, const std::string& ptr) {
    for (const auto& r : rules) {
        if (!j.contains(r.name)) {
            if (r.required) bad_config(std::string("missing required field '") + r.name + "'", ptr);
            continue;
        }
        if (!j[r.name].is_number())
            bad_config(std::string("field '") + r.name + "' must be a number",
                       ptr + "/" + r.name);
        const double v = j[r.name].get<double>();
        if (r.constraint == 0 && (!(v > 0.0) || !std::isfinite(v)))
            bad_config(std::string(r.name) + " must be positive", ptr + "/" + r.name);
        if (r.constraint == 1 && (!(v >= 0.0) || !std::isfinite(v)))
            bad_config(std::string(r.name) + " must be nonnegative", ptr + "/" + r.name);
        out[r.name] = v;
    }
}

double field_or(const std::map<std::string, double>& m, const std::string& k, double dflt) {
    auto it = m.find(k);
    return it == m.end() ? dflt : it->second;
}

double field_req(const std::map<std::string, double>& m, const std::string& k) {
    auto it = m.find(k);
    if (it == m.end()) throw PreconditionError("missing spec field '" + k + "'");
    return it->second;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    const int nthreads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

std::string grid_key(const ExperimentSpec& spec) {
    char buf[96];
    const auto& f = spec.optimizer_spec.fields;
    const double rate = f.count("eta") ? f.at("eta") : field_or(f, "gamma", 0.0);
    std::snprintf(buf, sizeof buf, "eta=%g,l=%g", rate,
                  field_or(spec.instance_spec.fields, "l", 0.0));
    return buf;
}

}  // namespace

ExperimentSpec parse_config(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        bad_config(std::string("malformed JSON: ") + e.what(), "");
    }
    if (!j.is_object()) bad_config("config must be a JSON object", "");
    reject_unknown(j,
                   {"experiment_id", "instance_spec", "optimizer_spec", "noise_spec", "horizon_T",
                    "seeds", "bounds_to_overlay", "metrics", "emit_running_min"},
                   "");

    ExperimentSpec spec;
    if (!j.contains("experiment_id") || !j["experiment_id"].is_string())
        bad_config("experiment_id (string) is required", "/experiment_id");
    spec.experiment_id = j["experiment_id"].get<std::string>();

    // instance_spec
    {
        if (!j.contains("instance_spec") || !j["instance_spec"].is_object())
            bad_config("instance_spec (object) is required", "/instance_spec");
        const auto& ij = j["instance_spec"];
        const std::string ptr = "/instance_spec";
        if (!ij.contains("kind") || !ij["kind"].is_string())
            bad_config("instance_spec.kind is required", ptr + "/kind");
        spec.instance_spec.kind = ij["kind"].get<std::string>();
        const std::string& kind = spec.instance_spec.kind;
        auto& f = spec.instance_spec.fields;
        if (kind == "quadratic") {
            reject_unknown(ij, {"kind", "l", "delta", "dimension", "domain_halfwidth"}, ptr);
            parse_fields(ij,
                         {{"l", true, 0}, {"delta", true, 0}, {"dimension", false, 0},
                          {"domain_halfwidth", false, 0}},
                         f, ptr);
            if (f.count("dimension") && f["dimension"] != std::floor(f["dimension"]))
                bad_config("dimension must be an integer", ptr + "/dimension");
        } else if (kind == "sgd_hard") {
            reject_unknown(ij, {"kind", "l", "delta", "eta", "horizon_T"}, ptr);
            parse_fields(ij, {{"l", true, 0}, {"delta", true, 0}, {"eta", true, 0}}, f, ptr);
            if (f["eta"] * f["l"] < 5.0)
                bad_config("sgd_hard requires eta*l >= 5 (blow-up construction hypothesis); got eta*l = " +
                               std::to_string(f["eta"] * f["l"]),
                           ptr);
        } else if (kind == "momentum_lb") {
            reject_unknown(ij, {"kind", "l", "delta", "cap_scale", "cap_alpha", "horizon_T"}, ptr);
            parse_fields(ij,
                         {{"l", true, 0}, {"delta", true, 0}, {"cap_scale", true, 0},
                          {"cap_alpha", true, 1}},
                         f, ptr);
        } else if (kind == "amsgrad_oscillator") {
            reject_unknown(ij, {"kind", "v0", "gamma", "l", "delta"}, ptr);
            parse_fields(ij, {{"v0", true, 0}, {"gamma", true, 0}, {"l", true, 0}, {"delta", true, 0}},
                         f, ptr);
        } else if (kind == "nsgd_noncvg") {
            reject_unknown(ij, {"kind", "l", "sigma", "epsilon", "delta", "gamma_max"}, ptr);
            parse_fields(ij,
                         {{"l", true, 0}, {"sigma", true, 0}, {"epsilon", true, 0},
                          {"delta", true, 0}, {"gamma_max", true, 0}},
                         f, ptr);
        } else if (kind == "amsgrad_slow") {
            reject_unknown(ij, {"kind", "l", "delta", "sigma", "zeta", "gamma", "beta2", "horizon_T"},
                           ptr);
            parse_fields(ij,
                         {{"l", true, 0}, {"delta", true, 0}, {"sigma", true, 0}, {"zeta", true, 0},
                          {"gamma", true, 0}, {"beta2", true, 1}},
                         f, ptr);
            if (f["zeta"] <= 0.5 || f["zeta"] >= 1.0)
                bad_config("zeta must lie in (1/2, 1)", ptr + "/zeta");
        } else {
            bad_config("unknown instance kind '" + kind + "'", ptr + "/kind");
        }
        if (ij.contains("horizon_T")) {
            if (!ij["horizon_T"].is_number_integer() || ij["horizon_T"].get<std::int64_t>() < 1)
                bad_config("horizon_T must be a positive integer", ptr + "/horizon_T");
            spec.instance_spec.horizon_T = ij["horizon_T"].get<std::int64_t>();
        }
    }

    // optimizer_spec
    {
        if (!j.contains("optimizer_spec") || !j["optimizer_spec"].is_object())
            bad_config("optimizer_spec (object) is required", "/optimizer_spec");
        const auto& oj = j["optimizer_spec"];
        const std::string ptr = "/optimizer_spec";
        if (!oj.contains("kind") || !oj["kind"].is_string())
            bad_config("optimizer_spec.kind is required", ptr + "/kind");
        spec.optimizer_spec.kind = oj["kind"].get<std::string>();
        const std::string& kind = spec.optimizer_spec.kind;
        auto& f = spec.optimizer_spec.fields;
        if (kind == "sgd") {
            reject_unknown(oj, {"kind", "eta", "alpha"}, ptr);
            parse_fields(oj, {{"eta", true, 0}, {"alpha", false, 1}}, f, ptr);
        } else if (kind == "nsgd") {
            reject_unknown(oj, {"kind", "gamma", "alpha"}, ptr);
            parse_fields(oj, {{"gamma", true, 0}, {"alpha", false, 1}}, f, ptr);
        } else if (kind == "nsgdm") {
            reject_unknown(oj, {"kind", "gamma", "alpha"}, ptr);
            parse_fields(oj, {{"gamma", true, 0}, {"alpha", false, 1}}, f, ptr);
        } else if (kind == "amsgrad") {
            reject_unknown(oj, {"kind", "gamma", "alpha", "beta1", "beta2", "v0"}, ptr);
            parse_fields(oj,
                         {{"gamma", true, 0}, {"alpha", false, 1}, {"beta1", false, 1},
                          {"beta2", false, 1}, {"v0", true, 0}},
                         f, ptr);
        } else if (kind == "adagrad") {
            reject_unknown(oj, {"kind", "eta", "v0"}, ptr);
            parse_fields(oj, {{"eta", true, 0}, {"v0", true, 0}}, f, ptr);
        } else if (kind == "momentum_sgd") {
            reject_unknown(oj, {"kind", "beta1", "schedule_eta", "schedule_alpha"}, ptr);
            parse_fields(oj,
                         {{"beta1", true, 1}, {"schedule_eta", true, 0}, {"schedule_alpha", true, 1}},
                         f, ptr);
        } else {
            bad_config("unknown optimizer kind '" + kind + "'", ptr + "/kind");
        }
    }

    // noise_spec
    {
        if (!j.contains("noise_spec") || !j["noise_spec"].is_object())
            bad_config("noise_spec (object) is required", "/noise_spec");
        const auto& nj = j["noise_spec"];
        const std::string ptr = "/noise_spec";
        reject_unknown(nj, {"kind", "sigma", "zeta"}, ptr);
        if (!nj.contains("kind") || !nj["kind"].is_string())
            bad_config("noise_spec.kind is required", ptr + "/kind");
        spec.noise_spec.kind = nj["kind"].get<std::string>();
        const double sigma = get_number_or(nj, "sigma", ptr, 0.0);
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            bad_config("sigma must be nonnegative", ptr + "/sigma");
        spec.noise_spec.sigma = sigma;
        if (nj.contains("zeta")) spec.noise_spec.zeta = get_number(nj, "zeta", ptr);
        const std::string& kind = spec.noise_spec.kind;
        if (kind == "zero") {
            if (sigma != 0.0) bad_config("zero noise must have sigma = 0", ptr + "/sigma");
        } else if (kind == "gaussian" || kind == "multiplicative_sign" ||
                   kind == "frechet_symmetric") {
            if (!(sigma > 0.0)) bad_config(kind + " noise requires sigma > 0", ptr + "/sigma");
        } else {
            bad_config("unknown noise kind '" + kind + "'", ptr + "/kind");
        }
        if (kind == "frechet_symmetric" && !spec.noise_spec.zeta)
            bad_config("frechet_symmetric noise requires zeta", ptr + "/zeta");
        // Oracle parameters of the coupled constructions are derived by the
        // instance builders, so the kinds must line up.
        const std::string& ikind = spec.instance_spec.kind;
        if (ikind == "nsgd_noncvg") {
            if (kind != "multiplicative_sign")
                bad_config("nsgd_noncvg instances define a multiplicative_sign oracle", ptr + "/kind");
            if (sigma != spec.instance_spec.fields.at("sigma"))
                bad_config("sigma must match the instance's sigma", ptr + "/sigma");
        } else if (ikind == "amsgrad_slow") {
            if (kind != "frechet_symmetric")
                bad_config("amsgrad_slow instances define a frechet_symmetric oracle", ptr + "/kind");
            if (sigma != spec.instance_spec.fields.at("sigma"))
                bad_config("sigma must match the instance's sigma", ptr + "/sigma");
            if (*spec.noise_spec.zeta != spec.instance_spec.fields.at("zeta"))
                bad_config("zeta must match the instance's zeta", ptr + "/zeta");
        } else if (kind == "multiplicative_sign" || kind == "frechet_symmetric") {
            bad_config("noise kind '" + kind + "' is only available with its coupled instance",
                       ptr + "/kind");
        }
    }

    if (!j.contains("horizon_T") || !j["horizon_T"].is_number_integer() ||
        j["horizon_T"].get<std::int64_t>() < 1)
        bad_config("horizon_T must be a positive integer", "/horizon_T");
    spec.horizon_T = j["horizon_T"].get<std::int64_t>();

    if (!j.contains("seeds") || !j["seeds"].is_array() || j["seeds"].empty())
        bad_config("seeds must be a non-empty array", "/seeds");
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < j["seeds"].size(); ++i) {
        const auto& sj = j["seeds"][i];
        if (!sj.is_number_integer())
            bad_config("seed must be an integer", "/seeds/" + std::to_string(i));
        const auto s = sj.get<std::uint64_t>();
        if (!seen.insert(s).second)
            bad_config("seeds must be distinct", "/seeds/" + std::to_string(i));
        spec.seeds.push_back(s);
    }

    if (j.contains("bounds_to_overlay")) {
        if (!j["bounds_to_overlay"].is_array())
            bad_config("bounds_to_overlay must be an array", "/bounds_to_overlay");
        for (std::size_t i = 0; i < j["bounds_to_overlay"].size(); ++i) {
            const auto name = j["bounds_to_overlay"][i].get<std::string>();
            if (std::find(kBoundNames.begin(), kBoundNames.end(), name) == kBoundNames.end())
                bad_config("unknown bound '" + name + "'", "/bounds_to_overlay/" + std::to_string(i));
            spec.bounds_to_overlay.push_back(name);
        }
    }
    if (j.contains("metrics")) {
        if (!j["metrics"].is_array() || j["metrics"].empty())
            bad_config("metrics must be a non-empty array", "/metrics");
        spec.metrics.clear();
        for (std::size_t i = 0; i < j["metrics"].size(); ++i) {
            const auto name = j["metrics"][i].get<std::string>();
            if (std::find(kMetricNames.begin(), kMetricNames.end(), name) == kMetricNames.end())
                bad_config("unknown metric '" + name + "'", "/metrics/" + std::to_string(i));
            spec.metrics.push_back(name);
        }
    }
    if (j.contains("emit_running_min")) {
        if (!j["emit_running_min"].is_boolean())
            bad_config("emit_running_min must be a boolean", "/emit_running_min");
        spec.emit_running_min = j["emit_running_min"].get<bool>();
    }
    return spec;
}

std::string serialize_config(const ExperimentSpec& spec) {
    ordered_json j;
    j["experiment_id"] = spec.experiment_id;
    ordered_json ij;
    ij["kind"] = spec.instance_spec.kind;
    for (const auto& [k, v] : spec.instance_spec.fields) ij[k] = v;
    if (spec.instance_spec.horizon_T) ij["horizon_T"] = *spec.instance_spec.horizon_T;
    j["instance_spec"] = ij;
    ordered_json oj;
    oj["kind"] = spec.optimizer_spec.kind;
    for (const auto& [k, v] : spec.optimizer_spec.fields) oj[k] = v;
    j["optimizer_spec"] = oj;
    ordered_json nj;
    nj["kind"] = spec.noise_spec.kind;
    nj["sigma"] = spec.noise_spec.sigma;
    if (spec.noise_spec.zeta) nj["zeta"] = *spec.noise_spec.zeta;
    j["noise_spec"] = nj;
    j["horizon_T"] = spec.horizon_T;
    j["seeds"] = spec.seeds;
    j["bounds_to_overlay"] = spec.bounds_to_overlay;
    j["metrics"] = spec.metrics;
    if (spec.emit_running_min) j["emit_running_min"] = true;
    return j.dump(2);
}

BuiltExperiment build_experiment(const ExperimentSpec& spec) {
    BuiltExperiment built;
    const auto& f = spec.instance_spec.fields;
    const std::string& kind = spec.instance_spec.kind;
    const std::int64_t builder_T = spec.instance_spec.horizon_T.value_or(spec.horizon_T);

    if (kind == "quadratic") {
        built.instance = instances::make_quadratic(
            field_req(f, "l"), field_req(f, "delta"),
            static_cast<int>(field_or(f, "dimension", 1.0)), field_or(f, "domain_halfwidth", 0.0));
    } else if (kind == "sgd_hard") {
        auto [inst, rep] = instances::build_sgd_hard_instance(field_req(f, "l"), field_req(f, "delta"),
                                                              field_req(f, "eta"), builder_T);
        built.instance = std::move(inst);
        built.hard_report = std::move(rep);
    } else if (kind == "momentum_lb") {
        const double scale = field_req(f, "cap_scale");
        const double alpha = field_req(f, "cap_alpha");
        built.instance = instances::make_momentum_lb_quadratic(
            field_req(f, "l"), field_req(f, "delta"),
            [scale, alpha](std::int64_t t) { return power_stepsize(scale, alpha, t); }, builder_T);
    } else if (kind == "amsgrad_oscillator") {
        built.instance = instances::make_amsgrad_oscillator(field_req(f, "v0"), field_req(f, "gamma"),
                                                            field_req(f, "l"), field_req(f, "delta"));
    } else if (kind == "nsgd_noncvg") {
        auto [inst, ns] = instances::make_nsgd_noncvg_instance(
            field_req(f, "l"), field_req(f, "sigma"), field_req(f, "epsilon"), field_req(f, "delta"),
            field_req(f, "gamma_max"));
        built.instance = std::move(inst);
        built.noise = ns;
    } else if (kind == "amsgrad_slow") {
        auto [inst, ns] = instances::make_amsgrad_slow_instance(
            field_req(f, "l"), field_req(f, "delta"), field_req(f, "sigma"), field_req(f, "zeta"),
            field_req(f, "gamma"), field_req(f, "beta2"), builder_T);
        built.instance = std::move(inst);
        built.noise = ns;
    } else {
        throw PreconditionError("unknown instance kind '" + kind + "'");
    }

    if (kind != "nsgd_noncvg" && kind != "amsgrad_slow") {
        if (spec.noise_spec.kind == "zero")
            built.noise = noise::NoiseSpec::zero();
        else if (spec.noise_spec.kind == "gaussian")
            built.noise = noise::NoiseSpec::gaussian(spec.noise_spec.sigma);
        else
            throw PreconditionError("noise kind '" + spec.noise_spec.kind +
                                    "' requires its coupled instance");
    }

    const auto& of = spec.optimizer_spec.fields;
    const std::string& okind = spec.optimizer_spec.kind;
    if (okind == "sgd") {
        built.optimizer = optim::SgdConfig{field_req(of, "eta"), field_or(of, "alpha", 0.5)};
    } else if (okind == "nsgd") {
        built.optimizer = optim::NsgdConfig{field_req(of, "gamma"), field_or(of, "alpha", 0.5)};
    } else if (okind == "nsgdm") {
        optim::NsgdmConfig c;
        c.gamma = field_req(of, "gamma");
        c.alpha = field_or(of, "alpha", 0.75);
        built.optimizer = std::move(c);
    } else if (okind == "amsgrad") {
        optim::AmsgradConfig c;
        c.gamma = field_req(of, "gamma");
        c.alpha = field_or(of, "alpha", 0.5);
        c.beta1 = field_or(of, "beta1", 0.0);
        c.beta2 = field_or(of, "beta2", 0.0);
        c.v0 = field_req(of, "v0");
        built.optimizer = std::move(c);
    } else if (okind == "adagrad") {
        built.optimizer = optim::AdagradConfig{field_req(of, "eta"), field_req(of, "v0")};
    } else if (okind == "momentum_sgd") {
        optim::MomentumSgdConfig c;
        c.beta1 = field_req(of, "beta1");
        const double se = field_req(of, "schedule_eta");
        const double sa = field_req(of, "schedule_alpha");
        c.stepsize_schedule = [se, sa](std::int64_t t) { return power_stepsize(se, sa, t); };
        built.optimizer = std::move(c);
    } else {
        throw PreconditionError("unknown optimizer kind '" + okind + "'");
    }
    std::visit([](const auto& c) { c.validate(); }, built.optimizer);
    return built;
}

namespace {

SeedSeries to_series(const Trajectory& traj) {
    SeedSeries s;
    s.seed = traj.seed;
    s.overflow_at = traj.overflow_at;
    const std::size_t n = traj.records.size();
    s.f_value.reserve(n);
    s.grad_norm.reserve(n);
    s.stoch_grad_norm.reserve(n);
    s.effective_stepsize.reserve(n);
    s.x1.reserve(n);
    for (const auto& r : traj.records) {
        s.f_value.push_back(r.f_value);
        s.grad_norm.push_back(r.grad_norm);
        s.stoch_grad_norm.push_back(r.stoch_grad_norm);
        s.effective_stepsize.push_back(r.effective_stepsize);
        s.x1.push_back(r.summary_len > 0 ? r.iterate_summary[0] : 0.0);
    }
    return s;
}

const std::vector<double>* column_of(const SeedSeries& s, const std::string& metric) {
    if (metric == "grad_norm") return &s.grad_norm;
    if (metric == "f_value") return &s.f_value;
    if (metric == "effective_stepsize") return &s.effective_stepsize;
    return nullptr;  // grad_norm_sq and grad_norm_runmin are derived
}

double metric_at(const SeedSeries& s, const std::string& metric, std::size_t t) {
    if (metric == "grad_norm_sq") return s.grad_norm[t] * s.grad_norm[t];
    return (*column_of(s, metric))[t];
}

std::vector<AggregateRow> aggregate_metric(const std::vector<SeedSeries>& sorted,
                                           const std::string& metric, std::size_t max_len) {
    std::vector<AggregateRow> rows(max_len);
    std::vector<double> runmin(sorted.size(), HUGE_VAL);
    for (std::size_t t = 0; t < max_len; ++t) {
        double sum = 0.0, comp = 0.0;
        std::int64_t n = 0;
        std::vector<double> vals;
        vals.reserve(sorted.size());
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            const auto& s = sorted[k];
            if (t >= s.length()) continue;
            double v;
            if (metric == "grad_norm_runmin") {
                runmin[k] = std::min(runmin[k], s.grad_norm[t]);
                v = runmin[k];
            } else {
                v = metric_at(s, metric, t);
            }
            vals.push_back(v);
            const double y = v - comp;
            const double tt = sum + y;
            comp = (tt - sum) - y;
            sum = tt;
            ++n;
        }
        AggregateRow row;
        row.n = n;
        if (n > 0) row.mean = sum / static_cast<double>(n);
        if (n > 1) {
            double ss = 0.0;
            for (double v : vals) ss += (v - row.mean) * (v - row.mean);
            row.stderr_ = std::sqrt(ss / static_cast<double>(n - 1)) /
                          std::sqrt(static_cast<double>(n));
        }
        rows[t] = row;
    }
    return rows;
}

theory::BoundRequest request_from(const ExperimentSpec& spec, const BuiltExperiment& built) {
    theory::BoundRequest req;
    req.l = built.instance.smoothness_l;
    req.delta = built.instance.initial_gap;
    req.sigma = built.noise.sigma;
    req.horizon_T = spec.horizon_T;
    if (built.instance.gradient_bound) req.G = *built.instance.gradient_bound;
    if (built.noise.zeta) req.zeta = *built.noise.zeta;
    const auto& of = spec.optimizer_spec.fields;
    const std::string& okind = spec.optimizer_spec.kind;
    if (of.count("eta")) req.eta = of.at("eta");
    if (of.count("gamma")) req.gamma = of.at("gamma");
    if (of.count("v0")) req.v0 = of.at("v0");
    if (of.count("beta2")) req.beta2 = of.at("beta2");
    else if (okind == "amsgrad") req.beta2 = 0.0;
    if (of.count("alpha")) req.alpha = of.at("alpha");
    else if (okind == "sgd" || okind == "nsgd" || okind == "amsgrad") req.alpha = 0.5;
    else if (okind == "nsgdm") req.alpha = 0.75;
    return req;
}

BoundValue evaluate_bound(const std::string& name, const ExperimentSpec& spec,
                          const BuiltExperiment& built, std::size_t max_len) {
    BoundValue bv;
    const theory::BoundRequest req = request_from(spec, built);
    try {
        if (name == "sgd_upper_bound" || name == "sgd_upper_bound_general") {
            const auto form = (name == "sgd_upper_bound") ? theory::SgdBoundForm::basic
                                                          : theory::SgdBoundForm::general;
            bv.scalar = theory::sgd_upper_bound(req, form);
            bv.metric = "avg_grad_norm_sq";
        } else if (name == "sgd_bounded_grad_bound") {
            bv.scalar = theory::sgd_bounded_grad_bound(req);
            bv.metric = "avg_grad_norm_sq";
        } else if (name == "sgd_lower_curve") {
            if (!req.eta) throw PreconditionError("sgd_lower_curve needs an sgd-style eta");
            const double eta = *req.eta;
            const double l = *req.l;
            const std::int64_t t0 = theory::t0_hard(eta, l);
            bv.curve.assign(max_len, std::nan(""));
            for (std::size_t t = 1; t < max_len; ++t)
                bv.curve[t] = theory::sgd_lower_curve(eta, l, *req.delta, static_cast<std::int64_t>(t),
                                                      t0, spec.horizon_T);
            bv.metric = "pointwise_grad_norm_lower";
        } else if (name == "nsgd_upper_bound") {
            bv.scalar = theory::nsgd_upper_bound(req);
            bv.metric = "avg_grad_norm";
        } else if (name == "nsgd_noncvg_threshold") {
            const auto& f = spec.instance_spec.fields;
            bv.scalar = theory::nsgd_noncvg_threshold(field_req(f, "l"), field_req(f, "delta"),
                                                      field_req(f, "sigma"), field_req(f, "gamma_max"));
            bv.metric = "pointwise_grad_norm_lower";
        } else if (name == "amsgrad_det_upper_bound") {
            const auto tagged = theory::amsgrad_det_upper_bound(req);
            bv.scalar = tagged.value;
            bv.metric = tagged.metric == theory::BoundMetric::avg_grad_norm ? "avg_grad_norm"
                                                                            : "avg_grad_norm_sq";
        } else if (name == "amsgrad_det_lower") {
            bv.scalar = theory::amsgrad_det_lower(req);
            bv.metric = "min_grad_norm";
        } else if (name == "amsgrad_stoch_lower") {
            bv.scalar = theory::amsgrad_stoch_lower(req);
            bv.metric = "min_grad_norm";
        } else if (name == "nsgdm_rate_template") {
            bv.scalar = theory::nsgdm_rate_template(req);
            bv.metric = "shape_only";
        } else if (name == "adagrad_rate_template") {
            bv.scalar = theory::adagrad_rate_template(req);
            bv.metric = "shape_only";
        } else {
            bv.skipped = true;
            bv.skip_reason = "unknown bound";
        }
    } catch (const std::exception& e) {
        bv.skipped = true;
        bv.skip_reason = e.what();
        bv.scalar.reset();
        bv.curve.clear();
    }
    return bv;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int workers) {
    BuiltExperiment built = build_experiment(spec);

    ExperimentResult result;
    result.spec_echo = spec;
    result.instance_json = built.instance.to_json_string();
    result.per_seed.resize(spec.seeds.size());
    result.retain_per_seed = spec.seeds.size() <= kRetentionCap;

    const auto& inst = built.instance;
    const auto& cfg = built.optimizer;
    const auto& ns = built.noise;
    parallel_for(spec.seeds.size(), workers, [&](std::size_t i) {
        result.per_seed[i] = to_series(optim::run(inst, cfg, ns, spec.horizon_T, spec.seeds[i], 0));
    });
    std::sort(result.per_seed.begin(), result.per_seed.end(),
              [](const SeedSeries& a, const SeedSeries& b) { return a.seed < b.seed; });

    std::size_t max_len = 0;
    for (const auto& s : result.per_seed) max_len = std::max(max_len, s.length());

    std::vector<std::string> metric_list = spec.metrics;
    if (spec.emit_running_min) metric_list.push_back("grad_norm_runmin");
    for (const auto& m : metric_list)
        result.aggregates[m] = aggregate_metric(result.per_seed, m, max_len);

    for (const auto& m : spec.metrics) {
        const auto& rows = result.aggregates[m];
        std::vector<double> means;
        means.reserve(rows.size());
        for (const auto& r : rows) {
            if (r.n == 0) break;
            means.push_back(r.mean);
        }
        const auto ra = diagnostics::running_average(means);
        std::vector<std::pair<double, double>> series;
        for (std::size_t t = 1; t < ra.size(); ++t)
            series.emplace_back(static_cast<double>(t), ra[t]);
        try {
            result.rate_fits[m] = diagnostics::fit_power_law(series, 0.5);
        } catch (const std::exception& e) {
            result.rate_fit_skips[m] = e.what();
        }
    }

    for (const auto& name : spec.bounds_to_overlay)
        result.bound_values[name] = evaluate_bound(name, spec, built, std::max<std::size_t>(max_len, 1));
    return result;
}

std::pair<double, double> seed_time_average(const ExperimentResult& result,
                                            const std::string& metric) {
    std::vector<double> vals;
    vals.reserve(result.per_seed.size());
    for (const auto& s : result.per_seed) {
        double acc = 0.0;
        for (std::size_t t = 0; t < s.length(); ++t) acc += metric_at(s, metric, t);
        vals.push_back(acc / static_cast<double>(s.length()));
    }
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double se = 0.0;
    if (vals.size() > 1) {
        double ss = 0.0;
        for (double v : vals) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / static_cast<double>(vals.size() - 1)) /
             std::sqrt(static_cast<double>(vals.size()));
    }
    return {mean, se};
}

Verdict dominance_check(const ExperimentResult& r, const std::string& bound_name) {
    auto it = r.bound_values.find(bound_name);
    if (it == r.bound_values.end() || it->second.skipped || !it->second.scalar)
        return {"skip", "bound unavailable: " +
                            (it != r.bound_values.end() ? it->second.skip_reason : "not requested")};
    const auto& bv = it->second;
    std::string metric;
    if (bv.metric == "avg_grad_norm_sq")
        metric = "grad_norm_sq";
    else if (bv.metric == "avg_grad_norm")
        metric = "grad_norm";
    else
        return {"skip", "bound metric '" + bv.metric + "' is not a dominance target"};
    const auto [mean, se] = seed_time_average(r, metric);
    char msg[160];
    std::snprintf(msg, sizeof msg, "empirical %.6g vs bound %.6g + 3*stderr %.3g", mean,
                  *bv.scalar, se);
    if (mean <= *bv.scalar + 3.0 * se) return {"pass", msg};
    return {"fail", msg};
}

ReproResult run_reproduction(const Reproduction& repro, int workers) {
    const auto start = std::chrono::steady_clock::now();
    ReproResult out;
    out.name = repro.name;
    out.results.reserve(repro.specs.size());
    for (const auto& spec : repro.specs) out.results.push_back(run_experiment(spec, workers));
    out.verdicts = detail::run_checks_for(repro.name, out.results);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

ReproResult run_config(const ExperimentSpec& spec, int workers) {
    const auto start = std::chrono::steady_clock::now();
    ReproResult out;
    out.name = spec.experiment_id;
    out.results.push_back(run_experiment(spec, workers));
    for (const auto& name : spec.bounds_to_overlay) {
        const Verdict v = dominance_check(out.results[0], name);
        if (v.status != "skip" || out.results[0].bound_values.at(name).skipped)
            out.verdicts["dominance_" + name] = v;
    }
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void emit_csv(const ExperimentResult& result, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << "experiment_id,seed,t,f_value,grad_norm,stoch_grad_norm,effective_stepsize,x1\n";
    if (result.retain_per_seed) {
        for (const auto& s : result.per_seed) {
            for (std::size_t t = 0; t < s.length(); ++t) {
                f << result.spec_echo.experiment_id << ',' << s.seed << ',' << t << ','
                  << format_double(s.f_value[t]) << ',' << format_double(s.grad_norm[t]) << ','
                  << format_double(s.stoch_grad_norm[t]) << ','
                  << format_double(s.effective_stepsize[t]) << ',' << format_double(s.x1[t]) << '\n';
            }
        }
    }
    if (!f) throw IoError("write failed for '" + path + "'");

    std::string agg_path = path;
    const auto dot = agg_path.find_last_of('.');
    if (dot != std::string::npos) agg_path.resize(dot);
    agg_path += ".aggregate.csv";
    std::ofstream g(agg_path, std::ios::binary);
    if (!g) throw IoError("cannot open '" + agg_path + "' for writing");
    g << "t,metric,mean,stderr";
    std::vector<std::string> bound_cols;
    for (const auto& [name, bv] : result.bound_values) {
        if (bv.skipped) continue;
        bound_cols.push_back(name);
        g << ",bound_" << name;
    }
    g << '\n';
    std::size_t max_len = 0;
    for (const auto& [m, rows] : result.aggregates) max_len = std::max(max_len, rows.size());
    for (std::size_t t = 0; t < max_len; ++t) {
        for (const auto& [m, rows] : result.aggregates) {
            if (t >= rows.size() || rows[t].n == 0) continue;
            g << t << ',' << m << ',' << format_double(rows[t].mean) << ','
              << format_double(rows[t].stderr_);
            for (const auto& name : bound_cols) {
                const auto& bv = result.bound_values.at(name);
                const double v = bv.scalar ? *bv.scalar
                                           : (t < bv.curve.size() ? bv.curve[t] : std::nan(""));
                g << ',' << format_double(v);
            }
            g << '\n';
        }
    }
    if (!g) throw IoError("write failed for '" + agg_path + "'");
}

namespace {

ordered_json rate_fit_json(const diagnostics::RateFit& fit) {
    ordered_json j;
    j["exponent"] = fit.exponent;
    j["log_intercept"] = fit.log_intercept;
    j["r_squared"] = fit.r_squared;
    j["fit_window"] = {fit.fit_window.first, fit.fit_window.second};
    return j;
}

ordered_json result_json(const ExperimentResult& r) {
    ordered_json j;
    j["spec"] = ordered_json::parse(serialize_config(r.spec_echo));
    j["instance"] = ordered_json::parse(r.instance_json);
    ordered_json fits = ordered_json::object();
    for (const auto& [m, fit] : r.rate_fits) fits[m] = rate_fit_json(fit);
    for (const auto& [m, why] : r.rate_fit_skips) fits[m] = ordered_json{{"skip", why}};
    j["rate_fits"] = fits;
    ordered_json bounds = ordered_json::object();
    for (const auto& [name, bv] : r.bound_values) {
        if (bv.skipped)
            bounds[name] = ordered_json{{"skip", bv.skip_reason}};
        else if (bv.scalar)
            bounds[name] = ordered_json{{"value", *bv.scalar}, {"metric", bv.metric}};
        else
            bounds[name] = ordered_json{{"metric", bv.metric}, {"curve_points", bv.curve.size()}};
    }
    j["bound_values"] = bounds;
    ordered_json verdicts = ordered_json::object();
    for (const auto& [name, v] : r.verdicts)
        verdicts[name] = ordered_json{{"status", v.status}, {"message", v.message}};
    j["verdicts"] = verdicts;
    ordered_json overflow = ordered_json::object();
    for (const auto& s : r.per_seed)
        if (s.overflow_at) overflow[std::to_string(s.seed)] = *s.overflow_at;
    if (!overflow.empty()) j["overflow_at"] = overflow;
    return j;
}

}  // namespace

void emit_summary_json(const ReproResult& result, const std::string& path) {
    ordered_json j;
    j["name"] = result.name;
    ordered_json exps = ordered_json::array();
    for (const auto& r : result.results) exps.push_back(result_json(r));
    j["experiments"] = exps;
    ordered_json grid = ordered_json::object();
    for (const auto& r : result.results) {
        for (const auto& [name, bv] : r.bound_values) {
            if (bv.skipped || !bv.scalar) continue;
            grid[name][grid_key(r.spec_echo)] = *bv.scalar;
        }
    }
    j["bound_values"] = grid;
    ordered_json verdicts = ordered_json::object();
    for (const auto& [name, v] : result.verdicts)
        verdicts[name] = ordered_json{{"status", v.status}, {"message", v.message}};
    j["verdicts"] = verdicts;
    j["versions"] = ordered_json{{"optlab", "0.1.0"},
                                 {"rng", noise::RngStream::algorithm_id},
                                 {"summary_format", 1}};
    j["wall_time"] = result.wall_time;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << j.dump(2) << '\n';
    if (!f) throw IoError("write failed for '" + path + "'");
}

void emit_all(const ReproResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& r : result.results)
        emit_csv(r, (std::filesystem::path(out_dir) / (r.spec_echo.experiment_id + ".csv")).string());
    emit_summary_json(result, (std::filesystem::path(out_dir) / "summary.json").string());
}

int count_failures(const ReproResult& result) {
    int n = 0;
    for (const auto& [name, v] : result.verdicts)
        if (v.status == "fail") ++n;
    return n;
}

CertificationReport certify_instance(const ProblemInstance& instance, std::int64_t n_probes) {
    CertificationReport rep;
    rep.instance_id = instance.id;
    noise::RngStream rng(0x5EEDCAFE, 1);
    rep.smoothness_ratio = diagnostics::verify_smoothness(instance, n_probes, rng);
    if (instance.piecewise()) rep.c1 = diagnostics::check_c1_continuity(instance, 1e-9);
    rep.gap_residual = instance.value(instance.initial_point) - instance.optimum_value -
                       instance.initial_gap;
    if (instance.optimum_point) rep.optimum_grad_norm = norm(instance.gradient(*instance.optimum_point));

    // Central finite differences against the analytic gradient at probe
    // points; probes too close to a piece kink are resampled.
    const Box& box = *instance.evaluation_domain;
    std::vector<double> kinks;
    if (const auto* pw = instance.piecewise()) kinks = pw->boundaries();
    const int d = instance.dimension;
    int accepted = 0;
    double max_rel = 0.0;
    while (accepted < 100) {
        Vec x(d);
        for (int i = 0; i < d; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform01();
        bool near_kink = false;
        for (double b : kinks)
            if (std::abs(x[0] - b) < 1e-4) near_kink = true;
        if (near_kink) continue;
        const Vec g = instance.gradient(x);
        double err2 = 0.0;
        for (int i = 0; i < d; ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const double fd = (instance.value(xp) - instance.value(xm)) / (2.0 * h);
            err2 += (fd - g[i]) * (fd - g[i]);
        }
        const double denom =
            std::max(norm(g), 1e-3 * instance.smoothness_l * (1.0 + std::abs(x[0])));
        max_rel = std::max(max_rel, std::sqrt(err2) / denom);
        ++accepted;
    }
    rep.fd_max_rel_err = max_rel;

    const double gap_tol = 1e-9 * std::max(1.0, std::abs(instance.initial_gap));
    rep.pass = rep.smoothness_ratio <= 1.0 + 1e-6 && (!rep.c1 || rep.c1->pass) &&
               rep.gap_residual <= gap_tol && rep.optimum_grad_norm <= 1e-9 &&
               rep.fd_max_rel_err <= 1e-4;
    return rep;
}

}  // namespace optlab::harness
