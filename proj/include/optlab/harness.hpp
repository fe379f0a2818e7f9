#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optlab/diagnostics.hpp"
#include "optlab/instances.hpp"
#include "optlab/optimizers.hpp"
#include "optlab/theory.hpp"

namespace optlab::harness {

// Declarative instance description (kind + parameters), JSON-facing.
struct InstanceSpec {
    std::string kind;  // quadratic | sgd_hard | nsgd_noncvg | amsgrad_slow |
                       // amsgrad_oscillator | momentum_lb
    std::map<std::string, double> fields;
    std::optional<std::int64_t> horizon_T;  // builder horizon, defaults to the run's
};

struct OptimizerSpec {
    std::string kind;  // sgd | nsgd | nsgdm | amsgrad | adagrad | momentum_sgd
    std::map<std::string, double> fields;
};

struct NoiseSpecConfig {
    std::string kind = "zero";
    double sigma = 0.0;
    std::optional<double> zeta;
};

struct ExperimentSpec {
    std::string experiment_id;
    InstanceSpec instance_spec;
    OptimizerSpec optimizer_spec;
    NoiseSpecConfig noise_spec;
    std::int64_t horizon_T = 1;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> bounds_to_overlay;
    std::vector<std::string> metrics{"grad_norm", "grad_norm_sq", "f_value", "effective_stepsize"};
    bool emit_running_min = false;  // extra aggregate rows metric=grad_norm_runmin
};

ExperimentSpec parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentSpec& spec);

// Instance + resolved oracle + optimizer config, ready to run.
struct BuiltExperiment {
    ProblemInstance instance;
    noise::NoiseSpec noise;
    optim::OptimizerConfig optimizer;
    std::optional<instances::HardInstanceReport> hard_report;
};

BuiltExperiment build_experiment(const ExperimentSpec& spec);

struct Verdict {
    std::string status = "skip";  // pass | fail | skip
    std::string message;
};

// Per-seed observable columns; indexes align with record t.
struct SeedSeries {
    std::uint64_t seed = 0;
    std::vector<double> f_value, grad_norm, stoch_grad_norm, effective_stepsize, x1;
    std::optional<std::int64_t> overflow_at;
    std::size_t length() const { return grad_norm.size(); }
};

struct AggregateRow {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t n = 0;
};

struct BoundValue {
    bool skipped = false;
    std::string skip_reason;
    std::optional<double> scalar;
    std::vector<double> curve;  // per-t when non-empty (NaN where undefined)
    std::string metric;         // what the bound constrains, when tagged
};

struct ExperimentResult {
    ExperimentSpec spec_echo;
    std::string instance_json;
    std::vector<SeedSeries> per_seed;  // always populated in memory
    bool retain_per_seed = true;       // emitted only when seeds <= retention cap
    // metric name -> per-t aggregate rows
    std::map<std::string, std::vector<AggregateRow>> aggregates;
    std::map<std::string, diagnostics::RateFit> rate_fits;
    std::map<std::string, std::string> rate_fit_skips;
    std::map<std::string, BoundValue> bound_values;
    std::map<std::string, Verdict> verdicts;
};

// Runs all seeds (parallel across seeds when workers > 1), aggregates in
// seed-sorted order, evaluates overlays. Identical spec -> identical result.
ExperimentResult run_experiment(const ExperimentSpec& spec, int workers = 1);

// Named reproduction: one or more fully pinned experiment specs plus the
// checks that render its verdicts.
struct Reproduction {
    std::string name;
    std::string description;
    std::vector<ExperimentSpec> specs;
};

struct ReproResult {
    std::string name;
    std::vector<ExperimentResult> results;
    std::map<std::string, Verdict> verdicts;  // merged, check-name keyed
    double wall_time = 0.0;
};

const std::vector<Reproduction>& list_reproductions();
const Reproduction& reproduction_by_name(const std::string& name);

ReproResult run_reproduction(const Reproduction& repro, int workers = 1);
// Convenience: single config treated as an anonymous reproduction with
// dominance checks derived from its overlays.
ReproResult run_config(const ExperimentSpec& spec, int workers = 1);

// Writes the per-(seed, t) CSV at `path` and the per-t aggregate table at
// `<path minus extension>.aggregate.csv`.
void emit_csv(const ExperimentResult& result, const std::string& path);
void emit_summary_json(const ReproResult& result, const std::string& path);

// Writes <id>.csv (+ aggregate) per experiment and summary.json into out_dir.
void emit_all(const ReproResult& result, const std::string& out_dir);

int count_failures(const ReproResult& result);

// Across-seed mean of the per-seed time averages of `metric`, with stderr.
std::pair<double, double> seed_time_average(const ExperimentResult& result,
                                            const std::string& metric);

// Pass iff the time-averaged metric the bound constrains stays within
// bound + 3 * stderr; skip when the bound is unavailable or untagged.
Verdict dominance_check(const ExperimentResult& result, const std::string& bound_name);

struct CertificationReport {
    std::string instance_id;
    double smoothness_ratio = 0.0;
    std::optional<diagnostics::C1Report> c1;
    double gap_residual = 0.0;       // f(x0) - f* - Delta (<= 0 up to tolerance)
    double optimum_grad_norm = 0.0;  // when the optimum point is known
    double fd_max_rel_err = 0.0;
    bool pass = false;
};

CertificationReport certify_instance(const ProblemInstance& instance, std::int64_t n_probes = 20000);

}  // namespace optlab::harness
