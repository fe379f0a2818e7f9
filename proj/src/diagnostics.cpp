#include "optlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace optlab::diagnostics {

RateFit fit_power_law(const std::vector<std::pair<double, double>>& series,
                      double window_fraction) {
    if (window_fraction <= 0.0 || window_fraction > 1.0)
        throw PreconditionError("fit_power_law: window_fraction must lie in (0, 1]");
    const std::size_t n = series.size();
    const std::size_t k = std::max<std::size_t>(
        3, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n))));
    if (n < 3 || k > n) throw DegenerateError("fit_power_law: need at least 3 points in window");
    const std::size_t start = n - k;

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double first_t = series[start].first;
    bool all_t_equal = true;
    for (std::size_t i = start; i < n; ++i) {
        const auto [t, v] = series[i];
        if (t <= 0.0) throw DegenerateError("fit_power_law: t values must be positive");
        if (v <= 0.0) throw DegenerateError("fit_power_law: values must be positive");
        if (t != first_t) all_t_equal = false;
        const double x = std::log(t), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    if (all_t_equal) throw DegenerateError("fit_power_law: all t equal in window");
    const double kn = static_cast<double>(k);
    const double sxx_c = sxx - sx * sx / kn;
    const double sxy_c = sxy - sx * sy / kn;
    const double syy_c = syy - sy * sy / kn;

    RateFit fit;
    fit.exponent = sxy_c / sxx_c;
    fit.log_intercept = (sy - fit.exponent * sx) / kn;
    fit.r_squared = (syy_c <= 0.0) ? 1.0 : (sxy_c * sxy_c) / (sxx_c * syy_c);
    fit.fit_window = {series[start].first, series[n - 1].first};
    return fit;
}

std::vector<double> running_average(const std::vector<double>& values) {
    std::vector<double> out(values.size());
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double y = values[i] - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out[i] = acc / static_cast<double>(i + 1);
    }
    return out;
}

namespace {

double metric_of(const TrajectoryRecord& r, Metric m) {
    switch (m) {
        case Metric::grad_norm: return r.grad_norm;
        case Metric::grad_norm_sq: return r.grad_norm * r.grad_norm;
        case Metric::f_value: return r.f_value;
    }
    return 0.0;
}

}  // namespace

MonteCarloStat estimate_expectation(const std::vector<Trajectory>& trajectories, Metric metric,
                                    std::optional<std::int64_t> t) {
    if (trajectories.size() < 2)
        throw PreconditionError("estimate_expectation: need at least 2 trajectories");
    std::vector<const Trajectory*> sorted;
    sorted.reserve(trajectories.size());
    for (const auto& tr : trajectories) sorted.push_back(&tr);
    std::sort(sorted.begin(), sorted.end(),
              [](const Trajectory* a, const Trajectory* b) { return a->seed < b->seed; });

    std::vector<double> vals;
    vals.reserve(sorted.size());
    for (const auto* tr : sorted) {
        if (t) {
            const auto idx = static_cast<std::size_t>(*t);
            if (*t < 0 || idx >= tr->records.size())
                throw IndexError("estimate_expectation: t out of range");
            vals.push_back(metric_of(tr->records[idx], metric));
        } else {
            double acc = 0.0;
            for (const auto& r : tr->records) acc += metric_of(r, metric);
            vals.push_back(acc / static_cast<double>(tr->records.size()));
        }
    }
    MonteCarloStat st;
    st.n = static_cast<std::int64_t>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    st.mean = mean;
    st.stderr_ = std::sqrt(ss / static_cast<double>(vals.size() - 1)) /
                 std::sqrt(static_cast<double>(vals.size()));
    return st;
}

double verify_smoothness(const ProblemInstance& instance, std::int64_t n_probes,
                         noise::RngStream& rng) {
    if (!instance.evaluation_domain)
        throw PreconditionError("verify_smoothness: instance has no evaluation domain");
    if (n_probes < 1000) throw PreconditionError("verify_smoothness: need n_probes >= 1000");
    const Box& box = *instance.evaluation_domain;
    const int d = instance.dimension;

    auto ratio_of = [&](const Vec& a, const Vec& b) -> double {
        double dist2 = 0.0;
        for (int i = 0; i < d; ++i) dist2 += (a[i] - b[i]) * (a[i] - b[i]);
        if (dist2 == 0.0) return 0.0;
        const Vec ga = instance.gradient(a);
        const Vec gb = instance.gradient(b);
        double diff2 = 0.0;
        for (int i = 0; i < d; ++i) diff2 += (ga[i] - gb[i]) * (ga[i] - gb[i]);
        return std::sqrt(diff2 / dist2);
    };

    double max_ratio = 0.0;
    Vec a(d), b(d);
    for (std::int64_t p = 0; p < n_probes; ++p) {
        for (int i = 0; i < d; ++i) {
            a[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform01();
            b[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * rng.uniform01();
        }
        max_ratio = std::max(max_ratio, ratio_of(a, b));
    }
    // Random sampling alone misses measure-zero kinks; straddle every
    // recorded boundary explicitly.
    if (const auto* pw = instance.piecewise()) {
        for (double bd : pw->boundaries()) {
            for (int k = 1; k <= 6; ++k) {
                const double off = std::pow(10.0, -k);
                max_ratio = std::max(max_ratio, ratio_of(Vec{bd - off}, Vec{bd + off}));
            }
        }
    }
    return max_ratio / instance.smoothness_l;
}

C1Report check_c1_continuity(const ProblemInstance& instance, double tol) {
    const auto* pw = instance.piecewise();
    if (!pw) throw PreconditionError("check_c1_continuity: instance has no piecewise body");
    C1Report rep;
    for (std::size_t i = 0; i + 1 < pw->pieces.size(); ++i) {
        const auto& left = pw->pieces[i];
        const auto& right = pw->pieces[i + 1];
        const double x = left.hi;
        BoundaryJump j;
        j.x = x;
        j.value_jump = std::abs(left.value(x) - right.value(x));
        j.slope_jump = std::abs(left.slope(x) - right.slope(x));
        const double scale = std::max({1.0, std::abs(left.value(x)), std::abs(left.slope(x))});
        if (j.value_jump > tol * scale || j.slope_jump > tol * scale) rep.pass = false;
        rep.jumps.push_back(j);
    }
    return rep;
}

std::optional<std::int64_t> detect_blowup(const Trajectory& trajectory, double factor) {
    if (factor <= 1.0) throw PreconditionError("detect_blowup: factor must exceed 1");
    if (trajectory.records.empty()) return std::nullopt;
    const double base = trajectory.records.front().grad_norm;
    for (const auto& r : trajectory.records)
        if (r.grad_norm >= factor * base) return r.t;
    return std::nullopt;
}

}  // namespace optlab::diagnostics
