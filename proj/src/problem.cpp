#include "optlab/problem.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace optlab {

const QuadPiece& PiecewiseQuadratic::piece_at(double x) const {
    // Pieces own [lo, hi); the last piece also owns +inf.
    std::size_t lo = 0, hi = pieces.size() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (x < pieces[mid].hi)
            hi = mid;
        else
            lo = mid + 1;
    }
    return pieces[lo];
}

std::vector<double> PiecewiseQuadratic::boundaries() const {
    std::vector<double> b;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) b.push_back(pieces[i].hi);
    return b;
}

double ProblemInstance::value(const Vec& x) const {
    if (auto* q = std::get_if<QuadraticBody>(&body)) {
        if (q->first_coord_only) return q->coeff * x[0] * x[0];
        return q->coeff * squared_norm(x);
    }
    return std::get<PiecewiseBody>(body).pw.value(x[0]);
}

Vec ProblemInstance::gradient(const Vec& x) const {
    if (auto* q = std::get_if<QuadraticBody>(&body)) {
        Vec g(x.size(), 0.0);
        const double k = 2.0 * q->coeff;
        if (q->first_coord_only) {
            g[0] = k * x[0];
        } else {
            for (std::size_t i = 0; i < x.size(); ++i) g[i] = k * x[i];
        }
        return g;
    }
    Vec g(1);
    g[0] = std::get<PiecewiseBody>(body).pw.slope(x[0]);
    return g;
}

std::pair<double, Vec> ProblemInstance::evaluate(const Vec& x) const {
    if (static_cast<int>(x.size()) != dimension)
        throw DimensionError("evaluate: point has length " + std::to_string(x.size()) +
                             ", instance dimension is " + std::to_string(dimension));
    if (!all_finite(x)) throw OverflowError("evaluate: non-finite point");
    double v = value(x);
    Vec g = gradient(x);
    const double gn = norm(g);
    if (!std::isfinite(v) || std::abs(v) > kOverflowLimit || !std::isfinite(gn) ||
        gn > kOverflowLimit)
        throw OverflowError("evaluate: value or gradient exceeds 1e300");
    return {v, std::move(g)};
}

double ProblemInstance::param(const std::string& name) const {
    for (const auto& [k, v] : params)
        if (k == name) return v;
    throw IndexError("instance has no parameter '" + name + "'");
}

namespace {

using nlohmann::ordered_json;

ordered_json vec_to_json(const Vec& v) { return ordered_json(v); }

}  // namespace

std::string ProblemInstance::to_json_string() const {
    ordered_json j;
    j["id"] = id;
    j["dimension"] = dimension;
    j["smoothness_l"] = smoothness_l;
    j["initial_gap"] = initial_gap;
    j["optimum_value"] = optimum_value;
    j["initial_point"] = vec_to_json(initial_point);
    if (gradient_bound) j["gradient_bound"] = *gradient_bound;
    if (evaluation_domain) {
        j["evaluation_domain"] = {{"lo", vec_to_json(evaluation_domain->lo)},
                                  {"hi", vec_to_json(evaluation_domain->hi)}};
    }
    if (optimum_point) j["optimum_point"] = vec_to_json(*optimum_point);
    if (auto* q = std::get_if<QuadraticBody>(&body)) {
        j["body"] = {{"kind", "quadratic"},
                     {"coeff", q->coeff},
                     {"first_coord_only", q->first_coord_only}};
    } else {
        const auto& pw = std::get<PiecewiseBody>(body).pw;
        ordered_json pieces = ordered_json::array();
        for (const auto& p : pw.pieces) {
            ordered_json pj;
            pj["lo"] = std::isinf(p.lo) ? ordered_json(nullptr) : ordered_json(p.lo);
            pj["hi"] = std::isinf(p.hi) ? ordered_json(nullptr) : ordered_json(p.hi);
            pj["a"] = p.a;
            pj["b"] = p.b;
            pj["c"] = p.c;
            pieces.push_back(pj);
        }
        j["body"] = {{"kind", "piecewise_quadratic"},
                     {"symmetric", pw.symmetric},
                     {"pieces", pieces},
                     {"boundaries", ordered_json(pw.boundaries())}};
    }
    if (!params.empty()) {
        ordered_json pj;
        for (const auto& [k, v] : params) pj[k] = v;
        j["params"] = pj;
    }
    return j.dump(2);
}

ProblemInstance ProblemInstance::from_json_string(const std::string& text) {
    ordered_json j = ordered_json::parse(text);
    ProblemInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.dimension = j.at("dimension").get<int>();
    inst.smoothness_l = j.at("smoothness_l").get<double>();
    inst.initial_gap = j.at("initial_gap").get<double>();
    inst.optimum_value = j.at("optimum_value").get<double>();
    inst.initial_point = j.at("initial_point").get<Vec>();
    if (j.contains("gradient_bound")) inst.gradient_bound = j["gradient_bound"].get<double>();
    if (j.contains("evaluation_domain"))
        inst.evaluation_domain =
            Box{j["evaluation_domain"]["lo"].get<Vec>(), j["evaluation_domain"]["hi"].get<Vec>()};
    if (j.contains("optimum_point")) inst.optimum_point = j["optimum_point"].get<Vec>();
    const auto& bj = j.at("body");
    if (bj.at("kind") == "quadratic") {
        inst.body = QuadraticBody{bj.at("coeff").get<double>(),
                                  bj.at("first_coord_only").get<bool>()};
    } else {
        PiecewiseQuadratic pw;
        pw.symmetric = bj.at("symmetric").get<bool>();
        for (const auto& pj : bj.at("pieces")) {
            QuadPiece p;
            p.lo = pj.at("lo").is_null() ? -HUGE_VAL : pj.at("lo").get<double>();
            p.hi = pj.at("hi").is_null() ? HUGE_VAL : pj.at("hi").get<double>();
            p.a = pj.at("a").get<double>();
            p.b = pj.at("b").get<double>();
            p.c = pj.at("c").get<double>();
            pw.pieces.push_back(p);
        }
        inst.body = PiecewiseBody{std::move(pw)};
    }
    if (j.contains("params"))
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            inst.params.emplace_back(it.key(), it.value().get<double>());
    return inst;
}

}  // namespace optlab
