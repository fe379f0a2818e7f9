#include "optlab/instances.hpp"

#include <cmath>
#include <string>

namespace optlab::instances {

namespace {

// Minimal double-double arithmetic (Dekker/Knuth style, fma-based), used to
// cross-check the blow-up phase of the hard instance where the product of
// step factors spans hundreds of orders of magnitude.
struct DD {
    double hi = 0.0, lo = 0.0;
};

DD dd_from(double x) { return {x, 0.0}; }

DD two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

DD two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

DD dd_add(DD a, DD b) {
    DD s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    DD r = two_sum(s.hi, s.lo);
    return r;
}

DD dd_sub(DD a, DD b) { return dd_add(a, {-b.hi, -b.lo}); }

DD dd_mul(DD a, DD b) {
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return two_sum(p.hi, p.lo);
}

DD dd_div(DD a, DD b) {
    const double q1 = a.hi / b.hi;
    DD r = dd_sub(a, dd_mul(dd_from(q1), b));
    const double q2 = r.hi / b.hi;
    DD q = two_sum(q1, q2);
    return q;
}

DD dd_sqrt(DD a) {
    const double q1 = std::sqrt(a.hi);
    if (q1 == 0.0) return dd_from(0.0);
    DD r = dd_sub(a, dd_mul(dd_from(q1), dd_from(q1)));
    const double q2 = r.hi / (2.0 * q1);
    return two_sum(q1, q2);
}

Box symmetric_box(double halfwidth, int dimension) {
    return Box{Vec(dimension, -halfwidth), Vec(dimension, halfwidth)};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

ProblemInstance make_quadratic(double l, double delta, int dimension, double domain_halfwidth) {
    if (l <= 0.0 || delta <= 0.0) throw PreconditionError("make_quadratic: l and delta must be positive");
    if (dimension < 1) throw PreconditionError("make_quadratic: dimension must be positive");
    ProblemInstance inst;
    inst.id = "quadratic(l=" + fmt(l) + ",delta=" + fmt(delta) + ",d=" + std::to_string(dimension) + ")";
    inst.dimension = dimension;
    inst.smoothness_l = l;
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.initial_point = Vec(dimension, 0.0);
    inst.initial_point[0] = std::sqrt(2.0 * delta / l);
    inst.optimum_point = Vec(dimension, 0.0);
    const double hw = domain_halfwidth > 0.0 ? domain_halfwidth : 2.0 * inst.initial_point[0] + 1.0;
    inst.evaluation_domain = symmetric_box(hw, dimension);
    inst.gradient_bound = l * hw * std::sqrt(static_cast<double>(dimension));
    inst.body = QuadraticBody{l / 2.0, false};
    inst.params = {{"l", l}, {"delta", delta}};
    return inst;
}

std::pair<ProblemInstance, HardInstanceReport> build_sgd_hard_instance(double l, double delta,
                                                                       double eta,
                                                                       std::int64_t horizon_T) {
    if (l <= 0.0 || delta <= 0.0 || eta <= 0.0)
        throw PreconditionError("build_sgd_hard_instance: l, delta, eta must be positive");
    if (horizon_T < 1) throw PreconditionError("build_sgd_hard_instance: horizon_T must be >= 1");
    const double el = eta * l;
    if (el < 5.0)
        throw PreconditionError("build_sgd_hard_instance: requires eta*l >= 5, got " + fmt(el));

    const auto t0 = static_cast<std::int64_t>(std::floor(el * el / 16.0 - 1.0));
    if (static_cast<double>(t0) * std::log(8.0 * M_E) >= 290.0 * std::log(10.0))
        throw OverflowError("build_sgd_hard_instance: (8e)^t0 would exceed 1e290");

    // Phase 1: decaying-stepsize GD on l x^2 / 2. The double trajectory is
    // what the runner will replay bitwise; the compensated one certifies its
    // accuracy (the factors stay away from zero whenever it matters, but the
    // product spans a huge range).
    const double x0_pos = std::sqrt(2.0 * delta / l);
    const double a1 = l / 2.0;
    double x = x0_pos;
    DD xdd = dd_from(x0_pos);
    const DD el_dd = two_prod(eta, l);
    for (std::int64_t k = 0; k < t0; ++k) {
        const double eta_k = power_stepsize(eta, 0.5, k);
        const double g = 2.0 * a1 * x;  // same expression the piece evaluator uses
        x -= eta_k * g;
        DD factor = dd_sub(dd_from(1.0), dd_div(el_dd, dd_sqrt(dd_from(static_cast<double>(k + 1)))));
        xdd = dd_mul(xdd, factor);
    }
    const double rel_check = std::abs(x - xdd.hi) / std::max(std::abs(xdd.hi), 1e-300);
    if (rel_check > 1e-10)
        throw DegenerateError("build_sgd_hard_instance: phase-1 product lost precision (factor near zero)");

    // The proof picks x_t0 > 0 without loss of generality; realize that by
    // flipping the initial point (f is even, the dynamics are odd).
    const bool flip = x < 0.0;
    const double x_start = flip ? -x0_pos : x0_pos;
    const double x_t0 = flip ? -x : x;
    // Same expression shape as the replayed GD step, so the landing point is
    // bitwise identical to what the runner will produce.
    const double g_t0 = 2.0 * a1 * x_t0;
    const double x_t0p1_pred = x_t0 - power_stepsize(eta, 0.5, t0) * g_t0;

    const double delta_tilde = l * x_t0 * x_t0 / 2.0;
    double cap_sum = 0.0;
    for (std::int64_t t = t0 + 1; t < horizon_T; ++t) cap_sum += power_stepsize(eta, 0.5, t);
    const double S = std::max(1.0 / l, cap_sum);

    // Segment geometry, defined on x <= 0 and mirrored. Names follow the
    // trajectory: the quadratic bowl, its mirror cap, the connecting arc and
    // the flat valley.
    const double b_in = x_t0;           // bowl/cap boundary (positive side)
    const double b_cap = 2.0 * x_t0;    // cap/arc boundary
    const double b_land = x_t0p1_pred;  // arc/valley boundary (negative)
    const double cap_height = l * x_t0 * x_t0;

    const double arc_halfspan = -b_land - b_cap;  // -2 x_t0 - x_{t0+1} > 0
    const double arc_a = -std::sqrt(delta_tilde) / (4.0 * arc_halfspan * std::sqrt(S));
    // arc(x) = arc_a (x + 2 x_t0)^2 + cap_height on [x_{t0+1}, -2 x_t0]
    const double w_land = arc_a * (b_land + b_cap) * (b_land + b_cap) + cap_height;

    const double valley_a = 1.0 / (4.0 * S);
    const double valley_vertex = b_land - std::sqrt(delta_tilde * S);
    const double valley_min = w_land - delta_tilde / 4.0;

    PiecewiseQuadratic pw;
    pw.symmetric = true;
    auto expand = [](double a, double xc, double c0, double lo, double hi) {
        // a (x - xc)^2 + c0
        return QuadPiece{lo, hi, a, -2.0 * a * xc, a * xc * xc + c0};
    };
    pw.pieces.push_back(expand(valley_a, valley_vertex, valley_min, -HUGE_VAL, b_land));
    pw.pieces.push_back(expand(arc_a, -b_cap, cap_height, b_land, -b_cap));
    pw.pieces.push_back(expand(-l / 2.0, -b_cap, cap_height, -b_cap, -b_in));
    pw.pieces.push_back(QuadPiece{-b_in, b_in, a1, 0.0, 0.0});
    pw.pieces.push_back(expand(-l / 2.0, b_cap, cap_height, b_in, b_cap));
    pw.pieces.push_back(expand(arc_a, b_cap, cap_height, b_cap, -b_land));
    pw.pieces.push_back(expand(valley_a, -valley_vertex, valley_min, -b_land, HUGE_VAL));

    ProblemInstance inst;
    inst.id = "sgd_hard(l=" + fmt(l) + ",delta=" + fmt(delta) + ",eta=" + fmt(eta) +
              ",T=" + std::to_string(horizon_T) + ")";
    inst.dimension = 1;
    inst.smoothness_l = l;
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.optimum_point = Vec{0.0};
    inst.initial_point = Vec{x_start};
    inst.evaluation_domain = symmetric_box(-valley_vertex + std::sqrt(delta_tilde * S), 1);
    inst.body = PiecewiseBody{pw};
    inst.params = {{"l", l},           {"delta", delta},       {"eta", eta},
                   {"t0", static_cast<double>(t0)}, {"x_t0", x_t0},
                   {"x_t0_plus1", b_land},          {"delta_tilde", delta_tilde},
                   {"cap_sum", cap_sum},            {"valley_scale", S}};

    // Replay phase 1 through the assembled instance; the builder's standalone
    // loop above must agree bitwise or the geometry is inconsistent.
    HardInstanceReport rep;
    rep.t0 = t0;
    rep.x_t0 = x_t0;
    rep.x_t0_plus1 = b_land;
    rep.delta_tilde = delta_tilde;
    rep.segment_boundaries = pw.boundaries();
    rep.x_t0_dd = flip ? -xdd.hi : xdd.hi;
    rep.cap_sum = cap_sum;
    rep.valley_scale = S;
    double xr = x_start;
    rep.phase1_iterates.push_back(xr);
    for (std::int64_t k = 0; k <= t0; ++k) {
        const double g = pw.slope(xr);
        xr -= power_stepsize(eta, 0.5, k) * g;
        rep.phase1_iterates.push_back(xr);
    }
    if (rep.phase1_iterates[static_cast<std::size_t>(t0)] != x_t0 ||
        rep.phase1_iterates.back() != b_land)
        throw DegenerateError("build_sgd_hard_instance: phase-1 replay diverged from construction");

    // Guaranteed lower bound on the amplified gap, valid once eta*l >= 5.
    const double dt_lb = 4.0 / (3.0 * el) * std::exp((el * el / 16.0 - 2.0) * std::log(8.0 * M_E)) * delta;
    if (delta_tilde < dt_lb * (1.0 - 1e-9))
        throw DegenerateError("build_sgd_hard_instance: delta_tilde below its guaranteed bound");

    return {std::move(inst), std::move(rep)};
}

ProblemInstance make_momentum_lb_quadratic(double l, double delta,
                                           const std::function<double(std::int64_t)>& stepsize_caps,
                                           std::int64_t horizon_T) {
    if (l <= 0.0 || delta <= 0.0)
        throw PreconditionError("make_momentum_lb_quadratic: l and delta must be positive");
    if (horizon_T < 1) throw PreconditionError("make_momentum_lb_quadratic: horizon_T must be >= 1");
    double cap_sum = 0.0;
    for (std::int64_t t = 0; t < horizon_T; ++t) {
        const double c = stepsize_caps(t);
        if (!(c > 0.0) || !std::isfinite(c))
            throw PreconditionError("make_momentum_lb_quadratic: caps must be positive and finite");
        cap_sum += c;
    }
    const double S = std::max(1.0 / l, cap_sum);
    ProblemInstance inst;
    inst.id = "momentum_lb(l=" + fmt(l) + ",delta=" + fmt(delta) + ",S=" + fmt(S) + ")";
    inst.dimension = 1;
    inst.smoothness_l = l;  // actual curvature 1/(2S) <= l/2; certified as class member
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.optimum_point = Vec{0.0};
    inst.initial_point = Vec{std::sqrt(delta * S)};
    inst.evaluation_domain = symmetric_box(2.0 * inst.initial_point[0] + 1.0, 1);
    inst.body = QuadraticBody{1.0 / (4.0 * S), false};
    inst.params = {{"l", l}, {"delta", delta}, {"cap_sum", cap_sum}, {"valley_scale", S}};
    return inst;
}

ProblemInstance make_amsgrad_oscillator(double v0, double gamma, double l, double delta) {
    if (v0 <= 0.0 || gamma <= 0.0 || l <= 0.0 || delta <= 0.0)
        throw PreconditionError("make_amsgrad_oscillator: parameters must be positive");
    if (v0 > l * gamma / 2.0)
        throw PreconditionError("make_amsgrad_oscillator: requires v0 <= l*gamma/2");
    if (gamma > 4.0 * delta / v0)
        throw PreconditionError("make_amsgrad_oscillator: requires gamma <= 4*delta/v0");
    ProblemInstance inst;
    inst.id = "amsgrad_oscillator(v0=" + fmt(v0) + ",gamma=" + fmt(gamma) + ")";
    inst.dimension = 1;
    inst.smoothness_l = l;  // actual curvature 2 v0/gamma <= l
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.optimum_point = Vec{0.0};
    inst.initial_point = Vec{gamma / 2.0};
    inst.evaluation_domain = symmetric_box(gamma + 1.0, 1);
    inst.body = QuadraticBody{v0 / gamma, false};
    inst.params = {{"v0", v0}, {"gamma", gamma}, {"l", l}, {"delta", delta}};
    return inst;
}

std::pair<ProblemInstance, noise::NoiseSpec> make_nsgd_noncvg_instance(double l, double sigma,
                                                                       double epsilon, double delta,
                                                                       double gamma_max) {
    if (l <= 0.0 || sigma <= 0.0 || epsilon <= 0.0 || delta <= 0.0 || gamma_max <= 0.0)
        throw PreconditionError("make_nsgd_noncvg_instance: parameters must be positive");
    const double hyp = std::min({sigma * sigma, 2.0 * l * delta, 2.0 * delta * (sigma - epsilon) / gamma_max});
    if (!(epsilon * epsilon < hyp))
        throw PreconditionError("make_nsgd_noncvg_instance: requires eps^2 < min{sigma^2, 2*l*delta, 2*delta*(sigma-eps)/gamma_max}");

    const double L_lo = epsilon * epsilon / (2.0 * delta);
    const double L_hi = std::min(l, (sigma - epsilon) / gamma_max * (1.0 - 1e-9));
    const double L = 0.5 * (L_lo + L_hi);
    const double x0 = 0.5 * (epsilon / L + std::sqrt(2.0 * delta / L));
    const double w = 0.5 * (epsilon / L + gamma_max + sigma / L);
    const double dn = 0.5 * (1.0 + sigma / (L * w));

    ProblemInstance inst;
    inst.id = "nsgd_noncvg(L=" + fmt(L) + ",eps=" + fmt(epsilon) + ")";
    inst.dimension = 1;
    inst.smoothness_l = l;  // actual curvature L <= l
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.optimum_point = Vec{0.0};
    inst.initial_point = Vec{x0};
    inst.evaluation_domain = symmetric_box(w + gamma_max + 1.0, 1);
    inst.body = QuadraticBody{L / 2.0, false};
    inst.params = {{"l", l},       {"sigma", sigma},   {"epsilon", epsilon},
                   {"delta", delta}, {"gamma_max", gamma_max}, {"curvature_L", L},
                   {"region_halfwidth", w}, {"delta_noise", dn}};
    return {std::move(inst), noise::NoiseSpec::multiplicative_sign(sigma, dn, w)};
}

std::pair<ProblemInstance, noise::NoiseSpec> make_amsgrad_slow_instance(
    double l, double delta, double sigma, double zeta, double gamma, double beta2,
    std::int64_t horizon_T) {
    if (zeta <= 0.5 || zeta >= 1.0)
        throw PreconditionError("make_amsgrad_slow_instance: zeta must lie in (1/2, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0)
        throw PreconditionError("make_amsgrad_slow_instance: beta2 must lie in [0, 1)");
    if (sigma <= 0.0 || gamma <= 0.0)
        throw PreconditionError("make_amsgrad_slow_instance: sigma and gamma must be positive");

    const double s = sigma / std::sqrt(noise::gamma_function(1.0 - zeta / 2.0));
    const double C = s * std::pow(M_E * (1.0 / zeta - 1.0), zeta / 2.0) / std::sqrt(2.0);
    const double cap_scale = gamma / (C * std::sqrt(1.0 - beta2));
    ProblemInstance base = make_momentum_lb_quadratic(
        l, delta, [&](std::int64_t t) { return power_stepsize(cap_scale, zeta, t); }, horizon_T);

    ProblemInstance inst;
    inst.id = "amsgrad_slow(zeta=" + fmt(zeta) + ",T=" + std::to_string(horizon_T) + ")";
    inst.dimension = 2;
    inst.smoothness_l = l;
    inst.initial_gap = delta;
    inst.optimum_value = 0.0;
    inst.optimum_point = Vec{0.0, 0.0};
    inst.initial_point = Vec{base.initial_point[0], 0.0};
    inst.evaluation_domain = symmetric_box(2.0 * base.initial_point[0] + 1.0, 2);
    inst.body = QuadraticBody{std::get<QuadraticBody>(base.body).coeff, true};
    inst.params = base.params;
    inst.params.emplace_back("sigma", sigma);
    inst.params.emplace_back("zeta", zeta);
    inst.params.emplace_back("gamma", gamma);
    inst.params.emplace_back("beta2", beta2);
    inst.params.emplace_back("scale_s", s);
    inst.params.emplace_back("frechet_C", C);
    return {std::move(inst), noise::NoiseSpec::frechet_symmetric(sigma, zeta)};
}

}  // namespace optlab::instances
