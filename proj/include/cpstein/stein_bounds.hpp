// stein_bounds.hpp
//
// Upper bounds on the Kolmogorov Stein factors M0 = sup|f_h| and
// M1 = sup|Delta f_h| for compound Poisson approximation, from the classical
// conditions and from the infimum delta_k of the two-variable criterion g_k.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"

namespace cpstein {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class BoundKind { General, Monotone, BarbourXia, Theorem2, Corollary3, LemmaC, Theorem4 };

struct MethodTag {
    BoundKind kind = BoundKind::General;
    int order = 0;   // k, for Theorem2
    double c = 0.0;  // for LemmaC

    std::string str() const {
        switch (kind) {
        case BoundKind::General: return "GENERAL";
        case BoundKind::Monotone: return "MONOTONE";
        case BoundKind::BarbourXia: return "BX99";
        case BoundKind::Theorem2: return "THM2(" + std::to_string(order) + ")";
        case BoundKind::Corollary3: return "COR3";
        case BoundKind::LemmaC: {
            std::ostringstream os;
            os.precision(17);
            os << "LEMMA_C(" << c << ")";
            return os.str();
        }
        case BoundKind::Theorem4: return "THM4";
        }
        return "UNKNOWN";
    }

    friend bool operator==(const MethodTag&, const MethodTag&) = default;
};

struct SteinFactorBound {
    double m0 = kInf;
    double m1 = kInf;
    MethodTag method;
    bool applicable = false;
    std::string note;
    std::optional<double> delta;  // the delta feeding the factor formulas, when one exists
};

inline double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

// M0 <= 2 sqrt(2/delta), M1 <= (1 + log+(pi delta)) / (2 delta), for delta > 0.
inline SteinFactorBound factors_from_delta(double delta, MethodTag tag, std::string note) {
    SteinFactorBound b;
    b.method = tag;
    b.delta = delta;
    b.note = std::move(note);
    if (delta > 0.0) {
        b.applicable = true;
        b.m0 = 2.0 * std::sqrt(2.0 / delta);
        b.m1 = (1.0 + log_plus(std::numbers::pi * delta)) / (2.0 * delta);
    }
    return b;
}

inline SteinFactorBound bound_general(const CompoundPoissonParams& params) {
    const double l1 = params.rate(1);
    const double lead = l1 > 1.0 ? 1.0 / l1 : 1.0;
    const double m = lead * std::exp(params.total_rate());
    return {m, m, {BoundKind::General}, true, "always applicable", std::nullopt};
}

inline SteinFactorBound bound_monotone(const CompoundPoissonParams& params) {
    SteinFactorBound b;
    b.method = {BoundKind::Monotone};
    if (!monotone_condition(params)) {
        b.note = "j*lambda_j >= (j+1)*lambda_{j+1} violated";
        return b;
    }
    const double l1 = params.rate(1);
    b.applicable = true;
    b.m0 = std::min(1.0, std::sqrt(2.0 / (std::numbers::e * l1)));
    b.m1 = std::min(0.5, 1.0 / (l1 + 1.0));
    b.note = "monotone rates";
    return b;
}

inline SteinFactorBound bound_bx99(const ThetaVector& th) {
    if (th.order() < 1) throw InvalidInput("theta order insufficient");
    SteinFactorBound b;
    b.method = {BoundKind::BarbourXia};
    const double gap = th[0] - 2.0 * th[1];
    b.delta = gap;
    if (!(gap > 0.0)) {
        b.note = "theta0 - 2 theta1 <= 0";
        return b;
    }
    b.applicable = true;
    b.m0 = std::sqrt(th[0]) / gap;
    b.m1 = 1.0 / gap;
    b.note = "theta0 - 2 theta1 > 0";
    return b;
}

// ---------------------------------------------------------------------------
// g_k and delta_k
// ---------------------------------------------------------------------------

struct GkEvaluation {
    double phi = 0.0;
    double p = 0.0;
    double value = 0.0;
};

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Re[(e^{i phi} - 1)^j] / (cos(phi) - 1) for j = 1..k, written into out[j-1].
// e^{i phi} - 1 and cos(phi) - 1 are formed from sin(phi/2) so no cancellation
// occurs near phi = 0; phi == 0 takes the limits 1, 2, 0, 0, ...
inline void phi_ratios(double phi, int k, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(k), 0.0);
    const double s = std::sin(0.5 * phi);
    const double cos_minus_one = -2.0 * s * s;
    if (cos_minus_one == 0.0) {
        out[0] = 1.0;
        if (k >= 2) out[1] = 2.0;
        return;
    }
    const std::complex<double> z(cos_minus_one, std::sin(phi));
    std::complex<double> power(1.0, 0.0);
    for (int j = 1; j <= k; ++j) {
        power *= z;
        out[static_cast<std::size_t>(j - 1)] = power.real() / cos_minus_one;
    }
}

// (1 - (1-p)^j) / p = sum_{i<j} (1-p)^i; equals j at p = 0.
inline void geometric_sums(double p, int k, std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(k), 0.0);
    const double r = 1.0 - p;
    double term = 1.0;
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) {
        acc += term;
        term *= r;
        out[static_cast<std::size_t>(j - 1)] = acc;
    }
}

// Coefficients theta_{j-1}/j! and the constant 2^k theta_k / k!.
struct GkCoefficients {
    std::vector<double> weight;
    double constant = 0.0;

    GkCoefficients(const ThetaVector& th, int k) : weight(static_cast<std::size_t>(k)) {
        for (int j = 1; j <= k; ++j) {
            weight[static_cast<std::size_t>(j - 1)] = th[static_cast<std::size_t>(j - 1)] / factorial(j);
        }
        constant = std::ldexp(1.0, k) / factorial(k) * th[static_cast<std::size_t>(k)];
    }

    double combine(const std::vector<double>& ratios, const std::vector<double>& geo) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < weight.size(); ++j) acc += ratios[j] * geo[j] * weight[j];
        return acc - constant;
    }
};

inline void check_gk_args(const ThetaVector& th, int k) {
    if (k < 1) throw InvalidInput("k must be at least 1");
    if (th.order() < static_cast<std::size_t>(k)) throw InvalidInput("theta order insufficient");
}

} // namespace detail

inline GkEvaluation g_k_eval(const ThetaVector& th, int k, double phi, double p) {
    detail::check_gk_args(th, k);
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("p must lie in [0,1]");
    if (!(std::abs(phi) <= std::numbers::pi)) throw InvalidInput("phi must lie in [-pi,pi]");
    const detail::GkCoefficients coeff(th, k);
    std::vector<double> ratios, geo;
    detail::phi_ratios(phi, k, ratios);
    detail::geometric_sums(p, k, geo);
    return {phi, p, coeff.combine(ratios, geo)};
}

struct GridOptions {
    int phi_points = 2049;  // on [0, pi]; g_k is even in phi
    int p_points = 513;
    double rel_tol = 1e-8;
};

struct DeltaResult {
    int k = 0;
    double delta = 0.0;
    double phi = 0.0;
    double p = 0.0;
    bool certified = false;
};

// Closed form at the corner (phi, p) = (pi, 0) for k = 3.
inline double cor3_corner_value(const ThetaVector& th) {
    return th[0] - 2.0 * th[1] + 2.0 * th[2] - (4.0 / 3.0) * th[3];
}

// g_3 is a convex quadratic in cos(phi) whose slope at cos(phi) = -1 is
// (2-p) theta1 - 5 Q(p) theta2 with Q(0) = 1 and (2-p)/Q(p) increasing, so the
// corner is the global minimiser exactly when 2 theta1 >= 5 theta2.
inline bool cor3_corner_is_minimum(const ThetaVector& th) {
    return 2.0 * th[1] >= 5.0 * th[2];
}

// Dense grid on [0,pi] x [0,1] followed by coordinate-wise Brent refinement.
inline DeltaResult delta_k_grid(const ThetaVector& th, int k, const GridOptions& opts = {}) {
    detail::check_gk_args(th, k);
    if (opts.phi_points < 2 || opts.p_points < 2) throw InvalidInput("grid needs at least 2 points per axis");
    const detail::GkCoefficients coeff(th, k);
    const double pi = std::numbers::pi;

    std::vector<std::vector<double>> geo_table(static_cast<std::size_t>(opts.p_points));
    for (int j = 0; j < opts.p_points; ++j) {
        detail::geometric_sums(static_cast<double>(j) / (opts.p_points - 1), k,
                               geo_table[static_cast<std::size_t>(j)]);
    }

    DeltaResult best{k, kInf, 0.0, 0.0, false};
    std::vector<double> ratios;
    for (int i = 0; i < opts.phi_points; ++i) {
        const double phi = pi * static_cast<double>(i) / (opts.phi_points - 1);
        detail::phi_ratios(phi, k, ratios);
        for (int j = 0; j < opts.p_points; ++j) {
            const double v = coeff.combine(ratios, geo_table[static_cast<std::size_t>(j)]);
            if (v < best.delta) {
                best.delta = v;
                best.phi = phi;
                best.p = static_cast<double>(j) / (opts.p_points - 1);
            }
        }
    }

    const auto eval = [&](double phi, double p) {
        std::vector<double> r, g;
        detail::phi_ratios(phi, k, r);
        detail::geometric_sums(p, k, g);
        return coeff.combine(r, g);
    };

    double half_phi = pi / (opts.phi_points - 1);
    double half_p = 1.0 / (opts.p_points - 1);
    constexpr int kBits = 52;
    for (int sweep = 0; sweep < 100; ++sweep) {
        const double before = best.delta;

        const double lo_phi = std::max(0.0, best.phi - half_phi);
        const double hi_phi = std::min(pi, best.phi + half_phi);
        const auto [phi_star, v_phi] = boost::math::tools::brent_find_minima(
            [&](double phi) { return eval(phi, best.p); }, lo_phi, hi_phi, kBits);
        if (v_phi < best.delta) {
            best.delta = v_phi;
            best.phi = phi_star;
        }

        const double lo_p = std::max(0.0, best.p - half_p);
        const double hi_p = std::min(1.0, best.p + half_p);
        const auto [p_star, v_p] = boost::math::tools::brent_find_minima(
            [&](double p) { return eval(best.phi, p); }, lo_p, hi_p, kBits);
        if (v_p < best.delta) {
            best.delta = v_p;
            best.p = p_star;
        }

        // Brent may miss the bracket endpoints, which are the typical minimisers.
        for (double phi : {lo_phi, hi_phi}) {
            for (double p : {lo_p, hi_p}) {
                const double v = eval(phi, p);
                if (v < best.delta) {
                    best.delta = v;
                    best.phi = phi;
                    best.p = p;
                }
            }
        }

        if (before - best.delta <= opts.rel_tol * std::max(1.0, std::abs(best.delta))) break;
    }
    return best;
}

// delta_k = inf g_k.  Closed forms: k = 1 (constant), k = 2 (linear in cos phi
// with nonnegative slope factor), k = 3 when the corner is the minimiser.
inline DeltaResult delta_k(const ThetaVector& th, int k, const GridOptions& opts = {}) {
    detail::check_gk_args(th, k);
    const double pi = std::numbers::pi;
    if (k == 1) return {1, th[0] - 2.0 * th[1], pi, 0.0, true};
    if (k == 2) {
        DeltaResult best{2, kInf, 0.0, 0.0, true};
        for (double phi : {0.0, pi}) {
            for (double p : {0.0, 1.0}) {
                const double v = th[0] + std::cos(phi) * (2.0 - p) * th[1] - 2.0 * th[2];
                if (v < best.delta) {
                    best.delta = v;
                    best.phi = phi;
                    best.p = p;
                }
            }
        }
        return best;
    }
    if (k == 3 && cor3_corner_is_minimum(th)) return {3, cor3_corner_value(th), pi, 0.0, true};
    return delta_k_grid(th, k, opts);
}

inline std::string format_delta_note(const char* prefix, double delta) {
    std::ostringstream os;
    os.precision(17);
    os << prefix << " delta=" << delta;
    return os.str();
}

inline SteinFactorBound bound_thm2(const ThetaVector& th, int k, const GridOptions& opts = {}) {
    const DeltaResult d = delta_k(th, k, opts);
    return factors_from_delta(d.delta, {BoundKind::Theorem2, k},
                              format_delta_note(d.certified ? "closed form" : "grid infimum", d.delta));
}

// Uses the corner value theta0 - 2 theta1 + 2 theta2 - (4/3) theta3 only where
// the corner really minimises g_3; elsewhere defers to the grid infimum.
inline SteinFactorBound bound_cor3(const ThetaVector& th, const GridOptions& opts = {}) {
    if (th.order() < 3) throw InvalidInput("theta order insufficient");
    if (!cor3_corner_is_minimum(th)) {
        SteinFactorBound b = bound_thm2(th, 3, opts);
        b.note = "corner not minimal (2 theta1 < 5 theta2); " + b.note;
        return b;
    }
    const double delta = cor3_corner_value(th);
    return factors_from_delta(delta, {BoundKind::Corollary3},
                              format_delta_note("corner (pi,0)", delta));
}

inline SteinFactorBound bound_lemma_c(const ThetaVector& th, double c) {
    if (!(c > 1.0)) throw InvalidInput("c must exceed 1");
    if (!(th[0] > 0.0)) throw InvalidInput("theta0 must be positive");
    const MethodTag tag{BoundKind::LemmaC, 0, c};
    const double excess = 2.0 * th[1] - th[0];
    // theta1/theta0 in (1/2, 1/2 + log c / (3 theta0)] rearranged as
    // 0 < 3(2 theta1 - theta0) <= 2 log c; the right edge allows a few ulps.
    const double lhs = 3.0 * excess;
    const double rhs = 2.0 * std::log(c);
    if (!(excess > 0.0) || lhs > rhs * (1.0 + 1e-12)) {
        SteinFactorBound b;
        b.method = tag;
        b.note = "theta1/theta0 outside (1/2, 1/2 + log c/(3 theta0)]";
        return b;
    }
    const double delta = excess / (2.0 * c * std::sqrt(std::numbers::pi));
    return factors_from_delta(delta, tag, format_delta_note("lemma", delta));
}

// The lemma at c = exp{(3/2)(2 theta1 - theta0)}.
inline SteinFactorBound bound_thm4(const ThetaVector& th) {
    if (!(th[0] > 0.0)) throw InvalidInput("theta0 must be positive");
    const double excess = 2.0 * th[1] - th[0];
    if (!(excess > 0.0)) {
        SteinFactorBound b;
        b.method = {BoundKind::Theorem4};
        b.note = "2 theta1 <= theta0";
        return b;
    }
    const double c = std::exp(1.5 * excess);
    if (!(c > 1.0)) {
        // excess below double resolution of exp; delta is effectively zero.
        SteinFactorBound b;
        b.method = {BoundKind::Theorem4};
        b.note = "2 theta1 - theta0 too small";
        return b;
    }
    SteinFactorBound b = bound_lemma_c(th, c);
    b.method = {BoundKind::Theorem4};
    return b;
}

// Every method: GENERAL, MONOTONE, BX99, THM2(1), THM2(2), COR3, THM2(4), THM4.
inline std::vector<SteinFactorBound> all_bounds(const CompoundPoissonParams& params,
                                                const GridOptions& opts = {}) {
    const ThetaVector th = theta(params, 4);
    std::vector<SteinFactorBound> out;
    out.push_back(bound_general(params));
    out.push_back(bound_monotone(params));
    out.push_back(bound_bx99(th));
    out.push_back(bound_thm2(th, 1, opts));
    out.push_back(bound_thm2(th, 2, opts));
    out.push_back(bound_cor3(th, opts));
    out.push_back(bound_thm2(th, 4, opts));
    out.push_back(bound_thm4(th));
    return out;
}

// Componentwise minimum over applicable methods.  The method tag is the m1
// winner; the note names both winners.
inline SteinFactorBound best_of(const std::vector<SteinFactorBound>& bounds) {
    const SteinFactorBound* best_m0 = nullptr;
    const SteinFactorBound* best_m1 = nullptr;
    for (const auto& b : bounds) {
        if (!b.applicable) continue;
        if (!best_m0 || b.m0 < best_m0->m0) best_m0 = &b;
        if (!best_m1 || b.m1 < best_m1->m1) best_m1 = &b;
    }
    SteinFactorBound out;
    if (!best_m1) {
        out.note = "no applicable method";
        return out;
    }
    out.applicable = true;
    out.m0 = best_m0->m0;
    out.m1 = best_m1->m1;
    out.method = best_m1->method;
    out.delta = best_m1->delta;
    out.note = "m0:" + best_m0->method.str() + " m1:" + best_m1->method.str();
    return out;
}

inline SteinFactorBound best_bound(const CompoundPoissonParams& params, const GridOptions& opts = {}) {
    return best_of(all_bounds(params, opts));
}

} // namespace cpstein
