// applications.hpp
//
// Application models and their compound Poisson approximants: circular
// 2-runs, the two-dimensional consecutive k-out-of-n:F system, mixed Poisson
// laws and sums of independent integer variables.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"
#include "cpstein/stein_bounds.hpp"

namespace cpstein {

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

// W = sum_{i=1}^n xi_i xi_{i+1} over a circle of n Bernoulli(p) trials.
struct RunsModel {
    int n = 3;
    double p = 0.0;

    void validate() const {
        if (n < 3) throw InvalidInput("runs model needs n >= 3");
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("runs model needs p in [0,1]");
    }
};

inline CompoundPoissonParams runs_cp_params(const RunsModel& m) {
    m.validate();
    const double n = m.n, p = m.p;
    return CompoundPoissonParams({n * p * p * (1 - p) * (1 - p), n * p * p * p * (1 - p), n * p * p * p * p / 3.0});
}

// theta = (n p^2, 2 n p^3, 2 n p^4, 0).
inline ThetaVector runs_theta_closed_form(const RunsModel& m) {
    const double n = m.n, p = m.p;
    return {{n * p * p, 2 * n * p * p * p, 2 * n * p * p * p * p, 0.0}};
}

inline double runs_delta(const RunsModel& m) {
    const double q = 1.0 - 2.0 * m.p;
    return m.n * m.p * m.p * q * q;
}

// d_K(W, U) <= 3 M1 n p^4.
inline double runs_dk_bound(const RunsModel& m, double m1) {
    if (!std::isfinite(m1)) throw InvalidInput("m1 must be finite");
    return 3.0 * m1 * m.n * std::pow(m.p, 4);
}

// ---------------------------------------------------------------------------
// Two-dimensional consecutive k-out-of-n:F reliability
// ---------------------------------------------------------------------------

// W counts the all-failed k x k subgrids of an n x n grid with independent
// failure probability q.
struct ReliabilityModel {
    int n = 3;
    int k = 2;
    double q = 0.0;

    void validate() const {
        if (k < 1 || n < k) throw InvalidInput("reliability model needs 1 <= k <= n");
        if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("reliability model needs q in [0,1]");
    }
    double psi() const { return std::pow(q, k * k); }
    double qk() const { return std::pow(q, k); }
    // n - k - 1
    double interior() const { return static_cast<double>(n - k - 1); }
};

namespace detail {
inline double binomial_point(int trials, double prob, int successes) {
    if (successes < 0 || successes > trials) return 0.0;
    double coeff = 1.0;
    for (int i = 1; i <= successes; ++i) coeff = coeff * (trials - successes + i) / i;
    return coeff * std::pow(prob, successes) * std::pow(1.0 - prob, trials - successes);
}
} // namespace detail

// lambda_j = (psi/j) [4 pi_1(j) + 4(n-k-1) pi_2(j) + (n-k-1)^2 pi_3(j)], j = 1..5,
// with pi_i(j) = P(Bin(i+1, q^k) = j-1).
inline CompoundPoissonParams reliability_cp_params(const ReliabilityModel& m) {
    m.validate();
    if (m.k < 2 || m.n <= m.k + 1) throw InvalidInput("reliability approximant needs k >= 2 and n > k + 1");
    const double y = m.qk(), psi = m.psi(), inner = m.interior();
    std::vector<double> rates(5);
    for (int j = 1; j <= 5; ++j) {
        const double mix = 4.0 * detail::binomial_point(2, y, j - 1) +
                           4.0 * inner * detail::binomial_point(3, y, j - 1) +
                           inner * inner * detail::binomial_point(4, y, j - 1);
        rates[static_cast<std::size_t>(j - 1)] = psi * mix / j;
    }
    return CompoundPoissonParams(std::move(rates));
}

inline ThetaVector reliability_theta_closed_form(const ReliabilityModel& m) {
    const double psi = m.psi(), y = m.qk(), a = m.interior();
    const double side = m.n - m.k + 1;
    return {{side * side * psi, 4 * (2 + 3 * a + a * a) * psi * y, 4 * (2 + 6 * a + 3 * a * a) * psi * y * y,
             24 * (a + a * a) * psi * y * y * y}};
}

// psi [4 a(y) + 4(n-k-1) b(y) + (n-k-1)^2 c(y)] at y = q^k.
inline double reliability_delta(const ReliabilityModel& m) {
    const double y = m.qk(), inner = m.interior();
    const double a = (1 - 2 * y) * (1 - 2 * y);
    const double b = a * (1 - 2 * y);
    const double c = (1 - 4 * y) * (1 - 4 * y + 8 * y * y);
    return m.psi() * (4 * a + 4 * inner * b + inner * inner * c);
}

inline double reliability_dk_bound(const ReliabilityModel& m, double m1) {
    if (!std::isfinite(m1)) throw InvalidInput("m1 must be finite");
    const int k = m.k;
    const double q = m.q, psi = m.psi();
    double bracket = (4.0 * k * k + 12.0 * k - 3.0) * psi;
    for (int r = 1; r <= k - 1; ++r) {
        for (int s = 1; s <= k - 1; ++s) bracket += 4.0 * std::pow(q, k * k - r * s);
    }
    for (int s = 1; s <= k - 2; ++s) bracket += 4.0 * std::pow(q, k * k - k * s);
    const double side = m.n - m.k + 1;
    return m1 * side * side * psi * bracket;
}

// ---------------------------------------------------------------------------
// Mixed Poisson
// ---------------------------------------------------------------------------

struct TwoPointMixing {
    double a = 1.0, b = 1.0;  // support
    double w = 1.0;           // P(xi = a)
};

struct GammaMixing {
    double shape = 1.0;
    double scale = 1.0;
};

// W ~ Po(xi).
struct MixedPoissonModel {
    std::variant<TwoPointMixing, GammaMixing> mixing;

    void validate() const {
        if (const auto* t = std::get_if<TwoPointMixing>(&mixing)) {
            if (!(t->a > 0 && t->b > 0)) throw InvalidInput("two-point mixing values must be positive");
            if (!(t->w >= 0 && t->w <= 1)) throw InvalidInput("two-point weight must lie in [0,1]");
        } else {
            const auto& g = std::get<GammaMixing>(mixing);
            if (!(g.shape > 0 && g.scale > 0)) throw InvalidInput("gamma mixing needs positive shape and scale");
        }
    }

    double mean() const {
        if (const auto* t = std::get_if<TwoPointMixing>(&mixing)) return t->w * t->a + (1 - t->w) * t->b;
        const auto& g = std::get<GammaMixing>(mixing);
        return g.shape * g.scale;
    }

    double variance() const {
        if (const auto* t = std::get_if<TwoPointMixing>(&mixing)) {
            const double d = t->a - t->b;
            return t->w * (1 - t->w) * d * d;
        }
        const auto& g = std::get<GammaMixing>(mixing);
        return g.shape * g.scale * g.scale;
    }

    // E|xi - nu|^3: closed form for two points, quadrature split at nu for gamma.
    double abs_central_moment3() const {
        const double nu = mean();
        if (const auto* t = std::get_if<TwoPointMixing>(&mixing)) {
            return t->w * std::pow(std::abs(t->a - nu), 3) + (1 - t->w) * std::pow(std::abs(t->b - nu), 3);
        }
        const auto& g = std::get<GammaMixing>(mixing);
        const boost::math::gamma_distribution<double> law(g.shape, g.scale);
        const auto integrand = [&](double x) {
            if (!std::isfinite(x)) return 0.0;
            const double density = boost::math::pdf(law, x);
            return density == 0.0 ? 0.0 : std::pow(std::abs(x - nu), 3) * density;
        };
        constexpr double kTol = 1e-10;
        boost::math::quadrature::tanh_sinh<double> below;
        boost::math::quadrature::exp_sinh<double> above;
        const double lower = below.integrate(integrand, 0.0, nu, kTol);
        const double upper = above.integrate(integrand, nu, std::numeric_limits<double>::infinity(), kTol);
        return lower + upper;
    }
};

// lambda_1 = nu - sigma^2, lambda_2 = sigma^2 / 2.
inline CompoundPoissonParams mixed_cp_params(const MixedPoissonModel& m) {
    m.validate();
    const double nu = m.mean(), var = m.variance();
    if (!(nu > var)) throw InvalidInput("approximant undefined (lambda_1 < 0)");
    return CompoundPoissonParams({nu - var, var / 2.0});
}

// d_K(W, U) <= 1.2 M1 E|xi - nu|^3.
inline double mixed_dk_bound(const MixedPoissonModel& m, double m1) {
    if (!std::isfinite(m1)) throw InvalidInput("m1 must be finite");
    return 1.2 * m1 * m.abs_central_moment3();
}

// ---------------------------------------------------------------------------
// Independent summands
// ---------------------------------------------------------------------------

struct IndependentSumModel {
    std::vector<std::vector<double>> components;  // pmfs on {0, 1, ...}

    void validate() const {
        if (components.empty()) throw InvalidInput("sum model needs at least one component");
        for (const auto& c : components) {
            if (c.empty()) throw InvalidInput("component pmf is empty");
            double s = 0.0;
            for (double v : c) {
                if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("component pmf entries must lie in [0,1]");
                s += v;
            }
            if (std::abs(s - 1.0) > 1e-12) throw InvalidInput("component pmf must sum to 1");
        }
    }

    double mean() const {
        double total = 0.0;
        for (const auto& c : components) {
            for (std::size_t x = 0; x < c.size(); ++x) total += static_cast<double>(x) * c[x];
        }
        return total;
    }

    double variance() const {
        double total = 0.0;
        for (const auto& c : components) {
            double m = 0.0, m2 = 0.0;
            for (std::size_t x = 0; x < c.size(); ++x) {
                m += static_cast<double>(x) * c[x];
                m2 += static_cast<double>(x) * static_cast<double>(x) * c[x];
            }
            total += m2 - m * m;
        }
        return total;
    }
};

// lambda_1 = 2 EW - Var W, lambda_2 = (Var W - EW) / 2.
inline CompoundPoissonParams sums_cp_params(const IndependentSumModel& m) {
    m.validate();
    const double ew = m.mean(), var = m.variance();
    if (var < ew) throw InvalidInput("sum approximant needs Var(W) >= E(W) (lambda_2 >= 0)");
    if (2.0 * ew < var) throw InvalidInput("sum approximant needs E(W) >= Var(W)/2 (lambda_1 >= 0)");
    return CompoundPoissonParams({2.0 * ew - var, 0.5 * (var - ew)});
}

// ---------------------------------------------------------------------------
// Regime dispatch
// ---------------------------------------------------------------------------

enum class Regime { BX99_OK, COR3_OK, THM4_OK, GENERAL_ONLY };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::BX99_OK: return "BX99_OK";
    case Regime::COR3_OK: return "COR3_OK";
    case Regime::THM4_OK: return "THM4_OK";
    case Regime::GENERAL_ONLY: return "GENERAL_ONLY";
    }
    return "UNKNOWN";
}

// First applicable of BX99, COR3, THM4; GENERAL otherwise.
inline Regime regime_classify(const ThetaVector& th, const GridOptions& opts = {}) {
    if (th.order() < 3) throw InvalidInput("theta order insufficient");
    if (bound_bx99(th).applicable) return Regime::BX99_OK;
    if (bound_cor3(th, opts).applicable) return Regime::COR3_OK;
    if (th[0] > 0.0 && bound_thm4(th).applicable) return Regime::THM4_OK;
    return Regime::GENERAL_ONLY;
}

} // namespace cpstein
