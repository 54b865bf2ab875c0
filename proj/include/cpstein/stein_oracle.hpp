// stein_oracle.hpp
//
// Direct numerical solution of the compound Poisson Stein equation
//   h(x) - E h(U) = sum_j j lambda_j f(x+j) - x f(x)
// for h = 1{x <= y}, and the empirical Stein factors obtained by sweeping y.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"
#include "cpstein/stein_bounds.hpp"

namespace cpstein {

struct SteinSolution {
    std::size_t threshold = 0;
    std::size_t x_max = 0;
    std::vector<double> values;  // values[x-1] = f(x), x = 1..x_max
    double residual0 = 0.0;
    double eh_u = 0.0;

    // f(x) for x >= 1; zero beyond the truncation point.
    double f(std::size_t x) const noexcept {
        return (x >= 1 && x <= x_max) ? values[x - 1] : 0.0;
    }
};

// Backward recursion f(x) = [sum_j j lambda_j f(x+j) - (h(x) - E h(U))] / x
// from x_max down to 1 with f = 0 beyond x_max.  `law` must be cp_pmf(params).
inline SteinSolution solve_stein(const CompoundPoissonParams& params, const DistributionTable& law,
                                 std::size_t y, std::size_t x_max) {
    const std::size_t J = params.max_cluster();
    if (x_max < y + 10 * J) throw InvalidInput("x_max must be at least y + 10 J");

    SteinSolution sol;
    sol.threshold = y;
    sol.x_max = x_max;
    sol.eh_u = law.cdf(y);
    sol.values.assign(x_max, 0.0);

    std::vector<double> weights(J + 1, 0.0);
    for (std::size_t j = 1; j <= J; ++j) weights[j] = static_cast<double>(j) * params.rate(j);

    for (std::size_t x = x_max; x >= 1; --x) {
        double drift = 0.0;
        for (std::size_t j = 1; j <= J; ++j) drift += weights[j] * sol.f(x + j);
        const double rhs = (x <= y ? 1.0 : 0.0) - sol.eh_u;
        sol.values[x - 1] = (drift - rhs) / static_cast<double>(x);
    }

    double drift0 = 0.0;
    for (std::size_t j = 1; j <= J; ++j) drift0 += weights[j] * sol.f(j);
    sol.residual0 = std::abs(drift0 - (1.0 - sol.eh_u));
    return sol;
}

inline SteinSolution solve_stein(const CompoundPoissonParams& params, std::size_t y, std::size_t x_max) {
    return solve_stein(params, cp_pmf(params), y, x_max);
}

// max over interior x in [1, x_max - J] of the Stein-equation defect.
inline double interior_residual(const CompoundPoissonParams& params, const SteinSolution& sol) {
    const std::size_t J = params.max_cluster();
    double worst = 0.0;
    for (std::size_t x = 1; x + J <= sol.x_max; ++x) {
        double drift = 0.0;
        for (std::size_t j = 1; j <= J; ++j) drift += static_cast<double>(j) * params.rate(j) * sol.f(x + j);
        const double lhs = (x <= sol.threshold ? 1.0 : 0.0) - sol.eh_u;
        worst = std::max(worst, std::abs(lhs - (drift - static_cast<double>(x) * sol.f(x))));
    }
    return worst;
}

struct EmpiricalFactors {
    double m0_hat = 0.0;
    double m1_hat = 0.0;
    std::size_t y_max = 0;
    std::size_t x_max = 0;
};

inline constexpr double kOracleTailTarget = 1e-8;
inline constexpr double kStabilityTolerance = 1e-7;

// Smallest y with P(U > y) <= 1e-8.
inline std::size_t default_y_max(const DistributionTable& law) {
    std::size_t y = 0;
    while (law.upper_tail(y) > kOracleTailTarget && y + 1 < law.size()) ++y;
    return y;
}

inline std::size_t default_x_max(const CompoundPoissonParams& params, std::size_t y_max) {
    const ThetaVector th = theta(params, 1);
    const double spread = 4.0 * (th[0] + 10.0 * std::sqrt(th[0] + th[1]));
    const std::size_t by_mean = static_cast<std::size_t>(std::ceil(spread));
    return std::max(by_mean, y_max + 20 * params.max_cluster());
}

namespace detail {

inline EmpiricalFactors sweep_factors(const CompoundPoissonParams& params, const DistributionTable& law,
                                      std::size_t y_max, std::size_t x_max) {
    const std::size_t J = params.max_cluster();
    if (x_max < y_max + 10 * J + 1) throw InvalidInput("x_max must be at least y_max + 10 J + 1");
    EmpiricalFactors out{0.0, 0.0, y_max, x_max};
    const std::size_t last = x_max - J;
    for (std::size_t y = 0; y <= y_max; ++y) {
        const SteinSolution sol = solve_stein(params, law, y, x_max);
        for (std::size_t x = 1; x <= last; ++x) {
            out.m0_hat = std::max(out.m0_hat, std::abs(sol.f(x)));
            if (x + 1 <= last) out.m1_hat = std::max(out.m1_hat, std::abs(sol.f(x + 1) - sol.f(x)));
        }
    }
    return out;
}

} // namespace detail

// sup over y <= y_max and interior x of |f_y(x)| and |Delta f_y(x)|; the result
// must agree with the x_max-doubled sweep to within 1e-7.
inline EmpiricalFactors empirical_factors(const CompoundPoissonParams& params, std::size_t y_max,
                                          std::size_t x_max) {
    const DistributionTable law = cp_pmf(params);
    if (law.upper_tail(y_max) > kOracleTailTarget) {
        throw InvalidInput("y_max too small: P(U > y_max) exceeds 1e-8");
    }
    const EmpiricalFactors base = detail::sweep_factors(params, law, y_max, x_max);
    const EmpiricalFactors doubled = detail::sweep_factors(params, law, y_max, 2 * x_max);
    if (std::abs(base.m0_hat - doubled.m0_hat) > kStabilityTolerance ||
        std::abs(base.m1_hat - doubled.m1_hat) > kStabilityTolerance) {
        throw NotConverged("truncation not converged");
    }
    return base;
}

// Default truncation, doubled until stable (at most 6 doublings).
inline EmpiricalFactors empirical_factors(const CompoundPoissonParams& params) {
    const DistributionTable law = cp_pmf(params);
    const std::size_t y_max = default_y_max(law);
    std::size_t x_max = default_x_max(params, y_max);
    for (int attempt = 0; attempt < 6; ++attempt, x_max *= 2) {
        try {
            return empirical_factors(params, y_max, x_max);
        } catch (const NotConverged&) {
        }
    }
    throw NotConverged("truncation not converged");
}

struct VerificationReport {
    std::string method;
    double m0_bound = 0.0;
    double m0_hat = 0.0;
    double m1_bound = 0.0;
    double m1_hat = 0.0;
    bool pass = false;
    std::size_t x_max = 0;
    std::size_t y_max = 0;

    // Empirical over bounded; <= 1 on pass.
    double m0_ratio() const { return m0_hat / m0_bound; }
    double m1_ratio() const { return m1_hat / m1_bound; }
};

inline constexpr double kDominanceSlack = 1e-12;

inline VerificationReport verify_bound(const SteinFactorBound& bound, const EmpiricalFactors& emp) {
    if (!bound.applicable) throw InvalidInput("bound is not applicable");
    VerificationReport r;
    r.method = bound.method.str();
    r.m0_bound = bound.m0;
    r.m1_bound = bound.m1;
    r.m0_hat = emp.m0_hat;
    r.m1_hat = emp.m1_hat;
    r.x_max = emp.x_max;
    r.y_max = emp.y_max;
    r.pass = emp.m0_hat <= bound.m0 + kDominanceSlack && emp.m1_hat <= bound.m1 + kDominanceSlack;
    return r;
}

inline VerificationReport verify_bound(const CompoundPoissonParams& params, const SteinFactorBound& bound,
                                       std::size_t y_max, std::size_t x_max) {
    if (!bound.applicable) throw InvalidInput("bound is not applicable");
    return verify_bound(bound, empirical_factors(params, y_max, x_max));
}

} // namespace cpstein
