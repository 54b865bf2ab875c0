// cp_core.hpp
//
// Compound Poisson laws CP(lambda, mu) parameterised by their cluster rates
// lambda_j = lambda * mu_j, j = 1..J.  Provides the factorial-moment sums
// theta_k, the pmf via the compound Poisson recursion with a certified tail,
// a portable sampler and the monotone-rate check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cpstein/error.hpp"

namespace cpstein {

class CompoundPoissonParams {
public:
    explicit CompoundPoissonParams(std::vector<double> rates) : rates_(std::move(rates)) {
        for (std::size_t i = 0; i < rates_.size(); ++i) {
            if (!std::isfinite(rates_[i]) || rates_[i] < 0.0) {
                throw InvalidInput("invalid rates: lambda_" + std::to_string(i + 1) +
                                   " must be finite and nonnegative");
            }
        }
        while (!rates_.empty() && rates_.back() == 0.0) rates_.pop_back();
        if (rates_.empty()) throw InvalidInput("invalid rates: at least one rate must be positive");
    }

    // Rates lambda_1..lambda_J (trailing zeros stripped).
    std::span<const double> rates() const noexcept { return rates_; }

    // lambda_j for j >= 1; zero outside 1..J.
    double rate(std::size_t j) const noexcept {
        return (j >= 1 && j <= rates_.size()) ? rates_[j - 1] : 0.0;
    }

    std::size_t max_cluster() const noexcept { return rates_.size(); }

    double total_rate() const noexcept {
        return std::accumulate(rates_.begin(), rates_.end(), 0.0);
    }

    // mu_j = lambda_j / lambda.
    std::vector<double> severity() const {
        const double lambda = total_rate();
        std::vector<double> mu(rates_.size());
        std::transform(rates_.begin(), rates_.end(), mu.begin(),
                       [lambda](double r) { return r / lambda; });
        return mu;
    }

    friend bool operator==(const CompoundPoissonParams&, const CompoundPoissonParams&) = default;

private:
    std::vector<double> rates_;
};

// theta_0..theta_K with theta_k = sum_j j(j-1)...(j-k) lambda_j.
struct ThetaVector {
    std::vector<double> values;

    double operator[](std::size_t k) const noexcept {
        return k < values.size() ? values[k] : 0.0;
    }
    // Highest order K held.
    std::size_t order() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

inline ThetaVector theta(const CompoundPoissonParams& params, std::size_t max_order) {
    ThetaVector out;
    out.values.assign(max_order + 1, 0.0);
    for (std::size_t j = 1; j <= params.max_cluster(); ++j) {
        double falling = static_cast<double>(j);
        for (std::size_t k = 0; k <= max_order; ++k) {
            if (k > 0) falling *= static_cast<double>(j) - static_cast<double>(k);
            if (falling == 0.0) break;
            out.values[k] += falling * params.rate(j);
        }
    }
    return out;
}

// pmf of a nonnegative integer variable on {0..size-1} plus an upper bound on
// the mass beyond the table.
struct DistributionTable {
    static constexpr double kMassTolerance = 1e-10;

    std::vector<double> pmf;
    double tail_mass = 0.0;

    std::size_t size() const noexcept { return pmf.size(); }

    double at(std::size_t x) const noexcept { return x < pmf.size() ? pmf[x] : 0.0; }

    double cdf(std::size_t y) const noexcept {
        const std::size_t end = std::min(y + 1, pmf.size());
        double s = 0.0;
        for (std::size_t x = 0; x < end; ++x) s += pmf[x];
        return s;
    }

    std::vector<double> cdf_values() const {
        std::vector<double> c(pmf.size());
        std::partial_sum(pmf.begin(), pmf.end(), c.begin());
        return c;
    }

    // P(X > y) restricted to the table plus the certified tail.
    double upper_tail(std::size_t y) const noexcept {
        double s = tail_mass;
        for (std::size_t x = y + 1; x < pmf.size(); ++x) s += pmf[x];
        return s;
    }

    double total_mass() const noexcept {
        return std::accumulate(pmf.begin(), pmf.end(), 0.0);
    }

    double mean() const noexcept {
        double s = 0.0;
        for (std::size_t x = 0; x < pmf.size(); ++x) s += static_cast<double>(x) * pmf[x];
        return s;
    }

    double variance() const noexcept {
        const double m = mean();
        double s = 0.0;
        for (std::size_t x = 0; x < pmf.size(); ++x) {
            const double d = static_cast<double>(x) - m;
            s += d * d * pmf[x];
        }
        return s;
    }

    bool is_valid() const noexcept {
        if (!(tail_mass >= 0.0 && tail_mass <= 1.0)) return false;
        for (double v : pmf) {
            if (!(v >= 0.0 && v <= 1.0)) return false;
        }
        const double total = total_mass() + tail_mass;
        return total >= 1.0 - kMassTolerance && total <= 1.0 + kMassTolerance;
    }
};

namespace detail {

// min over a log-spaced grid of s in (0, s_max] of exp(log_mgf(s) - s*(x+1)),
// an upper bound on P(X >= x+1) for any s where the mgf is finite.
inline double chernoff_tail(const std::function<double(double)>& log_mgf, double x_plus_1,
                            double s_max) {
    constexpr int kGrid = 160;
    constexpr double kSMin = 1e-4;
    double best = 0.0;  // log of the trivial bound 1
    const double ratio = std::log(s_max / kSMin) / (kGrid - 1);
    for (int i = 0; i < kGrid; ++i) {
        const double s = kSMin * std::exp(ratio * i);
        const double v = log_mgf(s) - s * x_plus_1;
        if (std::isfinite(v)) best = std::min(best, v);
    }
    return std::exp(best);
}

inline double cp_log_mgf(const CompoundPoissonParams& params, double s) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= params.max_cluster(); ++j) {
        acc += params.rate(j) * std::expm1(s * static_cast<double>(j));
    }
    return acc;
}

// Uniform on [0,1) from the top 53 bits; identical on every platform for a
// given 64-bit engine state.
template <class Engine>
double unit_uniform(Engine& gen) {
    static_assert(Engine::max() - Engine::min() == std::numeric_limits<std::uint64_t>::max(),
                  "unit_uniform needs a full 64-bit engine");
    return static_cast<double>((gen() - Engine::min()) >> 11) * 0x1.0p-53;
}

} // namespace detail

// P(U > x) <= inf_s e^{-s(x+1)} E e^{sU}.
inline double cp_tail_bound(const CompoundPoissonParams& params, std::size_t x) {
    const double s_max = 600.0 / static_cast<double>(params.max_cluster());
    return detail::chernoff_tail(
        [&params](double s) { return detail::cp_log_mgf(params, s); },
        static_cast<double>(x) + 1.0, std::min(s_max, 50.0));
}

inline constexpr double kDefaultMassTarget = 1.0 - 1e-12;
inline constexpr std::size_t kDefaultTruncationCap = std::size_t{1} << 20;

// Law of U by P(U=0) = e^{-lambda}, P(U=n) = (1/n) sum_{j<=min(n,J)} j lambda_j P(U=n-j).
// Extends the table until the certified tail is at most 1 - mass_target.
inline DistributionTable cp_pmf(const CompoundPoissonParams& params,
                                double mass_target = kDefaultMassTarget,
                                std::size_t cap = kDefaultTruncationCap) {
    if (!(mass_target > 0.0 && mass_target < 1.0)) {
        throw InvalidInput("mass_target must lie in (0,1)");
    }
    const double allowed_tail = 1.0 - mass_target;
    const std::size_t J = params.max_cluster();
    const double mean = theta(params, 0)[0];

    DistributionTable table;
    table.pmf.push_back(std::exp(-params.total_rate()));
    for (std::size_t n = 0;; ++n) {
        if (n > 0) {
            double s = 0.0;
            for (std::size_t j = 1; j <= std::min(n, J); ++j) {
                s += static_cast<double>(j) * params.rate(j) * table.pmf[n - j];
            }
            table.pmf.push_back(s / static_cast<double>(n));
        }
        if (static_cast<double>(n) >= mean) {
            const double tail = cp_tail_bound(params, n);
            if (tail <= allowed_tail) {
                table.tail_mass = tail;
                return table;
            }
        }
        if (n + 1 >= cap) throw BudgetExceeded("truncation cap exceeded");
    }
}

// Draws from CP(lambda, mu): N ~ Poisson(lambda) by inversion, then N cluster
// sizes from mu by inversion.
class CompoundPoissonSampler {
public:
    explicit CompoundPoissonSampler(const CompoundPoissonParams& params)
        : lambda_(params.total_rate()), exp_neg_lambda_(std::exp(-lambda_)) {
        const auto mu = params.severity();
        cumulative_.resize(mu.size());
        std::partial_sum(mu.begin(), mu.end(), cumulative_.begin());
        cumulative_.back() = 1.0;
    }

    template <class Engine>
    std::uint64_t operator()(Engine& gen) const {
        const std::uint64_t clusters = draw_poisson(gen);
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < clusters; ++i) {
            const double u = detail::unit_uniform(gen);
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
            total += std::min(idx, cumulative_.size() - 1) + 1;
        }
        return total;
    }

private:
    template <class Engine>
    std::uint64_t draw_poisson(Engine& gen) const {
        const double u = detail::unit_uniform(gen);
        double prob = exp_neg_lambda_;
        double cdf = prob;
        std::uint64_t k = 0;
        while (u >= cdf && prob > 0.0) {
            ++k;
            prob *= lambda_ / static_cast<double>(k);
            cdf += prob;
        }
        return k;
    }

    double lambda_;
    double exp_neg_lambda_;
    std::vector<double> cumulative_;
};

inline std::uint64_t cp_sample(const CompoundPoissonParams& params, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    return CompoundPoissonSampler(params)(gen);
}

// j lambda_j >= (j+1) lambda_{j+1} for j = 1..J.
inline bool monotone_condition(const CompoundPoissonParams& params) {
    for (std::size_t j = 1; j <= params.max_cluster(); ++j) {
        const double lhs = static_cast<double>(j) * params.rate(j);
        const double rhs = static_cast<double>(j + 1) * params.rate(j + 1);
        if (lhs < rhs) return false;
    }
    return true;
}

} // namespace cpstein
