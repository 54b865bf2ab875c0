// exact_oracles.hpp
//
// Exact (or seeded Monte Carlo) laws of the application statistics and
// Kolmogorov / total variation distances between distribution tables.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cpstein/applications.hpp"
#include "cpstein/cp_core.hpp"
#include "cpstein/error.hpp"

namespace cpstein {

inline constexpr int kRunsMaxN = 2000;
inline constexpr int kReliabilityExhaustiveMaxN = 5;
inline constexpr double kConvolutionBudget = 1e7;

// Transfer-matrix DP over (first bit, current bit, run count); the closing
// pair xi_n xi_1 is added at the end.  O(n^2) time.
inline DistributionTable runs_exact_pmf(const RunsModel& m) {
    m.validate();
    if (m.n > kRunsMaxN) throw BudgetExceeded("runs model exceeds n <= 2000");
    const auto n = static_cast<std::size_t>(m.n);
    const std::array<double, 2> bit_prob{1.0 - m.p, m.p};

    // state[first][current][count]
    using Layer = std::array<std::array<std::vector<double>, 2>, 2>;
    Layer cur, next;
    for (auto& a : cur) for (auto& v : a) v.assign(n + 1, 0.0);
    for (auto& a : next) for (auto& v : a) v.assign(n + 1, 0.0);
    cur[0][0][0] = bit_prob[0];
    cur[1][1][0] = bit_prob[1];

    for (std::size_t pos = 2; pos <= n; ++pos) {
        for (auto& a : next) for (auto& v : a) std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(pos), 0.0);
        for (int first = 0; first < 2; ++first) {
            for (int prev = 0; prev < 2; ++prev) {
                const auto& src = cur[first][prev];
                for (std::size_t c = 0; c + 1 < pos; ++c) {
                    const double mass = src[c];
                    if (mass == 0.0) continue;
                    next[first][0][c] += mass * bit_prob[0];
                    next[first][1][c + static_cast<std::size_t>(prev)] += mass * bit_prob[1];
                }
            }
        }
        std::swap(cur, next);
    }

    DistributionTable table;
    table.pmf.assign(n + 1, 0.0);
    for (int first = 0; first < 2; ++first) {
        for (int last = 0; last < 2; ++last) {
            const std::size_t closing = static_cast<std::size_t>(first * last);
            for (std::size_t c = 0; c + closing <= n; ++c) table.pmf[c + closing] += cur[first][last][c];
        }
    }
    return table;
}

// Number of all-failed k x k windows in an n x n grid (row-major, 1 = failed),
// by 2-D prefix sums.
inline int count_failed_subgrids(std::span<const std::uint8_t> grid, int n, int k,
                                 std::vector<int>& prefix) {
    const auto side = static_cast<std::size_t>(n + 1);
    prefix.assign(side * side, 0);
    for (int i = 0; i < n; ++i) {
        int row = 0;
        for (int j = 0; j < n; ++j) {
            row += grid[static_cast<std::size_t>(i * n + j)];
            prefix[static_cast<std::size_t>(i + 1) * side + static_cast<std::size_t>(j + 1)] =
                prefix[static_cast<std::size_t>(i) * side + static_cast<std::size_t>(j + 1)] + row;
        }
    }
    const int full = k * k;
    int count = 0;
    for (int i = 0; i + k <= n; ++i) {
        for (int j = 0; j + k <= n; ++j) {
            const auto at = [&](int r, int c) {
                return prefix[static_cast<std::size_t>(r) * side + static_cast<std::size_t>(c)];
            };
            if (at(i + k, j + k) - at(i, j + k) - at(i + k, j) + at(i, j) == full) ++count;
        }
    }
    return count;
}

// Exhaustive over all 2^{n^2} failure patterns; tallies (W, #failed) with
// integer counts and weights them once at the end.
inline DistributionTable reliability_exact_pmf(const ReliabilityModel& m) {
    m.validate();
    if (m.n > kReliabilityExhaustiveMaxN) {
        throw BudgetExceeded("exhaustive reliability law needs n <= 5; use reliability_mc_pmf");
    }
    const int cells = m.n * m.n;
    const int windows = (m.n - m.k + 1) * (m.n - m.k + 1);
    std::vector<std::vector<std::uint64_t>> tally(static_cast<std::size_t>(windows + 1),
                                                  std::vector<std::uint64_t>(static_cast<std::size_t>(cells + 1), 0));
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(cells));
    std::vector<int> prefix;
    const std::uint64_t patterns = std::uint64_t{1} << cells;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        for (int c = 0; c < cells; ++c) grid[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>((mask >> c) & 1U);
        const int w = count_failed_subgrids(grid, m.n, m.k, prefix);
        ++tally[static_cast<std::size_t>(w)][static_cast<std::size_t>(std::popcount(mask))];
    }
    DistributionTable table;
    table.pmf.assign(static_cast<std::size_t>(windows + 1), 0.0);
    for (int w = 0; w <= windows; ++w) {
        for (int f = 0; f <= cells; ++f) {
            const auto count = tally[static_cast<std::size_t>(w)][static_cast<std::size_t>(f)];
            if (count == 0) continue;
            table.pmf[static_cast<std::size_t>(w)] +=
                static_cast<double>(count) * std::pow(m.q, f) * std::pow(1.0 - m.q, cells - f);
        }
    }
    return table;
}

struct McTable {
    DistributionTable table;
    std::vector<double> stderr_per_bin;  // binomial standard error of each bin
    std::uint64_t samples = 0;
};

inline McTable reliability_mc_pmf(const ReliabilityModel& m, std::uint64_t samples, std::uint64_t seed) {
    m.validate();
    if (samples < 10000) throw InvalidInput("Monte Carlo needs at least 1e4 samples");
    const int cells = m.n * m.n;
    const int windows = (m.n - m.k + 1) * (m.n - m.k + 1);
    std::vector<std::uint64_t> hits(static_cast<std::size_t>(windows + 1), 0);
    std::vector<std::uint8_t> grid(static_cast<std::size_t>(cells));
    std::vector<int> prefix;
    std::mt19937_64 gen(seed);
    for (std::uint64_t s = 0; s < samples; ++s) {
        for (auto& cell : grid) cell = detail::unit_uniform(gen) < m.q ? 1 : 0;
        ++hits[static_cast<std::size_t>(count_failed_subgrids(grid, m.n, m.k, prefix))];
    }
    McTable out;
    out.samples = samples;
    const double total = static_cast<double>(samples);
    for (auto h : hits) {
        const double p = static_cast<double>(h) / total;
        out.table.pmf.push_back(p);
        out.stderr_per_bin.push_back(std::sqrt(p * (1.0 - p) / total));
    }
    return out;
}

// Two-point mixtures are mixtures of Poisson tables; gamma mixing gives the
// negative binomial with success probability 1/(1+scale).
inline DistributionTable mixed_exact_pmf(const MixedPoissonModel& m) {
    m.validate();
    if (const auto* t = std::get_if<TwoPointMixing>(&m.mixing)) {
        const DistributionTable lo = cp_pmf(CompoundPoissonParams({t->a}));
        const DistributionTable hi = cp_pmf(CompoundPoissonParams({t->b}));
        DistributionTable mix;
        mix.pmf.assign(std::max(lo.size(), hi.size()), 0.0);
        for (std::size_t x = 0; x < mix.pmf.size(); ++x) mix.pmf[x] = t->w * lo.at(x) + (1 - t->w) * hi.at(x);
        mix.tail_mass = t->w * lo.tail_mass + (1 - t->w) * hi.tail_mass;
        return mix;
    }
    const auto& g = std::get<GammaMixing>(m.mixing);
    const double r = g.shape, s = g.scale;
    const double ratio = s / (1.0 + s);
    // log E e^{tX} = -r log(1 - s (e^t - 1)), finite for t < log((1+s)/s).
    const double t_max = 0.999 * std::log1p(1.0 / s);
    const auto log_mgf = [r, s](double t) { return -r * std::log1p(-s * std::expm1(t)); };
    const double allowed_tail = 1.0 - kDefaultMassTarget;

    DistributionTable table;
    double pmf = std::exp(-r * std::log1p(s));
    table.pmf.push_back(pmf);
    for (std::size_t x = 0;; ++x) {
        if (static_cast<double>(x) >= r * s) {
            const double tail = detail::chernoff_tail(log_mgf, static_cast<double>(x) + 1.0, t_max);
            if (tail <= allowed_tail) {
                table.tail_mass = tail;
                return table;
            }
        }
        if (x + 1 >= kDefaultTruncationCap) throw BudgetExceeded("truncation cap exceeded");
        pmf *= (static_cast<double>(x) + r) / (static_cast<double>(x) + 1.0) * ratio;
        table.pmf.push_back(pmf);
    }
}

// Iterated convolution; total work sum |current| * |next| capped at 1e7 cells.
inline DistributionTable sums_exact_pmf(const IndependentSumModel& m) {
    m.validate();
    double work = 0.0;
    std::size_t width = 1;
    for (const auto& c : m.components) {
        work += static_cast<double>(width) * static_cast<double>(c.size());
        width += c.size() - 1;
    }
    if (work > kConvolutionBudget) throw BudgetExceeded("convolution budget exceeded");

    std::vector<double> acc{1.0};
    for (const auto& c : m.components) {
        std::vector<double> next(acc.size() + c.size() - 1, 0.0);
        for (std::size_t i = 0; i < acc.size(); ++i) {
            if (acc[i] == 0.0) continue;
            for (std::size_t j = 0; j < c.size(); ++j) next[i + j] += acc[i] * c[j];
        }
        acc = std::move(next);
    }
    return {std::move(acc), 0.0};
}

struct DistanceReport {
    double d_k = 0.0;
    double d_tv = 0.0;
    std::size_t argmax_y = 0;
    double mc_stderr = 0.0;
    double certified_slack = 0.0;  // combined tail mass of both tables

    // Certified upper edge of the Kolmogorov distance.
    double d_k_upper() const { return std::min(1.0, d_k + certified_slack); }
};

// sup_y |F_a(y) - F_b(y)| over the union support; tail masses are reported as
// slack and folded into d_tv.
inline DistanceReport distance(const DistributionTable& a, const DistributionTable& b) {
    const std::size_t len = std::max(a.size(), b.size());
    DistanceReport r;
    r.certified_slack = a.tail_mass + b.tail_mass;
    double ca = 0.0, cb = 0.0, tv = 0.0;
    for (std::size_t y = 0; y < len; ++y) {
        ca += a.at(y);
        cb += b.at(y);
        tv += std::abs(a.at(y) - b.at(y));
        const double gap = std::abs(ca - cb);
        if (gap > r.d_k) {
            r.d_k = gap;
            r.argmax_y = y;
        }
    }
    r.d_k = std::min(1.0, r.d_k);
    r.d_tv = std::min(1.0, std::max(r.d_k, 0.5 * tv + r.certified_slack));
    return r;
}

inline DistanceReport distance(const McTable& a, const DistributionTable& b) {
    DistanceReport r = distance(a.table, b);
    const double f = a.table.cdf(r.argmax_y);
    r.mc_stderr = std::sqrt(std::max(0.0, f * (1.0 - f)) / static_cast<double>(a.samples));
    return r;
}

} // namespace cpstein
