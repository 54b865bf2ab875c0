#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cpstein/exact_oracles.hpp"
#include "oracles.hpp"

using namespace cpstein;

TEST(RunsExact, SmallCircle) {
    const auto t = runs_exact_pmf({3, 0.5});
    EXPECT_DOUBLE_EQ(t.pmf[0], 0.5);
    EXPECT_DOUBLE_EQ(t.pmf[1], 0.375);
    EXPECT_DOUBLE_EQ(t.pmf[2], 0.0);
    EXPECT_DOUBLE_EQ(t.pmf[3], 0.125);
    const auto ones = runs_exact_pmf({7, 1.0});
    EXPECT_EQ(ones.pmf[7], 1.0);
}

TEST(RunsExact, MatchesEnumeration) {
    for (int n = 3; n <= 16; ++n) {
        for (double p : {0.1, 0.3, 0.5, 0.7}) {
            const auto dp = runs_exact_pmf({n, p});
            const auto brute = oracle::runs_pmf_by_enumeration(n, p);
            for (int x = 0; x <= n; ++x) EXPECT_NEAR(dp.pmf[x], brute[x], 1e-12) << n << " " << p << " " << x;
        }
    }
    const auto dp = runs_exact_pmf({20, 0.3});
    const auto brute = oracle::runs_pmf_by_enumeration(20, 0.3);
    for (int x = 0; x <= 20; ++x) EXPECT_NEAR(dp.pmf[x], brute[x], 1e-13);
}

TEST(RunsExact, MeanMatchesApproximant) {
    for (double p : {0.05, 0.2, 0.45}) {
        const RunsModel m{150, p};
        EXPECT_NEAR(runs_exact_pmf(m).mean(), m.n * p * p, 1e-10);
        EXPECT_NEAR(theta(runs_cp_params(m), 0)[0], m.n * p * p, 1e-12);
    }
}

TEST(RunsExact, Budget) { EXPECT_THROW(runs_exact_pmf({2001, 0.1}), BudgetExceeded); }

TEST(ReliabilityExact, Examples) {
    const auto single = reliability_exact_pmf({3, 3, 0.6});
    ASSERT_EQ(single.size(), 2u);
    EXPECT_NEAR(single.pmf[1], std::pow(0.6, 9), 1e-16);
    const auto all = reliability_exact_pmf({4, 2, 1.0});
    EXPECT_EQ(all.pmf[9], 1.0);
    const auto half = reliability_exact_pmf({3, 2, 0.5});
    EXPECT_NEAR(half.total_mass(), 1.0, 1e-15);
    for (double v : half.pmf) EXPECT_EQ(std::fmod(v * 512.0, 1.0), 0.0);
    // Each 2x2 window contains the centre cell, so W = 0 whenever it works.
    EXPECT_GE(half.pmf[0], 0.5);
    EXPECT_THROW(reliability_exact_pmf({6, 2, 0.3}), BudgetExceeded);
}

TEST(ReliabilityExact, MeanMatchesApproximant) {
    const ReliabilityModel m{5, 2, 0.4};
    EXPECT_NEAR(reliability_exact_pmf(m).mean(), 16 * m.psi(), 1e-13);
    EXPECT_NEAR(theta(reliability_cp_params(m), 0)[0], 16 * m.psi(), 1e-13);
}

TEST(ReliabilityMc, AgreesWithExhaustive) {
    const ReliabilityModel m{4, 2, 0.3};
    const auto exact = reliability_exact_pmf(m);
    const auto mc = reliability_mc_pmf(m, 1000000, 2024);
    for (std::size_t w = 0; w < exact.size(); ++w) {
        const double se = std::sqrt(exact.pmf[w] * (1 - exact.pmf[w]) / 1e6);
        EXPECT_LE(std::abs(mc.table.pmf[w] - exact.pmf[w]), 4 * se + 1e-12) << w;
    }
    const auto again = reliability_mc_pmf(m, 10000, 2024);
    EXPECT_EQ(again.table.pmf, reliability_mc_pmf(m, 10000, 2024).table.pmf);
}

TEST(ReliabilityMc, Edges) {
    const auto zero = reliability_mc_pmf({6, 2, 0.0}, 10000, 1);
    EXPECT_EQ(zero.table.pmf[0], 1.0);
    EXPECT_EQ(zero.stderr_per_bin[0], 0.0);
    EXPECT_THROW(reliability_mc_pmf({6, 2, 0.1}, 9999, 1), InvalidInput);
}

TEST(MixedExact, TwoPoint) {
    const auto t = mixed_exact_pmf({TwoPointMixing{1.0, 3.0, 0.5}});
    EXPECT_NEAR(t.pmf[0], 0.5 * std::exp(-1.0) + 0.5 * std::exp(-3.0), 1e-16);
    const auto degenerate = mixed_exact_pmf({TwoPointMixing{2.5, 2.5, 0.3}});
    const auto poisson = cp_pmf(CompoundPoissonParams({2.5}));
    for (std::size_t x = 0; x < poisson.size(); ++x) EXPECT_NEAR(degenerate.at(x), poisson.pmf[x], 1e-16);
}

TEST(MixedExact, GammaMatchesQuadrature) {
    for (const auto& [r, s] : std::vector<std::pair<double, double>>{{2.0, 0.5}, {4.0, 0.5}, {0.7, 2.0}}) {
        const auto t = mixed_exact_pmf({GammaMixing{r, s}});
        EXPECT_LE(t.tail_mass, 1e-12);
        for (int x = 0; x < 25; ++x) {
            EXPECT_NEAR(t.at(static_cast<std::size_t>(x)), oracle::gamma_mixture_point(r, s, x), 1e-10) << r << " " << s << " " << x;
        }
    }
    const auto nb = mixed_exact_pmf({GammaMixing{2.0, 0.5}});
    EXPECT_NEAR(nb.pmf[0], 4.0 / 9.0, 1e-16);
    EXPECT_NEAR(nb.pmf[1], 2 * (4.0 / 9.0) / 3.0, 1e-16);
}

TEST(SumsExact, Examples) {
    const auto one = sums_exact_pmf({{{0.2, 0.5, 0.3}}});
    EXPECT_EQ(one.pmf, (std::vector<double>{0.2, 0.5, 0.3}));
    const auto coins = sums_exact_pmf({{{0.5, 0.5}, {0.5, 0.5}}});
    EXPECT_EQ(coins.pmf, (std::vector<double>{0.25, 0.5, 0.25}));
    const IndependentSumModel uni{std::vector<std::vector<double>>(20, {0.25, 0.25, 0.25, 0.25})};
    const auto t = sums_exact_pmf(uni);
    EXPECT_NEAR(t.mean(), 30.0, 1e-11);
    EXPECT_NEAR(t.variance(), 25.0, 1e-10);
    const IndependentSumModel huge{std::vector<std::vector<double>>(3, std::vector<double>(4000, 1.0 / 4000))};
    EXPECT_THROW(sums_exact_pmf(huge), BudgetExceeded);
}

TEST(Distance, Examples) {
    const DistributionTable a{{0.2, 0.3, 0.5}, 0.0};
    const auto self = distance(a, a);
    EXPECT_EQ(self.d_k, 0.0);
    EXPECT_EQ(self.d_tv, 0.0);
    const auto apart = distance(DistributionTable{{1.0}, 0.0}, DistributionTable{{0.0, 1.0}, 0.0});
    EXPECT_EQ(apart.d_k, 1.0);
    EXPECT_EQ(apart.d_tv, 1.0);
    EXPECT_EQ(apart.argmax_y, 0u);
}

TEST(Distance, PoissonVersusCompoundPoissonRegression) {
    const auto po = cp_pmf(CompoundPoissonParams({1.0}), 1.0 - 1e-15);
    const auto cp = cp_pmf(CompoundPoissonParams({0.9, 0.05}), 1.0 - 1e-15);
    const auto r = distance(po, cp);
    // Frozen from a 40-digit evaluation of both cdfs.
    EXPECT_NEAR(r.d_k, 0.01886158228305888532, 1e-14);
    EXPECT_EQ(r.argmax_y, 0u);
    EXPECT_NEAR(r.d_tv, 0.027785074976314347023, 1e-13);
    EXPECT_LE(r.certified_slack, 2e-15);
}

TEST(Distance, SymmetryAndTriangle) {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto random_table = [&] {
        std::vector<double> v(1 + gen() % 12);
        double s = 0.0;
        for (auto& x : v) s += (x = u(gen));
        for (auto& x : v) x /= s;
        return DistributionTable{v, 0.0};
    };
    for (int i = 0; i < 300; ++i) {
        const auto a = random_table(), b = random_table(), c = random_table();
        const auto ab = distance(a, b), ba = distance(b, a);
        EXPECT_EQ(ab.d_k, ba.d_k);
        EXPECT_NEAR(ab.d_tv, ba.d_tv, 1e-15);
        EXPECT_LE(ab.d_k, ab.d_tv + 1e-15);
        EXPECT_LE(distance(a, c).d_k, ab.d_k + distance(b, c).d_k + 1e-15);
    }
}

TEST(Distance, McCarriesStandardError) {
    const ReliabilityModel m{4, 2, 0.3};
    const auto mc = reliability_mc_pmf(m, 100000, 5);
    const auto r = distance(mc, reliability_exact_pmf(m));
    EXPECT_GT(r.mc_stderr, 0.0);
    EXPECT_LE(r.d_k, 4 * r.mc_stderr + 1e-12);
}
