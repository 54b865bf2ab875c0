#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cpstein/applications.hpp"
#include "cpstein/stein_bounds.hpp"
#include "oracles.hpp"

using namespace cpstein;

namespace {

ThetaVector make_theta(std::vector<double> v) { return ThetaVector{std::move(v)}; }

ThetaVector random_theta(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> size(1, 5);
    std::uniform_real_distribution<double> rate(0.0, 3.0);
    std::vector<double> rates(static_cast<std::size_t>(size(gen)));
    for (auto& r : rates) r = rate(gen);
    rates[0] += 1e-3;
    return theta(CompoundPoissonParams(rates), 6);
}

} // namespace

TEST(BoundGeneral, Cases) {
    EXPECT_NEAR(bound_general(CompoundPoissonParams({0.0, 1.0})).m1, std::exp(1.0), 1e-15);
    EXPECT_NEAR(bound_general(CompoundPoissonParams({2.0, 1.0})).m1, 0.5 * std::exp(3.0), 1e-12);
    const auto tiny = bound_general(CompoundPoissonParams({1e-9}));
    EXPECT_NEAR(tiny.m1, 1.0, 1e-8);
    EXPECT_TRUE(tiny.applicable);
    EXPECT_EQ(tiny.m0, tiny.m1);
}

TEST(BoundMonotone, Cases) {
    const auto b = bound_monotone(CompoundPoissonParams({8.0}));
    ASSERT_TRUE(b.applicable);
    EXPECT_NEAR(b.m0, 0.5 / std::sqrt(std::numbers::e), 1e-15);
    EXPECT_NEAR(b.m1, 1.0 / 9.0, 1e-15);
    const auto small = bound_monotone(CompoundPoissonParams({0.1}));
    EXPECT_EQ(small.m0, 1.0);
    EXPECT_EQ(small.m1, 0.5);
    const auto off = bound_monotone(CompoundPoissonParams({1.0, 2.0}));
    EXPECT_FALSE(off.applicable);
    EXPECT_TRUE(std::isinf(off.m0) && std::isinf(off.m1));
}

TEST(BoundBx99, Cases) {
    const auto runs = bound_bx99(theta(runs_cp_params({100, 0.1}), 3));
    ASSERT_TRUE(runs.applicable);
    EXPECT_NEAR(runs.m1, 1.0 / 0.6, 1e-12);
    const auto single = bound_bx99(make_theta({4.0, 0.0}));
    EXPECT_EQ(single.m0, 0.5);
    EXPECT_EQ(single.m1, 0.25);
    const auto th = theta(runs_cp_params({100, 0.3}), 3);
    EXPECT_NEAR(th[0], 9.0, 1e-12);
    EXPECT_NEAR(th[1], 5.4, 1e-12);
    EXPECT_FALSE(bound_bx99(th).applicable);
}

TEST(GkEval, OrderOneIsConstant) {
    const auto th = make_theta({3.0, 0.7});
    for (double phi : {0.0, 0.3, 1.7, std::numbers::pi}) {
        for (double p : {0.0, 0.25, 1.0}) EXPECT_NEAR(g_k_eval(th, 1, phi, p).value, 3.0 - 1.4, 1e-14);
    }
}

TEST(GkEval, CornerOfOrderThree) {
    const auto th = make_theta({2.0, 0.5, 0.3, 0.1});
    EXPECT_NEAR(g_k_eval(th, 3, std::numbers::pi, 0.0).value, 2.0 - 1.0 + 0.6 - 0.4 / 3.0, 1e-14);
}

TEST(GkEval, MatchesClosedFormOfOrderThree) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u01(0.0, 1.0), angle(-std::numbers::pi, std::numbers::pi);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v{3 * u01(gen), 3 * u01(gen), 3 * u01(gen), 3 * u01(gen)};
        const double phi = angle(gen), p = u01(gen);
        const double closed = oracle::g3_closed_form(v, phi, p);
        const double generic = g_k_eval(make_theta(v), 3, phi, p).value;
        EXPECT_NEAR(generic, closed, 1e-12 * std::max(1.0, std::abs(closed)));
    }
}

TEST(GkEval, RemovableSingularities) {
    const auto th = make_theta({2.0, 0.5, 0.3, 0.1, 0.05});
    for (int k = 1; k <= 4; ++k) {
        const double at_zero = g_k_eval(th, k, 0.0, 0.3).value;
        const double near_zero = g_k_eval(th, k, 1e-7, 0.3).value;
        EXPECT_TRUE(std::isfinite(at_zero));
        EXPECT_NEAR(at_zero, near_zero, 1e-10);
        const double p_zero = g_k_eval(th, k, 1.0, 0.0).value;
        const double p_near = g_k_eval(th, k, 1.0, 1e-9).value;
        EXPECT_NEAR(p_zero, p_near, 1e-7);
    }
}

TEST(GkEval, EvenInPhi) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0), angle(0.0, std::numbers::pi);
    for (int i = 0; i < 500; ++i) {
        const auto th = random_theta(gen);
        const double phi = angle(gen), p = u01(gen);
        for (int k = 1; k <= 5; ++k) {
            EXPECT_EQ(g_k_eval(th, k, phi, p).value, g_k_eval(th, k, -phi, p).value);
        }
    }
}

TEST(GkEval, Errors) {
    EXPECT_THROW(g_k_eval(make_theta({1.0, 0.2}), 3, 0.1, 0.1), InvalidInput);
    EXPECT_THROW(g_k_eval(make_theta({1.0, 0.2}), 1, 0.1, 1.5), InvalidInput);
}

TEST(DeltaK, ClosedForms) {
    const auto k1 = delta_k(theta(runs_cp_params({100, 0.2}), 3), 1);
    EXPECT_NEAR(k1.delta, 0.8, 1e-12);
    EXPECT_TRUE(k1.certified);
    const auto k3 = delta_k(theta(runs_cp_params({100, 0.3}), 3), 3);
    EXPECT_NEAR(k3.delta, 1.44, 1e-12);
    EXPECT_TRUE(k3.certified);
    EXPECT_EQ(delta_k(make_theta({4.0, 0.0, 0.0}), 2).delta, 4.0);
}

TEST(DeltaK, GridAgreesWithClosedForms) {
    std::mt19937_64 gen(5);
    for (int i = 0; i < 40; ++i) {
        const auto th = random_theta(gen);
        for (int k = 1; k <= 3; ++k) {
            const auto closed = delta_k(th, k);
            if (!closed.certified) continue;
            const auto grid = delta_k_grid(th, k);
            EXPECT_NEAR(grid.delta, closed.delta, 1e-6 * std::max(1.0, std::abs(closed.delta)))
                << "k=" << k;
        }
    }
}

TEST(DeltaK, GridIsBelowEveryProbedPoint) {
    const auto th = theta(CompoundPoissonParams({0.8, 0.6, 0.5, 0.2}), 6);
    for (int k = 3; k <= 5; ++k) {
        const auto d = delta_k_grid(th, k, {65, 33, 1e-8});
        for (int i = 0; i < 65; ++i) {
            for (int j = 0; j < 33; ++j) {
                const double v = g_k_eval(th, k, std::numbers::pi * i / 64, j / 32.0).value;
                EXPECT_LE(d.delta, v);
            }
        }
    }
}

// The corner (pi,0) stops being the minimiser of g_3 once 5 theta2 > 2 theta1.
TEST(DeltaK, CornerNotMinimalForLargeTheta2) {
    const auto th = theta(runs_cp_params({100, 0.45}), 3);
    EXPECT_FALSE(cor3_corner_is_minimum(th));
    const auto d = delta_k(th, 3);
    EXPECT_FALSE(d.certified);
    EXPECT_LT(d.delta, 0.0);
    EXPECT_GT(cor3_corner_value(th), 0.0);
}

TEST(DeltaK, LambdaOneOnlyIsNonnegative) {
    for (double l : {0.1, 1.0, 7.5}) {
        const auto th = theta(CompoundPoissonParams({l}), 7);
        for (int k = 1; k <= 6; ++k) EXPECT_GE(delta_k(th, k).delta, 0.0) << k;
    }
}

TEST(DeltaK, ConditionOrdering) {
    std::mt19937_64 gen(17);
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        const auto th = random_theta(gen);
        EXPECT_LE(delta_k(th, 2).delta, th[0] - 2 * th[1] + 1e-12);
        if (th[2] < 2 * th[1] && 2 * th[3] < 3 * th[2]) {
            EXPECT_GE(cor3_corner_value(th), th[0] - 2 * th[1]);
            // The true infimum can fall below theta0 - 2 theta1, but never to a
            // non-positive value while theta0 > 2 theta1.
            if (th[0] > 2 * th[1]) {
                EXPECT_GT(delta_k_grid(th, 3).delta, 0.0);
            }
            if (cor3_corner_is_minimum(th)) {
                EXPECT_GE(delta_k(th, 3).delta, th[0] - 2 * th[1]);
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(BoundThm2, Values) {
    const auto th = theta(runs_cp_params({100, 0.3}), 3);
    const auto b = bound_thm2(th, 3);
    ASSERT_TRUE(b.applicable);
    EXPECT_NEAR(b.m0, 2.3570226039551584, 1e-12);
    EXPECT_NEAR(b.m1, 0.87131006924906577, 1e-12);
    const auto at_boundary = factors_from_delta(1.0 / std::numbers::pi, {BoundKind::Theorem2, 3}, "");
    EXPECT_NEAR(at_boundary.m1, std::numbers::pi / 2, 1e-15);
    EXPECT_FALSE(bound_thm2(theta(runs_cp_params({100, 0.5}), 3), 3).applicable);
}

TEST(BoundCor3, Runs) {
    for (double p : {0.05, 0.2, 0.3, 0.4}) {
        const RunsModel m{80, p};
        const auto th = theta(runs_cp_params(m), 3);
        EXPECT_LT(th[2], 2 * th[1]);
        const auto b = bound_cor3(th);
        ASSERT_TRUE(b.applicable);
        EXPECT_EQ(b.method.kind, BoundKind::Corollary3);
        EXPECT_NEAR(*b.delta, runs_delta(m), 1e-12 * runs_delta(m));
    }
}

TEST(BoundCor3, FallsBackToGridWhenCornerIsNotMinimal) {
    const ReliabilityModel m{20, 2, std::sqrt(0.2)};
    const auto th = theta(reliability_cp_params(m), 4);
    EXPECT_NEAR(cor3_corner_value(th) / m.psi(), 46.184, 1e-9);
    const auto b = bound_cor3(th);
    EXPECT_EQ(b.method.kind, BoundKind::Theorem2);
    ASSERT_TRUE(b.applicable);
    EXPECT_NEAR(*b.delta, delta_k_grid(th, 3).delta, 1e-12);
    EXPECT_LT(*b.delta, cor3_corner_value(th));
}

TEST(BoundCor3, SingleSize) {
    const auto b = bound_cor3(theta(CompoundPoissonParams({2.5}), 3));
    ASSERT_TRUE(b.applicable);
    EXPECT_DOUBLE_EQ(*b.delta, 2.5);
    EXPECT_NEAR(b.m1, (1 + std::log(2.5 * std::numbers::pi)) / 5.0, 1e-15);
}

TEST(BoundLemmaC, Cases) {
    const auto th = make_theta({2.0, 1.2});
    const double c = std::exp(3.0);
    const auto b = bound_lemma_c(th, c);
    ASSERT_TRUE(b.applicable);
    EXPECT_NEAR(*b.delta, 0.4 / (2 * c * std::sqrt(std::numbers::pi)), 1e-17);
    EXPECT_FALSE(bound_lemma_c(make_theta({2.0, 1.0}), c).applicable);
    EXPECT_FALSE(bound_lemma_c(th, 1.01).applicable);
    EXPECT_THROW(bound_lemma_c(th, 1.0), InvalidInput);
}

TEST(BoundThm4, Cases) {
    const auto b = bound_thm4(make_theta({1.0, 1.0}));
    ASSERT_TRUE(b.applicable);
    EXPECT_NEAR(*b.delta, 0.062943856065543396, 1e-15);
    EXPECT_FALSE(bound_thm4(make_theta({2.0, 1.0})).applicable);
}

TEST(BoundThm4, EqualsLemmaAtMatchingC) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> t0(0.05, 20.0), ex(1e-6, 6.0);
    for (int i = 0; i < 100; ++i) {
        const double a = t0(gen);
        const double excess = ex(gen);
        const auto th = make_theta({a, (a + excess) / 2});
        const auto thm = bound_thm4(th);
        const auto lem = bound_lemma_c(th, std::exp(1.5 * (2 * th[1] - th[0])));
        ASSERT_TRUE(lem.applicable);
        EXPECT_EQ(thm.m0, lem.m0);
        EXPECT_EQ(thm.m1, lem.m1);
    }
}

TEST(BestBound, RunsLowP) {
    const auto params = runs_cp_params({100, 0.1});
    const auto bounds = all_bounds(params);
    const auto best = best_of(bounds);
    const auto th = theta(params, 3);
    EXPECT_NEAR(bound_bx99(th).m1, 1.0 / 0.6, 1e-12);
    EXPECT_NEAR(bound_cor3(th).m1, (1 + std::log(0.64 * std::numbers::pi)) / 1.28, 1e-12);
    for (const auto& b : bounds) {
        if (b.applicable) {
            EXPECT_LE(best.m1, b.m1);
        }
    }
    EXPECT_LT(best.m1, bound_cor3(th).m1 + 1e-15);
}

TEST(BestBound, RunsHighP) {
    const auto params = runs_cp_params({100, 0.45});
    const auto th = theta(params, 4);
    EXPECT_FALSE(bound_bx99(th).applicable);
    EXPECT_FALSE(bound_monotone(params).applicable);
    EXPECT_TRUE(bound_thm4(th).applicable);
    EXPECT_GT(bound_general(params).m1, 1e3);
}

TEST(BestBound, TinyIntensity) {
    const CompoundPoissonParams p({0.05});
    const auto best = best_bound(p);
    EXPECT_EQ(best.m1, std::min(bound_general(p).m1, bound_monotone(p).m1));
    EXPECT_EQ(best.m1, 0.5);
}
