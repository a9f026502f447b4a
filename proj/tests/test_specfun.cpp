#include <cmath>

#include <gtest/gtest.h>

#include "omega/scale.hpp"
#include "omega/specfun.hpp"

using namespace omega;

TEST(Gauss2F1, AtZero) { EXPECT_EQ(gauss_2f1(0.3, -1.7, 2.2, 0.0), 1.0); }

TEST(Gauss2F1, LogIdentity)
{
    EXPECT_NEAR(gauss_2f1(1, 1, 2, -1.0), std::log(2.0), 1e-12);
    for (double x : {0.1, 0.4, 0.9, 3.0, 19.0}) EXPECT_NEAR(gauss_2f1(1, 1, 2, -x), std::log1p(x) / x, 1e-11);
}

TEST(Gauss2F1, PowerIdentity)
{
    // 2F1(a, b; b; x) = (1 - x)^{-a}
    for (double x : {-15.0, -2.0, -0.6, -0.3, 0.4}) EXPECT_NEAR(gauss_2f1(0.7, 1.3, 1.3, x), std::pow(1 - x, -0.7), 1e-11);
}

TEST(Gauss2F1, DerivativeContiguousRelation)
{
    const double a = 0.8, b = -1.4, c = 2.3, h = 1e-5;
    for (double x : {-12.0, -3.0, -0.7, -0.2, 0.3}) {
        const double fd = (gauss_2f1(a, b, c, x + h) - gauss_2f1(a, b, c, x - h)) / (2 * h);
        const double ex = a * b / c * gauss_2f1(a + 1, b + 1, c + 1, x);
        EXPECT_NEAR(fd, ex, 1e-6 * (1 + std::abs(ex)));
    }
}

TEST(Gauss2F1, HypergeometricOdeResidual)
{
    const double a = 0.8, b = -1.4, c = 2.3;
    for (double x : {-8.0, -1.5, -0.4, 0.2}) {
        const double f = gauss_2f1(a, b, c, x);
        const double f1 = a * b / c * gauss_2f1(a + 1, b + 1, c + 1, x);
        const double f2 = a * (a + 1) * b * (b + 1) / (c * (c + 1)) * gauss_2f1(a + 2, b + 2, c + 2, x);
        const double res = x * (1 - x) * f2 + (c - (a + b + 1) * x) * f1 - a * b * f;
        EXPECT_LT(std::abs(res), 1e-8 * (1 + std::abs(f)));
    }
}

TEST(Gauss2F1, RejectsPoleAndDomain)
{
    EXPECT_THROW(gauss_2f1(1, 1, -2.0, 0.3), ValidationError);
    EXPECT_THROW(gauss_2f1(1, 1, 2.0, 1.0), ValidationError);
}

TEST(Kummer1F1, Identities)
{
    for (double x : {-3.0, 0.5, 7.0, 30.0}) EXPECT_NEAR(kummer_1f1(1.7, 1.7, x), std::exp(x), 1e-10 * std::exp(x));
    EXPECT_EQ(kummer_1f1(0.3, 2.1, 0.0), 1.0);
    EXPECT_THROW(kummer_1f1(1.0, 0.0, 1.0), ValidationError);
}

TEST(Kummer1F1, LargeArgumentAsymptotic)
{
    // a = 1: the leading term is exact up to exponentially small corrections
    EXPECT_NEAR(kummer_1f1(1.0, 2.5, 40.0) / kummer_asymptotic(1.0, 2.5, 40.0), 1.0, 1e-3);
    // general a: the leading term carries the 1 + (1-a)(b-a)/x correction
    const double a = 1.3, b = 2.9, x = 40.0;
    EXPECT_NEAR(kummer_1f1(a, b, x) / kummer_asymptotic(a, b, x), 1.0 + (1 - a) * (b - a) / x, 1e-3);
    EXPECT_LT(std::abs(kummer_1f1(a, b, 200.0) / kummer_asymptotic(a, b, 200.0) - 1),
              std::abs(kummer_1f1(a, b, x) / kummer_asymptotic(a, b, x) - 1));
}

TEST(Kummer1F1, KummerOdeResidual)
{
    const double a = 0.6, b = 1.8;
    for (double x : {0.3, 2.0, 9.0, 25.0}) {
        const double f = kummer_1f1(a, b, x);
        const double f1 = a / b * kummer_1f1(a + 1, b + 1, x);
        const double f2 = a * (a + 1) / (b * (b + 1)) * kummer_1f1(a + 2, b + 2, x);
        EXPECT_LT(std::abs(x * f2 + (b - x) * f1 - a * f), 1e-8 * (1 + std::abs(f)));
    }
}

TEST(GammaFn, AgainstStdTgamma)
{
    for (double x : {0.1, 0.5, 1.0, 2.5, 7.3, 15.0, -0.5, -2.3}) EXPECT_NEAR(gamma_fn(x) / std::tgamma(x), 1.0, 1e-13);
}

TEST(KummerRatioLimit, IdenticalWeightsGiveOne)
{
    KummerPair p{{{1.0, 0.0}, 0.7, 1.9}, {{0.4, 0.2}, 1.3, 2.2}, 0.5};
    EXPECT_NEAR(kummer_ratio_limit(p, p), 1.0, 1e-15);
}

TEST(KummerRatioLimit, LinearInNumerator)
{
    KummerPair p{{{1.0, 0.0}, 0.7, 1.9}, {{0.4, 0.2}, 1.3, 2.2}, 0.5};
    KummerPair q = p;
    q.first.weight *= 2.0;
    q.second.weight *= 2.0;
    EXPECT_NEAR(kummer_ratio_limit(q, p), 2.0, 1e-14);
}

TEST(KummerRatioLimit, CrashExampleMatchesNumericalTail)
{
    const auto m = calibrated_model(0.05, 0.0, 6, 2);
    const KummerCrashScale ks(m, 0.1);
    const auto t = build_scale_table(m, LogDiscount(DiscountFn::linear(0.1)), ScaleOptions{});
    EXPECT_NEAR(ks.c(), t.c_zw, 1e-4 * std::abs(t.c_zw));
    for (double x : {0.5, 1.0, 2.0}) EXPECT_LT(ks.imag_residue(x), 1e-10);
    EXPECT_NEAR(ks.w(1.0), t.w_at(1.0), 1e-6 * t.w_at(1.0));
}
