#include <cmath>

#include <gtest/gtest.h>

#include "omega/levy_model.hpp"

using namespace omega;

namespace {

// psi evaluated straight from its definition
double psi_ref(double zeta, double sigma, double lambda, double phi, double t)
{
    return zeta * t + 0.5 * sigma * sigma * t * t - lambda * t / (phi + t);
}

// psi(t) (phi + t): free of the pole, valid for every real t
double psi_cleared(const LevyModel& m, double t)
{
    return (m.zeta() * t + 0.5 * m.sigma() * m.sigma() * t * t) * (m.phi() + t) - m.lambda() * t;
}

} // namespace

TEST(LaplaceExponent, VanishesAtZero)
{
    EXPECT_EQ(laplace_exponent(LevyModel::from_zeta(0.3, 0.2, 6, 2), 0.0), 0.0);
    EXPECT_EQ(laplace_exponent(LevyModel::from_zeta(2.05, 0.0, 6, 2), 0.0), 0.0);
}

TEST(LaplaceExponent, CrashModelAtOne)
{
    EXPECT_NEAR(laplace_exponent(LevyModel::from_zeta(2.05, 0.0, 6, 2), 1.0), 0.05, 1e-14);
}

TEST(LaplaceExponent, BlackScholesAtTwo)
{
    EXPECT_NEAR(laplace_exponent(LevyModel::from_zeta(0.03, 0.2), 2.0), 0.14, 1e-14);
}

TEST(LaplaceExponent, MatchesDefinitionAndIsConvex)
{
    const auto m = LevyModel::from_zeta(0.1, 0.3, 4, 1.5);
    double prev2 = 0.0, prev1 = laplace_exponent(m, 0.0);
    for (int i = 1; i <= 200; ++i) {
        const double t = 0.05 * i;
        const double v = laplace_exponent(m, t);
        EXPECT_NEAR(v, psi_ref(0.1, 0.3, 4, 1.5, t), 1e-13 * (1 + std::abs(v)));
        if (i >= 2) {
            EXPECT_GT(v - 2 * prev1 + prev2, 0.0);
        }
        prev2 = prev1;
        prev1 = v;
    }
}

TEST(LaplaceExponent, RejectsThetaAtOrBelowMinusPhi)
{
    const auto m = LevyModel::from_zeta(0.1, 0.3, 4, 1.5);
    EXPECT_THROW(laplace_exponent(m, -1.5), ValidationError);
    EXPECT_THROW(laplace_exponent(m, -2.0), ValidationError);
}

TEST(LevyModel, ZetaIsMuMinusHalfSigmaSquared)
{
    const auto m = LevyModel::from_mu(0.07, 0.3);
    EXPECT_DOUBLE_EQ(m.zeta(), 0.07 - 0.045);
    EXPECT_THROW(LevyModel::from_mu(0.05, 0.0), ValidationError);
    EXPECT_THROW(LevyModel::from_mu(0.05, -0.1), ValidationError);
}

TEST(PhiRightInverse, InvertsBlackScholesExample)
{
    EXPECT_NEAR(phi_right_inverse(LevyModel::from_zeta(0.03, 0.2), 0.14), 2.0, 1e-10);
}

TEST(PhiRightInverse, ZeroWhenPsiIncreasingAtOrigin)
{
    EXPECT_EQ(phi_right_inverse(LevyModel::from_zeta(0.03, 0.2), 0.0), 0.0);
}

TEST(PhiRightInverse, DefiningPropertyAndMonotone)
{
    for (const auto& m : {LevyModel::from_zeta(0.03, 0.2), LevyModel::from_zeta(-0.05, 0.25),
                          calibrated_model(0.05, 0.0, 6, 2), calibrated_model(0.05, 0.2, 6, 2)}) {
        double last = -1.0;
        for (double q : {0.0, 0.01, 0.05, 0.3, 1.0, 5.0}) {
            const double t = phi_right_inverse(m, q);
            EXPECT_LT(std::abs(laplace_exponent(m, t) - q), 1e-12);
            EXPECT_GE(t, last);
            last = t;
        }
    }
}

TEST(PhiRightInverse, LargestRootWhenPsiDips)
{
    // zeta < 0: psi has a second zero at -2 zeta / sigma^2
    const auto m = LevyModel::from_zeta(-0.05, 0.25);
    EXPECT_NEAR(phi_right_inverse(m, 0.0), 0.1 / 0.0625, 1e-10);
}

TEST(PhiRightInverse, InvertsPsiAboveItsZero)
{
    const auto m = calibrated_model(0.05, 0.2, 6, 2);
    const double t0 = phi_right_inverse(m, 0.0);
    for (double t = t0; t < t0 + 10; t += 0.37) EXPECT_NEAR(phi_right_inverse(m, laplace_exponent(m, t)), t, 1e-10);
}

TEST(PsiRoots, CrashModelClosedForm)
{
    const double mu = 2.05, lam = 6, phi = 2;
    const auto d = psi_roots(LevyModel::from_mu(mu, 0.0, lam, phi));
    ASSERT_EQ(d.gammas.size(), 2u);
    EXPECT_EQ(d.gammas[0], 0.0);
    EXPECT_NEAR(d.gammas[1], (lam - phi * mu) / mu, 1e-12);
    EXPECT_NEAR(d.gammas[1], 0.92683, 1e-5);
    EXPECT_NEAR(d.upsilons[0], -phi / (lam - phi * mu), 1e-12);
    EXPECT_NEAR(d.upsilons[0], -1.05263, 1e-5);
    // lambda / (mu (lambda - phi mu)) = 1.540436...
    EXPECT_NEAR(d.upsilons[1], lam / (mu * (lam - phi * mu)), 1e-12);
    EXPECT_NEAR(d.upsilons[0] + d.upsilons[1], 1.0 / mu, 1e-12);
}

TEST(PsiRoots, DiffusiveModelSumsToZero)
{
    for (const auto& m : {calibrated_model(0.05, 0.2, 6, 2), LevyModel::from_mu(0.05, 0.2)}) {
        const auto d = psi_roots(m);
        EXPECT_EQ(d.gammas[0], 0.0);
        EXPECT_EQ(d.gammas.size(), m.has_jumps() ? 3u : 2u);
        EXPECT_NEAR(d.w0(), 0.0, 1e-12);
        for (double g : d.gammas) EXPECT_LT(std::abs(psi_cleared(m, g)), 1e-10) << g;
        // the trivial root first, the others ascending
        for (std::size_t i = 2; i < d.gammas.size(); ++i) EXPECT_LT(d.gammas[i - 1], d.gammas[i]);
    }
}

TEST(PsiRoots, RejectsRootCollision)
{
    // sigma = 0 and lambda = phi mu
    EXPECT_THROW(psi_roots(LevyModel::from_mu(3.0, 0.0, 6, 2)), ValidationError);
}

TEST(PsiRoots, ShiftedRootsSolvePsiEqualsQ)
{
    const auto m = calibrated_model(0.05, 0.2, 6, 2);
    const auto d = psi_roots(m, 0.05);
    EXPECT_EQ(d.gammas.size(), 3u);
    for (double g : d.gammas) EXPECT_NEAR(psi_cleared(m, g), 0.05 * (m.phi() + g), 1e-10);
    EXPECT_NEAR(d.gammas.back(), phi_right_inverse(m, 0.05), 1e-9);
}

TEST(EsscherTilt, ZeroIsIdentity)
{
    const auto m = calibrated_model(0.05, 0.2, 6, 2);
    const auto t = esscher_tilt(m, 0.0);
    EXPECT_EQ(t.zeta(), m.zeta());
    EXPECT_EQ(t.lambda(), m.lambda());
    EXPECT_EQ(t.phi(), m.phi());
}

TEST(EsscherTilt, ParameterMap)
{
    const auto t = esscher_tilt(LevyModel::from_zeta(0.03, 0.2, 6, 2), 1.0);
    EXPECT_NEAR(t.zeta(), 0.07, 1e-15);
    EXPECT_NEAR(t.lambda(), 4.0, 1e-15);
    EXPECT_NEAR(t.phi(), 3.0, 1e-15);
    EXPECT_EQ(t.sigma(), 0.2);
}

TEST(EsscherTilt, TiltedExponentAndComposition)
{
    const auto m = LevyModel::from_zeta(0.03, 0.2, 6, 2);
    const double a = 0.7, b = 1.9;
    const auto ta = esscher_tilt(m, a);
    for (double th = 0; th <= 5.0; th += 0.1)
        EXPECT_NEAR(laplace_exponent(ta, th), laplace_exponent(m, th + a) - laplace_exponent(m, a), 1e-12);
    const auto tab = esscher_tilt(ta, b), tsum = esscher_tilt(m, a + b);
    EXPECT_NEAR(tab.zeta(), tsum.zeta(), 1e-12);
    EXPECT_NEAR(tab.lambda(), tsum.lambda(), 1e-12);
    EXPECT_NEAR(tab.phi(), tsum.phi(), 1e-12);
}

TEST(MartingaleDrift, Examples)
{
    EXPECT_NEAR(martingale_drift(0.05, 6, 2), 2.05, 1e-15);
    EXPECT_EQ(martingale_drift(0.05, 0, 7.3), 0.05);
    for (double sig : {0.0, 0.2})
        EXPECT_NEAR(laplace_exponent(calibrated_model(0.05, sig, 6, 2), 1.0), 0.05, 1e-12);
    EXPECT_NEAR(laplace_exponent(calibrated_model(0.05, 0.2), 1.0), 0.05, 1e-12);
}
