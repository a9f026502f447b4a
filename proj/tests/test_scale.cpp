#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "omega/mc.hpp"
#include "omega/scale.hpp"

using namespace omega;

namespace {

const LevyModel crash = calibrated_model(0.05, 0.0, 6, 2);
const LevyModel crash_sigma = calibrated_model(0.05, 0.2, 6, 2);
const LevyModel bs = LevyModel::from_mu(0.05, 0.2);

double sup_rel(const std::vector<double>& a, const std::vector<double>& b, std::size_t from = 0)
{
    double e = 0.0;
    for (std::size_t k = from; k < a.size(); ++k) e = std::max(e, std::abs(a[k] / b[k] - 1.0));
    return e;
}

// Z^{(q)}(x) = 1 + q int_0^x W^{(q)}, integrated term by term
double classical_z(const RootDecomposition& d, double q, double x)
{
    double s = 0.0;
    for (std::size_t i = 0; i < d.gammas.size(); ++i) s += d.upsilons[i] * std::expm1(d.gammas[i] * x) / d.gammas[i];
    return 1.0 + q * s;
}

} // namespace

TEST(ClassicalW, ValueAtZero)
{
    EXPECT_NEAR(classical_w(psi_roots(crash_sigma), 0.0), 0.0, 1e-14);
    EXPECT_NEAR(classical_w(psi_roots(bs), 0.0), 0.0, 1e-14);
    EXPECT_NEAR(classical_w(psi_roots(crash), 0.0), 1.0 / 2.05, 1e-14);
}

TEST(ClassicalW, LaplaceTransform)
{
    for (const auto& m : {crash, crash_sigma, bs}) {
        const auto d = psi_roots(m);
        const double th = 2.0 * phi_right_inverse(m, 0.0) + 1.0;
        // the integrand decays at least like e^{-x}; [0, 60] holds all but e^{-60} of the mass
        boost::math::quadrature::tanh_sinh<double> q;
        const double lt = q.integrate([&](double x) { return std::exp(-th * x) * classical_w(d, x); }, 0.0, 60.0);
        EXPECT_NEAR(lt, 1.0 / laplace_exponent(m, th), 1e-9 / laplace_exponent(m, th));
    }
}

TEST(RenewalW, ZeroKernelGivesW)
{
    for (const auto& m : {crash, crash_sigma}) {
        const auto d = psi_roots(m);
        const LogGrid g(3.0, 2001);
        const auto w = renewal_solve_w(d, [](double) { return 0.0; }, g);
        for (std::size_t k = 0; k < g.n; ++k) EXPECT_NEAR(w[k], d.w(g.x(k)), 1e-13 * (1 + d.w(g.x(k))));
    }
}

TEST(RenewalWZ, ConstantKernelMatchesClassicalQ)
{
    const double q = 0.07;
    for (const auto& m : {crash, crash_sigma, bs}) {
        const auto d = psi_roots(m), dq = psi_roots(m, q);
        const LogGrid g(3.0, 4001);
        auto xi = [q](double) { return q; };
        const auto w = renewal_solve_w(d, xi, g);
        const auto z = renewal_solve_z(d, xi, g);
        std::vector<double> wq(g.n), zq(g.n);
        for (std::size_t k = 0; k < g.n; ++k) wq[k] = dq.w(g.x(k)), zq[k] = classical_z(dq, q, g.x(k));
        EXPECT_LT(sup_rel(w, wq, 1), 1e-6);
        EXPECT_LT(sup_rel(z, zq), 1e-6);
        EXPECT_EQ(w[0], d.w0());
        EXPECT_EQ(z[0], 1.0);
    }
}

TEST(RenewalZ, ZeroKernelIsOne)
{
    const LogGrid g(3.0, 501);
    for (double v : renewal_solve_z(psi_roots(crash), [](double) { return 0.0; }, g)) EXPECT_EQ(v, 1.0);
}

TEST(RenewalW, SecondOrderConvergence)
{
    const auto d = psi_roots(crash_sigma);
    const LogDiscount xi(DiscountFn::linear(0.1));
    std::vector<double> at;
    for (std::size_t n : {301, 601, 1201}) {
        const LogGrid g(3.0, n);
        at.push_back(renewal_solve_w(d, xi, g)[(n - 1) / 3 * 2]);
    }
    const double ratio = (at[0] - at[1]) / (at[1] - at[2]);
    EXPECT_GT(ratio, 3.5);
    EXPECT_LT(ratio, 4.5);
}

TEST(RenewalW, RejectsSingularMarch)
{
    // W(0) = 1/mu: a huge discount makes the diagonal weight exceed one
    const auto d = psi_roots(crash);
    EXPECT_THROW(renewal_solve_w(d, [](double) { return 1e5; }, LogGrid(3.0, 21)), ValidationError);
}

TEST(RenewalH, FlatDiscountGivesExponential)
{
    const double c = 0.05;
    for (const auto& m : {crash, crash_sigma}) {
        const double pc = phi_right_inverse(m, c);
        const LogGrid g(3.0, 1001);
        const auto h = renewal_solve_h(psi_roots(m, c), [c](double) { return c; }, c, g, pc);
        EXPECT_EQ(h[0], 1.0);
        for (std::size_t k = 0; k < g.n; k += 50) EXPECT_NEAR(h[k], std::exp(pc * g.x(k)), 1e-12 * h[k]);
        // upward passage: H(x)/H(a) = exp(-Phi(c)(a - x))
        EXPECT_NEAR(h[400] / h[1000], std::exp(-pc * (g.x(1000) - g.x(400))), 1e-12);
    }
}

TEST(RenewalH, RejectsDiscountNotFlatBelowOrigin)
{
    const LogGrid g(3.0, 101);
    const LogDiscount xi(DiscountFn::linear(0.1));
    EXPECT_THROW(renewal_solve_h(psi_roots(crash, 0.05), xi, 0.05, g, phi_right_inverse(crash, 0.05)), ValidationError);
}

TEST(RenewalW2, ColumnsAndHomogeneity)
{
    const auto d = psi_roots(crash_sigma);
    const LogGrid g(2.0, 401);
    const LogDiscount xi(DiscountFn::linear(0.1));
    const auto w = renewal_solve_w(d, xi, g);
    const auto t = renewal_solve_w2(d, xi, g);
    for (std::size_t j = 0; j < g.n; ++j) EXPECT_EQ(t.at(j, 0), w[j]);
    for (std::size_t k = 0; k < g.n; k += 20) EXPECT_EQ(t.at(k, k), d.w0());

    const double q = 0.07;
    const LogGrid g2(3.0, 2001);
    const auto tq = renewal_solve_w2(d, [q](double) { return q; }, g2);
    const auto dq = psi_roots(crash_sigma, q);
    double e = 0.0;
    for (std::size_t k = 0; k < g2.n; k += 100)
        for (std::size_t j = k + 1; j < g2.n; j += 7) e = std::max(e, std::abs(tq.at(j, k) / dq.w(g2.x(j) - g2.x(k)) - 1));
    EXPECT_LT(e, 1e-6);
}

TEST(RatioLimit, ConstantKernel)
{
    const double q = 0.07;
    for (const auto& m : {crash, crash_sigma}) {
        ScaleOptions o;
        const auto t = build_scale_table(m, LogDiscount(DiscountFn::constant(q)), o);
        EXPECT_NEAR(t.c_zw, q / phi_right_inverse(m, q), 1e-6 * t.c_zw);
    }
}

TEST(RatioLimit, ZeroKernelWithGrowingW)
{
    // zeta < 0: W grows like e^{Phi(0) x} while Z stays 1
    const auto m = LevyModel::from_zeta(-0.05, 0.25);
    const auto t = build_scale_table(m, LogDiscount(DiscountFn::constant(0.0)));
    EXPECT_LT(std::abs(t.c_zw), 1e-6);
}

TEST(RatioLimit, ExitMassNonIncreasingOnTail)
{
    const auto t = build_scale_table(crash, LogDiscount(DiscountFn::linear(0.1), std::log(4.0)));
    const std::size_t n = t.grid.n;
    for (std::size_t k = n - n / 10; k + 1 < n; ++k)
        // allowance: rounding of the difference of two large numbers
        EXPECT_LE(t.z[k + 1] - t.c_zw * t.w[k + 1], t.z[k] - t.c_zw * t.w[k] + 64e-16 * t.z[k + 1] + 1e-9);
}

TEST(RatioLimit, ReportsNonConvergence)
{
    const LogGrid g(3.0, 101);
    std::vector<double> z(g.n), w(g.n, 1.0);
    for (std::size_t k = 0; k < g.n; ++k) z[k] = std::sin(10 * g.x(k));
    EXPECT_THROW(ratio_limit(z, w, g), ConvergenceError);
}

TEST(OdeCrash, ZeroKernelAndInitialData)
{
    const LogGrid g(3.0, 4001);
    const auto z0 = ode_solve_crash(crash, LogDiscount(DiscountFn::constant(0.0)), g, ScaleFn::Z);
    for (double v : z0) EXPECT_NEAR(v, 1.0, 1e-14);

    const double C = 0.1, lam = 6, mu = 2.05;
    const auto w = ode_solve_crash(crash, LogDiscount(DiscountFn::linear(C)), g, ScaleFn::W);
    EXPECT_NEAR(w[0], 1.0 / mu, 1e-15);
    const double h = g.h();
    const double slope = (-3 * w[0] + 4 * w[1] - w[2]) / (2 * h);
    EXPECT_NEAR(slope, (C + lam) / (mu * mu), 1e-5);
}

TEST(OdeCrash, RejectsStepDiscount)
{
    EXPECT_THROW(ode_solve_crash(crash, LogDiscount(DiscountFn::step(0.05, 0.01, 2.0)), LogGrid(3.0, 11), ScaleFn::W),
                 ValidationError);
}

TEST(OdeCrash, AgreesWithRenewal)
{
    const LogGrid g(3.0, 8001);
    const LogDiscount xi(DiscountFn::linear(0.1));
    const auto d = psi_roots(crash);
    EXPECT_LT(sup_rel(renewal_solve_w(d, xi, g), ode_solve_crash(crash, xi, g, ScaleFn::W)), 1e-6);
    EXPECT_LT(sup_rel(renewal_solve_z(d, xi, g), ode_solve_crash(crash, xi, g, ScaleFn::Z)), 1e-6);
}

TEST(OdeCrashSigma, InitialDataAndClassical)
{
    const LogGrid g(3.0, 4001);
    const auto w = ode_solve_crash_sigma(crash_sigma, LogDiscount(DiscountFn::linear(0.1)), g, ScaleFn::W);
    EXPECT_EQ(w[0], 0.0);
    const auto z0 = ode_solve_crash_sigma(crash_sigma, LogDiscount(DiscountFn::constant(0.0)), g, ScaleFn::Z);
    for (double v : z0) EXPECT_NEAR(v, 1.0, 1e-14);

    const double q = 0.07;
    const auto dq = psi_roots(crash_sigma, q);
    const LogDiscount xq(DiscountFn::constant(q));
    const auto wq = ode_solve_crash_sigma(crash_sigma, xq, g, ScaleFn::W);
    const auto zq = ode_solve_crash_sigma(crash_sigma, xq, g, ScaleFn::Z);
    double ew = 0.0, ez = 0.0;
    for (std::size_t k = 1; k < g.n; ++k) {
        ew = std::max(ew, std::abs(wq[k] / dq.w(g.x(k)) - 1));
        ez = std::max(ez, std::abs(zq[k] / classical_z(dq, q, g.x(k)) - 1));
    }
    EXPECT_LT(ew, 1e-6);
    EXPECT_LT(ez, 1e-6);
}

TEST(OdeCrashSigma, AgreesWithRenewal)
{
    const LogGrid g(3.0, 8001);
    const LogDiscount xi(DiscountFn::linear(0.1));
    const auto d = psi_roots(crash_sigma);
    EXPECT_LT(sup_rel(renewal_solve_w(d, xi, g), ode_solve_crash_sigma(crash_sigma, xi, g, ScaleFn::W), 1), 1e-6);
    EXPECT_LT(sup_rel(renewal_solve_z(d, xi, g), ode_solve_crash_sigma(crash_sigma, xi, g, ScaleFn::Z)), 1e-6);
}

TEST(Creeping, AbsentWithoutDiffusion)
{
    EXPECT_EQ(creeping_limit(crash, DiscountFn::constant(0.05), 10.0, 0.3), 0.0);
}

TEST(Creeping, ConstantDiscountMatchesClassicalDecomposition)
{
    const double r = 0.05;
    const auto m = calibrated_model(r, 0.2, 1.0, 2.0);
    const auto dq = psi_roots(m, r);
    const double pr = phi_right_inverse(m, r);
    const CreepingLadder lad(m, DiscountFn::constant(r), 1.0);
    for (double x : {0.02, 0.1, 0.5, 1.0}) {
        // E[e^{-r tau}; creep] = sigma^2/2 (W^{(r)}'(x) - Phi(r) W^{(r)}(x))
        const double classical = 0.02 * (dq.w_prime(x) - pr * dq.w(x));
        EXPECT_NEAR(lad(x), classical, 2e-4 * classical) << x;
    }
    // creeping becomes certain as x -> 0+: the ladder decreases away from the barrier and the
    // classical expression it matches tends to sigma^2/2 W'(0) = 1
    EXPECT_GT(lad(0.02), lad(0.1));
    EXPECT_GT(lad(0.1), lad(0.5));
    EXPECT_NEAR(0.02 * (dq.w_prime(1e-7) - pr * dq.w(1e-7)), 1.0, 1e-5);
}

TEST(Creeping, MatchesSimulatedFirstPassage)
{
    const double r = 0.05, u = 1.0, x = 0.1;
    const auto m = calibrated_model(r, 0.2, 1.0, 2.0);
    const auto fn = DiscountFn::constant(r);
    McOptions o;
    o.dt = 0.02;
    const auto reg = detail::region_of({0.0, u});
    const std::size_t n = 20000;
    std::vector<double> v(n);
    detail::parallel_for(n, detail::worker_count(0), [&](std::size_t i) {
        detail::PathRng rng(o.seed, i, false);
        PathSample rec;
        const auto out = detail::run_path(m, fn, u * std::exp(x), reg, o, 400.0, rng, &rec);
        v[i] = rec.stopped_at->reason == StopReason::creeped ? out.discount : 0.0;
    });
    double mean = 0.0, sq = 0.0;
    for (double a : v) mean += a;
    mean /= n;
    for (double a : v) sq += (a - mean) * (a - mean);
    const double se = std::sqrt(sq / (n - 1) / n);
    const double ladder = creeping_limit(m, fn, u, x);
    EXPECT_LT(std::abs(mean - ladder), 3 * se) << "mc " << mean << " se " << se << " ladder " << ladder;
}
