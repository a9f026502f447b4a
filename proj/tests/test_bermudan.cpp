#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "omega/bermudan.hpp"
#include "omega/pricer.hpp"

using namespace omega;

namespace {

const double K = 20.0;

double bs_put(double s, double r, double sig, double T)
{
    const double d1 = (std::log(s / K) + (r + sig * sig / 2) * T) / (sig * std::sqrt(T)), d2 = d1 - sig * std::sqrt(T);
    auto N = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    return K * std::exp(-r * T) * N(-d2) - s * N(-d1);
}

} // namespace

TEST(Bermudan, EuropeanMatchesBlackScholes)
{
    const auto e = bermudan_dp(LevyModel::from_mu(0.05, 0.2), DiscountFn::constant(0.05), K, 1.0, 0, default_bermudan_grid(K));
    for (double s : {16.0, 20.0, 24.0}) EXPECT_NEAR(e.at(s), bs_put(s, 0.05, 0.2, 1.0), 1e-3);
}

TEST(Bermudan, EuropeanWithJumpsMatchesSimulation)
{
    const auto m = calibrated_model(0.05, 0.2, 6, 2);
    const auto e = bermudan_dp(m, DiscountFn::constant(0.05), K, 1.0, 0, default_bermudan_grid(K));
    const std::size_t n = 40000;
    std::vector<double> v(n);
    detail::parallel_for(n, detail::worker_count(0), [&](std::size_t i) {
        const double s = K * std::exp(simulate_path(m, DiscountFn::constant(0.0), 1.0, 0.05, 1.0, i).logprices.back());
        v[i] = std::exp(-0.05) * std::max(K - s, 0.0);
    });
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double sq = 0.0;
    for (double a : v) sq += (a - mean) * (a - mean);
    const double se = std::sqrt(sq / (n - 1) / n);
    EXPECT_LT(std::abs(e.at(K) - mean), 3 * se + 1e-3);
}

TEST(Bermudan, StencilMassAndTruncation)
{
    const auto e = bermudan_dp(calibrated_model(0.05, 0.2, 6, 2), DiscountFn::constant(0.05), K, 1.0, 2, default_bermudan_grid(K));
    EXPECT_GE(e.jump_terms, 3u);
    EXPECT_LT(e.jump_tail, 1e-10);
    EXPECT_NEAR(e.stencil_mass + e.jump_tail, 1.0, 1e-8);
}

TEST(Bermudan, ConvexInSpot)
{
    const auto r = bermudan_dp(LevyModel::from_mu(0.05, 0.2), DiscountFn::constant(0.05), K, 5.0, 4, default_bermudan_grid(K));
    const double vmax = *std::max_element(r.value.begin(), r.value.end());
    for (std::size_t i = 1; i + 1 < r.s.size(); ++i) {
        const double hl = r.s[i] - r.s[i - 1], hr = r.s[i + 1] - r.s[i];
        const double d2 = (r.value[i + 1] - r.value[i]) / hr - (r.value[i] - r.value[i - 1]) / hl;
        EXPECT_GE(d2, -1e-8 * vmax) << "at s = " << r.s[i];
    }
}

TEST(Bermudan, DiagonalIncreasesTowardPerpetual)
{
    const auto m = LevyModel::from_mu(0.05, 0.2);
    const auto w = DiscountFn::constant(0.05);
    const double u = K * 2.5 / 3.5;
    const auto g = default_bermudan_grid(K);
    const auto a = bermudan_dp(m, w, K, 5, 4, g), b = bermudan_dp(m, w, K, 10, 6, g), c = bermudan_dp(m, w, K, 20, 8, g);
    for (double s : {16.0, 18.0, 20.0, 24.0, 30.0}) {
        EXPECT_LE(a.at(s), b.at(s) + 1e-3);
        EXPECT_LE(b.at(s), c.at(s) + 1e-3);
        EXPECT_LE(c.at(s), (K - u) * std::pow(s / u, -2.5) + 1e-3);
    }
}

TEST(Bermudan, Validation)
{
    const auto m = LevyModel::from_mu(0.05, 0.2);
    EXPECT_THROW(bermudan_dp(m, DiscountFn::constant(0.05), K, 0.0, 2, default_bermudan_grid(K)), ValidationError);
    EXPECT_THROW(bermudan_dp(m, DiscountFn::constant(0.05), K, 1.0, -1, default_bermudan_grid(K)), ValidationError);
}
