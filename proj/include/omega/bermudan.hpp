#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "discount.hpp"
#include "error.hpp"
#include "levy_model.hpp"
#include "mc.hpp"

// Bermudan put by backward induction on a uniform log-price grid.  One-step transition
// probabilities are cell masses of the increment law (Gaussian part, minus a Gamma(n, phi)
// sum for n jumps), so the kernel is a single translation-invariant stencil.

namespace omega {

struct BermudanGrid {
    double x_lo;
    double x_hi;
    std::size_t n;

    double h() const { return (x_hi - x_lo) / static_cast<double>(n - 1); }
    double x(std::size_t i) const { return x_lo + h() * static_cast<double>(i); }
};

inline BermudanGrid default_bermudan_grid(double K)
{
    return {std::log(K) - 3.0, std::log(K) + 4.0, 1401};
}

struct BermudanResult {
    std::vector<double> s;
    std::vector<double> value;
    std::size_t jump_terms = 0;     // jump counts kept per step
    double jump_tail = 0.0;         // Poisson mass of the dropped counts
    double stencil_mass = 0.0;      // total one-step mass before killing

    // linear interpolation in log s
    double at(double spot) const
    {
        const double x = std::log(spot);
        const double x0 = std::log(s.front()), x1 = std::log(s.back());
        require(x >= x0 && x <= x1, "BermudanResult: spot outside the grid");
        const double h = (x1 - x0) / static_cast<double>(s.size() - 1);
        auto i = std::min<std::size_t>(static_cast<std::size_t>((x - x0) / h), s.size() - 2);
        const double t = (x - x0) / h - static_cast<double>(i);
        return (1 - t) * value[i] + t * value[i + 1];
    }
};

namespace detail {

struct Stencil {
    long lo = 0;                 // offset of p[0]
    std::vector<double> p;
    std::size_t jump_terms = 0;
    double jump_tail = 0.0;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Cell masses of the increment X_dt - X_0 on offsets k*h.
inline Stencil increment_stencil(const LevyModel& m, double dt, double h)
{
    const double drift = m.zeta() * dt, sd = m.sigma() * std::sqrt(dt);
    // continuous part
    long g_lo, g_hi;
    std::vector<double> g;
    if (sd > 0.0) {
        g_lo = static_cast<long>(std::floor((drift - 9.0 * sd) / h));
        g_hi = static_cast<long>(std::ceil((drift + 9.0 * sd) / h));
        for (long k = g_lo; k <= g_hi; ++k) {
            const double a = (static_cast<double>(k) - 0.5) * h, b = (static_cast<double>(k) + 0.5) * h;
            g.push_back(normal_cdf((b - drift) / sd) - normal_cdf((a - drift) / sd));
        }
    } else {
        // deterministic shift split linearly between the two neighbouring nodes
        const double t = drift / h;
        g_lo = static_cast<long>(std::floor(t));
        g_hi = g_lo + 1;
        const double f = t - static_cast<double>(g_lo);
        g = {1.0 - f, f};
    }
    Stencil st;
    if (!m.has_jumps()) {
        st.lo = g_lo;
        st.p = std::move(g);
        return st;
    }
    // Poisson number of jumps, truncated adaptively (at least 3 terms beyond none)
    const double lt = m.lambda() * dt, sign = m.jump_sign() == JumpSign::down ? -1.0 : 1.0;
    std::vector<double> pois{std::exp(-lt)};
    double acc = pois[0];
    while ((1.0 - acc > 1e-13 || pois.size() < 4) && pois.size() < 400) {
        pois.push_back(pois.back() * lt / static_cast<double>(pois.size()));
        acc += pois.back();
    }
    st.jump_terms = pois.size() - 1;
    st.jump_tail = std::max(0.0, 1.0 - acc);
    // jump-sum masses q[j] on offsets j*h, j >= 0, mixed over the retained counts
    const auto nmax = static_cast<double>(pois.size() - 1);
    const double reach = boost::math::gamma_q_inv(nmax, 1e-15) / m.phi();
    const auto jn = static_cast<long>(std::ceil(reach / h)) + 1;
    std::vector<double> q(static_cast<std::size_t>(jn) + 1, 0.0);
    q[0] = pois[0];
    for (std::size_t n = 1; n < pois.size(); ++n) {
        const double a = static_cast<double>(n);
        double prev = 0.0;
        for (long j = 0; j <= jn; ++j) {
            const double edge = (static_cast<double>(j) + 0.5) * h;
            const double cur = boost::math::gamma_p(a, m.phi() * edge);
            q[static_cast<std::size_t>(j)] += pois[n] * (cur - prev);
            prev = cur;
        }
    }
    // convolve: offset = g offset + sign * j
    const long lo = sign < 0 ? g_lo - jn : g_lo;
    const long hi = sign < 0 ? g_hi : g_hi + jn;
    st.lo = lo;
    st.p.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (long a = g_lo; a <= g_hi; ++a) {
        const double ga = g[static_cast<std::size_t>(a - g_lo)];
        if (ga == 0.0) continue;
        for (long j = 0; j <= jn; ++j) {
            const long k = a + static_cast<long>(sign) * j;
            st.p[static_cast<std::size_t>(k - lo)] += ga * q[static_cast<std::size_t>(j)];
        }
    }
    return st;
}

} // namespace detail

// Bermudan put with exercise dates n*T/2^xi, n = 1..2^xi (none at t = 0).
inline BermudanResult bermudan_dp(const LevyModel& m, const DiscountFn& w, double K, double t_horizon,
                                  int xi, BermudanGrid grid, unsigned threads = 0)
{
    require(t_horizon > 0.0 && xi >= 0 && xi <= 20, "bermudan_dp: needs T > 0 and 0 <= xi <= 20");
    require(grid.n >= 3 && grid.x_hi > grid.x_lo, "bermudan_dp: bad grid");
    require(m.spectrally_negative() || m.has_jumps(), "bermudan_dp: unsupported model");
    const std::size_t dates = std::size_t{1} << xi;
    const double dt = t_horizon / static_cast<double>(dates), h = grid.h();
    const auto st = detail::increment_stencil(m, dt, h);
    const std::size_t n = grid.n;

    BermudanResult res;
    res.jump_terms = st.jump_terms;
    res.jump_tail = st.jump_tail;
    for (double v : st.p) res.stencil_mass += v;
    if (std::abs(res.stencil_mass + st.jump_tail - 1.0) > 1e-8)
        throw ConvergenceError("bermudan_dp: one-step masses do not sum to 1");

    std::vector<double> payoff(n), om(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::exp(grid.x(i));
        res.s.push_back(s);
        payoff[i] = std::max(K - s, 0.0);
    }
    // midpoint discount factors exp(-dt * omega(e^{(x_i + x_j)/2})) indexed by 2i + k
    const long lo = st.lo, len = static_cast<long>(st.p.size());
    std::vector<double> disc(2 * n + static_cast<std::size_t>(std::max(0L, 2 * len)) + 4);
    const long base = -lo + 2;  // disc index = 2i + k + base
    for (std::size_t q = 0; q < disc.size(); ++q) {
        const double x = grid.x_lo + 0.5 * h * (static_cast<double>(q) - static_cast<double>(base));
        disc[q] = std::exp(-dt * w(std::exp(x)));
    }
    auto ext = [&](const std::vector<double>& v, long j) {
        if (j < 0) return std::max(K - std::exp(grid.x_lo + h * static_cast<double>(j)), 0.0);
        if (j >= static_cast<long>(n)) return 0.0;
        return v[static_cast<std::size_t>(j)];
    };
    std::vector<double> v = payoff, next(n);
    const unsigned nt = detail::worker_count(threads);
    for (std::size_t d = dates; d-- > 0;) {
        detail::parallel_for(n, nt, [&](std::size_t i) {
            double acc = 0.0;
            for (long k = 0; k < len; ++k) {
                const long off = lo + k;
                const long j = static_cast<long>(i) + off;
                acc += st.p[static_cast<std::size_t>(k)] * ext(v, j) *
                       disc[static_cast<std::size_t>(2 * static_cast<long>(i) + off + base)];
            }
            next[i] = d > 0 ? std::max(acc, payoff[i]) : acc;
        });
        v.swap(next);
    }
    res.value = std::move(v);
    return res;
}

} // namespace omega
