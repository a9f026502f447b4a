#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "discount.hpp"
#include "error.hpp"
#include "levy_model.hpp"
#include "ode.hpp"

// Solutions of  sigma^2 s^2/2 h'' + mu s h' - omega(s) h = 0  (pure diffusion).
// In x = log s with Y = d log h / dx the equation becomes the Riccati ODE
//   Y' = (2/sigma^2)(omega(e^x) - zeta Y) - Y^2,
// and tables hold (log h, Y) so nothing overflows.

namespace omega {

enum class UpperBranch { automatic, frobenius_at_zero, minimal_at_infinity };

inline const char* to_string(UpperBranch b)
{
    switch (b) {
    case UpperBranch::automatic: return "auto";
    case UpperBranch::frobenius_at_zero: return "frobenius_at_zero";
    case UpperBranch::minimal_at_infinity: return "minimal_at_infinity";
    }
    return "?";
}

// Roots of sigma^2/2 d^2 + zeta d - w = 0, larger first; nullopt if complex.
inline std::optional<std::pair<double, double>> indicial_roots(double sigma, double zeta, double w)
{
    const double a = 0.5 * sigma * sigma;
    const double disc = zeta * zeta + 4.0 * a * w;
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    // stable quadratic formula
    const double q = -0.5 * (zeta + std::copysign(sq, zeta));
    double r1 = q / a, r2 = q != 0.0 ? -w / q : -zeta / a;
    if (q == 0.0) r1 = r2 = 0.0;
    return std::make_pair(std::max(r1, r2), std::min(r1, r2));
}

// h(s) = s^d sum c_n s^n around s = 0.
class FrobeniusSeries {
public:
    FrobeniusSeries(const LevyModel& m, const TaylorAtZero& t, double d, double s_eval)
        : d_(d), radius_(t.radius)
    {
        require(s_eval < t.radius, "FrobeniusSeries: evaluation point outside the radius");
        const double a = 0.5 * m.sigma() * m.sigma();
        auto P = [&](double e) { return a * e * (e - 1.0) + m.mu() * e; };
        const double w0 = t.coef[0];
        c_.push_back(1.0);
        double sum = 1.0, pw = 1.0;
        int quiet = 0;
        for (int n = 1; n < 2000; ++n) {
            double acc = 0.0;
            for (int j = 1; j <= n && j < static_cast<int>(t.coef.size()); ++j)
                acc += t.coef[static_cast<std::size_t>(j)] * c_[static_cast<std::size_t>(n - j)];
            const double den = P(d + n) - w0;
            if (std::abs(den) < 1e-12 * (1.0 + std::abs(w0)))
                throw ConvergenceError("FrobeniusSeries: resonant exponents (integer gap)");
            c_.push_back(acc / den);
            pw *= s_eval;
            const double term = std::abs(c_.back()) * pw;
            sum += term;
            if (term < 1e-18 * sum) {
                if (++quiet == 3) return;
            } else {
                quiet = 0;
            }
        }
        throw ConvergenceError("FrobeniusSeries: no convergence at the evaluation point");
    }

    double exponent() const { return d_; }
    double radius() const { return radius_; }

    double log_h(double s) const
    {
        double v = series(s, false);
        if (!(v > 0.0)) throw ConvergenceError("FrobeniusSeries: series not positive");
        return d_ * std::log(s) + std::log(v);
    }
    // s h'(s)/h(s)
    double dlog(double s) const { return d_ + series(s, true) / series(s, false); }

private:
    double series(double s, bool derivative) const
    {
        double acc = 0.0, pw = 1.0;
        for (std::size_t n = 0; n < c_.size(); ++n) {
            acc += (derivative ? static_cast<double>(n) : 1.0) * c_[n] * pw;
            pw *= s;
        }
        return acc;
    }

    double d_, radius_;
    std::vector<double> c_;
};

// Tabulated positive solution on a uniform x-grid.
class HBranch {
public:
    HBranch() = default;
    HBranch(double x0, double dx, std::vector<double> L, std::vector<double> Y, const LevyModel& m,
            const DiscountFn& w)
        : x0_(x0), dx_(dx), L_(std::move(L)), Y_(std::move(Y)), sigma_(m.sigma()), zeta_(m.zeta()),
          omega_(std::make_shared<DiscountFn>(w))
    {
    }

    double x_min() const { return x0_; }
    double x_max() const { return x0_ + dx_ * static_cast<double>(L_.size() - 1); }
    std::size_t size() const { return L_.size(); }
    double node(std::size_t k) const { return x0_ + dx_ * static_cast<double>(k); }
    const std::vector<double>& log_table() const { return L_; }
    const std::vector<double>& slope_table() const { return Y_; }

    // Riccati right-hand side, i.e. dY/dx
    double dY(double x, double y) const
    {
        return 2.0 / (sigma_ * sigma_) * ((*omega_)(std::exp(x)) - zeta_ * y) - y * y;
    }

    // log h at s; below the table the local power law is continued
    double log_h(double s) const
    {
        const double x = std::log(s);
        if (x <= x_min()) return L_.front() + Y_.front() * (x - x_min());
        if (x >= x_max()) return L_.back() + Y_.back() * (x - x_max());
        auto [k, t] = locate(x);
        // cubic Hermite with slopes Y
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * L_[k] + h10 * dx_ * Y_[k] + h01 * L_[k + 1] + h11 * dx_ * Y_[k + 1];
    }

    // s h'(s)/h(s)
    double dlog(double s) const
    {
        const double x = std::log(s);
        if (x <= x_min()) return Y_.front();
        if (x >= x_max()) return Y_.back();
        auto [k, t] = locate(x);
        const double x0 = node(k), x1 = node(k + 1);
        const double m0 = dY(x0, Y_[k]), m1 = dY(x1, Y_[k + 1]);
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * Y_[k] + h10 * dx_ * m0 + h01 * Y_[k + 1] + h11 * dx_ * m1;
    }

    double ratio(double s, double b) const { return std::exp(log_h(s) - log_h(b)); }

private:
    std::pair<std::size_t, double> locate(double x) const
    {
        double t = (x - x0_) / dx_;
        auto k = static_cast<std::size_t>(std::floor(t));
        if (k >= L_.size() - 1) k = L_.size() - 2;
        return {k, t - static_cast<double>(k)};
    }

    double x0_ = 0.0, dx_ = 1.0;
    std::vector<double> L_, Y_;
    double sigma_ = 1.0, zeta_ = 0.0;
    std::shared_ptr<const DiscountFn> omega_;
};

struct HOdeOptions {
    double s_min = 0.0;  // 0: 1e-4 s_max
    double s_max = 100.0;
    double dx = 0.005;
    UpperBranch upper = UpperBranch::automatic;
    double tol = 1e-12;
    double s_match = 0.5;  // largest series evaluation point (capped at half the radius)
};

struct HSolution {
    HBranch lower;  // increasing branch, vanishing (or smallest) at 0
    HBranch upper;  // branch used above the stopping set
    UpperBranch upper_rule = UpperBranch::automatic;
    std::optional<std::pair<double, double>> exponents_zero;      // d+, d-
    std::optional<std::pair<double, double>> exponents_infinity;  // e+, e-
    std::vector<std::string> warnings;
};

namespace detail {

struct RiccatiRun {
    std::vector<double> L, Y;
};

// Integrate (Y, L) from x_start over the grid nodes in the direction of the nodes.
inline RiccatiRun riccati_run(const LevyModel& m, const DiscountFn& w, double x_start, double y0,
                              double l0, const std::vector<double>& nodes, double tol)
{
    const double k = 2.0 / (m.sigma() * m.sigma());
    const double z = m.zeta();
    auto rhs = [&](double x, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = k * (w(std::exp(x)) - z * y[0]) - y[0] * y[0];
        dy[1] = y[0];
    };
    std::vector<double> ts;
    ts.reserve(nodes.size() + 1);
    ts.push_back(x_start);
    for (double x : nodes)
        if (x != x_start) ts.push_back(x);
    auto sol = integrate_at<2>(rhs, {y0, l0}, ts, tol, tol, "solve_h_ode");
    RiccatiRun r;
    std::size_t off = ts.size() - nodes.size();
    for (std::size_t i = off; i < sol.size(); ++i) {
        if (std::abs(sol[i][0]) > 1e8)
            throw ConvergenceError("solve_h_ode: solution has a zero (log-derivative blew up)");
        r.Y.push_back(sol[i][0]);
        r.L.push_back(sol[i][1]);
    }
    if (off == 0) {
        // x_start coincided with the first node
    }
    return r;
}

} // namespace detail

inline HSolution solve_h_ode(const LevyModel& m, const DiscountFn& w, HOdeOptions o = {})
{
    require(m.sigma() > 0.0, "solve_h_ode: needs sigma > 0");
    require(!m.has_jumps(), "solve_h_ode: the h-ODE is for the pure diffusion model");
    require(o.s_max > 0.0 && o.dx > 0.0, "solve_h_ode: bad range");
    if (o.s_min <= 0.0) o.s_min = 1e-4 * o.s_max;
    require(o.s_min < o.s_max, "solve_h_ode: s_min must be < s_max");

    HSolution out;
    const double sig = m.sigma(), zeta = m.zeta();
    const auto taylor = w.taylor_at_zero(800);
    if (auto w0 = w.limit_at_zero()) out.exponents_zero = indicial_roots(sig, zeta, *w0);
    if (auto wi = w.limit_at_infinity()) {
        out.exponents_infinity = indicial_roots(sig, zeta, *wi);
        if (!out.exponents_infinity)
            throw ValidationError("solve_h_ode: oscillatory solutions at infinity (omega too negative)");
    }

    // grid
    const double xa = std::log(o.s_min), xb = std::log(o.s_max);
    const auto nn = static_cast<std::size_t>(std::ceil((xb - xa) / o.dx)) + 1;
    const double dx = (xb - xa) / static_cast<double>(nn - 1);
    std::vector<double> nodes(nn);
    for (std::size_t k = 0; k < nn; ++k) nodes[k] = xa + dx * static_cast<double>(k);

    // lower branch: dominant towards +x, started from the series (or a quasi-static slope)
    std::optional<FrobeniusSeries> lo_series;
    double x_start;
    if (taylor && out.exponents_zero) {
        const double s0 = std::min({o.s_match, 0.5 * taylor->radius, o.s_min});
        lo_series.emplace(m, *taylor, out.exponents_zero->first, s0);
        x_start = std::log(s0);
    } else {
        x_start = xa - 10.0;
        out.warnings.push_back("omega has no Taylor data at 0; lower branch started from the "
                               "quasi-static slope at s = " + std::to_string(std::exp(x_start)));
    }
    double y_lo0, l_lo0 = 0.0;
    if (lo_series) {
        y_lo0 = lo_series->dlog(std::exp(x_start));
        l_lo0 = lo_series->log_h(std::exp(x_start));
    } else {
        auto r = indicial_roots(sig, zeta, w(std::exp(x_start)));
        if (!r) throw ValidationError("solve_h_ode: oscillatory solutions near 0");
        y_lo0 = r->first;
    }
    auto lo = detail::riccati_run(m, w, x_start, y_lo0, l_lo0, nodes, o.tol);
    out.lower = HBranch(xa, dx, lo.L, lo.Y, m, w);

    // minimal solution at infinity, integrated downwards
    auto minimal = [&]() {
        double margin = 5.0;
        if (out.exponents_infinity) {
            const double gap = out.exponents_infinity->first - out.exponents_infinity->second;
            margin = gap > 0.0 ? std::min(200.0, 36.0 / gap) : 200.0;
        }
        const double x_top = xb + margin;
        auto r = indicial_roots(sig, zeta, w(std::exp(x_top)));
        if (!r) throw ValidationError("solve_h_ode: oscillatory solutions at the top of the range");
        std::vector<double> down(nodes.rbegin(), nodes.rend());
        auto run = detail::riccati_run(m, w, x_top, r->second, 0.0, down, o.tol);
        std::reverse(run.L.begin(), run.L.end());
        std::reverse(run.Y.begin(), run.Y.end());
        return run;
    };

    UpperBranch rule = o.upper;
    if (rule == UpperBranch::automatic) {
        const bool both_bounded = out.exponents_infinity && out.exponents_infinity->first <= 0.0;
        if (both_bounded && taylor && out.exponents_zero) {
            rule = UpperBranch::frobenius_at_zero;
            out.warnings.push_back(
                "both solutions bounded at infinity; upper branch taken as the Frobenius "
                "solution with the smaller exponent at 0");
        } else {
            rule = UpperBranch::minimal_at_infinity;
            if (both_bounded)
                out.warnings.push_back("both solutions bounded at infinity and no series data at 0; "
                                       "using the minimal solution at infinity");
        }
    }
    out.upper_rule = rule;

    auto inf = minimal();
    if (rule == UpperBranch::minimal_at_infinity) {
        out.upper = HBranch(xa, dx, inf.L, inf.Y, m, w);
        return out;
    }

    require(taylor && out.exponents_zero, "solve_h_ode: frobenius_at_zero needs Taylor data at 0");
    const double d_minus = out.exponents_zero->second;
    const double s_m = std::min(o.s_match, 0.5 * taylor->radius);
    FrobeniusSeries up_series(m, *taylor, d_minus, std::max(s_m, o.s_min));
    // h_up = a h_inf + b h_lo matched in value and slope to the series at x_m
    const double x_m = std::log(s_m);
    HBranch hi_tab(xa, dx, inf.L, inf.Y, m, w);
    const double Li = hi_tab.log_h(s_m), Yi = hi_tab.dlog(s_m);
    const double Ll = out.lower.log_h(s_m), Yl = out.lower.dlog(s_m);
    const double Lm = up_series.log_h(s_m), Ym = up_series.dlog(s_m);
    (void)x_m;
    const double beta = (Ym - Yi) / (Yl - Yi), alpha = 1.0 - beta;
    std::vector<double> L(nn), Y(nn);
    for (std::size_t k = 0; k < nn; ++k) {
        const double ei = inf.L[k] - Li, el = lo.L[k] - Ll;
        const double ref = std::max(ei, el);
        const double ti = alpha * std::exp(ei - ref), tl = beta * std::exp(el - ref);
        const double v = ti + tl;
        if (!(v > 0.0))
            throw ConvergenceError("solve_h_ode: Frobenius upper branch changes sign");
        L[k] = Lm + ref + std::log(v);
        Y[k] = (ti * inf.Y[k] + tl * lo.Y[k]) / v;
    }
    out.upper = HBranch(xa, dx, std::move(L), std::move(Y), m, w);
    return out;
}

} // namespace omega
