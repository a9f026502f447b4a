#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "discount.hpp"
#include "error.hpp"
#include "levy_model.hpp"
#include "ode.hpp"
#include "specfun.hpp"

namespace omega {

struct LogGrid {
    double x_max;
    std::size_t n;

    LogGrid(double x_max_, std::size_t n_) : x_max(x_max_), n(n_)
    {
        require(x_max > 0.0, "LogGrid: x_max must be > 0");
        require(n >= 2, "LogGrid: n must be >= 2");
    }
    double h() const { return x_max / static_cast<double>(n - 1); }
    double x(std::size_t k) const { return static_cast<double>(k) * h(); }
};

inline double classical_w(const RootDecomposition& d, double x)
{
    require(x >= 0.0, "classical_w: x must be >= 0");
    return d.w(x);
}

namespace detail {

// Product-trapezoid weights for the kernel W(x) = sum U_i e^{g_i x}: on each cell the
// exponential kernel is integrated exactly against the linear interpolant of xi f.
struct MarchWeights {
    std::vector<double> first;  // weight of node 0 at distance m
    std::vector<double> inner;  // weight of an interior node at distance m
    double diag = 0.0;          // weight of node k itself
};

inline MarchWeights march_weights(const RootDecomposition& d, double h, std::size_t n)
{
    const std::size_t nr = d.gammas.size();
    std::vector<double> a(nr), b(nr);
    for (std::size_t i = 0; i < nr; ++i) {
        const double z = d.gammas[i] * h;
        if (std::abs(z) < 1e-3) {
            a[i] = h * (0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0 + z * z * z * z / 720.0);
            b[i] = h * (0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0 + z * z * z * z / 144.0);
        } else {
            const double em = std::exp(-z);
            a[i] = h * (z + std::expm1(-z)) / (z * z);
            b[i] = h * (1.0 - (1.0 + z) * em) / (z * z);
        }
    }
    auto ka = [&](std::size_t m) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i)
            s += d.upsilons[i] * std::exp(d.gammas[i] * static_cast<double>(m) * h) * a[i];
        return s;
    };
    auto kb = [&](std::size_t m) {
        double s = 0.0;
        for (std::size_t i = 0; i < nr; ++i)
            s += d.upsilons[i] * std::exp(d.gammas[i] * static_cast<double>(m) * h) * b[i];
        return s;
    };
    MarchWeights w;
    w.first.assign(n, 0.0);
    w.inner.assign(n, 0.0);
    std::vector<double> kbv(n + 1, 0.0);
    for (std::size_t m = 1; m <= n; ++m) kbv[m] = kb(m);
    for (std::size_t m = 1; m < n; ++m) {
        const double kam = ka(m);
        w.first[m] = kam;
        w.inner[m] = kam + kbv[m + 1];
    }
    w.diag = kbv[1];
    return w;
}

// f_k = g_k + first_k p_0 + sum_{0<j<k} inner_{k-j} p_j + diag p_k,  p_j = xi_j f_j.
inline std::vector<double> volterra_march(const MarchWeights& wt, const double* xi, const double* g,
                                          std::size_t n, double x_max, const std::string& who)
{
    std::vector<double> f(n), p(n);
    f[0] = g[0];
    p[0] = xi[0] * f[0];
    for (std::size_t k = 1; k < n; ++k) {
        double acc = wt.first[k] * p[0];
        const double* kr = wt.inner.data() + k;
        for (std::size_t j = 1; j < k; ++j) acc += kr[-static_cast<std::ptrdiff_t>(j)] * p[j];
        const double diag = wt.diag * xi[k];
        if (diag >= 1.0) {
            const double xi_max = *std::max_element(xi, xi + n);
            const double h = x_max / static_cast<double>(n - 1);
            auto suggest = static_cast<std::size_t>(std::ceil(2.0 * x_max * (wt.diag / h) * xi_max)) + 2;
            std::ostringstream os;
            os << who << ": grid too coarse (diagonal weight " << diag << " >= 1); use n >= "
               << suggest;
            throw ValidationError(os.str());
        }
        f[k] = (g[k] + acc) / (1.0 - diag);
        if (!std::isfinite(f[k])) throw ConvergenceError(who + ": overflow; reduce x_max");
        p[k] = xi[k] * f[k];
    }
    return f;
}

inline std::vector<double> kernel_on(const RootDecomposition& d, const LogGrid& g)
{
    std::vector<double> k(g.n);
    for (std::size_t i = 0; i < g.n; ++i) k[i] = d.w(g.x(i));
    return k;
}

template <class Xi>
std::vector<double> sample_on(const Xi& xi, const LogGrid& g)
{
    std::vector<double> v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) v[i] = xi(g.x(i));
    return v;
}

} // namespace detail

// Cubic Lagrange interpolation of a uniform-grid table.
class TableInterp {
public:
    TableInterp() = default;
    TableInterp(const std::vector<double>* v, double h) : v_(v), h_(h) {}

    double operator()(double x) const
    {
        const std::size_t n = v_->size();
        const double t = x / h_;
        if (t < -1e-9 || t > static_cast<double>(n - 1) + 1e-9)
            throw ValidationError("TableInterp: x outside the table");
        auto i = static_cast<std::ptrdiff_t>(std::floor(t)) - 1;
        i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 4);
        const double s = t - static_cast<double>(i);
        const double* y = v_->data() + i;
        // nodes at s = 0, 1, 2, 3
        double l0 = -(s - 1) * (s - 2) * (s - 3) / 6.0;
        double l1 = s * (s - 2) * (s - 3) / 2.0;
        double l2 = -s * (s - 1) * (s - 3) / 2.0;
        double l3 = s * (s - 1) * (s - 2) / 6.0;
        return l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3];
    }

private:
    const std::vector<double>* v_ = nullptr;
    double h_ = 1.0;
};

template <class Xi>
std::vector<double> renewal_solve_w(const RootDecomposition& d, const Xi& xi, const LogGrid& g)
{
    auto kern = detail::kernel_on(d, g);
    auto xs = detail::sample_on(xi, g);
    return detail::volterra_march(detail::march_weights(d, g.h(), g.n), xs.data(), kern.data(),
                                  g.n, g.x_max, "renewal_solve_w");
}

template <class Xi>
std::vector<double> renewal_solve_z(const RootDecomposition& d, const Xi& xi, const LogGrid& g)
{
    auto xs = detail::sample_on(xi, g);
    std::vector<double> one(g.n, 1.0);
    return detail::volterra_march(detail::march_weights(d, g.h(), g.n), xs.data(), one.data(),
                                  g.n, g.x_max, "renewal_solve_z");
}

// Solution of f = forcing + W * (xi f) for an arbitrary forcing sampled on the grid.
template <class Xi>
std::vector<double> renewal_solve_forced(const RootDecomposition& d, const Xi& xi,
                                         const LogGrid& g, const std::vector<double>& forcing)
{
    require(forcing.size() == g.n, "renewal_solve_forced: forcing size mismatch");
    auto xs = detail::sample_on(xi, g);
    return detail::volterra_march(detail::march_weights(d, g.h(), g.n), xs.data(),
                                  forcing.data(), g.n, g.x_max, "renewal_solve_forced");
}

// H solves H = e^{Phi(c) x} + W^{(c)} * ((xi - c) H); decomp_c are the roots of psi = c.
template <class Xi>
std::vector<double> renewal_solve_h(const RootDecomposition& decomp_c, const Xi& xi, double c,
                                    const LogGrid& g, double phi_c)
{
    for (int i = 0; i <= 400; ++i) {
        double x = -40.0 * i / 400.0;
        if (std::abs(xi(x) - c) > 1e-12 * (1.0 + std::abs(c)))
            throw ValidationError(
                "renewal_solve_h: discount is not flat at level c below the origin");
    }
    auto xs = detail::sample_on(xi, g);
    for (double& v : xs) v -= c;
    std::vector<double> forcing(g.n);
    for (std::size_t k = 0; k < g.n; ++k) forcing[k] = std::exp(phi_c * g.x(k));
    return detail::volterra_march(detail::march_weights(decomp_c, g.h(), g.n), xs.data(),
                                  forcing.data(), g.n, g.x_max, "renewal_solve_h");
}

// Lower-triangular table of W(x_j, x_k), j >= k, stored column by column.
class TwoArgTable {
public:
    TwoArgTable() = default;
    explicit TwoArgTable(std::size_t n) : n_(n), offset_(n + 1)
    {
        for (std::size_t k = 0; k < n; ++k) offset_[k + 1] = offset_[k] + (n - k);
        data_.resize(offset_[n]);
    }
    std::size_t n() const { return n_; }
    double at(std::size_t j, std::size_t k) const { return data_[offset_[k] + (j - k)]; }
    double* column(std::size_t k) { return data_.data() + offset_[k]; }
    const double* column(std::size_t k) const { return data_.data() + offset_[k]; }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> offset_;
    std::vector<double> data_;
};

template <class Xi>
TwoArgTable renewal_solve_w2(const RootDecomposition& d, const Xi& xi, const LogGrid& g)
{
    auto kern = detail::kernel_on(d, g);
    auto xs = detail::sample_on(xi, g);
    const auto wt = detail::march_weights(d, g.h(), g.n);
    TwoArgTable t(g.n);
    for (std::size_t k = 0; k < g.n; ++k) {
        const std::size_t m = g.n - k;
        auto col = detail::volterra_march(wt, xs.data() + k, kern.data(), m, g.x_max,
                                          "renewal_solve_w2");
        std::copy(col.begin(), col.end(), t.column(k));
    }
    return t;
}

struct RatioLimit {
    double value;
    std::array<double, 3> estimates;
    double spread;
};

namespace detail {

inline RatioLimit ratio_estimates(const double* zv, const double* wv, std::size_t n)
{
    require(n >= 20, "ratio_limit: need at least 20 nodes");
    const std::size_t m = std::max<std::size_t>(1, (n - 1) / 50);
    auto r = [&](std::size_t k) { return zv[k] / wv[k]; };
    RatioLimit out{};
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t e = n - 1 - i * m;
        const double r2 = r(e), r1 = r(e - m), r0 = r(e - 2 * m);
        const double d1 = r2 - r1, d0 = r1 - r0;
        const double denom = d1 - d0;
        double est = r2;
        const double scale = std::abs(r2) + 1e-300;
        if (std::abs(d1) > 1e-15 * scale && std::abs(denom) > 1e-14 * scale)
            est = r2 - d1 * d1 / denom;
        out.estimates[i] = est;
    }
    auto [lo, hi] = std::minmax_element(out.estimates.begin(), out.estimates.end());
    out.spread = *hi - *lo;
    out.value = out.estimates[0];
    return out;
}

} // namespace detail

// lim z/w from the grid tail (Aitken-accelerated); throws with the last three estimates.
inline RatioLimit ratio_limit(const std::vector<double>& zv, const std::vector<double>& wv,
                              const LogGrid& g, double rel_tol = 1e-6, double abs_tol = 1e-10)
{
    require(zv.size() == g.n && wv.size() == g.n, "ratio_limit: table size mismatch");
    RatioLimit r = detail::ratio_estimates(zv.data(), wv.data(), g.n);
    if (!(r.spread <= rel_tol * std::abs(r.value) + abs_tol)) {
        std::ostringstream os;
        os.precision(12);
        os << "ratio_limit: tail not converged; last estimates " << r.estimates[0] << ", "
           << r.estimates[1] << ", " << r.estimates[2];
        throw ConvergenceError(os.str());
    }
    return r;
}

enum class ScaleFn { W, Z };

// sigma = 0: f'' = (S xi + g2) f' + (S xi' - g2 U1 xi) f with S = U1 + U2.
inline std::vector<double> ode_solve_crash(const LevyModel& m, const LogDiscount& xi,
                                           const LogGrid& g, ScaleFn which)
{
    require(m.sigma() == 0.0 && m.has_jumps(), "ode_solve_crash: needs sigma = 0 with jumps");
    require(xi.base().differentiable(),
            "ode_solve_crash: discount kind '" + xi.base().kind_name() +
                "' is not differentiable; use renewal_solve_w/z");
    const RootDecomposition d = psi_roots(m);
    const double u1 = d.upsilons[0], u2 = d.upsilons[1], g2 = d.gammas[1];
    const double S = u1 + u2;
    auto rhs = [&](double x, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        const double e = xi(x), de = xi.derivative(x);
        dy[0] = y[1];
        dy[1] = (S * e + g2) * y[1] + (S * de - g2 * u1 * e) * y[0];
    };
    const double e0 = xi(0.0);
    std::array<double, 2> y0 = which == ScaleFn::W ? std::array<double, 2>{S, S * S * e0 + u2 * g2}
                                                   : std::array<double, 2>{1.0, S * e0};
    std::vector<double> ts(g.n);
    for (std::size_t k = 0; k < g.n; ++k) ts[k] = g.x(k);
    auto sol = integrate_at<2>(rhs, y0, ts, 1e-13, 1e-13, "ode_solve_crash");
    std::vector<double> out(g.n);
    for (std::size_t k = 0; k < g.n; ++k) out[k] = sol[k][0];
    return out;
}

// sigma > 0: f''' = (g2+g3) f'' - g2 g3 f' + (2/sigma^2)(xi' f + xi f' + phi xi f).
inline std::vector<double> ode_solve_crash_sigma(const LevyModel& m, const LogDiscount& xi,
                                                 const LogGrid& g, ScaleFn which)
{
    require(m.sigma() > 0.0 && m.has_jumps(), "ode_solve_crash_sigma: needs sigma > 0 with jumps");
    require(xi.base().differentiable(),
            "ode_solve_crash_sigma: discount kind '" + xi.base().kind_name() +
                "' is not differentiable; use renewal_solve_w/z");
    const RootDecomposition d = psi_roots(m);
    const double k2 = 2.0 / (m.sigma() * m.sigma());
    const double ph = m.phi();
    double sum_g = 0.0, prod_g = 1.0, w1 = 0.0, w2 = 0.0;
    for (std::size_t i = 1; i < d.gammas.size(); ++i) {
        sum_g += d.gammas[i];
        prod_g *= d.gammas[i];
        w1 += d.upsilons[i] * d.gammas[i];
        w2 += d.upsilons[i] * d.gammas[i] * d.gammas[i];
    }
    auto rhs = [&](double x, const std::array<double, 3>& y, std::array<double, 3>& dy) {
        const double e = xi(x), de = xi.derivative(x);
        dy[0] = y[1];
        dy[1] = y[2];
        dy[2] = sum_g * y[2] - prod_g * y[1] + k2 * (de * y[0] + e * y[1] + ph * e * y[0]);
    };
    const double e0 = xi(0.0);
    std::array<double, 3> y0 = which == ScaleFn::W ? std::array<double, 3>{0.0, w1, w2}
                                                   : std::array<double, 3>{1.0, 0.0, w1 * e0};
    std::vector<double> ts(g.n);
    for (std::size_t k = 0; k < g.n; ++k) ts[k] = g.x(k);
    auto sol = integrate_at<3>(rhs, y0, ts, 1e-13, 1e-13, "ode_solve_crash_sigma");
    std::vector<double> out(g.n);
    for (std::size_t k = 0; k < g.n; ++k) out[k] = sol[k][0];
    return out;
}

struct ScaleOptions {
    std::size_t n = 4001;
    double x_max = 3.0;
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    double x_max_limit = 48.0;
    std::size_t n_limit = 32001;
    bool with_w2 = false;
    bool with_jump = false;  // jump-resolvent mass table (needs exponential jumps)
};

struct ScaleTable {
    LogGrid grid{1.0, 2};
    std::vector<double> w, z;
    std::optional<std::vector<double>> hh;
    std::optional<TwoArgTable> w2;
    std::optional<std::vector<double>> c_w2w;
    double c_zw = 0.0;
    RatioLimit zw_fit{};
    // Y = W*(lambda e^{-phi .}) + W*(xi Y) and lim Y/W
    std::optional<std::vector<double>> y;
    double c_yw = 0.0;

    double w_at(double x) const { return TableInterp(&w, grid.h())(x); }
    double z_at(double x) const { return TableInterp(&z, grid.h())(x); }
    // Z - c W: discounted mass of reaching below the origin.
    double exit_mass(double x) const { return z_at(x) - c_zw * w_at(x); }
    // Discounted mass of jumping below the origin.
    double jump_mass(double x) const
    {
        require(y.has_value(), "ScaleTable: built without the jump-resolvent table");
        return c_yw * w_at(x) - TableInterp(&*y, grid.h())(x);
    }
};

namespace detail {

inline ScaleTable build_once(const LevyModel& m, const RootDecomposition& d, const LogDiscount& xi,
                             const ScaleOptions& o)
{
    ScaleTable t;
    t.grid = LogGrid(o.x_max, o.n);
    t.w = renewal_solve_w(d, xi, t.grid);
    t.z = renewal_solve_z(d, xi, t.grid);
    t.zw_fit = detail::ratio_estimates(t.z.data(), t.w.data(), t.grid.n);
    t.c_zw = t.zw_fit.value;
    if (o.with_jump) {
        require(m.has_jumps(), "ScaleTable: jump-resolvent table needs jumps");
        std::vector<double> forcing(t.grid.n);
        const double lam = m.lambda(), ph = m.phi();
        for (std::size_t k = 0; k < t.grid.n; ++k) {
            const double x = t.grid.x(k);
            double s = 0.0;
            for (std::size_t i = 0; i < d.gammas.size(); ++i)
                s += d.upsilons[i] * lam * (std::exp(d.gammas[i] * x) - std::exp(-ph * x)) /
                     (d.gammas[i] + ph);
            forcing[k] = s;
        }
        t.y = renewal_solve_forced(d, xi, t.grid, forcing);
    }
    if (o.with_w2) {
        t.w2 = renewal_solve_w2(d, xi, t.grid);
        std::vector<double> c(t.grid.n, 0.0);
        for (std::size_t k = 0; k < t.grid.n; ++k) {
            const std::size_t len = t.grid.n - k;
            if (len < 20) {
                c[k] = k > 0 ? c[k - 1] : 0.0;
                continue;
            }
            c[k] = detail::ratio_estimates(t.w2->column(k), t.w.data() + k, len).value;
        }
        t.c_w2w = std::move(c);
    }
    return t;
}

inline bool converged(const RatioLimit& r, const ScaleOptions& o)
{
    return r.spread <= o.rel_tol * std::abs(r.value) + o.abs_tol;
}

} // namespace detail

// W, Z (and optional extras) for xi on [0, x_max]; x_max grows (h fixed) until lim Z/W settles.
inline ScaleTable build_scale_table(const LevyModel& m, const LogDiscount& xi,
                                    ScaleOptions o = {})
{
    const RootDecomposition d = psi_roots(m);
    for (;;) {
        ScaleTable t = detail::build_once(m, d, xi, o);
        bool ok = detail::converged(t.zw_fit, o);
        if (ok && t.y) {
            RatioLimit ry = detail::ratio_estimates(t.y->data(), t.w.data(), t.grid.n);
            t.c_yw = ry.value;
            ok = detail::converged(ry, o);
        }
        if (ok) return t;
        const std::size_t n2 = 2 * (o.n - 1) + 1;
        if (2.0 * o.x_max > o.x_max_limit || n2 > o.n_limit) {
            std::ostringstream os;
            os.precision(12);
            os << "build_scale_table: lim Z/W not converged at x_max=" << o.x_max
               << "; last estimates " << t.zw_fit.estimates[0] << ", " << t.zw_fit.estimates[1]
               << ", " << t.zw_fit.estimates[2];
            throw ConvergenceError(os.str());
        }
        o.n = n2;
        o.x_max *= 2.0;
    }
}

struct CreepingTrace {
    std::vector<double> alphas;
    std::vector<double> brackets;   // e^{alpha x}(Z_alpha - c_alpha W_alpha)(x)
    std::vector<double> estimates;  // creeping value implied by consecutive rungs
};

// Esscher ladder for the creeping part of the downward exit.  For exponential jumps the
// tilted bracket is exactly C + J phi/(phi+alpha) (C: creeping mass, J: jump mass), so the
// alpha -> inf limit C follows from any two rungs; the ladder is climbed until consecutive
// estimates agree.  Small alphas keep Z_alpha - c W_alpha well conditioned: once
// psi(alpha) exceeds the discount, Z_alpha is a small difference of O(1) terms.
class CreepingLadder {
public:
    CreepingLadder(const LevyModel& m, const DiscountFn& fn, double u, ScaleOptions o = {},
                   double alpha0 = 0.25, int max_doublings = 5, double rel_tol = 1e-5)
        : phi_(m.phi()), sigma_(m.sigma()), rel_tol_(rel_tol), x_max_(o.x_max)
    {
        require(u > 0.0, "CreepingLadder: u must be > 0");
        if (sigma_ == 0.0) return;
        require(m.spectrally_negative(), "CreepingLadder: model must be spectrally negative");
        add_rung(m, fn, u, 0.0, o);
        std::vector<double> probes;
        for (double p : {0.02, 0.1, 0.3, 0.7, 1.5, 3.0})
            if (p < x_max_) probes.push_back(p);
        double alpha = alpha0;
        for (int k = 0; k <= max_doublings; ++k, alpha *= 2.0) {
            add_rung(m, fn, u, alpha, o);
            if (rungs_.size() < 3) continue;
            bool all = true;
            for (double x : probes) all = all && settled(x);
            if (all) return;
        }
        // no early agreement: accept if some consecutive pair agrees to the looser tolerance
        for (double x : probes) {
            auto tr = trace(x);
            if (agree(tr.estimates, best_pair(tr.estimates), accept_tol_)) continue;
            std::ostringstream os;
            os << "creeping ladder did not stabilise after " << max_doublings
               << " doublings; trace at x=" << x << ":";
            for (double e : tr.estimates) os << " " << e;
            throw ConvergenceError(os.str());
        }
    }

    double x_max() const { return x_max_; }

    CreepingTrace trace(double x) const
    {
        CreepingTrace t;
        for (std::size_t i = 0; i < rungs_.size(); ++i) {
            t.alphas.push_back(rungs_[i].alpha);
            t.brackets.push_back(bracket(i, x));
            if (i > 0) {
                const double a0 = rungs_[i - 1].alpha, a1 = rungs_[i].alpha;
                t.estimates.push_back((t.brackets[i] * (phi_ + a1) - t.brackets[i - 1] * (phi_ + a0)) /
                                      (a1 - a0));
            }
        }
        return t;
    }

    double operator()(double x) const
    {
        if (sigma_ == 0.0) return 0.0;
        require(x > 0.0, "creeping: x must be > 0");
        auto tr = trace(x);
        const std::size_t k = best_pair(tr.estimates);
        if (!agree(tr.estimates, k, accept_tol_)) {
            std::ostringstream os;
            os << "creeping ladder not settled at x=" << x << "; estimates";
            for (double e : tr.estimates) os << " " << e;
            throw ConvergenceError(os.str());
        }
        return tr.estimates[k];
    }

private:
    struct Rung {
        double alpha;
        ScaleTable table;
    };

    void add_rung(const LevyModel& m, const DiscountFn& fn, double u, double alpha, ScaleOptions o)
    {
        const LevyModel ma = esscher_tilt(m, alpha);
        const LogDiscount xi = shift_tilt(fn, u, m, alpha);
        const auto need = static_cast<std::size_t>(std::ceil(40.0 * alpha * o.x_max)) + 1;
        o.n = std::max(o.n, need);
        o.with_w2 = false;
        o.with_jump = false;
        rungs_.push_back({alpha, build_scale_table(ma, xi, o)});
    }

    double bracket(std::size_t i, double x) const
    {
        const auto& r = rungs_[i];
        return std::exp(r.alpha * x) * r.table.exit_mass(x);
    }

    bool settled(double x) const
    {
        const auto e = trace(x).estimates;
        return e.size() >= 2 && agree(e, e.size() - 1, rel_tol_);
    }

    // index k >= 1 whose estimate is closest to its predecessor
    static std::size_t best_pair(const std::vector<double>& e)
    {
        std::size_t k = e.size() - 1;
        for (std::size_t i = 1; i < e.size(); ++i)
            if (std::abs(e[i] - e[i - 1]) < std::abs(e[k] - e[k - 1])) k = i;
        return k;
    }

    static bool agree(const std::vector<double>& e, std::size_t k, double tol)
    {
        return k >= 1 && std::abs(e[k] - e[k - 1]) <= tol * std::abs(e[k]) + 1e-10;
    }

    double phi_, sigma_, rel_tol_, x_max_;
    double accept_tol_ = 1e-4;
    std::vector<Rung> rungs_;
};

inline double creeping_limit(const LevyModel& m, const DiscountFn& fn, double u, double x,
                             ScaleOptions o = {})
{
    if (m.sigma() == 0.0) return 0.0;
    require(x > 0.0, "creeping_limit: needs s > u");
    o.x_max = std::max(o.x_max, x + 1.0);
    return CreepingLadder(m, fn, u, o)(x);
}

// sigma = 0, xi(x) = a0 e^x: W and Z in closed form through Kummer functions,
// basis 1F1(a1; b1; A e^x) and (-A)^B e^{Bx} 1F1(a2; b2; A e^x).
class KummerCrashScale {
public:
    KummerCrashScale(const LevyModel& m, double a0)
    {
        require(m.sigma() == 0.0 && m.has_jumps(), "KummerCrashScale: needs sigma = 0 with jumps");
        const RootDecomposition d = psi_roots(m);
        mu_ = m.mu();
        A_ = a0 / mu_;
        B_ = d.gammas[1];
        const double D = a0 * (1.0 + m.phi()) / mu_;
        a1_ = D / A_;
        b1_ = 1.0 - B_;
        a2_ = B_ + D / A_;
        b2_ = B_ + 1.0;
        require(!detail::nonpositive_integer(b1_) && !detail::nonpositive_integer(b2_),
                "KummerCrashScale: resonant parameters");
        pref_ = std::pow(std::complex<double>(-A_, 0.0), B_);
        const double S = d.upsilons[0] + d.upsilons[1];
        const double w0 = S, w1 = S * S * a0 + d.upsilons[1] * B_;
        const double z0 = 1.0, z1 = S * a0;
        const auto f1 = basis1(0.0), f2 = basis2(0.0);
        const std::complex<double> det = f1[0] * f2[1] - f2[0] * f1[1];
        kw_ = {(w0 * f2[1] - f2[0] * w1) / det, (f1[0] * w1 - f1[1] * w0) / det};
        kz_ = {(z0 * f2[1] - f2[0] * z1) / det, (f1[0] * z1 - f1[1] * z0) / det};
    }

    double w(double x) const { return combine(kw_, x).real(); }
    double z(double x) const { return combine(kz_, x).real(); }
    // relative imaginary residue of the combination (should vanish)
    double imag_residue(double x) const
    {
        auto v = combine(kw_, x);
        return std::abs(v.imag()) / std::abs(v.real());
    }

    KummerPair pair_w() const { return {{kw_[0], a1_, b1_}, {kw_[1] * pref_, a2_, b2_}, A_}; }
    KummerPair pair_z() const { return {{kz_[0], a1_, b1_}, {kz_[1] * pref_, a2_, b2_}, A_}; }
    double c() const { return kummer_ratio_limit(pair_z(), pair_w()); }

    double A() const { return A_; }
    double B() const { return B_; }

private:
    std::array<std::complex<double>, 2> basis1(double x) const
    {
        const double zz = A_ * std::exp(x);
        return {kummer_1f1(a1_, b1_, zz), zz * (a1_ / b1_) * kummer_1f1(a1_ + 1, b1_ + 1, zz)};
    }
    std::array<std::complex<double>, 2> basis2(double x) const
    {
        const double zz = A_ * std::exp(x);
        const std::complex<double> p = pref_ * std::exp(B_ * x);
        const double m0 = kummer_1f1(a2_, b2_, zz);
        const double m1 = zz * (a2_ / b2_) * kummer_1f1(a2_ + 1, b2_ + 1, zz);
        return {p * m0, p * (B_ * m0 + m1)};
    }
    std::complex<double> combine(const std::array<std::complex<double>, 2>& k, double x) const
    {
        return k[0] * basis1(x)[0] + k[1] * basis2(x)[0];
    }

    double mu_, A_, B_, a1_, b1_, a2_, b2_;
    std::complex<double> pref_;
    std::array<std::complex<double>, 2> kw_, kz_;
};

} // namespace omega
