#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "discount.hpp"
#include "error.hpp"
#include "h_ode.hpp"
#include "levy_model.hpp"
#include "scale.hpp"

namespace omega {

enum class Payoff { put, call };

struct PricingProblem {
    LevyModel model;
    DiscountFn omega;
    double strike = 1.0;
    Payoff payoff = Payoff::put;

    double payoff_at(double s) const
    {
        return payoff == Payoff::put ? std::max(strike - s, 0.0) : std::max(s - strike, 0.0);
    }
};

// Stopping interval [l, u].  For calls u may be +inf.
struct Boundaries {
    double l = 0.0;
    double u = 0.0;
};

struct PricerOptions {
    ScaleOptions scale{};
    HOdeOptions hode{};
    std::size_t coarse = 64;        // grid points per axis
    int refine_rounds = 2;
    std::size_t refine_points = 8;
    std::size_t curve_points = 512;
    double curve_span = 2.0;        // curve covers (0, span*K]
};

inline void check_put(const PricingProblem& p, const Boundaries& b)
{
    require(p.payoff == Payoff::put, "pricer: put payoff expected (calls use putcall_transform)");
    require(p.strike > 0.0, "pricer: strike must be > 0");
    require(b.l >= 0.0 && b.l <= b.u && b.u <= p.strike && b.u > 0.0,
            "pricer: boundaries must satisfy 0 <= l <= u <= K, u > 0");
}

// v(s; l, u) for fixed boundaries.
class ValueFunction {
public:
    ValueFunction(double K, Boundaries b) : K_(K), b_(b) {}
    virtual ~ValueFunction() = default;

    double operator()(double s) const
    {
        require(s > 0.0, "value: s must be > 0");
        if (s > b_.u) return above(s);
        if (s >= b_.l) return K_ - s;
        return below(s);
    }

    // Continuation formulas; both are also valid at their boundary.
    virtual double above(double s) const = 0;
    virtual double below(double s) const = 0;
    // finite-difference step suited to the representation near s
    virtual double fd_step(double s) const { return 1e-4 * s; }

    double strike() const { return K_; }
    const Boundaries& boundaries() const { return b_; }

protected:
    double K_;
    Boundaries b_;
};

class BsValue : public ValueFunction {
public:
    BsValue(std::shared_ptr<const HSolution> h, double K, Boundaries b)
        : ValueFunction(K, b), h_(std::move(h))
    {
    }

    double above(double s) const override
    {
        return (K_ - b_.u) * h_->upper.ratio(s, b_.u);
    }
    double below(double s) const override
    {
        require(b_.l > 0.0, "BsValue: no lower continuation region when l = 0");
        return (K_ - b_.l) * h_->lower.ratio(s, b_.l);
    }

    const HSolution& h() const { return *h_; }

private:
    std::shared_ptr<const HSolution> h_;
};

namespace detail {

// Same spacing, reach at least x_need.
inline ScaleOptions with_reach(ScaleOptions o, double x_need)
{
    if (x_need <= o.x_max) return o;
    const double h = o.x_max / static_cast<double>(o.n - 1);
    o.n = static_cast<std::size_t>(std::ceil(x_need / h)) + 1;
    o.x_max = h * static_cast<double>(o.n - 1);
    o.n_limit = std::max(o.n_limit, 8 * o.n);
    o.x_max_limit = std::max(o.x_max_limit, 8 * o.x_max);
    return o;
}

inline HOdeOptions bs_range(const PricingProblem& p, const PricerOptions& o)
{
    HOdeOptions h = o.hode;
    h.s_max = 1.25 * std::max(o.curve_span, 1.0) * p.strike;
    return h;
}

} // namespace detail

// Upward-passage function H(x) of a discount that is flat (= c) below s = 1.
class UpwardPassage {
public:
    UpwardPassage(const LevyModel& m, const DiscountFn& w, double x_top, const ScaleOptions& o)
    {
        auto c = check_flat_below_one(w);
        if (!c)
            throw ValidationError("value_two_sided: discount must be constant on (0,1]");
        c_ = *c;
        phi_c_ = phi_right_inverse(m, c_);
        x_top_ = std::max(0.0, x_top);
        if (x_top_ > 0.0) {
            const double h = o.x_max / static_cast<double>(o.n - 1);
            const auto n = std::max<std::size_t>(21, static_cast<std::size_t>(std::ceil(x_top_ / h)) + 1);
            LogGrid g(x_top_, n);
            tab_ = renewal_solve_h(psi_roots(m, c_), LogDiscount(w), c_, g, phi_c_);
            h_ = g.h();
        }
    }

    double operator()(double x) const
    {
        if (x <= 0.0) return std::exp(phi_c_ * x);
        require(x <= x_top_ * (1.0 + 1e-12), "UpwardPassage: x above the table");
        return TableInterp(&tab_, h_)(std::min(x, x_top_));
    }

    double c() const { return c_; }
    double phi_c() const { return phi_c_; }
    double x_top() const { return x_top_; }

private:
    double c_ = 0.0, phi_c_ = 0.0, x_top_ = 0.0, h_ = 1.0;
    std::vector<double> tab_;
};

// Scale tables for one upper boundary u.
struct CrashParts {
    double u = 0.0;
    std::shared_ptr<const ScaleTable> table;
    std::shared_ptr<const CreepingLadder> creep;  // sigma > 0 only
};

inline CrashParts crash_parts(const PricingProblem& p, double u, double s_max,
                              const PricerOptions& opt, bool with_jump)
{
    const auto& m = p.model;
    require(m.has_jumps() && m.spectrally_negative(),
            "crash value: needs downward exponential jumps");
    ScaleOptions o = detail::with_reach(opt.scale, std::log(std::max(s_max, u) / u) + 0.25);
    o.with_jump = with_jump;
    CrashParts parts;
    parts.u = u;
    parts.table = std::make_shared<ScaleTable>(build_scale_table(m, shift_tilt(p.omega, u, m, 0.0), o));
    if (m.sigma() > 0.0) parts.creep = std::make_shared<CreepingLadder>(m, p.omega, u, o);
    return parts;
}

// Exponential-crash value: jump overshoot + creeping (sigma > 0) above u, upward passage below l.
class CrashValue : public ValueFunction {
public:
    CrashValue(const PricingProblem& p, Boundaries b, CrashParts parts,
               std::shared_ptr<const UpwardPassage> up = nullptr)
        : ValueFunction(p.strike, b), parts_(std::move(parts)), up_(std::move(up)),
          phi_(p.model.phi()), sigma_(p.model.sigma())
    {
        check_put(p, b);
        require(std::abs(parts_.u - b.u) <= 1e-14 * b.u, "CrashValue: tables built for another u");
        const double u = b.u, K = K_, ph = phi_;
        if (b.l > 0.0) {
            require(up_ != nullptr, "CrashValue: l > 0 needs the upward-passage function");
            require(parts_.table->y.has_value(), "CrashValue: l > 0 needs the jump table");
            const double yl = std::log(u / b.l);
            const double hl = (*up_)(std::log(b.l));
            double f = K * (1.0 - std::exp(-ph * yl)) -
                       u * ph / (ph + 1.0) * (1.0 - std::exp(-(ph + 1.0) * yl));
            // tail: jumps landing below l, then upward passage back to l
            const double lu = std::log(u), pc = up_->phi_c();
            const double y0 = std::max(yl, lu);
            double tail = ph * std::exp(pc * lu - (ph + pc) * y0) / (ph + pc);
            if (lu > yl) {
                auto g = [&](double y) { return ph * std::exp(-ph * y) * (*up_)(lu - y); };
                tail += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, yl, lu, 15,
                                                                                     1e-13);
            }
            factor_ = f + (K - b.l) * tail / hl;
        } else {
            factor_ = K - u * ph / (ph + 1.0);
        }
    }

    double above(double s) const override
    {
        const double u = b_.u;
        const double x = std::log(s / u);
        const auto& t = *parts_.table;
        if (sigma_ > 0.0) {
            if (x <= 0.0) return K_ - u;
            const double c = (*parts_.creep)(x);
            const double jump = b_.l > 0.0 ? t.jump_mass(x) : t.exit_mass(x) - c;
            return factor_ * jump + (K_ - u) * c;
        }
        const double xx = std::max(0.0, x);
        return factor_ * (b_.l > 0.0 ? t.jump_mass(xx) : t.exit_mass(xx));
    }

    double below(double s) const override
    {
        require(b_.l > 0.0 && up_ != nullptr, "CrashValue: no lower continuation region");
        return (K_ - b_.l) * (*up_)(std::log(s)) / (*up_)(std::log(b_.l));
    }

    double fd_step(double s) const override { return parts_.table->grid.h() * s; }

    // expected payoff after a jump below u, per unit of discounted jump mass
    double overshoot_factor() const { return factor_; }
    const CrashParts& parts() const { return parts_; }

private:
    CrashParts parts_;
    std::shared_ptr<const UpwardPassage> up_;
    double phi_, sigma_;
    double factor_ = 0.0;
};

inline std::shared_ptr<const ValueFunction> make_value(const PricingProblem& p, Boundaries b,
                                                       const PricerOptions& o = {})
{
    check_put(p, b);
    const double s_max = o.curve_span * p.strike;
    if (!p.model.has_jumps()) {
        auto h = std::make_shared<HSolution>(solve_h_ode(p.model, p.omega, detail::bs_range(p, o)));
        return std::make_shared<BsValue>(h, p.strike, b);
    }
    auto parts = crash_parts(p, b.u, s_max, o, b.l > 0.0);
    std::shared_ptr<const UpwardPassage> up;
    if (b.l > 0.0) up = std::make_shared<UpwardPassage>(p.model, p.omega, std::log(b.l), o.scale);
    return std::make_shared<CrashValue>(p, b, std::move(parts), up);
}

inline double value_bs(const PricingProblem& p, Boundaries b, double s, const PricerOptions& o = {})
{
    require(!p.model.has_jumps() && p.model.sigma() > 0.0, "value_bs: needs lambda = 0, sigma > 0");
    return (*make_value(p, b, o))(s);
}

inline double value_crash_one_sided(const PricingProblem& p, double u, double s,
                                    const PricerOptions& o = {})
{
    require(p.omega.lower_bound() >= 0.0, "value_crash_one_sided: needs omega >= 0");
    require(p.model.has_jumps(), "value_crash_one_sided: needs jumps");
    PricerOptions oo = o;
    oo.curve_span = std::max(o.curve_span, s / p.strike);
    return (*make_value(p, {0.0, u}, oo))(s);
}

inline double value_two_sided(const PricingProblem& p, Boundaries b, double s,
                              const PricerOptions& o = {})
{
    require(p.model.has_jumps(), "value_two_sided: needs jumps");
    PricerOptions oo = o;
    oo.curve_span = std::max(o.curve_span, s / p.strike);
    return (*make_value(p, b, oo))(s);
}

// ---------------------------------------------------------------- diagnostics

struct CurvePoint {
    double s, value, payoff;
};

struct FitResiduals {
    double continuity_l = 0.0, continuity_u = 0.0;
    double derivative_l = 0.0, derivative_u = 0.0;  // V' - g' from the continuation side
};

struct HjbReport {
    double continuation = 0.0;  // sup |A V - omega V| / (1 + |V|)
    double stopping = 0.0;      // sup max(A V - omega V, 0) / (1 + |V|) inside [l, u]
    std::size_t samples = 0;
};

struct Diagnostics {
    double convexity_margin = 0.0;
    HjbReport hjb;
    double objective = 0.0;  // v(s_ref; l, u)
    double s_ref = 0.0;
    std::string route;
    std::string upper_branch;
    bool degenerate = false;
    std::size_t evaluations = 0;
    std::vector<std::string> warnings;
};

struct PricingResult {
    Boundaries boundaries;
    std::vector<CurvePoint> curve;
    FitResiduals fit;
    Diagnostics diagnostics;
    std::shared_ptr<const ValueFunction> value;
};

inline std::vector<CurvePoint> sample_curve(const ValueFunction& v, std::size_t n, double s_max)
{
    std::vector<CurvePoint> c;
    c.reserve(n);
    const double K = v.strike();
    for (std::size_t i = 1; i <= n; ++i) {
        const double s = s_max * static_cast<double>(i) / static_cast<double>(n);
        c.push_back({s, v(s), std::max(K - s, 0.0)});
    }
    return c;
}

namespace detail {

// One-sided derivative at x in direction dir (+1 / -1): second-order stencil, Richardson-refined.
template <class F>
double one_sided_slope(F f, double x, double d, double dir)
{
    auto D = [&](double h) {
        const double e = dir * h;
        return (-3 * f(x) + 4 * f(x + e) - f(x + 2 * e)) / (2 * e);
    };
    return (4 * D(0.5 * d) - D(d)) / 3.0;
}

} // namespace detail

inline FitResiduals fit_residuals(const ValueFunction& v)
{
    FitResiduals f;
    const auto& b = v.boundaries();
    const double K = v.strike();
    auto above = [&](double s) { return v.above(s); };
    auto below = [&](double s) { return v.below(s); };
    f.continuity_u = std::abs(v.above(b.u) - (K - b.u));
    f.derivative_u = detail::one_sided_slope(above, b.u, v.fd_step(b.u), 1.0) + 1.0;
    if (b.l > 0.0) {
        f.continuity_l = std::abs(v.below(b.l) - (K - b.l));
        const double d = std::min(v.fd_step(b.l), 0.2 * b.l);
        f.derivative_l = detail::one_sided_slope(below, b.l, d, -1.0) + 1.0;
    }
    return f;
}

inline FitResiduals fit_residuals(const PricingResult& r) { return fit_residuals(*r.value); }

// One-sided derivative gaps (at l, at u).
inline std::pair<double, double> smooth_fit_residual(const PricingResult& r, const PricingProblem& p)
{
    check_put(p, r.boundaries);
    auto f = fit_residuals(r);
    return {f.derivative_l, f.derivative_u};
}

// Generator sigma^2 s^2/2 f'' + mu s f' + lambda int (f(s e^{-y}) - f(s)) phi e^{-phi y} dy.
inline double generator(const ValueFunction& v, const LevyModel& m, double s, double fp, double fpp)
{
    double a = 0.5 * m.sigma() * m.sigma() * s * s * fpp + m.mu() * s * fp;
    if (!m.has_jumps()) return a;
    const double ph = m.phi(), f0 = v(s);
    auto g = [&](double y) {
        const double w = ph * std::exp(-ph * y);
        return w == 0.0 ? 0.0 : (v(std::max(s * std::exp(-y), 1e-300)) - f0) * w;
    };
    std::vector<double> cuts{0.0};
    const auto& b = v.boundaries();
    for (double edge : {b.u, b.l})
        if (edge > 0.0 && s > edge) cuts.push_back(std::log(s / edge));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) acc += GK::integrate(g, cuts[i], cuts[i + 1], 10, 1e-12);
    acc += GK::integrate(g, cuts.back(), std::numeric_limits<double>::infinity(), 10, 1e-12);
    return a + m.lambda() * acc;
}

inline HjbReport hjb_residual(const ValueFunction& v, const PricingProblem& p,
                              const std::vector<double>& samples)
{
    HjbReport r;
    const auto& b = v.boundaries();
    for (double s : samples) {
        if (!(s > 0.0)) continue;
        const double vs = v(s);
        const double scale = 1.0 + std::abs(vs);
        const double d = v.fd_step(s) * 10.0;
        if (s > b.l && s < b.u) {
            // V = K - s locally
            double gen = generator(v, p.model, s, -1.0, 0.0) - p.omega(s) * vs;
            r.stopping = std::max(r.stopping, std::max(gen, 0.0) / scale);
            ++r.samples;
            continue;
        }
        const bool clear = (s > b.u && s - 2 * d > b.u) || (s < b.l && s + 2 * d < b.l);
        if (!clear || s - 2 * d <= 0.0) continue;
        const double fm = v(s - d), fp = v(s + d);
        const double d1 = (fp - fm) / (2 * d), d2 = (fp - 2 * vs + fm) / (d * d);
        const double res = generator(v, p.model, s, d1, d2) - p.omega(s) * vs;
        r.continuation = std::max(r.continuation, std::abs(res) / scale);
        ++r.samples;
    }
    return r;
}

inline HjbReport hjb_residual(const PricingResult& r, const PricingProblem& p,
                              const std::vector<double>& samples)
{
    return hjb_residual(*r.value, p, samples);
}

// Minimum second difference / h^2 of a uniform curve.
inline double convexity_margin(const std::vector<CurvePoint>& c)
{
    require(c.size() >= 3, "convexity_margin: need 3 points");
    const double h = c[1].s - c[0].s;
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        require(std::abs((c[i + 1].s - c[i].s) - h) <= 1e-9 * h, "convexity_margin: non-uniform grid");
        m = std::min(m, (c[i + 1].value - 2 * c[i].value + c[i - 1].value) / (h * h));
    }
    return m;
}

inline double convexity_margin(const PricingResult& r) { return convexity_margin(r.curve); }

// ---------------------------------------------------------------- optimisation

namespace detail {

inline void finish(PricingResult& r, const PricingProblem& p, const PricerOptions& o)
{
    r.curve = sample_curve(*r.value, o.curve_points, o.curve_span * p.strike);
    r.fit = fit_residuals(*r.value);
    r.diagnostics.convexity_margin = convexity_margin(r.curve);
    std::vector<double> ss;
    for (const auto& c : r.curve) ss.push_back(c.s);
    r.diagnostics.hjb = hjb_residual(*r.value, p, ss);
    r.diagnostics.s_ref = o.curve_span * p.strike;
    r.diagnostics.objective = (*r.value)(r.diagnostics.s_ref);
    if (!p.omega.concave_nondecreasing())
        r.diagnostics.warnings.push_back(
            "discount is not concave non-decreasing; convexity is not guaranteed");
}

template <class F>
double root_in(F f, double a, double b)
{
    boost::math::tools::eps_tolerance<double> tol(40);
    std::uintmax_t it = 200;
    auto pr = boost::math::tools::toms748_solve(f, a, b, tol, it);
    return 0.5 * (pr.first + pr.second);
}

// Maximiser of g on a uniform grid of (0, K) followed by a root of the first-order condition.
// dfoc(x) > 0 means g is decreasing at x.
template <class G, class Foc>
std::optional<double> grid_then_root(G g, Foc foc, double K, std::size_t n, bool& at_edge)
{
    std::size_t best = 1;
    double gb = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
        const double x = K * static_cast<double>(i) / static_cast<double>(n);
        const double v = g(x);
        if (v > gb) gb = v, best = i;
    }
    at_edge = best == 1 || best == n - 1;
    const double step = K / static_cast<double>(n);
    const double a = best == 1 ? 1e-6 * K : step * static_cast<double>(best - 1);
    const double b = step * static_cast<double>(best + 1);
    const double fa = foc(a), fb = foc(b);
    if (fa < 0.0 && fb > 0.0) {
        at_edge = false;
        return root_in(foc, a, b);
    }
    return std::nullopt;
}

inline PricingResult optimize_bs(const PricingProblem& p, const PricerOptions& o)
{
    PricingResult r;
    const double K = p.strike;
    auto hs = std::make_shared<HSolution>(solve_h_ode(p.model, p.omega, bs_range(p, o)));
    r.diagnostics.route = "h-ode";
    r.diagnostics.upper_branch = to_string(hs->upper_rule);
    for (const auto& w : hs->warnings) r.diagnostics.warnings.push_back(w);

    bool edge = false;
    auto gu = [&](double u) { return std::log(K - u) - hs->upper.log_h(u); };
    auto fu = [&](double u) { return u + (K - u) * hs->upper.dlog(u); };
    auto u = grid_then_root(gu, fu, K, o.coarse, edge);
    double ustar;
    if (!u) {
        r.diagnostics.degenerate = true;
        ustar = fu(K * (1.0 - 1e-9)) < 0.0 ? K : 1e-6 * K;
        r.diagnostics.warnings.push_back("upper boundary at the edge of (0, K); degenerate stopping set");
    } else {
        ustar = *u;
    }

    double lstar = 0.0;
    if (p.omega.lower_bound() < 0.0) {
        auto gl = [&](double l) { return std::log(K - l) - hs->lower.log_h(l); };
        auto fl = [&](double l) { return l + (K - l) * hs->lower.dlog(l); };
        bool ledge = false;
        auto l = grid_then_root(gl, fl, K, o.coarse, ledge);
        if (l) lstar = *l;
    }
    if (lstar > ustar) {
        r.diagnostics.degenerate = true;
        r.diagnostics.warnings.push_back("lower boundary above upper boundary; using a point stopping set");
        lstar = ustar;
    }
    r.boundaries = {lstar, ustar};
    r.value = std::make_shared<BsValue>(hs, K, r.boundaries);
    r.diagnostics.evaluations = 2 * o.coarse;
    finish(r, p, o);
    return r;
}

class CrashObjective {
public:
    CrashObjective(const PricingProblem& p, const PricerOptions& o, bool two_sided)
        : p_(p), o_(o), two_sided_(two_sided), s_ref_(o.curve_span * p.strike)
    {
        if (two_sided_)
            up_ = std::make_shared<UpwardPassage>(p.model, p.omega, std::log(p.strike), o.scale);
    }

    const CrashParts& parts(double u)
    {
        auto it = cache_.find(u);
        if (it != cache_.end()) return it->second;
        if (cache_.size() > 256) cache_.clear();
        return cache_.emplace(u, crash_parts(p_, u, s_ref_, o_, two_sided_)).first->second;
    }

    std::shared_ptr<const CrashValue> value(double l, double u)
    {
        ++evaluations;
        return std::make_shared<CrashValue>(p_, Boundaries{l, u}, parts(u), l > 0.0 ? up_ : nullptr);
    }

    double operator()(double l, double u) { return (*value(l, u))(s_ref_); }

    std::size_t evaluations = 0;

private:
    const PricingProblem& p_;
    const PricerOptions& o_;
    bool two_sided_;
    double s_ref_;
    std::shared_ptr<const UpwardPassage> up_;
    std::map<double, CrashParts> cache_;
};

inline PricingResult optimize_crash(const PricingProblem& p, const PricerOptions& o)
{
    PricingResult r;
    const double K = p.strike;
    const bool two_sided = p.omega.lower_bound() < 0.0;
    r.diagnostics.route = two_sided ? "crash-two-sided" : "crash-one-sided";
    CrashObjective obj(p, o, two_sided);
    const std::size_t n = o.coarse;
    const double step = K / static_cast<double>(n);
    double lstar = 0.0, ustar = K;

    if (!two_sided) {
        std::size_t best = 1;
        double vb = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i <= n; ++i) {
            const double v = obj(0.0, step * static_cast<double>(i));
            if (v > vb) vb = v, best = i;
        }
        const double a = std::max(step * static_cast<double>(best - 1), 1e-6 * K);
        const double b = std::min(K, step * static_cast<double>(best + 1));
        if (best == n) {
            r.diagnostics.degenerate = true;
            r.diagnostics.warnings.push_back("upper boundary at u = K; immediate exercise below K");
        }
        // The fit condition pins the maximiser down precisely: continuous fit V(u+) = K - u
        // without diffusion, smooth fit V'(u+) = -1 with it.  Brent on the value is the
        // fallback when the bracket shows no sign change.
        auto fit = [&](double u) {
            auto v = obj.value(0.0, u);
            if (p.model.sigma() == 0.0) return v->above(u) - (K - u);
            return fit_residuals(*v).derivative_u;
        };
        if (!r.diagnostics.degenerate && fit(a) < 0.0 && fit(b) > 0.0) {
            ustar = root_in(fit, a, b);
        } else {
            std::uintmax_t it = 80;
            auto mn = boost::math::tools::brent_find_minima([&](double u) { return -obj(0.0, u); },
                                                            a, b, 40, it);
            ustar = mn.first;
            if (!r.diagnostics.degenerate)
                r.diagnostics.warnings.push_back("fit condition not bracketed; boundary is the value maximiser");
        }
    } else {
        double vb = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j <= n; ++j) {
            const double u = step * static_cast<double>(j);
            for (std::size_t i = 0; i <= j; ++i) {
                const double l = step * static_cast<double>(i);
                const double v = obj(l, u);
                if (v > vb) vb = v, lstar = l, ustar = u;
            }
        }
        double d = step;
        for (int round = 0; round < o.refine_rounds; ++round) {
            const double l0 = lstar, u0 = ustar;
            const double dd = 2.0 * d / static_cast<double>(o.refine_points);
            for (std::size_t j = 0; j <= o.refine_points; ++j) {
                const double u = u0 - d + dd * static_cast<double>(j);
                if (u <= 0.0 || u > K) continue;
                for (std::size_t i = 0; i <= o.refine_points; ++i) {
                    const double l = std::max(0.0, l0 - d + dd * static_cast<double>(i));
                    if (l > u) continue;
                    const double v = obj(l, u);
                    if (v > vb) vb = v, lstar = l, ustar = u;
                }
            }
            d = dd;
        }
        if (ustar >= K) r.diagnostics.degenerate = true;
    }
    r.boundaries = {lstar, ustar};
    r.value = obj.value(lstar, ustar);
    r.diagnostics.evaluations = obj.evaluations;
    finish(r, p, o);
    return r;
}

} // namespace detail

inline PricingResult optimize_boundaries(const PricingProblem& p, const PricerOptions& o = {})
{
    require(p.payoff == Payoff::put, "optimize_boundaries: put payoff expected");
    require(p.strike > 0.0, "optimize_boundaries: strike must be > 0");
    require(p.model.spectrally_negative(), "optimize_boundaries: model must be spectrally negative");
    if (!p.model.has_jumps()) return detail::optimize_bs(p, o);
    return detail::optimize_crash(p, o);
}

// ---------------------------------------------------------------- put-call symmetry

struct DualPut {
    PricingProblem problem;  // dual model, dual discount, strike s
    double spot;             // K
    Boundaries boundaries;   // (sK/u, sK/l)
};

// Call at spot s with stopping set [l, u] (u may be +inf) as a put under the dual measure.
inline DualPut putcall_transform(const PricingProblem& call, double s, Boundaries b)
{
    require(call.payoff == Payoff::call, "putcall_transform: call payoff expected");
    require(s > 0.0 && call.strike > 0.0, "putcall_transform: s and K must be > 0");
    require(b.l > 0.0 && b.l <= b.u, "putcall_transform: needs 0 < l <= u");
    const auto& m = call.model;
    const double psi1 = laplace_exponent(m, 1.0);
    const double sk = s * call.strike;
    JumpSign sign = m.jump_sign() == JumpSign::down ? JumpSign::up : JumpSign::down;
    LevyModel dual = m.has_jumps()
                         ? LevyModel::from_zeta(-m.zeta() - m.sigma() * m.sigma(), m.sigma(),
                                                m.lambda() * m.phi() / (m.phi() + 1.0), m.phi() + 1.0, sign)
                         : LevyModel::from_zeta(-m.zeta() - m.sigma() * m.sigma(), m.sigma());
    DualPut d{{dual, call.omega.reflect(sk, -psi1), s, Payoff::put},
              call.strike,
              {std::isinf(b.u) ? 0.0 : sk / b.u, sk / b.l}};
    return d;
}

} // namespace omega
