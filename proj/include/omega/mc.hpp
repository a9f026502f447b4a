#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "discount.hpp"
#include "error.hpp"
#include "levy_model.hpp"
#include "pricer.hpp"

// Monte Carlo oracle: exact jump times and sizes, Gaussian increments between them.

namespace omega {

enum class StopReason { hit_l_u, creeped, jumped_in, horizon, negligible };

struct StopEvent {
    double time;
    double price;
    StopReason reason;
};

struct PathSample {
    std::vector<double> times;
    std::vector<double> logprices;
    std::vector<bool> jump_flags;
    double discount_integral = 0.0;
    std::optional<StopEvent> stopped_at;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    // E[e^{-int omega} 1{censored at t_max}]: discounted mass of paths cut by the horizon
    double horizon_truncation_mass = 0.0;
    bool unreliable = false;  // truncation mass above 1%
};

struct McOptions {
    double dt = 0.01;        // largest sub-step
    double t_max = 0.0;      // 0: derived from a positive lower bound of omega
    std::uint64_t seed = 20240601;
    bool antithetic = false;
    unsigned threads = 0;    // 0: OMEGA_PRICER_THREADS or hardware concurrency
    double dt_min = 1e-6;    // floor of the near-barrier refinement
    double snap = 1e-5;      // log-distance treated as a hit
    double barrier_sd = 5.0; // near a barrier, steps keep the increment sd below distance/barrier_sd
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One independent stream per path index; the antithetic twin mirrors every draw.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t stream, bool mirror)
        : gen_(splitmix64(seed ^ splitmix64(stream))), mirror_(mirror)
    {
    }

    double uniform()  // (0, 1)
    {
        const double u = (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
        return mirror_ ? 1.0 - u : u;
    }
    double normal()
    {
        const double z = normal_(gen_);
        return mirror_ ? -z : z;
    }
    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_;
    bool mirror_;
};

inline unsigned worker_count(unsigned requested)
{
    if (requested > 0) return requested;
    if (const char* e = std::getenv("OMEGA_PRICER_THREADS")) {
        const long v = std::strtol(e, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Deterministic pairwise sum.
inline double pairwise_sum(const double* v, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F f)
{
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += threads) f(i);
        });
    for (auto& th : pool) th.join();
}

struct Region {
    double a = -std::numeric_limits<double>::infinity();  // log l
    double b = std::numeric_limits<double>::infinity();   // log u
    bool empty = true;

    bool inside(double x) const { return !empty && x >= a && x <= b; }
    // log-distance to the region (0 inside)
    double distance(double x) const
    {
        if (empty) return std::numeric_limits<double>::infinity();
        if (x > b) return x - b;
        if (x < a) return a - x;
        return 0.0;
    }
    double nearest(double x) const { return x > b ? b : a; }
};

inline Region region_of(Boundaries bd)
{
    Region r;
    r.empty = !(bd.u > 0.0) || bd.u < bd.l;
    if (r.empty) return r;
    r.a = bd.l > 0.0 ? std::log(bd.l) : -std::numeric_limits<double>::infinity();
    r.b = std::isinf(bd.u) ? std::numeric_limits<double>::infinity() : std::log(bd.u);
    return r;
}

struct PathOutcome {
    double discount;   // e^{-int omega}, 0 once negligible
    double price;      // S at stopping (or at the horizon)
    bool censored;
};

// Runs one path until it enters the region or reaches t_max.  `rec` (optional) records the skeleton.
inline PathOutcome run_path(const LevyModel& m, const DiscountFn& w, double s0, const Region& reg,
                            const McOptions& o, double t_max, PathRng& rng, PathSample* rec)
{
    double x = std::log(s0), t = 0.0, I = 0.0;
    const double z = m.zeta(), sig = m.sigma();
    const double jsign = m.jump_sign() == JumpSign::down ? -1.0 : 1.0;
    auto om = [&](double xx) { return w(std::exp(xx)); };
    auto push = [&](double tt, double xx, bool jump) {
        if (!rec) return;
        rec->times.push_back(tt);
        rec->logprices.push_back(xx);
        rec->jump_flags.push_back(jump);
    };
    auto finish = [&](double price, StopReason why, bool censored) {
        if (rec) {
            rec->discount_integral = I;
            rec->stopped_at = StopEvent{t, price, why};
        }
        return PathOutcome{why == StopReason::negligible ? 0.0 : std::exp(-I), price, censored};
    };
    push(0.0, x, false);
    if (reg.inside(x)) return finish(s0, StopReason::hit_l_u, false);

    double t_jump = m.has_jumps() ? rng.exponential(m.lambda()) : std::numeric_limits<double>::infinity();
    for (;;) {
        const double t_next = std::min(t_jump, t_max);
        if (sig == 0.0) {
            // linear motion: exact crossing time, Simpson on sub-steps for the discount
            double t_hit = std::numeric_limits<double>::infinity();
            if (!reg.empty) {
                if (x > reg.b && z < 0.0) t_hit = t + (x - reg.b) / -z;
                if (x < reg.a && z > 0.0) t_hit = t + (reg.a - x) / z;
            }
            const double t_end = std::min(t_next, t_hit);
            const double span = t_end - t;
            const auto k = static_cast<std::size_t>(std::ceil(span / o.dt));
            const double hstep = k > 0 ? span / static_cast<double>(k) : 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                const double x0 = x + z * hstep * static_cast<double>(i);
                I += hstep / 6.0 * (om(x0) + 4.0 * om(x0 + 0.5 * z * hstep) + om(x0 + z * hstep));
                if (rec) push(t + hstep * static_cast<double>(i + 1), x0 + z * hstep, false);
            }
            x += z * span;
            t = t_end;
            if (I > 700.0) return finish(std::exp(x), StopReason::negligible, false);
            if (t_hit <= t_next) {
                x = reg.nearest(x);
                return finish(std::exp(x), StopReason::creeped, false);
            }
        } else {
            while (t < t_next) {
                const double d = reg.distance(x);
                double h = std::min(o.dt, t_next - t);
                if (!reg.empty) {
                    const double r = d / (o.barrier_sd * sig);
                    h = std::min(h, std::max(o.dt_min, r * r));
                }
                const double edge = reg.nearest(x);
                const double xn = x + z * h + sig * std::sqrt(h) * rng.normal();
                I += 0.5 * h * (om(x) + om(xn));
                x = xn;
                t += h;
                push(t, x, false);
                if (reg.distance(x) <= o.snap) {
                    x = edge;  // a continuous path enters through the side it came from
                    return finish(std::exp(x), StopReason::creeped, false);
                }
                if (I > 700.0) return finish(std::exp(x), StopReason::negligible, false);
            }
        }
        if (t >= t_max) return finish(std::exp(x), StopReason::horizon, true);
        // jump
        x += jsign * rng.exponential(m.phi());
        push(t, x, true);
        if (reg.inside(x)) return finish(std::exp(x), StopReason::jumped_in, false);
        t_jump = t + rng.exponential(m.lambda());
    }
}

inline double default_horizon(const DiscountFn& w, double scale, const McOptions& o)
{
    if (o.t_max > 0.0) return o.t_max;
    const double lb = w.lower_bound();
    if (!(lb > 0.0))
        throw ValidationError("stopped_value: t_max is mandatory when omega is not bounded away from 0");
    return std::max(1.0, std::log(std::max(scale, 1.0) / 1e-4) / lb);
}

inline McEstimate reduce(const std::vector<double>& v, const std::vector<double>& cens, bool antithetic)
{
    McEstimate e;
    e.n_paths = v.size();
    std::vector<double> items;
    if (antithetic) {
        for (std::size_t i = 0; i + 1 < v.size(); i += 2) items.push_back(0.5 * (v[i] + v[i + 1]));
    } else {
        items = v;
    }
    const std::size_t n = items.size();
    e.mean = pairwise_sum(items.data(), n) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (items[i] - e.mean) * (items[i] - e.mean);
    const double var = n > 1 ? pairwise_sum(sq.data(), n) / static_cast<double>(n - 1) : 0.0;
    e.std_error = std::sqrt(var / static_cast<double>(n));
    e.horizon_truncation_mass = pairwise_sum(cens.data(), cens.size()) / static_cast<double>(cens.size());
    e.unreliable = e.horizon_truncation_mass > 0.01;
    return e;
}

} // namespace detail

// Skeleton of one path (no stopping) on [0, t_max].
inline PathSample simulate_path(const LevyModel& m, const DiscountFn& w, double s0, double dt,
                                double t_max, std::uint64_t seed)
{
    require(dt > 0.0 && t_max > 0.0 && s0 > 0.0, "simulate_path: needs dt, t_max, s0 > 0");
    McOptions o;
    o.dt = dt;
    detail::PathRng rng(seed, 0, false);
    PathSample p;
    detail::run_path(m, w, s0, detail::Region{}, o, t_max, rng, &p);
    return p;
}

// Estimate of E_s0[e^{-int omega} g(S_tau)], tau = first entry into [l, u].
inline McEstimate stopped_value(const PricingProblem& p, Boundaries b, double s0, std::size_t n_paths,
                                const McOptions& o = {})
{
    require(s0 > 0.0 && n_paths >= 2, "stopped_value: needs s0 > 0 and at least 2 paths");
    require(b.l >= 0.0 && b.l <= b.u, "stopped_value: needs 0 <= l <= u");
    const auto reg = detail::region_of(b);
    McEstimate e;
    e.n_paths = n_paths;
    if (reg.inside(std::log(s0))) {
        e.mean = p.payoff_at(s0);
        return e;
    }
    const double t_max = detail::default_horizon(p.omega, std::max(p.strike, s0), o);
    if (o.antithetic && n_paths % 2) ++n_paths;
    std::vector<double> val(n_paths), cens(n_paths);
    detail::parallel_for(n_paths, detail::worker_count(o.threads), [&](std::size_t i) {
        const std::uint64_t stream = o.antithetic ? i / 2 : i;
        detail::PathRng rng(o.seed, stream, o.antithetic && (i % 2 == 1));
        auto r = detail::run_path(p.model, p.omega, s0, reg, o, t_max, rng, nullptr);
        val[i] = r.censored ? 0.0 : r.discount * p.payoff_at(r.price);
        cens[i] = r.censored ? r.discount : 0.0;
    });
    return detail::reduce(val, cens, o.antithetic);
}

inline McEstimate stopped_value(const LevyModel& m, const DiscountFn& w, double K, Boundaries b,
                                double s0, std::size_t n_paths, double dt, double t_max,
                                const McOptions& base = {})
{
    McOptions o = base;
    o.dt = dt;
    o.t_max = t_max;
    return stopped_value(PricingProblem{m, w, K, Payoff::put}, b, s0, n_paths, o);
}

struct SymmetryCheck {
    McEstimate call;  // call side at spot s
    McEstimate dual;  // dual put at spot K
    DualPut transform;
    double difference() const { return call.mean - dual.mean; }
    double combined_error() const { return std::hypot(call.std_error, dual.std_error); }
};

// Both sides of the put-call symmetry identity for a call stopped on [l, u].
inline SymmetryCheck symmetry_check(const PricingProblem& call, double s, Boundaries b,
                                    std::size_t n_paths, const McOptions& o = {})
{
    require(call.payoff == Payoff::call, "symmetry_check: call payoff expected");
    auto d = putcall_transform(call, s, b);
    McOptions od = o;
    od.seed = detail::splitmix64(o.seed + 1);
    return {stopped_value(call, b, s, n_paths, o),
            stopped_value(d.problem, d.boundaries, d.spot, n_paths, od), d};
}

} // namespace omega
