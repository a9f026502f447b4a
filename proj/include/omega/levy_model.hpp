#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "error.hpp"

namespace omega {

enum class JumpSign { down, up };

// X_t = zeta t + sigma B_t -/+ compound Poisson(lambda) with Exp(phi) marks.
// Only the downward (spectrally negative) sign is used by the analytics;
// upward jumps exist for the dual side of put-call symmetry.
class LevyModel {
public:
    static LevyModel from_mu(double mu, double sigma, double lambda = 0.0, double phi = 1.0,
                             JumpSign sign = JumpSign::down)
    {
        return LevyModel(mu - 0.5 * sigma * sigma, mu, sigma, lambda, phi, sign);
    }

    static LevyModel from_zeta(double zeta, double sigma, double lambda = 0.0, double phi = 1.0,
                               JumpSign sign = JumpSign::down)
    {
        return LevyModel(zeta, zeta + 0.5 * sigma * sigma, sigma, lambda, phi, sign);
    }

    double zeta() const { return zeta_; }
    double mu() const { return mu_; }
    double sigma() const { return sigma_; }
    double lambda() const { return lambda_; }
    double phi() const { return phi_; }
    JumpSign jump_sign() const { return sign_; }
    bool has_jumps() const { return lambda_ > 0.0; }
    bool spectrally_negative() const { return sign_ == JumpSign::down || lambda_ == 0.0; }

private:
    LevyModel(double zeta, double mu, double sigma, double lambda, double phi, JumpSign sign)
        : zeta_(zeta), mu_(mu), sigma_(sigma), lambda_(lambda), phi_(phi), sign_(sign)
    {
        require(std::isfinite(zeta) && std::isfinite(sigma) && std::isfinite(lambda) &&
                    std::isfinite(phi),
                "LevyModel: non-finite parameter");
        require(sigma >= 0.0, "LevyModel: sigma must be >= 0");
        require(lambda >= 0.0, "LevyModel: lambda must be >= 0");
        require(phi > 0.0, "LevyModel: phi must be > 0");
        require(sigma > 0.0 || lambda > 0.0, "LevyModel: sigma = 0 requires lambda > 0");
        if (sigma == 0.0 && sign == JumpSign::down)
            require(zeta > 0.0, "LevyModel: sigma = 0 with downward jumps requires zeta > 0");
    }

    double zeta_, mu_, sigma_, lambda_, phi_;
    JumpSign sign_;
};

inline double martingale_drift(double r, double lambda, double phi)
{
    require(phi > 0.0, "martingale_drift: phi must be > 0");
    return r + lambda / (phi + 1.0);
}

// Model with psi(1) = r.
inline LevyModel calibrated_model(double r, double sigma, double lambda = 0.0, double phi = 1.0)
{
    return LevyModel::from_mu(martingale_drift(r, lambda, phi), sigma, lambda, phi);
}

inline double laplace_exponent(const LevyModel& m, double theta)
{
    const double s2 = m.sigma() * m.sigma();
    double v = m.zeta() * theta + 0.5 * s2 * theta * theta;
    if (m.lambda() > 0.0) {
        if (m.jump_sign() == JumpSign::down) {
            require(theta > -m.phi(), "laplace_exponent: theta <= -phi");
            v -= m.lambda() * theta / (m.phi() + theta);
        } else {
            require(theta < m.phi(), "laplace_exponent: theta >= phi for upward jumps");
            v += m.lambda() * theta / (m.phi() - theta);
        }
    }
    return v;
}

// psi' as a rational function; also valid below -phi (used for the residues).
inline double psi_derivative(const LevyModel& m, double theta)
{
    const double s2 = m.sigma() * m.sigma();
    double v = m.zeta() + s2 * theta;
    if (m.lambda() > 0.0) {
        if (m.jump_sign() == JumpSign::down) {
            double d = m.phi() + theta;
            v -= m.lambda() * m.phi() / (d * d);
        } else {
            double d = m.phi() - theta;
            v += m.lambda() * m.phi() / (d * d);
        }
    }
    return v;
}

namespace detail {

// Plain bisection to full double resolution. f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F&& f, double lo, double hi)
{
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        std::ostringstream os;
        os << "bisect: no sign change on [" << lo << ", " << hi << "]";
        throw ConvergenceError(os.str());
    }
    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Grow hi geometrically from start until pred(hi) holds.
template <class P>
double grow_until(P&& pred, double start, const char* who)
{
    double x = std::max(start, 1.0);
    for (int k = 0; k < 200; ++k) {
        if (pred(x)) return x;
        x *= 2.0;
    }
    std::ostringstream os;
    os << who << ": bracket search failed up to " << x;
    throw ConvergenceError(os.str());
}

// argmin of psi on (-phi, inf) (downward jumps) or on R (no jumps).
inline double psi_argmin(const LevyModel& m)
{
    const double s2 = m.sigma() * m.sigma();
    if (m.lambda() == 0.0) return -m.zeta() / s2;
    auto dpsi = [&](double t) { return psi_derivative(m, t); };
    const double lo = -m.phi();
    if (s2 == 0.0 && m.zeta() <= 0.0)
        throw ValidationError("psi has no minimiser: sigma = 0 and zeta <= 0");
    double hi = grow_until([&](double t) { return dpsi(t) > 0.0; }, 1.0, "psi_argmin");
    // psi' -> -inf at -phi; start one ulp to the right of the pole
    double a = std::nextafter(lo, std::numeric_limits<double>::infinity());
    return bisect(dpsi, a, hi);
}

} // namespace detail

// Largest theta >= 0 with psi(theta) = q.
inline double phi_right_inverse(const LevyModel& m, double q)
{
    require(m.spectrally_negative(), "phi_right_inverse: model must be spectrally negative");
    double lo = std::max(0.0, detail::psi_argmin(m));
    // q < 0 is allowed when psi dips below it
    require(q >= 0.0 || laplace_exponent(m, lo) < q, "phi_right_inverse: q below min psi");
    auto f = [&](double t) { return laplace_exponent(m, t) - q; };
    if (q == 0.0 && lo == 0.0) return 0.0;
    double hi = detail::grow_until([&](double t) { return f(t) > 0.0; }, 2.0 * lo + 1.0,
                                   "phi_right_inverse");
    if (f(lo) > 0.0) {
        std::ostringstream os;
        os << "phi_right_inverse: psi(" << lo << ") > q at the lower bracket end";
        throw ConvergenceError(os.str());
    }
    return detail::bisect(f, lo, hi);
}

struct RootDecomposition {
    std::vector<double> gammas;
    std::vector<double> upsilons;
    double q = 0.0;

    // W^{(q)}(x) = sum Upsilon_i e^{gamma_i x}, x >= 0.
    double w(double x) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < gammas.size(); ++i) s += upsilons[i] * std::exp(gammas[i] * x);
        return s;
    }
    double w_prime(double x) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < gammas.size(); ++i)
            s += upsilons[i] * gammas[i] * std::exp(gammas[i] * x);
        return s;
    }
    double w0() const
    {
        double s = 0.0;
        for (double u : upsilons) s += u;
        return s;
    }
};

// Real roots of psi(gamma) = q with Upsilon_i = 1/psi'(gamma_i).
// For q = 0 the trivial root 0 comes first; the remaining roots are ascending.
inline RootDecomposition psi_roots(const LevyModel& m, double q = 0.0)
{
    require(m.spectrally_negative(), "psi_roots: model must be spectrally negative");
    const double s2 = m.sigma() * m.sigma();
    const double z = m.zeta(), lam = m.lambda(), ph = m.phi();
    RootDecomposition out;
    out.q = q;
    std::vector<double> roots;

    if (q == 0.0) {
        // Divide the root 0 out of (psi(g))(phi+g): Q(g) = (zeta + s2 g/2)(phi+g) - lambda.
        auto Q = [&](double g) {
            if (lam == 0.0) return z + 0.5 * s2 * g;
            return (z + 0.5 * s2 * g) * (ph + g) - lam;
        };
        roots.push_back(0.0);
        if (lam == 0.0) {
            roots.push_back(-2.0 * z / s2);
        } else if (s2 == 0.0) {
            // Q linear with slope zeta > 0
            roots.push_back(lam / z - ph);
        } else {
            // Q(-phi) = -lambda < 0, Q -> +inf on both sides
            double left = -ph - detail::grow_until([&](double d) { return Q(-ph - d) > 0.0; }, 1.0,
                                                   "psi_roots");
            double right = -ph + detail::grow_until([&](double d) { return Q(-ph + d) > 0.0; },
                                                    1.0, "psi_roots");
            roots.push_back(detail::bisect(Q, left, -ph));
            roots.push_back(detail::bisect(Q, -ph, right));
        }
    } else {
        // Clear the pole: P(g) = (zeta g + s2 g^2/2 - q)(phi+g) - lambda g.
        auto P = [&](double g) {
            double base = z * g + 0.5 * s2 * g * g - q;
            if (lam == 0.0) return base;
            return base * (ph + g) - lam * g;
        };
        const double tm = detail::psi_argmin(m);
        auto f = [&](double t) { return laplace_exponent(m, t) - q; };
        require(f(tm) < 0.0, "psi_roots: psi - q has no real roots");
        if (lam == 0.0) {
            double w = detail::grow_until([&](double d) { return P(tm - d) > 0.0; }, 1.0,
                                          "psi_roots");
            roots.push_back(detail::bisect(P, tm - w, tm));
        } else {
            if (s2 > 0.0) {
                double w = detail::grow_until([&](double d) { return P(-ph - d) < 0.0; }, 1.0,
                                              "psi_roots");
                roots.push_back(detail::bisect(P, -ph - w, -ph));
            }
            roots.push_back(detail::bisect(P, -ph, tm));
        }
        double w = detail::grow_until([&](double d) { return f(tm + d) > 0.0; }, 1.0, "psi_roots");
        roots.push_back(detail::bisect(f, tm, tm + w));
        std::sort(roots.begin(), roots.end());
    }

    for (std::size_t i = 0; i < roots.size(); ++i)
        for (std::size_t j = i + 1; j < roots.size(); ++j)
            if (std::abs(roots[i] - roots[j]) <= 1e-9 * (1.0 + std::abs(roots[i])))
                throw ValidationError("psi_roots: degenerate (repeated) root; lambda = phi*mu?");

    out.gammas = roots;
    for (double g : roots) out.upsilons.push_back(1.0 / psi_derivative(m, g));
    return out;
}

inline LevyModel esscher_tilt(const LevyModel& m, double alpha)
{
    require(alpha >= 0.0, "esscher_tilt: alpha must be >= 0");
    require(m.spectrally_negative(), "esscher_tilt: model must be spectrally negative");
    if (alpha == 0.0) return m;
    const double s2 = m.sigma() * m.sigma();
    return LevyModel::from_zeta(m.zeta() + s2 * alpha, m.sigma(),
                                m.lambda() * m.phi() / (m.phi() + alpha), m.phi() + alpha);
}

} // namespace omega
