#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "error.hpp"

namespace omega {

namespace detail {

// Neumaier-compensated running sum.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v)
    {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

inline bool nonpositive_integer(double x)
{
    return x <= 0.0 && x == std::floor(x);
}

} // namespace detail

// Lanczos, g = 7, 9 coefficients.
inline double gamma_fn(double x)
{
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    if (detail::nonpositive_integer(x)) throw ValidationError("gamma_fn: pole at non-positive integer");
    if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_fn(1.0 - x));
    x -= 1.0;
    double a = p[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += p[i] / (x + i);
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

// 1/Gamma(x), zero at the poles.
inline double rgamma_fn(double x)
{
    if (detail::nonpositive_integer(x)) return 0.0;
    return 1.0 / gamma_fn(x);
}

// Gauss 2F1(a, b; c; x) for x < 1.
inline double gauss_2f1(double a, double b, double c, double x)
{
    if (detail::nonpositive_integer(c)) throw ValidationError("gauss_2f1: c is a non-positive integer");
    if (!(x < 1.0)) throw ValidationError("gauss_2f1: requires x < 1");
    if (x == 0.0) return 1.0;
    if (x < -0.5) return std::pow(1.0 - x, -a) * gauss_2f1(a, c - b, c, x / (x - 1.0));

    detail::KahanSum s;
    double term = 1.0;
    s.add(term);
    int quiet = 0;
    for (int n = 0; n < 10000; ++n) {
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * x;
        s.add(term);
        if (term == 0.0) return s.value();
        if (std::abs(term) <= 1e-17 * std::abs(s.value())) {
            if (++quiet == 2) return s.value();
        } else {
            quiet = 0;
        }
    }
    std::ostringstream os;
    os << "gauss_2f1: series did not converge in 1e4 terms (a=" << a << ", b=" << b << ", c=" << c
       << ", x=" << x << ")";
    throw ConvergenceError(os.str());
}

// mantissa * exp(log_scale)
struct ScaledValue {
    double mantissa;
    double log_scale;
    double value() const { return mantissa * std::exp(log_scale); }
};

// Kummer 1F1(a; b; x) with the exponent carried separately.
inline ScaledValue kummer_1f1_scaled(double a, double b, double x)
{
    if (detail::nonpositive_integer(b)) throw ValidationError("kummer_1f1: b is a non-positive integer");
    if (x == 0.0) return {1.0, 0.0};
    if (x < 0.0) {
        // Kummer's transformation keeps the series free of cancellation
        ScaledValue v = kummer_1f1_scaled(b - a, b, -x);
        return {v.mantissa, v.log_scale + x};
    }
    constexpr double big = 1e250;
    const double log_big = std::log(big);
    detail::KahanSum s;
    double term = 1.0;
    double log_scale = 0.0;
    s.add(term);
    int quiet = 0;
    const int budget = 10000 + static_cast<int>(4.0 * x);
    for (int n = 0; n < budget; ++n) {
        term *= (a + n) / ((b + n) * (n + 1.0)) * x;
        s.add(term);
        if (std::abs(s.value()) > big) {
            s.sum /= big;
            s.comp /= big;
            term /= big;
            log_scale += log_big;
        }
        if (term == 0.0) return {s.value(), log_scale};
        if (std::abs(term) <= 1e-17 * std::abs(s.value()) && n > x) {
            if (++quiet == 2) return {s.value(), log_scale};
        } else {
            quiet = 0;
        }
    }
    throw ConvergenceError("kummer_1f1: series did not converge");
}

inline double kummer_1f1(double a, double b, double x)
{
    ScaledValue v = kummer_1f1_scaled(a, b, x);
    double out = v.value();
    if (!std::isfinite(out)) throw ConvergenceError("kummer_1f1: overflow; use kummer_1f1_scaled");
    return out;
}

// Leading large-x behaviour Gamma(b)/Gamma(a) x^{a-b} e^x.
inline double kummer_asymptotic(double a, double b, double x)
{
    return gamma_fn(b) * rgamma_fn(a) * std::pow(x, a - b) * std::exp(x);
}

// weight * 1F1(a; b; A e^x), contributing weight * Gamma(b)/Gamma(a) * A^{a-b} to the
// coefficient of the common leading growth.
struct WeightedKummer {
    std::complex<double> weight;
    double a;
    double b;
};

struct KummerPair {
    WeightedKummer first;
    WeightedKummer second;
    double A;
};

inline std::complex<double> kummer_leading_coefficient(const KummerPair& p)
{
    auto lead = [&](const WeightedKummer& t) {
        return t.weight * (gamma_fn(t.b) * rgamma_fn(t.a) * std::pow(p.A, t.a - t.b));
    };
    return lead(p.first) + lead(p.second);
}

// Re(leading coefficient of numer) / Re(leading coefficient of denom).
inline double kummer_ratio_limit(const KummerPair& numer, const KummerPair& denom)
{
    double n = kummer_leading_coefficient(numer).real();
    double d = kummer_leading_coefficient(denom).real();
    if (d == 0.0 || !std::isfinite(d)) throw ConvergenceError("kummer_ratio_limit: vanishing denominator");
    return n / d;
}

} // namespace omega
