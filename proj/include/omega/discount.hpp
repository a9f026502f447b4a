#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "error.hpp"
#include "levy_model.hpp"

namespace omega {

namespace rate {

struct Constant {
    double r;
};

// r + rho on one side of the level y (s <= y for below, s >= y for above).
struct Step {
    double r;
    double rho;
    double y;
    bool below = true;
};

// C s
struct Linear {
    double c;
};

// -C/(s+1) - D
struct Rational {
    double c;
    double d;
};

// (log s - log K)^+
struct LogArea {
    double k;
};

// Piecewise-linear through (s_i, w_i), s strictly increasing.
struct Tabulated {
    std::vector<double> s;
    std::vector<double> w;
};

} // namespace rate

using RateKind = std::variant<rate::Constant, rate::Step, rate::Linear, rate::Rational,
                              rate::LogArea, rate::Tabulated>;

// Taylor data of omega at s = 0: omega(s) = sum coef[k] s^k for s < radius.
struct TaylorAtZero {
    std::vector<double> coef;
    double radius;
};

// omega(s), optionally seen through the reflection s -> a/s plus an additive offset
// (the form the put-call dual discount takes).
class DiscountFn {
public:
    DiscountFn(RateKind kind) : kind_(std::move(kind)) { validate(); }

    static DiscountFn constant(double r) { return DiscountFn(rate::Constant{r}); }
    static DiscountFn step(double r, double rho, double y, bool below = true)
    {
        return DiscountFn(rate::Step{r, rho, y, below});
    }
    static DiscountFn linear(double c) { return DiscountFn(rate::Linear{c}); }
    static DiscountFn rational(double c, double d) { return DiscountFn(rate::Rational{c, d}); }
    static DiscountFn log_area(double k) { return DiscountFn(rate::LogArea{k}); }
    static DiscountFn tabulated(std::vector<double> s, std::vector<double> w)
    {
        return DiscountFn(rate::Tabulated{std::move(s), std::move(w)});
    }

    const RateKind& kind() const { return kind_; }
    bool reflected() const { return reflect_ > 0.0; }

    // s -> omega(a/s) + offset
    DiscountFn reflect(double a, double offset) const
    {
        require(a > 0.0, "DiscountFn::reflect: a must be > 0");
        require(!reflected(), "DiscountFn::reflect: already reflected");
        DiscountFn out = *this;
        out.reflect_ = a;
        out.offset_ = offset_ + offset;
        return out;
    }
    DiscountFn shifted(double offset) const
    {
        DiscountFn out = *this;
        out.offset_ += offset;
        return out;
    }

    double operator()(double s) const
    {
        require(s > 0.0, "DiscountFn: s must be > 0");
        return base(reflected() ? reflect_ / s : s) + offset_;
    }

    // d omega / ds; throws where the kind is not differentiable.
    double derivative(double s) const
    {
        if (!reflected()) return base_derivative(s);
        double t = reflect_ / s;
        return -base_derivative(t) * t / s;
    }

    bool differentiable() const
    {
        return std::holds_alternative<rate::Constant>(kind_) ||
               std::holds_alternative<rate::Linear>(kind_) ||
               std::holds_alternative<rate::Rational>(kind_);
    }

    double lower_bound() const { return lower_ + offset_; }

    std::optional<double> limit_at_zero() const
    {
        auto v = reflected() ? base_limit_inf() : base_limit_zero();
        if (v) *v += offset_;
        return v;
    }
    std::optional<double> limit_at_infinity() const
    {
        auto v = reflected() ? base_limit_zero() : base_limit_inf();
        if (v) *v += offset_;
        return v;
    }

    std::optional<TaylorAtZero> taylor_at_zero(int terms) const
    {
        if (reflected()) {
            // omega(a/s) is flat near 0 only if the base is flat near infinity
            if (auto c = flat_at_infinity()) return TaylorAtZero{{*c + offset_}, c_flat_radius()};
            return std::nullopt;
        }
        TaylorAtZero t;
        t.coef.assign(1, 0.0);
        if (auto* k = std::get_if<rate::Constant>(&kind_)) {
            t.coef[0] = k->r;
            t.radius = std::numeric_limits<double>::infinity();
        } else if (auto* k = std::get_if<rate::Step>(&kind_)) {
            t.coef[0] = k->below ? k->r + k->rho : k->r;
            t.radius = k->y;
        } else if (auto* k = std::get_if<rate::Linear>(&kind_)) {
            t.coef = {0.0, k->c};
            t.radius = std::numeric_limits<double>::infinity();
        } else if (auto* k = std::get_if<rate::Rational>(&kind_)) {
            // -C/(1+s) - D = -(C+D) + C s - C s^2 + ...
            t.coef.resize(static_cast<std::size_t>(std::max(terms, 1)));
            t.coef[0] = -(k->c + k->d);
            double sign = 1.0;
            for (std::size_t j = 1; j < t.coef.size(); ++j) {
                t.coef[j] = sign * k->c;
                sign = -sign;
            }
            t.radius = 1.0;
        } else if (auto* k = std::get_if<rate::LogArea>(&kind_)) {
            t.coef[0] = 0.0;
            t.radius = k->k;
        } else {
            return std::nullopt;
        }
        t.coef[0] += offset_;
        return t;
    }

    // Constant value on (0,1] if there is one.
    std::optional<double> flat_below_one() const
    {
        if (!reflected()) {
            if (auto* k = std::get_if<rate::Constant>(&kind_)) return k->r + offset_;
            if (auto* k = std::get_if<rate::Step>(&kind_)) {
                if (k->rho == 0.0) return k->r + offset_;
                if (k->below && k->y >= 1.0) return k->r + k->rho + offset_;
                if (!k->below && k->y > 1.0) return k->r + offset_;
                return std::nullopt;
            }
            if (auto* k = std::get_if<rate::Linear>(&kind_)) {
                if (k->c == 0.0) return offset_;
                return std::nullopt;
            }
            if (auto* k = std::get_if<rate::Rational>(&kind_)) {
                if (k->c == 0.0) return -k->d + offset_;
                return std::nullopt;
            }
            if (auto* k = std::get_if<rate::LogArea>(&kind_)) {
                if (k->k >= 1.0) return offset_;
                return std::nullopt;
            }
        }
        // sampled check for reflected and tabulated kinds
        const auto* tab = std::get_if<rate::Tabulated>(&kind_);
        if (tab && !reflected() && tab->s.front() > 0.0) return std::nullopt;
        double v0 = (*this)(1.0);
        for (int i = 0; i <= 2000; ++i) {
            double s = std::exp(-40.0 * i / 2000.0);
            if (tab && reflected() && reflect_ / s > tab->s.back()) return std::nullopt;
            if ((*this)(s) != v0) return std::nullopt;
        }
        return v0;
    }

    // Hypotheses of the convexity theorem (advisory).
    bool concave_nondecreasing() const
    {
        if (reflected()) return std::holds_alternative<rate::Constant>(kind_);
        if (std::holds_alternative<rate::Constant>(kind_)) return true;
        if (auto* k = std::get_if<rate::Linear>(&kind_)) return k->c >= 0.0;
        if (auto* k = std::get_if<rate::Rational>(&kind_)) return k->c >= 0.0;
        if (auto* k = std::get_if<rate::Step>(&kind_)) return k->rho == 0.0;
        if (auto* k = std::get_if<rate::Tabulated>(&kind_)) {
            const auto& s = k->s;
            const auto& w = k->w;
            for (std::size_t i = 1; i < s.size(); ++i)
                if (w[i] < w[i - 1]) return false;
            for (std::size_t i = 1; i + 1 < s.size(); ++i) {
                double sl = (w[i] - w[i - 1]) / (s[i] - s[i - 1]);
                double sr = (w[i + 1] - w[i]) / (s[i + 1] - s[i]);
                if (sr > sl) return false;
            }
            return true;
        }
        return false;
    }

    std::string kind_name() const
    {
        static const char* names[] = {"constant", "step", "linear", "rational", "log_area",
                                      "tabulated"};
        return names[kind_.index()];
    }

private:
    void validate()
    {
        std::visit(
            [this](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, rate::Constant>) {
                    require(std::isfinite(k.r), "constant discount: r must be finite");
                    lower_ = k.r;
                } else if constexpr (std::is_same_v<T, rate::Step>) {
                    require(std::isfinite(k.r) && std::isfinite(k.rho) && k.y > 0.0,
                            "step discount: need finite r, rho and y > 0");
                    lower_ = std::min(k.r, k.r + k.rho);
                } else if constexpr (std::is_same_v<T, rate::Linear>) {
                    require(k.c >= 0.0, "linear discount: C must be >= 0 (bounded below)");
                    lower_ = 0.0;
                } else if constexpr (std::is_same_v<T, rate::Rational>) {
                    require(std::isfinite(k.c) && std::isfinite(k.d),
                            "rational discount: C, D must be finite");
                    lower_ = std::min(-k.c - k.d, -k.d);
                } else if constexpr (std::is_same_v<T, rate::LogArea>) {
                    require(k.k > 0.0, "log_area discount: K must be > 0");
                    lower_ = 0.0;
                } else {
                    require(k.s.size() >= 2 && k.s.size() == k.w.size(),
                            "tabulated discount: need >= 2 knots of matching length");
                    for (std::size_t i = 1; i < k.s.size(); ++i)
                        require(k.s[i] > k.s[i - 1], "tabulated discount: knots must increase");
                    require(k.s.front() > 0.0, "tabulated discount: knots must be > 0");
                    lower_ = *std::min_element(k.w.begin(), k.w.end());
                }
            },
            kind_);
    }

    double base(double s) const
    {
        return std::visit(
            [s](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, rate::Constant>) {
                    return k.r;
                } else if constexpr (std::is_same_v<T, rate::Step>) {
                    bool on = k.below ? s <= k.y : s >= k.y;
                    return on ? k.r + k.rho : k.r;
                } else if constexpr (std::is_same_v<T, rate::Linear>) {
                    return k.c * s;
                } else if constexpr (std::is_same_v<T, rate::Rational>) {
                    return -k.c / (s + 1.0) - k.d;
                } else if constexpr (std::is_same_v<T, rate::LogArea>) {
                    return std::max(std::log(s / k.k), 0.0);
                } else {
                    if (s < k.s.front() || s > k.s.back())
                        throw ValidationError("tabulated discount: s outside the knot hull");
                    auto it = std::upper_bound(k.s.begin(), k.s.end(), s);
                    if (it == k.s.end()) return k.w.back();
                    std::size_t i = static_cast<std::size_t>(it - k.s.begin());
                    double t = (s - k.s[i - 1]) / (k.s[i] - k.s[i - 1]);
                    return k.w[i - 1] + t * (k.w[i] - k.w[i - 1]);
                }
            },
            kind_);
    }

    double base_derivative(double s) const
    {
        if (std::holds_alternative<rate::Constant>(kind_)) return 0.0;
        if (auto* k = std::get_if<rate::Linear>(&kind_)) return k->c;
        if (auto* k = std::get_if<rate::Rational>(&kind_)) return k->c / ((s + 1.0) * (s + 1.0));
        throw ValidationError("discount kind '" + kind_name() +
                              "' is not differentiable; use the renewal-equation route");
    }

    std::optional<double> base_limit_zero() const
    {
        if (auto t = DiscountFn(kind_).taylor_at_zero(1)) return t->coef[0];
        return std::nullopt;
    }

    std::optional<double> base_limit_inf() const
    {
        if (auto* k = std::get_if<rate::Constant>(&kind_)) return k->r;
        if (auto* k = std::get_if<rate::Step>(&kind_)) return k->below ? k->r : k->r + k->rho;
        if (auto* k = std::get_if<rate::Linear>(&kind_)) {
            if (k->c == 0.0) return 0.0;
            return std::nullopt;
        }
        if (auto* k = std::get_if<rate::Rational>(&kind_)) return -k->d;
        return std::nullopt;
    }

    // value of the base on [R, inf) for the kinds constant there
    std::optional<double> flat_at_infinity() const
    {
        if (auto* k = std::get_if<rate::Constant>(&kind_)) return k->r;
        if (auto* k = std::get_if<rate::Step>(&kind_)) return k->below ? k->r : k->r + k->rho;
        return std::nullopt;
    }
    double c_flat_radius() const
    {
        if (auto* k = std::get_if<rate::Step>(&kind_)) return reflect_ / k->y;
        return std::numeric_limits<double>::infinity();
    }

    RateKind kind_;
    double lower_ = 0.0;
    double reflect_ = 0.0;
    double offset_ = 0.0;
};

// x -> omega(u e^x) - psi(alpha)
class LogDiscount {
public:
    LogDiscount(DiscountFn base, double shift = 0.0, double tilt = 0.0)
        : base_(std::move(base)), shift_(shift), tilt_(tilt)
    {
    }

    double operator()(double x) const { return base_(std::exp(x + shift_)) - tilt_; }
    double derivative(double x) const
    {
        double s = std::exp(x + shift_);
        return base_.derivative(s) * s;
    }

    const DiscountFn& base() const { return base_; }
    double shift() const { return shift_; }
    double tilt() const { return tilt_; }

private:
    DiscountFn base_;
    double shift_;
    double tilt_;
};

inline double eval(const DiscountFn& fn, double s) { return fn(s); }

inline LogDiscount shift_tilt(const DiscountFn& fn, double u, const LevyModel& model, double alpha)
{
    require(u > 0.0, "shift_tilt: u must be > 0");
    require(alpha >= 0.0, "shift_tilt: alpha must be >= 0");
    double tilt = alpha == 0.0 ? 0.0 : laplace_exponent(model, alpha);
    return LogDiscount(fn, std::log(u), tilt);
}

inline std::optional<double> check_flat_below_one(const DiscountFn& fn)
{
    return fn.flat_below_one();
}

} // namespace omega
