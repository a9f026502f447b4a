#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "discount.hpp"
#include "error.hpp"
#include "levy_model.hpp"
#include "pricer.hpp"

// Run configuration: flat [section] key = value text.

namespace omega {

struct RunConfig {
    struct Model {
        double sigma = 0.2;
        double lambda = 0.0;
        double phi = 1.0;
        double r = 0.05;
        bool calibrate = true;  // mu = r + lambda/(phi+1)
        double mu = 0.05;       // used when calibrate = false
        std::string jumps = "down";
    } model;
    struct Discount {
        std::string kind = "constant";
        double r = 0.05, rho = 0.0, y = 1.0, c = 0.0, d = 0.0, k = 1.0;
        bool below = true;
        std::vector<double> s, w;
    } discount;
    struct Contract {
        std::string payoff = "put";
        double strike = 20.0;
    } contract;
    struct Task {
        std::string name = "price";  // price | boundaries | scale | mc-check | symmetry | bermudan
        std::vector<double> spots;   // mc-check, symmetry
        double level = 0.0;          // scale: shift level (0: strike)
        std::optional<double> l, u;  // mc-check, symmetry: fixed boundaries (unset: optimised)
        double horizon = 10.0;       // bermudan
        int xi = 6;                  // bermudan: 2^xi exercise dates
    } task;
    struct Numerics {
        std::size_t n = 4001;
        double x_max = 3.0;
        double rel_tol = 1e-6;
        double abs_tol = 1e-10;
        std::size_t coarse = 64;
        std::size_t curve_points = 512;
        double curve_span = 2.0;
        double hode_dx = 0.005;
        std::string upper_branch = "auto";
        double dt = 0.01;
        std::size_t n_paths = 200000;
        std::uint64_t seed = 20240601;
        double t_max = 0.0;
        bool antithetic = false;
        std::size_t bermudan_n = 1401;
    } numerics;
};

namespace detail {

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double to_double(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ValidationError("config: " + key + " is not a number: '" + v + "'");
    }
    if (pos != v.size()) throw ValidationError("config: " + key + " is not a number: '" + v + "'");
    return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ValidationError("config: " + key + " is not a non-negative integer: '" + v + "'");
    }
    if (pos != v.size() || v.find('-') != std::string::npos)
        throw ValidationError("config: " + key + " is not a non-negative integer: '" + v + "'");
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: " + key + " must be true or false");
}

// "auto" leaves the value to the optimiser; "inf" is accepted for an open upper end.
inline std::optional<double> to_optional(const std::string& key, const std::string& v)
{
    if (v == "auto") return std::nullopt;
    if (v == "inf") return std::numeric_limits<double>::infinity();
    return to_double(key, v);
}

inline std::string fmt_optional(const std::optional<double>& v)
{
    if (!v) return "auto";
    if (std::isinf(*v)) return "inf";
    return fmt(*v);
}

inline std::vector<double> to_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
        if (a == std::string::npos) throw ValidationError("config: empty entry in " + key);
        out.push_back(to_double(key, item.substr(a, b - a + 1)));
    }
    return out;
}

inline std::string join(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
}

inline void one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> ok)
{
    for (const char* o : ok)
        if (v == o) return;
    std::string msg = "config: " + key + " must be one of";
    for (const char* o : ok) msg += std::string(" ") + o;
    throw ValidationError(msg);
}

} // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    RunConfig c;
    using detail::to_bool;
    using detail::to_double;
    using detail::to_list;
    using detail::to_u64;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ValidationError("config: key '" + section + "' outside a section");
        for (const auto& [key, node] : body) {
            const std::string v = node.data();
            const std::string k = section + "." + key;
            if (section == "model") {
                if (key == "sigma") c.model.sigma = to_double(k, v);
                else if (key == "lambda") c.model.lambda = to_double(k, v);
                else if (key == "phi") c.model.phi = to_double(k, v);
                else if (key == "r") c.model.r = to_double(k, v);
                else if (key == "calibrate") c.model.calibrate = to_bool(k, v);
                else if (key == "mu") c.model.mu = to_double(k, v);
                else if (key == "jumps") detail::one_of(k, v, {"down", "up"}), c.model.jumps = v;
                else throw ValidationError("config: unknown key " + k);
            } else if (section == "discount") {
                if (key == "kind")
                    detail::one_of(k, v, {"constant", "step", "linear", "rational", "log_area", "tabulated"}),
                        c.discount.kind = v;
                else if (key == "r") c.discount.r = to_double(k, v);
                else if (key == "rho") c.discount.rho = to_double(k, v);
                else if (key == "y") c.discount.y = to_double(k, v);
                else if (key == "below") c.discount.below = to_bool(k, v);
                else if (key == "c") c.discount.c = to_double(k, v);
                else if (key == "d") c.discount.d = to_double(k, v);
                else if (key == "k") c.discount.k = to_double(k, v);
                else if (key == "s") c.discount.s = to_list(k, v);
                else if (key == "w") c.discount.w = to_list(k, v);
                else throw ValidationError("config: unknown key " + k);
            } else if (section == "contract") {
                if (key == "payoff") detail::one_of(k, v, {"put", "call"}), c.contract.payoff = v;
                else if (key == "strike") c.contract.strike = to_double(k, v);
                else throw ValidationError("config: unknown key " + k);
            } else if (section == "task") {
                if (key == "name")
                    detail::one_of(k, v, {"price", "boundaries", "scale", "mc-check", "symmetry", "bermudan"}),
                        c.task.name = v;
                else if (key == "spots") c.task.spots = to_list(k, v);
                else if (key == "level") c.task.level = to_double(k, v);
                else if (key == "l") c.task.l = detail::to_optional(k, v);
                else if (key == "u") c.task.u = detail::to_optional(k, v);
                else if (key == "horizon") c.task.horizon = to_double(k, v);
                else if (key == "xi") c.task.xi = static_cast<int>(to_u64(k, v));
                else throw ValidationError("config: unknown key " + k);
            } else if (section == "numerics") {
                auto& n = c.numerics;
                if (key == "n") n.n = to_u64(k, v);
                else if (key == "x_max") n.x_max = to_double(k, v);
                else if (key == "rel_tol") n.rel_tol = to_double(k, v);
                else if (key == "abs_tol") n.abs_tol = to_double(k, v);
                else if (key == "coarse") n.coarse = to_u64(k, v);
                else if (key == "curve_points") n.curve_points = to_u64(k, v);
                else if (key == "curve_span") n.curve_span = to_double(k, v);
                else if (key == "hode_dx") n.hode_dx = to_double(k, v);
                else if (key == "upper_branch")
                    detail::one_of(k, v, {"auto", "frobenius_at_zero", "minimal_at_infinity"}), n.upper_branch = v;
                else if (key == "dt") n.dt = to_double(k, v);
                else if (key == "n_paths") n.n_paths = to_u64(k, v);
                else if (key == "seed") n.seed = to_u64(k, v);
                else if (key == "t_max") n.t_max = to_double(k, v);
                else if (key == "antithetic") n.antithetic = to_bool(k, v);
                else if (key == "bermudan_n") n.bermudan_n = to_u64(k, v);
                else throw ValidationError("config: unknown key " + k);
            } else {
                throw ValidationError("config: unknown section [" + section + "]");
            }
        }
    }
    require(c.contract.strike > 0.0, "config: contract.strike must be > 0");
    require(c.numerics.n >= 21 && c.numerics.x_max > 0.0, "config: numerics.n >= 21 and x_max > 0");
    require(c.numerics.coarse >= 4, "config: numerics.coarse must be >= 4");
    require(c.numerics.curve_points >= 3, "config: numerics.curve_points must be >= 3");
    require(c.numerics.dt > 0.0 && c.numerics.n_paths >= 2, "config: numerics.dt > 0, n_paths >= 2");
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot read " + path);
    return parse_config(in);
}

// Fully resolved configuration; parse_config(emit_config(c)) reproduces c.
inline std::string emit_config(const RunConfig& c)
{
    using detail::fmt;
    std::ostringstream o;
    auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[model]\n"
      << "sigma = " << fmt(c.model.sigma) << "\nlambda = " << fmt(c.model.lambda)
      << "\nphi = " << fmt(c.model.phi) << "\nr = " << fmt(c.model.r)
      << "\ncalibrate = " << b(c.model.calibrate) << "\nmu = " << fmt(c.model.mu)
      << "\njumps = " << c.model.jumps << "\n\n";
    const auto& d = c.discount;
    o << "[discount]\nkind = " << d.kind << "\n";
    if (d.kind == "constant") o << "r = " << fmt(d.r) << "\n";
    if (d.kind == "step")
        o << "r = " << fmt(d.r) << "\nrho = " << fmt(d.rho) << "\ny = " << fmt(d.y)
          << "\nbelow = " << b(d.below) << "\n";
    if (d.kind == "linear") o << "c = " << fmt(d.c) << "\n";
    if (d.kind == "rational") o << "c = " << fmt(d.c) << "\nd = " << fmt(d.d) << "\n";
    if (d.kind == "log_area") o << "k = " << fmt(d.k) << "\n";
    if (d.kind == "tabulated") o << "s = " << detail::join(d.s) << "\nw = " << detail::join(d.w) << "\n";
    o << "\n[contract]\npayoff = " << c.contract.payoff << "\nstrike = " << fmt(c.contract.strike)
      << "\n\n";
    o << "[task]\nname = " << c.task.name << "\n";
    if (!c.task.spots.empty()) o << "spots = " << detail::join(c.task.spots) << "\n";
    o << "level = " << fmt(c.task.level) << "\nl = " << detail::fmt_optional(c.task.l)
      << "\nu = " << detail::fmt_optional(c.task.u) << "\nhorizon = " << fmt(c.task.horizon) << "\nxi = " << c.task.xi
      << "\n\n";
    const auto& n = c.numerics;
    o << "[numerics]\nn = " << n.n << "\nx_max = " << fmt(n.x_max) << "\nrel_tol = " << fmt(n.rel_tol)
      << "\nabs_tol = " << fmt(n.abs_tol) << "\ncoarse = " << n.coarse
      << "\ncurve_points = " << n.curve_points << "\ncurve_span = " << fmt(n.curve_span)
      << "\nhode_dx = " << fmt(n.hode_dx) << "\nupper_branch = " << n.upper_branch
      << "\ndt = " << fmt(n.dt) << "\nn_paths = " << n.n_paths << "\nseed = " << n.seed
      << "\nt_max = " << fmt(n.t_max) << "\nantithetic = " << b(n.antithetic)
      << "\nbermudan_n = " << n.bermudan_n << "\n";
    return o.str();
}

inline LevyModel model_of(const RunConfig& c)
{
    const auto& m = c.model;
    const JumpSign sign = m.jumps == "up" ? JumpSign::up : JumpSign::down;
    const double mu = m.calibrate ? martingale_drift(m.r, m.lambda, m.phi) : m.mu;
    return LevyModel::from_mu(mu, m.sigma, m.lambda, m.phi, sign);
}

inline DiscountFn discount_of(const RunConfig& c)
{
    const auto& d = c.discount;
    if (d.kind == "constant") return DiscountFn::constant(d.r);
    if (d.kind == "step") return DiscountFn::step(d.r, d.rho, d.y, d.below);
    if (d.kind == "linear") return DiscountFn::linear(d.c);
    if (d.kind == "rational") return DiscountFn::rational(d.c, d.d);
    if (d.kind == "log_area") return DiscountFn::log_area(d.k);
    return DiscountFn::tabulated(d.s, d.w);
}

inline PricingProblem problem_of(const RunConfig& c)
{
    return {model_of(c), discount_of(c), c.contract.strike,
            c.contract.payoff == "call" ? Payoff::call : Payoff::put};
}

inline PricerOptions pricer_options_of(const RunConfig& c)
{
    PricerOptions o;
    const auto& n = c.numerics;
    o.scale.n = n.n;
    o.scale.x_max = n.x_max;
    o.scale.rel_tol = n.rel_tol;
    o.scale.abs_tol = n.abs_tol;
    o.coarse = n.coarse;
    o.curve_points = n.curve_points;
    o.curve_span = n.curve_span;
    o.hode.dx = n.hode_dx;
    o.hode.upper = n.upper_branch == "frobenius_at_zero"     ? UpperBranch::frobenius_at_zero
                   : n.upper_branch == "minimal_at_infinity" ? UpperBranch::minimal_at_infinity
                                                             : UpperBranch::automatic;
    return o;
}

} // namespace omega
