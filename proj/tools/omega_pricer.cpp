// omega_pricer: config in, value curve / boundaries / diagnostics out.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "omega/omega.hpp"

namespace fs = std::filesystem;
using namespace omega;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) { return detail::fmt(v); }

class Summary {
public:
    void add(const std::string& key, const std::string& value) { lines_ << key << " = " << value << "\n"; }
    void add(const std::string& key, double value) { add(key, num(value)); }
    void warn(const std::string& w) { warnings_.push_back(w); }
    void warn_all(const std::vector<std::string>& ws)
    {
        for (const auto& w : ws) warn(w);
    }
    std::string str() const
    {
        std::ostringstream o;
        o << lines_.str() << "warnings = " << warnings_.size() << "\n";
        for (const auto& w : warnings_) o << "warning = " << w << "\n";
        return o.str();
    }

private:
    std::ostringstream lines_;
    std::vector<std::string> warnings_;
};

class CsvFile {
public:
    CsvFile(const fs::path& path, const std::string& header) : out_(path, std::ios::binary)
    {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << header << "\n";
    }
    void row(std::initializer_list<double> v)
    {
        bool first = true;
        for (double x : v) {
            out_ << (first ? "" : ",") << num(x);
            first = false;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

void write_curve(const fs::path& dir, const std::vector<CurvePoint>& curve)
{
    CsvFile f(dir / "curve.csv", "s,value,payoff");
    for (const auto& c : curve) f.row({c.s, c.value, c.payoff});
}

McOptions mc_options(const RunConfig& c)
{
    McOptions o;
    o.dt = c.numerics.dt;
    o.t_max = c.numerics.t_max;
    o.seed = c.numerics.seed;
    o.antithetic = c.numerics.antithetic;
    return o;
}

void report_result(Summary& s, const PricingResult& r)
{
    const auto& d = r.diagnostics;
    s.add("route", d.route);
    if (!d.upper_branch.empty()) s.add("upper_branch", d.upper_branch);
    s.add("l_star", r.boundaries.l);
    s.add("u_star", r.boundaries.u);
    s.add("continuity_residual_l", r.fit.continuity_l);
    s.add("continuity_residual_u", r.fit.continuity_u);
    s.add("smooth_fit_gap_l", r.fit.derivative_l);
    s.add("smooth_fit_gap_u", r.fit.derivative_u);
    s.add("hjb_continuation", d.hjb.continuation);
    s.add("hjb_stopping", d.hjb.stopping);
    s.add("convexity_margin", d.convexity_margin);
    s.add("s_ref", d.s_ref);
    s.add("value_at_s_ref", d.objective);
    s.add("degenerate", d.degenerate ? "true" : "false");
    s.add("evaluations", std::to_string(d.evaluations));
    s.warn_all(d.warnings);
}

// Optimised or fixed boundaries for a put.
PricingResult put_result(const PricingProblem& p, const RunConfig& c, const PricerOptions& o)
{
    if (!c.task.l && !c.task.u) return optimize_boundaries(p, o);
    require(c.task.l && c.task.u, "task: set both l and u, or neither");
    PricingResult r;
    r.boundaries = {*c.task.l, *c.task.u};
    r.value = make_value(p, r.boundaries, o);
    r.diagnostics.route = "fixed";
    detail::finish(r, p, o);
    return r;
}

void task_price(const RunConfig& c, const fs::path& dir, Summary& s)
{
    const auto p = problem_of(c);
    require(p.payoff == Payoff::put, "task " + c.task.name + ": put payoff expected (calls use task symmetry)");
    const auto r = put_result(p, c, pricer_options_of(c));
    report_result(s, r);
    write_curve(dir, r.curve);
}

void task_mc_check(const RunConfig& c, const fs::path& dir, Summary& s)
{
    const auto p = problem_of(c);
    require(p.payoff == Payoff::put, "task mc-check: put payoff expected");
    const auto r = put_result(p, c, pricer_options_of(c));
    report_result(s, r);
    write_curve(dir, r.curve);
    std::vector<double> spots = c.task.spots;
    if (spots.empty()) {
        const double u = r.boundaries.u;
        spots = {1.25 * u, 1.5 * u, 2.0 * p.strike};
    }
    const auto mo = mc_options(c);
    CsvFile f(dir / "mc.csv", "s,analytic,mc,std_error,z,truncation_mass");
    double worst = 0.0;
    for (double s0 : spots) {
        const auto e = stopped_value(p, r.boundaries, s0, c.numerics.n_paths, mo);
        const double a = (*r.value)(s0);
        const double z = e.std_error > 0.0 ? (e.mean - a) / e.std_error : 0.0;
        worst = std::max(worst, std::abs(z));
        f.row({s0, a, e.mean, e.std_error, z, e.horizon_truncation_mass});
        if (e.unreliable) s.warn("mc: horizon truncation mass above 1% at s=" + num(s0));
    }
    s.add("mc_max_abs_z", worst);
}

void task_symmetry(const RunConfig& c, const fs::path& dir, Summary& s)
{
    const auto call = problem_of(c);
    require(call.payoff == Payoff::call, "task symmetry: call payoff expected");
    const auto po = pricer_options_of(c);
    const auto mo = mc_options(c);
    std::vector<double> spots = c.task.spots.empty() ? std::vector<double>{call.strike} : c.task.spots;
    CsvFile f(dir / "symmetry.csv", "s,l_call,u_call,call_mc,call_se,dual_mc,dual_se,dual_analytic,z");
    double worst = 0.0;
    for (std::size_t i = 0; i < spots.size(); ++i) {
        const double s0 = spots[i];
        const double sk = s0 * call.strike;
        Boundaries b;
        double analytic = std::nan("");
        if (c.task.l || c.task.u) {
            require(c.task.l && c.task.u, "task: set both l and u, or neither");
            b = {*c.task.l, *c.task.u};
        } else {
            // optimise the dual put, then map its boundaries back
            const auto dual = putcall_transform(call, s0, {call.strike, call.strike}).problem;
            const auto r = optimize_boundaries(dual, po);
            b = {sk / r.boundaries.u,
                 r.boundaries.l > 0.0 ? sk / r.boundaries.l : std::numeric_limits<double>::infinity()};
            analytic = (*r.value)(call.strike);
            if (i == 0) {
                s.add("dual_route", r.diagnostics.route);
                s.add("dual_l_star", r.boundaries.l);
                s.add("dual_u_star", r.boundaries.u);
                s.add("curve", "dual put at the first spot (strike = spot, evaluated at s = K)");
                write_curve(dir, r.curve);
            }
            s.warn_all(r.diagnostics.warnings);
        }
        if (i == 0) {
            s.add("l_call", b.l);
            s.add("u_call", b.u);
        }
        const auto chk = symmetry_check(call, s0, b, c.numerics.n_paths, mo);
        const double z = chk.combined_error() > 0.0 ? chk.difference() / chk.combined_error() : 0.0;
        worst = std::max(worst, std::abs(z));
        f.row({s0, b.l, b.u, chk.call.mean, chk.call.std_error, chk.dual.mean, chk.dual.std_error, analytic, z});
        if (chk.call.unreliable || chk.dual.unreliable)
            s.warn("mc: horizon truncation mass above 1% at s=" + num(s0));
    }
    s.add("symmetry_max_abs_z", worst);
}

void task_scale(const RunConfig& c, const fs::path& dir, Summary& s)
{
    const auto p = problem_of(c);
    const double level = c.task.level > 0.0 ? c.task.level : p.strike;
    const auto t = build_scale_table(p.model, LogDiscount(p.omega, std::log(level)), pricer_options_of(c).scale);
    s.add("level", level);
    s.add("x_max", t.grid.x_max);
    s.add("n", std::to_string(t.grid.n));
    s.add("lim_z_over_w", t.c_zw);
    s.add("lim_z_over_w_spread", t.zw_fit.spread);
    CsvFile f(dir / "scale.csv", "x,W,Z");
    for (std::size_t k = 0; k < t.grid.n; ++k) f.row({t.grid.x(k), t.w[k], t.z[k]});
}

void task_bermudan(const RunConfig& c, const fs::path& dir, Summary& s)
{
    const auto p = problem_of(c);
    require(p.payoff == Payoff::put, "task bermudan: put payoff expected");
    auto grid = default_bermudan_grid(p.strike);
    grid.n = c.numerics.bermudan_n;
    const auto r = bermudan_dp(p.model, p.omega, p.strike, c.task.horizon, c.task.xi, grid);
    s.add("horizon", c.task.horizon);
    s.add("exercise_dates", std::to_string(std::size_t{1} << c.task.xi));
    s.add("jump_terms", std::to_string(r.jump_terms));
    s.add("jump_tail", r.jump_tail);
    s.add("stencil_mass", r.stencil_mass);
    {
        CsvFile f(dir / "bermudan.csv", "s,value");
        for (std::size_t i = 0; i < r.s.size(); ++i) f.row({r.s[i], r.value[i]});
    }
    // below the grid the value is the payoff (the boundary convention of the recursion)
    std::vector<CurvePoint> curve;
    const std::size_t n = c.numerics.curve_points;
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = c.numerics.curve_span * p.strike * static_cast<double>(i) / static_cast<double>(n);
        const double g = std::max(p.strike - x, 0.0);
        curve.push_back({x, x < r.s.front() ? g : r.at(x), g});
    }
    write_curve(dir, curve);
}

int run(const RunConfig& c, const fs::path& dir, bool quiet)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto t0 = std::chrono::steady_clock::now();
    Summary s;
    s.add("task", c.task.name);
    s.add("discount", c.discount.kind);
    s.add("strike", c.contract.strike);
    const auto& name = c.task.name;
    if (name == "price" || name == "boundaries") task_price(c, dir, s);
    else if (name == "mc-check") task_mc_check(c, dir, s);
    else if (name == "symmetry") task_symmetry(c, dir, s);
    else if (name == "scale") task_scale(c, dir, s);
    else task_bermudan(c, dir, s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    s.add("runtime_seconds", secs);
    const std::string resolved = emit_config(c);
    write_text(dir / "resolved.ini", resolved);
    const std::string text = s.str() + "\n# resolved configuration\n" + resolved;
    write_text(dir / "summary.txt", text);
    if (!quiet) std::cout << s.str();
    return 0;
}

fs::path preset_path(const std::string& name)
{
    const char* env = std::getenv("OMEGA_PRESET_DIR");
    fs::path dir = env && *env ? fs::path(env) : fs::path(OMEGA_PRESET_DIR);
    const fs::path p = dir / (name + ".ini");
    if (!fs::exists(p)) throw ValidationError("unknown preset '" + name + "' (looked in " + dir.string() + ")");
    return p;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Perpetual American options with asset-dependent discounting"};
    std::string config, preset, out_dir = ".";
    std::uint64_t seed = 0;
    bool quiet = false;
    auto* oc = app.add_option("--config", config, "config file (INI)");
    auto* op = app.add_option("--preset", preset, "bundled preset name");
    oc->excludes(op);
    app.add_option("--out-dir", out_dir, "output directory");
    auto* os = app.add_option("--seed", seed, "override numerics.seed");
    app.add_flag("--quiet", quiet, "no summary on stdout");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        if (config.empty() && preset.empty()) throw ValidationError("one of --config or --preset is required");
        RunConfig c = load_config(preset.empty() ? config : preset_path(preset).string());
        if (*os) c.numerics.seed = seed;
        return run(c, out_dir, quiet);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: numerical failure: " << e.what() << "\n";
        return 3;
    }
}
