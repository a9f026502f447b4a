#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "error.hpp"

namespace omega {

// Integrate y' = rhs(t, y) and return the state at each entry of `times`
// (monotone, either direction; times[0] is the initial time).
template <std::size_t N, class Rhs>
std::vector<std::array<double, N>> integrate_at(Rhs&& rhs, std::array<double, N> y0,
                                                const std::vector<double>& times,
                                                double abs_tol = 1e-12, double rel_tol = 1e-12,
                                                const std::string& who = "integrate_at")
{
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, N>;
    std::vector<State> out;
    out.reserve(times.size());
    if (times.empty()) return out;
    if (times.size() == 1) {
        out.push_back(y0);
        return out;
    }
    auto system = [&](const State& y, State& dy, double t) { rhs(t, y, dy); };
    auto observer = [&](const State& y, double) {
        for (double v : y)
            if (!std::isfinite(v)) throw ConvergenceError(who + ": solution became non-finite");
        out.push_back(y);
    };
    const double span = times.back() - times.front();
    const double dt0 = span / (100.0 * static_cast<double>(times.size()));
    try {
        odeint::integrate_times(
            odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<State>()),
            system, y0, times.begin(), times.end(), dt0, observer,
            odeint::max_step_checker(100000));
    } catch (const ConvergenceError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConvergenceError(who + ": " + e.what());
    }
    return out;
}

} // namespace omega
