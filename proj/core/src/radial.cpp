#include "dscat/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/numeric/odeint.hpp>

namespace dscat {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<cplx, 2>;

struct Rhs {
    const RadialPotential* pot;
    cplx z2;
    void operator()(const State& x, State& dxdt, double r) const {
        const cplx u(pot->v_profile(r), -pot->w_profile(r));
        dxdt[0] = x[1];
        dxdt[1] = (u - z2) * x[0];
    }
};

std::vector<double> segment_edges(const RadialSystem& sys) {
    std::vector<double> e{0.0};
    for (double b : sys.potential.breakpoints)
        if (b > 0.0 && b < sys.R()) e.push_back(b);
    e.push_back(sys.R());
    std::sort(e.begin(), e.end());
    return e;
}

// Integrates across [from, to] segment by segment (never stepping over a jump of the
// profile), recording x at every requested radius. `radii` sorted in the direction of travel.
int integrate_piecewise(const RadialSystem& sys, cplx z, State& x, double from, double to,
                        const std::vector<double>& radii, std::vector<cplx>& out, double rtol, double atol) {
    Rhs rhs{&sys.potential, z * z};
    auto stepper = odeint::make_controlled<odeint::runge_kutta_fehlberg78<State>>(atol, rtol);
    const bool forward = to > from;
    std::vector<double> edges = segment_edges(sys);
    if (!forward) std::reverse(edges.begin(), edges.end());

    std::size_t next = 0;
    int steps = 0;
    double pos = from;
    for (std::size_t k = 1; k < edges.size(); ++k) {
        const double end = edges[k];
        if (forward ? end <= pos : end >= pos) continue;
        std::vector<double> times{pos};
        std::vector<std::size_t> ids;
        while (next < radii.size() && (forward ? radii[next] <= end : radii[next] >= end)) {
            if (radii[next] != pos) {
                times.push_back(radii[next]);
                ids.push_back(next);
            } else {
                out[next] = x[0];
            }
            ++next;
        }
        const bool end_is_sample = !ids.empty() && times.back() == end;
        if (!end_is_sample) times.push_back(end);
        std::size_t obs = 0;
        const double dt0 = (forward ? 1.0 : -1.0) * std::min(1e-3, std::abs(end - pos) / 8.0);
        steps += static_cast<int>(odeint::integrate_times(
            stepper, rhs, x, times.begin(), times.end(), dt0, [&](const State& s, double) {
                if (obs > 0 && obs - 1 < ids.size()) out[ids[obs - 1]] = s[0];
                ++obs;
            }));
        pos = end;
    }
    return steps;
}

}  // namespace

cplx momentum_from_energy(cplx zeta) {
    cplx z = std::sqrt(zeta);
    if (z.imag() < 0.0 || (z.imag() == 0.0 && zeta.imag() < 0.0)) z = -z;
    // on the cut (ζ real positive) keep the value continued from below: z = -√λ
    if (zeta.imag() == 0.0 && zeta.real() > 0.0) z = -std::sqrt(zeta.real());
    return z;
}

RegularSolution regular_solution(const RadialSystem& sys, cplx z, const std::vector<double>& samples, double rtol,
                                 double atol) {
    if (std::abs(z) * sys.R() > sys.ode.stiffness_guard)
        throw NumericalError("regular_solution: |z| R beyond the stiffness guard");
    RegularSolution res;
    res.phi_samples.assign(samples.size(), cplx(0.0));
    State x{cplx(0.0), cplx(1.0)};
    try {
        res.steps = integrate_piecewise(sys, z, x, 0.0, sys.R(), samples, res.phi_samples, rtol, atol);
    } catch (const std::exception& e) {
        throw NumericalError(std::string("regular_solution: ODE step failure: ") + e.what());
    }
    res.phi_R = x[0];
    res.dphi_R = x[1];
    return res;
}

std::vector<cplx> outgoing_solution(const RadialSystem& sys, cplx z, const std::vector<double>& samples, double rtol,
                                    double atol) {
    if (std::abs(z) * sys.R() > sys.ode.stiffness_guard)
        throw NumericalError("outgoing_solution: |z| R beyond the stiffness guard");
    const double R = sys.R();
    const cplx e = std::exp(I * z * R);
    State x{e, I * z * e};
    std::vector<double> rev(samples.rbegin(), samples.rend());
    std::vector<cplx> out_rev(rev.size(), cplx(0.0));
    try {
        integrate_piecewise(sys, z, x, R, 0.0, rev, out_rev, rtol, atol);
    } catch (const std::exception& ex) {
        throw NumericalError(std::string("outgoing_solution: ODE step failure: ") + ex.what());
    }
    return std::vector<cplx>(out_rev.rbegin(), out_rev.rend());
}

}  // namespace dscat
