#include "dscat/resonances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "dscat/radial.hpp"

namespace dscat {

namespace {

void check_guard(const RadialSystem& radial, cplx z) {
    if (std::abs(z) * radial.R() > radial.ode.stiffness_guard) {
        std::ostringstream os;
        os << "jost_function: |z| R = " << std::abs(z) * radial.R() << " beyond the stiffness guard "
           << radial.ode.stiffness_guard;
        throw ValidationError(os.str());
    }
}

}  // namespace

cplx jost_value(const RadialSystem& radial, cplx z) {
    check_guard(radial, z);
    const RegularSolution s = regular_solution(radial, z, {}, radial.ode.rtol, radial.ode.atol);
    return s.dphi_R - I * z * s.phi_R;
}

JostEvaluation jost_function(const RadialSystem& radial, cplx z) {
    check_guard(radial, z);
    JostEvaluation out;
    out.z = z;
    const RegularSolution s = regular_solution(radial, z, {}, radial.ode.rtol, radial.ode.atol);
    out.phi_R = s.phi_R;
    out.dphi_R = s.dphi_R;
    out.value = s.dphi_R - I * z * s.phi_R;
    const RegularSolution ref =
        regular_solution(radial, z, {}, std::max(radial.ode.rtol * 1e-2, 1e-14), radial.ode.atol * 1e-2);
    out.ode_error_estimate = std::abs(ref.dphi_R - I * z * ref.phi_R - out.value);
    return out;
}

// ------------------------------------------------------------------ argument principle

namespace {

struct Winding {
    double turns = 0.0;
    double min_abs = std::numeric_limits<double>::infinity();
    double max_abs = 0.0;
};

void accumulate_edge(const std::function<cplx(cplx)>& f, cplx a, cplx b, cplx fa, cplx fb, int depth, Winding& w) {
    const double da = std::arg(fb / fa);
    if ((std::abs(da) > PI / 4.0 || std::abs(fb) / std::abs(fa) > 4.0 || std::abs(fa) / std::abs(fb) > 4.0) &&
        depth < 30) {
        const cplx m = 0.5 * (a + b);
        const cplx fm = f(m);
        w.min_abs = std::min(w.min_abs, std::abs(fm));
        w.max_abs = std::max(w.max_abs, std::abs(fm));
        accumulate_edge(f, a, m, fa, fm, depth + 1, w);
        accumulate_edge(f, m, b, fm, fb, depth + 1, w);
        return;
    }
    w.turns += da;
}

Winding wind_polygon(const std::function<cplx(cplx)>& f, const std::vector<cplx>& corners, int per_edge) {
    Winding w;
    for (std::size_t e = 0; e < corners.size(); ++e) {
        const cplx a = corners[e], b = corners[(e + 1) % corners.size()];
        cplx za = a, fa = f(a);
        w.min_abs = std::min(w.min_abs, std::abs(fa));
        w.max_abs = std::max(w.max_abs, std::abs(fa));
        for (int i = 1; i <= per_edge; ++i) {
            const cplx zb = a + (b - a) * (double(i) / per_edge);
            const cplx fb = f(zb);
            w.min_abs = std::min(w.min_abs, std::abs(fb));
            w.max_abs = std::max(w.max_abs, std::abs(fb));
            accumulate_edge(f, za, zb, fa, fb, 0, w);
            za = zb;
            fa = fb;
        }
    }
    w.turns /= 2.0 * PI;
    return w;
}

std::vector<cplx> rect_corners(const ComplexRect& r) {
    return {cplx(r.re_min, r.im_min), cplx(r.re_max, r.im_min), cplx(r.re_max, r.im_max), cplx(r.re_min, r.im_max)};
}

int circle_winding(const std::function<cplx(cplx)>& f, cplx c, double rho) {
    std::vector<cplx> pts;
    for (int k = 0; k < 16; ++k) pts.push_back(c + rho * std::exp(I * (2.0 * PI * k / 16.0)));
    return static_cast<int>(std::lround(wind_polygon(f, pts, 1).turns));
}

struct Newton {
    cplx z{0.0};
    bool converged = false;
};

Newton newton(const std::function<cplx(cplx)>& f, cplx z, double tol, int max_iter, int mult = 1) {
    Newton out;
    for (int it = 0; it < max_iter; ++it) {
        const double h = 1e-6 * std::max(1.0, std::abs(z));
        const cplx fz = f(z);
        const cplx d = (f(z + h) - f(z - h)) / (2.0 * h);
        if (std::abs(d) == 0.0 || !std::isfinite(std::abs(fz))) break;
        const cplx step = double(mult) * fz / d;
        z -= step;
        if (!std::isfinite(std::abs(z))) break;
        if (std::abs(step) <= tol * std::max(1.0, std::abs(z))) {
            out.converged = true;
            break;
        }
    }
    out.z = z;
    return out;
}

bool inside(const ComplexRect& r, cplx z, double pad) {
    return z.real() >= r.re_min - pad && z.real() <= r.re_max + pad && z.imag() >= r.im_min - pad &&
           z.imag() <= r.im_max + pad;
}

struct Searcher {
    const std::function<cplx(cplx)>& f;
    const SearchOptions& opt;
    std::vector<JostZero> zeros;

    bool known(cplx z) const {
        for (const auto& k : zeros)
            if (std::abs(k.z - z) < 1e-7 * std::max(1.0, std::abs(z))) return true;
        return false;
    }

    double local_scale(cplx z) const {
        double s = 0.0;
        for (int k = 0; k < 8; ++k) s = std::max(s, std::abs(f(z + 1e-2 * std::exp(I * (2.0 * PI * k / 8.0)))));
        return std::max(s, 1e-300);
    }

    int count(const ComplexRect& r) const {
        const Winding w = wind_polygon(f, rect_corners(r), 16);
        if (w.min_abs < 1e-12 * std::max(w.max_abs, 1e-300)) throw NumericalError("resonance_search: zero on a cell edge");
        return static_cast<int>(std::lround(w.turns));
    }

    void run(const ComplexRect& r, int n, int depth) {
        if (n <= 0) return;
        const double size = std::max(r.re_max - r.re_min, r.im_max - r.im_min);
        const Newton nw = newton(f, cplx(0.5 * (r.re_min + r.re_max), 0.5 * (r.im_min + r.im_max)), opt.newton_tol,
                                 opt.newton_max_iter);
        if (nw.converged && inside(r, nw.z, 1e-9 * size)) {
            const double rho = std::min(1e-3, 0.05 * size);
            const int m = std::max(1, circle_winding(f, nw.z, rho));
            if (m == n) {
                if (!known(nw.z)) {
                    Newton pol = newton(f, nw.z, opt.newton_tol, opt.newton_max_iter, m);
                    const cplx z = pol.converged ? pol.z : nw.z;
                    zeros.push_back({z, m, std::abs(f(z)) / local_scale(z)});
                }
                return;
            }
        }
        if (depth >= opt.max_depth) return;
        const double fr = 0.5 + 0.0123;  // off-centre split keeps symmetric zeros off the cut lines
        const double xm = r.re_min + fr * (r.re_max - r.re_min), ym = r.im_min + fr * (r.im_max - r.im_min);
        const ComplexRect cells[4] = {{r.re_min, xm, r.im_min, ym},
                                      {xm, r.re_max, r.im_min, ym},
                                      {r.re_min, xm, ym, r.im_max},
                                      {xm, r.re_max, ym, r.im_max}};
        for (const auto& c : cells) run(c, count(c), depth + 1);
    }
};

}  // namespace

int winding_number(const std::function<cplx(cplx)>& f, const ComplexRect& region, double* min_abs) {
    const Winding w = wind_polygon(f, rect_corners(region), 32);
    if (min_abs) *min_abs = w.min_abs;
    return static_cast<int>(std::lround(w.turns));
}

ResonanceSet resonance_search(const RadialSystem& radial, const ComplexRect& region_in, const SearchOptions& opt) {
    if (!(region_in.re_max > region_in.re_min) || !(region_in.im_max > region_in.im_min))
        throw ValidationError("resonance_search: empty region");
    const std::function<cplx(cplx)> f = [&](cplx z) { return jost_value(radial, z); };
    ResonanceSet out;
    ComplexRect region = region_in;
    for (int attempt = 0;; ++attempt) {
        const Winding w = wind_polygon(f, rect_corners(region), 32);
        if (w.min_abs >= 1e-9 * std::max(w.max_abs, 1e-300)) {
            out.argument_principle_count = static_cast<int>(std::lround(w.turns));
            if (std::abs(w.turns - out.argument_principle_count) > 0.1)
                throw NumericalError("resonance_search: winding number not close to an integer");
            break;
        }
        if (attempt == 1) throw NumericalError("resonance_search: F vanishes on the boundary after nudging");
        const double d = 1e-3 * std::max(region.re_max - region.re_min, region.im_max - region.im_min);
        region = {region.re_min - d, region.re_max + d, region.im_min - d, region.im_max + d};
        ++out.boundary_nudges;
    }
    out.search_region = region;
    Searcher s{f, opt, {}};
    try {
        s.run(region, out.argument_principle_count, 0);
    } catch (const NumericalError&) {
        // a zero on an internal cut: retry with a different split through a shifted region copy
        s.zeros.clear();
        ComplexRect shifted = region;
        shifted.re_min -= 1e-4;
        s.run(shifted, out.argument_principle_count, 0);
    }
    std::sort(s.zeros.begin(), s.zeros.end(), [](const JostZero& a, const JostZero& b) {
        return a.z.real() != b.z.real() ? a.z.real() < b.z.real() : a.z.imag() < b.z.imag();
    });
    out.zeros = std::move(s.zeros);
    int total = 0;
    for (const auto& z : out.zeros) total += z.multiplicity;
    if (total != out.argument_principle_count) {
        std::ostringstream os;
        os << "resonance_search: Newton found " << total << " zeros (with multiplicity), winding count "
           << out.argument_principle_count;
        throw NumericalError(os.str());
    }
    return out;
}

// ------------------------------------------------------------------ tuning

TuneResult tune_real_resonance(const RadialFamily& family, double target_z0, std::pair<double, double> range,
                               const TuneOptions& opt) {
    if (!(target_z0 < 0.0)) throw ValidationError("tune_real_resonance: target z0 must be negative");
    if (!(range.second != range.first) || opt.scan_points < 2)
        throw ValidationError("tune_real_resonance: degenerate parameter range");
    auto model = [&](double p) { return build_radial_model(family(p), opt.grid); };
    auto track = [&](double p, cplx guess) {
        const RadialSystem rs = model(p);
        const std::function<cplx(cplx)> f = [&](cplx z) { return jost_value(rs, z); };
        const Newton nw = newton(f, guess, 1e-13, 80);
        if (!nw.converged || std::abs(nw.z - guess) > opt.track_window) {
            std::ostringstream os;
            os << "tune_real_resonance: tracked zero left the window at parameter " << p;
            throw NumericalError(os.str());
        }
        return nw.z;
    };
    TuneResult out;
    // initial zero nearest the target
    cplx z;
    {
        const RadialSystem rs = model(range.first);
        const double h = std::max(1.0, 0.5 * std::abs(target_z0));
        const ResonanceSet set = resonance_search(rs, {target_z0 - h, std::min(target_z0 + h, -1e-3), -h, h});
        if (set.zeros.empty()) throw NumericalError("tune_real_resonance: no zero near the target at the range start");
        z = set.zeros.front().z;
        for (const auto& zz : set.zeros)
            if (std::abs(zz.z - target_z0) < std::abs(z - target_z0)) z = zz.z;
    }
    double pa = range.first;
    cplx za = z;
    out.track.push_back({pa, za});
    double pb = pa;
    cplx zb = za;
    bool bracket = false;
    for (int i = 1; i < opt.scan_points; ++i) {
        pb = range.first + (range.second - range.first) * i / (opt.scan_points - 1);
        zb = track(pb, za);
        out.track.push_back({pb, zb});
        if ((za.imag() < 0.0) != (zb.imag() < 0.0) || zb.imag() == 0.0) {
            bracket = true;
            break;
        }
        pa = pb;
        za = zb;
    }
    if (!bracket) throw ValidationError("tune_real_resonance: Im z does not change sign over the parameter range");
    // Illinois regula falsi on g(p) = Im z(p)
    double ga = za.imag(), gb = zb.imag();
    double p = pb;
    cplx zp = zb;
    int side = 0;
    for (int it = 0; it < opt.max_secant && std::abs(zp.imag()) > 0.1 * opt.im_tol; ++it) {
        p = (pa * gb - pb * ga) / (gb - ga);
        const cplx guess = za + (zb - za) * ((p - pa) / (pb - pa));
        zp = track(p, guess);
        const double gp = zp.imag();
        if ((gp < 0.0) == (gb < 0.0)) {
            pb = p, zb = zp, gb = gp;
            if (side == -1) ga *= 0.5;
            side = -1;
        } else {
            pa = p, za = zp, ga = gp;
            if (side == 1) gb *= 0.5;
            side = 1;
        }
    }
    if (std::abs(zp.imag()) > opt.im_tol) throw NumericalError("tune_real_resonance: secant did not reach |Im z| tolerance");
    out.param = p;
    out.potential = family(p);
    out.zero = zp;
    if (opt.dilate_to_target) {
        out.dilation = target_z0 / zp.real();
        out.potential = dilate(out.potential, out.dilation);
        const RadialSystem rs = build_radial_model(out.potential, opt.grid);
        const std::function<cplx(cplx)> f = [&](cplx w) { return jost_value(rs, w); };
        const Newton nw = newton(f, out.dilation * zp, 1e-13, 40);
        out.zero = nw.converged ? nw.z : out.dilation * zp;
    }
    out.residual = std::abs(out.zero.imag());
    if (out.residual > opt.im_tol) throw NumericalError("tune_real_resonance: dilated zero left the real axis");
    return out;
}

// ------------------------------------------------------------------ correspondence

CorrespondenceReport correspondence_report(const ResonanceSet& zeros, const SingularityScan& scan, double real_tol) {
    CorrespondenceReport rep;
    rep.grid_step = scan.grid_step;
    rep.real_tol = real_tol;
    const double lo = scan.lambda_grid.empty() ? 0.0 : scan.lambda_grid.front();
    const double hi = scan.lambda_grid.empty() ? 0.0 : scan.lambda_grid.back();
    std::vector<double> real_zeros;
    for (const auto& z : zeros.zeros)
        if (z.z.real() < 0.0 && std::abs(z.z.imag()) <= real_tol) {
            const double l = z.z.real() * z.z.real();
            if (l >= lo && l <= hi) real_zeros.push_back(z.z.real());
            else rep.notes += "real zero outside the scanned window ignored; ";
        }
    std::vector<bool> used(scan.singularities.size(), false);
    for (double z0 : real_zeros) {
        int best = -1;
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < scan.singularities.size(); ++j) {
            if (used[j]) continue;
            const double m = std::abs(z0 * z0 - scan.singularities[j].lambda);
            if (m < d) d = m, best = static_cast<int>(j);
        }
        if (best >= 0 && d <= scan.grid_step * (1.0 + 1e-9)) {
            used[best] = true;
            rep.matched.push_back({z0, scan.singularities[best].lambda, d});
        } else {
            rep.unmatched_zeros.push_back(z0);
        }
    }
    for (std::size_t j = 0; j < scan.singularities.size(); ++j)
        if (!used[j]) rep.unmatched_singularities.push_back(scan.singularities[j].lambda);
    rep.consistent = rep.unmatched_zeros.empty() && rep.unmatched_singularities.empty();
    return rep;
}

void write_resonance_csv(std::ostream& os, const ResonanceSet& set) {
    os << "re_z,im_z,mult\n";
    os.precision(17);
    for (const auto& z : set.zeros) os << z.z.real() << ',' << z.z.imag() << ',' << z.multiplicity << '\n';
}

}  // namespace dscat
