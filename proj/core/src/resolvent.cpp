#include "dscat/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dscat/evolution.hpp"
#include "dscat/linalg.hpp"
#include "dscat/quadrature.hpp"
#include "dscat/radial.hpp"

namespace dscat {

// ------------------------------------------------------------------ solves

Mat resolvent_apply(const DissipativeSystem& system, cplx z, const Mat& u) {
    if (u.rows() != system.dim()) throw ValidationError("resolvent_apply: state has wrong dimension");
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ValidationError("resolvent_apply: z not finite");
    const double unorm = u.norm();
    if (unorm == 0.0) return Mat::Zero(u.rows(), u.cols());
    const double tol = 1e-10 * unorm;

    if (system.lattice()) {
        Vec sub, diag, sup;
        system.bands(sub, diag, sup);
        diag.array() -= z;
        Mat x = tridiagonal_solve(sub, diag, sup, u);
        auto residual = [&](const Mat& xs) {
            Mat r(xs.rows(), xs.cols());
            for (Eigen::Index j = 0; j < xs.cols(); ++j) r.col(j) = system.apply_h(xs.col(j)) - z * xs.col(j);
            return Mat(r - u);
        };
        Mat r = residual(x);
        if (r.norm() > tol) {
            x -= tridiagonal_solve(sub, diag, sup, r);
            r = residual(x);
        }
        if (!x.allFinite() || r.norm() > tol) {
            std::ostringstream os;
            os << "resolvent_apply: residual " << r.norm() / unorm << " at z=" << z
               << " (z inside a spectral cluster?)";
            throw NumericalError(os.str());
        }
        return x;
    }

    const Eigen::Index n = system.dim();
    const Mat a = system.h() - z * Mat::Identity(n, n);
    Eigen::PartialPivLU<Mat> lu(a);
    const double rc = lu.rcond();
    if (!(rc >= 1e-14)) {
        std::ostringstream os;
        os << "resolvent_apply: condition number " << (rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity())
           << " beyond 1e14 at z=" << z;
        throw NumericalError(os.str());
    }
    Mat x = lu.solve(u);
    Mat r = a * x - u;
    if (r.norm() > tol) {
        x -= lu.solve(r);
        r = a * x - u;
    }
    if (r.norm() > tol) {
        std::ostringstream os;
        os << "resolvent_apply: residual " << r.norm() / unorm << " at z=" << z;
        throw NumericalError(os.str());
    }
    return x;
}

Vec resolvent_apply(const DissipativeSystem& system, cplx z, const Vec& u) {
    return resolvent_apply(system, z, Mat(u)).col(0);
}

// ------------------------------------------------------------------ sandwiched

SandwichedResolvent sandwiched_resolvent(const DissipativeSystem& system, double lambda, double eps) {
    if (!(eps > 0.0)) throw ValidationError("sandwiched_resolvent: eps must be positive");
    if (eps < 1e-6) throw ValidationError("sandwiched_resolvent: eps below 1e-6 on a finite model (discrete poles dominate)");
    SandwichedResolvent out;
    const cplx zeta(lambda, -eps);
    if (system.c_norm() == 0.0) {
        out.op = Mat::Zero(0, 0);
        return out;
    }
    if (const auto& lat = system.lattice()) {
        Eigen::Index lo = -1, hi = -1;
        for (Eigen::Index i = 0; i < lat->w.size(); ++i)
            if (lat->w(i) > 0.0) {
                if (lo < 0) lo = i;
                hi = i;
            }
        const Eigen::Index m = hi - lo + 1;
        Mat rhs = Mat::Zero(system.dim(), m);
        RVec s(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            s(j) = std::sqrt(lat->w(lo + j));
            rhs(lo + j, j) = s(j);
        }
        const Mat x = resolvent_apply(system, zeta, rhs);
        out.op = s.cast<cplx>().asDiagonal() * x.middleRows(lo, m);
        out.offset = lo;
    } else {
        const Mat& c = system.c();
        out.op = c * resolvent_apply(system, zeta, Mat(c.adjoint()));
    }
    out.norm = op_norm(out.op);
    return out;
}

double sandwiched_norm(const DissipativeSystem& system, double lambda, double eps) {
    return sandwiched_resolvent(system, lambda, eps).norm;
}

SandwichedResolvent sandwiched_resolvent(const RadialSystem& radial, double lambda, double eps) {
    if (!(eps > 0.0)) throw ValidationError("sandwiched_resolvent: eps must be positive");
    SandwichedResolvent out;
    const auto& nodes = radial.nodes;
    const Eigen::Index m = static_cast<Eigen::Index>(nodes.size());
    RVec s(m);
    for (Eigen::Index i = 0; i < m; ++i) s(i) = std::sqrt(radial.weights[i] * radial.potential.w_profile(nodes[i]));
    if (radial.is_free || s.isZero(0.0)) {
        out.op = Mat::Zero(m, m);
        return out;
    }
    const cplx z = momentum_from_energy(cplx(lambda, -eps));
    const RegularSolution reg = regular_solution(radial, z, nodes, radial.ode.rtol, radial.ode.atol);
    const std::vector<cplx> f = outgoing_solution(radial, z, nodes, radial.ode.rtol, radial.ode.atol);
    const double R = radial.R();
    const cplx eR = std::exp(I * z * R);
    const cplx wr = reg.phi_R * (I * z * eR) - reg.dphi_R * eR;
    const double scale = (std::abs(reg.phi_R) * std::abs(z) + std::abs(reg.dphi_R)) * std::abs(eR);
    out.op.resize(m, m);
    if (std::abs(wr) < 1e-14 * std::max(scale, 1e-300)) {
        out.pole = true;
        // the kernel is unbounded; report the rank-one numerator as a lower bound
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                out.op(i, j) = s(i) * s(j) * reg.phi_samples[std::min(i, j)] * f[std::max(i, j)] / 1e-14;
        out.norm = op_norm(out.op);
        return out;
    }
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const Eigen::Index lo = std::min(i, j), hi = std::max(i, j);
            out.op(i, j) = -s(i) * s(j) * reg.phi_samples[lo] * f[hi] / wr;
        }
    out.norm = op_norm(out.op);
    return out;
}

double sandwiched_norm(const RadialSystem& radial, double lambda, double eps) {
    return sandwiched_resolvent(radial, lambda, eps).norm;
}

// ------------------------------------------------------------------ scans

namespace {

struct LineFit {
    double slope = 0.0, r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return f;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

double golden_max(const std::function<double(double)>& g, double a, double b) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = g(c), fd = g(d);
    for (int it = 0; it < 60 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    return fc >= fd ? c : d;
}

}  // namespace

SingularityScan singularity_scan(const NormFunction& norm, std::pair<double, double> interval,
                                 const std::vector<double>& eps, const ScanOptions& opt) {
    const auto [a, b] = interval;
    if (!(a >= 0.0) || !(b > a)) throw ValidationError("singularity_scan: interval must be a nonempty subset of [0, inf)");
    if (eps.size() < 5) throw ValidationError("singularity_scan: eps schedule needs at least 5 points");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0)) throw ValidationError("singularity_scan: eps must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw ValidationError("singularity_scan: eps schedule must decrease strictly");
    }
    if (eps.front() / eps.back() < 100.0 * (1.0 - 1e-12))
        throw ValidationError("singularity_scan: eps schedule must span at least two decades");
    if (opt.grid < 3) throw ValidationError("singularity_scan: grid needs at least 3 points");

    SingularityScan scan;
    scan.eps_schedule = eps;
    const int g = opt.grid;
    scan.grid_step = (b - a) / (g - 1);
    for (int k = 0; k < g; ++k) scan.lambda_grid.push_back(a + scan.grid_step * k);
    scan.norms.assign(eps.size(), std::vector<double>(g));
    for (std::size_t e = 0; e < eps.size(); ++e)
        for (int k = 0; k < g; ++k) {
            const double v = norm(scan.lambda_grid[k], eps[e]);
            if (!std::isfinite(v)) {
                std::ostringstream os;
                os << "singularity_scan: non-finite norm at lambda=" << scan.lambda_grid[k] << ", eps=" << eps[e];
                throw NumericalError(os.str());
            }
            scan.norms[e][k] = v;
        }
    for (std::size_t e = 0; e < eps.size(); ++e)
        for (int k = (4 * g) / 5; k < g; ++k) scan.sup_bound_tail = std::max(scan.sup_bound_tail, scan.norms[e][k]);

    const auto& last = scan.norms.back();
    const double emin = eps.back();
    std::vector<int> cands;
    for (int k = 1; k + 1 < g; ++k)
        if (last[k] > 0.0 && last[k] >= last[k - 1] && last[k] >= last[k + 1] && (last[k] > last[k - 1] || last[k] > last[k + 1]))
            cands.push_back(k);

    std::vector<double> where;
    for (int k : cands)
        where.push_back(golden_max([&](double mu) { return norm(mu, emin); }, scan.lambda_grid[k - 1],
                                   scan.lambda_grid[k + 1]));

    for (std::size_t c = 0; c < cands.size(); ++c) {
        const double lj = where[c];
        std::vector<double> x1, y1, x2, y2;
        for (std::size_t e = 0; e < eps.size(); ++e) {
            if (eps[e] > 100.0 * emin * (1.0 + 1e-12)) continue;
            const double p = norm(lj, eps[e]);
            if (!(p > 0.0)) continue;
            x2.push_back(std::log(1.0 / eps[e]));
            y2.push_back(std::log(p));
            if (eps[e] <= 10.0 * emin * (1.0 + 1e-12)) {
                x1.push_back(x2.back());
                y1.push_back(y2.back());
            }
        }
        const LineFit recent = fit_line(x1, y1);
        if (recent.slope < opt.growth_threshold) {
            scan.regular_peaks.push_back({lj, recent.slope});
            continue;
        }
        const LineFit whole = fit_line(x2, y2);
        double hw = 0.25 * (b - a);
        for (std::size_t o = 0; o < where.size(); ++o)
            if (o != c) hw = std::min(hw, 0.5 * std::abs(where[o] - lj));
        Singularity s;
        s.lambda = lj;
        s.slope = whole.slope;
        s.r_squared = whole.r2;
        for (int nu = 1; nu <= 4 && s.nu == 0; ++nu) {
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (std::size_t e = 0; e < eps.size(); ++e) {
                if (eps[e] > 100.0 * emin * (1.0 + 1e-12)) continue;
                double sup = 0.0;
                for (int k = 0; k < g; ++k) {
                    const double d = std::abs(scan.lambda_grid[k] - lj);
                    if (d <= hw) sup = std::max(sup, std::pow(d, nu) * scan.norms[e][k]);
                }
                lo = std::min(lo, sup);
                hi = std::max(hi, sup);
            }
            if (hi > 0.0 && (hi - lo) / hi < opt.stabilization) s.nu = nu;
        }
        if (s.nu == 0 || s.r_squared < opt.r2_min) {
            s.status = "unresolved order";
            s.nu = s.r_squared < opt.r2_min ? 0 : s.nu;
        } else {
            s.status = "singular";
        }
        scan.singularities.push_back(s);
    }
    return scan;
}

SingularityScan singularity_scan(const DissipativeSystem& system, std::pair<double, double> interval,
                                 const std::vector<double>& eps_schedule, const ScanOptions& opt) {
    return singularity_scan([&](double mu, double e) { return sandwiched_norm(system, mu, e); }, interval,
                            eps_schedule, opt);
}

SingularityScan singularity_scan(const RadialSystem& radial, std::pair<double, double> interval,
                                 const std::vector<double>& eps_schedule, const ScanOptions& opt) {
    return singularity_scan([&](double mu, double e) { return sandwiched_norm(radial, mu, e); }, interval,
                            eps_schedule, opt);
}

void write_scan_csv(std::ostream& os, const SingularityScan& scan) {
    os << "lambda,eps,norm\n";
    os.precision(17);
    for (std::size_t e = 0; e < scan.eps_schedule.size(); ++e)
        for (std::size_t k = 0; k < scan.lambda_grid.size(); ++k)
            os << scan.lambda_grid[k] << ',' << scan.eps_schedule[e] << ',' << scan.norms[e][k] << '\n';
}

// ------------------------------------------------------------------ Kato constant

namespace {

// ∫_a^b dλ / ((α − λ)(β − λ)) for non-real α ≠ β
cplx pair_integral(cplx alpha, cplx beta, double a, double b) {
    const cplx la = std::log(alpha - a) - std::log(alpha - b);
    const cplx lb = std::log(beta - a) - std::log(beta - b);
    return (la - lb) / (beta - alpha);
}

}  // namespace

KatoEstimate kato_constant(const DissipativeSystem& system, std::pair<double, double> interval, double eps_floor) {
    const auto [a, b] = interval;
    if (!(b > a)) throw ValidationError("kato_constant: empty interval");
    if (!(eps_floor > 0.0)) throw ValidationError("kato_constant: eps_floor must be positive");
    KatoEstimate out;
    out.eps_floor = eps_floor;
    if (system.c_norm() == 0.0) {
        out.converged = true;
        out.interval = {0.0, 0.0};
        for (double f : {8.0, 4.0, 2.0, 1.0}) out.sequence.emplace_back(f * eps_floor, 0.0);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(system.hv());
    const RVec& ev = es.eigenvalues();
    // bound states of H_V are removed on lattice models; finite matrix models keep every mode
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (system.model_tag() == ModelTag::matrix || ev(k) >= 0.0) keep.push_back(k);
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Mat e(system.dim(), m);
    RVec lam(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        e.col(j) = es.eigenvectors().col(keep[j]);
        lam(j) = ev(keep[j]);
    }
    const Mat bmat = system.c() * e;
    const Mat gram = bmat.adjoint() * bmat;

    auto quad_form = [&](double eps) {
        Mat q(m, m);
        for (Eigen::Index k = 0; k < m; ++k)
            for (Eigen::Index l = 0; l < m; ++l) {
                const cplx j = pair_integral(lam(k) + I * eps, lam(l) - I * eps, a, b) +
                               pair_integral(lam(k) - I * eps, lam(l) + I * eps, a, b);
                q(k, l) = gram(k, l) * j / (2.0 * PI);
            }
        return hermitian_part(q);
    };

    Eigen::SelfAdjointEigenSolver<Mat> top;
    for (double f : {8.0, 4.0, 2.0, 1.0}) {
        top.compute(quad_form(f * eps_floor));
        out.sequence.emplace_back(f * eps_floor, std::sqrt(std::max(0.0, top.eigenvalues()(m - 1))));
    }
    out.c_v = out.sequence.back().second;
    const Vec amax = top.eigenvectors().col(m - 1);
    out.maximizer = e * amax;

    // time-domain side for the same state restricted to the interval:
    // ∫_ℝ ‖C e^{-itH_V} u‖² e^{-2ε|t|} dt = c² by Plancherel
    Vec ai = amax;
    for (Eigen::Index k = 0; k < m; ++k)
        if (lam(k) < a || lam(k) > b) ai(k) = 0.0;
    const double eps = eps_floor;
    auto g = [&](double t) {
        Vec z = ai;
        for (Eigen::Index k = 0; k < m; ++k) z(k) *= std::exp(-I * t * lam(k));
        const double fwd = (bmat * z).squaredNorm();
        for (Eigen::Index k = 0; k < m; ++k) z(k) = ai(k) * std::exp(I * t * lam(k));
        const double bwd = (bmat * z).squaredNorm();
        return (fwd + bwd) * std::exp(-2.0 * eps * t);
    };
    const double T = 40.0 / eps;
    const double spread = std::max(std::abs(a), std::abs(b));
    const int panels = std::max(8, static_cast<int>(std::ceil(T * spread / (4.0 * PI))));
    std::vector<double> br(panels + 1);
    for (int i = 0; i <= panels; ++i) br[i] = T * i / panels;
    QuadOptions qo;
    qo.abs_tol = 1e-14;
    qo.max_intervals = 4 * panels + 20000;
    const double tint = integrate_adaptive(g, br, qo).value;
    out.c_v_time = std::sqrt(std::max(0.0, tint));
    out.interval = {std::min(out.c_v, out.c_v_time), std::max(out.c_v, out.c_v_time)};
    out.converged = std::abs(out.c_v - out.c_v_time) <= 0.1 * std::max(out.c_v, 1e-300);
    return out;
}

// ------------------------------------------------------------------ high energy

double high_energy_bound(const DissipativeSystem& system, double m, const std::vector<double>& eps_grid, int samples) {
    if (eps_grid.empty()) throw ValidationError("high_energy_bound: empty eps grid");
    if (samples < 2) throw ValidationError("high_energy_bound: need at least two samples");
    if (system.c_norm() == 0.0) return 0.0;
    const double top = m + 10.0 * system.h_norm();
    double sup = 0.0;
    for (double eps : eps_grid)
        for (int k = 0; k < samples; ++k) {
            const double mu = m + (top - m) * k / (samples - 1);
            sup = std::max(sup, sandwiched_norm(system, mu, eps));
        }
    return sup;
}

// ------------------------------------------------------------------ Parseval

ParsevalResult parseval_check(const DissipativeSystem& system, const Vec& u, double eps) {
    if (u.size() != system.dim()) throw ValidationError("parseval_check: state has wrong dimension");
    if (!(eps > 0.0)) throw ValidationError("parseval_check: eps must be positive");
    ParsevalResult out;
    if (system.c_norm() == 0.0 || u.norm() == 0.0) return out;
    const Propagator prop(system);
    const SpectralData& sd = prop.spectral();
    const bool eig = prop.method() == PropagationMethod::eig_diagonalization;
    Vec coef;
    double growth = 0.0;
    if (eig) {
        coef = sd.left_rows * u;
        const double cmax = coef.cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < coef.size(); ++k)
            if (std::abs(coef(k)) * sd.right_vectors.col(k).norm() > 1e-13 * cmax)
                growth = std::max(growth, -sd.eigenvalues(k).imag());
    } else {
        for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) growth = std::max(growth, -sd.eigenvalues(k).imag());
    }
    out.growth_rate = growth;
    if (!(eps > growth)) {
        std::ostringstream os;
        os << "parseval_check: epsilon " << eps << " below growth rate " << growth;
        throw ValidationError(os.str());
    }
    const Mat& c = system.c();
    const double hn = system.h_norm();

    // time side: ∫₀^∞ ‖C e^{isH}u‖² e^{-2εs} ds
    const double T = 40.0 / (eps - growth);
    auto lhs_f = [&](double s) { return (c * prop.apply(u, -s)).squaredNorm() * std::exp(-2.0 * eps * s); };
    QuadOptions qo;
    qo.abs_tol = 1e-15;
    qo.rel_tol = 1e-11;
    std::vector<double> br;
    {
        const int panels = std::max(8, static_cast<int>(std::ceil(T * std::max(1.0, hn) / (8.0 * PI))));
        for (int i = 0; i <= panels; ++i) br.push_back(T * i / panels);
        qo.max_intervals = 4 * panels + 20000;
    }
    out.lhs = integrate_adaptive(lhs_f, br, qo).value;

    // frequency side over ℝ with λ = c0 + w tan θ
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) {
        lo = std::min(lo, sd.eigenvalues(k).real());
        hi = std::max(hi, sd.eigenvalues(k).real());
    }
    const double c0 = 0.5 * (lo + hi), w = std::max(1.0, 0.5 * (hi - lo));
    auto resolve = [&](cplx zeta) -> Vec {
        if (eig) {
            Vec z = coef;
            for (Eigen::Index k = 0; k < z.size(); ++k) z(k) /= sd.eigenvalues(k) - zeta;
            return sd.right_vectors * z;
        }
        return resolvent_apply(system, zeta, u);
    };
    auto rhs_f = [&](double th) {
        const double ct = std::cos(th);
        const double lam = c0 + w * std::tan(th);
        return (c * resolve(cplx(lam, -eps))).squaredNorm() * w / (ct * ct);
    };
    std::vector<double> tb;
    const int base = 64;
    for (int i = 0; i <= base; ++i) tb.push_back(-0.5 * PI + PI * i / base);
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) tb.push_back(std::atan((sd.eigenvalues(k).real() - c0) / w));
    std::sort(tb.begin(), tb.end());
    tb.erase(std::unique(tb.begin(), tb.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }), tb.end());
    QuadOptions qr = qo;
    qr.max_intervals = 4 * static_cast<int>(tb.size()) + 20000;
    out.rhs = integrate_adaptive(rhs_f, tb, qr).value / (2.0 * PI);

    const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
    out.rel_err = scale > 0.0 ? std::abs(out.lhs - out.rhs) / scale : 0.0;
    return out;
}

}  // namespace dscat
