#include "dscat/projections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "dscat/linalg.hpp"
#include "dscat/quadrature.hpp"

namespace dscat {

namespace {

constexpr double kRatio = 1.2;       // continuum-like modes: narrow window above |Im λ|
constexpr double kDecayRatio = 2.0;  // decaying modes: ε below |Im λ|
constexpr int kSamples = 8;

struct ModeSetup {
    const SpectralData* sd = nullptr;
    double tol_real = 0.0;
    double cut = 0.0;
};

double endpoint_distance(double a, Interval iv) { return std::min(std::abs(a - iv.first), std::abs(a - iv.second)); }

// ∫_I w(μ)/(p − μ) dμ: the pole part in closed form, the remainder by Gauss–Legendre.
cplx pole_integral(cplx p, Interval iv, const std::function<cplx(cplx)>* weight) {
    const cplx logs = std::log(p - iv.first) - std::log(p - iv.second);
    if (!weight) return logs;
    const auto& w = *weight;
    const cplx wp = w(p);
    const double len = iv.second - iv.first;
    const int panels = std::max(4, static_cast<int>(std::ceil(len / 0.5)));
    const auto rule = composite_gauss(iv.first, iv.second, panels, 20);
    cplx acc = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double mu = rule.x[i];
        acc += rule.w[i] * (w(mu) - wp) / (p - mu);
    }
    return wp * logs + acc;
}

// (1/2πi)∫_I w(μ)[(λ−μ−iε)^{-1} − (λ−μ+iε)^{-1}] dμ
cplx mode_value(cplx lambda, double eps, Interval iv, const std::function<cplx(cplx)>* weight) {
    return (pole_integral(lambda - I * eps, iv, weight) - pole_integral(lambda + I * eps, iv, weight)) / (2.0 * PI * I);
}

// descending per-mode schedule inside the window where the ε-dependence is analytic
std::vector<double> mode_schedule(cplx lambda, Interval iv, const ModeSetup& ms) {
    const double beta = std::abs(lambda.imag());
    std::vector<double> eps(kSamples);
    if (beta <= ms.cut) {
        const double d = endpoint_distance(lambda.real(), iv);
        const double bottom = std::max(1.25 * beta, 1e-12 * std::max(1.0, d));
        for (int j = 0; j < kSamples; ++j) eps[j] = bottom * std::pow(kRatio, kSamples - 1 - j);
    } else {
        const double top = beta / 2.0;
        for (int j = 0; j < kSamples; ++j) eps[j] = top / std::pow(kDecayRatio, j);
    }
    return eps;
}

// Endpoints only decide which continuum-like modes are inside; moving each one to the
// middle of its gap between those modes keeps E(I) and widens the analytic windows.
Interval effective_interval(const ModeSetup& ms, Interval iv) {
    const Vec& ev = ms.sd->eigenvalues;
    std::vector<double> re;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k).imag()) <= ms.cut) re.push_back(ev(k).real());
    if (re.empty()) return iv;
    std::sort(re.begin(), re.end());
    const double pad = 0.5 * std::max(1.0, iv.second - iv.first);
    auto centre = [&](double x) {
        auto it = std::lower_bound(re.begin(), re.end(), x);
        if (it != re.end() && *it == x) return x;
        const double lo = it == re.begin() ? re.front() - 2.0 * pad : *(it - 1);
        const double hi = it == re.end() ? re.back() + 2.0 * pad : *it;
        return 0.5 * (lo + hi);
    };
    return {centre(iv.first), centre(iv.second)};
}

struct ModeCoefficients {
    Vec f;
    int unresolved = 0;
    std::string worst;
};

ModeCoefficients mode_coefficients(const ModeSetup& ms, Interval iv, const std::function<cplx(cplx)>* weight,
                                   double cauchy_tol) {
    const Vec& ev = ms.sd->eigenvalues;
    iv = effective_interval(ms, iv);
    const std::vector<double> powers = weight ? std::vector<double>{1, 2, 3, 4, 5, 6, 7}
                                           : std::vector<double>{1, 3, 5, 7, 9, 11, 13};
    ModeCoefficients out;
    out.f.resize(ev.size());
    double worst = 0.0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const auto eps = mode_schedule(ev(k), iv, ms);
        std::vector<cplx> vals;
        for (double e : eps) vals.push_back(mode_value(ev(k), e, iv, weight));
        const auto diag = richardson_diagonal(vals, eps[0] / eps[1], powers);
        out.f(k) = diag.back();
        const double change = std::abs(diag.back() - diag[diag.size() - 2]);
        const double weight_k = ms.sd->right_vectors.col(k).norm() *
                                (ms.sd->left_rows.size() ? ms.sd->left_rows.row(k).norm() : 1.0);
        if (change * weight_k > cauchy_tol * std::max(1.0, std::abs(out.f(k)))) {
            ++out.unresolved;
            if (change * weight_k > worst) {
                worst = change * weight_k;
                std::ostringstream os;
                os << "eigenvalue " << ev(k) << " (last extrapolants differ by " << change << ")";
                out.worst = os.str();
            }
        }
    }
    return out;
}

Mat assemble(const SpectralData& sd, const Vec& f) {
    return sd.right_vectors * f.asDiagonal() * sd.left_rows;
}

double lattice_cut(const DissipativeSystem& system, const SpectralData& sd, double tol, const StoneOptions& opt,
                   std::string* note) {
    if (system.model_tag() == ModelTag::matrix || opt.continuum_cut == 0.0) return tol;
    if (opt.continuum_cut > 0.0) return std::max(opt.continuum_cut, tol);
    return auto_continuum_cut(sd, tol, 4.0, note, extended_mode_rate_bound(system));
}

void validate_interval(Interval iv, const char* who) {
    if (!(iv.first >= 0.0) || !(iv.second > iv.first) || !std::isfinite(iv.second)) {
        std::ostringstream os;
        os << who << ": interval must be a nonempty closed subset of [0, inf)";
        throw ValidationError(os.str());
    }
}

std::vector<EpsTracePoint> trace_for(const SpectralData& sd, Interval iv, const std::vector<double>& schedule,
                                     const std::function<cplx(cplx)>* weight) {
    std::vector<EpsTracePoint> tr;
    Mat prev;
    for (double e : schedule) {
        Vec f(sd.eigenvalues.size());
        for (Eigen::Index k = 0; k < f.size(); ++k) f(k) = mode_value(sd.eigenvalues(k), e, iv, weight);
        Mat m = assemble(sd, f);
        EpsTracePoint p;
        p.eps = e;
        p.norm = op_norm(m);
        p.max_change = prev.size() ? (m - prev).cwiseAbs().maxCoeff() : 0.0;
        tr.push_back(p);
        prev = std::move(m);
    }
    return tr;
}

// Dense fallback for non-diagonalizable H: Gauss panels of width <= ε/2 on the
// spectral schedule, Richardson in odd powers of ε.
Mat dense_stone(const Mat& h, Interval iv, const std::vector<double>& schedule, const std::function<cplx(cplx)>* weight,
                std::vector<EpsTracePoint>* trace) {
    const Eigen::Index n = h.rows();
    const Mat id = Mat::Identity(n, n);
    std::vector<Mat> vals;
    for (double e : schedule) {
        const int panels = std::max(4, static_cast<int>(std::ceil((iv.second - iv.first) / (0.5 * e))));
        const auto rule = composite_gauss(iv.first, iv.second, panels, 8);
        Mat acc = Mat::Zero(n, n);
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            const double mu = rule.x[i];
            const Mat d = (h - (mu + I * e) * id).partialPivLu().inverse() - (h - (mu - I * e) * id).partialPivLu().inverse();
            acc += rule.w[i] * (weight ? (*weight)(mu) : cplx(1.0)) * d;
        }
        acc /= 2.0 * PI * I;
        if (trace) {
            EpsTracePoint p;
            p.eps = e;
            p.norm = op_norm(acc);
            p.max_change = vals.empty() ? 0.0 : (acc - vals.back()).cwiseAbs().maxCoeff();
            trace->push_back(p);
        }
        vals.push_back(std::move(acc));
    }
    const double ratio = schedule.size() > 1 ? schedule[0] / schedule[1] : 2.0;
    const auto diag = richardson_diagonal(vals, ratio, weight ? std::vector<double>{1, 2, 3, 4} : std::vector<double>{1, 3, 5, 7});
    if (diag.size() >= 2) {
        const double change = (diag.back() - diag[diag.size() - 2]).cwiseAbs().maxCoeff();
        if (change > 1e-4 * std::max(1.0, diag.back().cwiseAbs().maxCoeff())) {
            std::ostringstream os;
            os << "spectral_projection: extrapolation not Cauchy (last change " << change << "); eps-trace:";
            if (trace)
                for (const auto& p : *trace) os << " (" << p.eps << ", " << p.norm << ")";
            throw NumericalError(os.str());
        }
    }
    return diag.back();
}

void check_singularities(Interval iv, const std::vector<std::pair<double, int>>& sing) {
    for (const auto& [l, nu] : sing)
        if (nu > 0 && l >= iv.first && l <= iv.second) {
            std::ostringstream os;
            os << "spectral_projection: interval contains the spectral singularity " << l
               << " (use regularized_projection)";
            throw ValidationError(os.str());
        }
}

struct Prepared {
    SpectralData sd;
    ModeSetup ms;
    std::string note;
    bool dense = false;
};

Prepared prepare(const DissipativeSystem& system, const Mat& h, const StoneOptions& opt) {
    Prepared p;
    p.sd = eigendecompose_matrix(h, system.h_norm());
    const double tol = 1e-8 * std::max(system.h_norm(), 1e-300);
    p.ms.tol_real = tol;
    p.ms.cut = lattice_cut(system, p.sd, tol, opt, &p.note);
    p.dense = !p.sd.diagonalizable(1e8);
    if (p.dense && system.dim() > 64)
        throw NumericalError("spectral_projection: eigenvector basis ill-conditioned and dimension above 64");
    return p;
}

}  // namespace

IntervalProjection spectral_projection(const DissipativeSystem& system, Interval interval, const StoneOptions& opt) {
    validate_interval(interval, "spectral_projection");
    check_singularities(interval, opt.singularities);
    IntervalProjection out;
    out.interval = interval;
    Prepared p = prepare(system, system.h(), opt);
    out.notes = p.note;
    if (p.dense) {
        out.method = "dense-quadrature";
        out.matrix = dense_stone(system.h(), interval, opt.eps_schedule, nullptr, &out.eps_trace);
    } else {
        out.method = "eigenmode";
        p.ms.sd = &p.sd;
        const auto mc = mode_coefficients(p.ms, interval, nullptr, opt.cauchy_tol);
        out.unresolved_modes = mc.unresolved;
        out.eps_trace = trace_for(p.sd, interval, opt.eps_schedule, nullptr);
        if (mc.unresolved > 0) {
            std::ostringstream os;
            os << "spectral_projection: eps-extrapolation not Cauchy for " << mc.unresolved << " mode(s), worst "
               << mc.worst << "; eps-trace:";
            for (const auto& t : out.eps_trace) os << " (" << t.eps << ", " << t.norm << ")";
            throw NumericalError(os.str());
        }
        out.matrix = assemble(p.sd, mc.f);
    }
    const Mat& e = out.matrix;
    out.idempotency_defect = op_norm(e * e - e);
    const Mat& h = system.h();
    out.commutation_defect = op_norm(e * h - h * e) / std::max(system.h_norm(), 1e-300);
    if (opt.compute_adjoint) {
        Prepared pa = prepare(system, system.h_adj(), opt);
        Mat ea;
        if (pa.dense) {
            ea = dense_stone(system.h_adj(), interval, opt.eps_schedule, nullptr, nullptr);
        } else {
            pa.ms.sd = &pa.sd;
            pa.ms.cut = p.ms.cut;
            ea = assemble(pa.sd, mode_coefficients(pa.ms, interval, nullptr, opt.cauchy_tol).f);
        }
        out.adjoint_defect = op_norm(e.adjoint() - ea);
    }
    return out;
}

Mat weighted_spectral_projection(const DissipativeSystem& system, Interval interval,
                                 const std::function<cplx(cplx)>& weight, const StoneOptions& opt, int* unresolved) {
    validate_interval(interval, "weighted_spectral_projection");
    Prepared p = prepare(system, system.h(), opt);
    if (p.dense) return dense_stone(system.h(), interval, opt.eps_schedule, &weight, nullptr);
    p.ms.sd = &p.sd;
    const auto mc = mode_coefficients(p.ms, interval, &weight, opt.cauchy_tol);
    if (unresolved) *unresolved = mc.unresolved;
    return assemble(p.sd, mc.f);
}

Mat phase_weighted_projection(const DissipativeSystem& system, Interval interval, double t, const StoneOptions& opt) {
    check_singularities(interval, opt.singularities);
    const std::function<cplx(cplx)> w = [t](cplx mu) { return std::exp(I * t * mu); };
    return weighted_spectral_projection(system, interval, w, opt);
}

double projection_product_defect(const DissipativeSystem& system, const IntervalProjection& e1,
                                 const IntervalProjection& e2, const StoneOptions& opt) {
    const double lo = std::max(e1.interval.first, e2.interval.first);
    const double hi = std::min(e1.interval.second, e2.interval.second);
    const Mat prod = e1.matrix * e2.matrix;
    if (!(hi > lo)) return op_norm(prod);
    const IntervalProjection e12 = spectral_projection(system, {lo, hi}, opt);
    return op_norm(prod - e12.matrix);
}

cplx regularizing_factor(cplx lambda, const std::vector<std::pair<double, int>>& singularities) {
    const cplx r = 1.0 / (lambda - I);
    cplx f = r * r * r * r;
    for (const auto& [l, nu] : singularities) {
        const cplx mu = 1.0 / (l - I);
        for (int k = 0; k < nu; ++k) f *= r - mu;
    }
    return f;
}

RegularizedProjection regularized_projection(const DissipativeSystem& system, Interval interval,
                                             const std::vector<std::pair<double, int>>& singularities,
                                             const StoneOptions& opt) {
    validate_interval(interval, "regularized_projection");
    RegularizedProjection out;
    out.interval = interval;
    out.singularities = singularities;
    for (const auto& [l, nu] : singularities) {
        if (nu < 0) throw ValidationError("regularized_projection: negative order");
        out.mu.push_back(1.0 / (l - I));
    }
    const std::function<cplx(cplx)> w = [&](cplx mu) { return regularizing_factor(mu, singularities); };
    Prepared p = prepare(system, system.h(), opt);
    if (p.dense) {
        out.matrix = dense_stone(system.h(), interval, opt.eps_schedule, &w, &out.eps_trace);
        return out;
    }
    p.ms.sd = &p.sd;
    const auto mc = mode_coefficients(p.ms, interval, &w, opt.cauchy_tol);
    out.unresolved_modes = mc.unresolved;
    out.eps_trace = trace_for(p.sd, interval, opt.eps_schedule, &w);
    if (mc.unresolved > 0) {
        std::ostringstream os;
        os << "regularized_projection: extrapolation not Cauchy (order underestimated?) for " << mc.unresolved
           << " mode(s), worst " << mc.worst;
        throw NumericalError(os.str());
    }
    out.matrix = assemble(p.sd, mc.f);
    return out;
}

Interval snap_interval(const SpectralData& sd, Interval iv) {
    std::vector<double> re;
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) re.push_back(sd.eigenvalues(k).real());
    std::sort(re.begin(), re.end());
    auto snap = [&](double x) {
        if (x == 0.0 || re.empty()) return x;
        auto it = std::lower_bound(re.begin(), re.end(), x);
        if (it == re.begin() || it == re.end()) return x;
        const double lo = *(it - 1), hi = *it;
        const double mid = 0.5 * (lo + hi);
        return mid >= 0.0 ? mid : x;
    };
    return {snap(iv.first), snap(iv.second)};
}

DecompositionResidual decomposition_residual(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                             const std::vector<double>& partition,
                                             const std::vector<std::pair<double, int>>& singularities,
                                             const StoneOptions& opt_in) {
    if (partition.size() < 2) throw ValidationError("decomposition_residual: partition needs at least two points");
    for (std::size_t i = 1; i < partition.size(); ++i)
        if (!(partition[i] > partition[i - 1])) throw ValidationError("decomposition_residual: partition must increase");
    DecompositionResidual out;
    out.lambda_max = partition.back();
    for (const auto& cl : dec.clusters)
        if (cl.kind == ModeKind::real && cl.center.real() >= 0.0) {
            std::ostringstream os;
            os << "real eigenvalue " << cl.center.real() << " in [0, inf): residual skipped";
            out.skipped = true;
            out.notes = os.str();
            return out;
        }
    StoneOptions opt = opt_in;
    opt.continuum_cut = dec.continuum_cut > 0.0 ? dec.continuum_cut : 0.0;
    const Eigen::Index n = system.dim();
    const Mat id = Mat::Identity(n, n);
    const Mat rest = id - dec.pi_pp.matrix;
    Mat sum = Mat::Zero(n, n);
    const bool reg = std::any_of(singularities.begin(), singularities.end(), [](auto& s) { return s.second > 0; });
    for (std::size_t i = 0; i + 1 < partition.size(); ++i) {
        const Interval iv{partition[i], partition[i + 1]};
        sum += reg ? regularized_projection(system, iv, singularities, opt).matrix
                   : spectral_projection(system, iv, opt).matrix;
    }
    const Interval tail{out.lambda_max, out.lambda_max + 10.0 * std::max(1.0, system.h_norm())};
    if (reg) {
        const Mat r = (system.h() - I * id).partialPivLu().inverse();
        Mat lhs = r * r * r * r;
        for (const auto& [l, nu] : singularities)
            for (int k = 0; k < nu; ++k) lhs = lhs * (r - (1.0 / (l - I)) * id);
        out.residual = op_norm(lhs * rest - sum);
        out.tail = op_norm(regularized_projection(system, tail, singularities, opt).matrix);
    } else {
        out.residual = op_norm(rest - sum);
        out.tail = op_norm(spectral_projection(system, tail, opt).matrix);
    }
    out.lower = out.residual;
    out.upper = out.residual;
    if (out.tail > 1e-3) {
        out.lower = std::max(0.0, out.residual - out.tail);
        out.upper = out.residual + out.tail;
        out.notes = "tail above 1e-3: residual reported as an interval";
    }
    return out;
}

// ------------------------------------------------------------------ Γ_ε

namespace {

struct Piece {
    // μ(s) and dμ/ds on [s0, s1]; breaks include the endpoints
    std::function<cplx(double)> mu, dmu;
    std::vector<double> breaks;
};

std::vector<Piece> gamma_pieces(double eps, double e0, const std::vector<double>& re_parts) {
    const double g1 = std::sqrt(1.0 / (eps * eps) - (1.0 + eps) * (1.0 + eps));
    const double g3 = std::sqrt(1.0 / (eps * eps) - (1.0 - eps) * (1.0 - eps));
    const double a = -0.5 * e0;
    auto line_breaks = [&](double top) {
        std::vector<double> br{a, top};
        for (double x = 1.0; x < top; x *= 2.0) br.push_back(x);
        if (0.0 > a) br.push_back(0.0);
        for (double r : re_parts)
            if (r > a && r < top) br.push_back(r);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        return br;
    };
    std::vector<Piece> out(4);
    // Γ1: (λ − i − iε)^{-1}, λ increasing
    out[0].mu = [eps](double l) { return 1.0 / cplx(l, -1.0 - eps); };
    out[0].dmu = [eps](double l) { const cplx z(l, -1.0 - eps); return -1.0 / (z * z); };
    out[0].breaks = line_breaks(g1);
    // Γ2: ε e^{iθ} from θ1 counterclockwise around the origin to θ3 + 2π
    const double th1 = std::arg(1.0 / cplx(g1, -1.0 - eps));
    const double th3 = std::arg(1.0 / cplx(g3, -1.0 + eps));
    out[1].mu = [eps](double th) { return eps * std::exp(I * th); };
    out[1].dmu = [eps](double th) { return I * eps * std::exp(I * th); };
    for (int i = 0; i <= 16; ++i) out[1].breaks.push_back(th1 + (th3 + 2.0 * PI - th1) * i / 16.0);
    // Γ3: (λ − i + iε)^{-1}, λ decreasing (parametrized by s = −λ)
    out[2].mu = [eps](double s) { return 1.0 / cplx(-s, -1.0 + eps); };
    out[2].dmu = [eps](double s) { const cplx z(-s, -1.0 + eps); return 1.0 / (z * z); };
    {
        auto br = line_breaks(g3);
        for (double& x : br) x = -x;
        std::reverse(br.begin(), br.end());
        out[2].breaks = br;
    }
    // Γ4: (−e0/2 − i + ix)^{-1}, x from +ε to −ε (parametrized by s = −x)
    out[3].mu = [a](double s) { return 1.0 / cplx(a, -1.0 - s); };
    out[3].dmu = [a](double s) { const cplx z(a, -1.0 - s); return I / (z * z); };
    for (int i = 0; i <= 4; ++i) out[3].breaks.push_back(-eps + 2.0 * eps * i / 4.0);
    return out;
}

cplx g_weight(cplx mu, const std::vector<cplx>& mus, const std::vector<int>& nus) {
    cplx f = mu * mu * mu * mu;
    for (std::size_t j = 0; j < mus.size(); ++j)
        for (int k = 0; k < nus[j]; ++k) f *= mu - mus[j];
    return f;
}

}  // namespace

ContourResult contour_gamma_integral(const DissipativeSystem& system, double eps,
                                     const std::vector<std::pair<double, int>>& singularities, double e0) {
    if (!(eps > 0.0) || !(eps < 0.5)) throw ValidationError("contour_gamma_integral: eps must lie in (0, 0.5)");
    const Eigen::Index n = system.dim();
    const SpectralData sd = eigendecompose(system);
    const double tol = 1e-8 * std::max(system.h_norm(), 1e-300);
    if (!(e0 > 0.0)) {
        double top = -std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < n; ++k) {
            const cplx l = sd.eigenvalues(k);
            if (std::abs(l.imag()) <= tol) {
                if (l.real() >= 0.0) {
                    if (system.model_tag() == ModelTag::matrix)
                        throw ValidationError("contour_gamma_integral: real eigenvalue in [0, inf)");
                    continue;
                }
                top = std::max(top, l.real());
            }
        }
        e0 = std::isfinite(top) ? -top : 1.0;
    }
    if (1.0 / eps <= system.h_norm())
        throw ValidationError("contour_gamma_integral: eps too large, the circle piece meets the spectrum");
    std::vector<double> re;
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx l = sd.eigenvalues(k);
        const double b = std::abs(l.imag());
        if (std::abs(b - eps) < 1e-3 * eps && l.real() > -0.5 * e0)
            throw ValidationError("contour_gamma_integral: contour intersects an eigenvalue of R");
        if (b < eps && std::abs(l.real() + 0.5 * e0) < 1e-3 * e0)
            throw ValidationError("contour_gamma_integral: contour intersects an eigenvalue of R");
        if (b < eps && l.real() > -0.5 * e0 && l.real() < 0.0 && b > tol)
            throw ValidationError("contour_gamma_integral: eps too large to separate an isolated eigenvalue");
        re.push_back(l.real());
    }
    std::vector<cplx> mus;
    std::vector<int> nus;
    for (const auto& [l, nu] : singularities) {
        mus.push_back(1.0 / (l - I));
        nus.push_back(nu);
    }
    const auto pieces = gamma_pieces(eps, e0, re);
    ContourResult out;
    out.e0 = e0;
    out.eps = eps;
    QuadOptions qo;
    qo.abs_tol = 1e-14;
    qo.rel_tol = 1e-11;
    const bool eig = sd.diagonalizable(1e8) && n > 64;
    out.method = eig ? "eigenmode" : "dense-lu";
    if (eig) {
        Vec r(n);
        for (Eigen::Index k = 0; k < n; ++k) r(k) = 1.0 / (sd.eigenvalues(k) - I);
        for (const auto& pc : pieces) {
            Vec f(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                auto integrand = [&](double s) {
                    const cplx mu = pc.mu(s);
                    return g_weight(mu, mus, nus) / (r(k) - mu) * pc.dmu(s);
                };
                f(k) = integrate_adaptive(integrand, pc.breaks, qo).value;
            }
            out.pieces.push_back(assemble(sd, f));
        }
    } else {
        const Mat id = Mat::Identity(n, n);
        const Mat rm = (system.h() - I * id).partialPivLu().inverse();
        for (const auto& pc : pieces) {
            auto integrand = [&](double s) -> Mat {
                const cplx mu = pc.mu(s);
                return (g_weight(mu, mus, nus) * pc.dmu(s)) * (rm - mu * id).partialPivLu().inverse();
            };
            auto res = integrate_adaptive(integrand, pc.breaks, qo);
            if (!res.converged) throw NumericalError("contour_gamma_integral: piecewise quadrature did not converge");
            out.pieces.push_back(res.value);
        }
    }
    out.total = Mat::Zero(n, n);
    for (const auto& p : out.pieces) {
        out.total += p;
        out.piece_norms.push_back(op_norm(p));
    }
    out.normalized = -out.total / (2.0 * PI * I);
    return out;
}

void write_eps_trace_csv(std::ostream& os, const std::vector<EpsTracePoint>& trace, double extrapolated_norm) {
    os << "eps,entrywise_max_change,extrapolated_norm\n";
    os.precision(17);
    for (const auto& p : trace) os << p.eps << ',' << p.max_change << ',' << extrapolated_norm << '\n';
}

}  // namespace dscat
