#include "dscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "dscat/evolution.hpp"
#include "dscat/linalg.hpp"
#include "dscat/quadrature.hpp"

namespace dscat {

std::string to_string(WaveDirection d) {
    switch (d) {
        case WaveDirection::minus: return "minus";
        case WaveDirection::plus_adjoint: return "plus_adjoint";
        case WaveDirection::plus: return "plus";
        case WaveDirection::minus_adjoint: return "minus_adjoint";
    }
    return "?";
}

std::string to_string(WaveMethod m) { return m == WaveMethod::finite_time ? "finite-time" : "cook-integral"; }

ProbePlacement placement_for(WaveDirection d) {
    return d == WaveDirection::minus || d == WaveDirection::minus_adjoint ? ProbePlacement::outgoing
                                                                          : ProbePlacement::incoming;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sites per unit time of a lattice packet with momentum θ
double group_velocity(double theta, double dx) { return 2.0 * std::sin(std::abs(theta)) / (dx * dx); }

double max_velocity(double theta, double spread, double dx) {
    const double a = std::max(0.0, std::abs(theta) - spread), b = std::min(PI, std::abs(theta) + spread);
    if (a <= 0.5 * PI && b >= 0.5 * PI) return group_velocity(0.5 * PI, dx);
    return std::max(group_velocity(a, dx), group_velocity(b, dx));
}

// e^{-itH}, e^{itH*}, e^{-itH₀}, e^{-itH_V} for one system, built on first use
class Evolutions {
public:
    explicit Evolutions(const DissipativeSystem& s) : sys_(s) {}

    Mat h(double t, const Mat& x) { return ph().apply(x, t); }
    // e^{itH*} x = (e^{-itH})* x
    Mat h_adj(double t, const Mat& x) {
        const Propagator& p = ph();
        if (t == 0.0) return x;
        if (p.method() == PropagationMethod::eig_diagonalization) {
            const SpectralData& sd = p.spectral();
            Mat coef = sd.right_vectors.adjoint() * x;
            for (Eigen::Index k = 0; k < coef.rows(); ++k) coef.row(k) *= std::conj(std::exp(-I * t * sd.eigenvalues(k)));
            return sd.left_rows.adjoint() * coef;
        }
        return p.matrix(t).adjoint() * x;
    }
    Mat free(double t, const Mat& x) {
        if (!p0_) p0_.emplace(sys_.kinetic());
        return p0_->apply(x, t);
    }
    Mat hv(double t, const Mat& x) {
        if (!pv_) pv_.emplace(sys_.without_absorption());
        return pv_->apply(x, t);
    }
    const Propagator& ph() {
        if (!ph_) ph_.emplace(sys_);
        return *ph_;
    }
    const Propagator& pv() {
        if (!pv_) pv_.emplace(sys_.without_absorption());
        return *pv_;
    }
    const Propagator& p0() {
        if (!p0_) p0_.emplace(sys_.kinetic());
        return *p0_;
    }

private:
    const DissipativeSystem& sys_;
    std::optional<Propagator> ph_, p0_, pv_;
};

Mat bound_complement(const Mat& basis_hb, const Mat& x) {
    if (basis_hb.cols() == 0) return x;
    return x - basis_hb * (basis_hb.adjoint() * x);
}

struct Support {
    double lo, hi;
};

Support interaction_support(const DissipativeSystem& system) {
    const auto& lat = *system.lattice();
    if (lat.support_lo < 0) {
        const double c = 0.5 * (system.dim() - 1);
        return {c, c};
    }
    return {static_cast<double>(lat.support_lo), static_cast<double>(lat.support_hi)};
}

Mat wave_apply(Evolutions& ev, WaveDirection d, double T, const Mat& x, const Mat& basis_hb) {
    switch (d) {
        case WaveDirection::minus: return ev.h(T, ev.free(-T, x));
        case WaveDirection::plus_adjoint: return ev.h_adj(T, ev.free(T, x));
        case WaveDirection::plus: return ev.free(-T, ev.h(T, bound_complement(basis_hb, x)));
        case WaveDirection::minus_adjoint: return ev.free(T, ev.h_adj(T, bound_complement(basis_hb, x)));
    }
    return x;
}

bool needs_bound_projection(WaveDirection d) { return d == WaveDirection::plus || d == WaveDirection::minus_adjoint; }

Mat bound_basis(const DissipativeSystem& system, const WaveOptions& opt, WaveDirection d) {
    if (!needs_bound_projection(d)) return Mat(system.dim(), 0);
    if (opt.decomposition) return opt.decomposition->basis_Hb;
    return classify_subspaces(system).basis_Hb;
}

WaveOperatorResult run_finite_time(Evolutions& ev, const DissipativeSystem& system, double T, WaveDirection d,
                                   const Mat& states, double t_max, const WaveOptions& opt) {
    if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("finite_time_wave: horizon must be positive");
    if (T > t_max * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "finite_time_wave: horizon " << T << " exceeds the boundary-reflection horizon; safe T_max = " << t_max;
        throw ValidationError(os.str());
    }
    if (states.rows() != system.dim()) throw ValidationError("finite_time_wave: states have wrong dimension");
    const Mat hb = bound_basis(system, opt, d);
    WaveOperatorResult out;
    out.direction = d;
    out.method = WaveMethod::finite_time;
    out.probes = states;
    out.t_max = t_max;
    Mat prev;
    for (int k = std::max(0, opt.doublings); k >= 0; --k) {
        const double t = T / std::pow(2.0, k);
        Mat w = wave_apply(ev, d, t, states, hb);
        out.horizons.push_back(t);
        if (prev.size()) out.cauchy_defects.push_back(op_norm(w - prev));
        prev = std::move(w);
    }
    out.matrix = std::move(prev);
    out.norm = states.cols() ? op_norm(out.matrix) : 0.0;
    out.converged = !out.cauchy_defects.empty() && out.cauchy_defects.back() <= opt.converged_tol;
    if (out.norm > 1.0 + 1e-6 && op_norm(states) <= 1.0 + 1e-12) out.notes += "norm above 1: contraction property violated; ";
    if (!out.converged && system.model_tag() == ModelTag::matrix)
        out.notes += "not convergent: a finite-dimensional H0 has no scattering states; ";
    return out;
}

}  // namespace

// ------------------------------------------------------------------ probes

ProbeSet make_probes(const DissipativeSystem& system, ProbePlacement placement, const ProbeOptions& opt) {
    ProbeSet ps;
    ps.placement = placement;
    const int n = system.dim();
    if (system.model_tag() == ModelTag::matrix || !system.lattice()) {
        ps.states = Mat::Identity(n, n);
        ps.t_max = kInf;
        ps.notes = "matrix model: canonical basis";
        return ps;
    }
    if (opt.momenta < 1 || !(opt.sigma > 0.0) || !(opt.margin > 0.0))
        throw ValidationError("make_probes: need momenta >= 1, sigma > 0, margin > 0");
    const double dx = system.lattice()->dx;
    const double spread = 1.0 / (2.0 * opt.sigma);
    double ta = opt.theta_min, tb = opt.theta_max;
    if (opt.energy_window) {
        auto theta_of = [&](double e) { return std::acos(std::clamp(1.0 - 0.5 * e * dx * dx, -1.0, 1.0)); };
        ta = theta_of(opt.energy_window->first);
        tb = theta_of(opt.energy_window->second);
        if (tb - ta > 6.0 * spread) {
            ta += 3.0 * spread;
            tb -= 3.0 * spread;
        } else {
            ta = tb = 0.5 * (ta + tb);
        }
    }
    if (!(ta > 0.0) || !(tb < PI) || tb < ta) throw ValidationError("make_probes: momentum window must lie in (0, pi)");
    const Support sup = interaction_support(system);
    const double off = opt.margin * opt.sigma;
    const double c = 0.5 * (sup.lo + sup.hi);
    std::vector<std::pair<double, double>> packets;  // (θ, x0)
    for (int j = 0; j < opt.momenta; ++j) {
        const double th = opt.momenta == 1 ? 0.5 * (ta + tb) : ta + (tb - ta) * (j + 0.5) / opt.momenta;
        switch (placement) {
            case ProbePlacement::outgoing:
                packets.push_back({th, sup.hi + off});
                if (opt.mirrored) packets.push_back({-th, sup.lo - off});
                break;
            case ProbePlacement::incoming:
                packets.push_back({th, sup.lo - off});
                if (opt.mirrored) packets.push_back({-th, sup.hi + off});
                break;
            case ProbePlacement::centered:
                packets.push_back({th, c});
                if (opt.mirrored) packets.push_back({-th, c});
                break;
        }
    }
    Mat raw(n, static_cast<Eigen::Index>(packets.size()));
    double tmax = kInf;
    for (std::size_t p = 0; p < packets.size(); ++p) {
        const auto [th, x0] = packets[p];
        if (x0 < off || x0 > n - 1 - off) {
            std::ostringstream os;
            os << "make_probes: box of " << n << " sites too small for packets of width " << opt.sigma
               << " beside the interaction region";
            throw ValidationError(os.str());
        }
        for (int j = 0; j < n; ++j) raw(j, p) = std::exp(-(j - x0) * (j - x0) / (4.0 * opt.sigma * opt.sigma) + I * th * double(j));
        raw.col(p).normalize();
        const double v = max_velocity(th, 3.0 * spread, dx);
        const double ahead = th > 0 ? n - 1 - x0 : x0;
        const double behind = th > 0 ? x0 : n - 1 - x0;
        double t = 0.0;
        switch (placement) {
            case ProbePlacement::outgoing: t = (behind - off) / v; break;
            case ProbePlacement::incoming: t = std::min(ahead - off, behind + 2.0 * off - off) / v; break;
            case ProbePlacement::centered: t = (std::min(ahead, behind) - off) / v; break;
        }
        tmax = std::min(tmax, t);
        ps.theta.push_back(th);
        ps.center.push_back(x0);
    }
    if (!(tmax > 0.0)) throw ValidationError("make_probes: no reflection-free horizon for this geometry");
    Eigen::HouseholderQR<Mat> qr(raw);
    ps.states = qr.householderQ() * Mat::Identity(n, raw.cols());
    // keep the packet phases: Q columns match raw columns up to a triangular mix
    for (Eigen::Index k = 0; k < ps.states.cols(); ++k) {
        const cplx ph = ps.states.col(k).dot(raw.col(k));
        if (std::abs(ph) > 0) ps.states.col(k) *= ph / std::abs(ph);
    }
    ps.t_max = tmax;
    std::ostringstream os;
    os << packets.size() << " gaussian packets, sigma " << opt.sigma << ", reflection horizon " << tmax;
    ps.notes = os.str();
    return ps;
}

// ------------------------------------------------------------------ finite time

WaveOperatorResult finite_time_wave_on(const DissipativeSystem& system, double T, WaveDirection direction,
                                       const Mat& states, double t_max, const WaveOptions& opt) {
    Evolutions ev(system);
    return run_finite_time(ev, system, T, direction, states, t_max, opt);
}

WaveOperatorResult finite_time_wave(const DissipativeSystem& system, double T, WaveDirection direction,
                                    const ProbeSet& probes, const WaveOptions& opt) {
    auto out = finite_time_wave_on(system, T, direction, probes.states, probes.t_max, opt);
    out.notes = probes.notes + "; " + out.notes;
    return out;
}

WaveOperatorResult finite_time_wave(const DissipativeSystem& system, double T, WaveDirection direction,
                                    const WaveOptions& opt) {
    return finite_time_wave(system, T, direction, make_probes(system, placement_for(direction), opt.probes), opt);
}

double intertwining_defect(const DissipativeSystem& system, double T, const ProbeSet& probes,
                           const std::vector<double>& times) {
    Evolutions ev(system);
    const Mat hb(system.dim(), 0);
    const Mat w = wave_apply(ev, WaveDirection::minus, T, probes.states, hb);
    const double scale = std::max(op_norm(w), 1e-300);
    double worst = 0.0;
    for (double t : times) {
        const Mat lhs = ev.h(t, w);
        const Mat rhs = wave_apply(ev, WaveDirection::minus, T, ev.free(t, probes.states), hb);
        worst = std::max(worst, op_norm(lhs - rhs) / scale);
    }
    return worst;
}

double chain_rule_defect(const DissipativeSystem& system, double T, const ProbeSet& probes) {
    if (T > probes.t_max * (1.0 + 1e-12)) throw ValidationError("chain_rule_defect: horizon beyond reflection horizon");
    Evolutions ev(system);
    const Mat direct = ev.h(T, ev.free(-T, probes.states));
    const Mat inner = ev.hv(T, ev.free(-T, probes.states));
    const Mat chained = ev.h(0.5 * T, ev.hv(-0.5 * T, inner));
    return op_norm(direct - chained);
}

KernelLaw kernel_law(const DissipativeSystem& system, const SubspaceDecomposition& dec, double horizon) {
    KernelLaw out;
    if (!(horizon > 0.0)) {
        double bmin = kInf;
        for (const auto& cl : dec.clusters)
            if (cl.kind == ModeKind::decaying) bmin = std::min(bmin, -cl.center.imag());
        horizon = std::isfinite(bmin) ? 10.0 / bmin : 1.0;
    }
    out.horizon = horizon;
    Evolutions ev(system);
    auto max_col = [](const Mat& m) {
        double r = 0.0;
        for (Eigen::Index k = 0; k < m.cols(); ++k) r = std::max(r, m.col(k).norm());
        return r;
    };
    // ‖e^{iTH₀}x‖ = ‖x‖, so the limit norm only needs e^{-iTH}Π_b^⊥u
    if (dec.basis_Hb.cols()) out.max_norm_hb = max_col(ev.h(horizon, bound_complement(dec.basis_Hb, dec.basis_Hb)));
    if (dec.basis_Hp.cols()) out.max_norm_hp = max_col(ev.h(horizon, bound_complement(dec.basis_Hb, dec.basis_Hp)));
    return out;
}

// ------------------------------------------------------------------ Cook

WaveOperatorResult cook_wave(const DissipativeSystem& system, double horizon, const ProbeSet& probes,
                             const WaveOptions& opt) {
    if (!(horizon > 0.0)) throw ValidationError("cook_wave: horizon must be positive");
    if (horizon > probes.t_max * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "cook_wave: horizon " << horizon << " exceeds the boundary-reflection horizon; safe T_max = " << probes.t_max;
        throw ValidationError(os.str());
    }
    const Eigen::Index n = system.dim(), m = probes.states.cols();
    Evolutions ev(system);
    // second factor W₋(H_V, H₀)
    const Mat x = ev.hv(horizon, ev.free(-horizon, probes.states));
    WaveOperatorResult out;
    out.direction = WaveDirection::minus;
    out.method = WaveMethod::cook_integral;
    out.probes = probes.states;
    out.t_max = probes.t_max;

    const Mat& kk = system.cstar_c();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < n; ++i)
        if (kk.row(i).norm() > 0.0) rows.push_back(i);
    if (rows.empty()) {
        out.matrix = x;
        out.horizons = {horizon};
        out.converged = true;
        out.norm = m ? op_norm(x) : 0.0;
        out.notes = "C = 0: Cook integral vanishes";
        out.reference_defect = op_norm(x - ev.h(horizon, ev.free(-horizon, probes.states)));
        return out;
    }
    const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    const SpectralData& sv = ev.pv().spectral();
    const Mat y = sv.left_rows * x;  // H_V coordinates
    Mat kv(r, n);                    // rows of C*C·V_V on supp C
    {
        const Mat full = kk * sv.right_vectors;
        for (Eigen::Index i = 0; i < r; ++i) kv.row(i) = full.row(rows[i]);
    }
    const Vec& mu = sv.eigenvalues;
    // integrand norm ‖C*C e^{isH_V}x‖ for the decay check
    auto source = [&](double s) -> Mat {
        Mat z = y;
        for (Eigen::Index k = 0; k < n; ++k) z.row(k) *= std::exp(I * s * mu(k));
        return kv * z;  // r × m, entries on supp C
    };
    double peak = 0.0;
    const int samples = 400;
    for (int i = 0; i <= samples; ++i) peak = std::max(peak, source(horizon * i / samples).norm());
    const double tail = source(horizon).norm();

    std::vector<double> cuts;
    for (int k = std::max(0, opt.doublings); k >= 0; --k) cuts.push_back(horizon / std::pow(2.0, k));
    const Propagator& ph = ev.ph();
    Mat acc = Mat::Zero(n, m);
    std::vector<Mat> partial;
    if (ph.method() == PropagationMethod::eig_diagonalization) {
        const SpectralData& sh = ph.spectral();
        Mat lh(n, r);
        for (Eigen::Index i = 0; i < r; ++i) lh.col(i) = sh.left_rows.col(rows[i]);
        const Vec& lam = sh.eigenvalues;
        auto integrand = [&](double s) -> Mat {
            Mat g = lh * source(s);
            for (Eigen::Index k = 0; k < n; ++k) g.row(k) *= std::exp(-I * s * lam(k));
            return g;
        };
        QuadOptions qo;
        qo.abs_tol = 1e-10;
        qo.rel_tol = 1e-9;
        qo.max_intervals = 200000;
        const double panel = std::min(2.0, 2.0 * PI / std::max(1.0, system.h_norm()));
        double a = 0.0;
        for (double b : cuts) {
            std::vector<double> br;
            const int np = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
            for (int i = 0; i <= np; ++i) br.push_back(a + (b - a) * i / np);
            auto res = integrate_adaptive(integrand, br, qo);
            if (!res.converged) throw NumericalError("cook_wave: adaptive quadrature did not converge");
            acc += sh.right_vectors * res.value;
            partial.push_back(acc);
            a = b;
        }
        out.notes = "eigenbasis quadrature";
    } else {
        // e^{-isH} = U^p E_q on Gauss panels, summed by Horner's rule
        const double h = 0.5;
        const auto& gl = gauss_legendre(8);
        std::vector<Mat> eq;
        for (double xq : gl.x) eq.push_back(ph.matrix(0.5 * h * (xq + 1.0)));
        const Mat u = ph.matrix(h);
        double a = 0.0;
        for (double b : cuts) {
            const int np = std::max(1, static_cast<int>(std::round((b - a) / h)));
            Mat horner = Mat::Zero(n, m);
            for (int p = np - 1; p >= 0; --p) {
                Mat sp = Mat::Zero(n, m);
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    const double s = a + p * h + 0.5 * h * (gl.x[q] + 1.0);
                    Mat full = Mat::Zero(n, m);
                    const Mat src = source(s);
                    for (Eigen::Index i = 0; i < r; ++i) full.row(rows[i]) = src.row(i);
                    sp += (0.5 * h * gl.w[q]) * (eq[q] * full);
                }
                horner = sp + u * horner;
            }
            acc += ph.apply(horner, a);
            partial.push_back(acc);
            a = b;
        }
        out.notes = "panel quadrature (H not diagonalized)";
    }
    for (std::size_t k = 0; k < partial.size(); ++k) {
        out.horizons.push_back(cuts[k]);
        if (k) out.cauchy_defects.push_back(op_norm(partial[k] - partial[k - 1]));
    }
    out.matrix = x - acc;
    out.norm = m ? op_norm(out.matrix) : 0.0;
    if (tail > 1e-3 * std::max(peak, 1e-300) && tail > 1e-10) {
        std::ostringstream os;
        os << "cook_wave: integrand not decaying at the horizon (|C*C e^{isH_V}u| = " << tail << " vs peak " << peak
           << "; partial value norm " << out.norm << ")";
        throw NumericalError(os.str());
    }
    out.converged = out.cauchy_defects.empty() || out.cauchy_defects.back() <= opt.converged_tol;
    out.reference_defect = op_norm(out.matrix - ev.h(horizon, ev.free(-horizon, probes.states)));
    return out;
}

WaveOperatorResult cook_wave(const DissipativeSystem& system, double horizon, const WaveOptions& opt) {
    return cook_wave(system, horizon, make_probes(system, ProbePlacement::outgoing, opt.probes), opt);
}

// ------------------------------------------------------------------ S

ScatteringResult scattering_operator(const DissipativeSystem& system, double T, const WaveOptions& opt) {
    const ProbeSet ps = make_probes(system, ProbePlacement::centered, opt.probes);
    if (!(T > 0.0)) throw ValidationError("scattering_operator: horizon must be positive");
    if (T > ps.t_max * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "scattering_operator: horizon " << T << " exceeds the reflection horizon; safe T_max = " << ps.t_max;
        throw ValidationError(os.str());
    }
    const Mat hb = opt.decomposition ? opt.decomposition->basis_Hb : classify_subspaces(system).basis_Hb;
    Evolutions ev(system);
    const Mat& p = ps.states;
    ScatteringResult out;
    out.horizon = T;
    out.probes = p;
    out.s = ev.free(-T, ev.h(T, bound_complement(hb, ev.h(T, ev.free(-T, p)))));
    const Mat s_adj = ev.free(T, ev.h_adj(T, bound_complement(hb, ev.h_adj(T, ev.free(T, p)))));
    out.adjoint_defect = op_norm((p.adjoint() * out.s).adjoint() - p.adjoint() * s_adj);
    out.singular_values = singular_values(out.s);
    return out;
}

ScatteringResult scattering_operator(const WaveOperatorResult& w_plus, const WaveOperatorResult& w_minus) {
    if (w_plus.probes.rows() != w_minus.matrix.rows() || w_plus.probes.cols() != w_minus.matrix.cols() ||
        (w_plus.probes - w_minus.matrix).norm() > 1e-10 * std::max(1.0, w_minus.matrix.norm()))
        throw ValidationError("scattering_operator: w_plus was not evaluated on the images of w_minus");
    if (w_plus.direction != WaveDirection::plus || w_minus.direction != WaveDirection::minus)
        throw ValidationError("scattering_operator: need W+(H0,H) and W-(H,H0)");
    ScatteringResult out;
    out.s = w_plus.matrix;
    out.probes = w_minus.probes;
    out.horizon = w_plus.horizons.empty() ? 0.0 : w_plus.horizons.back();
    out.singular_values = singular_values(out.s);
    return out;
}

// ------------------------------------------------------------------ divergence

double divergence_exponent(const std::function<double(double, double)>& integrand, std::pair<double, double> J,
                           const std::vector<double>& eps_schedule, std::vector<double>* integrals) {
    if (eps_schedule.size() < 2) throw ValidationError("divergence_exponent: need at least two eps values");
    for (std::size_t i = 1; i < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] < eps_schedule[i - 1]) || !(eps_schedule[i] > 0.0))
            throw ValidationError("divergence_exponent: eps schedule must be positive and decreasing");
    if (!(J.second > J.first)) throw ValidationError("divergence_exponent: empty window");
    QuadOptions qo;
    qo.abs_tol = 1e-14;
    qo.rel_tol = 1e-7;
    std::vector<double> vals;
    for (double e : eps_schedule) {
        // locate the peak on a coarse grid so that the adaptive rule sees it
        double best = J.first, bv = -1.0;
        for (int i = 0; i <= 64; ++i) {
            const double l = J.first + (J.second - J.first) * i / 64.0;
            const double v = integrand(l, e);
            if (v > bv) bv = v, best = l;
        }
        std::vector<double> br{J.first, J.second};
        for (double d : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
            const double l = best + d * e;
            if (l > J.first && l < J.second) br.push_back(l);
        }
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        vals.push_back(integrate_adaptive([&](double l) { return integrand(l, e); }, br, qo).value);
    }
    if (integrals) *integrals = vals;
    // least squares on the last decade
    const double emin = eps_schedule.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (eps_schedule[i] > 10.0 * emin * (1.0 + 1e-12)) continue;
        if (!(vals[i] > 0.0)) return 0.0;
        const double lx = std::log(1.0 / eps_schedule[i]), ly = std::log(vals[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, ++cnt;
    }
    if (cnt < 2) throw ValidationError("divergence_exponent: the last decade holds fewer than two eps values");
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

namespace {

void finish_witness(DivergenceWitness& w, double threshold) {
    if (w.exponent < threshold) {
        std::ostringstream os;
        os << "divergence_witness: no divergence detected (exponent " << w.exponent << ")";
        throw NumericalError(os.str());
    }
}

Vec project_off_pp(const DissipativeSystem& system, const SubspaceDecomposition* dec, const Vec& v, std::string& notes) {
    if (dec) return v - dec->pi_pp.matrix * v;
    if (system.dim() <= 1024) return v - classify_subspaces(system).pi_pp.matrix * v;
    notes += "lattice too large for dense Pi_pp: witness is C*u without projection; ";
    return v;
}

}  // namespace

DivergenceWitness divergence_witness(const DissipativeSystem& system, std::pair<double, double> J,
                                     const std::vector<double>& eps_schedule, const SubspaceDecomposition* dec) {
    DivergenceWitness w;
    w.window = J;
    w.eps = eps_schedule;
    if (eps_schedule.empty()) throw ValidationError("divergence_witness: empty eps schedule");
    if (system.c_norm() == 0.0) {
        w.integrals.assign(eps_schedule.size(), 0.0);
        w.exponent = 0.0;
        w.notes = "C = 0: integral vanishes";
        finish_witness(w, 0.25);
    }
    const double emin = eps_schedule.back();
    double best = J.first, bv = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double l = J.first + (J.second - J.first) * i / 40.0;
        const double v = sandwiched_norm(system, l, emin);
        if (v > bv) bv = v, best = l;
    }
    const SandwichedResolvent top = sandwiched_resolvent(system, best, emin);
    Eigen::JacobiSVD<Mat> svd(top.op, Eigen::ComputeThinV);
    w.u = svd.matrixV().col(0);
    const Eigen::Index off = top.offset;
    auto integrand = [&](double l, double e) {
        return (sandwiched_resolvent(system, l, e).op * w.u).squaredNorm();
    };
    w.exponent = divergence_exponent(integrand, J, eps_schedule, &w.integrals);
    Vec cu = Vec::Zero(system.dim());
    cu.segment(off, w.u.size()) = w.u;
    cu = system.c().adjoint() * cu;
    w.witness = project_off_pp(system, dec, cu, w.notes);
    finish_witness(w, 0.25);
    return w;
}

DivergenceWitness divergence_witness(const RadialSystem& radial, std::pair<double, double> J,
                                     const std::vector<double>& eps_schedule, const DissipativeSystem* lattice,
                                     const SubspaceDecomposition* dec) {
    DivergenceWitness w;
    w.window = J;
    w.eps = eps_schedule;
    if (eps_schedule.empty()) throw ValidationError("divergence_witness: empty eps schedule");
    const double emin = eps_schedule.back();
    double best = J.first, bv = -1.0;
    for (int i = 0; i <= 40; ++i) {
        const double l = J.first + (J.second - J.first) * i / 40.0;
        const double v = sandwiched_norm(radial, l, emin);
        if (v > bv) bv = v, best = l;
    }
    const SandwichedResolvent top = sandwiched_resolvent(radial, best, emin);
    if (top.op.size() == 0) {
        w.exponent = 0.0;
        finish_witness(w, 0.25);
    }
    Eigen::JacobiSVD<Mat> svd(top.op, Eigen::ComputeThinV);
    w.u = svd.matrixV().col(0);
    auto integrand = [&](double l, double e) { return (sandwiched_resolvent(radial, l, e).op * w.u).squaredNorm(); };
    w.exponent = divergence_exponent(integrand, J, eps_schedule, &w.integrals);
    if (lattice && lattice->lattice()) {
        // node vector entries are √ω_i u(r_i); lattice entries √dx u(r_j), sites at r_j = (j+1)dx
        const auto& nodes = radial.nodes;
        const double dx = lattice->lattice()->dx;
        std::vector<cplx> fn(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) fn[i] = w.u(i) / std::sqrt(radial.weights[i]);
        Vec ul = Vec::Zero(lattice->dim());
        for (int j = 0; j < lattice->dim(); ++j) {
            const double r = (j + 1) * dx;
            auto it = std::lower_bound(nodes.begin(), nodes.end(), r);
            if (it == nodes.begin() || it == nodes.end()) continue;
            const std::size_t b = static_cast<std::size_t>(it - nodes.begin()), a = b - 1;
            const double t = (r - nodes[a]) / (nodes[b] - nodes[a]);
            ul(j) = std::sqrt(dx) * ((1.0 - t) * fn[a] + t * fn[b]);
        }
        const Vec cu = lattice->c().adjoint() * ul;
        w.witness = project_off_pp(*lattice, dec, cu, w.notes);
    } else {
        w.notes += "no lattice given: witness not transferred; ";
    }
    finish_witness(w, 0.25);
    return w;
}

// ------------------------------------------------------------------ verdict

CompletenessVerdict completeness_verdict(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                         const WaveOperatorResult* w_minus, const SingularityScan& scan,
                                         const VerdictOptions& opt, const RadialSystem* radial) {
    CompletenessVerdict out;
    out.verdict = "inconclusive";
    std::ostringstream notes;
    if (w_minus && w_minus->matrix.size()) {
        if (w_minus->matrix.rows() != system.dim())
            throw ValidationError("completeness_verdict: wave operator from a different model");
        const RVec sv = singular_values(w_minus->matrix);
        out.sigma_min_restricted = sv.size() ? sv.minCoeff() : 0.0;
        const Mat qw = orth(w_minus->matrix);
        const Mat target_perp = orth_union(dec.basis_Hb, dec.basis_Hp_star);
        if (target_perp.cols() == 0) {
            out.principal_angles = RVec::Zero(qw.cols());
        } else {
            out.principal_angles = singular_values(target_perp.adjoint() * qw);
        }
    } else {
        out.sigma_min_restricted = std::numeric_limits<double>::quiet_NaN();
        notes << "no wave-operator probes supplied; ";
    }
    const double max_angle = out.principal_angles.size() ? out.principal_angles.maxCoeff() : 0.0;
    std::vector<const Singularity*> sings;
    for (const auto& s : scan.singularities)
        if (s.status == "singular") sings.push_back(&s);
    if (!sings.empty()) {
        const Singularity& s = *sings.front();
        const double hw = std::max(2.0 * scan.grid_step, 1e-3);
        const std::pair<double, double> J{std::max(0.0, s.lambda - hw), s.lambda + hw};
        try {
            DivergenceWitness w = radial ? divergence_witness(*radial, J, opt.eps_schedule, &system, &dec)
                                         : divergence_witness(system, J, opt.eps_schedule, &dec);
            if (w.exponent >= opt.exponent) {
                out.verdict = "incomplete";
                notes << "spectral singularity at " << s.lambda << ", divergence exponent " << w.exponent << "; ";
            } else {
                notes << "singularity reported but exponent " << w.exponent << " below " << opt.exponent << "; ";
            }
            out.witness = std::move(w);
        } catch (const NumericalError& e) {
            notes << e.what() << "; ";
        }
    } else if (w_minus && w_minus->matrix.size()) {
        if (out.sigma_min_restricted >= opt.sigma_min && max_angle <= opt.angle) {
            out.verdict = "complete";
        } else {
            notes << "sigma_min " << out.sigma_min_restricted << ", max angle " << max_angle << "; ";
        }
    }
    out.notes = notes.str();
    return out;
}

WaveOperatorResult local_wave(const DissipativeSystem& system, Interval I, double T, const WaveOptions& opt) {
    if (!(I.second > I.first)) throw ValidationError("local_wave: empty interval");
    Evolutions ev(system);
    const SpectralData& s0 = ev.p0().spectral();
    Mat e0 = Mat::Zero(system.dim(), system.dim());
    int inside = 0;
    for (Eigen::Index k = 0; k < s0.eigenvalues.size(); ++k) {
        const double l = s0.eigenvalues(k).real();
        if (l >= I.first && l <= I.second) {
            e0 += s0.right_vectors.col(k) * s0.left_rows.row(k);
            ++inside;
        }
    }
    ProbeOptions po = opt.probes;
    ProbeSet ps;
    if (system.model_tag() != ModelTag::matrix && inside > 0) {
        const double top = 4.0 / (system.lattice()->dx * system.lattice()->dx);
        po.energy_window = std::make_pair(std::max(I.first, 0.0), std::min(I.second, top));
        ps = make_probes(system, ProbePlacement::outgoing, po);
    } else {
        ps = make_probes(system, ProbePlacement::outgoing, po);
    }
    WaveOperatorResult out;
    const Mat filtered = e0 * ps.states;
    if (inside == 0 || filtered.norm() < 1e-12) {
        out.direction = WaveDirection::minus;
        out.probes = ps.states;
        out.matrix = Mat::Zero(system.dim(), ps.states.cols());
        out.t_max = ps.t_max;
        out.converged = true;
        out.horizons = {T};
        out.notes = "interval disjoint from the spectrum of H0: W = 0";
        return out;
    }
    const Mat q = orth(filtered);
    out = run_finite_time(ev, system, T, WaveDirection::minus, q, ps.t_max, opt);
    const RVec sv = singular_values(out.matrix);
    out.sigma_min = sv.size() ? sv.minCoeff() : 0.0;
    if (system.model_tag() != ModelTag::matrix || !system.self_adjoint()) {
        const SpectralData sd = eigendecompose(system);
        const Interval snapped = snap_interval(sd, I);
        out.notes = ps.notes + "; probes filtered by E_H0(I)";
        try {
            const IntervalProjection e = spectral_projection(system, snapped, StoneOptions{});
            const Mat qe = projector_range(e.matrix);
            const Mat qw = orth(out.matrix);
            out.range_angle = qw.cols() ? op_norm(qw - qe * (qe.adjoint() * qw)) : 0.0;
        } catch (const NumericalError& err) {
            out.range_angle = std::numeric_limits<double>::quiet_NaN();
            out.notes += std::string("; range check skipped: ") + err.what();
        }
        return out;
    }
    out.notes = ps.notes + "; probes filtered by E_H0(I)";
    return out;
}

void write_cauchy_csv(std::ostream& os, const WaveOperatorResult& w) {
    os << "T,defect\n";
    os.precision(17);
    for (std::size_t k = 0; k < w.cauchy_defects.size(); ++k) os << w.horizons[k + 1] << ',' << w.cauchy_defects[k] << '\n';
}

}  // namespace dscat
