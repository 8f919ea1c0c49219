#include "dscat/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "dscat/linalg.hpp"
#include "dscat/quadrature.hpp"

namespace dscat {

namespace {

constexpr double kEps = 2.220446049250313e-16;

double clamp_horizon(double gamma_min) {
    if (!(gamma_min > 0.0)) return 200.0;
    return std::clamp(50.0 / gamma_min, 200.0, 5000.0);
}

// initial panels for oscillatory integrands on [0, T]
std::vector<double> panel_breaks(double a, double b, double hnorm) {
    const double len = 8.0 * PI / std::max(1.0, hnorm);
    const int count = std::max(1, static_cast<int>(std::ceil((b - a) / len)));
    std::vector<double> br(count + 1);
    for (int i = 0; i <= count; ++i) br[i] = a + (b - a) * i / count;
    return br;
}

}  // namespace

std::string to_string(PropagationMethod m) {
    return m == PropagationMethod::eig_diagonalization ? "eig-diagonalization" : "scaled-squaring";
}

Propagator::Propagator(const DissipativeSystem& system, double accuracy_target)
    : h_(system.h()),
      method_(PropagationMethod::scaled_squaring),
      accuracy_(accuracy_target),
      hnorm_(system.h_norm()) {
    if (!(accuracy_target >= 1e-12)) throw ValidationError("Propagator: accuracy target must be >= 1e-12");
    cstar_c_norm_ = system.c_norm() * system.c_norm();
    try {
        sd_ = eigendecompose_matrix(h_, hnorm_);
        if (sd_.diagonalizable(1e6)) method_ = PropagationMethod::eig_diagonalization;
    } catch (const NumericalError&) {
        method_ = PropagationMethod::scaled_squaring;
    }
}

double Propagator::min_decay_rate(double tol) const {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < sd_.eigenvalues.size(); ++k) {
        const double b = -sd_.eigenvalues(k).imag();
        if (b > tol) g = std::min(g, b);
    }
    return std::isfinite(g) ? g : 0.0;
}

double Propagator::error_bound(double t) const {
    const double growth = t >= 0.0 ? 1.0 : std::exp(cstar_c_norm_ * std::abs(t));
    if (method_ == PropagationMethod::eig_diagonalization)
        return kEps * sd_.vector_condition * growth;
    return kEps * std::max(1.0, std::abs(t) * hnorm_) * growth;
}

Mat Propagator::matrix(double t) const {
    const Eigen::Index n = h_.rows();
    if (t == 0.0) return Mat::Identity(n, n);
    return apply(Mat(Mat::Identity(n, n)), t);
}

Mat Propagator::apply(const Mat& u, double t) const {
    if (!std::isfinite(t)) throw ValidationError("propagate: time must be finite");
    if (t == 0.0) return u;
    const double growth = t >= 0.0 ? 1.0 : std::exp(cstar_c_norm_ * std::abs(t));
    const double target = accuracy_ * growth;
    if (method_ == PropagationMethod::eig_diagonalization && error_bound(t) <= target) {
        Mat coef = sd_.left_rows * u;
        for (Eigen::Index k = 0; k < coef.rows(); ++k) coef.row(k) *= std::exp(-I * t * sd_.eigenvalues(k));
        return sd_.right_vectors * coef;
    }
    const double bound = kEps * std::max(1.0, std::abs(t) * hnorm_) * growth;
    if (bound > target) {
        std::ostringstream os;
        os << "propagate: accuracy target " << accuracy_ << " unreachable at t=" << t << " (achieved bound " << bound
           << ")";
        throw NumericalError(os.str());
    }
    const Mat gen = (-I * t) * h_;
    return gen.exp() * u;
}

Vec Propagator::apply(const Vec& u, double t) const { return apply(Mat(u), t).col(0); }

Vec propagate(const DissipativeSystem& system, const Vec& u, double t) {
    if (u.size() != system.dim()) throw ValidationError("propagate: state has wrong dimension");
    if (t == 0.0) return u;
    return Propagator(system).apply(u, t);
}

// ------------------------------------------------------------------ absorption

namespace {

struct TailFit {
    double a = 0.0, b = 0.0, gamma = 0.0;
};

// a + b e^{-γt} through three equally spaced samples (Aitken); falls back to the
// last sample when the differences are not geometric.
TailFit three_point_fit(double t1, double y1, double y2, double y3, double step) {
    TailFit f;
    const double d1 = y1 - y2, d2 = y2 - y3;
    if (!(d1 > 0.0) || !(d2 > 0.0) || d2 >= d1) {
        f.a = y3;
        return f;
    }
    const double r = d2 / d1;
    f.gamma = -std::log(r) / step;
    f.a = std::clamp(y3 - d2 * r / (1.0 - r), 0.0, y3);
    f.b = (y1 - f.a) * std::exp(f.gamma * t1);
    if (!std::isfinite(f.b)) f.b = 0.0;
    return f;
}

}  // namespace

DecayEstimate absorption_probability(const Propagator& prop, const DissipativeSystem& system, const Vec& u,
                                     const PropagationPlan& plan) {
    if (u.size() != system.dim()) throw ValidationError("absorption_probability: state has wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-10) throw ValidationError("absorption_probability: state must be normalized");
    double T = plan.horizon > 0.0 ? plan.horizon : clamp_horizon(prop.min_decay_rate(1e-8 * system.h_norm()));
    if (plan.dt > 0.0 && plan.dt > T) throw ValidationError("absorption_probability: dt exceeds the horizon");

    auto fit_at = [&](double horizon) {
        const double step = horizon / 6.0;
        const double t1 = horizon - 2.0 * step;
        const double y1 = prop.apply(u, t1).norm();
        const double y2 = prop.apply(u, t1 + step).norm();
        const double y3 = prop.apply(u, horizon).norm();
        TailFit f = three_point_fit(t1, y1, y2, y3, step);
        return std::make_pair(f, y3);
    };

    DecayEstimate est;
    for (int attempt = 0; attempt < 4; ++attempt, T *= 2.0) {
        auto [f, plateau] = fit_at(T);
        auto [f_prev, plateau_prev] = fit_at(0.75 * T);
        (void)plateau_prev;
        est.tail_rate = f.gamma;
        est.tail_amplitude = f.b;
        est.limit_norm = f.a;
        est.plateau = plateau;
        est.horizon_used = T;
        est.p_abs = std::clamp(1.0 - f.a, 0.0, 1.0);
        est.converged = std::abs(f.a - f_prev.a) <= 1e-6;
        if (est.converged || plan.horizon > 0.0) break;
    }
    return est;
}

DecayEstimate absorption_probability(const DissipativeSystem& system, const Vec& u, const PropagationPlan& plan) {
    const Propagator prop(system, plan.accuracy_target);
    return absorption_probability(prop, system, u, plan);
}

// ------------------------------------------------------------------ smoothing

SmoothingResult smoothing_integral(const DissipativeSystem& system, const Vec& u, double horizon) {
    if (u.size() != system.dim()) throw ValidationError("smoothing_integral: state has wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-10) throw ValidationError("smoothing_integral: state must be normalized");
    SmoothingResult res;
    if (system.c_norm() == 0.0) {
        res.horizon = std::max(horizon, 0.0);
        return res;
    }
    const Propagator prop(system);
    const double gmin = prop.min_decay_rate(1e-8 * system.h_norm());
    const double T = horizon > 0.0 ? horizon : clamp_horizon(gmin);
    res.horizon = T;
    const Mat& c = system.c();

    double quad = 0.0, qerr = 0.0;
    if (prop.method() == PropagationMethod::eig_diagonalization) {
        const SpectralData& sd = prop.spectral();
        const Mat cv = c * sd.right_vectors;
        const Vec a = sd.left_rows * u;
        auto g = [&](double t) {
            Vec z = a;
            for (Eigen::Index k = 0; k < z.size(); ++k) z(k) *= std::exp(-I * t * sd.eigenvalues(k));
            return (cv * z).squaredNorm();
        };
        const auto br = panel_breaks(0.0, T, system.h_norm());
        QuadOptions opt;
        opt.abs_tol = 1e-13;
        opt.max_intervals = 20000 + 4 * static_cast<int>(br.size());
        const auto r = integrate_adaptive(g, br, opt);
        quad = r.value;
        qerr = r.error;
    } else {
        // uniform Gauss panels, stepping the state with one matrix exponential per offset
        const auto& gl = gauss_legendre(20);
        const double len = std::min(1.0, 2.0 / std::max(1.0, system.h_norm()));
        const int panels = static_cast<int>(std::ceil(T / len));
        const double h = T / panels;
        std::vector<Mat> offs;
        for (double x : gl.x) offs.push_back(prop.matrix(0.5 * h * (x + 1.0)));
        const Mat step = prop.matrix(h);
        Vec state = u;
        for (int p = 0; p < panels; ++p) {
            for (std::size_t i = 0; i < gl.x.size(); ++i) quad += 0.5 * h * gl.w[i] * (c * (offs[i] * state)).squaredNorm();
            state = step * state;
        }
        qerr = 1e-12 * quad;
    }
    const Vec uT = prop.apply(u, T);
    const double tail_cert = 0.5 * uT.squaredNorm();
    const double gT = (c * uT).squaredNorm();
    double tail = tail_cert;
    res.exponential_tail = false;
    if (gmin > 0.0) {
        tail = std::min(gT / (2.0 * gmin), tail_cert);
        res.exponential_tail = tail_cert <= 1e-6;
    }
    res.quadrature = quad;
    res.quad_error = qerr;
    res.tail_estimate = tail;
    res.value = quad + tail;
    res.lower = quad - qerr;
    res.upper = quad + qerr + tail_cert;
    return res;
}

// ------------------------------------------------------------------ M(H)

namespace {

// ∫₀^T e^{-iμt} dt, stable for small μT
cplx exp_integral(cplx mu, double T) {
    const cplx x = mu * T;
    if (std::abs(x) < 1e-4) return T * (1.0 - I * x / 2.0 - x * x / 6.0);
    return (1.0 - std::exp(-I * x)) / (I * mu);
}

Mat gram_integral(const Propagator& prop, const Vec& u, double T) {
    const Eigen::Index n = u.size();
    if (prop.method() == PropagationMethod::eig_diagonalization) {
        const SpectralData& sd = prop.spectral();
        const Vec a = sd.left_rows * u;
        Mat m(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                m(j, k) = a(j) * std::conj(a(k)) * exp_integral(sd.eigenvalues(j) - std::conj(sd.eigenvalues(k)), T);
        return hermitian_part(sd.right_vectors * m * sd.right_vectors.adjoint());
    }
    const auto& gl = gauss_legendre(20);
    const int panels = std::max(1, static_cast<int>(std::ceil(T)));
    const double h = T / panels;
    std::vector<Mat> offs;
    for (double x : gl.x) offs.push_back(prop.matrix(0.5 * h * (x + 1.0)));
    const Mat step = prop.matrix(h);
    Mat k = Mat::Zero(n, n);
    Vec state = u;
    for (int p = 0; p < panels; ++p) {
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const Vec phi = offs[i] * state;
            k += 0.5 * h * gl.w[i] * phi * phi.adjoint();
        }
        state = step * state;
    }
    return hermitian_part(k);
}

}  // namespace

MConstant m_constant(const DissipativeSystem& system, const Vec& u, double horizon) {
    if (u.size() != system.dim()) throw ValidationError("m_constant: state has wrong dimension");
    if (std::abs(u.norm() - 1.0) > 1e-10) throw ValidationError("m_constant: state must be normalized");
    const Propagator prop(system);
    const double gmin = prop.min_decay_rate(1e-8 * system.h_norm());
    const double T = horizon > 0.0 ? horizon : (gmin > 0.0 ? std::max(200.0, 50.0 / gmin) : 200.0);
    MConstant out;
    out.horizon = T;
    out.c_u = hermitian_eigenvalues(gram_integral(prop, u, T)).maxCoeff();
    out.c_u_half = hermitian_eigenvalues(gram_integral(prop, u, 0.5 * T)).maxCoeff();
    const double endnorm = prop.apply(u, T).squaredNorm();
    out.tail_estimate = gmin > 0.0 ? endnorm / (2.0 * gmin) : std::numeric_limits<double>::infinity();
    out.bounded = out.c_u <= 0.0 || (out.c_u - out.c_u_half) <= 1e-3 * out.c_u;
    out.flag = out.bounded ? "finite-horizon lower bound" : "not in M(H): grows with the horizon";
    return out;
}

// ------------------------------------------------------------------ S(H)

SMembership s_membership(const Propagator& prop, const DissipativeSystem& system, const Vec& u, double horizon,
                         double threshold) {
    if (u.size() != system.dim()) throw ValidationError("s_membership: state has wrong dimension");
    if (!(horizon > 0.0)) throw ValidationError("s_membership: horizon must be positive");
    SMembership out;
    out.horizon = horizon;
    if (system.c_norm() == 0.0) {
        out.member = true;
        return out;
    }
    const Mat& c = system.c();
    // e^{itH} amplifies decaying modes by e^{bt}: coefficients at roundoff level
    // (u ⊥ H_p(H*) up to rounding) are dropped so they cannot masquerade as growth
    std::function<Vec(double)> evolve = [&](double t) { return prop.apply(u, -t); };
    Vec coef;
    if (prop.method() == PropagationMethod::eig_diagonalization) {
        const SpectralData& sd = prop.spectral();
        coef = sd.left_rows * u;
        const double floor = 1e-12 * std::max(coef.cwiseAbs().maxCoeff(), u.norm());
        for (Eigen::Index k = 0; k < coef.size(); ++k)
            if (sd.eigenvalues(k).imag() < 0.0 && std::abs(coef(k)) <= floor) coef(k) = 0.0;
        evolve = [&](double t) {
            Vec z = coef;
            for (Eigen::Index k = 0; k < z.size(); ++k) z(k) *= std::exp(I * sd.eigenvalues(k) * t);
            return Vec(sd.right_vectors * z);
        };
    }
    auto g = [&](double t) { return (c * evolve(t)).squaredNorm(); };
    QuadOptions opt;
    opt.abs_tol = 1e-14;
    const auto br = panel_breaks(0.0, 0.9 * horizon, system.h_norm());
    opt.max_intervals = 20000 + 4 * static_cast<int>(br.size());
    const double head = integrate_adaptive(g, br, opt).value;
    const double last = integrate_adaptive(g, panel_breaks(0.9 * horizon, horizon, system.h_norm()), opt).value;
    out.statistic = head + last;
    out.relative_increase = out.statistic > 0.0 ? last / out.statistic : 0.0;
    const double g0 = g(0.9 * horizon), g1 = g(horizon);
    out.growth_rate = (g0 > 0.0 && g1 > 0.0) ? std::log(g1 / g0) / (0.1 * horizon) : 0.0;
    // increments below the quadrature/roundoff resolution count as a plateau
    const double noise_floor = 1e-10 * u.squaredNorm();
    out.member = out.relative_increase < threshold || last <= noise_floor;
    return out;
}

SMembership s_membership(const DissipativeSystem& system, const Vec& u, double horizon, double threshold) {
    const Propagator prop(system);
    return s_membership(prop, system, u, horizon, threshold);
}

// ------------------------------------------------------------------ non-blowup

BackwardBounds backward_bounds(const Propagator& prop, const Vec& u, double horizon, const Mat& basis_Hp_star,
                               int samples) {
    if (samples < 2) throw ValidationError("backward_bounds: need at least two samples");
    Vec p = u;
    if (basis_Hp_star.cols() > 0) p -= basis_Hp_star * (basis_Hp_star.adjoint() * u);
    BackwardBounds out;
    out.removed_norm = (u - p).norm();
    out.horizon = horizon;
    const double pn = p.norm();
    if (pn == 0.0) throw ValidationError("backward_bounds: state lies in H_p(H*)");
    out.m1_hat = std::numeric_limits<double>::infinity();
    out.m2_hat = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = -horizon + 2.0 * horizon * i / (samples - 1);
        const double r = prop.apply(p, t).norm() / pn;
        out.m1_hat = std::min(out.m1_hat, r);
        out.m2_hat = std::max(out.m2_hat, r);
    }
    return out;
}

BackwardBounds backward_bounds(const DissipativeSystem& system, const Vec& u, double horizon, const Mat& basis_Hp_star,
                               int samples) {
    if (u.size() != system.dim()) throw ValidationError("backward_bounds: state has wrong dimension");
    const Propagator prop(system);
    return backward_bounds(prop, u, horizon, basis_Hp_star, samples);
}

// ------------------------------------------------------------------ H_d

DissipativeSpace dissipative_space(const DissipativeSystem& system, const SubspaceDecomposition& dec, double horizon,
                                   double tol, double angle_tol) {
    if (!(tol > 0.0)) throw ValidationError("dissipative_space: tol must be positive");
    DissipativeSpace out;
    double bmin = std::numeric_limits<double>::infinity();
    for (const auto& cl : dec.clusters)
        if (cl.kind == ModeKind::decaying)
            for (int i : cl.indices) bmin = std::min(bmin, -dec.spectral.eigenvalues(i).imag());
    const double T = horizon > 0.0 ? horizon : (std::isfinite(bmin) ? 50.0 / bmin : 200.0);
    out.horizon = T;

    const Propagator prop(system);
    const Mat e = prop.matrix(T);
    Eigen::JacobiSVD<Mat> svd(e, Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();  // descending
    const Eigen::Index n = s.size();
    out.terminal_norms = s;
    std::vector<Eigen::Index> small, amb;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (s(k) <= tol) small.push_back(k);
        else if (s(k) < 10.0 * tol) amb.push_back(k);
    }
    out.basis.resize(n, static_cast<Eigen::Index>(small.size()));
    for (std::size_t j = 0; j < small.size(); ++j) out.basis.col(j) = svd.matrixV().col(small[j]);
    out.ambiguous.resize(n, static_cast<Eigen::Index>(amb.size()));
    for (std::size_t j = 0; j < amb.size(); ++j) out.ambiguous.col(j) = svd.matrixV().col(amb[j]);

    if (out.basis.cols() == 0 && dec.basis_Hp.cols() == 0) out.max_angle = 0.0;
    else out.max_angle = max_principal_angle(out.basis, dec.basis_Hp);
    out.match = amb.empty() && out.max_angle <= angle_tol;
    if (!amb.empty()) out.verdict = "ambiguous";
    else out.verdict = out.match ? "match" : "mismatch";
    return out;
}

// ------------------------------------------------------------------ curves

DecayCurve decay_curve(const Propagator& prop, const DissipativeSystem& system, const Vec& u, double horizon,
                       int samples) {
    if (samples < 2) throw ValidationError("decay_curve: need at least two samples");
    DecayCurve cv;
    const Mat& c = system.c();
    for (int i = 0; i < samples; ++i) {
        const double t = horizon * i / (samples - 1);
        const Vec ut = prop.apply(u, t);
        cv.t.push_back(t);
        cv.norm.push_back(ut.norm());
        cv.c_integrand.push_back((c * ut).squaredNorm());
    }
    return cv;
}

void write_decay_csv(std::ostream& os, const DecayCurve& curve) {
    os << "t,norm,c_integrand\n";
    os.precision(17);
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        os << curve.t[i] << ',' << curve.norm[i] << ',' << curve.c_integrand[i] << '\n';
}

}  // namespace dscat
