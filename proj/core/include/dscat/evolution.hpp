#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/spectra.hpp"

namespace dscat {

enum class PropagationMethod { eig_diagonalization, scaled_squaring };
std::string to_string(PropagationMethod m);

struct PropagationPlan {
    PropagationMethod method = PropagationMethod::eig_diagonalization;
    double horizon = -1.0;  // <= 0: chosen from the spectrum
    double dt = -1.0;       // <= 0: horizon / 2000
    double accuracy_target = 1e-10;
};

// e^{-itH} for a fixed system. Diagonalizes once (cond(V) < 1e6), otherwise
// falls back to scaling-and-squaring per call. Immutable after construction,
// safe to share across threads.
class Propagator {
public:
    explicit Propagator(const DissipativeSystem& system, double accuracy_target = 1e-10);

    Vec apply(const Vec& u, double t) const;
    Mat apply(const Mat& u, double t) const;
    // e^{-itH} as a dense matrix.
    Mat matrix(double t) const;

    PropagationMethod method() const { return method_; }
    const SpectralData& spectral() const { return sd_; }
    // estimated relative error of apply() at time t
    double error_bound(double t) const;
    // smallest decay rate -Im λ among modes with -Im λ > tol (0 when none)
    double min_decay_rate(double tol = 1e-12) const;

private:
    Mat h_;
    SpectralData sd_;
    PropagationMethod method_;
    double accuracy_;
    double hnorm_;
    double cstar_c_norm_;
};

Vec propagate(const DissipativeSystem& system, const Vec& u, double t);

struct DecayEstimate {
    double p_abs = 0.0;
    double tail_rate = 0.0;       // γ of the fit a + b e^{-γt} on ‖u_t‖
    double tail_amplitude = 0.0;  // b
    double plateau = 0.0;         // ‖u_T‖ at the horizon
    double limit_norm = 0.0;      // fitted a
    double horizon_used = 0.0;
    bool converged = false;
};

DecayEstimate absorption_probability(const DissipativeSystem& system, const Vec& u, const PropagationPlan& plan = {});
DecayEstimate absorption_probability(const Propagator& prop, const DissipativeSystem& system, const Vec& u,
                                     const PropagationPlan& plan = {});

struct SmoothingResult {
    double value = 0.0;       // quadrature + tail estimate
    double quadrature = 0.0;  // ∫₀^T ‖Ce^{-itH}u‖² dt
    double quad_error = 0.0;
    double tail_estimate = 0.0;
    double lower = 0.0, upper = 0.0;  // certified interval from the energy identity
    double horizon = 0.0;
    bool exponential_tail = true;
};

// ∫₀^∞ ‖C e^{-itH} u‖² dt. horizon <= 0 picks 50/γ_min clamped to [200, 5000].
SmoothingResult smoothing_integral(const DissipativeSystem& system, const Vec& u, double horizon = -1.0);

struct MConstant {
    double c_u = 0.0;
    double c_u_half = 0.0;  // same quantity at T/2
    double tail_estimate = 0.0;
    double horizon = 0.0;
    bool bounded = true;  // false: grows with T, u is flagged "not in M(H)"
    std::string flag;
};

// Largest eigenvalue of K = ∫₀^T Φ(t)Φ(t)* dt, Φ(t) = e^{-itH}u.
MConstant m_constant(const DissipativeSystem& system, const Vec& u, double horizon = -1.0);

struct SMembership {
    bool member = false;
    double statistic = 0.0;          // ∫₀^T ‖Ce^{itH}u‖² dt
    double relative_increase = 0.0;  // over the final tenth of the horizon
    double growth_rate = 0.0;        // log-slope of the integrand at the end
    double horizon = 0.0;
};

SMembership s_membership(const DissipativeSystem& system, const Vec& u, double horizon, double threshold = 1e-3);
SMembership s_membership(const Propagator& prop, const DissipativeSystem& system, const Vec& u, double horizon,
                         double threshold = 1e-3);

struct BackwardBounds {
    double m1_hat = 0.0;
    double m2_hat = 0.0;
    double removed_norm = 0.0;  // ‖u − P u‖ removed by the projection onto H_p(H*)^⊥
    double horizon = 0.0;
};

// u is first projected orthogonally onto H_p(H*)^⊥ (basis_Hp_star is orthonormal).
BackwardBounds backward_bounds(const DissipativeSystem& system, const Vec& u, double horizon,
                               const Mat& basis_Hp_star, int samples = 801);
BackwardBounds backward_bounds(const Propagator& prop, const Vec& u, double horizon, const Mat& basis_Hp_star,
                               int samples = 801);

struct DissipativeSpace {
    Mat basis;      // orthonormal, terminal norm <= tol
    Mat ambiguous;  // terminal norm in (tol, 10 tol)
    RVec terminal_norms;
    double max_angle = 0.0;  // sine of the largest principal angle to basis_Hp
    bool match = false;
    std::string verdict;
    double horizon = 0.0;
};

DissipativeSpace dissipative_space(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                   double horizon = -1.0, double tol = 1e-8, double angle_tol = 1e-6);

struct DecayCurve {
    std::vector<double> t, norm, c_integrand;
};

DecayCurve decay_curve(const Propagator& prop, const DissipativeSystem& system, const Vec& u, double horizon,
                       int samples);
void write_decay_csv(std::ostream& os, const DecayCurve& curve);

}  // namespace dscat
