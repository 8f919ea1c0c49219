#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/spectra.hpp"

namespace dscat {

using Interval = std::pair<double, double>;

struct EpsTracePoint {
    double eps = 0.0;
    double max_change = 0.0;  // entrywise max |E(ε) − E(previous ε)|
    double norm = 0.0;        // ‖E(ε)‖
};

struct IntervalProjection {
    Interval interval{0.0, 0.0};
    Mat matrix;
    std::vector<EpsTracePoint> eps_trace;  // finite-ε values on the reporting schedule
    double adjoint_defect = 0.0;           // ‖E* − E_{H*}(I)‖ (when requested)
    double idempotency_defect = 0.0;
    double commutation_defect = 0.0;  // ‖EH − HE‖/‖H‖
    int unresolved_modes = 0;         // modes whose ε-extrapolation was not Cauchy
    std::string method;
    std::string notes;
};

struct StoneOptions {
    // reporting schedule for the ε-trace (and the global schedule of the dense fallback)
    std::vector<double> eps_schedule{0.2, 0.1, 0.05, 0.025, 0.0125};
    double continuum_cut = -1.0;  // lattice models: < 0 automatic, see auto_continuum_cut
    double cauchy_tol = 1e-8;     // per-mode agreement of the last two extrapolants
    bool compute_adjoint = false;
    std::vector<std::pair<double, int>> singularities;  // (λ_j, ν_j); E_H(I) refuses intervals containing one
};

// E_H(I) = wlim (1/2πi)∫_I [(H − (λ+iε))^{-1} − (H − (λ−iε))^{-1}] dλ.
IntervalProjection spectral_projection(const DissipativeSystem& system, Interval interval,
                                       const StoneOptions& opt = {});

// Same limit with an analytic weight w(λ) in the integrand (continued to complex λ).
// Used for e^{itH}E_H(I) (w = e^{itλ}) and the regularized projection.
Mat weighted_spectral_projection(const DissipativeSystem& system, Interval interval,
                                 const std::function<cplx(cplx)>& weight, const StoneOptions& opt = {},
                                 int* unresolved = nullptr);

// e^{itH}E_H(I) from the phase-weighted integral.
Mat phase_weighted_projection(const DissipativeSystem& system, Interval interval, double t,
                              const StoneOptions& opt = {});

// ‖E(I₁)E(I₂) − E(I₁ ∩ I₂)‖ with E(∅) = 0; the intersection is built independently.
double projection_product_defect(const DissipativeSystem& system, const IntervalProjection& e1,
                                 const IntervalProjection& e2, const StoneOptions& opt = {});

struct RegularizedProjection {
    Interval interval{0.0, 0.0};
    std::vector<std::pair<double, int>> singularities;
    std::vector<cplx> mu;  // (λ_j − i)^{-1}
    Mat matrix;
    std::vector<EpsTracePoint> eps_trace;
    int unresolved_modes = 0;
};

// (λ − i)^{-4} ∏ ((λ − i)^{-1} − μ_j)^{ν_j}
cplx regularizing_factor(cplx lambda, const std::vector<std::pair<double, int>>& singularities);

RegularizedProjection regularized_projection(const DissipativeSystem& system, Interval interval,
                                             const std::vector<std::pair<double, int>>& singularities,
                                             const StoneOptions& opt = {});

// Moves each finite endpoint of I to the middle of the gap between the real parts of
// neighbouring eigenvalues, so that no mode sits on an endpoint.
Interval snap_interval(const SpectralData& sd, Interval interval);

struct DecompositionResidual {
    double residual = 0.0;
    double tail = 0.0;  // ‖E_H([Λ_max, ∞))‖ estimate
    double lower = 0.0, upper = 0.0;
    bool skipped = false;  // a real eigenvalue lies in [0, ∞)
    double lambda_max = 0.0;
    std::string notes;
};

// ‖Id − Π_pp − Σ_k E_H(I_k)‖ for a partition of [0, Λ_max] (breakpoints, first 0).
// With singularities, the regularized form ‖R⁴∏(R−μ_j)^{ν_j}(Id − Π_pp) − Ẽ_H([0,Λ_max])‖.
DecompositionResidual decomposition_residual(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                             const std::vector<double>& partition,
                                             const std::vector<std::pair<double, int>>& singularities = {},
                                             const StoneOptions& opt = {});

struct ContourResult {
    Mat total;                 // ∮_{Γ_ε} μ⁴∏(μ−μ_j)^{ν_j}(R − μ)^{-1} dμ, R = (H − i)^{-1}
    Mat normalized;            // −total/(2πi), comparable to Ẽ_H([0, ∞))
    std::vector<Mat> pieces;   // Γ₁..Γ₄ in that order
    std::vector<double> piece_norms;
    double e0 = 0.0;
    double eps = 0.0;
    std::string method;
};

// e0: minus the largest real eigenvalue of H (default 1 when H has none).
ContourResult contour_gamma_integral(const DissipativeSystem& system, double eps,
                                     const std::vector<std::pair<double, int>>& singularities = {},
                                     double e0 = -1.0);

void write_eps_trace_csv(std::ostream& os, const std::vector<EpsTracePoint>& trace, double extrapolated_norm);

}  // namespace dscat
