#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/resolvent.hpp"

namespace dscat {

// s-wave half-line model: F(z) = φ'(R) − izφ(R) for the regular solution
// φ(0) = 0, φ'(0) = 1. Zeros with Im z > 0 are bound states (z = iκ, energy −κ²),
// zeros with Im z < 0 resonances; a real zero z₀ < 0 is a spectral singularity at z₀².
struct JostEvaluation {
    cplx z{0.0};
    cplx value{0.0};
    cplx phi_R{0.0}, dphi_R{0.0};
    double ode_error_estimate = 0.0;  // |F − F_ref| against a 100× tighter solve
};

JostEvaluation jost_function(const RadialSystem& radial, cplx z);
// Single solve at the model tolerances (no error estimate).
cplx jost_value(const RadialSystem& radial, cplx z);

struct ComplexRect {
    double re_min = -5.0, re_max = 5.0, im_min = -2.0, im_max = 0.1;
};

struct JostZero {
    cplx z{0.0};
    int multiplicity = 1;
    double residual = 0.0;  // |F(z)| / local scale of F
};

struct ResonanceSet {
    std::vector<JostZero> zeros;
    ComplexRect search_region;
    int argument_principle_count = 0;
    int boundary_nudges = 0;
    std::string notes;
};

struct SearchOptions {
    int max_depth = 8;
    double newton_tol = 1e-12;
    int newton_max_iter = 60;
};

// errors: F vanishes on the boundary twice (after one nudge) → NumericalError;
// Newton count differs from the winding count at max depth → NumericalError.
ResonanceSet resonance_search(const RadialSystem& radial, const ComplexRect& region, const SearchOptions& opt = {});
// Winding number of F around the rectangle (argument principle).
int winding_number(const std::function<cplx(cplx)>& f, const ComplexRect& region, double* min_abs = nullptr);

using RadialFamily = std::function<RadialPotential(double)>;

struct TuneOptions {
    int scan_points = 16;
    double im_tol = 1e-8;
    int max_secant = 60;
    double track_window = 0.5;  // max jump of the tracked zero between scan points
    bool dilate_to_target = true;
    RadialGridSpec grid;
};

struct TuneResult {
    double param = 0.0;
    double dilation = 1.0;     // U_s(r) = s²U(sr) applied after the crossing
    cplx zero{0.0};            // tracked zero of the returned potential
    double residual = 0.0;     // |Im zero|
    RadialPotential potential;
    std::vector<std::pair<double, cplx>> track;  // (param, zero) along the scan
};

// errors: no sign change of Im z over the range → ValidationError; zero leaves the
// tracking window or Newton fails → NumericalError.
TuneResult tune_real_resonance(const RadialFamily& family, double target_z0, std::pair<double, double> param_range,
                               const TuneOptions& opt = {});

struct CorrespondenceItem {
    double z0 = 0.0;      // real zero (z₀ < 0), NaN when unmatched
    double lambda = 0.0;  // singularity λ, NaN when unmatched
    double mismatch = 0.0;  // |z₀² − λ|
};

struct CorrespondenceReport {
    std::vector<CorrespondenceItem> matched;
    std::vector<double> unmatched_zeros;          // real zeros z₀ without a singularity at z₀²
    std::vector<double> unmatched_singularities;  // singularities without a real zero
    double grid_step = 0.0;
    double real_tol = 0.0;  // |Im z| treated as real
    bool consistent = true;
    std::string notes;
};

CorrespondenceReport correspondence_report(const ResonanceSet& zeros, const SingularityScan& scan,
                                           double real_tol = 1e-6);

void write_resonance_csv(std::ostream& os, const ResonanceSet& set);

}  // namespace dscat
