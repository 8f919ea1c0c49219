#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dscat/models.hpp"

namespace dscat {

// (H − z)^{-1} u with a residual check; banded for lattice models.
Vec resolvent_apply(const DissipativeSystem& system, cplx z, const Vec& u);
Mat resolvent_apply(const DissipativeSystem& system, cplx z, const Mat& u);

struct SandwichedResolvent {
    // C(H − (λ − iε))^{-1}C*. Lattice models: the block on sites
    // [offset, offset + rows) where C is supported (zero elsewhere).
    // Radial models: the Nyström matrix on the quadrature nodes.
    Mat op;
    Eigen::Index offset = 0;
    double norm = 0.0;
    bool pole = false;  // Wronskian vanished: norm is only a lower bound
};

SandwichedResolvent sandwiched_resolvent(const DissipativeSystem& system, double lambda, double eps);
SandwichedResolvent sandwiched_resolvent(const RadialSystem& radial, double lambda, double eps);

// Norm only (cheaper for scans).
double sandwiched_norm(const DissipativeSystem& system, double lambda, double eps);
double sandwiched_norm(const RadialSystem& radial, double lambda, double eps);

struct Singularity {
    double lambda = 0.0;
    int nu = 0;              // 0 when unresolved
    double r_squared = 0.0;  // log-log fit quality of the peak growth
    double slope = 0.0;      // growth exponent of the peak in 1/ε
    std::string status;      // "singular" or "unresolved order"
};

struct RegularPeak {
    double lambda = 0.0;
    double slope = 0.0;
};

struct SingularityScan {
    std::vector<double> lambda_grid;
    std::vector<double> eps_schedule;       // strictly decreasing
    std::vector<std::vector<double>> norms;  // norms[e][k] at (lambda_grid[k], eps_schedule[e])
    std::vector<Singularity> singularities;
    std::vector<RegularPeak> regular_peaks;
    double sup_bound_tail = 0.0;  // max over the top fifth of the grid and all ε
    double grid_step = 0.0;
};

struct ScanOptions {
    int grid = 200;
    double growth_threshold = 0.5;  // slope of log‖·‖ vs log(1/ε) over the last decade
    double r2_min = 0.98;
    double stabilization = 0.1;     // relative spread of sup|μ−λ_j|^ν‖·‖ over the last two decades
};

using NormFunction = std::function<double(double, double)>;

SingularityScan singularity_scan(const NormFunction& norm, std::pair<double, double> interval,
                                 const std::vector<double>& eps_schedule, const ScanOptions& opt = {});
SingularityScan singularity_scan(const DissipativeSystem& system, std::pair<double, double> interval,
                                 const std::vector<double>& eps_schedule, const ScanOptions& opt = {});
SingularityScan singularity_scan(const RadialSystem& radial, std::pair<double, double> interval,
                                 const std::vector<double>& eps_schedule, const ScanOptions& opt = {});

void write_scan_csv(std::ostream& os, const SingularityScan& scan);

struct KatoEstimate {
    double c_v = 0.0;                     // frequency-domain value at eps_floor
    std::pair<double, double> interval;   // (min, max) of the frequency and time-domain values
    double c_v_time = 0.0;
    double eps_floor = 0.0;
    std::vector<std::pair<double, double>> sequence;  // (ε, c_V) for ε = 8, 4, 2, 1 × eps_floor
    bool converged = false;
    Vec maximizer;  // unit u attaining the sup
};

// c_V² = (1/2π) sup_u ∫_I ‖C R_V(λ+iε)u‖² + ‖C R_V(λ−iε)u‖² dλ over u ⊥ bound states of H_V.
KatoEstimate kato_constant(const DissipativeSystem& system, std::pair<double, double> interval, double eps_floor);

// sup over μ ∈ [m, m + 10‖H‖] (grid of `samples` points) and ε ∈ eps_grid of the sandwiched norm.
double high_energy_bound(const DissipativeSystem& system, double m, const std::vector<double>& eps_grid,
                         int samples = 201);

struct ParsevalResult {
    double lhs = 0.0, rhs = 0.0, rel_err = 0.0;
    double growth_rate = 0.0;
};

ParsevalResult parseval_check(const DissipativeSystem& system, const Vec& u, double eps);

}  // namespace dscat
