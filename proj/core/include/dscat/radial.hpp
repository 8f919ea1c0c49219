#pragma once

#include <vector>

#include "dscat/models.hpp"

namespace dscat {

// Solutions of  -φ'' + (V - iW) φ = z² φ  on [0, R].
struct RegularSolution {
    cplx phi_R, dphi_R;
    std::vector<cplx> phi_samples;  // φ at the requested radii
    int steps = 0;
};

// φ(0) = 0, φ'(0) = 1. `samples` must be ascending inside [0, R].
RegularSolution regular_solution(const RadialSystem& sys, cplx z, const std::vector<double>& samples,
                                 double rtol, double atol);

// Outgoing solution, f(r) = e^{izr} for r >= R, continued inward; values at `samples`.
std::vector<cplx> outgoing_solution(const RadialSystem& sys, cplx z, const std::vector<double>& samples,
                                    double rtol, double atol);

// Momentum on the physical sheet for ζ = λ - iε: Im z > 0, so z ≈ -√λ + iε/(2√λ)
// for λ > 0 and small ε (the boundary value from below the positive axis).
cplx momentum_from_energy(cplx zeta);

}  // namespace dscat
