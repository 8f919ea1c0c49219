#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/projections.hpp"
#include "dscat/resolvent.hpp"
#include "dscat/spectra.hpp"

namespace dscat {

// minus: W₋(H,H₀) = lim e^{-itH}e^{itH₀}        plus_adjoint: W₊(H*,H₀) = lim e^{itH*}e^{-itH₀}
// plus:  W₊(H₀,H) = lim e^{itH₀}e^{-itH}Π_b^⊥   minus_adjoint: W₋(H₀,H*) = lim e^{-itH₀}e^{itH*}Π_b^⊥
enum class WaveDirection { minus, plus_adjoint, plus, minus_adjoint };
enum class WaveMethod { finite_time, cook_integral };
std::string to_string(WaveDirection d);
std::string to_string(WaveMethod m);

// Where lattice packets sit at time 0 relative to the interaction region:
// outgoing (already past it), incoming (heading into it), centered (on it).
enum class ProbePlacement { outgoing, incoming, centered };

struct ProbeOptions {
    int momenta = 8;                 // per direction of motion
    double theta_min = PI / 3.0;      // lattice momenta θ (site units), band [0, π]
    double theta_max = 2.0 * PI / 3.0;
    double sigma = 6.0;              // position width in sites, |ψ|² ∝ exp(−x²/2σ²)
    double margin = 6.5;             // clearance from walls and interaction, in σ
    bool mirrored = true;            // add left-moving mirror images
    std::optional<std::pair<double, double>> energy_window;  // restrict momenta to E(θ) in this window
};

struct ProbeSet {
    Mat states;  // orthonormal columns (Gram–Schmidt of the packets)
    std::vector<double> theta, center;  // per packet (θ < 0 moves left)
    ProbePlacement placement = ProbePlacement::outgoing;
    double t_max = 0.0;  // reflection horizon (infinity for matrix models)
    std::string notes;
};

ProbeSet make_probes(const DissipativeSystem& system, ProbePlacement placement, const ProbeOptions& opt = {});
ProbePlacement placement_for(WaveDirection d);

struct WaveOptions {
    ProbeOptions probes;
    int doublings = 3;            // horizons T/2^k, k = doublings..0
    double converged_tol = 1e-4;  // last Cauchy defect
    const SubspaceDecomposition* decomposition = nullptr;  // for Π_b^⊥; computed when null
};

struct WaveOperatorResult {
    Mat matrix;  // W(T) applied to the probe states (n × m)
    Mat probes;
    WaveDirection direction = WaveDirection::minus;
    WaveMethod method = WaveMethod::finite_time;
    std::vector<double> horizons;
    std::vector<double> cauchy_defects;
    double t_max = 0.0;
    double norm = 0.0;  // ‖W(T) P‖
    bool converged = false;
    double reference_defect = -1.0;  // Cook: ‖W_cook − W_finite‖ on the probes
    double range_angle = -1.0;       // local wave: sine of the angle to Ran E_H(I)
    double sigma_min = -1.0;         // local wave: smallest singular value on the probes
    std::string notes;
};

// errors: T above the reflection horizon → ValidationError naming the safe T_max.
WaveOperatorResult finite_time_wave(const DissipativeSystem& system, double T, WaveDirection direction,
                                    const WaveOptions& opt = {});
WaveOperatorResult finite_time_wave(const DissipativeSystem& system, double T, WaveDirection direction,
                                    const ProbeSet& probes, const WaveOptions& opt = {});

// W(T) on arbitrary states (no probe construction, no reflection check beyond t_max).
WaveOperatorResult finite_time_wave_on(const DissipativeSystem& system, double T, WaveDirection direction,
                                       const Mat& states, double t_max, const WaveOptions& opt = {});

// W₋(H,H₀) = W₋(H,H_V)·W₋(H_V,H₀): the first factor from the Cook integral
// u − ∫₀^T e^{-isH}C*C e^{isH_V}u ds, the second finite-time.
// errors: integrand not decaying at T (probe in H_pp(H_V), or horizon too short).
WaveOperatorResult cook_wave(const DissipativeSystem& system, double horizon, const WaveOptions& opt = {});
WaveOperatorResult cook_wave(const DissipativeSystem& system, double horizon, const ProbeSet& probes,
                             const WaveOptions& opt = {});

// ‖W₋(H,H₀;T)P − W₋(H,H_V;T/2)W₋(H_V,H₀;T)P‖
double chain_rule_defect(const DissipativeSystem& system, double T, const ProbeSet& probes);
// max over t of ‖e^{-itH}W(T)P − W(T)e^{-itH₀}P‖ / ‖W(T)P‖
double intertwining_defect(const DissipativeSystem& system, double T, const ProbeSet& probes,
                           const std::vector<double>& times = {0.5, 1.0, 2.0});
// ‖W₊(H₀,H)u‖ = lim ‖e^{-iTH}Π_b^⊥u‖ for u in basis_Hb ∪ basis_Hp (largest value)
struct KernelLaw {
    double max_norm_hb = 0.0, max_norm_hp = 0.0;
    double horizon = 0.0;
};
KernelLaw kernel_law(const DissipativeSystem& system, const SubspaceDecomposition& dec, double horizon = -1.0);

struct ScatteringResult {
    Mat s;  // S(T)P on centered probes (n × m)
    RVec singular_values;
    double adjoint_defect = -1.0;  // ‖(P*S(H,H₀)P)* − P*S(H*,H₀)P‖
    double horizon = 0.0;
    Mat probes;
};
ScatteringResult scattering_operator(const DissipativeSystem& system, double T, const WaveOptions& opt = {});
// w_plus must have been evaluated on the images of w_minus (finite_time_wave_on with
// states = w_minus.matrix); errors: incompatible bases → ValidationError.
ScatteringResult scattering_operator(const WaveOperatorResult& w_plus, const WaveOperatorResult& w_minus);

struct VerdictOptions {
    double sigma_min = 1e-3;
    double angle = 1e-2;
    double exponent = 0.5;
    std::vector<double> eps_schedule{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
};

struct DivergenceWitness {
    double exponent = 0.0;
    std::vector<double> eps;
    std::vector<double> integrals;  // ∫_J ‖C(H−(λ−iε))^{-1}C*u‖² dλ
    Vec u;                          // maximizer at the smallest ε (C-support coordinates)
    Vec witness;                    // v = (Id − Π_pp)C*u on the lattice
    std::pair<double, double> window{0.0, 0.0};
    std::string notes;
};

// Fit ∫_J ‖…‖² dλ ~ ε^{-p} over the last decade of eps_schedule.
// errors: p < 0.25 → NumericalError "no divergence detected".
DivergenceWitness divergence_witness(const DissipativeSystem& system, std::pair<double, double> J,
                                     const std::vector<double>& eps_schedule,
                                     const SubspaceDecomposition* dec = nullptr);
// Radial models: the integrand uses the Nyström sandwiched resolvent; the witness is
// transferred to `lattice` (a radial_to_lattice discretization) when given.
DivergenceWitness divergence_witness(const RadialSystem& radial, std::pair<double, double> J,
                                     const std::vector<double>& eps_schedule,
                                     const DissipativeSystem* lattice = nullptr,
                                     const SubspaceDecomposition* dec = nullptr);
// Same fit for a scalar integrand f(λ, ε) (calibration against closed-form poles).
double divergence_exponent(const std::function<double(double, double)>& integrand, std::pair<double, double> J,
                           const std::vector<double>& eps_schedule, std::vector<double>* integrals = nullptr);

struct CompletenessVerdict {
    std::string verdict;  // complete | incomplete | inconclusive
    double sigma_min_restricted = 0.0;
    RVec principal_angles;  // sines, largest first: probe images against (H_b ⊕ H_p(H*))^⊥
    std::optional<DivergenceWitness> witness;
    std::string notes;
};

CompletenessVerdict completeness_verdict(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                         const WaveOperatorResult* w_minus, const SingularityScan& scan,
                                         const VerdictOptions& opt = {}, const RadialSystem* radial = nullptr);

// W₋(H,H₀,I) on probes filtered by E_{H₀}(I), checked against Ran E_H(I).
WaveOperatorResult local_wave(const DissipativeSystem& system, Interval I, double T, const WaveOptions& opt = {});

void write_cauchy_csv(std::ostream& os, const WaveOperatorResult& w);

}  // namespace dscat
