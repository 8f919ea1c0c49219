#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/spectra.hpp"

namespace dscat {

struct CompletenessVerdict;

// L(ρ) = Hρ − ρH* + iΣ_j W_j ρ W_j*,  H = H_V − (i/2)ΣW_j*W_j; the semigroup is e^{−itL}.
// Column-stacking: vec(AXB) = (Bᵀ ⊗ A) vec(X), so
//   L = Id ⊗ H − H̄ ⊗ Id + iΣ W̄_j ⊗ W_j.
struct LindbladSuperoperator {
    int dimension = 0;
    Mat generator;  // d² × d²; assembled only for d <= kMaxAssembledDim
    std::vector<Mat> jump_ops;
    Mat h_v;
    Mat effective_h;
    double trace_defect = 0.0;         // ‖tr∘L‖
    double consistency_defect = -1.0;  // ‖H − system.h()‖ / max(1, ‖H‖) when built from a system
    std::string notes;

    static constexpr int kMaxAssembledDim = 64;

    Mat apply(const Mat& rho) const;  // L(ρ), matrix-free
};

// errors: non-square or mismatched dimensions → ValidationError.
LindbladSuperoperator build_lindbladian(const Mat& h_v, const std::vector<Mat>& jump_ops);
// Uses system.hv(); records ‖H − system.h()‖ (zero when ½ΣW*W = C*C).
LindbladSuperoperator build_lindbladian(const DissipativeSystem& system, const std::vector<Mat>& jump_ops);

struct DensityMatrix {
    Mat rho;
    double trace = 0.0;
    double min_eig = 0.0;              // of the Hermitian part
    double hermiticity_defect = 0.0;   // ‖ρ − ρ*‖
};

DensityMatrix density_diagnostics(const Mat& rho);

// e^{−itL}X for any X (Taylor series with scaling, matrix-free).
Mat propagate_superoperator(const LindbladSuperoperator& L, const Mat& x, double t, double accuracy = 1e-13);

// errors: t < 0 or ρ not a state → ValidationError; trace drift > 1e-9 or
// min_eig < −1e-8 after evolution → NumericalError.
DensityMatrix evolve_density(const LindbladSuperoperator& L, const Mat& rho, double t, double accuracy = 1e-13);

// Smallest eigenvalue of the Choi matrix Σ E_ij ⊗ e^{−itL}(E_ij) (complete positivity).
double choi_min_eigenvalue(const LindbladSuperoperator& L, double t);

// ---------------------------------------------------------------- lattice capture model

// W_j = √(2w_j)|φ⟩⟨e_j| on the absorbing sites, so ½ΣW_j*W_j = C*C and H is the
// model's H. The absorbed flux is re-deposited in the target φ; with φ a decaying
// eigenvector of H the captured weight never leaves span{φ} ⊂ H_p.
struct CaptureModel {
    Vec target;  // unit vector
    cplx target_eigenvalue{0.0};  // when the target is an eigenvector (NaN otherwise)
    std::string notes;
};

// Target = normalized decaying eigenvector with the largest decay rate.
// errors: no decaying mode → ValidationError.
CaptureModel capture_model(const DissipativeSystem& system, const SubspaceDecomposition& dec);
CaptureModel capture_model(const Vec& target);
// Dense jump operators (small d only).
std::vector<Mat> capture_jumps(const DissipativeSystem& system, const CaptureModel& model);

// Ω̃₊(T) = e^{iTL₀}(Π_pp^⊥ e^{−iTL}(·) Π_pp^⊥) for a lattice model with the capture jumps.
// Images are returned as factors G with Ω̃(T)(FF*) = GG*.
class ModifiedWaveOperator {
public:
    // errors: matrix model (Π_pp^⊥ = 0) → ValidationError.
    ModifiedWaveOperator(const DissipativeSystem& system, const SubspaceDecomposition& dec, const CaptureModel& model,
                         double horizon, double dt = 0.02);
    Mat image_factor(const Mat& factor) const;
    Mat apply(const Mat& rho) const;
    double horizon() const;
    // ∫₀^T r(s) ds for ρ = FF*: total flux into the target (jump rate r = 2 tr(C*Cρ_s))
    double captured_flux(const Mat& factor) const;

    struct Engine;

private:
    std::shared_ptr<const Engine> engine_;
    double horizon_;
};

struct ModifiedWaveOptions {
    std::vector<double> horizons;  // increasing; empty → t_max · {1/8, 1/4, 1/2, 1}
    double dt = 0.02;              // Volterra grid for the jump rate
    double converged_tol = 1e-3;   // trace-norm Cauchy defect at the last step
    bool require_convergence = true;
    const CompletenessVerdict* verdict = nullptr;  // W₋(H,H₀) verdict; must be "complete" when given
};

struct ModifiedWaveResult {
    std::vector<double> horizons;
    RMat traces;                        // tr Ω̃(T_k)ρ_p: probes × horizons
    std::vector<double> cauchy_defects;  // max over probes of ‖Ω̃(T_k)ρ_p − Ω̃(T_{k−1})ρ_p‖₁
    std::vector<double> escape;          // clamped to [0, 1], largest horizon
    std::vector<double> escape_raw;
    std::vector<double> absorbed;        // 1 − ‖e^{−iTH}ψ_p‖² at the largest horizon (p_abs cross-check)
    Mat probes;
    bool converged = false;
    std::string notes;
};

// Probe density matrices are |ψ_p⟩⟨ψ_p| for the columns of `probes`.
// errors: matrix model; verdict not complete; non-convergent schedule (when required).
ModifiedWaveResult modified_wave(const DissipativeSystem& system, const SubspaceDecomposition& dec,
                                 const CaptureModel& model, const Mat& probes, double t_max,
                                 const ModifiedWaveOptions& opt = {});

// tr Ω̃₊ρ clamped to [0, 1]; the unclamped value in *raw. Affine in ρ.
double escape_probability(const ModifiedWaveOperator& omega, const Mat& rho, double* raw = nullptr);

// Direct oracle: RK4 on the full density matrix with the capture jumps, returns ρ_T.
Mat evolve_capture_density(const DissipativeSystem& system, const CaptureModel& model, const Mat& rho, double T,
                           double dt = 0.02);

// Trace norm of FF* − GG*.
double factor_trace_distance(const Mat& f, const Mat& g);

void write_escape_csv(std::ostream& os, const ModifiedWaveResult& r);

}  // namespace dscat
