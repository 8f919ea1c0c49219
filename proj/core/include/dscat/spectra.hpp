#pragma once

#include <string>
#include <vector>

#include "dscat/models.hpp"

namespace dscat {

struct SpectralData {
    Vec eigenvalues;         // sorted by real part, then imaginary part
    Mat right_vectors;       // unit columns
    Mat left_rows;           // V^{-1}; empty when V is numerically singular
    RVec condition_numbers;  // 1/|w*v| for unit left/right vectors; inf when unavailable
    RVec residuals;          // ‖Hv − λv‖/‖H‖
    double vector_condition = 0.0;  // cond(V)
    double scale = 0.0;             // ‖H‖ used for the relative residuals

    bool diagonalizable(double max_cond = 1e8) const { return left_rows.size() > 0 && vector_condition < max_cond; }
};

SpectralData eigendecompose(const DissipativeSystem& system, int max_dim = 4096);
// Same for an arbitrary square matrix (used for H* and the free operators).
SpectralData eigendecompose_matrix(const Mat& a, double scale = -1.0);

struct Projector {
    Mat matrix;
    std::string label;
    double idempotency_defect = 0.0;
    double commutation_defect = 0.0;  // ‖PH − HP‖
    cplx trace{0.0};
};

Projector make_projector(Mat p, const Mat& h, std::string label);

struct RieszOptions {
    int initial_nodes = 32;
    int max_nodes = 16384;
    double tol = 1e-10;
};

// Contour quadrature of (1/2πi)∮(z − H)^{-1} dz on the circle |z − λ| = radius.
Projector riesz_projection(const DissipativeSystem& system, cplx lambda, double radius, const RieszOptions& opt = {});
Projector riesz_projection(const Mat& h, const SpectralData& sd, cplx lambda, double radius,
                           const RieszOptions& opt = {});

// Half the distance to the nearest other eigenvalue outside the cluster of λ,
// capped at a quarter of the spectral diameter.
double default_riesz_radius(const SpectralData& sd, cplx lambda, double cluster_tol);

// Smallest k with (H − λ)^k Π_λ = 0, ranks judged against 1e-7‖H‖.
int jordan_order(const DissipativeSystem& system, cplx lambda);

enum class ModeKind { real, decaying, continuum };
std::string to_string(ModeKind k);

struct EigenCluster {
    cplx center;
    std::vector<int> indices;  // into SpectralData::eigenvalues
    ModeKind kind = ModeKind::decaying;
};

struct ClassifyOptions {
    double tol_real = -1.0;       // default 1e-8‖H‖
    double cluster_tol = -1.0;    // default 1e-6 max(1, ‖H‖)
    double continuum_cut = -1.0;  // lattice models: < 0 picks the gap automatically, 0 disables
    double gap_ratio = 4.0;       // minimum decay-rate ratio accepted as a box/resonance gap
};

struct SubspaceDecomposition {
    SpectralData spectral;
    std::vector<EigenCluster> clusters;  // real and decaying clusters
    std::vector<int> continuum_indices;  // lattice box modes
    Mat basis_Hb;       // orthonormal
    Mat basis_Hp;       // orthonormal basis of the generalized eigenspaces with Im λ < 0
    Mat basis_Hp_star;  // orthonormal basis of H_p(H*) = Ran(Π_p*)
    Projector pi_b, pi_p, pi_pp, pi_pp_perp;
    Mat pi_perp_orth;  // orthogonal projector onto (H_b ⊕ H_p)^⊥
    double tol_real = 0.0;
    double continuum_cut = 0.0;
    double lemma_c_defect = 0.0;   // max ‖Cu‖ over unit u in H_b
    double lemma_hv_defect = 0.0;  // max ‖H_V u − λu‖/‖H_V‖ over unit u in H_b
    std::string notes;
};

// Decay-rate threshold separating discretized continuum (box) modes from resonances on
// lattice models: geometric mean across the largest gap (ratio >= gap_ratio) in the upper
// half of the sorted rates of modes with Re λ >= 0. Failing that, a gap of ratio >= 2 whose
// lower side respects extended_bound (the largest rate an extended box mode can have, see
// extended_mode_rate_bound); all such modes when nothing qualifies.
double auto_continuum_cut(const SpectralData& sd, double tol, double gap_ratio = 4.0, std::string* note = nullptr,
                          double extended_bound = -1.0);

// 4 tr(C*C)/n: an extended box mode carries at most ~2/n weight per site (twice that margin)
double extended_mode_rate_bound(const DissipativeSystem& system);

SubspaceDecomposition classify_subspaces(const DissipativeSystem& system, double tol_real = -1.0);
SubspaceDecomposition classify_subspaces(const DissipativeSystem& system, const ClassifyOptions& opt);

// Orthonormal basis of Ran(P) for a (possibly oblique) projector.
Mat projector_range(const Mat& p);

}  // namespace dscat
