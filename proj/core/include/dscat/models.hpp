#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dscat/types.hpp"

namespace dscat {

enum class ModelTag { matrix, lattice, radial_discretized };
enum class BoundaryCondition { dirichlet };

std::string to_string(ModelTag tag);

// Site data kept for lattice models so that banded solves and geometric
// estimates (reflection horizons, probe placement) stay available.
struct LatticeInfo {
    double dx = 1.0;
    RVec v;  // potential samples
    RVec w;  // absorption samples, c = diag(sqrt(w))
    // first/last site with nonzero potential or absorption; -1 if none
    Eigen::Index support_lo = -1;
    Eigen::Index support_hi = -1;
};

// H = H0 + V - i C*C together with H*, H_V and the model metadata. Immutable;
// lattice models keep their band data and build dense matrices on first use.
class DissipativeSystem {
public:
    int dim() const { return n_; }
    const Mat& h0() const;
    const Mat& v() const;
    const Mat& c() const;
    const Mat& h() const;
    const Mat& h_adj() const;
    const Mat& hv() const;
    const Mat& cstar_c() const;
    ModelTag model_tag() const { return tag_; }
    const std::optional<LatticeInfo>& lattice() const { return lattice_; }

    double h_norm() const { return h_norm_; }
    double c_norm() const { return c_norm_; }
    // ‖A − A*‖/2 summed over the two Hermitian inputs before symmetrization
    double symmetrization_defect() const { return sym_defect_; }
    bool self_adjoint() const { return c_norm_ == 0.0; }

    // H u without forming dense matrices for lattice models.
    Vec apply_h(const Vec& u) const;
    // Tridiagonal bands of H (lattice models only): sub, diag, super.
    void bands(Vec& sub, Vec& diag, Vec& sup) const;

    // Same model with C = 0 (the operator H_V).
    DissipativeSystem without_absorption() const;
    // Same model with V = 0, C = 0 (the operator H0).
    DissipativeSystem kinetic() const;
    // Same model with C scaled by s.
    DissipativeSystem with_scaled_absorption(double s) const;

private:
    struct Dense;
    DissipativeSystem(Mat h0, Mat v, Mat c, double sym_defect);
    DissipativeSystem(LatticeInfo lat, ModelTag tag);
    const Dense& dense() const;

    int n_ = 0;
    std::shared_ptr<Dense> dense_;
    ModelTag tag_ = ModelTag::matrix;
    std::optional<LatticeInfo> lattice_;
    double h_norm_ = 0.0, c_norm_ = 0.0, sym_defect_ = 0.0;

    friend DissipativeSystem build_matrix_system(const Mat&, const Mat&, const Mat&);
    friend DissipativeSystem build_lattice_system(int, double, const RVec&, const RVec&, BoundaryCondition);
    friend DissipativeSystem make_lattice_variant(const DissipativeSystem&, const RVec&, const RVec&, ModelTag);
};

DissipativeSystem build_matrix_system(const Mat& h0, const Mat& v, const Mat& c);
DissipativeSystem build_lattice_system(int n, double dx, const RVec& v_samples, const RVec& w_samples,
                                       BoundaryCondition bc = BoundaryCondition::dirichlet);
// Lattice system sharing the geometry of `base` with new samples.
DissipativeSystem make_lattice_variant(const DissipativeSystem& base, const RVec& v_samples, const RVec& w_samples,
                                       ModelTag tag);

// C from a positive semidefinite W = C*C: elementwise root when W is diagonal,
// principal square root otherwise.
Mat absorption_factor(const Mat& w);

struct HypothesisReport {
    bool w_nonneg = true;
    std::vector<double> hv_eigs_below_zero;  // strictly negative eigenvalues of H_V
    int hv_neg_count = 0;
    int hv_nonneg_count = 0;  // eigenvalues of H_V that are >= 0
    double dissipativity_defect = 0.0;
    std::string notes;
};

// Samples 100 random unit vectors plus the standard basis for the dissipativity defect.
HypothesisReport check_hypotheses(const DissipativeSystem& system, unsigned seed = 7);

// max over the given columns of |Im<u,Hu> + ‖Cu‖²| / ‖u‖²
double dissipativity_defect(const DissipativeSystem& system, const Mat& samples);

// ---------------------------------------------------------------- radial models

struct RadialPiece {
    double r0, r1, v, w;
};

struct RadialPotential {
    std::function<double(double)> v_profile;
    std::function<double(double)> w_profile;
    double support_radius = 1.0;
    std::map<std::string, double> params;
    std::vector<double> breakpoints;  // interior points of (0, R) where the profiles jump
    std::vector<RadialPiece> pieces;  // filled for piecewise-constant potentials
    std::string kind = "custom";
};

RadialPotential free_potential(double R);
// v = v0 (use v0 < 0 for a well) and w = w0 on [0, R].
RadialPotential square_well(double v0, double w0, double R);
// Piecewise-constant profile from explicit pieces covering [0, R].
RadialPotential piecewise_potential(std::vector<RadialPiece> pieces);
// U_s(r) = s² U(s r): moves Jost zeros z -> s z, support R -> R/s.
RadialPotential dilate(const RadialPotential& pot, double s);

struct RadialGridSpec {
    int nodes_per_panel = 16;  // Gauss-Legendre order, one of 8/16/20/32
    int min_nodes = 64;
};

struct RadialOdeSettings {
    double rtol = 1e-10;
    double atol = 1e-13;
    double stiffness_guard = 200.0;  // max |z| R
};

struct RadialSystem {
    RadialPotential potential;
    std::vector<double> nodes;    // quadrature nodes on [0, R]
    std::vector<double> weights;
    RadialOdeSettings ode;
    bool is_free = false;

    double R() const { return potential.support_radius; }
};

RadialSystem build_radial_model(const RadialPotential& pot, const RadialGridSpec& grid = {},
                                const RadialOdeSettings& ode = {});

// Finite-difference discretization on sites r_j = j dx, j = 1..n, Dirichlet at r = 0
// and r = (n+1) dx; n = round(box_length / dx).
DissipativeSystem radial_to_lattice(const RadialSystem& radial, double dx, double box_length);

}  // namespace dscat
