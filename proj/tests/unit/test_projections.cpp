#include <doctest.h>

#include <sstream>

#include "dscat/linalg.hpp"
#include "dscat/projections.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

// C = 0, spectrum shifted into [shift − 2, shift + 2] roughly
DissipativeSystem positive_hermitian(int d, unsigned seed, double shift) {
    Rng rng(seed);
    const Mat h = random_hermitian(d, rng, 1.0 / std::sqrt(static_cast<double>(d))) + shift * Mat::Identity(d, d);
    return build_matrix_system(h, Mat::Zero(d, d), Mat::Zero(d, d));
}

Mat indicator(const DissipativeSystem& s, Interval iv) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s.h());
    Mat e = Mat::Zero(s.dim(), s.dim());
    for (Eigen::Index k = 0; k < s.dim(); ++k) {
        const double l = es.eigenvalues()(k);
        if (l > iv.first && l < iv.second) e += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
    return e;
}

Mat r_power(const DissipativeSystem& s, int p) {
    const Mat r = (s.h() - I * Mat::Identity(s.dim(), s.dim())).inverse();
    Mat out = Mat::Identity(s.dim(), s.dim());
    for (int k = 0; k < p; ++k) out = out * r;
    return out;
}

}  // namespace

TEST_CASE("Stone formula reproduces the Hermitian spectral projector") {
    const DissipativeSystem s = positive_hermitian(6, 41, 2.0);
    const RVec ev = hermitian_eigenvalues(s.h());
    // interval between the 2nd/3rd and 4th/5th eigenvalues
    const Interval iv{0.5 * (ev(1) + ev(2)), 0.5 * (ev(3) + ev(4))};
    const IntervalProjection e = spectral_projection(s, iv);
    CHECK((e.matrix - indicator(s, iv)).norm() < 1e-6);
    CHECK(e.idempotency_defect < 1e-6);
    CHECK(e.commutation_defect < 1e-6);
    CHECK(!e.eps_trace.empty());

    std::ostringstream os;
    write_eps_trace_csv(os, e.eps_trace, op_norm(e.matrix));
    CHECK(os.str().find("eps") == 0);
}

TEST_CASE("interval below the spectrum gives zero") {
    const DissipativeSystem s = positive_hermitian(5, 42, 6.0);
    CHECK(spectral_projection(s, {0.0, 1.0}).matrix.norm() < 1e-10);
    CHECK_THROWS_AS(spectral_projection(s, {1.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(spectral_projection(s, {-1.0, 0.5}), ValidationError);
}

TEST_CASE("product law") {
    const DissipativeSystem s = positive_hermitian(6, 43, 2.0);
    const RVec ev = hermitian_eigenvalues(s.h());
    const double m01 = 0.5 * (ev(0) + ev(1)), m23 = 0.5 * (ev(2) + ev(3)), m45 = 0.5 * (ev(4) + ev(5));
    const IntervalProjection a = spectral_projection(s, {m01, m23});
    const IntervalProjection b = spectral_projection(s, {m23, m45});
    CHECK(projection_product_defect(s, a, b) <= 5e-6);
    const IntervalProjection wide = spectral_projection(s, {m01, m45});
    CHECK(projection_product_defect(s, wide, a) <= 5e-6);
    CHECK(std::abs(projection_product_defect(s, a, a) - a.idempotency_defect) < 1e-10);
}

TEST_CASE("nested intervals on a lattice") {
    const DissipativeSystem s = weak_absorber_lattice(96);
    StoneOptions opt;
    const Interval outer = snap_interval(eigendecompose(s), {0.5, 2.0});
    const Interval inner = snap_interval(eigendecompose(s), {1.0, 1.5});
    const IntervalProjection e1 = spectral_projection(s, outer, opt);
    const IntervalProjection e2 = spectral_projection(s, inner, opt);
    CHECK(e1.idempotency_defect <= 5e-6);
    CHECK(projection_product_defect(s, e1, e2, opt) <= 5e-6);
}

TEST_CASE("regularized projection without singularities") {
    const DissipativeSystem s = positive_hermitian(5, 44, 2.0);
    const RVec ev = hermitian_eigenvalues(s.h());
    const Interval iv{0.5 * (ev(0) + ev(1)), 0.5 * (ev(3) + ev(4))};
    const RegularizedProjection r = regularized_projection(s, iv, {});
    CHECK((r.matrix - r_power(s, 4) * indicator(s, iv)).norm() < 1e-5);
    CHECK(std::abs(regularizing_factor(cplx(2.0, 0.0), {}) - std::pow(cplx(2.0, -1.0), -4)) < 1e-15);
    const double l = 1.5;
    const cplx mu = 1.0 / cplx(l, -1.0);
    CHECK(std::abs(regularizing_factor(cplx(l, 0.0), {{l, 1}})) < 1e-15);
    CHECK(std::abs(regularizing_factor(cplx(0.5, 0.0), {{l, 2}}) -
                   std::pow(cplx(0.5, -1.0), -4) * std::pow(1.0 / cplx(0.5, -1.0) - mu, 2)) < 1e-14);
}

TEST_CASE("decomposition residual") {
    const DissipativeSystem two = two_level_system();
    const DecompositionResidual sk = decomposition_residual(two, classify_subspaces(two), {0.0, 1.5, 3.0});
    CHECK(sk.skipped);

    const DissipativeSystem s = positive_hermitian(5, 45, 2.0);
    const RVec ev = hermitian_eigenvalues(s.h());
    std::vector<double> part{0.0};
    for (Eigen::Index k = 0; k + 1 < ev.size(); ++k) part.push_back(0.5 * (ev(k) + ev(k + 1)));
    part.push_back(ev(ev.size() - 1) + 1.0);
    // Hermitian matrix model: every eigenvalue is a real one in [0, ∞) (bound states), skipped
    CHECK(decomposition_residual(s, classify_subspaces(s), part).skipped);

    // Hermitian lattice: box modes play the continuum
    const DissipativeSystem lat = absorbing_free_lattice(48, 0.0);
    const SubspaceDecomposition dl = classify_subspaces(lat);
    std::vector<double> lp;
    for (int k = 0; k <= 10; ++k) lp.push_back(0.5 * k);
    const DecompositionResidual rl = decomposition_residual(lat, dl, lp);
    CHECK(!rl.skipped);
    CHECK(rl.residual <= 1e-4);

    // box-mode rates near 2.5 are comparable to the level spacing, so the ε windows of modes
    // next to an interior breakpoint collapse; keep breakpoints outside the dense band
    const DissipativeSystem weak = complete_lattice(256);
    const DecompositionResidual rw = decomposition_residual(weak, classify_subspaces(weak), {0.0, 3.6, 5.0});
    CHECK(!rw.skipped);
    CHECK(rw.residual <= 1e-3);
}

TEST_CASE("contour integral reproduces Cauchy's formula") {
    const DissipativeSystem s = absorbing_free_lattice(32, 0.0);
    const ContourResult c = contour_gamma_integral(s, 0.05);
    REQUIRE(c.pieces.size() == 4);
    CHECK((c.normalized - r_power(s, 4)).norm() < 1e-4);
    CHECK(c.piece_norms[1] < 1.0);
    CHECK_THROWS(contour_gamma_integral(positive_hermitian(3, 46, 2.0), 0.05));
}
