#include <doctest.h>

#include "dscat/linalg.hpp"
#include "dscat/spectra.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

TEST_CASE("two-level system splits into H_b and H_p") {
    const DissipativeSystem s = two_level_system();
    const SubspaceDecomposition dec = classify_subspaces(s);
    REQUIRE(dec.clusters.size() == 2);
    CHECK(dec.clusters[0].kind == ModeKind::real);
    CHECK(std::abs(dec.clusters[0].center - cplx(1.0, 0.0)) < 1e-14);
    CHECK(dec.clusters[1].kind == ModeKind::decaying);
    CHECK(std::abs(dec.clusters[1].center - cplx(2.0, -1.0)) < 1e-14);
    CHECK(dec.basis_Hb.cols() == 1);
    CHECK(dec.basis_Hp.cols() == 1);
    CHECK(std::abs(std::abs(dec.basis_Hb(0, 0)) - 1.0) < 1e-14);
    CHECK(dec.lemma_c_defect < 1e-14);
    CHECK(jordan_order(s, cplx(1.0, 0.0)) == 1);
}

TEST_CASE("eigendecomposition residuals and left vectors") {
    Rng rng(11);
    const DissipativeSystem s = random_system(9, rng);
    const SpectralData sd = eigendecompose(s);
    CHECK(sd.residuals.maxCoeff() < 1e-12);
    REQUIRE(sd.diagonalizable());
    CHECK((sd.left_rows * sd.right_vectors - Mat::Identity(9, 9)).norm() < 1e-10);
    for (Eigen::Index k = 0; k < 9; ++k) CHECK(sd.eigenvalues(k).imag() <= 1e-12);
}

TEST_CASE("Riesz projection equals the eigenprojector") {
    Rng rng(12);
    const DissipativeSystem s = random_system(6, rng);
    const SpectralData sd = eigendecompose(s);
    const cplx l = sd.eigenvalues(2);
    const Projector p = riesz_projection(s, l, default_riesz_radius(sd, l, 1e-6));
    const Mat ref = sd.right_vectors.col(2) * sd.left_rows.row(2);
    CHECK((p.matrix - ref).norm() < 1e-8);
    CHECK(std::abs(p.trace - 1.0) < 1e-8);
    CHECK(p.idempotency_defect < 1e-8);
}

TEST_CASE("Jordan block is detected") {
    Mat h0(2, 2);
    h0 << 1.0, 0.5, 0.5, 1.0;
    const Mat c = Mat::Identity(2, 2);  // H = h0 − i: normal, simple eigenvalues
    CHECK(jordan_order(build_matrix_system(h0, Mat::Zero(2, 2), c), cplx(1.5, -1.0)) == 1);
    // H_V = [[0,1],[1,0]], W = diag(2, 0): (λ + i)² = 0 with a single eigenvector
    Mat hv(2, 2);
    hv << 0.0, 1.0, 1.0, 0.0;
    Mat cw = Mat::Zero(2, 2);
    cw(0, 0) = std::sqrt(2.0);
    const DissipativeSystem jb = build_matrix_system(hv, Mat::Zero(2, 2), cw);
    CHECK(jordan_order(jb, cplx(0.0, -1.0)) == 2);
}

TEST_CASE("real eigenvectors lie in ker C") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const DissipativeSystem s = system_with_bound_states(8, 3, rng);
        const SubspaceDecomposition dec = classify_subspaces(s);
        CHECK(dec.basis_Hb.cols() == 3);
        CHECK(dec.basis_Hp.cols() == 5);
        CHECK((s.c() * dec.basis_Hb).norm() < 1e-10);
        CHECK(dec.pi_pp.idempotency_defect < 1e-8);
    }
}

TEST_CASE("lattice box modes are separated from resonances") {
    const DissipativeSystem s = complete_lattice(128);
    const SubspaceDecomposition dec = classify_subspaces(s);
    CHECK(dec.continuum_cut > 0.0);
    CHECK(!dec.continuum_indices.empty());
    CHECK(dec.basis_Hb.cols() == 0);
    CHECK(dec.basis_Hp.cols() > 0);
    CHECK(dec.basis_Hp.cols() < 20);
}

TEST_CASE("projector range") {
    Mat p = Mat::Zero(3, 3);
    p(0, 0) = 1.0;
    p(0, 1) = 2.0;  // oblique
    const Mat q = projector_range(p);
    CHECK(q.cols() == 1);
    CHECK(std::abs(std::abs(q(0, 0)) - 1.0) < 1e-14);
}

namespace {

DissipativeSystem offdiag_system() {
    Mat v(2, 2), w = Mat::Zero(2, 2);
    v << 0.0, 1.0, 1.0, 0.0;
    w(1, 1) = 1.0;
    return build_matrix_system(Mat::Zero(2, 2), v, absorption_factor(w));
}

// H = [[−i, 1], [0, −i]] from H_V = [[0, ½], [½, 0]] and C*C = [[1, ½i], [−½i, 1]]
DissipativeSystem jordan_system() {
    Mat hv(2, 2), w(2, 2);
    hv << 0.0, 0.5, 0.5, 0.0;
    w << 1.0, cplx(0.0, 0.5), cplx(0.0, -0.5), 1.0;
    return build_matrix_system(Mat::Zero(2, 2), hv, absorption_factor(w));
}

}  // namespace

TEST_CASE("eigenvalues of the closed-form examples") {
    const SpectralData sd = eigendecompose(offdiag_system());
    const cplx a = cplx(-std::sqrt(3.0), -1.0) / 2.0, b = cplx(std::sqrt(3.0), -1.0) / 2.0;
    CHECK(std::abs(sd.eigenvalues(0) - a) < 1e-12);
    CHECK(std::abs(sd.eigenvalues(1) - b) < 1e-12);

    Rng rng(14);
    const SpectralData h = eigendecompose(build_matrix_system(random_hermitian(6, rng), Mat::Zero(6, 6), Mat::Zero(6, 6)));
    CHECK(h.eigenvalues.imag().cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Riesz projections of the closed-form examples") {
    const Projector p = riesz_projection(two_level_system(), cplx(1.0, 0.0), 0.4);
    Mat e = Mat::Zero(2, 2);
    e(0, 0) = 1.0;
    CHECK((p.matrix - e).norm() < 1e-10);

    const DissipativeSystem j = jordan_system();
    CHECK((j.h() - (Mat(2, 2) << cplx(0, -1), 1.0, 0.0, cplx(0, -1)).finished()).norm() < 1e-14);
    const Projector pj = riesz_projection(j, cplx(0.0, -1.0), 0.5);
    CHECK((pj.matrix - Mat::Identity(2, 2)).norm() < 1e-10);
    CHECK(std::abs(pj.trace - 2.0) < 1e-10);
    CHECK(jordan_order(j, cplx(0.0, -1.0)) == 2);

    const Projector po = riesz_projection(offdiag_system(), cplx(std::sqrt(3.0), -1.0) / 2.0, 0.5);
    CHECK(std::abs(po.trace - 1.0) < 1e-10);
    CHECK(po.idempotency_defect < 1e-10);
}

TEST_CASE("subspace classification of the closed-form examples") {
    const SubspaceDecomposition od = classify_subspaces(offdiag_system());
    CHECK(od.basis_Hb.cols() == 0);
    CHECK(od.basis_Hp.cols() == 2);
    CHECK((od.pi_pp.matrix - Mat::Identity(2, 2)).norm() < 1e-10);

    Rng rng(15);
    const SubspaceDecomposition h =
        classify_subspaces(build_matrix_system(random_hermitian(5, rng), Mat::Zero(5, 5), Mat::Zero(5, 5)));
    CHECK(h.basis_Hp.cols() == 0);
    CHECK(h.basis_Hb.cols() == 5);
}
