#include <doctest.h>

#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "dscat/evolution.hpp"
#include "dscat/lindblad.hpp"
#include "dscat/scattering.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

Mat diag2(cplx a, cplx b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace

TEST_CASE("generator without jumps is the commutator") {
    Rng rng(61);
    const Mat hv = random_hermitian(4, rng);
    const LindbladSuperoperator L = build_lindbladian(hv, {});
    const Mat rho = random_matrix(4, 4, rng);
    CHECK((L.apply(rho) - (hv * rho - rho * hv)).norm() < 1e-13);
    CHECK((L.effective_h - hv).norm() == 0.0);
    CHECK_THROWS_AS(build_lindbladian(hv, {Mat::Identity(3, 3)}), ValidationError);
}

TEST_CASE("stationary state of the two-level example") {
    const Mat hv = diag2(1.0, 2.0);
    const Mat w = diag2(0.0, std::sqrt(2.0));
    const LindbladSuperoperator L = build_lindbladian(hv, {w});
    CHECK((L.effective_h - diag2(1.0, cplx(2.0, -1.0))).norm() < 1e-15);
    const Mat rho = diag2(0.0, 1.0);
    CHECK(L.apply(rho).norm() < 1e-15);
    CHECK((evolve_density(L, rho, 5.0).rho - rho).norm() < 1e-9);
    CHECK(std::abs(build_lindbladian(two_level_system(), {w}).consistency_defect) < 1e-15);
}

TEST_CASE("random families: trace, positivity, vectorization") {
    Rng rng(62);
    for (int f = 0; f < 50; ++f) {
        const int d = uniform_int(2, 5, rng);
        std::vector<Mat> jumps;
        for (int k = 0, m = uniform_int(1, 3, rng); k < m; ++k) jumps.push_back(random_matrix(d, d, rng, 0.5));
        const LindbladSuperoperator L = build_lindbladian(random_hermitian(d, rng), jumps);
        CHECK(L.trace_defect < 1e-12);
        const Mat x = random_matrix(d, d, rng);
        CHECK((L.generator * vec(x) - vec(L.apply(x))).norm() < 1e-12 * std::max(1.0, L.generator.norm()));
        const Vec psi = random_unit(d, rng);
        const DensityMatrix e = evolve_density(L, psi * psi.adjoint(), 1.0);
        CHECK(std::abs(e.trace - 1.0) < 1e-9);
        CHECK(e.min_eig >= -1e-8);
        CHECK(e.hermiticity_defect <= 1e-10);
        if (d <= 4 && f < 10) CHECK(choi_min_eigenvalue(L, 1.0) >= -1e-8);
    }
}

TEST_CASE("no jumps: unitary conjugation") {
    Rng rng(63);
    const Mat hv = random_hermitian(5, rng);
    const Vec psi = random_unit(5, rng);
    const Mat u = Mat(-I * 1.7 * hv).exp();
    const DensityMatrix e = evolve_density(build_lindbladian(hv, {}), psi * psi.adjoint(), 1.7);
    CHECK((e.rho - u * psi * psi.adjoint() * u.adjoint()).norm() < 1e-10);
    CHECK_THROWS_AS(evolve_density(build_lindbladian(hv, {}), psi * psi.adjoint(), -1.0), ValidationError);
    CHECK_THROWS_AS(evolve_density(build_lindbladian(hv, {}), Mat(-psi * psi.adjoint()), 1.0), ValidationError);
}

TEST_CASE("modified wave operator preconditions") {
    const DissipativeSystem s = two_level_system();
    const SubspaceDecomposition dec = classify_subspaces(s);
    CHECK_THROWS_AS(ModifiedWaveOperator(s, dec, capture_model(s, dec), 10.0), ValidationError);
    Rng rng(64);
    const DissipativeSystem h = build_matrix_system(random_hermitian(3, rng), Mat::Zero(3, 3), Mat::Zero(3, 3));
    CHECK_THROWS_AS(capture_model(h, classify_subspaces(h)), ValidationError);
}

TEST_CASE("free lattice: identity channel") {
    const DissipativeSystem s = absorbing_free_lattice(256, 0.0);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
    const ModifiedWaveOperator omega(s, dec, capture_model(Vec(probes.states.col(1))), 0.5 * probes.t_max);
    const Vec psi = probes.states.col(0);
    const Mat rho = psi * psi.adjoint();
    CHECK((omega.apply(rho) - rho).norm() < 1e-8);
    CHECK(std::abs(escape_probability(omega, rho) - 1.0) < 1e-8);
}

TEST_CASE("escape probabilities on the absorbing lattice") {
    const DissipativeSystem s = complete_lattice(256);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const CaptureModel cm = capture_model(s, dec);
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
    const ModifiedWaveOperator omega(s, dec, cm, probes.t_max);

    // outgoing packet never meets the absorber
    const Vec a = probes.states.col(0), b = probes.states.col(1);
    CHECK(std::abs(escape_probability(omega, a * a.adjoint()) - 1.0) < 1e-2);
    // decaying mode
    const Vec phi = cm.target;
    CHECK(escape_probability(omega, phi * phi.adjoint()) < 1e-2);

    // affine on convex combinations
    const Mat ra = a * a.adjoint(), rp = phi * phi.adjoint();
    double ea = 0.0, ep = 0.0, em = 0.0;
    escape_probability(omega, ra, &ea);
    escape_probability(omega, rp, &ep);
    escape_probability(omega, 0.3 * ra + 0.7 * rp, &em);
    CHECK(std::abs(em - (0.3 * ea + 0.7 * ep)) < 1e-8);

    // captured flux is what the pure-state evolution loses
    const Vec c = (a + b) / std::sqrt(2.0);
    const double survive = Propagator(s).apply(c, omega.horizon()).squaredNorm();
    CHECK(std::abs(omega.captured_flux(c) - (1.0 - survive)) < 1e-6);
}

TEST_CASE("escape CSV") {
    ModifiedWaveResult r;
    r.escape = {0.9};
    r.escape_raw = {0.9};
    r.absorbed = {0.1};
    std::ostringstream os;
    write_escape_csv(os, r);
    CHECK(os.str().rfind("probe,p_escape,p_escape_raw,p_abs\n", 0) == 0);
}
