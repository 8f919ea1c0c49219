#include <doctest.h>

#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "dscat/evolution.hpp"
#include "dscat/scattering.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

Vec unit(int d, int k) {
    Vec e = Vec::Zero(d);
    e(k) = 1.0;
    return e;
}

DissipativeSystem offdiag_system() {
    Mat v(2, 2), w = Mat::Zero(2, 2);
    v << 0.0, 1.0, 1.0, 0.0;
    w(1, 1) = 1.0;
    return build_matrix_system(Mat::Zero(2, 2), v, absorption_factor(w));
}

DissipativeSystem hermitian_system(int d, unsigned seed) {
    Rng rng(seed);
    return build_matrix_system(random_hermitian(d, rng), Mat::Zero(d, d), Mat::Zero(d, d));
}

}  // namespace

TEST_CASE("propagation against closed forms") {
    const DissipativeSystem s = two_level_system();
    const Vec e2 = unit(2, 1);
    const Vec u1 = propagate(s, e2, 1.0);
    CHECK(std::abs(u1(1) - std::exp(cplx(-1.0, -2.0))) < 1e-12);
    CHECK(std::abs(u1.norm() - std::exp(-1.0)) < 1e-12);

    Rng rng(21);
    const DissipativeSystem r = random_system(6, rng);
    const Vec u = random_unit(6, rng);
    CHECK((propagate(r, u, 0.0) - u).norm() == 0.0);

    const DissipativeSystem od = offdiag_system();
    const Mat ref = Mat(-I * 2.0 * od.h()).exp();
    CHECK((propagate(od, unit(2, 0), 2.0) - ref.col(0)).norm() < 1e-10);

    const Propagator prop(r);
    CHECK((prop.matrix(1.5) - Mat(-I * 1.5 * r.h()).exp()).norm() < 1e-10);
}

TEST_CASE("absorption probability") {
    const DissipativeSystem s = two_level_system();
    const DecayEstimate pure = absorption_probability(s, unit(2, 1));
    CHECK(pure.converged);
    CHECK(std::abs(pure.p_abs - 1.0) < 1e-9);
    const Vec mix = (unit(2, 0) + unit(2, 1)) / std::sqrt(2.0);
    const DecayEstimate m = absorption_probability(s, mix);
    CHECK(std::abs(m.p_abs - (1.0 - 1.0 / std::sqrt(2.0))) < 1e-9);
    Rng rng(22);
    const DissipativeSystem h = hermitian_system(5, 23);
    CHECK(absorption_probability(h, random_unit(5, rng)).p_abs == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(absorption_probability(s, Vec::Ones(2)), ValidationError);
}

TEST_CASE("smoothing integral") {
    const DissipativeSystem s = two_level_system();
    const SmoothingResult r = smoothing_integral(s, unit(2, 1));
    CHECK(std::abs(r.value - 0.5) < 1e-8);
    CHECK(r.lower <= r.value);
    CHECK(r.value <= r.upper);
    Rng rng(24);
    CHECK(smoothing_integral(hermitian_system(4, 25), random_unit(4, rng)).value == 0.0);
    for (int k = 0; k < 10; ++k) {
        const DissipativeSystem x = mixed_system(uniform_int(2, 8, rng), rng);
        CHECK(smoothing_integral(x, random_unit(x.dim(), rng)).value <= 0.5 + 1e-6);
    }
}

TEST_CASE("M(H) constant") {
    const DissipativeSystem s = two_level_system();
    const MConstant m = m_constant(s, unit(2, 1));
    CHECK(m.bounded);
    CHECK(std::abs(m.c_u - 0.5) < 1e-6);
    const MConstant b = m_constant(s, unit(2, 0));
    CHECK(!b.bounded);
    CHECK(b.flag.find("not in M(H)") != std::string::npos);
    CHECK(!m_constant(hermitian_system(3, 26), unit(3, 0)).bounded);
}

TEST_CASE("S(H) membership and backward bounds") {
    const DissipativeSystem s = two_level_system();
    const SMembership grow = s_membership(s, unit(2, 1), 10.0);
    CHECK(!grow.member);
    CHECK(std::abs(grow.growth_rate - 2.0) < 0.05);
    const SMembership herm = s_membership(hermitian_system(3, 27), unit(3, 1), 10.0);
    CHECK(herm.member);
    CHECK(herm.statistic == 0.0);

    const SubspaceDecomposition dec = classify_subspaces(s);
    const BackwardBounds bb = backward_bounds(s, unit(2, 0), 20.0, dec.basis_Hp_star);
    CHECK(std::abs(bb.m1_hat - 1.0) < 1e-10);
    CHECK(std::abs(bb.m2_hat - 1.0) < 1e-10);
    const DissipativeSystem h = hermitian_system(3, 28);
    const BackwardBounds hb = backward_bounds(h, unit(3, 2), 20.0, classify_subspaces(h).basis_Hp_star);
    CHECK(std::abs(hb.m1_hat - 1.0) < 1e-10);
    CHECK(std::abs(hb.m2_hat - 1.0) < 1e-10);
}

TEST_CASE("lattice wavepacket orthogonal to H_p(H*)") {
    const DissipativeSystem s = complete_lattice(256);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const ProbeSet probes = make_probes(s, ProbePlacement::incoming);
    const Mat& q = dec.basis_Hp_star;
    Vec u = probes.states.col(0);
    u -= q * (q.adjoint() * u);
    u /= u.norm();
    const SMembership m = s_membership(s, u, probes.t_max);
    CHECK(m.member);
    const BackwardBounds bb = backward_bounds(s, u, probes.t_max, q);
    CHECK(bb.m1_hat > 0.0);
    CHECK(bb.m1_hat <= bb.m2_hat);
    CHECK(std::isfinite(bb.m2_hat));
}

TEST_CASE("dissipative space equals H_p") {
    const DissipativeSystem s = two_level_system();
    const DissipativeSpace d = dissipative_space(s, classify_subspaces(s));
    CHECK(d.verdict == "match");
    REQUIRE(d.basis.cols() == 1);
    CHECK(std::abs(std::abs(d.basis(1, 0)) - 1.0) < 1e-8);

    const DissipativeSystem od = offdiag_system();
    const DissipativeSpace o = dissipative_space(od, classify_subspaces(od));
    CHECK(o.verdict == "match");
    CHECK(o.basis.cols() == 2);

    const DissipativeSystem h = hermitian_system(4, 29);
    const DissipativeSpace z = dissipative_space(h, classify_subspaces(h));
    CHECK(z.basis.cols() == 0);
    CHECK(z.verdict == "match");
}

TEST_CASE("decay curve output") {
    const DissipativeSystem s = two_level_system();
    const Propagator prop(s);
    const DecayCurve c = decay_curve(prop, s, unit(2, 1), 4.0, 5);
    REQUIRE(c.t.size() == 5);
    CHECK(std::abs(c.norm.back() - std::exp(-4.0)) < 1e-10);
    CHECK(std::abs(c.c_integrand.front() - 1.0) < 1e-12);
    std::ostringstream os;
    write_decay_csv(os, c);
    CHECK(os.str().rfind("t,norm,c_integrand\n", 0) == 0);
}
