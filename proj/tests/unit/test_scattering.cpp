#include <doctest.h>

#include <limits>
#include <sstream>

#include "dscat/linalg.hpp"
#include "dscat/scattering.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

DissipativeSystem well_without_absorption(int n) {
    const int c = n / 2 - 6;
    return build_lattice_system(n, 1.0, site_profile(n, c, c + 12, -0.6), RVec::Zero(n));
}

}  // namespace

TEST_CASE("free lattice: wave and scattering operators are the identity") {
    const DissipativeSystem s = absorbing_free_lattice(256, 0.0);
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
    REQUIRE(probes.states.cols() > 0);
    CHECK((probes.states.adjoint() * probes.states - Mat::Identity(probes.states.cols(), probes.states.cols())).norm() <
          1e-12);
    const WaveOperatorResult w = finite_time_wave(s, 0.5 * probes.t_max, WaveDirection::minus, probes);
    CHECK((w.matrix - probes.states).norm() < 1e-10);
    CHECK(w.norm <= 1.0 + 1e-6);
    CHECK_THROWS_AS(finite_time_wave(s, 2.0 * probes.t_max, WaveDirection::minus, probes), ValidationError);

    const ScatteringResult sc = scattering_operator(s, 0.5 * probes.t_max);
    CHECK(std::abs(sc.singular_values.maxCoeff() - 1.0) < 1e-8);
    CHECK(std::abs(sc.singular_values.minCoeff() - 1.0) < 1e-8);
}

TEST_CASE("Cook integral without absorption") {
    const DissipativeSystem s = well_without_absorption(256);
    const ProbeSet probes = make_probes(s, ProbePlacement::incoming);
    const double T = 0.5 * probes.t_max;
    const WaveOperatorResult cook = cook_wave(s, T, probes);
    const WaveOperatorResult fin = finite_time_wave(s, T, WaveDirection::minus, probes);
    CHECK((cook.matrix - fin.matrix).norm() < 1e-8);
    CHECK(cook.method == WaveMethod::cook_integral);
}

TEST_CASE("Cook integral on a bound state of H_V is rejected") {
    const DissipativeSystem s = complete_lattice(128);
    Eigen::SelfAdjointEigenSolver<Mat> es(s.hv());
    REQUIRE(es.eigenvalues()(0) < 0.0);
    ProbeSet bound;
    bound.states = es.eigenvectors().col(0);
    bound.t_max = 40.0;
    bound.theta = {0.0};
    bound.center = {64.0};
    CHECK_THROWS_AS(cook_wave(s, 30.0, bound), NumericalError);
}

TEST_CASE("local wave operator on an interval outside the band vanishes") {
    const DissipativeSystem s = absorbing_free_lattice(256, 0.1);
    const ProbeSet probes = make_probes(s, ProbePlacement::incoming);
    const WaveOperatorResult w = local_wave(s, {5.0, 6.0}, 0.5 * probes.t_max);
    CHECK(w.matrix.norm() < 1e-12);
}

TEST_CASE("divergence exponent calibration") {
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
    const double l0 = 1.0;
    const double p1 = divergence_exponent([&](double l, double e) { return 1.0 / ((l - l0) * (l - l0) + e * e); },
                                          {0.9, 1.1}, eps);
    const double p3 = divergence_exponent(
        [&](double l, double e) {
            const double q = (l - l0) * (l - l0) + e * e;
            return 1.0 / (q * q);
        },
        {0.9, 1.1}, eps);
    CHECK(std::abs(p1 - 1.0) < 0.1);
    CHECK(std::abs(p3 - 3.0) < 0.1);
    CHECK(std::abs(divergence_exponent([](double, double) { return 1.0; }, {0.9, 1.1}, eps)) < 1e-8);
}

TEST_CASE("bounded sandwiched resolvent has no divergence witness") {
    CHECK_THROWS_AS(divergence_witness(two_level_system(), {1.5, 2.5}, VerdictOptions{}.eps_schedule), NumericalError);
}

TEST_CASE("free lattice is trivially complete") {
    const DissipativeSystem s = absorbing_free_lattice(256, 0.0);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
    const WaveOperatorResult w = finite_time_wave(s, 0.5 * probes.t_max, WaveDirection::minus, probes);
    ScanOptions so;
    so.grid = 20;
    const SingularityScan scan = singularity_scan(s, {0.05, 3.8}, {0.1, 0.05, 0.025, 0.0125, 0.00625, 0.001}, so);
    const CompletenessVerdict v = completeness_verdict(s, dec, &w, scan);
    CHECK(v.verdict == "complete");
    CHECK(v.sigma_min_restricted >= 1e-3);
    CHECK(!v.witness.has_value());
}

TEST_CASE("absorbing lattice: contractive, invertible scattering operator") {
    const DissipativeSystem s = complete_lattice(256);
    const ProbeSet probes = make_probes(s, ProbePlacement::centered);
    const ScatteringResult sc = scattering_operator(s, probes.t_max);
    CHECK(sc.singular_values.maxCoeff() <= 1.0 + 1e-6);
    CHECK(sc.singular_values.minCoeff() < 1.0);
    CHECK(sc.singular_values.minCoeff() >= 1e-3);
}

TEST_CASE("Cauchy CSV") {
    const DissipativeSystem s = absorbing_free_lattice(256, 0.0);
    const WaveOperatorResult w = finite_time_wave(s, 0.5 * make_probes(s, ProbePlacement::outgoing).t_max,
                                                  WaveDirection::minus);
    std::ostringstream os;
    write_cauchy_csv(os, w);
    CHECK(os.str().rfind("T,defect\n", 0) == 0);
    CHECK(to_string(WaveDirection::plus_adjoint).size() > 0);
}
