#include <doctest.h>

#include <boost/math/tools/roots.hpp>
#include <sstream>

#include "dscat/resonances.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

int total_multiplicity(const ResonanceSet& s) {
    int m = 0;
    for (const auto& z : s.zeros) m += z.multiplicity;
    return m;
}

// bound state of the well −v0 on [0, R]: q cot(qR) = −κ with q² + κ² = v0
double bound_kappa(double v0, double R) {
    auto f = [&](double k) {
        const double q = std::sqrt(v0 - k * k);
        return q * std::cos(q * R) + k * std::sin(q * R);
    };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t it = 100;
    const auto r = boost::math::tools::bisect(f, 1e-6, std::sqrt(v0) - 1e-9, tol, it);
    return 0.5 * (r.first + r.second);
}

}  // namespace

TEST_CASE("free Jost function") {
    const RadialSystem free = build_radial_model(free_potential(1.0));
    const JostEvaluation j = jost_function(free, cplx(1.0, 0.0));
    CHECK(std::abs(j.value - std::exp(cplx(0.0, -1.0))) < 1e-9);
    CHECK(j.ode_error_estimate < 1e-8);
    for (double x : {-3.0, -1.2, 0.7, 2.5}) CHECK(std::abs(std::abs(jost_value(free, cplx(x, 0.0))) - 1.0) < 1e-9);

    const ResonanceSet s = resonance_search(free, {-5.0, 5.0, -2.0, 0.5});
    CHECK(s.zeros.empty());
    CHECK(s.argument_principle_count == 0);
}

TEST_CASE("real square well: bound state and symmetric resonances") {
    const RadialSystem well = build_radial_model(square_well(-4.0, 0.0, 1.0));
    const ResonanceSet s = resonance_search(well, {-5.0, 5.0, -2.0, 2.5});
    CHECK(s.argument_principle_count == total_multiplicity(s));
    const double kappa = bound_kappa(4.0, 1.0);
    int bound = 0;
    for (const auto& z : s.zeros) {
        if (z.z.imag() > 0.0) {
            ++bound;
            CHECK(std::abs(z.z - cplx(0.0, kappa)) < 1e-8);
        }
        // z ↦ −z̄
        bool mirrored = false;
        for (const auto& y : s.zeros) mirrored = mirrored || std::abs(y.z + std::conj(z.z)) < 1e-6;
        CHECK(mirrored);
    }
    CHECK(bound == 1);
    // no real zeros away from 0 without absorption
    for (double x : {-4.0, -2.0, -1.0, -0.3}) CHECK(std::abs(jost_value(well, cplx(x, 0.0))) > 1e-3);

    std::ostringstream os;
    write_resonance_csv(os, s);
    CHECK(os.str().rfind("re_z,im_z,mult\n", 0) == 0);
}

TEST_CASE("absorbing well: zeros below the axis, winding consistent") {
    const RadialSystem well = build_radial_model(square_well(-4.0, 0.5, 1.0));
    const ResonanceSet s = resonance_search(well, {-5.0, 5.0, -2.0, 0.5});
    CHECK(s.argument_principle_count == total_multiplicity(s));
    for (const auto& z : s.zeros) {
        CHECK(z.residual < 1e-8);
        CHECK(z.multiplicity >= 1);
        CHECK(z.z.imag() < 0.5);
    }
}

TEST_CASE("tuning a real resonance") {
    const TuneResult tr = tuned_absorber();
    CHECK(tr.residual <= 1e-8);
    CHECK(std::abs(tr.zero.real() + 1.2) < 1e-8);
    const RadialSystem rs = build_radial_model(tr.potential);
    CHECK(std::abs(jost_value(rs, cplx(-1.2, 0.0))) < 1e-6);
    CHECK_THROWS_AS(
        tune_real_resonance([](double w) { return square_well(0.0, w, 1.0); }, -1.2, {2.0, 3.0}), ValidationError);
}

TEST_CASE("correspondence of real zeros and singularities") {
    const RadialSystem free = build_radial_model(free_potential(1.0));
    ScanOptions so;
    so.grid = 20;
    std::vector<double> eps;
    for (int k = 0; k < 8; ++k) eps.push_back(0.1 * std::pow(0.5, k));
    const CorrespondenceReport fr =
        correspondence_report(resonance_search(free, {-3.0, 3.0, -2.0, 0.5}), singularity_scan(free, {0.05, 4.0}, eps, so));
    CHECK(fr.consistent);
    CHECK(fr.matched.empty());
    CHECK(fr.unmatched_zeros.empty());
    CHECK(fr.unmatched_singularities.empty());

    // complex zeros well below the axis: bounded scan, nothing to match
    const RadialSystem well = build_radial_model(square_well(-4.0, 0.5, 1.0));
    const ResonanceSet ws = resonance_search(well, {-3.0, 3.0, -2.0, 0.5});
    const SingularityScan sc = singularity_scan(well, {0.05, 4.0}, eps, so);
    CHECK(sc.singularities.empty());
    CHECK(correspondence_report(ws, sc).consistent);
}
