// Acceptance suite: one line per criterion, exit status 1 if any criterion fails.
// Usage: dscat_acceptance [criterion numbers...]   (default: all)

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dscat/evolution.hpp"
#include "dscat/lindblad.hpp"
#include "dscat/linalg.hpp"
#include "dscat/projections.hpp"
#include "dscat/resolvent.hpp"
#include "dscat/resonances.hpp"
#include "dscat/scattering.hpp"
#include "dscat/spectra.hpp"
#include "fixtures.hpp"

using namespace dscat;
using namespace dscat::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[violated: " << what << "] ";
        }
    }
};

using Check = std::function<void(Outcome&)>;

struct Criterion {
    int id;
    const char* title;
    double budget_s;
    Check run;
};

std::vector<double> scan_eps() {
    std::vector<double> e;
    for (int k = 0; k < 8; ++k) e.push_back(0.1 / std::pow(2.0, k));
    return e;
}

// log-log slope of y against x between the first and last sample
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    return std::log(y.back() / y.front()) / std::log(x.back() / x.front());
}

// ------------------------------------------------------------------ 1
void dissipativity(Outcome& o) {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = uniform_int(1, 32, rng);
        const DissipativeSystem s = mixed_system(d, rng);
        Mat samples = random_matrix(d, 64, rng);
        samples.rightCols(std::min(d, 64)) = Mat::Identity(d, std::min(d, 64));
        const double defect = dissipativity_defect(s, samples) / s.h_norm();
        worst = std::max(worst, defect);
    }
    o.detail << "max |Im<u,Hu> + |Cu|^2| / |H| = " << worst << " over 200 systems; ";
    o.require(worst <= 1e-12, "defect <= 1e-12 |H|");
}

// ------------------------------------------------------------------ 2
void smoothing(Outcome& o) {
    Rng rng(202);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = uniform_int(2, 10, rng);
        const DissipativeSystem s = mixed_system(d, rng);
        const Vec u = random_unit(d, rng);
        worst = std::max(worst, smoothing_integral(s, u).value);
    }
    const DissipativeSystem eq = two_level_system();
    Vec e2 = Vec::Zero(2);
    e2(1) = 1.0;
    const double equality = smoothing_integral(eq, e2).value;
    o.detail.precision(12);
    o.detail << "max integral " << worst << " over 100 pairs; equality case " << std::abs(equality - 0.5)
             << " from 1/2; ";
    o.require(worst <= 0.5 + 1e-6, "integral <= 1/2 + 1e-6");
    o.require(std::abs(equality - 0.5) <= 1e-8, "equality case 1/2 +- 1e-8");
}

// ------------------------------------------------------------------ 3
void lemmas(Outcome& o) {
    Rng rng(303);
    double c_defect = 0.0, hv_defect = 0.0;
    int real_clusters = 0, bad_order = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int d = uniform_int(2, 12, rng);
        const DissipativeSystem s = mixed_system(d, rng);
        const SubspaceDecomposition dec = classify_subspaces(s);
        c_defect = std::max(c_defect, dec.lemma_c_defect);
        hv_defect = std::max(hv_defect, dec.lemma_hv_defect);
        for (const auto& cl : dec.clusters) {
            if (cl.kind != ModeKind::real) continue;
            ++real_clusters;
            if (jordan_order(s, cl.center) != 1) ++bad_order;
        }
    }
    o.detail << real_clusters << " real eigenvalues; max |Cu| " << c_defect << ", max H_V residual " << hv_defect
             << ", jordan_order != 1 at " << bad_order << "; ";
    o.require(real_clusters > 0, "scenario has real eigenvalues");
    o.require(c_defect <= 1e-8, "|Cu| <= 1e-8");
    o.require(hv_defect <= 1e-8, "H_V eigenvector");
    o.require(bad_order == 0, "jordan_order = 1");
}

// ------------------------------------------------------------------ 4
void dissipative_subspace(Outcome& o) {
    Rng rng(404);
    int matches = 0;
    double worst_angle = 0.0;
    std::string first_bad;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = uniform_int(2, 12, rng);
        const DissipativeSystem s = mixed_system(d, rng);
        const SubspaceDecomposition dec = classify_subspaces(s);
        const DissipativeSpace ds = dissipative_space(s, dec);
        worst_angle = std::max(worst_angle, ds.max_angle);
        if (ds.verdict == "match") ++matches;
        else if (first_bad.empty()) first_bad = ds.verdict;
    }
    o.detail << matches << "/100 match, max angle " << worst_angle << "; ";
    if (!first_bad.empty()) o.detail << "first non-match: " << first_bad << "; ";
    o.require(matches == 100, "verdict = match everywhere");
    o.require(worst_angle <= 1e-6, "angles <= 1e-6");
}

// ------------------------------------------------------------------ 5
void parseval(Outcome& o) {
    Rng rng(505);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int d = uniform_int(2, 8, rng);
        const DissipativeSystem s = random_system(d, rng);
        const Vec u = random_unit(d, rng);
        double growth = 0.0;
        const SpectralData sd = eigendecompose(s);
        for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) growth = std::max(growth, -sd.eigenvalues(k).imag());
        const ParsevalResult p = parseval_check(s, u, 1.5 * growth + 0.05);
        worst = std::max(worst, p.rel_err);
    }
    // scalar H = a − ib: both sides equal b / (2(ε − b))
    const double a = 1.3, b = 0.4, eps = 0.9;
    Mat h0(1, 1), c(1, 1);
    h0(0, 0) = a;
    c(0, 0) = std::sqrt(b);
    const ParsevalResult sc = parseval_check(build_matrix_system(h0, Mat::Zero(1, 1), c), Vec::Ones(1), eps);
    const double exact = b / (2.0 * (eps - b));
    const double err = std::max(std::abs(sc.lhs - exact), std::abs(sc.rhs - exact));
    o.detail << "max rel_err " << worst << " over 20 systems; scalar case error " << err << "; ";
    o.require(worst <= 1e-5, "rel_err <= 1e-5");
    o.require(err <= 1e-10, "scalar closed form to 1e-10");
}

// ------------------------------------------------------------------ 6
void projection_algebra(Outcome& o) {
    const DissipativeSystem s = weak_absorber_lattice(256);
    const SpectralData sd = eigendecompose(s);
    StoneOptions opt;
    opt.compute_adjoint = true;
    const Interval i1 = snap_interval(sd, {0.5, 1.5}), i2 = snap_interval(sd, {1.0, 2.5});
    const IntervalProjection e1 = spectral_projection(s, i1, opt), e2 = spectral_projection(s, i2, opt);
    const double idem = std::max(e1.idempotency_defect, e2.idempotency_defect);
    const double adj = std::max(e1.adjoint_defect, e2.adjoint_defect);
    const double prod = projection_product_defect(s, e1, e2, opt);

    // Hermitian limit against the eigenvector sum
    const DissipativeSystem h = s.without_absorption();
    const Interval ih = snap_interval(eigendecompose(h), {0.5, 1.5});
    const IntervalProjection eh = spectral_projection(h, ih);
    Eigen::SelfAdjointEigenSolver<Mat> es(h.h());
    Mat ref = Mat::Zero(h.dim(), h.dim());
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double l = es.eigenvalues()(k);
        if (l >= ih.first && l <= ih.second) ref += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
    const double herm = op_norm(eh.matrix - ref);
    o.detail << "idempotency " << idem << ", product " << prod << ", adjoint " << adj << ", Hermitian limit " << herm
             << "; ";
    o.require(idem <= 5e-6, "idempotency <= 5e-6");
    o.require(prod <= 5e-6, "product law <= 5e-6");
    o.require(adj <= 5e-6, "adjoint law <= 5e-6");
    o.require(herm <= 1e-6, "Hermitian limit <= 1e-6");
}

// ------------------------------------------------------------------ 7
void contour_oracle(Outcome& o) {
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.01};
    // the strip |Im ζ| < ε must hold every box mode: weak absorption keeps their
    // decay rates (≤ 1.5e-3) below the smallest ε of the decade
    for (double w : {0.0, 0.02}) {
        const DissipativeSystem s = absorbing_free_lattice(256, w);
        const RegularizedProjection line = regularized_projection(s, {0.0, 4.0 * s.h_norm()}, {});
        double diff = 0.0;
        std::vector<double> g2, g4;
        for (double e : eps) {
            const ContourResult c = contour_gamma_integral(s, e);
            diff = std::max(diff, op_norm(c.normalized - line.matrix));
            g2.push_back(c.piece_norms[1]);
            g4.push_back(c.piece_norms[3]);
        }
        const double s2 = loglog_slope(eps, g2), s4 = loglog_slope(eps, g4);
        o.detail << (w == 0.0 ? "Hermitian" : "dissipative") << ": |contour - line| " << diff << ", Gamma2 slope "
                 << s2 << ", Gamma4 slope " << s4 << "; ";
        o.require(diff <= 1e-4, "contour = line integral within 1e-4");
        // Γ₂ vanishes at least linearly (it decays faster); Γ₄ is exactly O(ε)
        o.require(s2 >= 0.9, "Gamma2 decays at least linearly");
        o.require(s4 >= 0.9 && s4 <= 1.1, "Gamma4 decays linearly");
    }
}

// ------------------------------------------------------------------ 8
void wave_operators(Outcome& o) {
    const DissipativeSystem s = complete_lattice(512);
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
    const double T = std::floor(probes.t_max);
    const WaveOperatorResult fw = finite_time_wave(s, T, WaveDirection::minus, probes);
    const WaveOperatorResult cw = cook_wave(s, T, probes);
    const double agree = op_norm(cw.matrix - fw.matrix);
    const double inter = intertwining_defect(s, T, probes);
    const double chain = chain_rule_defect(s, T, probes);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const KernelLaw kl = kernel_law(s, dec);
    const double kernel = std::max(kl.max_norm_hb, kl.max_norm_hp);
    o.detail << "T " << T << ", finite vs Cook " << agree << ", intertwining " << inter << ", kernel law " << kernel
             << ", chain rule " << chain << ", last Cauchy defect " << fw.cauchy_defects.back() << "; ";
    o.require(T <= 400.0, "T <= 400");
    o.require(agree <= 1e-3, "finite-time = Cook within 1e-3");
    o.require(inter <= 1e-3, "intertwining <= 1e-3");
    o.require(kernel <= 1e-3, "kernel law <= 1e-3");
    o.require(chain <= 1e-3, "chain rule <= 1e-3");
}

// ------------------------------------------------------------------ 9
void completeness(Outcome& o) {
    {
        const DissipativeSystem s = complete_lattice(512);
        const SubspaceDecomposition dec = classify_subspaces(s);
        WaveOptions wo;
        wo.decomposition = &dec;
        const ProbeSet probes = make_probes(s, ProbePlacement::outgoing);
        const WaveOperatorResult w = finite_time_wave(s, std::floor(probes.t_max), WaveDirection::minus, probes, wo);
        const SingularityScan sc = singularity_scan(s, {0.05, 3.8}, scan_eps());
        const CompletenessVerdict v = completeness_verdict(s, dec, &w, sc);
        const double angle = v.principal_angles.size() ? v.principal_angles.maxCoeff() : 0.0;
        int resolved = 0;  // box modes can leave "unresolved order" candidates behind
        for (const auto& x : sc.singularities) resolved += x.status == "singular";
        o.detail << "lattice: " << v.verdict << " (sigma_min " << v.sigma_min_restricted << ", angle " << angle
                 << ", " << resolved << " resolved singularities); ";
        o.require(v.verdict == "complete", "lattice verdict complete");
        o.require(resolved == 0, "lattice scan finds no singularity");
        o.require(v.sigma_min_restricted >= 1e-3, "sigma_min >= 1e-3");
        o.require(angle <= 1e-2, "angles <= 1e-2");
    }
    // calibration of the exponent fit against scalar poles at λ₀ = 1.44
    const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125, 0.0015625};
    const double l0 = 1.44;
    const double p_simple = divergence_exponent(
        [l0](double l, double e) { return 1.0 / ((l - l0) * (l - l0) + e * e); }, {1.4, 1.5}, eps);
    const double p_double = divergence_exponent(
        [l0](double l, double e) {
            const double q = (l - l0) * (l - l0) + e * e;
            return 1.0 / (q * q);
        },
        {1.4, 1.5}, eps);
    o.detail << "calibration p " << p_simple << " / " << p_double << " (exact 1 / 3); ";
    o.require(std::abs(p_simple - 1.0) <= 0.1 && std::abs(p_double - 3.0) <= 0.1, "exponent fit calibrated");

    const TuneResult tr = tune_real_resonance([](double w) { return square_well(0.0, w, 1.0); }, -1.2, {2.0, 4.0});
    const RadialSystem rs = build_radial_model(tr.potential);
    const SingularityScan sc = singularity_scan(rs, {1.0, 2.0}, scan_eps());
    const DissipativeSystem lat = radial_to_lattice(rs, 0.05, 20.0);
    const SubspaceDecomposition dec = classify_subspaces(lat);
    const CompletenessVerdict v = completeness_verdict(lat, dec, nullptr, sc, {}, &rs);
    const double p = v.witness ? v.witness->exponent : 0.0;
    o.detail << "tuned radial: " << v.verdict << " (exponent " << p << "); ";
    o.require(v.verdict == "incomplete", "tuned verdict incomplete");
    o.require(p >= 0.5, "divergence exponent >= 0.5");
}

// ------------------------------------------------------------------ 10
void correspondence(Outcome& o) {
    bool counts_ok = true;
    auto check_counts = [&](const ResonanceSet& rs) {
        int total = 0;
        for (const auto& z : rs.zeros) total += z.multiplicity;
        if (total != rs.argument_principle_count) counts_ok = false;
    };
    const RadialSystem free = build_radial_model(free_potential(1.0));
    const ResonanceSet fz = resonance_search(free, {-5.0, 5.0, -2.0, 0.5});
    check_counts(fz);
    const SingularityScan fs = singularity_scan(free, {0.05, 4.0}, scan_eps());
    o.detail << "free: " << fz.zeros.size() << " zeros, " << fs.singularities.size() << " singularities; ";
    o.require(fz.zeros.empty() && fs.singularities.empty(), "free model has neither");

    const ResonanceSet wz = resonance_search(build_radial_model(square_well(-4.0, 0.0, 1.0)), {-5.0, 5.0, -2.0, 2.5});
    check_counts(wz);

    const TuneResult tr = tune_real_resonance([](double w) { return square_well(0.0, w, 1.0); }, -1.2, {2.0, 4.0});
    const RadialSystem rs = build_radial_model(tr.potential);
    const ResonanceSet tz = resonance_search(rs, {-3.0, 3.0, -2.0, 0.5});
    check_counts(tz);
    const SingularityScan sc = singularity_scan(rs, {1.0, 2.0}, scan_eps());
    const CorrespondenceReport cr = correspondence_report(tz, sc);
    double mismatch = std::numeric_limits<double>::infinity();
    for (const auto& m : cr.matched)
        if (std::abs(m.z0 + 1.2) < 1e-6) mismatch = m.mismatch;
    o.detail << "tuned: z0 = " << tr.zero.real() << ", |z0^2 - lambda| " << mismatch << " (grid step "
             << sc.grid_step << "), consistent " << cr.consistent << "; winding = Newton count in all searches: "
             << counts_ok << "; ";
    o.require(mismatch <= sc.grid_step, "z0^2 matches a singularity within one grid step");
    o.require(cr.consistent, "correspondence consistent");
    o.require(counts_ok, "argument principle count = Newton count");
}

// ------------------------------------------------------------------ 11
void lindblad(Outcome& o) {
    // stationary example: diag(1, 2), W = √2 e₂e₂*, ρ = e₂e₂*
    Mat hv = Mat::Zero(2, 2);
    hv(0, 0) = 1.0;
    hv(1, 1) = 2.0;
    Mat w = Mat::Zero(2, 2);
    w(1, 1) = std::sqrt(2.0);
    Mat rho = Mat::Zero(2, 2);
    rho(1, 1) = 1.0;
    const double stat = (evolve_density(build_lindbladian(hv, {w}), rho, 3.0).rho - rho).norm();

    Rng rng(1111);
    double trace_err = 0.0, min_eig = 1.0, choi = 1.0;
    for (int f = 0; f < 50; ++f) {
        const int d = uniform_int(2, 8, rng);
        std::vector<Mat> jumps;
        for (int k = 0; k < 3; ++k) jumps.push_back(random_matrix(d, d, rng, 0.5));
        const LindbladSuperoperator L = build_lindbladian(random_hermitian(d, rng), jumps);
        const Vec psi = random_unit(d, rng);
        const DensityMatrix e = evolve_density(L, psi * psi.adjoint(), 1.0);
        trace_err = std::max({trace_err, std::abs(e.trace - 1.0), L.trace_defect});
        min_eig = std::min(min_eig, e.min_eig);
        if (f < 10) choi = std::min(choi, choi_min_eigenvalue(L, 1.0));
    }
    o.detail << "stationary " << stat << ", trace error " << trace_err << ", min eig " << min_eig << ", Choi " << choi
             << "; ";
    o.require(stat <= 1e-9, "stationary state exact");
    o.require(trace_err <= 1e-9, "trace preserved to 1e-9");
    o.require(min_eig >= -1e-8 && choi >= -1e-8, "positivity >= -1e-8");

    const DissipativeSystem s = complete_lattice(512);
    const SubspaceDecomposition dec = classify_subspaces(s);
    const CaptureModel cm = capture_model(s, dec);
    const ProbeSet probes = make_probes(s, placement_for(WaveDirection::plus));
    const ModifiedWaveResult mw = modified_wave(s, dec, cm, probes.states, probes.t_max);
    const double T = mw.horizons.back();

    // long-time oracles: surviving norm of the pure-state evolution for every probe,
    // full density-matrix RK4 for the first
    const Propagator prop(s);
    double oracle_gap = 0.0;
    for (Eigen::Index p = 0; p < probes.states.cols(); ++p) {
        const double survive = prop.apply(Vec(probes.states.col(p)), T).squaredNorm();
        oracle_gap = std::max(oracle_gap, std::abs(mw.escape[p] - survive));
    }
    const Vec psi = probes.states.col(0);
    const Mat rT = evolve_capture_density(s, cm, psi * psi.adjoint(), T, 0.1);
    const Mat& P = dec.pi_perp_orth;
    const double rk4 = (P * rT * P.adjoint()).trace().real();
    const double rk4_gap = std::abs(mw.escape[0] - rk4);

    const ModifiedWaveOperator omega(s, dec, cm, T);
    const Vec u = dec.basis_Hp.col(0);
    double raw = 0.0;
    escape_probability(omega, u * u.adjoint(), &raw);

    o.detail << "escape vs survival " << oracle_gap << ", vs density RK4 " << rk4_gap << ", decaying-mode escape "
             << raw << ", last Cauchy defect " << mw.cauchy_defects.back() << "; ";
    o.require(oracle_gap <= 1e-2 && rk4_gap <= 1e-2, "escape matches oracles within 1e-2");
    o.require(std::abs(raw) <= 1e-2, "decaying mode does not escape");
    o.require(mw.cauchy_defects.back() < 1e-3, "Cauchy defect < 1e-3");
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "dissipativity identity", 5.0, dissipativity},
        {2, "smoothing bound", 30.0, smoothing},
        {3, "real-eigenvalue lemmas", 60.0, lemmas},
        {4, "dissipative subspace = H_p", 120.0, dissipative_subspace},
        {5, "Parseval identity", 60.0, parseval},
        {6, "projection algebra", 300.0, projection_algebra},
        {7, "contour oracle", 300.0, contour_oracle},
        {8, "wave-operator suite", 600.0, wave_operators},
        {9, "completeness dichotomy", 900.0, completeness},
        {10, "resonance correspondence", 300.0, correspondence},
        {11, "Lindblad layer", 600.0, lindblad},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        Outcome o;
        const Stopwatch sw;
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "] ";
        }
        const double t = sw.seconds();
        o.require(t <= c.budget_s, "runtime budget");
        if (!o.pass) ++failed;
        std::printf("criterion %2d %-28s %s  %6.1fs / %.0fs  %s\n", c.id, c.title, o.pass ? "PASS" : "FAIL", t,
                    c.budget_s, o.detail.str().c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
