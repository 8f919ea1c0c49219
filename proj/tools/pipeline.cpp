#include "pipeline.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>

#include <unistd.h>

#include "dscat/evolution.hpp"
#include "dscat/lindblad.hpp"
#include "dscat/projections.hpp"
#include "dscat/resolvent.hpp"
#include "dscat/resonances.hpp"
#include "dscat/scattering.hpp"
#include "dscat/spectra.hpp"

namespace dscat::cli {

namespace fs = std::filesystem;

namespace {

// non-finite values become strings so that reports round-trip
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

json nums(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

json nums(const RVec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
    return out;
}

json z(cplx w) { return json::array({num(w.real()), num(w.imag())}); }

std::vector<double> default_eps() {
    std::vector<double> e;
    for (int k = 0; k < 8; ++k) e.push_back(0.1 / std::pow(2.0, k));
    return e;
}

std::pair<double, double> pair_of(const json& s, const char* key, std::pair<double, double> fallback) {
    if (!s.contains(key)) return fallback;
    const auto v = s[key].get<std::vector<double>>();
    if (v.size() != 2) throw ValidationError(std::string("settings: ") + key + " needs two values");
    return {v[0], v[1]};
}

struct Context {
    const ScenarioConfig& cfg;
    unsigned seed;
    std::optional<DissipativeSystem> sys;
    std::optional<SubspaceDecomposition> dec;
    std::optional<RadialSystem> radial;
    std::optional<CompletenessVerdict> verdict;
    json curves = json::object();
    json verdicts = json::object();

    const DissipativeSystem& system() {
        if (!sys) sys = build_system(cfg.model);
        return *sys;
    }
    const SubspaceDecomposition& decomposition() {
        if (!dec) {
            ClassifyOptions opt;
            opt.tol_real = tolerance(cfg, "tol_real", -1.0);
            dec = classify_subspaces(system(), opt);
        }
        return *dec;
    }
    const RadialSystem& radial_system() {
        if (!radial) radial = build_radial(cfg.model);
        return *radial;
    }
    json settings(Analysis a) const {
        const std::string k = to_string(a);
        return cfg.settings.contains(k) ? cfg.settings[k] : json::object();
    }
};

// ------------------------------------------------------------------ analyses

json run_spectra(Context& ctx) {
    const DissipativeSystem& s = ctx.system();
    const SubspaceDecomposition& dec = ctx.decomposition();
    const json st = ctx.settings(Analysis::spectra);
    const int max_basis = st.value("max_basis_dim", 64);
    json out;
    out["dim"] = s.dim();
    out["model_tag"] = to_string(s.model_tag());
    json eig = json::array();
    for (Eigen::Index k = 0; k < dec.spectral.eigenvalues.size(); ++k) eig.push_back(z(dec.spectral.eigenvalues(k)));
    out["eigenvalues"] = eig;
    json clusters = json::array();
    for (const auto& c : dec.clusters) {
        json b{{"center", z(c.center)}, {"kind", to_string(c.kind)}, {"size", c.indices.size()}};
        if (c.kind == ModeKind::real && s.dim() <= 64) b["jordan_order"] = jordan_order(s, c.center);
        clusters.push_back(b);
    }
    out["clusters"] = clusters;
    out["dims"] = {{"Hb", dec.basis_Hb.cols()},
                   {"Hp", dec.basis_Hp.cols()},
                   {"Hp_star", dec.basis_Hp_star.cols()},
                   {"continuum", dec.continuum_indices.size()}};
    out["tol_real"] = num(dec.tol_real);
    out["continuum_cut"] = num(dec.continuum_cut);
    out["lemma"] = {{"c_defect", num(dec.lemma_c_defect)}, {"hv_defect", num(dec.lemma_hv_defect)}};
    const HypothesisReport hyp = check_hypotheses(s, ctx.seed);
    out["hypotheses"] = {{"w_nonneg", hyp.w_nonneg},
                         {"dissipativity_defect", num(hyp.dissipativity_defect)},
                         {"hv_neg_count", hyp.hv_neg_count},
                         {"hv_nonneg_count", hyp.hv_nonneg_count},
                         {"notes", hyp.notes}};
    if (s.dim() <= max_basis) {
        out["basis_Hb"] = matrix_to_json(dec.basis_Hb);
        out["basis_Hp"] = matrix_to_json(dec.basis_Hp);
    }
    out["notes"] = dec.notes;
    return out;
}

std::vector<Vec> evolution_states(Context& ctx, const json& st) {
    const DissipativeSystem& s = ctx.system();
    const int n = s.dim();
    std::vector<Vec> states;
    const json sel = st.value("states", json("basis"));
    const int count = std::min(n, st.value("count", 8));
    if (sel.is_string() && sel == "basis") {
        for (int k = 0; k < count; ++k) states.push_back(Vec::Unit(n, k));
    } else if (sel.is_string() && sel == "random") {
        std::mt19937_64 rng(ctx.seed);
        std::normal_distribution<double> nd;
        for (int k = 0; k < count; ++k) {
            Vec u(n);
            for (int i = 0; i < n; ++i) u(i) = cplx(nd(rng), nd(rng));
            states.push_back(u / u.norm());
        }
    } else if (sel.is_array()) {
        for (const auto& v : sel) {
            Vec u(n);
            if (static_cast<int>(v.size()) != n) throw ValidationError("settings: state dimension mismatch");
            for (int i = 0; i < n; ++i) u(i) = json_to_cplx(v[i]);
            if (u.norm() == 0.0) throw ValidationError("settings: zero state");
            states.push_back(u / u.norm());
        }
    } else {
        throw ValidationError("settings: evolution.states must be \"basis\", \"random\" or a list of vectors");
    }
    return states;
}

json run_evolution(Context& ctx) {
    const DissipativeSystem& s = ctx.system();
    const json st = ctx.settings(Analysis::evolution);
    PropagationPlan plan;
    plan.horizon = st.value("horizon", -1.0);
    plan.accuracy_target = tolerance(ctx.cfg, "accuracy_target", plan.accuracy_target);
    const int samples = st.value("samples", 201);
    const Propagator prop(s, plan.accuracy_target);
    json table = json::array(), curves = json::array();
    const auto states = evolution_states(ctx, st);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const DecayEstimate d = absorption_probability(prop, s, states[k], plan);
        const SmoothingResult sm = smoothing_integral(s, states[k], plan.horizon);
        table.push_back({{"state", k},
                         {"p_abs", num(d.p_abs)},
                         {"converged", d.converged},
                         {"tail_rate", num(d.tail_rate)},
                         {"limit_norm", num(d.limit_norm)},
                         {"horizon", num(d.horizon_used)},
                         {"smoothing", {{"value", num(sm.value)}, {"lower", num(sm.lower)}, {"upper", num(sm.upper)}}}});
        const DecayCurve c = decay_curve(prop, s, states[k], d.horizon_used, samples);
        curves.push_back({{"state", k}, {"t", nums(c.t)}, {"norm", nums(c.norm)}, {"c_integrand", nums(c.c_integrand)}});
    }
    ctx.curves["decay"] = curves;
    return {{"method", to_string(prop.method())}, {"p_abs", table}};
}

SingularityScan do_scan(Context& ctx, const json& st, bool radial_native) {
    const std::pair<double, double> iv = pair_of(st, "interval", {0.05, 4.0});
    const std::vector<double> eps = st.value("eps", default_eps());
    ScanOptions opt;
    opt.grid = st.value("grid", opt.grid);
    if (radial_native) return singularity_scan(ctx.radial_system(), iv, eps, opt);
    return singularity_scan(ctx.system(), iv, eps, opt);
}

json scan_block(const SingularityScan& sc) {
    json sing = json::array(), peaks = json::array();
    for (const auto& s : sc.singularities)
        sing.push_back({{"lambda", num(s.lambda)}, {"nu", s.nu}, {"slope", num(s.slope)}, {"r_squared", num(s.r_squared)},
                        {"status", s.status}});
    for (const auto& p : sc.regular_peaks) peaks.push_back({{"lambda", num(p.lambda)}, {"slope", num(p.slope)}});
    return {{"singularities", sing},
            {"regular_peaks", peaks},
            {"sup_bound_tail", num(sc.sup_bound_tail)},
            {"grid_step", num(sc.grid_step)}};
}

json scan_curve(const SingularityScan& sc) {
    json norms = json::array();
    for (const auto& row : sc.norms) norms.push_back(nums(row));
    return {{"lambda", nums(sc.lambda_grid)}, {"eps", nums(sc.eps_schedule)}, {"norms", norms}};
}

json run_scan(Context& ctx) {
    const bool radial = ctx.cfg.model.kind == "radial";
    const SingularityScan sc = do_scan(ctx, ctx.settings(Analysis::singularity_scan), radial);
    ctx.curves["scan"] = scan_curve(sc);
    json out = scan_block(sc);
    out["model"] = radial ? "radial (Nyström)" : to_string(ctx.system().model_tag());
    return out;
}

json run_projections(Context& ctx) {
    const json st = ctx.settings(Analysis::projections);
    const std::pair<double, double> iv = pair_of(st, "interval", {0.5, 1.5});
    StoneOptions opt;
    opt.compute_adjoint = st.value("adjoint", true);
    opt.cauchy_tol = tolerance(ctx.cfg, "cauchy_tol", opt.cauchy_tol);
    const IntervalProjection e = spectral_projection(ctx.system(), iv, opt);
    json trace = json::array();
    for (const auto& p : e.eps_trace)
        trace.push_back({{"eps", num(p.eps)}, {"max_change", num(p.max_change)}, {"norm", num(p.norm)}});
    return {{"interval", {num(iv.first), num(iv.second)}},
            {"trace", z(e.matrix.trace())},
            {"idempotency_defect", num(e.idempotency_defect)},
            {"commutation_defect", num(e.commutation_defect)},
            {"adjoint_defect", num(e.adjoint_defect)},
            {"unresolved_modes", e.unresolved_modes},
            {"method", e.method},
            {"eps_trace", trace},
            {"notes", e.notes}};
}

json verdict_block(const CompletenessVerdict& v) {
    json out{{"verdict", v.verdict},
             {"sigma_min_restricted", num(v.sigma_min_restricted)},
             {"principal_angles", nums(v.principal_angles)},
             {"notes", v.notes}};
    if (v.witness)
        out["witness"] = {{"exponent", num(v.witness->exponent)},
                          {"eps", nums(v.witness->eps)},
                          {"integrals", nums(v.witness->integrals)},
                          {"window", {num(v.witness->window.first), num(v.witness->window.second)}},
                          {"notes", v.witness->notes}};
    return out;
}

json run_scattering(Context& ctx) {
    const DissipativeSystem& s = ctx.system();
    const SubspaceDecomposition& dec = ctx.decomposition();
    const json st = ctx.settings(Analysis::scattering);
    WaveOptions wo;
    wo.decomposition = &dec;
    wo.converged_tol = tolerance(ctx.cfg, "converged_tol", wo.converged_tol);
    const bool radial = ctx.cfg.model.kind == "radial";
    json out;
    if (radial) {
        // half-line discretization: no free region behind r = 0 for packets, so the
        // verdict rests on the Nyström singularity scan and the divergence witness
        json scan_settings = st.value("scan", json::object());
        const SingularityScan sc = do_scan(ctx, scan_settings, true);
        VerdictOptions vo;
        vo.sigma_min = tolerance(ctx.cfg, "sigma_min", vo.sigma_min);
        vo.angle = tolerance(ctx.cfg, "angle", vo.angle);
        const CompletenessVerdict v = completeness_verdict(s, dec, nullptr, sc, vo, &ctx.radial_system());
        ctx.verdict = v;
        out["scan"] = scan_block(sc);
        if (!ctx.curves.contains("scan")) ctx.curves["scan"] = scan_curve(sc);
        ctx.verdicts["completeness"] = verdict_block(v);
        return out;
    }
    const ProbeSet probes = make_probes(s, ProbePlacement::outgoing, wo.probes);
    const double T = st.value("T", std::floor(probes.t_max));
    const WaveOperatorResult w = finite_time_wave(s, T, WaveDirection::minus, probes, wo);
    out["finite_time"] = {{"T", num(T)},
                          {"horizons", nums(w.horizons)},
                          {"cauchy_defects", nums(w.cauchy_defects)},
                          {"norm", num(w.norm)},
                          {"converged", w.converged},
                          {"probes", probes.states.cols()},
                          {"notes", w.notes}};
    ctx.curves["wave"] = {{"T", nums(std::vector<double>(w.horizons.begin() + 1, w.horizons.end()))},
                          {"defect", nums(w.cauchy_defects)}};
    if (st.value("cook", true)) {
        try {
            const WaveOperatorResult c = cook_wave(s, T, probes, wo);
            out["cook"] = {{"reference_defect", num(c.reference_defect)}, {"notes", c.notes}};
        } catch (const Error& e) {
            out["cook"] = {{"error", e.what()}};
        }
    }
    out["intertwining_defect"] = num(intertwining_defect(s, T, probes));
    const KernelLaw kl = kernel_law(s, dec, st.value("kernel_horizon", -1.0));
    out["kernel_law"] = {{"max_norm_hb", num(kl.max_norm_hb)}, {"max_norm_hp", num(kl.max_norm_hp)},
                         {"horizon", num(kl.horizon)}};
    if (st.value("verdict", true)) {
        json scan_settings = st.value("scan", json::object());
        if (!scan_settings.contains("interval")) {
            const double top = s.lattice() ? 4.0 / (s.lattice()->dx * s.lattice()->dx) : 4.0;
            scan_settings["interval"] = {0.05, 0.95 * top};
        }
        const SingularityScan sc = do_scan(ctx, scan_settings, false);
        VerdictOptions vo;
        vo.sigma_min = tolerance(ctx.cfg, "sigma_min", vo.sigma_min);
        vo.angle = tolerance(ctx.cfg, "angle", vo.angle);
        const CompletenessVerdict v = completeness_verdict(s, dec, &w, sc, vo);
        ctx.verdict = v;
        out["scan"] = scan_block(sc);
        if (!ctx.curves.contains("scan")) ctx.curves["scan"] = scan_curve(sc);
        ctx.verdicts["completeness"] = verdict_block(v);
    }
    return out;
}

json zeros_block(const ResonanceSet& set) {
    json zs = json::array();
    for (const auto& q : set.zeros)
        zs.push_back({{"z", z(q.z)}, {"multiplicity", q.multiplicity}, {"residual", num(q.residual)}});
    return {{"zeros", zs},
            {"argument_principle_count", set.argument_principle_count},
            {"boundary_nudges", set.boundary_nudges},
            {"region", {num(set.search_region.re_min), num(set.search_region.re_max), num(set.search_region.im_min),
                        num(set.search_region.im_max)}}};
}

json run_resonances(Context& ctx) {
    const RadialSystem& rs = ctx.radial_system();
    const json st = ctx.settings(Analysis::resonances);
    ComplexRect region;
    if (st.contains("region")) {
        const auto r = st["region"].get<std::vector<double>>();
        if (r.size() != 4) throw ValidationError("settings: resonances.region is [re_min, re_max, im_min, im_max]");
        region = {r[0], r[1], r[2], r[3]};
    }
    const ResonanceSet set = resonance_search(rs, region);
    json out = zeros_block(set);
    json curve = json::array();
    for (const auto& q : set.zeros)
        curve.push_back({{"re_z", num(q.z.real())}, {"im_z", num(q.z.imag())}, {"mult", q.multiplicity}});
    ctx.curves["resonance"] = curve;
    if (st.value("correspondence", true)) {
        json scan_settings = st.value("scan", json::object());
        if (!scan_settings.contains("interval")) {
            // real zeros inside the region map to λ = z₀²
            const double hi = std::max(region.re_min * region.re_min, 0.25);
            scan_settings["interval"] = {0.05, std::min(hi, 0.9 * std::pow(rs.ode.stiffness_guard / rs.R(), 2))};
        }
        const SingularityScan sc = do_scan(ctx, scan_settings, true);
        const CorrespondenceReport rep = correspondence_report(set, sc, tolerance(ctx.cfg, "real_tol", 1e-6));
        json matched = json::array();
        for (const auto& m : rep.matched)
            matched.push_back({{"z0", num(m.z0)}, {"lambda", num(m.lambda)}, {"mismatch", num(m.mismatch)}});
        ctx.verdicts["correspondence"] = {{"consistent", rep.consistent},
                                          {"matched", matched},
                                          {"unmatched_zeros", nums(rep.unmatched_zeros)},
                                          {"unmatched_singularities", nums(rep.unmatched_singularities)},
                                          {"grid_step", num(rep.grid_step)},
                                          {"real_tol", num(rep.real_tol)},
                                          {"notes", rep.notes}};
        out["scan"] = scan_block(sc);
        if (!ctx.curves.contains("scan")) ctx.curves["scan"] = scan_curve(sc);
    }
    return out;
}

json run_lindblad(Context& ctx) {
    const DissipativeSystem& s = ctx.system();
    const json st = ctx.settings(Analysis::lindblad);
    json out;
    const int n = s.dim();
    if (n <= LindbladSuperoperator::kMaxAssembledDim) {
        std::vector<Mat> jumps;
        if (st.contains("jumps")) {
            for (const auto& j : st["jumps"]) jumps.push_back(json_to_matrix(j));
        } else if (s.c_norm() > 0.0) {
            jumps.push_back(std::sqrt(2.0) * s.c());  // ½W*W = C*C
        }
        const LindbladSuperoperator L = build_lindbladian(s, jumps);
        Mat rho = Mat::Zero(n, n);
        rho(0, 0) = 1.0;
        const double t = st.value("t", 1.0);
        const DensityMatrix d = evolve_density(L, rho, t);
        out["superoperator"] = {{"dimension", n},
                                {"jumps", jumps.size()},
                                {"trace_defect", num(L.trace_defect)},
                                {"consistency_defect", num(L.consistency_defect)},
                                {"t", num(t)},
                                {"trace", num(d.trace)},
                                {"min_eig", num(d.min_eig)},
                                {"hermiticity_defect", num(d.hermiticity_defect)}};
        if (n <= 8) out["superoperator"]["choi_min_eig"] = num(choi_min_eigenvalue(L, t));
    }
    if (s.model_tag() == ModelTag::matrix) {
        out["modified_wave"] = {{"error", "Π_pp^⊥ = 0 for finite matrix models: Ω̃₊ vanishes; use a lattice model"}};
        return out;
    }
    const SubspaceDecomposition& dec = ctx.decomposition();
    const CaptureModel cm = capture_model(s, dec);
    const ProbeSet probes = make_probes(s, placement_for(WaveDirection::plus));
    ModifiedWaveOptions mo;
    mo.converged_tol = tolerance(ctx.cfg, "converged_tol", mo.converged_tol);
    mo.verdict = ctx.verdict ? &*ctx.verdict : nullptr;
    mo.require_convergence = false;
    const ModifiedWaveResult r = modified_wave(s, dec, cm, probes.states, probes.t_max, mo);
    json table = json::array();
    for (std::size_t p = 0; p < r.escape.size(); ++p)
        table.push_back({{"probe", p}, {"p_escape", num(r.escape[p])}, {"p_escape_raw", num(r.escape_raw[p])},
                         {"p_abs", num(r.absorbed[p])}});
    ctx.curves["escape"] = table;
    out["modified_wave"] = {{"horizons", nums(r.horizons)},
                            {"cauchy_defects", nums(r.cauchy_defects)},
                            {"converged", r.converged},
                            {"target_eigenvalue", z(cm.target_eigenvalue)},
                            {"escape", table},
                            {"notes", cm.notes + r.notes}};
    if (!r.converged)
        throw NumericalError("modified_wave: Cauchy defect above tolerance at the largest horizon");
    return out;
}

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    std::ostringstream os;
    os << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, unsigned seed, int threads) {
    RunResult res;
    Context ctx{cfg, seed, {}, {}, {}, {}, json::object(), json::object()};
    json analyses = json::object(), runtimes = json::object();
    json failed = json::array();
    bool numerical = false;
    for (Analysis a : cfg.analyses) {
        const std::string name = to_string(a);
        const auto t0 = std::chrono::steady_clock::now();
        json block;
        try {
            switch (a) {
                case Analysis::spectra: block = run_spectra(ctx); break;
                case Analysis::evolution: block = run_evolution(ctx); break;
                case Analysis::singularity_scan: block = run_scan(ctx); break;
                case Analysis::projections: block = run_projections(ctx); break;
                case Analysis::scattering: block = run_scattering(ctx); break;
                case Analysis::resonances: block = run_resonances(ctx); break;
                case Analysis::lindblad: block = run_lindblad(ctx); break;
            }
        } catch (const NumericalError& e) {
            block["error"] = {{"kind", "numerical"}, {"message", e.what()}};
            failed.push_back(name);
            numerical = true;
        } catch (const ValidationError& e) {
            block["error"] = {{"kind", "validation"}, {"message", e.what()}};
            failed.push_back(name);
        } catch (const json::exception& e) {
            block["error"] = {{"kind", "validation"}, {"message", std::string("settings: ") + e.what()}};
            failed.push_back(name);
        }
        analyses[name] = block;
        runtimes[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    res.exit_code = failed.empty() ? 0 : (numerical ? 3 : 2);
    res.report = {{"scenario", cfg.raw},
                  {"analyses", analyses},
                  {"verdicts", ctx.verdicts},
                  {"curves", ctx.curves},
                  {"provenance", {{"toolkit", kToolkitVersion}, {"seed", seed}, {"threads", threads}}},
                  {"status", {{"failed", failed}, {"exit_code", res.exit_code}}}};
    if (threads > 1)
        res.report["provenance"]["notes"] = "analyses and module maps run sequentially in this build";
    res.meta = {{"timestamp", timestamp()}, {"runtimes_s", runtimes}};
    return res;
}

void write_atomic(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw ValidationError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp);
        throw ValidationError("cannot rename into " + p.string() + ": " + ec.message());
    }
}

std::vector<std::string> write_outputs(const ScenarioConfig& cfg, const RunResult& run, const std::string& out_dir) {
    std::vector<std::string> files;
    const fs::path dir(out_dir);
    write_atomic((dir / "report.json").string(), run.report.dump(2) + "\n");
    files.push_back((dir / "report.json").string());
    write_atomic((dir / "report.meta.json").string(), run.meta.dump(2) + "\n");
    files.push_back((dir / "report.meta.json").string());
    for (const auto& c : cfg.csv) {
        if (!run.report["curves"].contains(c)) continue;  // analysis failed or not requested
        for (auto& f : emit_curves(run.report, c, out_dir)) files.push_back(f);
    }
    return files;
}

std::vector<std::string> emit_curves(const json& report, const std::string& selection, const std::string& out_dir) {
    static const std::set<std::string> known = {"decay", "scan", "wave", "resonance", "escape"};
    if (!known.count(selection)) throw ValidationError("unknown curve selection '" + selection + "'");
    if (!report.contains("curves") || !report["curves"].contains(selection) || report["curves"][selection].empty())
        throw ValidationError("no such curve: " + selection);
    const json& c = report["curves"][selection];
    const fs::path dir(out_dir);
    std::vector<std::string> files;
    auto put = [&](const std::string& name, const std::string& body) {
        const std::string p = (dir / name).string();
        write_atomic(p, body);
        files.push_back(p);
    };
    auto cell = [](const json& v) {
        std::ostringstream os;
        if (v.is_number()) os << std::setprecision(17) << v.get<double>();
        else if (v.is_string()) os << v.get<std::string>();
        else os << v.dump();
        return os.str();
    };
    if (selection == "decay") {
        for (const auto& s : c) {
            std::ostringstream os;
            os << "t,norm,c_integrand\n";
            for (std::size_t i = 0; i < s["t"].size(); ++i)
                os << cell(s["t"][i]) << ',' << cell(s["norm"][i]) << ',' << cell(s["c_integrand"][i]) << '\n';
            put("decay_" + std::to_string(s["state"].get<int>()) + ".csv", os.str());
        }
    } else if (selection == "scan") {
        std::ostringstream os;
        os << "lambda,eps,norm\n";
        for (std::size_t e = 0; e < c["eps"].size(); ++e)
            for (std::size_t k = 0; k < c["lambda"].size(); ++k)
                os << cell(c["lambda"][k]) << ',' << cell(c["eps"][e]) << ',' << cell(c["norms"][e][k]) << '\n';
        put("scan.csv", os.str());
    } else if (selection == "wave") {
        std::ostringstream os;
        os << "T,defect\n";
        for (std::size_t k = 0; k < c["T"].size(); ++k) os << cell(c["T"][k]) << ',' << cell(c["defect"][k]) << '\n';
        put("wave.csv", os.str());
    } else if (selection == "resonance") {
        std::ostringstream os;
        os << "re_z,im_z,mult\n";
        for (const auto& r : c) os << cell(r["re_z"]) << ',' << cell(r["im_z"]) << ',' << cell(r["mult"]) << '\n';
        put("resonance.csv", os.str());
    } else {
        std::ostringstream os;
        os << "probe,p_escape,p_escape_raw,p_abs\n";
        for (const auto& r : c)
            os << cell(r["probe"]) << ',' << cell(r["p_escape"]) << ',' << cell(r["p_escape_raw"]) << ','
               << cell(r["p_abs"]) << '\n';
        put("escape.csv", os.str());
    }
    return files;
}

}  // namespace dscat::cli
