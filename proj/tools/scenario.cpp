#include "scenario.hpp"

#include <fstream>
#include <sstream>

#include "dscat/resonances.hpp"

namespace dscat::cli {

namespace {

const std::vector<std::pair<Analysis, std::string>> kNames = {
    {Analysis::spectra, "spectra"},       {Analysis::evolution, "evolution"},
    {Analysis::singularity_scan, "singularity-scan"}, {Analysis::projections, "projections"},
    {Analysis::scattering, "scattering"}, {Analysis::resonances, "resonances"},
    {Analysis::lindblad, "lindblad"}};

const std::set<std::string> kCurves = {"decay", "scan", "wave", "resonance", "escape"};

[[noreturn]] void fail(const std::string& msg) { throw ValidationError("config: " + msg); }

RVec samples(const json& j, int n, const char* what) {
    RVec out = RVec::Zero(n);
    if (j.is_null()) return out;
    if (!j.is_array()) fail(std::string(what) + " must be an array");
    if (!j.empty() && j.front().is_object()) {
        // segments {"from": i, "to": j, "value": x}, inclusive site range
        for (const auto& seg : j) {
            const int a = seg.at("from").get<int>(), b = seg.at("to").get<int>();
            if (a < 0 || b >= n || a > b) fail(std::string(what) + " segment out of range");
            out.segment(a, b - a + 1).setConstant(seg.at("value").get<double>());
        }
        return out;
    }
    if (static_cast<int>(j.size()) != n) fail(std::string(what) + " needs n samples");
    for (int i = 0; i < n; ++i) out(i) = j[i].get<double>();
    return out;
}

}  // namespace

std::string to_string(Analysis a) {
    for (const auto& [k, s] : kNames)
        if (k == a) return s;
    return "?";
}

Analysis analysis_from_string(const std::string& s) {
    for (const auto& [k, name] : kNames)
        if (name == s) return k;
    fail("unknown analysis '" + s + "'");
}

const std::map<std::string, std::pair<double, double>>& tolerance_ranges() {
    static const std::map<std::string, std::pair<double, double>> r = {
        {"tol_real", {1e-14, 1e-4}},        {"cauchy_tol", {1e-12, 1e-4}},
        {"converged_tol", {1e-8, 1e-2}},    {"real_tol", {1e-12, 1e-3}},
        {"im_tol", {1e-12, 1e-6}},          {"accuracy_target", {1e-14, 1e-6}},
        {"sigma_min", {1e-8, 1e-1}},        {"angle", {1e-8, 1e-1}}};
    return r;
}

cplx json_to_cplx(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    fail("complex entries are numbers or [re, im]");
}

Mat json_to_matrix(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) fail("matrices are arrays of rows");
    const auto rows = static_cast<Eigen::Index>(j.size()), cols = static_cast<Eigen::Index>(j.front().size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) fail("ragged matrix");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = json_to_cplx(j[r][c]);
    }
    return m;
}

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

json vector_to_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(cplx_to_json(v(i)));
    return out;
}

json matrix_to_json(const Mat& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cplx_to_json(m(r, c)));
        out.push_back(std::move(row));
    }
    return out;
}

bool has_system(const ModelSpec& spec) {
    return spec.kind != "radial" || spec.params.contains("lattice");
}

RadialSystem build_radial(const ModelSpec& spec) {
    if (spec.kind != "radial") throw ValidationError("radial model required");
    const json& p = spec.params;
    RadialPotential pot;
    if (p.contains("tuned")) {
        const json& t = p["tuned"];
        const std::string family = t.value("family", "pure_absorber");
        const double R = t.value("R", 1.0), v0 = t.value("v0", 0.0);
        RadialFamily fam;
        if (family == "pure_absorber") fam = [R](double w) { return square_well(0.0, w, R); };
        else if (family == "absorbing_well") fam = [R, v0](double w) { return square_well(v0, w, R); };
        else fail("unknown tuning family '" + family + "'");
        const auto range = t.value("range", std::vector<double>{2.0, 4.0});
        if (range.size() != 2) fail("tuned.range needs two values");
        pot = tune_real_resonance(fam, t.value("target_z0", -1.2), {range[0], range[1]}).potential;
    } else if (p.contains("pieces")) {
        std::vector<RadialPiece> pieces;
        for (const auto& q : p["pieces"])
            pieces.push_back({q.at("r0").get<double>(), q.at("r1").get<double>(), q.value("v", 0.0), q.value("w", 0.0)});
        pot = piecewise_potential(std::move(pieces));
    } else if (p.value("free", false)) {
        pot = free_potential(p.value("R", 1.0));
    } else {
        pot = square_well(p.value("v0", 0.0), p.value("w0", 0.0), p.value("R", 1.0));
    }
    RadialGridSpec grid;
    grid.nodes_per_panel = p.value("nodes_per_panel", grid.nodes_per_panel);
    grid.min_nodes = p.value("min_nodes", grid.min_nodes);
    return build_radial_model(pot, grid);
}

DissipativeSystem build_system(const ModelSpec& spec) {
    const json& p = spec.params;
    if (spec.kind == "matrix") {
        const Mat h0 = json_to_matrix(p.at("h0"));
        const Mat v = p.contains("v") ? json_to_matrix(p["v"]) : Mat::Zero(h0.rows(), h0.cols());
        Mat c;
        if (p.contains("c")) c = json_to_matrix(p["c"]);
        else if (p.contains("w")) c = absorption_factor(json_to_matrix(p["w"]));
        else c = Mat::Zero(h0.rows(), h0.cols());
        return build_matrix_system(h0, v, c);
    }
    if (spec.kind == "lattice") {
        const int n = p.at("n").get<int>();
        if (n < 2) fail("lattice n must be >= 2");
        const double dx = p.value("dx", 1.0);
        return build_lattice_system(n, dx, samples(p.value("v", json()), n, "v"), samples(p.value("w", json()), n, "w"));
    }
    if (spec.kind == "radial") {
        if (!p.contains("lattice")) fail("this analysis needs a lattice discretization block for the radial model");
        const RadialSystem rs = build_radial(spec);
        return radial_to_lattice(rs, p["lattice"].at("dx").get<double>(), p["lattice"].at("box").get<double>());
    }
    fail("unknown model kind '" + spec.kind + "'");
}

ScenarioConfig parse_scenario(const json& doc) {
    if (!doc.is_object()) fail("top level must be an object");
    ScenarioConfig cfg;
    cfg.raw = doc;
    cfg.name = doc.value("name", cfg.name);
    if (!doc.contains("model") || !doc["model"].is_object()) fail("missing model block");
    cfg.model.params = doc["model"];
    cfg.model.kind = cfg.model.params.value("kind", "");
    if (cfg.model.kind != "matrix" && cfg.model.kind != "lattice" && cfg.model.kind != "radial")
        fail("model.kind must be matrix, lattice or radial");
    if (!doc.contains("analyses") || !doc["analyses"].is_array() || doc["analyses"].empty())
        fail("analyses must be a non-empty list");
    for (const auto& a : doc["analyses"]) cfg.analyses.push_back(analysis_from_string(a.get<std::string>()));
    for (Analysis a : cfg.analyses) {
        const std::string name = to_string(a);
        if (a == Analysis::resonances && cfg.model.kind != "radial") fail("resonances requires a radial model");
        if (a == Analysis::scattering && cfg.model.kind == "matrix")
            fail("scattering requires a lattice model (or a radial model with a lattice block)");
        const bool native = a == Analysis::resonances || a == Analysis::singularity_scan;
        if (!native && !has_system(cfg.model)) fail(name + " on a radial model needs a lattice block {dx, box}");
    }
    if (doc.contains("tolerances")) {
        for (const auto& [k, v] : doc["tolerances"].items()) {
            const auto& ranges = tolerance_ranges();
            const auto it = ranges.find(k);
            if (it == ranges.end()) fail("unknown tolerance '" + k + "'");
            const double x = v.get<double>();
            if (!(x >= it->second.first && x <= it->second.second)) {
                std::ostringstream os;
                os << "tolerance " << k << " = " << x << " outside [" << it->second.first << ", " << it->second.second
                   << "]";
                fail(os.str());
            }
            cfg.tolerances[k] = x;
        }
    }
    if (doc.contains("settings")) {
        if (!doc["settings"].is_object()) fail("settings must be an object");
        cfg.settings = doc["settings"];
    }
    if (doc.contains("output")) {
        const json& o = doc["output"];
        cfg.output_dir = o.value("dir", cfg.output_dir);
        for (const auto& c : o.value("csv", json::array())) {
            const std::string s = c.get<std::string>();
            if (!kCurves.count(s)) fail("unknown curve family '" + s + "'");
            cfg.csv.insert(s);
        }
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot read " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    try {
        return parse_scenario(doc);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

double tolerance(const ScenarioConfig& cfg, const std::string& key, double fallback) {
    const auto it = cfg.tolerances.find(key);
    return it == cfg.tolerances.end() ? fallback : it->second;
}

}  // namespace dscat::cli
