#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dscat/models.hpp"

namespace dscat::cli {

using json = nlohmann::json;

enum class Analysis { spectra, evolution, singularity_scan, projections, scattering, resonances, lindblad };

std::string to_string(Analysis a);
Analysis analysis_from_string(const std::string& s);  // ValidationError on unknown names

struct ModelSpec {
    std::string kind;  // matrix | lattice | radial
    json params;
};

struct ScenarioConfig {
    std::string name = "scenario";
    ModelSpec model;
    std::vector<Analysis> analyses;
    std::map<std::string, double> tolerances;
    json settings = json::object();  // per-analysis parameter blocks, keyed by analysis name
    std::string output_dir = "out";
    std::set<std::string> csv;  // decay | scan | wave | resonance | escape
    json raw;                   // the parsed document, echoed into the report
};

// Documented safe ranges for tolerance overrides: {min, max}.
const std::map<std::string, std::pair<double, double>>& tolerance_ranges();

// errors: malformed document, unknown analysis or curve, analysis incompatible with
// the model kind, tolerance outside its range → ValidationError.
ScenarioConfig parse_scenario(const json& doc);
ScenarioConfig load_scenario(const std::string& path);

// Model construction. Radial models need a "lattice" block ({dx, box}) for the
// analyses that work on a DissipativeSystem.
DissipativeSystem build_system(const ModelSpec& spec);
RadialSystem build_radial(const ModelSpec& spec);
bool has_system(const ModelSpec& spec);

// Complex numbers in JSON: a number or [re, im].
cplx json_to_cplx(const json& j);
Mat json_to_matrix(const json& j);
json cplx_to_json(cplx z);
json matrix_to_json(const Mat& m);
json vector_to_json(const Vec& v);

double tolerance(const ScenarioConfig& cfg, const std::string& key, double fallback);

}  // namespace dscat::cli
