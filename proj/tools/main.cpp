#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pipeline.hpp"

using namespace dscat;
using namespace dscat::cli;

namespace {

int run(const std::string& config, const std::string& out, unsigned seed, int threads,
        std::optional<Analysis> only) {
    ScenarioConfig cfg = load_scenario(config);
    if (only) {
        cfg.analyses = {*only};
        // re-validate the model requirements for the forced analysis
        json doc = cfg.raw;
        doc["analyses"] = json::array({to_string(*only)});
        cfg = parse_scenario(doc);
    }
    const std::string dir = out.empty() ? cfg.output_dir : out;
    const RunResult res = run_scenario(cfg, seed, threads);
    for (const auto& f : write_outputs(cfg, res, dir)) std::cout << f << '\n';
    for (const auto& name : res.report["status"]["failed"])
        std::cerr << name.get<std::string>() << ": "
                  << res.report["analyses"][name.get<std::string>()]["error"]["message"].get<std::string>() << '\n';
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissipative scattering laboratory: scenario runner"};
    app.require_subcommand(1);

    std::string config, out, report, select;
    unsigned seed = 7;
    int threads = 1;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (default: output.dir of the config)");
        sub->add_option("--seed", seed, "seed for sampled states and hypothesis checks");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* analyze = app.add_subcommand("analyze", "run every analysis listed in the config");
    common(analyze);
    struct Forced {
        const char* name;
        const char* help;
        Analysis a;
    };
    const Forced forced[] = {{"scan-singularities", "singularity scan only", Analysis::singularity_scan},
                             {"wave-operators", "wave operators and completeness verdict only", Analysis::scattering},
                             {"resonances", "Jost zeros and correspondence only", Analysis::resonances},
                             {"lindblad", "Lindblad layer only", Analysis::lindblad}};
    std::vector<std::pair<CLI::App*, Analysis>> subs;
    for (const auto& f : forced) {
        auto* s = app.add_subcommand(f.name, f.help);
        common(s);
        subs.emplace_back(s, f.a);
    }
    auto* emit = app.add_subcommand("emit-curves", "write CSV curves from an existing report");
    emit->add_option("--report", report, "report.json")->required()->check(CLI::ExistingFile);
    emit->add_option("--select", select, "decay | scan | wave | resonance | escape")->required();
    emit->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*analyze) return run(config, out, seed, threads, std::nullopt);
        for (const auto& [s, a] : subs)
            if (*s) return run(config, out, seed, threads, a);
        if (*emit) {
            std::ifstream in(report);
            const json doc = json::parse(in);
            for (const auto& f : emit_curves(doc, select, out)) std::cout << f << '\n';
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
