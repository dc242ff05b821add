#include "mass_lab/build_info.hpp"
#include "mass_lab/cli_reports.hpp"
#include "mass_lab/kernels.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

int thread_count_from_env() {
    const char* env = std::getenv("MASS_LAB_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) {
        std::cerr << "mass-lab: ignoring MASS_LAB_THREADS=" << env << " (expected a positive integer)\n";
        return 0;
    }
    return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace mass_lab;

    CLI::App app{"Numerical experiments on asymptotically flat three-manifolds", "mass-lab"};
    app.set_version_flag("--version", std::string(build_info::version));
    std::string experiment_name;
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string names;
    for (const auto& n : experiment_names()) names += (names.empty() ? "" : " | ") + n;
    app.add_option("experiment", experiment_name, names)->required();
    app.add_option("--config", config_path, "experiment configuration (JSON)")->required();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "overrides the seed in the configuration");
    app.add_option("--threads", threads, "worker threads (default: MASS_LAB_THREADS, then all cores)")
        ->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const auto experiment = parse_experiment(experiment_name);
    if (!experiment) {
        std::cerr << "mass-lab: unknown experiment \"" << experiment_name << "\"";
        if (auto hint = nearest_match(experiment_name, experiment_names())) std::cerr << "; did you mean \"" << *hint << "\"?";
        std::cerr << "\nexperiments: " << names << "\n";
        return 2;
    }

    if (threads == 0) threads = thread_count_from_env();
    if (threads > 0) kernels::set_thread_count(threads);

    ConfigResult loaded = validate_config(config_path, experiment);
    if (!loaded.ok()) {
        std::cerr << "mass-lab: invalid configuration " << config_path << "\n";
        for (const auto& issue : loaded.issues)
            std::cerr << "  " << (issue.path.empty() ? "/" : issue.path) << ": " << issue.message << "\n";
        return 2;
    }
    ExperimentConfig config = std::move(*loaded.config);
    if (seed) config.seed = *seed;

    try {
        const RunReport report = run_experiment(config);
        const EmittedFiles files = emit_report(report, out_dir, config.stem, config.emit_csv, config.emit_json);
        for (const auto& p : files.paths) std::cout << p.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        const int code = exit_code_for(std::current_exception());
        std::cerr << "mass-lab: " << to_string(config.experiment) << " failed: " << e.what() << "\n";
        return code;
    }
}
