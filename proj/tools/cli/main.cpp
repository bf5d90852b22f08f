#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "config.hpp"
#include "runner.hpp"

namespace {

int report(const std::string& kind, const std::string& message, int code) {
    nlohmann::json rec{{"status", "error"}, {"error", kind}, {"message", message}};
    std::cerr << rec.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace uhopt::cli;

    CLI::App app{"Optimal investment with an uncertain time horizon: experiment runner"};
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<unsigned> threads;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "INI config file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    app.add_option("-o,--out-dir", out_dir, "output directory (default $UHOPT_OUT_DIR or .)");
    app.add_option("--seed", seed, "override [run] seed");
    app.add_option("--paths", paths, "override [run] n_paths");
    app.add_option("--threads", threads, "override [run] workers (0: all cores)");
    app.add_flag("-q,--quiet", quiet, "suppress the summary line");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), 2);
    }

    if (out_dir.empty()) {
        const char* env = std::getenv("UHOPT_OUT_DIR");
        out_dir = env && *env ? env : ".";
    }

    try {
        ExperimentConfig config = config_path.empty() ? default_config() : load_config(config_path);
        if (seed) config.seed = *seed;
        if (paths) config.n_paths = *paths;
        if (threads) config.workers = *threads;
        const RunResult result = run_experiment(config, out_dir);
        if (!quiet) std::printf("%s\n", result.summary.c_str());
        return 0;
    } catch (const ConfigError& e) {
        return report("invalid_config", e.what(), 2);
    } catch (const ApiError& e) {
        return report(uhopt_status_name(e.status()), e.what(), 3);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}
