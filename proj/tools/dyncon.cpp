// dyncon: runs one experiment described by a config file.
//
//   dyncon [KIND] --config PATH [--out DIR] [--threads N] [--verbose]
//
// KIND, when given, must match [experiment] kind. DYNCON_THREADS sets the
// default for --threads.

#include "dyncon/io/config.hpp"
#include "dyncon/io/run.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <thread>

int main(int argc, char** argv) {
    CLI::App app{"Dynamics concentration experiments"};
    app.set_version_flag("--version", std::string(DYNCON_VERSION));

    std::string kind;
    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 1;
    bool verbose = false;

    app.add_option("kind", kind, "Experiment kind; must match the config")
        ->check(CLI::IsMember({"spectrum", "deviation", "sweep", "hoeffding", "consensus-sim", "power-sim", "reduce"}));
    app.add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)")->envname("DYNCON_THREADS");
    app.add_flag("--verbose", verbose, "Progress messages on stderr");
    CLI11_PARSE(app, argc, argv);

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

    dyncon::io::ExperimentConfig cfg;
    try {
        cfg = dyncon::io::load_config(config_path);
    } catch (const dyncon::Error& e) {
        std::cerr << "dyncon: " << config_path << ": " << e.what() << '\n';
        return 2;
    }
    if (!kind.empty() && kind != dyncon::io::to_string(cfg.kind)) {
        std::cerr << "dyncon: subcommand '" << kind << "' does not match config kind '" << to_string(cfg.kind) << "'\n";
        return 2;
    }

    dyncon::io::RunOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.verbose = verbose;
    dyncon::io::ResultManifest manifest;
    try {
        manifest = dyncon::io::run(cfg, opts);
    } catch (const std::exception& e) {
        std::cerr << "dyncon: " << e.what() << '\n';
        return 2;
    }
    for (const auto& err : manifest.errors) std::cerr << "dyncon: error: " << err << '\n';
    for (const auto& flag : manifest.flags) std::cerr << "dyncon: flagged: " << flag << '\n';
    if (verbose)
        for (const auto& [name, value] : manifest.metrics) std::cerr << "  " << name << " = " << value << '\n';
    return manifest.exit_code();
}
