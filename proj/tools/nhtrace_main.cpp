// nhtrace: reproducible experiment runner for the spectral trace library.
//
//   nhtrace <recipe> [--config FILE] [--out-dir DIR] [--threads N] [--no-cache]
//   nhtrace list-recipes
//   nhtrace verify --all [--out-dir DIR] [--no-cache]
//
// Exit codes: 0 all criteria pass, 1 any criterion fails, 2 config or
// runtime error.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "nhtrace/acceptance.hpp"
#include "nhtrace/experiments.hpp"

extern "C" void openblas_set_num_threads(int);

namespace {

void print_report(const nhtrace::ExperimentReport& report) {
    std::printf("recipe %s: %s  (%.1fs)\n", report.recipe.c_str(),
                report.pass() ? "PASS" : "FAIL", report.runtime_seconds);
    for (const auto& c : report.criteria) {
        const char* rel;
        switch (c.mode) {
            case nhtrace::CheckMode::absolute: rel = "=="; break;
            case nhtrace::CheckMode::relative: rel = "~="; break;
            case nhtrace::CheckMode::upper_bound: rel = "<="; break;
            case nhtrace::CheckMode::lower_bound: rel = ">="; break;
            default: rel = "?"; break;
        }
        std::printf("  %s %-58s %.6g %s %.6g  [%s]\n", c.pass ? "ok  " : "FAIL",
                    c.name.c_str(), c.measured, rel, c.expected, c.provenance.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral trace experiments"};
    app.require_subcommand(1);

    // recipe subcommands share one option block
    std::string config_path, out_dir, cache_dir;
    int threads = 1;
    bool no_cache = false;
    std::vector<CLI::App*> recipe_cmds;
    for (const std::string& name : nhtrace::recipe_names()) {
        CLI::App* cmd = app.add_subcommand(name, nhtrace::recipe_description(name));
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--out-dir", out_dir, "output directory (CSV + report.json)");
        cmd->add_option("--cache-dir", cache_dir, "spectral-system cache directory");
        cmd->add_option("--threads", threads, "BLAS thread count");
        cmd->add_flag("--no-cache", no_cache, "do not read or write the system cache");
        recipe_cmds.push_back(cmd);
    }

    CLI::App* list_cmd = app.add_subcommand("list-recipes", "list available recipes");

    CLI::App* verify_cmd = app.add_subcommand("verify", "run the full verification suite");
    bool verify_all = false;
    verify_cmd->add_flag("--all", verify_all, "run every criterion");
    verify_cmd->add_option("--out-dir", out_dir, "output directory");
    verify_cmd->add_option("--cache-dir", cache_dir, "spectral-system cache directory");
    verify_cmd->add_option("--threads", threads, "BLAS thread count");
    verify_cmd->add_flag("--no-cache", no_cache, "do not read or write the system cache");

    CLI11_PARSE(app, argc, argv);
    openblas_set_num_threads(threads > 0 ? threads : 1);

    try {
        if (list_cmd->parsed()) {
            for (const std::string& name : nhtrace::recipe_names())
                std::printf("%-20s %s\n", name.c_str(),
                            nhtrace::recipe_description(name).c_str());
            return 0;
        }
        if (verify_cmd->parsed()) {
            if (!verify_all) {
                std::cerr << "verify: pass --all to run the suite\n";
                return 2;
            }
            nhtrace::AcceptanceOptions options;
            if (!out_dir.empty()) options.out_dir = out_dir;
            if (!cache_dir.empty()) options.cache_dir = cache_dir;
            options.use_cache = !no_cache;
            auto cases = nhtrace::run_acceptance_suite(options);
            nhtrace::print_acceptance(cases, std::cout);
            return nhtrace::all_passed(cases) ? 0 : 1;
        }
        for (std::size_t i = 0; i < recipe_cmds.size(); ++i) {
            if (!recipe_cmds[i]->parsed()) continue;
            const std::string& name = nhtrace::recipe_names()[i];
            nhtrace::ExperimentConfig config = config_path.empty()
                                                   ? nhtrace::default_config(name)
                                                   : nhtrace::load_config(config_path);
            if (config.recipe != name)
                throw nhtrace::config_error("config error: recipe: config file names '" +
                                            config.recipe + "' but the subcommand is '" +
                                            name + "'");
            if (!out_dir.empty()) config.out_dir = out_dir;
            if (!cache_dir.empty()) config.cache_dir = cache_dir;
            if (no_cache) config.use_cache = false;
            if (threads > 0) config.threads = threads;
            openblas_set_num_threads(config.threads);
            nhtrace::ExperimentReport report = nhtrace::run(config);
            print_report(report);
            return report.pass() ? 0 : 1;
        }
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
