// Command-line front end; talks to the core exclusively through the C API.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "optlab.h"

namespace {

int read_file(const std::string& path, std::string& out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        std::fprintf(stderr, "error: cannot read '%s'\n", path.c_str());
        return OPTLAB_E_IO;
    }
    std::ostringstream ss;
    ss << f.rdbuf();
    out = ss.str();
    return OPTLAB_OK;
}

int run_and_emit(optlab_experiment* exp, const std::string& out_dir, int workers) {
    if (!exp) {
        std::fprintf(stderr, "error: %s\n", optlab_last_error());
        return OPTLAB_E_CONFIG;
    }
    optlab_result* res = optlab_run(exp, workers);
    optlab_experiment_free(exp);
    if (!res) {
        std::fprintf(stderr, "error: %s\n", optlab_last_error());
        return OPTLAB_E_CONFIG;
    }
    const int rc = optlab_result_emit(res, out_dir.c_str());
    if (rc != OPTLAB_OK) {
        std::fprintf(stderr, "error: %s\n", optlab_last_error());
        optlab_result_free(res);
        return rc;
    }
    const int failures = optlab_result_failed_verdicts(res);
    optlab_result_free(res);
    if (failures > 0) {
        std::fprintf(stderr, "%d verdict(s) failed\n", failures);
        return OPTLAB_E_VERDICT;
    }
    return OPTLAB_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optlab: stochastic-gradient convergence laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", repro_name;
    int workers = 0;

    auto* run_cmd = app.add_subcommand("run", "run an experiment described by a JSON config");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--out", out_dir, "output directory")->required();
    run_cmd->add_option("--workers", workers, "worker threads (default: hardware parallelism)");

    auto* repro_cmd = app.add_subcommand("repro", "run a named reproduction from the catalog");
    repro_cmd->add_option("name", repro_name, "reproduction name")->required();
    repro_cmd->add_option("--out", out_dir, "output directory")->required();
    repro_cmd->add_option("--workers", workers, "worker threads (default: hardware parallelism)");

    auto* list_cmd = app.add_subcommand("list", "list the reproduction catalog");

    auto* validate_cmd =
        app.add_subcommand("validate", "parse a config and certify its instance, without running");
    validate_cmd->add_option("--config", config_path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : OPTLAB_E_CONFIG;
    }

    if (list_cmd->parsed()) {
        const int n = optlab_catalog_count();
        for (int i = 0; i < n; ++i)
            std::printf("%-20s %s\n", optlab_catalog_name(i), optlab_catalog_description(i));
        return OPTLAB_OK;
    }
    if (validate_cmd->parsed()) {
        std::string text;
        if (int rc = read_file(config_path, text); rc != OPTLAB_OK) return rc;
        const int rc = optlab_validate_config(text.c_str());
        if (rc != OPTLAB_OK) {
            std::fprintf(stderr, "invalid: %s\n", optlab_last_error());
            return OPTLAB_E_CONFIG;
        }
        std::printf("ok\n");
        return OPTLAB_OK;
    }
    if (run_cmd->parsed()) {
        std::string text;
        if (int rc = read_file(config_path, text); rc != OPTLAB_OK) return rc;
        return run_and_emit(optlab_experiment_from_config(text.c_str()), out_dir, workers);
    }
    return run_and_emit(optlab_experiment_from_catalog(repro_name.c_str()), out_dir, workers);
}
