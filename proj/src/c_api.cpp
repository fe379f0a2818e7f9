#include "optlab.h"

#include <string>
#include <thread>

#include "optlab/harness.hpp"

using optlab::harness::ReproResult;
using optlab::harness::Reproduction;

struct optlab_experiment {
    Reproduction repro;
    bool from_user_config = false;
};

struct optlab_result {
    ReproResult result;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

extern "C" {

int optlab_catalog_count(void) {
    return static_cast<int>(optlab::harness::list_reproductions().size());
}

const char* optlab_catalog_name(int index) {
    const auto& cat = optlab::harness::list_reproductions();
    if (index < 0 || index >= static_cast<int>(cat.size())) return nullptr;
    return cat[static_cast<std::size_t>(index)].name.c_str();
}

const char* optlab_catalog_description(int index) {
    const auto& cat = optlab::harness::list_reproductions();
    if (index < 0 || index >= static_cast<int>(cat.size())) return nullptr;
    return cat[static_cast<std::size_t>(index)].description.c_str();
}

optlab_experiment* optlab_experiment_from_catalog(const char* name) {
    try {
        return new optlab_experiment{optlab::harness::reproduction_by_name(name ? name : "")};
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

optlab_experiment* optlab_experiment_from_config(const char* json_text) {
    try {
        auto spec = optlab::harness::parse_config(json_text ? json_text : "");
        Reproduction r;
        r.name = spec.experiment_id;
        r.description = "user config";
        r.specs.push_back(std::move(spec));
        return new optlab_experiment{std::move(r), true};
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

void optlab_experiment_free(optlab_experiment* exp) { delete exp; }

int optlab_validate_config(const char* json_text) {
    try {
        auto spec = optlab::harness::parse_config(json_text ? json_text : "");
        auto built = optlab::harness::build_experiment(spec);
        auto report = optlab::harness::certify_instance(built.instance);
        if (!report.pass) {
            set_error("instance certification failed for " + report.instance_id);
            return OPTLAB_E_CONFIG;
        }
        return OPTLAB_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return OPTLAB_E_CONFIG;
    }
}

optlab_result* optlab_run(const optlab_experiment* exp, int workers) {
    if (!exp) {
        set_error("null experiment handle");
        return nullptr;
    }
    try {
        ReproResult res;
        if (exp->from_user_config)
            res = optlab::harness::run_config(exp->repro.specs.at(0), resolve_workers(workers));
        else
            res = optlab::harness::run_reproduction(exp->repro, resolve_workers(workers));
        return new optlab_result{std::move(res)};
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    }
}

void optlab_result_free(optlab_result* res) { delete res; }

int optlab_result_failed_verdicts(const optlab_result* res) {
    if (!res) return -1;
    return optlab::harness::count_failures(res->result);
}

int optlab_result_emit(const optlab_result* res, const char* out_dir) {
    if (!res || !out_dir) {
        set_error("null result handle or output directory");
        return OPTLAB_E_INTERNAL;
    }
    try {
        optlab::harness::emit_all(res->result, out_dir);
        return OPTLAB_OK;
    } catch (const optlab::IoError& e) {
        set_error(e.what());
        return OPTLAB_E_IO;
    } catch (const std::exception& e) {
        set_error(e.what());
        return OPTLAB_E_INTERNAL;
    }
}

const char* optlab_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
