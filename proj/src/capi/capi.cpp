// capi.cpp: the extern-C surface: opaque config handles over the pipeline
// commands, with exceptions mapped to status codes and a thread-local error
// message.
#include "pairloc.h"

#include <filesystem>
#include <iostream>
#include <new>
#include <stdexcept>
#include <string>

#include "pipeline/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

constexpr const char* kVersion = "1.0.0";

plc_status fail(plc_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

/// Run fn(), translating the library's exception taxonomy to status codes.
template <typename Fn>
plc_status guarded(Fn&& fn) {
    try {
        fn();
        return PLC_OK;
    } catch (const pairloc::config_error& e) {
        return fail(PLC_ERR_CONFIG, e.what());
    } catch (const pairloc::format_error& e) {
        return fail(PLC_ERR_FORMAT, e.what());
    } catch (const pairloc::divergence_error& e) {
        return fail(PLC_ERR_NUMERIC, e.what());
    } catch (const pairloc::degenerate_error& e) {
        return fail(PLC_ERR_DEGENERATE, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(PLC_ERR_IO, e.what());
    } catch (const std::ios_base::failure& e) {
        return fail(PLC_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(PLC_ERR_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PLC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PLC_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PLC_ERR_INTERNAL, "unknown exception");
    }
}

}  // namespace

struct plc_config {
    pairloc::RunConfig config;
    std::string help_buffer;
};

extern "C" {

const char* plc_version(void) { return kVersion; }

const char* plc_last_error(void) { return g_last_error.c_str(); }

plc_status plc_config_create(const char* command, plc_config** out) {
    if (command == nullptr || out == nullptr)
        return fail(PLC_ERR_ARGUMENT, "plc_config_create: command and out must be non-NULL");
    *out = nullptr;
    return guarded([&] { *out = new plc_config{pairloc::make_run_config(command), {}}; });
}

void plc_config_destroy(plc_config* cfg) { delete cfg; }

plc_status plc_config_load_file(plc_config* cfg, const char* path) {
    if (cfg == nullptr || path == nullptr)
        return fail(PLC_ERR_ARGUMENT, "plc_config_load_file: cfg and path must be non-NULL");
    return guarded([&] { cfg->config.load_file(path); });
}

plc_status plc_config_set(plc_config* cfg, const char* key, const char* value) {
    if (cfg == nullptr || key == nullptr || value == nullptr)
        return fail(PLC_ERR_ARGUMENT, "plc_config_set: cfg, key, and value must be non-NULL");
    return guarded([&] { cfg->config.set(key, value); });
}

plc_status plc_config_help(plc_config* cfg, const char** out_text) {
    if (cfg == nullptr || out_text == nullptr)
        return fail(PLC_ERR_ARGUMENT, "plc_config_help: cfg and out_text must be non-NULL");
    return guarded([&] {
        cfg->help_buffer = cfg->config.help_text();
        *out_text = cfg->help_buffer.c_str();
    });
}

namespace {

plc_status run_command(plc_config* cfg, const char* expected,
                       void (*command)(const pairloc::RunConfig&, std::ostream*)) {
    if (cfg == nullptr) return fail(PLC_ERR_ARGUMENT, "run: cfg must be non-NULL");
    if (cfg->config.command() != expected)
        return fail(PLC_ERR_ARGUMENT, "run: config was created for command '" +
                                          cfg->config.command() + "', not '" + expected + "'");
    return guarded([&] { command(cfg->config, &std::cout); });
}

void run_gen_data(const pairloc::RunConfig& cfg, std::ostream* log) {
    pairloc::cmd_gen_data(cfg, log);
}
void run_train(const pairloc::RunConfig& cfg, std::ostream* log) {
    pairloc::cmd_train(cfg, log);
}

}  // namespace

plc_status plc_run_gen_data(plc_config* cfg) { return run_command(cfg, "gen-data", run_gen_data); }

plc_status plc_run_train(plc_config* cfg) { return run_command(cfg, "train", run_train); }

plc_status plc_run_shape_fit(plc_config* cfg) {
    return run_command(cfg, "shape-fit", pairloc::cmd_shape_fit);
}

plc_status plc_run_detect(plc_config* cfg) {
    return run_command(cfg, "detect", pairloc::cmd_detect);
}

plc_status plc_run_eval(plc_config* cfg) { return run_command(cfg, "eval", pairloc::cmd_eval); }

}  // extern "C"
