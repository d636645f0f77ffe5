// main.cpp: command-line front end over the pairloc C API.
//
//   pairloc <command> [--config FILE] [--key value]...
//
// Arguments apply strictly left to right, so a --key after a --config
// overrides the file and a later --config overrides both. Exit codes:
// 0 success, 2 usage/config/input trouble, 3 numeric failure, 4 degenerate
// model, 70 internal error.
#include <cstdio>
#include <cstring>

#include "pairloc.h"

namespace {

const char* const kCommands[] = {"gen-data", "train", "shape-fit", "detect", "eval"};

void print_usage(std::FILE* out) {
    std::fprintf(out,
                 "usage: pairloc <command> [--config FILE] [--key value]...\n"
                 "       pairloc <command> --help\n"
                 "\n"
                 "commands:\n"
                 "  gen-data   generate a synthetic phantom dataset (VVR1 + manifest)\n"
                 "  train      train the detector network (UNC1 checkpoints + loss CSV)\n"
                 "  shape-fit  fit the pair-shape model from a dataset manifest\n"
                 "  detect     run a checkpoint over a dataset, write a detection report\n"
                 "  eval       score a detection report against ground truth\n"
                 "\n"
                 "Settings come from key=value config files (--config, repeatable) and\n"
                 "individual --key value overrides; later arguments win. Run a command\n"
                 "with --help to list its keys.\n");
}

int exit_code_for(plc_status status) {
    switch (status) {
        case PLC_OK:
            return 0;
        case PLC_ERR_ARGUMENT:
        case PLC_ERR_CONFIG:
        case PLC_ERR_FORMAT:
        case PLC_ERR_IO:
            return 2;
        case PLC_ERR_NUMERIC:
            return 3;
        case PLC_ERR_DEGENERATE:
            return 4;
        case PLC_ERR_INTERNAL:
        default:
            return 70;
    }
}

int fail(plc_status status) {
    std::fprintf(stderr, "pairloc: error: %s\n", plc_last_error());
    return exit_code_for(status);
}

plc_status run(const char* command, plc_config* cfg) {
    if (std::strcmp(command, "gen-data") == 0) return plc_run_gen_data(cfg);
    if (std::strcmp(command, "train") == 0) return plc_run_train(cfg);
    if (std::strcmp(command, "shape-fit") == 0) return plc_run_shape_fit(cfg);
    if (std::strcmp(command, "detect") == 0) return plc_run_detect(cfg);
    return plc_run_eval(cfg);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage(stderr);
        return 2;
    }
    const char* command = argv[1];
    if (std::strcmp(command, "--help") == 0 || std::strcmp(command, "-h") == 0 ||
        std::strcmp(command, "help") == 0) {
        print_usage(stdout);
        return 0;
    }
    if (std::strcmp(command, "--version") == 0) {
        std::printf("pairloc %s\n", plc_version());
        return 0;
    }

    bool known = false;
    for (const char* c : kCommands) known = known || std::strcmp(command, c) == 0;
    if (!known) {
        std::fprintf(stderr, "pairloc: unknown command '%s'\n\n", command);
        print_usage(stderr);
        return 2;
    }

    plc_config* cfg = nullptr;
    plc_status status = plc_config_create(command, &cfg);
    if (status != PLC_OK) return fail(status);

    for (int i = 2; i < argc; ++i) {
        const char* arg = argv[i];
        if (std::strncmp(arg, "--", 2) != 0) {
            std::fprintf(stderr, "pairloc %s: expected --key, got '%s'\n", command, arg);
            plc_config_destroy(cfg);
            return 2;
        }
        const char* key = arg + 2;
        if (std::strcmp(key, "help") == 0) {
            const char* text = nullptr;
            status = plc_config_help(cfg, &text);
            if (status != PLC_OK) {
                const int code = fail(status);
                plc_config_destroy(cfg);
                return code;
            }
            std::printf("usage: pairloc %s [--config FILE] [--key value]...\n\nkeys:\n%s",
                        command, text);
            plc_config_destroy(cfg);
            return 0;
        }
        if (i + 1 >= argc) {
            std::fprintf(stderr, "pairloc %s: --%s needs a value\n", command, key);
            plc_config_destroy(cfg);
            return 2;
        }
        const char* value = argv[++i];
        status = std::strcmp(key, "config") == 0 ? plc_config_load_file(cfg, value)
                                                 : plc_config_set(cfg, key, value);
        if (status != PLC_OK) {
            const int code = fail(status);
            plc_config_destroy(cfg);
            return code;
        }
    }

    status = run(command, cfg);
    plc_config_destroy(cfg);
    if (status != PLC_OK) return fail(status);
    return 0;
}
