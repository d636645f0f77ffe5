/* pairloc.h: C interface to the paired-landmark detection toolkit.
 *
 * The toolkit is driven through opaque config handles. Create one for a
 * command, fill it from key=value files and/or individual overrides (later
 * writers win), then invoke the command. All functions returning plc_status
 * report failure details through plc_last_error(), which is thread-local.
 *
 * Commands and artifacts:
 *   gen-data   synthetic phantom volumes (VVR1) + manifest.json
 *   train      UNC1 network checkpoints + loss CSV
 *   shape-fit  pair-shape model JSON
 *   detect     detection report JSON
 *   eval       evaluation report JSON (optionally with a paired t-test)
 */
#ifndef PAIRLOC_H
#define PAIRLOC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plc_status {
    PLC_OK = 0,
    PLC_ERR_ARGUMENT = 1,   /* precondition violated by a caller-supplied value */
    PLC_ERR_CONFIG = 2,     /* unknown key, unusable value, missing required key */
    PLC_ERR_FORMAT = 3,     /* malformed file content (VVR1, UNC1, JSON, manifest) */
    PLC_ERR_IO = 4,         /* filesystem failure */
    PLC_ERR_NUMERIC = 5,    /* non-finite loss or gradient during training */
    PLC_ERR_DEGENERATE = 6, /* statistical model cannot be built from the data */
    PLC_ERR_INTERNAL = 7    /* unexpected failure; report a bug */
} plc_status;

/* Library version as "major.minor.patch". Never NULL. */
const char* plc_version(void);

/* Message from the most recent failing call on this thread; empty string if
 * none. The buffer stays valid until the next failing call on the thread. */
const char* plc_last_error(void);

typedef struct plc_config plc_config;

/* command is one of "gen-data", "train", "shape-fit", "detect", "eval".
 * On success *out owns a fresh handle; release it with plc_config_destroy. */
plc_status plc_config_create(const char* command, plc_config** out);

/* NULL is allowed and ignored. */
void plc_config_destroy(plc_config* cfg);

/* Merge a key=value file into the config. Keys outside the command's schema
 * fail with PLC_ERR_CONFIG naming the key. */
plc_status plc_config_load_file(plc_config* cfg, const char* path);

/* Set one key, overriding any earlier value from files or prior sets. */
plc_status plc_config_set(plc_config* cfg, const char* key, const char* value);

/* Help text enumerating every key of the handle's command with its default
 * and a one-line description. The buffer is owned by the handle and stays
 * valid until the handle is destroyed. */
plc_status plc_config_help(plc_config* cfg, const char** out_text);

/* Run the handle's command with its current settings. The handle must have
 * been created for the matching command name. Progress lines go to stdout. */
plc_status plc_run_gen_data(plc_config* cfg);
plc_status plc_run_train(plc_config* cfg);
plc_status plc_run_shape_fit(plc_config* cfg);
plc_status plc_run_detect(plc_config* cfg);
plc_status plc_run_eval(plc_config* cfg);

#ifdef __cplusplus
}
#endif

#endif /* PAIRLOC_H */
