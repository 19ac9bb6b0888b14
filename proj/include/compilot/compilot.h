#ifndef COMPILOT_COMPILOT_H
#define COMPILOT_COMPILOT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(COMPILOT_BUILDING_LIBRARY)
#define CP_API __attribute__((visibility("default")))
#else
#define CP_API
#endif

/* Status codes double as CLI exit codes. */
enum cp_status {
  CP_OK = 0,
  CP_ERR_INTERNAL = 1,
  CP_ERR_USAGE = 2,
  CP_ERR_KERNEL_PARSE = 3,
  CP_ERR_PROVIDER = 4,
  CP_ERR_BACKEND = 5,
  CP_ERR_ABORTED = 6,
  CP_ERR_IO = 7
};

typedef struct cp_kernel cp_kernel;
typedef struct cp_config cp_config;

CP_API const char* cp_version(void);

/* Message for the last failed call on this thread; empty after a successful call. */
CP_API const char* cp_last_error(void);

/* One of trace, debug, info, warn, error, off. Logs go to stderr. */
CP_API int cp_set_log_level(const char* level);

/* Frees strings returned through char** out-parameters. */
CP_API void cp_string_free(char* s);

CP_API int cp_kernel_parse(const char* source, cp_kernel** out);
CP_API int cp_kernel_load(const char* path, cp_kernel** out);
CP_API void cp_kernel_free(cp_kernel* kernel);
CP_API int cp_kernel_print(const cp_kernel* kernel, char** out);

/*
 * Configuration is a flat set of dotted keys, e.g. "orchestrator.max_iterations",
 * "backend.mode", "provider.spec", "report.bestof". cp_config_keys lists them all.
 */
CP_API int cp_config_new(cp_config** out);
CP_API void cp_config_free(cp_config* config);
CP_API int cp_config_set(cp_config* config, const char* key, const char* value);
CP_API int cp_config_get(const cp_config* config, const char* key, char** out);
CP_API int cp_config_keys(char** out);
CP_API int cp_config_to_json(const cp_config* config, char** out);

/*
 * Classifies a schedule: validity, legality (with solver parameters) and, when
 * `oracle` is non-zero, an interpreter comparison at reduced parameter sizes.
 * Invalid or illegal schedules are results, not errors.
 */
CP_API int cp_check(const cp_kernel* kernel, const char* schedule, int oracle, const cp_config* config, char** report);

/* Runs one dialogue and writes its run record to record_path. */
CP_API int cp_optimize(const cp_kernel* kernel, const cp_config* config, const char* record_path, char** summary);

/*
 * Re-runs a recorded dialogue with its own transcript as the scripted provider and
 * the recorded configuration. *identical is set to 1 when the new record matches
 * the original byte for byte. output_path may be NULL.
 */
CP_API int cp_replay(const char* record_path, const char* output_path, int* identical, char** summary);

CP_API int cp_campaign(const char* const* kernel_paths, size_t count, int runs, int jobs, const cp_config* config,
                       const char* output_dir, char** summary);

/* Statistics over every *.jsonl record in records_dir; CSV files go to output_dir when non-NULL. */
CP_API int cp_report(const char* records_dir, const cp_config* config, const char* output_dir, char** text);

#ifdef __cplusplus
}
#endif

#endif
