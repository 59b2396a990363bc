#ifndef FLOWFED_H
#define FLOWFED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define FLOWFED_API __declspec(dllexport)
#else
#  define FLOWFED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum flowfed_status {
  FLOWFED_OK = 0,
  FLOWFED_ERR_INVALID_ARGUMENT = 1,
  FLOWFED_ERR_MISSING_FILE = 2,
  FLOWFED_ERR_PARSE = 3,
  FLOWFED_ERR_VALIDATION = 4,
  FLOWFED_ERR_SCHEMA = 5,
  FLOWFED_ERR_TOPOLOGY = 6,
  FLOWFED_ERR_SIMULATION = 7,
  FLOWFED_ERR_NUMERIC = 8,
  FLOWFED_ERR_IO = 9,
  FLOWFED_ERR_BIND = 10,
  FLOWFED_ERR_INTERNAL = 99
} flowfed_status;

typedef struct flowfed_config flowfed_config;
typedef struct flowfed_result flowfed_result;

typedef struct flowfed_round_info {
  int round;
  size_t n_selected;
  double start_s;
  double duration_s;
  double max_s2c_s;
  double global_loss;
  double global_accuracy;
} flowfed_round_info;

typedef void (*flowfed_round_callback)(const flowfed_round_info* info, void* user);

FLOWFED_API const char* flowfed_version(void);

/* Message for the last failing call on this thread; "" if none. */
FLOWFED_API const char* flowfed_last_error(void);

FLOWFED_API flowfed_status flowfed_config_default(flowfed_config** out);
/* Reads fl.toml, net.toml, general.toml from dir. With allow_defaults != 0
   a missing file keeps its built-in defaults. */
FLOWFED_API flowfed_status flowfed_config_load(const char* dir, int allow_defaults,
                                               flowfed_config** out);
FLOWFED_API void flowfed_config_free(flowfed_config* cfg);
FLOWFED_API flowfed_status flowfed_config_set_seed(flowfed_config* cfg, uint64_t seed);
FLOWFED_API uint64_t flowfed_config_seed(const flowfed_config* cfg);
FLOWFED_API flowfed_status flowfed_config_write(const flowfed_config* cfg, const char* dir);

/* Human-readable node/link listing and server->client path table. */
FLOWFED_API flowfed_status flowfed_topology_describe(const flowfed_config* cfg, char** out_text);

/* Runs the experiment writing sinks under out_dir (NULL: no file sinks).
   callback may be NULL; it is invoked once per finished round. */
FLOWFED_API flowfed_status flowfed_run(const flowfed_config* cfg, const char* out_dir,
                                       flowfed_round_callback callback, void* user,
                                       flowfed_result** out);
FLOWFED_API size_t flowfed_result_round_count(const flowfed_result* res);
FLOWFED_API flowfed_status flowfed_result_round(const flowfed_result* res, size_t index,
                                                flowfed_round_info* out);
FLOWFED_API double flowfed_result_end_time(const flowfed_result* res);
FLOWFED_API void flowfed_result_free(flowfed_result* res);

/* Summarizes csv_dir/rounds.csv, writes csv_dir/report.json and returns the
   text rendering. */
FLOWFED_API flowfed_status flowfed_report(const char* csv_dir, char** out_text);

FLOWFED_API void flowfed_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
