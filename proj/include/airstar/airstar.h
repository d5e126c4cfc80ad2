/* C interface of libairstar. All functions return an airstar_status; on
 * failure airstar_last_error() describes the problem (thread-local, valid
 * until the next call on the same thread). Strings handed out through
 * `char**` parameters are released with airstar_string_free. */
#ifndef AIRSTAR_H
#define AIRSTAR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AIRSTAR_API __declspec(dllexport)
#else
#define AIRSTAR_API __attribute__((visibility("default")))
#endif

typedef enum airstar_status {
  AIRSTAR_OK = 0,
  AIRSTAR_E_INVALID_ARGUMENT = 1,
  AIRSTAR_E_IO = 2,
  AIRSTAR_E_SCHEMA = 3,
  AIRSTAR_E_CONSISTENCY = 4,
  AIRSTAR_E_OUT_OF_REGION = 5,
  AIRSTAR_E_NOT_FOUND = 6,
  AIRSTAR_E_MISSING_GRID = 7,
  AIRSTAR_E_START_BLOCKED = 8,
  AIRSTAR_E_GOAL_BLOCKED = 9,
  AIRSTAR_E_NO_PATH = 10,
  AIRSTAR_E_SMOOTHING_FAILED = 11,
  AIRSTAR_E_NO_TARGET = 12,
  AIRSTAR_E_BACKEND_UNAVAILABLE = 13,
  AIRSTAR_E_INVALID_DEPTH = 14,
  AIRSTAR_E_NO_HUMAN_VISIBLE = 15,
  AIRSTAR_E_TARGET_LOST = 16,
  AIRSTAR_E_DEGENERATE_GEOMETRY = 17,
  AIRSTAR_E_NO_INFORMATIVE_VIEW = 18,
  AIRSTAR_E_PLAN_REJECTED = 19,
  AIRSTAR_E_NO_MATCH = 20,
  AIRSTAR_E_MISSION_FAILED = 21,
  AIRSTAR_E_DECODE = 22,
  AIRSTAR_E_ILLEGAL_TRANSITION = 23,
  AIRSTAR_E_INTERNAL = 100
} airstar_status;

typedef struct airstar_config airstar_config;
typedef struct airstar_session airstar_session;

/* Called once per NDJSON line (no trailing newline). */
typedef void (*airstar_line_cb)(const char* line, void* user);

AIRSTAR_API const char* airstar_version(void);
AIRSTAR_API const char* airstar_last_error(void);
AIRSTAR_API const char* airstar_status_name(int status);
AIRSTAR_API void airstar_string_free(char* s);

/* Config: `path` NULL or "" falls back to $AIRSTAR_CONFIG, then the bundled
 * default, then built-in values. */
AIRSTAR_API int airstar_config_load(const char* path, airstar_config** out);
/* The file that airstar_config_load would read, or "" for built-ins. */
AIRSTAR_API int airstar_config_resolve_path(const char* path, char** out);
AIRSTAR_API int airstar_config_to_json(const airstar_config* cfg, char** out);
AIRSTAR_API void airstar_config_free(airstar_config* cfg);

/* Combined-mode headless session. `scenario` is a path or a bundled scenario
 * name; seed < 0 keeps the scenario seed; `record_path` NULL or "" records
 * nothing. `cfg` may be NULL for defaults. `listener` (may be NULL) receives
 * every client-facing message as it is produced. */
AIRSTAR_API int airstar_session_open(const char* scenario, const airstar_config* cfg, int64_t seed,
                                     const char* record_path, airstar_line_cb listener, void* user,
                                     airstar_session** out);
/* Runs one mission to standby_hover or mission_failed; `report_json` (may be
 * NULL) receives the mission report. A failed mission is still AIRSTAR_OK;
 * read "succeeded" in the report. */
AIRSTAR_API int airstar_session_run_mission(airstar_session* s, const char* text, char** report_json);
/* Current mission phase name, e.g. "standby_hover". */
AIRSTAR_API const char* airstar_session_phase(const airstar_session* s);
AIRSTAR_API void airstar_session_close(airstar_session* s);

/* Replays a record file through `cb`; with realtime != 0 telemetry keeps its
 * original 10 Hz spacing scaled by `speed`. */
AIRSTAR_API int airstar_replay(const char* record_path, int realtime, double speed, airstar_line_cb cb, void* user);
/* Serves a record over /ws and /scenario at original cadence until stopped. */
AIRSTAR_API int airstar_replay_serve(const char* record_path, const char* scenario, const char* host, int port,
                                     double speed);

/* Evaluates a suite (path or bundled name). `report_json` gets the machine
 * report, `table` (may be NULL) a human-readable table. */
AIRSTAR_API int airstar_eval(const char* suite, const airstar_config* cfg, char** report_json, char** table);

/* Serves until airstar_request_stop() or `duration_s` > 0 elapses.
 * mode: "combined", "station" or "onboard" (onboard connects to host:port).
 * port 0 binds an ephemeral port; `host`/`port` NULL/<0 take config values. */
AIRSTAR_API int airstar_serve(const char* mode, const char* scenario, const airstar_config* cfg, const char* host,
                              int port, const char* record_path, int64_t seed, double duration_s);
/* Async-signal-safe. */
AIRSTAR_API void airstar_request_stop(void);

#ifdef __cplusplus
}
#endif

#endif
