#ifndef COISO_H
#define COISO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Plain-text report.
 */
#define COISO_FORMAT_TEXT 0

/*
 Pretty-printed JSON report.
 */
#define COISO_FORMAT_JSON 1

/*
 Result of every fallible call.
 */
typedef enum CoisoStatus {
  COISO_STATUS_OK = 0,
  COISO_STATUS_NULL_POINTER = 1,
  COISO_STATUS_INVALID_UTF8 = 2,
  COISO_STATUS_USAGE = 3,
  COISO_STATUS_PARSE = 4,
  COISO_STATUS_VALIDATION = 5,
  COISO_STATUS_INTERNAL = 6,
  COISO_STATUS_PANIC = 7,
} CoisoStatus;

/*
 The outcome of running tasks on a scenario. Opaque.
 */
typedef struct CoisoReport CoisoReport;

/*
 A validated scenario. Opaque.
 */
typedef struct CoisoScenario CoisoScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Parses and validates scenario JSON. On success `*out` owns a handle to
 release with [`coiso_scenario_free`].

 # Safety
 `json` is a NUL-terminated string; `out` is writable.
 */
enum CoisoStatus coiso_scenario_from_json(const char *json, struct CoisoScenario **out);

/*
 Loads a built-in scenario by name (`torus-obstructed`, `legendrian-jet`).

 # Safety
 `name` is a NUL-terminated string; `out` is writable.
 */
enum CoisoStatus coiso_scenario_builtin(const char *name, struct CoisoScenario **out);

/*
 Releases a scenario; null is ignored.

 # Safety
 `scenario` is null or a handle from this library not yet freed.
 */
void coiso_scenario_free(struct CoisoScenario *scenario);

/*
 Runs `n_tasks` task labels (`NAME[:ARG]`), or the scenario's defaults when
 `n_tasks` is 0. Per-task failures are part of the report, see
 [`coiso_report_exit_code`].

 # Safety
 `scenario` is a live handle; `tasks` points to `n_tasks` NUL-terminated
 strings (may be null when `n_tasks` is 0); `out` is writable.
 */
enum CoisoStatus coiso_scenario_run(const struct CoisoScenario *scenario,
                                    const char *const *tasks,
                                    size_t n_tasks,
                                    struct CoisoReport **out);

/*
 0 when every task succeeded, otherwise the CLI exit status of the worst
 failure (1 usage or parse, 2 validation, 3 internal). -1 for null.

 # Safety
 `report` is null or a live handle.
 */
int32_t coiso_report_exit_code(const struct CoisoReport *report);

/*
 Number of task entries in the report; 0 for null.

 # Safety
 `report` is null or a live handle.
 */
size_t coiso_report_task_count(const struct CoisoReport *report);

/*
 Renders the report as text or JSON into a new string owned by the caller,
 released with [`coiso_string_free`].

 # Safety
 `report` is a live handle; `out` is writable.
 */
enum CoisoStatus coiso_report_render(const struct CoisoReport *report, int32_t format, char **out);

/*
 Releases a report; null is ignored.

 # Safety
 `report` is null or a handle from this library not yet freed.
 */
void coiso_report_free(struct CoisoReport *report);

/*
 Releases a string returned by this library; null is ignored.

 # Safety
 `s` is null or a string from this library not yet freed.
 */
void coiso_string_free(char *s);

/*
 Message of the last failed call on this thread, or null. Valid until the
 next call into the library on this thread.
 */
const char *coiso_last_error(void);

/*
 Library version, a static string.
 */
const char *coiso_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COISO_H */
