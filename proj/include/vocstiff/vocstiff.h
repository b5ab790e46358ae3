#ifndef VOCSTIFF_H
#define VOCSTIFF_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VS_API __declspec(dllexport)
#else
#define VS_API __attribute__((visibility("default")))
#endif

typedef enum vs_status {
  VS_OK = 0,
  VS_INVALID_ARGUMENT = 1,
  VS_NUMERIC_BLOWUP = 2,
  VS_OSCILLATOR_COLLAPSE = 3,
  VS_UNDEFINED_ANGLE = 4,
  VS_SINGULAR_SYSTEM = 5,
  VS_INFEASIBLE_OPERATING_POINT = 6,
  VS_ASSEMBLY = 7,
  VS_SOLVER = 8,
  VS_CONFIG = 9,
  VS_IO = 10,
  VS_INTERNAL = 11
} vs_status;

typedef struct vs_scenario vs_scenario;
typedef struct vs_result vs_result;

/* Message of the last failed call on this thread; empty when none. */
VS_API const char* vs_last_error(void);
VS_API const char* vs_status_name(vs_status status);

/* Scenarios */
VS_API size_t vs_builtin_count(void);
VS_API const char* vs_builtin_name(size_t index); /* NULL when out of range */
VS_API vs_status vs_scenario_builtin(const char* name, vs_scenario** out);
VS_API vs_status vs_scenario_parse(const char* text, vs_scenario** out);
VS_API vs_status vs_scenario_load(const char* path, vs_scenario** out);
/* Applies key = value lines on top of the scenario, same syntax as a file. */
VS_API vs_status vs_scenario_override(vs_scenario* scenario, const char* text);
/* Caller releases the string with vs_string_free. */
VS_API vs_status vs_scenario_serialize(const vs_scenario* scenario, char** out);
VS_API vs_status vs_scenario_save(const vs_scenario* scenario, const char* path);
VS_API const char* vs_scenario_name(const vs_scenario* scenario);
VS_API void vs_scenario_free(vs_scenario* scenario);
VS_API void vs_string_free(char* s);

/* Time-domain runs */
VS_API vs_status vs_run(const vs_scenario* scenario, vs_result** out);
VS_API size_t vs_result_rows(const vs_result* result);
VS_API size_t vs_result_channel_count(const vs_result* result);
VS_API const char* vs_result_channel_name(const vs_result* result, size_t index);
/* Borrowed pointer, valid until vs_result_free. Channel "t" is time. */
VS_API vs_status vs_result_channel(const vs_result* result, const char* name,
                                   const double** data, size_t* length);

typedef struct vs_metrics {
  double sag_percent;
  double p_pre, q_pre;
  double p_post, q_post;
  double p_oscillation_onset;
  double p_oscillation;
  double saturation_duty;
  double last_saturated_time; /* -1 when never saturated */
  size_t freeze_violations;
  double droop_slope;
  size_t plateaus;
} vs_metrics;

VS_API vs_status vs_result_metrics(const vs_result* result, vs_metrics* out);
/* Per-plateau means; index < metrics.plateaus. */
VS_API vs_status vs_result_plateau(const vs_result* result, size_t index, double* p_w,
                                   double* f_hz, double* vz_v);
/* Files are written to a temporary name and renamed, so they are complete or absent. */
VS_API vs_status vs_result_write_csv(const vs_result* result, const char* path);
VS_API vs_status vs_result_write_metrics(const vs_result* result, const char* path);
VS_API void vs_result_free(vs_result* result);

/* Small-signal study */
typedef struct vs_critical_gain {
  int found;
  double k;
  double lo, hi;
  size_t evaluations;
} vs_critical_gain;

/* Eigenvalues over the scenario's analysis range; loci_csv may be NULL. */
VS_API vs_status vs_eig_sweep(const vs_scenario* scenario, const char* loci_csv,
                              vs_critical_gain* out);
/* Eigenvalues at a single k, sorted by descending real part. Writes up to capacity
   pairs into re/im and the full count into count. */
VS_API vs_status vs_eigenvalues(const vs_scenario* scenario, double k, double* re, double* im,
                                size_t capacity, size_t* count);

/* Droop characteristics */
VS_API vs_status vs_droop_curves(const vs_scenario* scenario, const char* csv_path);

typedef struct vs_k_selection {
  int feasible;
  double k;
  double k_max;
  char binding[64];
} vs_k_selection;

/* k_max <= 0 uses the critical gain of the scenario's study. table_csv may be NULL. */
VS_API vs_status vs_select_k(const vs_scenario* scenario, double k_max, const char* table_csv,
                             vs_k_selection* out);

#ifdef __cplusplus
}
#endif

#endif
