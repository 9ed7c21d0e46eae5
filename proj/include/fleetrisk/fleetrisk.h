#ifndef FLEETRISK_H
#define FLEETRISK_H

#include <stddef.h>

#if defined(FLEETRISK_BUILDING)
#define FR_API __attribute__((visibility("default")))
#else
#define FR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes for the first three values. */
typedef enum fr_status {
  FR_OK = 0,
  FR_ERR_DATA = 1,
  FR_ERR_USAGE = 2,
  FR_ERR_IO = 3,
  FR_ERR_INTERNAL = 4
} fr_status;

typedef struct fr_records fr_records;
typedef struct fr_panel fr_panel;
typedef struct fr_model fr_model;

/* Every `config_json` argument is a RunConfig JSON object; NULL or "" means
 * all defaults. Returned strings are owned by the caller and released with
 * fr_string_free. Output pointers are left untouched on failure. */

FR_API const char* fr_version(void);
/* Message for the last failing call on this thread ("" if none). */
FR_API const char* fr_last_error(void);
FR_API void fr_string_free(char* s);

/* Fully resolved configuration, every key present. */
FR_API fr_status fr_config_resolve(const char* config_json, char** resolved_json);

/* Synthetic fleet from the config's "synth" object: sub-work-order CSV,
 * utilization sidecar CSV and ground-truth JSON. */
FR_API fr_status fr_synth_generate(const char* config_json, char** workorders_csv, char** utilization_csv,
                                   char** truth_json);

/* Sub-work-order export parsing. Row-level problems are collected, not fatal. */
FR_API fr_status fr_records_read(const char* path, const char* config_json, fr_records** out);
FR_API fr_status fr_records_parse(const char* csv_text, const char* config_json, fr_records** out);
FR_API size_t fr_records_count(const fr_records* records);
FR_API size_t fr_records_error_count(const fr_records* records);
/* Canonical CSV of the accepted records. */
FR_API fr_status fr_records_csv(const fr_records* records, char** out);
/* line, field, reason per rejected row. */
FR_API fr_status fr_records_errors_csv(const fr_records* records, char** out);
/* asset_id, week, labor_hours on the panel week grid the config implies. */
FR_API fr_status fr_records_labor_hours_csv(const fr_records* records, const char* config_json, char** out);
FR_API void fr_records_free(fr_records* records);

/* utilization_path may be NULL to use the per-type proxy rates. */
FR_API fr_status fr_panel_build(const fr_records* records, const char* config_json, const char* utilization_path,
                                fr_panel** out);
FR_API fr_status fr_panel_read(const char* path, fr_panel** out);
FR_API fr_status fr_panel_csv(const fr_panel* panel, char** out);
FR_API size_t fr_panel_row_count(const fr_panel* panel);
FR_API size_t fr_panel_vehicle_count(const fr_panel* panel);
FR_API void fr_panel_free(fr_panel* panel);

/* Splits the panel per the config, fits on the train side. The model keeps
 * the split so evaluation and simulation use the same held-out rows. */
FR_API fr_status fr_model_train(const fr_panel* panel, const char* config_json, fr_model** out);
FR_API fr_status fr_model_from_json(const char* model_json, fr_model** out);
FR_API fr_status fr_model_to_json(const fr_model* model, char** out);
FR_API void fr_model_free(fr_model* model);

/* Separation report on the model's held-out rows plus both histograms. */
FR_API fr_status fr_evaluate(const fr_model* model, const fr_panel* panel, char** report_json,
                             char** histogram_true_csv, char** histogram_false_csv);
FR_API fr_status fr_ablate(const fr_panel* panel, const char* config_json, char** ablation_csv,
                           char** ablation_json);
/* Grid search for the configured tree model; best_json holds the winner. */
FR_API fr_status fr_tune(const fr_panel* panel, const char* config_json, char** tune_csv, char** best_json);

/* Proactive and random rollouts over the model's held-out weeks. */
FR_API fr_status fr_simulate(const fr_model* model, const fr_panel* panel, const char* config_json,
                             char** trace_csv, char** hist_proactive_csv, char** hist_random_csv,
                             char** summary_json);
/* Per-type MEL shortfall risk in the configured week (default: last week). */
FR_API fr_status fr_mel(const fr_model* model, const fr_panel* panel, const char* config_json, char** mel_json);
FR_API fr_status fr_mel_risk(const double* probs, size_t n, int mel, int assigned, double* out);

#ifdef __cplusplus
}
#endif

#endif
