/* C API for the dilated-RNN engine and architecture-analysis toolkit.
 *
 * All functions return a drnn_status; on any non-OK status,
 * drnn_last_error() describes the failure (thread-local storage).
 * Handles are opaque and must be released with their _free function.
 */
#ifndef DRNN_H
#define DRNN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drnn_status {
    DRNN_OK = 0,
    DRNN_ERR_CONFIG = 1,   /* bad configuration, arguments, or file format */
    DRNN_ERR_VERIFY = 2,   /* a theory-verification check failed */
    DRNN_ERR_NUMERIC = 3,  /* non-finite values or diverged training */
    DRNN_ERR_IO = 4        /* filesystem problems */
} drnn_status;

typedef struct drnn_model drnn_model;

/* Message for the most recent failure on this thread. Never NULL. */
const char* drnn_last_error(void);

/* --- model handles ------------------------------------------------------ */

/* config_json: {"cell":"vanilla|lstm|gru","arch":"dilated|stacked|regular_skip",
 *  "layers":N,"base":M,"start_exponent":L0,"skip_length":S,
 *  "input_dim":D,"hidden":H,"num_classes":C,"seed":N} */
drnn_status drnn_model_create(const char* config_json, drnn_model** out);
drnn_status drnn_model_load(const char* path, drnn_model** out);
drnn_status drnn_model_save(const drnn_model* model, const char* path);
long long drnn_model_param_count(const drnn_model* model);
void drnn_model_free(drnn_model* model);

/* --- commands ------------------------------------------------------------ */

/* Trains per the run-config JSON (see README), writing metrics.csv and the
 * best-validation checkpoint under out_dir. */
drnn_status drnn_train(const char* config_json, const char* out_dir);

/* Evaluates a checkpoint on the task described by the run-config JSON.
 * On success *loss and *accuracy are filled (either may be NULL). */
drnn_status drnn_eval(const char* checkpoint_path, const char* config_json,
                      double* loss, double* accuracy);

/* Architecture analysis: reads an arch-spec JSON file, writes analysis.csv
 * and summary.txt under out_dir. */
drnn_status drnn_analyze(const char* spec_path, const char* out_dir);

/* Runs the theory-verification suites up to max_d layers for each base.
 * The full report is written to report_path (or stdout when NULL).
 * Returns DRNN_ERR_VERIFY when a counterexample is found. */
drnn_status drnn_verify_theory(int max_d, const int* bases, size_t num_bases,
                               const char* report_path);

/* Starting-dilation sweep: trains one model per entry of start_exponents,
 * writing per-config metrics and a combined sweep.csv under out_dir. */
drnn_status drnn_ablate(const char* config_json, const int* start_exponents,
                        size_t num_exponents, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* DRNN_H */
