#ifndef PGD_H
#define PGD_H

/* C interface of the PGD instance-depth library.
 *
 * Every function that can fail returns a pgd_status; on failure the
 * thread-local message behind pgd_last_error() describes the cause and the
 * out-parameters are left untouched. Strings returned through char** are
 * heap-allocated and must be released with pgd_string_free(). Handles are
 * opaque and must be released with their matching *_free() function.
 */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PGD_API __declspec(dllexport)
#else
#define PGD_API __attribute__((visibility("default")))
#endif

typedef enum pgd_status {
    PGD_OK = 0,
    PGD_ERR_PARSE = 2,  /* malformed input, config or arguments */
    PGD_ERR_DOMAIN = 3, /* numerically or geometrically invalid data */
    PGD_ERR_USAGE = 4   /* API misuse such as a null handle */
} pgd_status;

typedef struct pgd_config pgd_config;   /* run configuration */
typedef struct pgd_records pgd_records; /* header + object records */
typedef struct pgd_report pgd_report;   /* evaluation result */

/* Library version as "major.minor.patch". Static storage, do not free. */
PGD_API const char* pgd_version(void);

/* Message of the most recent failure on this thread. Valid until the next
 * library call on the same thread. Static storage, do not free. */
PGD_API const char* pgd_last_error(void);

/* Release a string returned through a char** out-parameter. */
PGD_API void pgd_string_free(char* text);

/* ----- configuration ----- */

PGD_API pgd_config* pgd_config_create(void);
PGD_API void pgd_config_free(pgd_config* cfg);

/* Merge a sectioned key=value file into cfg. */
PGD_API pgd_status pgd_config_load(pgd_config* cfg, const char* path);

/* Set one value by dotted key, e.g. "quantizer.method". */
PGD_API pgd_status pgd_config_set(pgd_config* cfg, const char* key, const char* value);

/* Read one value by dotted key. */
PGD_API pgd_status pgd_config_get(const pgd_config* cfg, const char* key, char** out);

/* Full configuration in the file format, suitable for pgd_config_load. */
PGD_API pgd_status pgd_config_dump(const pgd_config* cfg, char** out);

/* ----- record files ----- */

PGD_API pgd_status pgd_records_read(const char* path, pgd_records** out);
PGD_API pgd_status pgd_records_parse(const char* text, pgd_records** out);
PGD_API pgd_status pgd_records_write(const pgd_records* records, const char* path);
PGD_API pgd_status pgd_records_to_text(const pgd_records* records, char** out);
PGD_API pgd_records* pgd_records_clone(const pgd_records* records);
PGD_API void pgd_records_free(pgd_records* records);

/* Number of object records, or -1 when records is null. */
PGD_API long pgd_records_count(const pgd_records* records);

/* ----- pipeline ----- */

/* Draw a synthetic ground-truth file and its corrupted predictions. */
PGD_API pgd_status pgd_simulate(const pgd_config* cfg, pgd_records** gt_out,
                                pgd_records** pred_out);

/* Probabilistic decode: fills dp, sd and dl on every prediction. */
PGD_API pgd_status pgd_decode(pgd_records* records, const pgd_config* cfg);

/* Geometric propagation and global fusion: fills dg, d and nogeo. When
 * edge_dump_out is non-null it receives the per-edge diagnostics table. */
PGD_API pgd_status pgd_propagate(pgd_records* records, const pgd_config* cfg,
                                 char** edge_dump_out);

/* Detection metrics of pred against gt. */
PGD_API pgd_status pgd_evaluate(const pgd_records* gt, const pgd_records* pred,
                                const pgd_config* cfg, pgd_report** out);

/* Replace the fields named by subset (e.g. "depth+size", "all", "none")
 * with their ground-truth values, matching records by frame and id. */
PGD_API pgd_status pgd_apply_oracles(pgd_records* pred, const pgd_records* gt,
                                     const char* subset);

/* One table row (label, mAP, NDS) per oracle subset. */
PGD_API pgd_status pgd_oracle_table(const pgd_records* gt, const pgd_records* pred,
                                    const pgd_config* cfg, const char* const* subsets,
                                    int subset_count, char** out);

/* Plot-ready table. kind is one of "pr", "weights-hist", "weights-scatter"
 * or "depth-error-vs-depth". gt may be null for the weight plots. */
PGD_API pgd_status pgd_plot_data(const pgd_records* gt, const pgd_records* records,
                                 const pgd_config* cfg, const char* kind, char** out);

/* ----- reports ----- */

PGD_API pgd_status pgd_report_text(const pgd_report* report, char** out);
PGD_API pgd_status pgd_report_json(const pgd_report* report, char** out);

/* Look up one metric by key, e.g. "nuscenes.nds". */
PGD_API pgd_status pgd_report_value(const pgd_report* report, const char* key, double* out);
PGD_API void pgd_report_free(pgd_report* report);

/* ----- small pure helpers ----- */

/* Composite detection score from mean AP and the five TP error means. */
PGD_API pgd_status pgd_nds(double mean_ap, double ate, double ase, double aoe, double ave,
                           double aae, double* out);

/* Worst-case propagated depth error f * delta / |v2|. */
PGD_API pgd_status pgd_error_bound(double f, double v2, double delta, double* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PGD_H */
