/* Change detection between two point-cloud epochs: C interface.
 *
 * Objects are opaque handles released with their *_free function. Every
 * function returning cd_status leaves a description of the last failure in
 * cd_last_error() (per thread). */
#ifndef CHANGEDET_CHANGEDET_H
#define CHANGEDET_CHANGEDET_H

#include <stddef.h>
#include <stdint.h>

#if defined(CHANGEDET_BUILDING)
#define CD_API __attribute__((visibility("default")))
#else
#define CD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cd_status {
  CD_OK = 0,
  CD_ERR_INTERNAL = 1,
  CD_ERR_CONFIG = 2,
  CD_ERR_DATA = 3,
  CD_ERR_NUMERIC = 4,
  CD_ERR_ARGUMENT = 5
} cd_status;

typedef struct cd_cloud cd_cloud;
typedef struct cd_model cd_model;

typedef void (*cd_log_fn)(const char* line, void* user);

CD_API const char* cd_last_error(void);
CD_API const char* cd_version(void);

/* Clouds. Format follows the extension: .xyzl carries a 0/1 label column. */
CD_API cd_status cd_cloud_load(const char* path, cd_cloud** out);
CD_API cd_status cd_cloud_create(const double* xyz, size_t count, const uint8_t* labels,
                                 cd_cloud** out);
CD_API cd_status cd_cloud_save(const cd_cloud* cloud, const char* path);
CD_API size_t cd_cloud_size(const cd_cloud* cloud);
CD_API int cd_cloud_has_labels(const cd_cloud* cloud);
/* Copies 3 * size doubles. */
CD_API cd_status cd_cloud_points(const cd_cloud* cloud, double* xyz);
CD_API cd_status cd_cloud_labels(const cd_cloud* cloud, uint8_t* labels);
CD_API void cd_cloud_free(cd_cloud* cloud);

/* Runs driven by a flat "key = value" configuration file. Both write the
 * resolved configuration as config.resolved into out_dir. */
CD_API cd_status cd_synth_run(const char* config_path, const char* out_dir);
CD_API cd_status cd_train_run(const char* config_path, const char* data_dir, const char* out_dir,
                              cd_log_fn log, void* user);

/* Trained model; the checkpoint's .manifest sidecar must sit next to it. */
CD_API cd_status cd_model_load(const char* checkpoint_path, cd_model** out);
/* Returns the T2 cloud labeled with predicted change. */
CD_API cd_status cd_model_predict(cd_model* model, const cd_cloud* t1, const cd_cloud* t2,
                                  cd_cloud** out);
CD_API void cd_model_free(cd_model* model);

/* Nearest-neighbor distance thresholding; labels the T2 cloud. */
CD_API cd_status cd_baseline_c2c(const cd_cloud* t1, const cd_cloud* t2, double threshold,
                                 cd_cloud** out);

typedef struct cd_metric_report {
  double oa;
  double mrecall;
  double mprecision;
  double mf1;
  double miou;
  uint64_t tp;
  uint64_t tn;
  uint64_t fp;
  uint64_t fn;
  int undefined;
} cd_metric_report;

/* Both clouds labeled, same points in the same order. */
CD_API cd_status cd_evaluate(const cd_cloud* pred, const cd_cloud* truth, cd_metric_report* out);
/* snprintf-style: returns the full length, writes at most cap bytes. */
CD_API size_t cd_report_table(const cd_metric_report* report, char* buf, size_t cap);
CD_API size_t cd_report_key_values(const cd_metric_report* report, char* buf, size_t cap);
/* "x y z pred code" with code 0 TN, 1 TP, 2 FN, 3 FP. */
CD_API cd_status cd_export_colors(const cd_cloud* pred, const cd_cloud* truth, const char* path);

/* Full finite-difference suite. *passed is 1 when every check is within
 * tolerance; a failed check also returns CD_ERR_NUMERIC. */
CD_API cd_status cd_gradcheck_run(cd_log_fn log, void* user, int* passed);

#ifdef __cplusplus
}
#endif

#endif
