/* C interface to the phishcorr phishing-detection library. */

#ifndef PHISHCORR_H
#define PHISHCORR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PcStatus {
  /**
   * Success; out-pointers are filled in.
   */
  PC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PC_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PC_STATUS_INVALID_UTF8 = 2,
  /**
   * The input could not be parsed or failed validation.
   */
  PC_STATUS_BAD_INPUT = 3,
  /**
   * A file or store could not be read.
   */
  PC_STATUS_IO_ERROR = 4,
  /**
   * The model rejected the input (schema mismatch or similar).
   */
  PC_STATUS_MODEL_ERROR = 5,
  /**
   * The library panicked; the process state is still sound.
   */
  PC_STATUS_INTERNAL_ERROR = 6,
} PcStatus;

/**
 * A loaded classifier plus the feature-extraction configuration it is
 * applied with. Opaque to C.
 */
typedef struct PcModel PcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never freed.
 */
const char *pc_version(void);

/**
 * Message of the calling thread's most recent failure, or null if none.
 * The caller owns the returned string; release it with `pc_string_free`.
 */
char *pc_last_error_message(void);

/**
 * Release a string allocated by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library and not yet
 * freed.
 */
void pc_string_free(char *s);

/**
 * Edit distance between two UTF-8 strings, counted in Unicode scalars.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out_distance` must be writable.
 */
enum PcStatus pc_levenshtein(const char *a, const char *b, uintptr_t *out_distance);

/**
 * Length-normalized string similarity in [0, 1]; 1.0 means equal.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out_similarity` must be writable.
 */
enum PcStatus pc_normalized_similarity(const char *a, const char *b, double *out_similarity);

/**
 * Structural similarity of two HTML documents in [0, 1], compared on
 * their element-tag skeletons (text, attributes, and comments ignored).
 *
 * # Safety
 * `html_a` and `html_b` must be NUL-terminated; `out_similarity` must be
 * writable.
 */
enum PcStatus pc_skeleton_similarity(const char *html_a,
                                     const char *html_b,
                                     double *out_similarity);

/**
 * Extract the 13-value feature vector from an evidence bundle given as
 * JSON. On success `*out_vector_json` holds a JSON object (release with
 * `pc_string_free`).
 *
 * # Safety
 * `bundle_json` must be NUL-terminated; `out_vector_json` must be writable.
 */
enum PcStatus pc_extract_features_json(const char *bundle_json, char **out_vector_json);

/**
 * Load a trained model from a model file written by the `train` command.
 * On success `*out_model` owns the handle; release with `pc_model_free`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out_model` must be writable.
 */
enum PcStatus pc_model_load(const char *path, struct PcModel **out_model);

/**
 * Release a model handle. Null is a no-op.
 *
 * # Safety
 * `model` must be a handle from `pc_model_load` and not yet freed.
 */
void pc_model_free(struct PcModel *model);

/**
 * Score an evidence bundle given as JSON. Writes the phishing probability
 * and the decided label (0 benign, 1 phishing).
 *
 * # Safety
 * `model` must be a live handle; `bundle_json` must be NUL-terminated;
 * both out-pointers must be writable.
 */
enum PcStatus pc_model_predict_bundle_json(const struct PcModel *model,
                                           const char *bundle_json,
                                           double *out_probability,
                                           int32_t *out_label);

/**
 * Score a bundle recorded in a replay store, addressed by its store key.
 *
 * # Safety
 * `model` must be a live handle; `store_root` and `key` must be
 * NUL-terminated; both out-pointers must be writable.
 */
enum PcStatus pc_model_predict_stored(const struct PcModel *model,
                                      const char *store_root,
                                      const char *key,
                                      double *out_probability,
                                      int32_t *out_label);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PHISHCORR_H */
