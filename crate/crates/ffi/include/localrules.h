#ifndef LOCALRULES_H
#define LOCALRULES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum LrStatus {
  LR_STATUS_OK = 0,
  LR_STATUS_NULL_ARGUMENT = 1,
  LR_STATUS_INVALID_ARGUMENT = 2,
  LR_STATUS_DATA_ERROR = 3,
  LR_STATUS_INTERNAL = 4,
  LR_STATUS_PANIC = 5,
} LrStatus;

/*
 Loaded dataset.
 */
typedef struct LrDataset LrDataset;

/*
 Mined rules plus the bins they refer to.
 */
typedef struct LrRuleSet LrRuleSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *lr_last_error(void);

/*
 Loads a CSV file described by a schema file.

 # Safety
 `csv_path` and `schema_path` must be null or NUL-terminated strings;
 `out` must be null or valid for writes.
 */
enum LrStatus lr_dataset_load(const char *csv_path,
                              const char *schema_path,
                              struct LrDataset **out);

/*
 Generates the synthetic rule-system dataset.

 # Safety
 `out` must be null or valid for writes.
 */
enum LrStatus lr_dataset_synthetic(size_t n,
                                   double noise_rate,
                                   uint64_t seed,
                                   struct LrDataset **out);

/*
 Number of samples, or 0 for a null handle.

 # Safety
 `ds` must be null or a live handle.
 */
size_t lr_dataset_len(const struct LrDataset *ds);

/*
 # Safety
 `ds` must be null or a handle not yet freed.
 */
void lr_dataset_free(struct LrDataset *ds);

/*
 Imputes, quantizes into `n_bins` bins and mines rules up to
 `max_dimension` features.

 # Safety
 `ds` must be a live handle; `out` must be null or valid for writes.
 */
enum LrStatus lr_mine(const struct LrDataset *ds,
                      uint32_t max_dimension,
                      double z_min,
                      uint32_t n_bins,
                      struct LrRuleSet **out);

/*
 Number of rules, or 0 for a null handle.

 # Safety
 `rules` must be null or a live handle.
 */
size_t lr_ruleset_len(const struct LrRuleSet *rules);

/*
 Rules as JSON lines (bin indices plus feature and class names).

 # Safety
 `rules` must be a live handle; `out` must be null or valid for writes.
 */
enum LrStatus lr_ruleset_to_jsonl(const struct LrRuleSet *rules, char **out);

/*
 One readable line per rule, with bin edges in original units.

 # Safety
 `rules` must be a live handle; `out` must be null or valid for writes.
 */
enum LrStatus lr_ruleset_describe(const struct LrRuleSet *rules, char **out);

/*
 # Safety
 `rules` must be null or a handle not yet freed.
 */
void lr_ruleset_free(struct LrRuleSet *rules);

/*
 # Safety
 `s` must be null or a string returned by this library and not yet freed.
 */
void lr_string_free(char *s);

/*
 Rule z-score `sqrt(n) (p - p0) / sqrt(p (1 - p0))`.

 # Safety
 `out` must be null or valid for writes.
 */
enum LrStatus lr_z_score(size_t n, double p, double p0, double *out);

/*
 Class-balanced F1 on a 0 to 100 scale.

 # Safety
 `y_true` and `y_pred` must each point to `n` readable values; `out` must
 be null or valid for writes.
 */
enum LrStatus lr_weighted_f1(const size_t *y_true,
                             const size_t *y_pred,
                             size_t n,
                             size_t n_classes,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCALRULES_H */
