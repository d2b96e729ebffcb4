#ifndef EAQA_H
#define EAQA_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EaqaStatus {
  EAQA_STATUS_OK = 0,
  EAQA_STATUS_NULL_POINTER = 1,
  EAQA_STATUS_INVALID_UTF8 = 2,
  EAQA_STATUS_IO = 3,
  EAQA_STATUS_INVALID_INPUT = 4,
  EAQA_STATUS_PROTOCOL = 5,
  EAQA_STATUS_BUFFER_TOO_SMALL = 6,
  EAQA_STATUS_PANIC = 7,
} EaqaStatus;

/**
 * Opaque annotated corpus.
 */
typedef struct EaqaCorpus EaqaCorpus;

/**
 * Opaque event-type ontology.
 */
typedef struct EaqaOntology EaqaOntology;

/**
 * Opaque evaluation report.
 */
typedef struct EaqaReport EaqaReport;

typedef struct EaqaStats {
  size_t documents;
  size_t events;
  size_t arguments;
  size_t intra;
  size_t inter;
} EaqaStats;

typedef struct EaqaScores {
  double precision;
  double recall;
  double f1;
  size_t gold;
  size_t predicted;
  size_t correct;
} EaqaScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *eaqa_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *eaqa_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void eaqa_string_free(char *s);

/**
 * Load a tab-separated ontology (`event_type<TAB>role...`).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EaqaStatus eaqa_ontology_load(const char *path, struct EaqaOntology **out);

/**
 * # Safety
 * `ontology` must be null or a handle from [`eaqa_ontology_load`].
 */
void eaqa_ontology_free(struct EaqaOntology *ontology);

/**
 * Load a JSON-lines corpus, validated against `ontology` when it is not null.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `ontology` null or a live
 * handle, and `out` a valid pointer.
 */
enum EaqaStatus eaqa_corpus_load(const char *path,
                                 const struct EaqaOntology *ontology,
                                 struct EaqaCorpus **out);

/**
 * # Safety
 * `corpus` must be null or a handle from [`eaqa_corpus_load`].
 */
void eaqa_corpus_free(struct EaqaCorpus *corpus);

/**
 * # Safety
 * `corpus` must be a live handle and `out` a valid pointer.
 */
enum EaqaStatus eaqa_corpus_stats(const struct EaqaCorpus *corpus, struct EaqaStats *out);

/**
 * Number of additional instances kept in each of `n_epochs` epochs.
 * `out` must have room for `n_epochs` values.
 *
 * # Safety
 * `out` must point to at least `out_len` writable values.
 */
enum EaqaStatus eaqa_blend_plan(double alpha,
                                size_t n_epochs,
                                size_t n_extra,
                                bool geometric,
                                size_t *out,
                                size_t out_len);

/**
 * Score JSON-lines predictions against `corpus`.
 *
 * # Safety
 * `corpus` must be a live handle, `ontology` null or a live handle,
 * `predictions` a NUL-terminated path and `out` a valid pointer.
 */
enum EaqaStatus eaqa_score(const struct EaqaCorpus *corpus,
                           const char *predictions,
                           const struct EaqaOntology *ontology,
                           struct EaqaReport **out);

/**
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum EaqaStatus eaqa_report_scores(const struct EaqaReport *report, struct EaqaScores *out);

/**
 * Full report as JSON. Release the string with [`eaqa_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a valid pointer.
 */
enum EaqaStatus eaqa_report_json(const struct EaqaReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle from [`eaqa_score`].
 */
void eaqa_report_free(struct EaqaReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EAQA_H */
