#ifndef LOGIGAN_H
#define LOGIGAN_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every exported function.
 */
typedef enum LgStatus {
  LG_STATUS_OK = 0,
  LG_STATUS_NULL_POINTER = 1,
  LG_STATUS_INVALID_UTF8 = 2,
  LG_STATUS_INVALID = 3,
  LG_STATUS_CONFIG = 4,
  LG_STATUS_IO = 5,
  LG_STATUS_NUMERIC = 6,
  LG_STATUS_FORMAT = 7,
  LG_STATUS_PARSE = 8,
  LG_STATUS_PANIC = 9,
} LgStatus;

/**
 * BM25 index handle.
 */
typedef struct LgIndex LgIndex;

/**
 * Indicator lexicon handle.
 */
typedef struct LgLexicon LgLexicon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *lg_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *lg_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void lg_string_free(char *s);

/**
 * Loads a lexicon file, or the built-in lexicon when `path` is null.
 *
 * # Safety
 * `path` must be null or a valid string; `out` must be writable.
 */
enum LgStatus lg_lexicon_load(const char *path, struct LgLexicon **out);

/**
 * # Safety
 * `lex` must be null or a handle from [`lg_lexicon_load`].
 */
void lg_lexicon_free(struct LgLexicon *lex);

/**
 * Number of surfaces of a class: 0 conclusion, 1 premise.
 *
 * # Safety
 * `lex` must be a live handle; `out` must be writable.
 */
enum LgStatus lg_lexicon_count(const struct LgLexicon *lex, uint32_t indicator_class, size_t *out);

/**
 * Indicator matches in one sentence as a JSON array of
 * `{"surface", "class", "start", "end"}` (token offsets).
 *
 * # Safety
 * `lex` must be a live handle, `sentence` a valid string, `out_json` writable.
 */
enum LgStatus lg_match_indicators(const struct LgLexicon *lex,
                                  const char *sentence,
                                  char **out_json);

/**
 * Mines one document with default settings and the given sampler seed;
 * returns a JSON array of training examples.
 *
 * # Safety
 * `lex` must be a live handle; strings valid; `out_json` writable.
 */
enum LgStatus lg_mine_document(const struct LgLexicon *lex,
                               const char *doc_id,
                               const char *text,
                               uint64_t seed,
                               char **out_json);

/**
 * Builds a BM25 index over `n` statements.
 *
 * # Safety
 * `statements` must point to `n` valid strings; `out` must be writable.
 */
enum LgStatus lg_index_build(const char *const *statements,
                             size_t n,
                             double k1,
                             double b,
                             struct LgIndex **out);

/**
 * # Safety
 * `path` must be a valid string; `out` must be writable.
 */
enum LgStatus lg_index_load(const char *path, struct LgIndex **out);

/**
 * # Safety
 * `index` must be a live handle; `path` a valid string.
 */
enum LgStatus lg_index_save(const struct LgIndex *index, const char *path);

/**
 * # Safety
 * `index` must be a live handle; `out` must be writable.
 */
enum LgStatus lg_index_len(const struct LgIndex *index, size_t *out);

/**
 * Top-`k` statements for `query` as a JSON array of
 * `{"id", "score", "statement"}`.
 *
 * # Safety
 * `index` must be a live handle; `query` valid; `out_json` writable.
 */
enum LgStatus lg_index_retrieve(const struct LgIndex *index,
                                const char *query,
                                size_t k,
                                char **out_json);

/**
 * # Safety
 * `index` must be null or a handle from this library.
 */
void lg_index_free(struct LgIndex *index);

/**
 * `sum_k p_k ln(p_k / q_k)` over `n` entries.
 *
 * # Safety
 * `p` and `q` must point to `n` doubles; `out` must be writable.
 */
enum LgStatus lg_kl_divergence(const double *p, const double *q, size_t n, double *out);

/**
 * Symmetric lexical entailment score of two statements in `[0, 1]`.
 *
 * # Safety
 * Strings must be valid; `out` must be writable.
 */
enum LgStatus lg_entail_score(const char *gold, const char *pseudo, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOGIGAN_H */
