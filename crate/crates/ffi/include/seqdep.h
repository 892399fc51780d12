#ifndef SEQDEP_H
#define SEQDEP_H

/* Generated from the seqdep-ffi crate sources; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SdmStatus {
  /**
   * Success; out-parameters are valid.
   */
  SDM_STATUS_OK = 0,
  /**
   * A caller mistake: null pointer, malformed UTF-8, unknown model or
   * mode name, or parameter values outside their domain.
   */
  SDM_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The inputs could not be processed: missing or malformed files,
   * unknown document ids, empty collections.
   */
  SDM_STATUS_DATA_ERROR = 2,
  /**
   * An internal invariant failed; the library state is unharmed but the
   * call did nothing.
   */
  SDM_STATUS_PANIC = 3,
} SdmStatus;

/**
 * Opaque positional index handle. Build or open one, share it freely
 * across threads for reading, and release it with `sdm_index_free`.
 */
typedef struct SdmIndex SdmIndex;

/**
 * Opaque ranked result list for one query, ordered by descending score
 * with ties broken by document id.
 */
typedef struct SdmRanking SdmRanking;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string; never free it.
 */
const char *sdm_version(void);

/**
 * Message for the most recent failure on this thread, empty if none.
 * The pointer stays valid until the next failing call on the same thread;
 * never free it.
 */
const char *sdm_last_error(void);

/**
 * Tokenize a JSONL corpus ({"id", "text"} per line) through the default
 * text pipeline and build an index over it. `window` 0 selects the default
 * co-occurrence width of 8. On success `*out_index` owns the handle.
 */
enum SdmStatus sdm_index_build_jsonl(const char *corpus_path,
                                     uint32_t window,
                                     struct SdmIndex **out_index);

/**
 * Open an index previously written by `sdm_index_save` (or the CLI).
 */
enum SdmStatus sdm_index_open(const char *index_path, struct SdmIndex **out_index);

/**
 * Serialize the index to a file that `sdm_index_open` can read back.
 */
enum SdmStatus sdm_index_save(const struct SdmIndex *index, const char *index_path);

/**
 * Release an index handle. Null is a no-op.
 */
void sdm_index_free(struct SdmIndex *index);

/**
 * Number of indexed documents; 0 for a null handle.
 */
uint64_t sdm_index_doc_count(const struct SdmIndex *index);

/**
 * Total tokens across the collection; 0 for a null handle.
 */
uint64_t sdm_index_coll_tokens(const struct SdmIndex *index);

/**
 * Co-occurrence window width the index was built with; 0 for null.
 */
uint32_t sdm_index_window(const struct SdmIndex *index);

/**
 * Full index statistics as TSV text. On success `*out_tsv` is a fresh
 * NUL-terminated string owned by the caller; release it with
 * `sdm_string_free`.
 */
enum SdmStatus sdm_index_stats_tsv(const struct SdmIndex *index, char **out_tsv);

/**
 * Release a string returned through a `char **` out-parameter.
 * Null is a no-op.
 */
void sdm_string_free(char *s);

/**
 * Score one document for a query under the named model.
 *
 * `model` is one of QL, mrfSDM, genSDM, genNGram, mrfNGram, JM. `query`
 * is raw text run through the same pipeline as the documents. `lambda`
 * points at three mixture weights, `jm` at two nested weights, `mu` at
 * three Dirichlet scales; each may be null to take the default. `mode` is
 * "exact" or "galago_approx" (null for exact), `stopwords_path` an optional
 * stopword file. The score is a natural-log value; `-inf` means the model
 * excludes the document (a weighted component with no possible event).
 */
enum SdmStatus sdm_score(const struct SdmIndex *index,
                         const char *model,
                         const char *query,
                         const double *lambda,
                         const double *jm,
                         const double *mu,
                         const char *mode,
                         const char *stopwords_path,
                         const char *doc_id,
                         double *out_score);

/**
 * Rank documents for a query under the named model; parameters as in
 * `sdm_score`. `k` bounds the candidate pool (0 for the default of 1000).
 * Documents the model excludes are absent from the result. An empty query
 * yields an empty ranking, not an error. On success `*out_ranking` owns
 * the handle; release it with `sdm_ranking_free`.
 */
enum SdmStatus sdm_rank(const struct SdmIndex *index,
                        const char *model,
                        const char *query,
                        const double *lambda,
                        const double *jm,
                        const double *mu,
                        const char *mode,
                        const char *stopwords_path,
                        size_t k,
                        struct SdmRanking **out_ranking);

/**
 * Number of documents in the ranking; 0 for a null handle.
 */
size_t sdm_ranking_len(const struct SdmRanking *ranking);

/**
 * Document id at position `i` (0-based, best first). The pointer borrows
 * from the ranking handle; null when `i` is out of range.
 */
const char *sdm_ranking_doc_id(const struct SdmRanking *ranking, size_t i);

/**
 * Score at position `i`; NaN when `i` is out of range.
 */
double sdm_ranking_score(const struct SdmRanking *ranking, size_t i);

/**
 * Release a ranking handle. Null is a no-op.
 */
void sdm_ranking_free(struct SdmRanking *ranking);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQDEP_H */
