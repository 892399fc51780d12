/* Minimal consumer of the C API: build an index over a JSONL corpus,
 * rank one query, and print the results.
 *
 * Build (from the repository root, after `cargo build -p seqdep-ffi`):
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      target/debug/libseqdep_ffi.a -lpthread -ldl -lm -o demo
 *   ./demo data/toy/corpus.jsonl "steam engine"
 */
#include <stdio.h>
#include <math.h>

#include "seqdep.h"

int main(int argc, char **argv) {
    if (argc != 3) {
        fprintf(stderr, "usage: %s corpus.jsonl \"query text\"\n", argv[0]);
        return 1;
    }

    SdmIndex *index = NULL;
    if (sdm_index_build_jsonl(argv[1], 0, &index) != SDM_STATUS_OK) {
        fprintf(stderr, "build failed: %s\n", sdm_last_error());
        return 1;
    }
    printf("indexed %llu docs, %llu tokens, window %u (library %s)\n",
           (unsigned long long)sdm_index_doc_count(index),
           (unsigned long long)sdm_index_coll_tokens(index),
           sdm_index_window(index),
           sdm_version());

    const double lambda[3] = {0.8, 0.1, 0.1};
    const double mu[3] = {10.0, 5.0, 20.0};
    SdmRanking *ranking = NULL;
    SdmStatus st = sdm_rank(index, "genSDM", argv[2], lambda, NULL, mu,
                            NULL, NULL, 0, &ranking);
    if (st != SDM_STATUS_OK) {
        fprintf(stderr, "rank failed (%d): %s\n", (int)st, sdm_last_error());
        sdm_index_free(index);
        return 1;
    }

    size_t n = sdm_ranking_len(ranking);
    printf("%zu results for \"%s\"\n", n, argv[2]);
    for (size_t i = 0; i < n && i < 5; i++) {
        printf("  %zu. %-12s %.6f\n", i + 1,
               sdm_ranking_doc_id(ranking, i),
               sdm_ranking_score(ranking, i));
    }

    sdm_ranking_free(ranking);
    sdm_index_free(index);
    return 0;
}
