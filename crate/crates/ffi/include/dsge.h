#ifndef DSGE_H
#define DSGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsgeStatus {
  DSGE_STATUS_OK = 0,
  DSGE_STATUS_NULL_POINTER = 1,
  DSGE_STATUS_INVALID_UTF8 = 2,
  DSGE_STATUS_GRAMMAR = 3,
  DSGE_STATUS_GENOTYPE = 4,
  DSGE_STATUS_REPAIR_NEEDED = 5,
  DSGE_STATUS_PHENOTYPE = 6,
  DSGE_STATUS_DIMENSION_MISMATCH = 7,
  DSGE_STATUS_INVALID_ARGUMENT = 8,
  DSGE_STATUS_PANIC = 9,
} DsgeStatus;

/**
 * A parsed grammar.
 */
typedef struct DsgeGrammar DsgeGrammar;

/**
 * A parsed network.
 */
typedef struct DsgeNetwork DsgeNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread. Empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *dsge_last_error(void);

/**
 * Library version as a static string.
 */
const char *dsge_version(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void dsge_string_free(char *s);

/**
 * Parse BNF grammar text.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DsgeStatus dsge_grammar_parse(const char *source, struct DsgeGrammar **out);

/**
 * # Safety
 * `grammar` must come from [`dsge_grammar_parse`] and not have been freed.
 */
void dsge_grammar_free(struct DsgeGrammar *grammar);

/**
 * Number of nonterminals, or 0 for a null handle.
 *
 * # Safety
 * `grammar` must be null or a live handle.
 */
size_t dsge_grammar_nonterminal_count(const struct DsgeGrammar *grammar);

/**
 * Map a genotype in nested-list text form to its phenotype.
 *
 * `max_depths` may be null for no limits. When `use_seed` is false any
 * needed repair fails with `DSGE_STATUS_REPAIR_NEEDED`. If
 * `out_genotype` is not null it receives the possibly repaired genotype.
 *
 * # Safety
 * String arguments must be NUL-terminated; `grammar` must be live;
 * `out_phenotype` must be valid; `out_genotype` may be null.
 */
enum DsgeStatus dsge_map_genotype(const struct DsgeGrammar *grammar,
                                  const char *genotype,
                                  const char *max_depths,
                                  size_t n_features,
                                  size_t n_outputs,
                                  bool use_seed,
                                  uint64_t seed,
                                  char **out_phenotype,
                                  char **out_genotype);

/**
 * Parse a phenotype string over `n_inputs` features.
 *
 * # Safety
 * `phenotype` must be NUL-terminated and `out` a valid pointer.
 */
enum DsgeStatus dsge_network_parse(const char *phenotype,
                                   size_t n_inputs,
                                   struct DsgeNetwork **out);

/**
 * # Safety
 * `network` must come from [`dsge_network_parse`] and not have been freed.
 */
void dsge_network_free(struct DsgeNetwork *network);

/**
 * Number of output neurons, or 0 for a null handle.
 *
 * # Safety
 * `network` must be null or a live handle.
 */
size_t dsge_network_output_count(const struct DsgeNetwork *network);

/**
 * Evaluate the network on one input vector, writing one value per
 * output neuron into `outputs` (capacity `outputs_len`).
 *
 * # Safety
 * `inputs` must point to `inputs_len` doubles and `outputs` to
 * `outputs_len` writable doubles.
 */
enum DsgeStatus dsge_network_forward(const struct DsgeNetwork *network,
                                     const double *inputs,
                                     size_t inputs_len,
                                     double *outputs,
                                     size_t outputs_len);

/**
 * Product over both classes of `exp(per-class RMSE)`.
 *
 * # Safety
 * `confidences` and `targets` must each point to `len` values and `out`
 * must be valid.
 */
enum DsgeStatus dsge_fitness(const double *confidences,
                             const uint8_t *targets,
                             size_t len,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSGE_H */
