/*
 * pllbeam C API.
 *
 * Every object is an opaque handle created by a *_open/_read/_load/... function and
 * released with the matching *_free. Functions return a pb_status; on failure the
 * thread's last error message is available from pb_last_error(). Strings returned through
 * `char**` are owned by the caller and released with pb_string_free(). `const char*`
 * getters point into the handle and stay valid until it is freed or modified.
 *
 * Positions cross this boundary 0-based; files use 1-based positions.
 */
#ifndef PLLBEAM_H
#define PLLBEAM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PB_API __declspec(dllexport)
#else
#define PB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pb_status {
  PB_OK = 0,
  PB_ERR_INVALID_ARGUMENT = 1,
  PB_ERR_INVALID_RESIDUE = 2,
  PB_ERR_POSITION_OUT_OF_RANGE = 3,
  PB_ERR_POSITION_ALREADY_EDITED = 4,
  PB_ERR_IDENTITY_SUBSTITUTION = 5,
  PB_ERR_LENGTH_MISMATCH = 6,
  PB_ERR_ALPHABET_MISMATCH = 7,
  PB_ERR_PROVIDER_UNAVAILABLE = 8,
  PB_ERR_NOT_SINGLE_SUBSTITUTION = 9,
  PB_ERR_EMPTY_MASK = 10,
  PB_ERR_EDIT_BUDGET_EXCEEDS_MASK = 11,
  PB_ERR_SCORER_FAILURE = 12,
  PB_ERR_POSITION_NOT_IN_TABLE = 13,
  PB_ERR_INSUFFICIENT_PEERS = 14,
  PB_ERR_RETRY_BUDGET_EXHAUSTED = 15,
  PB_ERR_IO = 16,
  PB_ERR_PARSE = 17,
  PB_ERR_INTERNAL = 99
} pb_status;

typedef struct pb_provider pb_provider;
typedef struct pb_candidates pb_candidates;
typedef struct pb_mask pb_mask;
typedef struct pb_objectives pb_objectives;
typedef struct pb_run pb_run;
typedef struct pb_freqtable pb_freqtable;
typedef struct pb_pka pb_pka;

PB_API const char* pb_version(void);
PB_API const char* pb_last_error(void);
PB_API const char* pb_status_name(pb_status status);
PB_API void pb_string_free(char* s);

/* ---- providers ---------------------------------------------------------- */

/* spec: "pssm:FILE", "coupled:FILE" or "remote:URL". */
PB_API pb_status pb_provider_open(const char* spec, pb_provider** out);
PB_API void pb_provider_free(pb_provider* provider);
PB_API const char* pb_provider_name(const pb_provider* provider);
/* {"name", "alphabet", "max_length", "spec", "remote_info"?} */
PB_API pb_status pb_provider_info_json(const pb_provider* provider, char** out);
PB_API void pb_provider_ledger(const pb_provider* provider, uint64_t* logical, uint64_t* physical);
PB_API void pb_provider_reset_ledger(pb_provider* provider);
PB_API void pb_provider_set_memoize(pb_provider* provider, int enabled);

/* Writes a seeded random provider file. kind: "pssm" or "coupled". */
PB_API pb_status pb_provider_write_random(const char* kind, size_t length, uint64_t seed, double field_scale,
                                          double coupling_scale, double self_weight, const char* path);

/* ---- sequences and candidates -------------------------------------------- */

/* Seeds: every record becomes an unedited candidate whose seed_id is its id. */
PB_API pb_status pb_seeds_read_fasta(const char* path, pb_candidates** out);
/* FASTA (.fa/.fasta/.faa) or TSV. `seeds` (nullable) lets FASTA records without an
 * edits= field be compared against their seed= record. */
PB_API pb_status pb_candidates_read(const char* path, const pb_candidates* seeds, pb_candidates** out);
PB_API pb_status pb_candidates_write_tsv(const pb_candidates* candidates, const char* path);
PB_API pb_status pb_candidates_write_fasta(const pb_candidates* candidates, const char* path);
PB_API void pb_candidates_free(pb_candidates* candidates);

PB_API size_t pb_candidates_size(const pb_candidates* candidates);
PB_API const char* pb_candidates_id(const pb_candidates* candidates, size_t index);
PB_API const char* pb_candidates_seed_id(const pb_candidates* candidates, size_t index);
PB_API const char* pb_candidates_sequence(const pb_candidates* candidates, size_t index);
/* The seed the candidate was derived from, recovered by undoing its edits. */
PB_API const char* pb_candidates_seed_sequence(const pb_candidates* candidates, size_t index);
/* "POS:FROM>TO;..." with 1-based positions, "-" when unedited. */
PB_API const char* pb_candidates_edits(const pb_candidates* candidates, size_t index);
PB_API size_t pb_candidates_edit_count(const pb_candidates* candidates, size_t index);
/* NULL when the column is absent. */
PB_API const char* pb_candidates_field(const pb_candidates* candidates, size_t index, const char* column);
/* Adds the column (after existing ones) when new. */
PB_API pb_status pb_candidates_set_field(pb_candidates* candidates, size_t index, const char* column,
                                         const char* value);
/* New set holding rows `indices[0..n)` in that order. */
PB_API pb_status pb_candidates_select(const pb_candidates* candidates, const size_t* indices, size_t n,
                                      pb_candidates** out);

PB_API pb_status pb_mask_read(const char* path, pb_mask** out);
PB_API void pb_mask_free(pb_mask* mask);
PB_API size_t pb_mask_size(const pb_mask* mask);

/* ---- scoring -------------------------------------------------------------- */

/* approximation: "exact", "double-mask", "wt", "nomask-child" or "nomask-template".
 * The template of each candidate is its seed (edits undone); the template-based
 * approximations need at most one substitution, double-mask exactly one. Output arrays
 * hold one entry per candidate; `forward_passes` receives the logical passes spent. */
PB_API pb_status pb_score(pb_provider* provider, const pb_candidates* candidates,
                          const char* approximation, double tau, size_t threads, double* sum_log,
                          double* per_residue, double* pseudo_perplexity, uint64_t* forward_passes);

/* ---- generation ------------------------------------------------------------ */

typedef struct pb_generate_config {
  const char* sampler;    /* "beam", "gibbs", "gibbs-argmax", "denoise" */
  size_t edits;
  size_t beam_size;
  double tau;
  double gumbel_scale;
  uint64_t rng_seed;
  size_t count;           /* per seed */
  size_t retry_factor;
  const char* strategy;   /* "random", "lowest_entropy", "max_probability" */
  int argmax;             /* argmax decoding for gibbs/denoise */
  int dedup;
  size_t threads;
} pb_generate_config;

/* Beam defaults: B=5, tau=1.5, gumbel_scale=1, E=3, count=100, retry_factor=10. */
PB_API void pb_generate_config_default(pb_generate_config* config);

/* mask and objectives are nullable (full-length mask, unguided). */
PB_API pb_status pb_generate(pb_provider* provider, const pb_candidates* seeds, const pb_mask* mask,
                             const pb_generate_config* config, const pb_objectives* objectives, pb_run** out);
PB_API void pb_run_free(pb_run* run);
/* Ranked outputs with columns rank, sum_log, per_residue, pseudo_perplexity,
 * perturbed_score and (guided runs) guidance_score. Borrowed from the run. */
PB_API const pb_candidates* pb_run_outputs(const pb_run* run);
/* Non-zero when some seed received fewer unique outputs than requested. */
PB_API int pb_run_shortfall(const pb_run* run);
/* {"sampler", "provider", "ledger": {...}, "seeds": [{seed_id, requested, achieved, ...}]} */
PB_API pb_status pb_run_summary_json(const pb_run* run, char** out);

/* ---- guidance ---------------------------------------------------------------- */

PB_API pb_status pb_objectives_load(const char* path, pb_objectives** out);
PB_API void pb_objectives_free(pb_objectives* objectives);
/* "sts" or "nds". */
PB_API pb_status pb_objectives_set_aggregation(pb_objectives* objectives, const char* aggregation);
PB_API pb_status pb_objectives_set_tie_break(pb_objectives* objectives, const char* name);
PB_API size_t pb_objectives_count(const pb_objectives* objectives);
PB_API const char* pb_objectives_name(const pb_objectives* objectives, size_t index);
/* 1 for maximize, 0 for minimize, -1 when the name is unknown. */
PB_API int pb_objectives_maximize(const pb_objectives* objectives, const char* name);
/* Raw scores of one objective over every candidate. */
PB_API pb_status pb_objectives_score(const pb_objectives* objectives, const char* name,
                                     const pb_candidates* candidates, double* out);
/* Guided ranking. `sum_logs` (one per candidate) feed the pseudo_perplexity objective.
 * `order` receives candidate indices best first; `rank_score` (nullable) the STS score or
 * the NDS front of each candidate. */
PB_API pb_status pb_rank(const pb_objectives* objectives, const pb_candidates* candidates, const double* sum_logs,
                         size_t* order, double* rank_score);

/* Ranking by one scorer objective alone, best first in its direction; equal scores keep
 * sequence-string order. `scores` (nullable) receives the raw values per candidate. */
PB_API pb_status pb_rank_by(const pb_objectives* objectives, const char* name, const pb_candidates* candidates,
                            size_t* order, double* scores);

/* ---- metrics ------------------------------------------------------------------ */

PB_API pb_status pb_pka_load(const char* path, pb_pka** out);
PB_API void pb_pka_free(pb_pka* pka);
/* pka may be NULL for the built-in table. */
PB_API pb_status pb_isoelectric_point(const pb_pka* pka, const char* sequence, double* out);
/* mode: "intra" or "inter". has_value[i] is 0 when child i has no peers. */
PB_API pb_status pb_pairwise_diversity(const pb_candidates* candidates, const char* mode, double* out,
                                       int* has_value);
PB_API pb_status pb_freqtable_read(const char* path, pb_freqtable** out);
PB_API void pb_freqtable_free(pb_freqtable* table);
PB_API pb_status pb_germline_delta(const pb_candidates* candidates, size_t index, const pb_freqtable* table,
                                   double* out);
/* JSON array of {"class", "start", "end", "text", "detail"} with 1-based spans. */
PB_API pb_status pb_liability_scan(const char* seed, const char* child, size_t* count, char** json_out);
PB_API pb_status pb_region_mutation_count(const pb_candidates* candidates, size_t index, const pb_mask* mask,
                                          size_t* in_mask, size_t* out_mask);

#ifdef __cplusplus
}
#endif

#endif /* PLLBEAM_H */
