#ifndef PSYGEN_H
#define PSYGEN_H

/*
 * C interface to the psygen story-generation library. All functions return
 * a status code; 0 is success. On failure the thread-local message from
 * psygen_last_error() describes what went wrong. Strings handed back via
 * out parameters are heap blocks the caller releases with
 * psygen_string_free.
 *
 * Configuration arrives as flat key=value text, one pair per line, '#'
 * comments allowed, later assignments winning. Passing NULL means
 * all-defaults.
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psygen_status {
  PSYGEN_OK = 0,
  PSYGEN_USAGE = 1,
  PSYGEN_IO = 2,
  PSYGEN_DATA = 3,
  PSYGEN_CONFIG = 4,
  PSYGEN_CONTRACT = 5,
  PSYGEN_DIVERGED = 6,
  PSYGEN_INTERNAL = 7
} psygen_status;

/* Short uppercase name of a status code, e.g. "ERR_DATA". Never NULL. */
const char* psygen_status_name(psygen_status s);

/* Message from the calling thread's most recent failure; "" when none. */
const char* psygen_last_error(void);

void psygen_string_free(char* s);

/*
 * Pipeline commands. Each writes its outputs under the given directory or
 * path and, on success, stores the manifest/report JSON in *out_json
 * (ignored when out_json is NULL).
 */
psygen_status psygen_prepare(const char* raw_path, const char* out_dir, const char* cfg_text,
                             char** out_json);
psygen_status psygen_synth(const char* out_dir, const char* cfg_text, char** out_json);
psygen_status psygen_train(const char* data_dir, const char* out_dir, const char* cfg_text,
                           char** out_json);
psygen_status psygen_generate(const char* checkpoint_path, const char* out_path,
                              const char* cfg_text, char** out_json);
psygen_status psygen_evaluate(const char* data_dir, const char* checkpoint_path,
                              const char* out_dir, const char* cfg_text, char** out_json);
psygen_status psygen_ablate_suite(const char* data_dir, const char* checkpoint_path,
                                  const char* out_dir, const char* cfg_text, char** out_json);

/*
 * Loaded model handle for repeated in-process generation. Handles are not
 * thread-safe; open one per thread or serialize calls.
 */
typedef struct psygen_model psygen_model;

psygen_status psygen_model_open(const char* checkpoint_path, psygen_model** out_model);
void psygen_model_close(psygen_model* model);

/* Vocabulary size of the loaded model, or -1 on a NULL handle. */
int psygen_model_vocab_size(const psygen_model* model);

/*
 * Generate one story (and optionally a counterfactual twin) from a JSON
 * request:
 *   {
 *     "leading": "...",            first event text (required)
 *     "protagonist": "...",        (required)
 *     "need_chain": [5 names],     (required; csv string also accepted)
 *     "emotion_chain": [5 names],  (required)
 *     "mentions": [5 strings],     optional, defaults to the protagonist
 *     "beam": 5, "gen_max_len": n, "gen_min_len": n,   optional
 *     "ablations": {"no_pst": false, ...},             optional
 *     "cf_need_chain": [...], "cf_emotion_chain": [...] optional
 *   }
 * Reply JSON: {"events": [5 strings], "flags": {...},
 *              "counterfactual_events": [5 strings]?}.
 */
psygen_status psygen_model_generate(psygen_model* model, const char* request_json,
                                    char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* PSYGEN_H */
