/* C interface to the satdiff core: symbol-aware LaTeX tokenization, the
 * discrete-diffusion decoder, channel simulation, training and evaluation.
 *
 * Conventions:
 *   - Functions return SATDIFF_OK (0) or a nonzero status; handle-returning
 *     functions return NULL on failure.
 *   - On failure, when `errmsg` is non-NULL, *errmsg receives a malloc'd
 *     description; release it with satdiff_free().
 *   - Every char* output parameter is malloc'd and owned by the caller.
 *   - Corpus arguments are newline-separated lines in the documented text
 *     formats (LaTeX lines, SAT lines `symbol/PATH ...`).
 */
#ifndef SATDIFF_CAPI_H
#define SATDIFF_CAPI_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  SATDIFF_OK = 0,
  SATDIFF_ERR_INPUT = 1,  /* malformed input data */
  SATDIFF_ERR_CONFIG = 2, /* invalid options */
  SATDIFF_ERR_INTERNAL = 3
} satdiff_status;

typedef struct satdiff_channel_s satdiff_channel;
typedef struct satdiff_model_s satdiff_model;

const char* satdiff_version(void);
void satdiff_free(char* ptr);

/* ---- single-line operations ---------------------------------------- */

satdiff_status satdiff_normalize_line(const char* latex, char** out,
                                      char** errmsg);
satdiff_status satdiff_tokenize_line(const char* latex, char** out_sat,
                                     char** errmsg);
satdiff_status satdiff_detokenize_line(const char* sat, char** out_latex,
                                       char** errmsg);
/* Extracts the LaTeX ground truth annotation from InkML text. */
satdiff_status satdiff_inkml_extract_truth(const char* xml, char** out_latex,
                                           char** errmsg);

/* ---- synthetic corpus generation ------------------------------------ */

typedef struct {
  size_t n;
  uint64_t seed;
  size_t max_depth;   /* structural nesting, <= 4 */
  size_t max_row_len; /* atoms in the top-level row */
  size_t max_sat_len; /* reject longer draws; 0 = unbounded */
} satdiff_generate_opts;

satdiff_generate_opts satdiff_generate_opts_default(void);
satdiff_status satdiff_generate(const satdiff_generate_opts* opts,
                                char** out_latex_lines, char** errmsg);

/* ---- confusion channel ---------------------------------------------- */

satdiff_channel* satdiff_channel_parse(const char* spec_text, char** errmsg);
satdiff_channel* satdiff_channel_identity(void);
satdiff_channel* satdiff_channel_default_preset(void);
satdiff_status satdiff_channel_format(const satdiff_channel* chan, char** out,
                                      char** errmsg);
void satdiff_channel_free(satdiff_channel* chan);

/* Applies the channel to a SAT corpus, producing the observation corpus. */
satdiff_status satdiff_corrupt(const satdiff_channel* chan,
                               const char* sat_lines, uint64_t seed,
                               char** out_sat_lines, char** errmsg);

/* ---- training -------------------------------------------------------- */

typedef struct {
  double learning_rate;
  size_t epochs;
  size_t batch_size;
  size_t embed_dim;
  size_t canvas_len;
  int steps;        /* diffusion horizon T during training */
  int rmml;         /* nonzero enables Random-Masking Mutual Learning */
  double lambda_kl;
  double valid_frac; /* held out for the per-epoch CER log; 0 disables */
  uint64_t seed;
} satdiff_train_opts;

satdiff_train_opts satdiff_train_opts_default(void);

satdiff_model* satdiff_train(const char* latex_lines, const satdiff_channel* chan,
                             const satdiff_train_opts* opts, char** log_out,
                             char** errmsg);

satdiff_status satdiff_model_save_text(const satdiff_model* model, char** out,
                                       char** errmsg);
satdiff_model* satdiff_model_load_text(const char* text, char** errmsg);
uint64_t satdiff_model_vocab_hash(const satdiff_model* model);
void satdiff_model_free(satdiff_model* model);

/* ---- decoding --------------------------------------------------------- */

typedef enum {
  SATDIFF_POLICY_LOW_CONFIDENCE = 0,
  SATDIFF_POLICY_RANDOM = 1
} satdiff_remask_policy;

typedef struct {
  int steps; /* diffusion horizon T */
  satdiff_remask_policy policy;
  uint64_t seed;
  int want_trace; /* nonzero fills *trace_out */
} satdiff_decode_opts;

satdiff_decode_opts satdiff_decode_opts_default(void);

/* Decodes an observation corpus into LaTeX hypothesis lines. */
satdiff_status satdiff_decode(const satdiff_model* model, const char* obs_sat_lines,
                              const satdiff_decode_opts* opts,
                              char** out_latex_lines, char** trace_out,
                              char** errmsg);

typedef enum {
  SATDIFF_DENOISER_ORACLE = 0, /* point mass on the aligned truth line */
  SATDIFF_DENOISER_COPY = 1    /* point mass on the observation */
} satdiff_reference_denoiser;

/* Runs the reverse process with a reference denoiser instead of a trained
 * model. The oracle needs truth_sat_lines aligned with obs_sat_lines; the
 * copy baseline ignores them (pass NULL). */
satdiff_status satdiff_decode_reference(satdiff_reference_denoiser kind,
                                        const char* truth_sat_lines,
                                        const char* obs_sat_lines,
                                        const satdiff_decode_opts* opts,
                                        char** out_latex_lines, char** trace_out,
                                        char** errmsg);

/* n independent decodes per input; returns "distinct_count count" histogram
 * lines with buckets 1..runs. */
satdiff_status satdiff_diversity(const satdiff_model* model,
                                 const char* obs_sat_lines, int runs,
                                 const satdiff_decode_opts* opts, char** hist_out,
                                 char** errmsg);

/* ---- evaluation -------------------------------------------------------- */

/* Computes CER / EM / ER<=k / SER over aligned LaTeX line corpora. Output is
 * key=value lines, or one flat JSON record when as_json is nonzero. */
satdiff_status satdiff_evaluate(const char* ref_latex_lines,
                                const char* hyp_latex_lines, int as_json,
                                char** report_out, char** errmsg);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SATDIFF_CAPI_H */
