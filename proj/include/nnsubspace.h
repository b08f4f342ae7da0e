/*
 * nnsubspace — C API for active-subspace uncertainty propagation through
 * feed-forward networks.
 *
 * Usage pattern: create opaque handles (datasets, networks, reports), call
 * into them, free them. Every fallible function returns nnas_status;
 * NNAS_OK means success and anything else leaves a human-readable message
 * in nnas_last_error() (thread-local, valid until the next failing call on
 * the same thread).
 *
 * All analyses are deterministic for a fixed seed: identical inputs produce
 * bit-identical reports and artifact files.
 */

#ifndef NNSUBSPACE_H
#define NNSUBSPACE_H

#include <stdint.h>

#ifndef NNAS_API
#ifdef _MSC_VER
#ifdef nnsubspace_EXPORTS
#define NNAS_API __declspec(dllexport)
#else
#define NNAS_API __declspec(dllimport)
#endif
#else
#define NNAS_API
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t nnas_status;

enum {
    NNAS_OK = 0,
    NNAS_ERR_INVALID_ARGUMENT = 1,
    NNAS_ERR_DIMENSION_MISMATCH = 2,
    NNAS_ERR_IO = 3,
    NNAS_ERR_FORMAT = 4,
    NNAS_ERR_NUMERIC = 5,
    NNAS_ERR_INTERNAL = 6
};

/* Scalar quantity of interest extracted from the network output. */
typedef enum nnas_score_kind {
    NNAS_SCORE_SOFTMAX_PROBABILITY = 0,
    NNAS_SCORE_LOGIT = 1
} nnas_score_kind;

typedef struct nnas_dataset nnas_dataset;
typedef struct nnas_network nnas_network;
typedef struct nnas_report nnas_report;

NNAS_API const char* nnas_version(void);

/* Message for the most recent failure on this thread; never NULL. */
NNAS_API const char* nnas_last_error(void);

/* ------------------------------------------------------------------ */
/* Datasets                                                            */

/* Load the standard IDX image/label pair (big-endian magic 0x00000803 /
 * 0x00000801). Pixels widen to doubles in [0, 255]. */
NNAS_API nnas_status nnas_dataset_load_idx(const char* images_path, const char* labels_path,
                                           nnas_dataset** out);

/* Seeded synthetic classification set (Gaussian blobs, one per class).
 * The blob centers depend only on seed; sample_seed draws the points, so a
 * held-out split reuses seed with a fresh sample_seed. Pass sample_seed ==
 * seed for a plain dataset. */
NNAS_API nnas_status nnas_dataset_synthetic(uint32_t dim, uint32_t classes, uint32_t per_class,
                                            double lo, double hi, uint64_t seed,
                                            uint64_t sample_seed, nnas_dataset** out);

NNAS_API nnas_status nnas_dataset_info(const nnas_dataset* data, uint32_t* count, uint32_t* dim,
                                       uint32_t* classes, double* lo, double* hi);
NNAS_API nnas_status nnas_dataset_input(const nnas_dataset* data, uint32_t index, double* buffer,
                                        uint32_t buffer_len);
NNAS_API nnas_status nnas_dataset_label(const nnas_dataset* data, uint32_t index,
                                        uint32_t* label);
NNAS_API void nnas_dataset_free(nnas_dataset* data);

/* ------------------------------------------------------------------ */
/* Networks                                                            */

/* Train a softplus feed-forward classifier with cross-entropy mini-batch
 * SGD. Deterministic for a fixed seed. hidden_sizes may be NULL when
 * hidden_count is 0 (logistic regression). */
NNAS_API nnas_status nnas_network_train(const nnas_dataset* data, const uint32_t* hidden_sizes,
                                        uint32_t hidden_count, uint32_t epochs,
                                        uint32_t batch_size, double learning_rate, uint64_t seed,
                                        nnas_network** out, double* train_accuracy);

NNAS_API nnas_status nnas_network_load(const char* path, nnas_network** out);
NNAS_API nnas_status nnas_network_save(const nnas_network* net, const char* path);
NNAS_API nnas_status nnas_network_dims(const nnas_network* net, uint32_t* input_dim,
                                       uint32_t* output_dim);
NNAS_API nnas_status nnas_network_forward(const nnas_network* net, const double* x,
                                          uint32_t x_len, double* logits, uint32_t logits_len);
NNAS_API nnas_status nnas_network_qoi(const nnas_network* net, const double* x, uint32_t x_len,
                                      uint32_t class_index, nnas_score_kind kind, double* value);
NNAS_API nnas_status nnas_network_grad_qoi(const nnas_network* net, const double* x,
                                           uint32_t x_len, uint32_t class_index,
                                           nnas_score_kind kind, double* gradient,
                                           uint32_t gradient_len);
NNAS_API nnas_status nnas_network_predict(const nnas_network* net, const double* x,
                                          uint32_t x_len, uint32_t* label);
NNAS_API nnas_status nnas_network_accuracy(const nnas_network* net, const nnas_dataset* data,
                                           double* accuracy);
NNAS_API void nnas_network_free(nnas_network* net);

/* ------------------------------------------------------------------ */
/* Analyses                                                            */

typedef struct nnas_run_config {
    double alpha;          /* oversampling factor of the gradient budget  */
    double beta;           /* budget factor, > subspace rank + 1          */
    double sigma;          /* input noise scale                           */
    double gap_threshold;  /* eigenvalue ratio declaring a spectral gap   */
    uint32_t r_max;        /* largest subspace rank considered            */
    uint32_t degree;       /* response-surface polynomial degree          */
    uint32_t rs_samples;   /* surface evaluations in the propagation step */
    uint32_t mc_samples;   /* direct Monte Carlo baseline evaluations     */
    uint64_t seed;
    int32_t score_kind;    /* nnas_score_kind                             */
    int64_t class_index;   /* -1: class predicted at the noise-free x0    */
    uint32_t histogram_bins;
    double clip_lo;        /* input clip bounds (truncated noise)         */
    double clip_hi;
} nnas_run_config;

/* Fill with the default configuration (sigma 20, alpha = beta = 10,
 * 50000-sample propagation, clip [0, 255], seed 42). */
NNAS_API void nnas_run_config_init(nnas_run_config* cfg);

/* Subspace + response-surface uncertainty propagation around center x0. */
NNAS_API nnas_status nnas_analyze(const nnas_network* net, const double* x0, uint32_t dim,
                                  const nnas_run_config* cfg, nnas_report** out);

/* nnas_analyze plus a direct Monte Carlo baseline on an independent seed,
 * with relative errors and cost ratios attached. */
NNAS_API nnas_status nnas_compare(const nnas_network* net, const double* x0, uint32_t dim,
                                  const nnas_run_config* cfg, uint64_t mc_seed,
                                  nnas_report** out);

/* L2-budget perturbation along the leading active direction, sign chosen
 * to decrease the score. */
NNAS_API nnas_status nnas_adversarial(const nnas_network* net, const double* x0, uint32_t dim,
                                      const nnas_run_config* cfg, double epsilon,
                                      nnas_report** out);

/* Per-feature activity scores over the first rank_override eigenpairs
 * (0 selects the rank found by the gap criterion). */
NNAS_API nnas_status nnas_attribute(const nnas_network* net, const double* x0, uint32_t dim,
                                    const nnas_run_config* cfg, uint32_t rank_override,
                                    nnas_report** out);

/* ------------------------------------------------------------------ */
/* Reports                                                             */

/* The main JSON document (report/compare/adversarial/attribution). The
 * pointer stays valid until nnas_report_free. */
NNAS_API const char* nnas_report_json(const nnas_report* report);

/* Write every artifact file for the report kind into out_dir (created if
 * missing): analysis reports emit report.json, spectrum.csv,
 * eigenvectors.csv, summary.csv, fitted_curve.csv, histogram.csv and
 * surface.json; comparisons emit compare.json; adversarial runs emit
 * adversarial.json, original.csv and perturbed.csv; attributions emit
 * attribution.csv and attribution.json. */
NNAS_API nnas_status nnas_report_write_artifacts(const nnas_report* report, const char* out_dir);

/* Keyed scalar access. Keys: "rs_mean", "rs_std", "mc_mean", "mc_std",
 * "rank", "gradient_samples", "r_squared", "rel_err_mean", "rel_err_std",
 * "cost_ratio_weighted", "cost_ratio_unweighted", "epsilon",
 * "score_before", "score_after", "score_sum". Unknown or absent keys
 * return NNAS_ERR_INVALID_ARGUMENT. */
NNAS_API nnas_status nnas_report_scalar(const nnas_report* report, const char* key,
                                        double* value);

/* Keyed vector access; keys: "eigenvalues", "x_adv", "x0", "attribution".
 * Returns the element count through *written; pass buffer = NULL to query
 * the required length. */
NNAS_API nnas_status nnas_report_vector(const nnas_report* report, const char* key,
                                        double* buffer, uint32_t buffer_len, uint32_t* written);

NNAS_API void nnas_report_free(nnas_report* report);

#ifdef __cplusplus
}
#endif

#endif /* NNSUBSPACE_H */
