/* C interface to the attractor-field toolkit.
 *
 * All objects are opaque handles created by the library and released with the
 * matching *_free function. Every call that can fail returns an
 * afield_status; on failure afield_last_error() describes the problem (the
 * message is per thread and stays valid until the next failing call on that
 * thread). Strings returned through char** are owned by the caller and must
 * be released with afield_string_free.
 */
#ifndef AFIELD_AFIELD_H
#define AFIELD_AFIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AFIELD_API __declspec(dllexport)
#else
#define AFIELD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum afield_status {
    AFIELD_OK = 0,
    AFIELD_ERR_INVALID_ARGUMENT = 1, /* null handle, bad config value */
    AFIELD_ERR_PARSE = 2,            /* malformed CSV or JSON text */
    AFIELD_ERR_SCHEMA = 3,           /* well-formed input with wrong shape */
    AFIELD_ERR_IO = 4,               /* file could not be read or written */
    AFIELD_ERR_NUMERICAL = 5,        /* non-finite or singular intermediate */
    AFIELD_ERR_INSUFFICIENT_DATA = 6,
    AFIELD_ERR_INTERNAL = 7
} afield_status;

AFIELD_API const char* afield_last_error(void);
AFIELD_API const char* afield_status_name(afield_status status);
AFIELD_API void afield_string_free(char* s);

typedef struct afield_scenario afield_scenario;
typedef struct afield_dataset afield_dataset;
typedef struct afield_learn_result afield_learn_result;
typedef struct afield_atlas afield_atlas;
typedef struct afield_evaluation afield_evaluation;
typedef struct afield_raster afield_raster;

/* ---- configuration ---------------------------------------------------- */

typedef struct afield_sim_config {
    double snr;
    size_t n_trajectories;
    size_t max_steps;
    double arrival_radius;
} afield_sim_config;

typedef struct afield_learn_config {
    /* random-walk filter */
    double q_pos;
    double q_vel;
    double r_meas;
    double p0;
    double dk;
    /* segmenter */
    size_t window;
    double theta_dev;
    double d_theta;
    size_t n_theta;
    double cdf_threshold;
    /* fitter */
    double learning_rate_x0;
    double learning_rate_sigma;
    size_t max_iters;
    double grad_tol;
    size_t dk_switch;
    double sigma_init;
    double r0_init;
    double step_growth;
    double j_rel_tol;
    double max_fusion_ratio;
    /* clustering */
    size_t k_max;
    size_t restarts;
    size_t cluster_max_iters;
    double silhouette_floor;
    uint64_t seed;
    /* keep per-trajectory segmenter and per-segment fit traces */
    int keep_traces;
} afield_learn_config;

typedef struct afield_render_config {
    double lo[2];
    double hi[2];
    size_t resolution;
} afield_render_config;

AFIELD_API void afield_sim_config_default(afield_sim_config* cfg);
AFIELD_API void afield_learn_config_default(afield_learn_config* cfg);
AFIELD_API void afield_render_config_default(afield_render_config* cfg);

/* Overlays a JSON document with optional sections "simulate", "filter",
 * "segmenter", "fitter", "cluster" and "render" onto the given structs (any
 * of which may be null to skip that part). Unknown keys are rejected. */
AFIELD_API afield_status afield_config_apply_json(const char* json_text, afield_sim_config* sim,
                                                  afield_learn_config* learn, afield_render_config* render);

/* ---- scenario --------------------------------------------------------- */

AFIELD_API afield_status afield_scenario_default(afield_scenario** out);
AFIELD_API afield_status afield_scenario_from_json(const char* json_text, afield_scenario** out);
AFIELD_API afield_status afield_scenario_load(const char* path, afield_scenario** out);
AFIELD_API afield_status afield_scenario_to_json(const afield_scenario* s, char** out);
AFIELD_API afield_status afield_scenario_set_seed(afield_scenario* s, uint64_t seed);
AFIELD_API size_t afield_scenario_attractor_count(const afield_scenario* s);
AFIELD_API void afield_scenario_free(afield_scenario* s);

/* ---- trajectories ----------------------------------------------------- */

AFIELD_API afield_status afield_simulate(const afield_scenario* s, const afield_sim_config* cfg,
                                         afield_dataset** out);
/* Reads a trajectory CSV. Dropped trajectories are reported as warnings. */
AFIELD_API afield_status afield_dataset_load(const char* path, afield_dataset** out);
AFIELD_API afield_status afield_dataset_save(const afield_dataset* d, const char* path);
AFIELD_API size_t afield_dataset_size(const afield_dataset* d);
AFIELD_API size_t afield_dataset_warning_count(const afield_dataset* d);
AFIELD_API const char* afield_dataset_warning(const afield_dataset* d, size_t i);
AFIELD_API void afield_dataset_free(afield_dataset* d);

/* ---- learning --------------------------------------------------------- */

AFIELD_API afield_status afield_learn(const afield_dataset* d, const afield_learn_config* cfg,
                                      afield_learn_result** out);
AFIELD_API size_t afield_learn_segment_count(const afield_learn_result* r);
AFIELD_API size_t afield_learn_chosen_k(const afield_learn_result* r);
AFIELD_API size_t afield_learn_warning_count(const afield_learn_result* r);
AFIELD_API const char* afield_learn_warning(const afield_learn_result* r, size_t i);
/* Copy of the learned atlas. */
AFIELD_API afield_status afield_learn_atlas(const afield_learn_result* r, afield_atlas** out);
/* Writes segmenter_<traj>.csv and fit_<traj>_<segment>.csv into an existing
 * directory. Requires keep_traces. */
AFIELD_API afield_status afield_learn_write_traces(const afield_learn_result* r, const char* dir);
AFIELD_API void afield_learn_result_free(afield_learn_result* r);

/* ---- atlas ------------------------------------------------------------ */

typedef struct afield_letter_info {
    size_t id;
    double beta;
    double alpha;
    double sigma;
    double mu_log;
    double sigma_far;
    double r_switch;
    size_t support;
} afield_letter_info;

AFIELD_API afield_status afield_atlas_from_json(const char* json_text, afield_atlas** out);
AFIELD_API afield_status afield_atlas_load(const char* path, afield_atlas** out);
AFIELD_API afield_status afield_atlas_save(const afield_atlas* a, const char* path);
AFIELD_API afield_status afield_atlas_to_json(const afield_atlas* a, char** out);
AFIELD_API size_t afield_atlas_dim(const afield_atlas* a);
AFIELD_API size_t afield_atlas_letter_count(const afield_atlas* a);
AFIELD_API afield_status afield_atlas_letter(const afield_atlas* a, size_t i, afield_letter_info* info);
/* Copies the center of letter i into x0[0..dim). */
AFIELD_API afield_status afield_atlas_letter_center(const afield_atlas* a, size_t i, double* x0, size_t dim);
AFIELD_API void afield_atlas_free(afield_atlas* a);

/* ---- evaluation ------------------------------------------------------- */

typedef struct afield_match_info {
    size_t attractor;
    size_t letter;
    double d_x0_norm;
    double d_beta;
    double d_sigma2;
} afield_match_info;

/* Matches each atlas (one per noise level) to the scenario's attractors and
 * computes the normalized error across atlases. */
AFIELD_API afield_status afield_evaluate(const afield_atlas* const* atlases, size_t n_atlases,
                                         const afield_scenario* truth, afield_evaluation** out);
AFIELD_API size_t afield_evaluation_match_count(const afield_evaluation* e, size_t atlas);
AFIELD_API afield_status afield_evaluation_match(const afield_evaluation* e, size_t atlas, size_t i,
                                                 afield_match_info* info);
AFIELD_API size_t afield_evaluation_unmatched_count(const afield_evaluation* e, size_t atlas);
/* Number of normalized-error values: n_atlases, or 0 when some attractor went
 * unmatched. */
AFIELD_API size_t afield_evaluation_epsilon_count(const afield_evaluation* e);
AFIELD_API double afield_evaluation_epsilon(const afield_evaluation* e, size_t i);
AFIELD_API afield_status afield_evaluation_to_json(const afield_evaluation* e, char** out);
AFIELD_API void afield_evaluation_free(afield_evaluation* e);

/* ---- rendering -------------------------------------------------------- */

AFIELD_API afield_status afield_render(const afield_atlas* a, const afield_render_config* cfg, afield_raster** out);
AFIELD_API size_t afield_raster_resolution(const afield_raster* r);
AFIELD_API double afield_raster_value(const afield_raster* r, size_t row, size_t col);
/* Writes the raster CSV to `path` and its JSON sidecar to `sidecar_path`
 * (skipped when null). */
AFIELD_API afield_status afield_raster_save(const afield_raster* r, const char* path, const char* sidecar_path);
AFIELD_API void afield_raster_free(afield_raster* r);

#ifdef __cplusplus
}
#endif

#endif
