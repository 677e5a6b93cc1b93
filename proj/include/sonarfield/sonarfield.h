/* Licensed under the Apache License, Version 2.0 (the "License"); you
 * may not use this file except in compliance with the License.  You
 * may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
 * implied.  See the License for the specific language governing
 * permissions and limitations under the License.
 */

/* C interface to the sonarfield toolkit.
 *
 * Objects are opaque handles released with their matching *_free call.
 * Every fallible call returns an sf_status; on failure sf_last_error()
 * describes the problem for the calling thread. Angles are radians except
 * inside files, which use degrees. */

#ifndef SONARFIELD_H
#define SONARFIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(SONARFIELD_BUILDING_LIBRARY)
#define SF_API __attribute__((visibility("default")))
#else
#define SF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sf_status {
    SF_OK = 0,
    SF_ERR_OTHER = 1,
    SF_ERR_FORMAT = 2,
    SF_ERR_DIMENSION = 3,
    SF_ERR_DIVERGENCE = 4,
    SF_ERR_INVALID = 5,
    SF_ERR_IO = 6
} sf_status;

typedef enum sf_grid_kind { SF_GRID_IMAGE = 0, SF_GRID_HEIGHTFIELD = 1 } sf_grid_kind;

typedef enum sf_plane_mode { SF_MODE_KP = 0, SF_MODE_HT = 1, SF_MODE_GV = 2 } sf_plane_mode;

typedef struct sf_config sf_config;
typedef struct sf_grid sf_grid;
typedef struct sf_fit_result sf_fit_result;

typedef struct sf_plane {
    double phi_near;
    double phi_far;
} sf_plane;

typedef struct sf_fit_settings {
    int steps;
    double lr_geometry;
    double lr_gains;
    int warmup;
    double lambda_tv;
    double weight_decay;
    sf_plane_mode mode;
    double gv_min_coverage;
    double gv_max_coverage;
    double ht_coverage;
    int optimize_tvg;
    double lr_tvg;
    uint64_t seed;
} sf_fit_settings;

typedef struct sf_metrics {
    double mcd_cm;
    double rmse_cm;
    double mae_cm;
    double mse_cm2;
    uint64_t n_points;
} sf_metrics;

SF_API const char* sf_version(void);
SF_API const char* sf_last_error(void);
/* Byte offset of the last format error, or -1. */
SF_API long long sf_last_error_offset(void);
SF_API const char* sf_status_name(sf_status status);

/* 0 restores the default (SONARFIELD_THREADS, else hardware concurrency). */
SF_API void sf_set_threads(int n);
SF_API int sf_threads(void);

SF_API void sf_string_free(char* s);

SF_API sf_status sf_config_load(const char* path, sf_config** out);
SF_API sf_status sf_config_from_json(const char* text, sf_config** out);
SF_API sf_status sf_config_to_json(const sf_config* cfg, char** out);
SF_API int sf_config_n_bins(const sf_config* cfg);
SF_API int sf_config_n_az(const sf_config* cfg);
SF_API int sf_config_padded_rows(const sf_config* cfg);
SF_API void sf_config_free(sf_config* cfg);

SF_API sf_status sf_plane_load(const char* path, sf_plane* out);
SF_API sf_status sf_plane_save(const char* path, const sf_plane* plane);

SF_API sf_status sf_grid_create(size_t rows, size_t cols, sf_grid_kind kind, sf_grid** out);
SF_API sf_status sf_grid_read(const char* path, sf_grid** out);
SF_API sf_status sf_grid_write(const char* path, const sf_grid* grid);
/* normalize != 0 min-max scales before quantizing. */
SF_API sf_status sf_grid_write_pgm(const char* path, const sf_grid* grid, int normalize);
SF_API size_t sf_grid_rows(const sf_grid* grid);
SF_API size_t sf_grid_cols(const sf_grid* grid);
SF_API sf_grid_kind sf_grid_kind_of(const sf_grid* grid);
/* Row-major, rows * cols doubles. */
SF_API double* sf_grid_data(sf_grid* grid);
SF_API const double* sf_grid_cdata(const sf_grid* grid);
SF_API void sf_grid_free(sf_grid* grid);

/* Reads a JSON array of per-beam gains; *count receives the array length
 * even when it exceeds capacity. */
SF_API sf_status sf_gains_load(const char* path, double* out, size_t capacity, size_t* count);

/* gains may be NULL for unit gains. render_ms may be NULL. */
SF_API sf_status sf_render(const sf_config* cfg, const sf_grid* heightfield, const sf_plane* plane,
                           const double* gains, size_t n_gains, sf_grid** out_image, double* render_ms);

SF_API sf_fit_settings sf_fit_settings_default(void);
SF_API sf_status sf_fit(const sf_config* cfg, const sf_grid* target, const sf_plane* plane,
                        const sf_fit_settings* settings, sf_fit_result** out);
/* heightfield.sfg, gains.json, loss.csv and final_image.sfg under out_dir. */
SF_API sf_status sf_fit_result_write(const sf_fit_result* result, const char* out_dir);
/* Out-of-range step indices give NaN. */
SF_API size_t sf_fit_result_steps(const sf_fit_result* result);
SF_API double sf_fit_result_loss(const sf_fit_result* result, size_t step_index);
SF_API double sf_fit_result_recon(const sf_fit_result* result, size_t step_index);
SF_API const sf_grid* sf_fit_result_heightfield(const sf_fit_result* result);
SF_API const sf_grid* sf_fit_result_image(const sf_fit_result* result);
SF_API size_t sf_fit_result_gains(const sf_fit_result* result, double* out, size_t capacity);
SF_API void sf_fit_result_free(sf_fit_result* result);

SF_API sf_status sf_evaluate(const sf_config* cfg, const sf_grid* pred, const sf_grid* gt, const sf_plane* plane,
                             sf_metrics* out);
SF_API sf_status sf_metrics_to_json(const sf_metrics* metrics, char** out);
/* Averages per-sample metrics; predictions are read from
 * <pred_root>/<id>/heightfield.sfg. */
SF_API sf_status sf_eval_manifest(const char* manifest_path, const char* pred_root, sf_metrics* mean,
                                  size_t* n_samples);

/* preset: in_dist, holo_standard_like or holo_rough_like. */
SF_API sf_status sf_gen_dataset(const char* preset, int n, uint64_t seed, int octaves, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* SONARFIELD_H */
