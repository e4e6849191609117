#ifndef SNNLAB_H
#define SNNLAB_H

/* C API for the snnlab shared library. Every entry point returns a status
 * code; on failure snnlab_last_error() carries a human-readable message for
 * the calling thread. Handles are opaque and freed with their _free
 * function. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum snnlab_status {
  SNNLAB_OK = 0,
  SNNLAB_ERR_INVALID_ARGUMENT = 1,
  SNNLAB_ERR_SHAPE = 2,
  SNNLAB_ERR_GEOMETRY = 3,
  SNNLAB_ERR_IO = 4,
  SNNLAB_ERR_PARSE = 5,
  SNNLAB_ERR_NUMERIC = 6,
  SNNLAB_ERR_INFEASIBLE = 7,
  SNNLAB_ERR_UNKNOWN = 99
} snnlab_status;

const char* snnlab_version(void);
const char* snnlab_status_name(snnlab_status status);
/* Message of the most recent failure on the calling thread; never NULL. */
const char* snnlab_last_error(void);

/* Frees strings returned through char** out parameters. */
void snnlab_string_free(char* s);

typedef struct snnlab_model snnlab_model;

/* spec_json NULL selects the stock architecture. is_snn nonzero builds the
 * spiking model, zero the CNN reference. */
snnlab_status snnlab_model_create(const char* spec_json, int is_snn, uint64_t seed,
                                  snnlab_model** out_model);
snnlab_status snnlab_model_load(const char* path, int is_snn, snnlab_model** out_model);
snnlab_status snnlab_model_save(const snnlab_model* model, const char* path);
void snnlab_model_free(snnlab_model* model);

/* image is channel-major [channels*height*width] in [0,1]; out_prediction
 * receives the 3 regression outputs. */
snnlab_status snnlab_model_predict(const snnlab_model* model, const double* image, int channels,
                                   int height, int width, double* out_prediction);

/* Writes n_per_bucket scenes per rho value plus manifest.json under
 * out_dir. */
snnlab_status snnlab_gen_dataset(int n_per_bucket, int height, int width,
                                 const double* rho_values, int n_rho, double noise_sigma,
                                 uint64_t seed, const char* out_dir);

/* config_json uses the training config schema; NULL selects defaults.
 * out_final_loss may be NULL. */
snnlab_status snnlab_train(snnlab_model* model, const char* manifest_path,
                           const char* config_json, double* out_final_loss);
snnlab_status snnlab_eval_mse(const snnlab_model* model, const char* manifest_path,
                              double* out_mse);

/* theta < 0 selects the default threshold (0.05). */
snnlab_status snnlab_dark_pixel_ratio(const double* image, int channels, int height, int width,
                                      double theta, double* out_ratio);

/* config_json uses the sweep config schema; writes report.csv,
 * report_raw.csv and report.json under its out_dir. */
snnlab_status snnlab_sweep(const char* config_json);

/* Energy estimates for one PPM image. Pass both checkpoints or neither (then
 * spec_json/seed build a fresh model pair). mer_list NULL selects
 * [0.01, 0.02, 1.0]; costs_path NULL the default cost table. On success
 * *out_json receives a malloc'd JSON report; free with snnlab_string_free. */
snnlab_status snnlab_energy_image(const char* image_path, const char* snn_checkpoint,
                                  const char* cnn_checkpoint, const char* spec_json,
                                  uint64_t seed, const char* costs_path, const double* mer_list,
                                  int n_mer, int n_hop, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* SNNLAB_H */
