#ifndef ISOM_CODEC_H
#define ISOM_CODEC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum IsomStatus {
  ISOM_STATUS_OK = 0,
  ISOM_STATUS_NULL_POINTER = 1,
  ISOM_STATUS_INVALID_ARGUMENT = 2,
  ISOM_STATUS_IO = 3,
  ISOM_STATUS_FORMAT = 4,
  ISOM_STATUS_STREAM = 5,
  ISOM_STATUS_CODEC = 6,
  ISOM_STATUS_PANIC = 7,
} IsomStatus;

// Owned byte buffer, e.g. a compressed container.
typedef struct IsomBuffer IsomBuffer;

// Grayscale image handle.
typedef struct IsomImage IsomImage;

// Codec options handle.
typedef struct IsomOptions IsomOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *isom_last_error(void);

// Builds an image from `width * height` row-major samples.
//
// # Safety
// `samples` must point to `width * height` readable doubles; `out` must be writable.
enum IsomStatus isom_image_new(size_t width,
                               size_t height,
                               const double *samples,
                               struct IsomImage **out);

// Loads a PGM (P2/P5) or BMP file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum IsomStatus isom_image_load(const char *path, struct IsomImage **out);

// Writes the image as binary PGM.
//
// # Safety
// `img` must come from this library; `path` must be NUL-terminated.
enum IsomStatus isom_image_save(const struct IsomImage *img, const char *path);

// # Safety
// `img` must be null or come from this library.
size_t isom_image_width(const struct IsomImage *img);

// # Safety
// `img` must be null or come from this library.
size_t isom_image_height(const struct IsomImage *img);

// Row-major samples, valid while `img` lives.
//
// # Safety
// `img` must be null or come from this library.
const double *isom_image_samples(const struct IsomImage *img);

// # Safety
// `img` must be null or come from this library, and not be used afterwards.
void isom_image_free(struct IsomImage *img);

// Options with the library defaults.
struct IsomOptions *isom_options_new(void);

// # Safety
// `opts` must be null or come from [`isom_options_new`], and not be used afterwards.
void isom_options_free(struct IsomOptions *opts);

// Pre-filter by id (0 none, 1 median, 2 gaussian, 3 mean, 4 adaptive Wiener)
// with default parameters.
//
// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_filter(struct IsomOptions *opts, uint8_t filter_id);

// Wavelet by id (0 Haar, 1 Daubechies-4).
//
// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_wavelet(struct IsomOptions *opts, uint8_t wavelet_id);

// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_levels(struct IsomOptions *opts, size_t levels);

// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_block_edge(struct IsomOptions *opts, size_t edge);

// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_max_nodes(struct IsomOptions *opts, size_t max_nodes);

// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_seed(struct IsomOptions *opts, uint64_t seed);

// # Safety
// `opts` must come from [`isom_options_new`].
enum IsomStatus isom_options_set_code_details(struct IsomOptions *opts, bool enabled);

// Compresses `img` into an ISV1 container. `opts` may be null for defaults.
//
// # Safety
// Pointers must come from this library; `out` must be writable.
enum IsomStatus isom_compress(const struct IsomImage *img,
                              const struct IsomOptions *opts,
                              struct IsomBuffer **out);

// Decodes an ISV1 container.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum IsomStatus isom_decompress(const uint8_t *data, size_t len, struct IsomImage **out);

// # Safety
// `buf` must be null or come from this library.
const uint8_t *isom_buffer_data(const struct IsomBuffer *buf);

// # Safety
// `buf` must be null or come from this library.
size_t isom_buffer_len(const struct IsomBuffer *buf);

// # Safety
// `buf` must be null or come from this library, and not be used afterwards.
void isom_buffer_free(struct IsomBuffer *buf);

// Mean squared error between two images of equal size.
//
// # Safety
// Image pointers must come from this library; `out` must be writable.
enum IsomStatus isom_mse(const struct IsomImage *a, const struct IsomImage *b, double *out);

// PSNR in dB; positive infinity for identical images.
//
// # Safety
// Image pointers must come from this library; `out` must be writable.
enum IsomStatus isom_psnr(const struct IsomImage *a, const struct IsomImage *b, double *out);

// `(1 - t_c / t_o) * 100`.
//
// # Safety
// `out` must be writable.
enum IsomStatus isom_compression_ratio(uint64_t t_c, uint64_t t_o, double *out);

// Applies a spatial filter by id. `sigma` is used by the gaussian filter only.
//
// # Safety
// `img` must come from this library; `out` must be writable.
enum IsomStatus isom_filter_apply(const struct IsomImage *img,
                                  uint8_t filter_id,
                                  size_t radius,
                                  double sigma,
                                  struct IsomImage **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ISOM_CODEC_H */
