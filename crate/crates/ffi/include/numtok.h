#ifndef NUMTOK_H
#define NUMTOK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum NtkStatus {
  NTK_STATUS_OK = 0,
  NTK_STATUS_INVALID_ARGUMENT = 1,
  NTK_STATUS_IO = 2,
  NTK_STATUS_JSON = 3,
  NTK_STATUS_SCHEMA = 4,
  NTK_STATUS_FORMAT = 5,
  NTK_STATUS_DIVERGED = 6,
  NTK_STATUS_REJECTION_EXHAUSTED = 7,
  NTK_STATUS_NULL_POINTER = 8,
  NTK_STATUS_UTF8 = 9,
  NTK_STATUS_BUFFER_TOO_SMALL = 10,
  NTK_STATUS_PANIC = 11,
} NtkStatus;

// Owned byte string (JSONL, JSON or NTKE bytes).
typedef struct NtkBuffer NtkBuffer;

// Encoded numbers, one `f32` row per value.
typedef struct NtkMatrix NtkMatrix;

// Curriculum and task-ratio scheduler.
typedef struct NtkScheduler NtkScheduler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next numtok call on this thread.
const char *ntk_last_error(void);

// Library version as a static NUL-terminated string.
const char *ntk_version(void);

// Encode `n` values. `spec_json` is an encoder spec such as
// `{"scheme": "bittoken", "d_model": 768}`.
//
// # Safety
// `values` must point to `n` doubles; `spec_json` must be a NUL-terminated
// string; `out` must be writable.
enum NtkStatus ntk_encode_batch(const double *values,
                                size_t n,
                                const char *spec_json,
                                struct NtkMatrix **out);

// Decode every row of `m` into `out_values`, which holds `capacity`
// doubles and must have room for one per row.
//
// # Safety
// `m` must be a live matrix handle; `out_values` must point to `capacity`
// writable doubles.
enum NtkStatus ntk_decode_batch(const struct NtkMatrix *m,
                                const char *spec_json,
                                double *out_values,
                                size_t capacity);

// # Safety
// `m` must be a live matrix handle or null.
size_t ntk_matrix_rows(const struct NtkMatrix *m);

// # Safety
// `m` must be a live matrix handle or null.
size_t ntk_matrix_dims(const struct NtkMatrix *m);

// Row-major `rows * dims` floats, valid while the handle lives.
//
// # Safety
// `m` must be a live matrix handle or null.
const float *ntk_matrix_data(const struct NtkMatrix *m);

// Serialize to NTKE bytes.
//
// # Safety
// `m` must be a live matrix handle; `out` must be writable.
enum NtkStatus ntk_matrix_to_ntke(const struct NtkMatrix *m, struct NtkBuffer **out);

// Parse NTKE bytes.
//
// # Safety
// `bytes` must point to `len` readable bytes; `out` must be writable.
enum NtkStatus ntk_matrix_from_ntke(const uint8_t *bytes, size_t len, struct NtkMatrix **out);

// # Safety
// `m` must come from this library and not be freed twice.
void ntk_matrix_free(struct NtkMatrix *m);

// Dataset JSONL, header line first. `base` is 2 or 10.
//
// # Safety
// `task` must be a NUL-terminated string; `out` must be writable.
enum NtkStatus ntk_generate_dataset(uint64_t seed,
                                    const char *task,
                                    size_t n,
                                    size_t shards,
                                    uint32_t base,
                                    struct NtkBuffer **out);

// Score report JSON for a predictions file against a reference dataset.
//
// # Safety
// Both paths must be NUL-terminated strings; `out` must be writable.
enum NtkStatus ntk_score_file(const char *pred_path, const char *ref_path, struct NtkBuffer **out);

// # Safety
// `b` must be a live buffer handle or null.
const uint8_t *ntk_buffer_data(const struct NtkBuffer *b);

// # Safety
// `b` must be a live buffer handle or null.
size_t ntk_buffer_len(const struct NtkBuffer *b);

// # Safety
// `b` must come from this library and not be freed twice.
void ntk_buffer_free(struct NtkBuffer *b);

// New scheduler from
// `{"tasks": [{"task": "mult", "max_difficulty": 12}], "total_steps": N,
// "lr_max": a, "lr_half": b}`.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum NtkStatus ntk_scheduler_new(const char *config_json, struct NtkScheduler **out);

// Restore a scheduler from a checkpoint written by
// [`ntk_scheduler_checkpoint`].
//
// # Safety
// `checkpoint_json` must be a NUL-terminated string; `out` must be writable.
enum NtkStatus ntk_scheduler_restore(const char *checkpoint_json, struct NtkScheduler **out);

// Full scheduler state as JSON.
//
// # Safety
// `s` must be a live scheduler handle; `out` must be writable.
enum NtkStatus ntk_scheduler_checkpoint(const struct NtkScheduler *s, struct NtkBuffer **out);

// One scheduler step. Input and output are JSON step records
// (`step`, `lr`, `measurements`, `task_performance`, `batch_tokens`,
// `seed` in; `advanced`, `ratios`, `plan` out). The state is unchanged
// when the call fails.
//
// # Safety
// `s` must be a live scheduler handle; `input_json` must be a
// NUL-terminated string; `out` must be writable.
enum NtkStatus ntk_scheduler_step(struct NtkScheduler *s,
                                  const char *input_json,
                                  struct NtkBuffer **out);

// # Safety
// `s` must come from this library and not be freed twice.
void ntk_scheduler_free(struct NtkScheduler *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NUMTOK_H */
