#ifndef COMMSIM_H
#define COMMSIM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of a fallible call.
 */
typedef enum CommsimStatus {
  COMMSIM_STATUS_OK = 0,
  COMMSIM_STATUS_NULL_POINTER = 1,
  COMMSIM_STATUS_INVALID_ARGUMENT = 2,
  COMMSIM_STATUS_PARSE = 3,
  COMMSIM_STATUS_SIMULATION = 4,
  COMMSIM_STATUS_PANIC = 5,
} CommsimStatus;

/*
 A simulator with its own random stream.
 */
typedef struct CommsimSimulator CommsimSimulator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *commsim_version(void);

/*
 Message for the last failure on this thread, or NULL. Valid until the next
 failing call on the same thread.
 */
const char *commsim_last_error(void);

/*
 Parses a simulator description and stores a new handle in `*out`.

 # Safety
 `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum CommsimStatus commsim_simulator_from_text(const char *text,
                                               uint64_t seed,
                                               struct CommsimSimulator **out);

/*
 Releases a handle. NULL is ignored.

 # Safety
 `sim` must be NULL or a handle not yet freed.
 */
void commsim_simulator_free(struct CommsimSimulator *sim);

/*
 Sets the channel parameter (Eb/N0 in dB or a probability).

 # Safety
 `sim` must be a live handle.
 */
enum CommsimStatus commsim_simulator_set_parameter(struct CommsimSimulator *sim, double value);

/*
 Restarts the random stream from `seed`.

 # Safety
 `sim` must be a live handle.
 */
enum CommsimStatus commsim_simulator_seed(struct CommsimSimulator *sim, uint64_t seed);

/*
 Number of measures each frame produces, or 0 for a NULL handle.

 # Safety
 `sim` must be NULL or a live handle.
 */
size_t commsim_simulator_measures(const struct CommsimSimulator *sim);

/*
 Simulates `frames` frames and adds the error and trial counts of each
 measure to `errors[k]` and `trials[k]`. Both arrays hold `len` entries,
 which must equal the measure count.

 # Safety
 `sim` must be a live handle; `errors` and `trials` must point to `len`
 writable values each.
 */
enum CommsimStatus commsim_simulator_run(struct CommsimSimulator *sim,
                                         uint64_t frames,
                                         uint64_t *errors,
                                         uint64_t *trials,
                                         size_t len);

/*
 Label of measure `k` (e.g. "SER"), or NULL when out of range.

 # Safety
 `sim` must be a live handle.
 */
char *commsim_simulator_label(const struct CommsimSimulator *sim, size_t k);

/*
 Canonical serialized form; free with [`commsim_string_free`].

 # Safety
 `sim` must be a live handle.
 */
char *commsim_simulator_to_text(const struct CommsimSimulator *sim);

/*
 Hex SHA-256 digest of the canonical form; free with [`commsim_string_free`].

 # Safety
 `sim` must be a live handle.
 */
char *commsim_simulator_digest(const struct CommsimSimulator *sim);

/*
 Frees a string returned by this library. NULL is ignored.

 # Safety
 `s` must be NULL or a string from this library not yet freed.
 */
void commsim_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMMSIM_H */
