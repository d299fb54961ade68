#ifndef ECHO_CONSONANCE_H
#define ECHO_CONSONANCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  EC_CIRCUIT_KIND_SERIES = 0,
  EC_CIRCUIT_KIND_WIEN = 1,
  EC_CIRCUIT_KIND_SYNAPSE = 2,
} EcCircuitKind;

typedef enum {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_POINTER = 1,
  EC_STATUS_INVALID_ARGUMENT = 2,
  EC_STATUS_DOMAIN = 3,
  EC_STATUS_VALIDATION = 4,
  EC_STATUS_IO = 5,
  EC_STATUS_BUFFER_TOO_SMALL = 6,
  EC_STATUS_PANIC = 7,
} EcStatus;

/*
 Opaque circuit instance.
 */
typedef struct EcCircuit EcCircuit;

/*
 Opaque analyzed SNESM run.
 */
typedef struct EcRun EcRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *ec_version(void);

/*
 Message of the last failure on this thread; valid until the next call
 that fails on the same thread.
 */
const char *ec_last_error_message(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not have been freed.
 */
void ec_string_free(char *s);

/*
 Sensory dissonance of two sine partials with the default parameters.

 # Safety
 `out` must be valid for writes.
 */
EcStatus ec_pair_dissonance(double f1, double f2, double l1, double l2, double *out);

/*
 Memristor state rate at terminal voltage `v` (default parameters).

 # Safety
 `out` must be valid for writes.
 */
EcStatus ec_state_rate(double v, double *out);

/*
 Memristor resistance at state `r` (default parameters).

 # Safety
 `out` must be valid for writes.
 */
EcStatus ec_resistance(double r, double *out);

/*
 Creates a circuit with default components. `amp_gain <= 0` keeps the
 default amplifier gain.

 # Safety
 `out` must be valid for writes.
 */
EcStatus ec_circuit_new(EcCircuitKind kind, double amp_gain, EcCircuit **out);

/*
 # Safety
 `h` must come from `ec_circuit_new` and not have been freed.
 */
void ec_circuit_free(EcCircuit *h);

/*
 Output voltage and source current at source voltage `v_in` for the
 current states. Either output pointer may be null.

 # Safety
 `h` must be a live handle.
 */
EcStatus ec_circuit_observe(const EcCircuit *h, double v_in, double *v_out, double *i_source);

/*
 One RK4 step of length `dt` with the source voltage at the start,
 midpoint and end of the step.

 # Safety
 `h` must be a live handle.
 */
EcStatus ec_circuit_step(EcCircuit *h, double dt, double v_start, double v_mid, double v_end);

/*
 Device states (1 for the series circuit, 4 for the bridges).

 # Safety
 `h` must be a live handle; `buf` valid for `cap` writes; `len` valid.
 */
EcStatus ec_circuit_states(const EcCircuit *h, double *buf, size_t cap, size_t *len);

/*
 Default experiment configuration as JSON (free with `ec_string_free`).
 */
char *ec_config_default_json(void);

/*
 Simulates and analyzes one interval. `config_json` may be null for
 defaults; `feedback_gain < 0` keeps the configured gain. `quality` is an
 interval name such as "perfect5".

 # Safety
 String arguments must be NUL-terminated; `out` valid for writes.
 */
EcStatus ec_snesm_run(const char *config_json,
                      const char *quality,
                      double base_hz,
                      double feedback_gain,
                      EcRun **out);

/*
 # Safety
 `h` must come from `ec_snesm_run` and not have been freed.
 */
void ec_run_free(EcRun *h);

/*
 Number of generation windows (0 for a null handle).

 # Safety
 `h` must be a live handle or null.
 */
size_t ec_run_generations(const EcRun *h);

/*
 Samples of generation window `g` at the 8192 Hz analysis rate.

 # Safety
 `h` live; `buf` valid for `cap` writes; `len` valid.
 */
EcStatus ec_run_window(const EcRun *h, size_t g, double *buf, size_t cap, size_t *len);

/*
 Peak frequencies of generation `g` normalized by the lower tone.

 # Safety
 `h` live; `buf` valid for `cap` writes; `len` valid.
 */
EcStatus ec_run_peaks(const EcRun *h, size_t g, double *buf, size_t cap, size_t *len);

/*
 Runs the full study described by `config_json` (null for defaults)
 and returns the manifest JSON (free with `ec_string_free`). `jobs == 0`
 uses every processor.

 # Safety
 `config_json` NUL-terminated or null; `manifest_json` valid for writes.
 */
EcStatus ec_study_run(const char *config_json, size_t jobs, char **manifest_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ECHO_CONSONANCE_H */
