#ifndef CASCADE_H
#define CASCADE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Section selector.
typedef enum CascadeRole {
  CASCADE_ROLE_STEP1 = 1,
  CASCADE_ROLE_STEP2 = 2,
} CascadeRole;

// Result of an FFI call.
typedef enum CascadeStatus {
  CASCADE_STATUS_OK = 0,
  CASCADE_STATUS_NULL_POINTER = 1,
  CASCADE_STATUS_INVALID_UTF8 = 2,
  CASCADE_STATUS_DOMAIN = 3,
  CASCADE_STATUS_RANGE = 4,
  CASCADE_STATUS_CAPABILITY = 5,
  CASCADE_STATUS_DESIGN = 6,
  CASCADE_STATUS_NO_SOLUTION = 7,
  CASCADE_STATUS_NUMERIC = 8,
  CASCADE_STATUS_RANK_DEFICIENT = 9,
  CASCADE_STATUS_PARSE = 10,
  CASCADE_STATUS_IO = 11,
  CASCADE_STATUS_PANIC = 12,
} CascadeStatus;

// Opaque device handle.
typedef struct CascadeDevice CascadeDevice;

// Detector count rates and channel parameters.
typedef struct CascadeNoiseInput {
  double total_rate_cps;
  double dark_rate_cps;
  double detector_efficiency;
  double bandwidth_ghz;
  double external_transmission;
} CascadeNoiseInput;

// Noise spectral densities in cps/GHz.
typedef struct CascadeNoiseReport {
  double pump_induced_rate_cps;
  double external_nsd;
  double internal_nsd;
} CascadeNoiseReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cascade_version(void);

// Message of the last failed call on this thread, or NULL after a successful call.
// The pointer stays valid until the next call into the library on the same thread.
const char *cascade_last_error_message(void);

// Creates a handle for the built-in reference device.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum CascadeStatus cascade_device_reference(struct CascadeDevice **out);

// Loads a device description from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer to writable storage.
enum CascadeStatus cascade_device_load(const char *path, struct CascadeDevice **out);

// Releases a device handle. NULL is ignored.
//
// # Safety
// `device` must come from a `cascade_device_*` constructor and not be used afterwards.
void cascade_device_free(struct CascadeDevice *device);

// Poling period in µm of the section selected by a `CascadeRole` value, at its nominal temperature.
//
// # Safety
// `device` must be a live handle and `out_um` a valid pointer.
enum CascadeStatus cascade_device_poling_period(const struct CascadeDevice *device,
                                                int32_t role,
                                                double *out_um);

// sinc² transfer of both sections for the signal chain of the operating point,
// with both sections at `temperature_c` and pump at `pump_nm`. A step whose
// chain leaves the index model range reports NaN.
//
// # Safety
// `device` must be a live handle; output pointers must be valid.
enum CascadeStatus cascade_device_transfer(const struct CascadeDevice *device,
                                           double temperature_c,
                                           double pump_nm,
                                           double *out_step1,
                                           double *out_step2);

// Product of the loss-budget transmissions of a device.
//
// # Safety
// `device` must be a live handle and `out` a valid pointer.
enum CascadeStatus cascade_device_transmission(const struct CascadeDevice *device, double *out);

// DFG output wavelength 1/λ_t = 1/λ_s − 1/λ_p, all in nm.
//
// # Safety
// `out_nm` must be a valid pointer.
enum CascadeStatus cascade_dfg_target(double signal_nm, double pump_nm, double *out_nm);

// Noise spectral densities from detector count rates.
//
// # Safety
// `input` and `out` must be valid pointers.
enum CascadeStatus cascade_noise_report(const struct CascadeNoiseInput *input,
                                        struct CascadeNoiseReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASCADE_H */
