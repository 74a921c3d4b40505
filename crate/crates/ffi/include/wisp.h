#ifndef WISP_H
#define WISP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WispStatus {
  WISP_STATUS_OK = 0,
  WISP_STATUS_NULL_ARGUMENT = 1,
  WISP_STATUS_INVALID_UTF8 = 2,
  WISP_STATUS_IO = 3,
  WISP_STATUS_PARSE = 4,
  WISP_STATUS_INVALID_ARGUMENT = 5,
  WISP_STATUS_ANALYSIS = 6,
  WISP_STATUS_PANIC = 7,
} WispStatus;

/*
 A finished analysis.
 */
typedef struct WispAnalysis WispAnalysis;

/*
 Frame and BLE records loaded from disk.
 */
typedef struct WispFrames WispFrames;

/*
 One simulator run.
 */
typedef struct WispSimulation WispSimulation;

/*
 Analysis settings. Null pointers mean "not given".
 */
typedef struct WispOptions {
  /*
   Window length in seconds; 0 selects the default.
   */
  uint32_t window_s;
  const char *bssid;
  const char *layout_path;
  const char *zones_path;
  const char *rules_path;
} WispOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. Valid until the
 next call into the library from this thread.
 */
const char *wisp_last_error(void);

/*
 Library version as a static string.
 */
const char *wisp_version(void);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void wisp_string_free(char *s);

/*
 Loads frame records (JSON lines) and optionally BLE records.

 # Safety
 `frames_path` must be a valid C string, `ble_path` null or a valid C
 string, and `out` a valid pointer.
 */
enum WispStatus wisp_frames_load(const char *frames_path,
                                 const char *ble_path,
                                 struct WispFrames **out);

/*
 Decodes one pcap file. Undecodable packets are skipped; a truncated file
 keeps the frames read before the damage.

 # Safety
 `pcap_path` and `sniffer_id` must be valid C strings and `out` a valid
 pointer.
 */
enum WispStatus wisp_frames_from_pcap(const char *pcap_path,
                                      const char *sniffer_id,
                                      struct WispFrames **out);

/*
 # Safety
 `frames` must be null or a live handle.
 */
size_t wisp_frames_len(const struct WispFrames *frames);

/*
 # Safety
 `frames` must be null or a handle not yet freed.
 */
void wisp_frames_free(struct WispFrames *frames);

/*
 Runs a bundled scenario, or a TOML scenario file. `seed` replaces the
 scenario seed when `override_seed` is true.

 # Safety
 `scenario` must be a valid C string and `out` a valid pointer.
 */
enum WispStatus wisp_simulate(const char *scenario,
                              uint64_t seed,
                              bool override_seed,
                              struct WispSimulation **out);

/*
 # Safety
 `sim` must be null or a live handle.
 */
size_t wisp_simulation_frame_count(const struct WispSimulation *sim);

/*
 Writes frames, BLE records, layout, zones and ground truth into `dir`.

 # Safety
 `sim` must be a live handle and `dir` a valid C string.
 */
enum WispStatus wisp_simulation_write(const struct WispSimulation *sim, const char *dir);

/*
 Analyzes a simulation with its own layout, zone model and time grid.

 # Safety
 `sim` must be a live handle and `out` a valid pointer.
 */
enum WispStatus wisp_simulation_analyze(const struct WispSimulation *sim,
                                        struct WispAnalysis **out);

/*
 # Safety
 `sim` must be null or a handle not yet freed.
 */
void wisp_simulation_free(struct WispSimulation *sim);

/*
 Analyzes loaded records. `options` may be null.

 # Safety
 `frames` must be a live handle, `options` null or valid with each string
 field null or a valid C string, and `out` a valid pointer.
 */
enum WispStatus wisp_analyze(const struct WispFrames *frames,
                             const struct WispOptions *options,
                             struct WispAnalysis **out);

/*
 # Safety
 `a` must be null or a live handle.
 */
size_t wisp_analysis_device_count(const struct WispAnalysis *a);

/*
 # Safety
 `a` must be null or a live handle.
 */
size_t wisp_analysis_event_count(const struct WispAnalysis *a);

/*
 # Safety
 `a` must be null or a live handle.
 */
size_t wisp_analysis_guest_count(const struct WispAnalysis *a);

/*
 Plain-text summary; free with [`wisp_string_free`]. Null on failure.

 # Safety
 `a` must be null or a live handle.
 */
char *wisp_analysis_summary(const struct WispAnalysis *a);

/*
 Writes the full report bundle into `dir`.

 # Safety
 `a` must be a live handle and `dir` a valid C string.
 */
enum WispStatus wisp_analysis_write_report(const struct WispAnalysis *a, const char *dir);

/*
 # Safety
 `a` must be null or a handle not yet freed.
 */
void wisp_analysis_free(struct WispAnalysis *a);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WISP_H */
