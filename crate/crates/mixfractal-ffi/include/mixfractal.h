/* C interface to the mixfractal scaling-analysis library. */

#ifndef MIXFRACTAL_H
#define MIXFRACTAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Nonzero values match the core library's error codes, which
 * the CLI also uses as exit status.
 */
typedef enum MfStatus {
  MF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  MF_STATUS_NULL_ARGUMENT = 1,
  MF_STATUS_DOMAIN = 2,
  MF_STATUS_SIZE = 3,
  MF_STATUS_KIND = 4,
  MF_STATUS_UNSUPPORTED_ORDER = 5,
  MF_STATUS_INSUFFICIENT_DATA = 6,
  MF_STATUS_NO_CROSSOVER = 7,
  MF_STATUS_ORDERING = 8,
  MF_STATUS_EMBEDDING = 9,
  MF_STATUS_PARSE = 10,
  MF_STATUS_SPACING = 11,
  MF_STATUS_EMPTY_INPUT = 12,
  MF_STATUS_CONFIG = 13,
  MF_STATUS_IO = 14,
  /**
   * The library panicked; the handle state is still valid but the call
   * produced nothing.
   */
  MF_STATUS_PANIC = 15,
} MfStatus;

/**
 * Marginal law of the synthesized components.
 */
typedef enum MfMarginal {
  MF_MARGINAL_GAUSSIAN = 0,
  MF_MARGINAL_CHI_SQUARED = 1,
} MfMarginal;

/**
 * Analysis wavelet.
 */
typedef enum MfWavelet {
  MF_WAVELET_HAAR = 0,
  MF_WAVELET_DAUBECHIES4 = 1,
} MfWavelet;

/**
 * Opaque handle to a scaling diagram. It remembers which estimator built
 * it, so Hurst inversion applies the matching slope convention.
 */
typedef struct MfDiagram MfDiagram;

/**
 * Opaque handle to a uniformly sampled traffic series.
 */
typedef struct MfSeries MfSeries;

/**
 * One admitted diagram point.
 */
typedef struct MfDiagramPoint {
  /**
   * log2 of the block size, or the wavelet octave.
   */
  double scale_index;
  double log2_statistic;
  /**
   * Regression weight (number of blocks or detail coefficients).
   */
  double weight;
  /**
   * Across-replica spread of the statistic; zero for single series.
   */
  double standard_error;
} MfDiagramPoint;

/**
 * Crossover detection summary. Hurst fields are inverted from the regime
 * slopes with the convention the diagram was built under.
 */
typedef struct MfCrossoverResult {
  bool significant;
  /**
   * Two-segment SSE over single-line SSE.
   */
  double sse_ratio;
  double log2_break;
  double slope_low;
  double slope_high;
  double hurst_low;
  double hurst_high;
  /**
   * False when either regime Hurst fell outside (0, 1).
   */
  bool hurst_in_range;
} MfCrossoverResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mf_version(void);

/**
 * Message of the most recent failure on the calling thread, or null when
 * no call has failed yet. The pointer stays valid until the next failing
 * call on the same thread.
 */
const char *mf_last_error(void);

/**
 * Synthesize a mixed flow and return it through `out`. Component `i` is
 * fractional Gaussian noise with Hurst exponent `hursts[i]` scaled by
 * `weights[i]`; components must be sorted by strictly increasing Hurst.
 * `length` must be a power of two of at least 256.
 *
 * # Safety
 * `hursts` and `weights` must point to `components` readable doubles, and
 * `out` to a writable pointer slot.
 */
enum MfStatus mf_synthesize(const double *hursts,
                            const double *weights,
                            size_t components,
                            size_t length,
                            enum MfMarginal marginal,
                            uint64_t seed,
                            struct MfSeries **out);

/**
 * Wrap caller-provided samples (uniformly spaced increment counts) in a
 * series handle. The values are copied.
 *
 * # Safety
 * `values` must point to `length` readable doubles and `out` to a writable
 * pointer slot.
 */
enum MfStatus mf_series_from_values(const double *values, size_t length, struct MfSeries **out);

/**
 * Number of samples in the series; zero for a null handle.
 *
 * # Safety
 * `series` must be null or a live handle from this library.
 */
size_t mf_series_length(const struct MfSeries *series);

/**
 * Copy the samples into `out`, which must hold exactly
 * `mf_series_length(series)` doubles.
 *
 * # Safety
 * `series` must be a live handle and `out` writable for `length` doubles.
 */
enum MfStatus mf_series_values(const struct MfSeries *series, double *out, size_t length);

/**
 * Release a series handle. Null is ignored.
 *
 * # Safety
 * `series` must be null or a handle not freed before.
 */
void mf_series_free(struct MfSeries *series);

/**
 * Aggregated-cumulant scaling diagram of the given order over a dyadic
 * block ladder. Scales keep at least `min_blocks` complete blocks; rows
 * whose magnitude is statistically indistinguishable from zero are not
 * admitted.
 *
 * # Safety
 * `series` must be a live handle and `out` a writable pointer slot.
 */
enum MfStatus mf_cumulant_diagram(const struct MfSeries *series,
                                  uint32_t order,
                                  size_t min_blocks,
                                  struct MfDiagram **out);

/**
 * Wavelet logscale diagram over every octave the series length supports.
 *
 * # Safety
 * `series` must be a live handle and `out` a writable pointer slot.
 */
enum MfStatus mf_wavelet_diagram(const struct MfSeries *series,
                                 enum MfWavelet wavelet,
                                 struct MfDiagram **out);

/**
 * Number of admitted points; zero for a null handle.
 *
 * # Safety
 * `diagram` must be null or a live handle from this library.
 */
size_t mf_diagram_length(const struct MfDiagram *diagram);

/**
 * Copy one admitted point into `out`.
 *
 * # Safety
 * `diagram` must be a live handle and `out` writable.
 */
enum MfStatus mf_diagram_point(const struct MfDiagram *diagram,
                               size_t index,
                               struct MfDiagramPoint *out);

/**
 * Single-slope Hurst estimate over the whole diagram, inverted with the
 * convention the diagram was built under. `in_range` reports whether the
 * estimate landed inside (0, 1); it may be null when not wanted.
 *
 * # Safety
 * `diagram` must be a live handle, `hurst` writable, `in_range` writable
 * or null.
 */
enum MfStatus mf_diagram_hurst(const struct MfDiagram *diagram, double *hurst, bool *in_range);

/**
 * Detect a scaling crossover on the diagram. `significance_ratio` is the
 * segmented-over-single SSE ratio a split must beat; pass 0.5 for the
 * default gate.
 *
 * # Safety
 * `diagram` must be a live handle and `out` writable.
 */
enum MfStatus mf_detect_crossover(const struct MfDiagram *diagram,
                                  double significance_ratio,
                                  struct MfCrossoverResult *out);

/**
 * Release a diagram handle. Null is ignored.
 *
 * # Safety
 * `diagram` must be null or a handle not freed before.
 */
void mf_diagram_free(struct MfDiagram *diagram);

/**
 * Scale at which two aggregated-cumulant power laws contribute equally:
 * `c_small` and `hurst_small` describe the component dominating small
 * scales, and `c_small` must exceed `c_large` while `hurst_small` stays
 * below `hurst_large`.
 *
 * # Safety
 * `log2_break` must be writable.
 */
enum MfStatus mf_predict_crossover(double c_small,
                                   double c_large,
                                   double hurst_small,
                                   double hurst_large,
                                   uint32_t order,
                                   double *log2_break);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIXFRACTAL_H */
