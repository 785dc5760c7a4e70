//! C ABI over the mixfractal core. Handles are opaque; every fallible call
//! returns an [`MfStatus`] whose nonzero values equal the core library's
//! stable error codes (the same numbers the CLI uses as exit status), and
//! leaves a message readable through [`mf_last_error`] on the same thread.
//! Panics never unwind across the boundary; they surface as
//! `MF_STATUS_PANIC`.
//!
//! The matching header is generated into `include/mixfractal.h` at build
//! time by cbindgen.

use std::cell::RefCell;
use std::ffi::CString;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mixfractal::{
    compose_mixture, crossover_report, cumulant_scan, default_max_octave, dwt_detail_variances,
    dyadic_ladder, logscale_diagram, predict_crossover_cumulant, wls_line, CrossoverSettings,
    Error, FlowSpec, HurstInversion, Marginal, ScalingDiagram, SeriesKind, TraceSeries, Wavelet,
};

/// Call outcome. Nonzero values match the core library's error codes, which
/// the CLI also uses as exit status.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    Domain = 2,
    Size = 3,
    Kind = 4,
    UnsupportedOrder = 5,
    InsufficientData = 6,
    NoCrossover = 7,
    Ordering = 8,
    Embedding = 9,
    Parse = 10,
    Spacing = 11,
    EmptyInput = 12,
    Config = 13,
    Io = 14,
    /// The library panicked; the handle state is still valid but the call
    /// produced nothing.
    Panic = 15,
}

/// Marginal law of the synthesized components.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfMarginal {
    Gaussian = 0,
    ChiSquared = 1,
}

/// Analysis wavelet.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfWavelet {
    Haar = 0,
    Daubechies4 = 1,
}

/// One admitted diagram point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MfDiagramPoint {
    /// log2 of the block size, or the wavelet octave.
    pub scale_index: f64,
    pub log2_statistic: f64,
    /// Regression weight (number of blocks or detail coefficients).
    pub weight: f64,
    /// Across-replica spread of the statistic; zero for single series.
    pub standard_error: f64,
}

/// Crossover detection summary. Hurst fields are inverted from the regime
/// slopes with the convention the diagram was built under.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MfCrossoverResult {
    pub significant: bool,
    /// Two-segment SSE over single-line SSE.
    pub sse_ratio: f64,
    pub log2_break: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    pub hurst_low: f64,
    pub hurst_high: f64,
    /// False when either regime Hurst fell outside (0, 1).
    pub hurst_in_range: bool,
}

/// Opaque handle to a uniformly sampled traffic series.
pub struct MfSeries {
    inner: TraceSeries,
}

/// Opaque handle to a scaling diagram. It remembers which estimator built
/// it, so Hurst inversion applies the matching slope convention.
pub struct MfDiagram {
    inner: ScalingDiagram,
    inversion: HurstInversion,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn fail(err: Error) -> MfStatus {
    let status = match &err {
        Error::Domain(_) => MfStatus::Domain,
        Error::Size(_) => MfStatus::Size,
        Error::Kind { .. } => MfStatus::Kind,
        Error::UnsupportedOrder(_) => MfStatus::UnsupportedOrder,
        Error::InsufficientData { .. } => MfStatus::InsufficientData,
        Error::NoCrossover { .. } => MfStatus::NoCrossover,
        Error::Ordering { .. } => MfStatus::Ordering,
        Error::Embedding { .. } => MfStatus::Embedding,
        Error::Parse { .. } => MfStatus::Parse,
        Error::Spacing { .. } => MfStatus::Spacing,
        Error::EmptyInput => MfStatus::EmptyInput,
        Error::Config(_) => MfStatus::Config,
        Error::Io(_) => MfStatus::Io,
    };
    debug_assert_eq!(status as i32, err.code());
    set_last_error(err.to_string());
    status
}

fn guarded(body: impl FnOnce() -> MfStatus) -> MfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic".into());
            MfStatus::Panic
        }
    }
}

macro_rules! require {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_last_error(format!("{} must not be null", stringify!($ptr)));
            return MfStatus::NullArgument;
        }
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on the calling thread, or null when
/// no call has failed yet. The pointer stays valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn mf_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Synthesize a mixed flow and return it through `out`. Component `i` is
/// fractional Gaussian noise with Hurst exponent `hursts[i]` scaled by
/// `weights[i]`; components must be sorted by strictly increasing Hurst.
/// `length` must be a power of two of at least 256.
///
/// # Safety
/// `hursts` and `weights` must point to `components` readable doubles, and
/// `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mf_synthesize(
    hursts: *const f64,
    weights: *const f64,
    components: usize,
    length: usize,
    marginal: MfMarginal,
    seed: u64,
    out: *mut *mut MfSeries,
) -> MfStatus {
    guarded(|| {
        require!(hursts);
        require!(weights);
        require!(out);
        let pairs: Vec<(f64, f64)> = slice::from_raw_parts(hursts, components)
            .iter()
            .zip(slice::from_raw_parts(weights, components))
            .map(|(&h, &w)| (h, w))
            .collect();
        let marginal = match marginal {
            MfMarginal::Gaussian => Marginal::Gaussian,
            MfMarginal::ChiSquared => Marginal::ChiSquared,
        };
        match FlowSpec::new(&pairs, length, marginal, seed).and_then(|f| compose_mixture(&f)) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(MfSeries { inner: series }));
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Wrap caller-provided samples (uniformly spaced increment counts) in a
/// series handle. The values are copied.
///
/// # Safety
/// `values` must point to `length` readable doubles and `out` to a writable
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mf_series_from_values(
    values: *const f64,
    length: usize,
    out: *mut *mut MfSeries,
) -> MfStatus {
    guarded(|| {
        require!(values);
        require!(out);
        let values = slice::from_raw_parts(values, length).to_vec();
        match TraceSeries::new(values, SeriesKind::Increments) {
            Ok(series) => {
                *out = Box::into_raw(Box::new(MfSeries { inner: series }));
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Number of samples in the series; zero for a null handle.
///
/// # Safety
/// `series` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mf_series_length(series: *const MfSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).inner.len()
}

/// Copy the samples into `out`, which must hold exactly
/// `mf_series_length(series)` doubles.
///
/// # Safety
/// `series` must be a live handle and `out` writable for `length` doubles.
#[no_mangle]
pub unsafe extern "C" fn mf_series_values(
    series: *const MfSeries,
    out: *mut f64,
    length: usize,
) -> MfStatus {
    guarded(|| {
        require!(series);
        require!(out);
        let values = &(*series).inner.values;
        if length != values.len() {
            return fail(Error::Size(format!(
                "buffer holds {length} values, series has {}",
                values.len()
            )));
        }
        slice::from_raw_parts_mut(out, length).copy_from_slice(values);
        MfStatus::Ok
    })
}

/// Release a series handle. Null is ignored.
///
/// # Safety
/// `series` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn mf_series_free(series: *mut MfSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Aggregated-cumulant scaling diagram of the given order over a dyadic
/// block ladder. Scales keep at least `min_blocks` complete blocks; rows
/// whose magnitude is statistically indistinguishable from zero are not
/// admitted.
///
/// # Safety
/// `series` must be a live handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mf_cumulant_diagram(
    series: *const MfSeries,
    order: u32,
    min_blocks: usize,
    out: *mut *mut MfDiagram,
) -> MfStatus {
    guarded(|| {
        require!(series);
        require!(out);
        let series = &(*series).inner;
        let ladder = dyadic_ladder(series.len(), min_blocks);
        let result = cumulant_scan(series, &ladder, &[order]).and_then(|t| t.diagram(order));
        match result {
            Ok(diagram) => {
                *out = Box::into_raw(Box::new(MfDiagram {
                    inner: diagram,
                    inversion: HurstInversion::CumulantOrder(order),
                }));
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Wavelet logscale diagram over every octave the series length supports.
///
/// # Safety
/// `series` must be a live handle and `out` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn mf_wavelet_diagram(
    series: *const MfSeries,
    wavelet: MfWavelet,
    out: *mut *mut MfDiagram,
) -> MfStatus {
    guarded(|| {
        require!(series);
        require!(out);
        let series = &(*series).inner;
        let wavelet = match wavelet {
            MfWavelet::Haar => Wavelet::Haar,
            MfWavelet::Daubechies4 => Wavelet::D4,
        };
        let max_octave = default_max_octave(series.len());
        if max_octave == 0 {
            return fail(Error::InsufficientData {
                what: "samples for a wavelet octave",
                needed: 2 * mixfractal::wavelet::MIN_OCTAVE_COEFFICIENTS,
                got: series.len(),
            });
        }
        let result =
            dwt_detail_variances(series, wavelet, max_octave).and_then(|v| logscale_diagram(&v));
        match result {
            Ok(diagram) => {
                *out = Box::into_raw(Box::new(MfDiagram {
                    inner: diagram,
                    inversion: HurstInversion::WaveletIncrements,
                }));
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Number of admitted points; zero for a null handle.
///
/// # Safety
/// `diagram` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mf_diagram_length(diagram: *const MfDiagram) -> usize {
    if diagram.is_null() {
        return 0;
    }
    (*diagram).inner.len()
}

/// Copy one admitted point into `out`.
///
/// # Safety
/// `diagram` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_diagram_point(
    diagram: *const MfDiagram,
    index: usize,
    out: *mut MfDiagramPoint,
) -> MfStatus {
    guarded(|| {
        require!(diagram);
        require!(out);
        let points = &(*diagram).inner.points;
        match points.get(index) {
            Some(p) => {
                *out = MfDiagramPoint {
                    scale_index: p.scale_index,
                    log2_statistic: p.log2_statistic,
                    weight: p.weight,
                    standard_error: p.stderr,
                };
                MfStatus::Ok
            }
            None => fail(Error::Size(format!(
                "point index {index} out of range, diagram has {}",
                points.len()
            ))),
        }
    })
}

/// Single-slope Hurst estimate over the whole diagram, inverted with the
/// convention the diagram was built under. `in_range` reports whether the
/// estimate landed inside (0, 1); it may be null when not wanted.
///
/// # Safety
/// `diagram` must be a live handle, `hurst` writable, `in_range` writable
/// or null.
#[no_mangle]
pub unsafe extern "C" fn mf_diagram_hurst(
    diagram: *const MfDiagram,
    hurst: *mut f64,
    in_range: *mut bool,
) -> MfStatus {
    guarded(|| {
        require!(diagram);
        require!(hurst);
        let handle = &*diagram;
        let line = match wls_line(
            &handle.inner.scales(),
            &handle.inner.statistics(),
            &handle.inner.weights(),
        ) {
            Ok(line) => line,
            Err(err) => return fail(err),
        };
        let estimate = handle.inversion.hurst(line.slope);
        *hurst = estimate.value;
        if !in_range.is_null() {
            *in_range = !estimate.out_of_range;
        }
        MfStatus::Ok
    })
}

/// Detect a scaling crossover on the diagram. `significance_ratio` is the
/// segmented-over-single SSE ratio a split must beat; pass 0.5 for the
/// default gate.
///
/// # Safety
/// `diagram` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mf_detect_crossover(
    diagram: *const MfDiagram,
    significance_ratio: f64,
    out: *mut MfCrossoverResult,
) -> MfStatus {
    guarded(|| {
        require!(diagram);
        require!(out);
        if !(significance_ratio > 0.0 && significance_ratio < 1.0) {
            return fail(Error::Config(format!(
                "significance ratio {significance_ratio} outside (0, 1)"
            )));
        }
        let handle = &*diagram;
        let settings = CrossoverSettings {
            significance_ratio,
            ..CrossoverSettings::default()
        };
        match crossover_report(&handle.inner, None, handle.inversion, &settings) {
            Ok(report) => {
                *out = MfCrossoverResult {
                    significant: report.significant,
                    sse_ratio: report.sse_ratio,
                    log2_break: report.log2_break,
                    slope_low: report.slope_low,
                    slope_high: report.slope_high,
                    hurst_low: report.hurst_low.value,
                    hurst_high: report.hurst_high.value,
                    hurst_in_range: !(report.hurst_low.out_of_range
                        || report.hurst_high.out_of_range),
                };
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Release a diagram handle. Null is ignored.
///
/// # Safety
/// `diagram` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn mf_diagram_free(diagram: *mut MfDiagram) {
    if !diagram.is_null() {
        drop(Box::from_raw(diagram));
    }
}

/// Scale at which two aggregated-cumulant power laws contribute equally:
/// `c_small` and `hurst_small` describe the component dominating small
/// scales, and `c_small` must exceed `c_large` while `hurst_small` stays
/// below `hurst_large`.
///
/// # Safety
/// `log2_break` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mf_predict_crossover(
    c_small: f64,
    c_large: f64,
    hurst_small: f64,
    hurst_large: f64,
    order: u32,
    log2_break: *mut f64,
) -> MfStatus {
    guarded(|| {
        require!(log2_break);
        match predict_crossover_cumulant(c_small, c_large, hurst_small, hurst_large, order) {
            Ok(prediction) => {
                *log2_break = prediction.log2_break;
                MfStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}
