//! Synthesis and scaling analysis of mixed-fractal traffic series.
//!
//! A mixed flow is a weighted sum of independent fractional Gaussian noise
//! components with distinct Hurst exponents. Its multi-scale statistics
//! (aggregated cumulants, wavelet detail variances) follow one power law at
//! small scales and another at large scales, so single-slope Hurst
//! estimators read different exponents depending on the scale range they
//! regress over. This crate generates such flows, computes both families of
//! logscale diagrams, locates the crossover between the regimes, and
//! compares it against the analytic break predicted from the mixture
//! parameters.
//!
//! The pieces compose in one direction: `synthesis` makes series, `aggregation`
//! and `wavelet` turn them into multi-scale statistics, `cumulants` and
//! `diagram` shape those into regression-ready diagrams, `fit` and
//! `crossover` extract slopes and breaks, and `pipeline` wires it all to
//! files for the `mixfractal` binary.

pub mod aggregation;
pub mod crossover;
pub mod cumulants;
pub mod diagram;
pub mod error;
pub mod fit;
pub mod pipeline;
pub mod rng;
pub mod series;
pub mod synthesis;
pub mod wavelet;

pub use aggregation::{aggregate, dyadic_ladder, ScaleLadder};
pub use crossover::{
    crossover_report, fit_segmented, predict_crossover_cumulant, predict_crossover_wavelet,
    CrossoverPrediction, CrossoverReport, CrossoverSettings, HurstInversion, SegmentedFit,
};
pub use cumulants::{
    cumulant_scan, fit_linear_fractal, fit_unifractal, sample_cumulant, CumulantRow,
    CumulantScalingTable, FractalFitReport, LinearFractalFit, UnifractalFit,
};
pub use diagram::{ensemble_average, DiagramPoint, ScalingDiagram};
pub use error::{Error, Result};
pub use fit::{fit_two_powerlaw, wls_line, TwoPowerLaw, WlsLine};
pub use pipeline::{
    analyze_replicas, emit_plot_data, flow_predictions, ingest_trace, run_pipeline,
    synthesize_replicas, AnalysisResult, EnsembleDiagram, FitReport, RunConfig, RunMode,
    RunOutput,
};
pub use rng::{derive_seed, GaussianSource};
pub use series::{SeriesKind, TraceSeries};
pub use synthesis::{
    compose_mixture, fgn_autocovariance, synthesize_fgn, FlowSpec, HurstComponent, Marginal,
};
pub use wavelet::{
    default_max_octave, dwt_detail_variances, dwt_pyramid, hurst_from_slope, logscale_diagram,
    HurstEstimate, OctaveVariance, Wavelet,
};
