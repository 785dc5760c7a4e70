//! End-to-end runs: trace ingestion, replica synthesis, scans, fits,
//! crossover reports and the on-disk artifact set.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::dyadic_ladder;
use crate::crossover::{
    crossover_report, predict_crossover_cumulant, predict_crossover_wavelet, CrossoverPrediction,
    CrossoverReport, CrossoverSettings, HurstInversion, SegmentedFit,
};
use crate::cumulants::{cumulant_scan, fit_unifractal, FractalFitReport, UnifractalFit};
use crate::diagram::{ensemble_average, ScalingDiagram};
use crate::error::{Error, Result};
use crate::fit::wls_line;
use crate::rng::derive_seed;
use crate::series::{SeriesKind, TraceSeries};
use crate::synthesis::{compose_mixture, FlowSpec, Marginal};
use crate::wavelet::{
    default_max_octave, dwt_detail_variances, hurst_from_slope, logscale_diagram, HurstEstimate,
    Wavelet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Synthesize,
    Analyze,
    #[default]
    Pipeline,
}

/// Full run description: either a flow to synthesize or a trace to ingest,
/// plus estimation knobs. Flag overrides on the CLI replace the file
/// values before validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: RunMode,
    pub flow: Option<FlowSpec>,
    pub input_path: Option<PathBuf>,
    pub orders: Vec<u32>,
    pub wavelet: Wavelet,
    pub replicas: usize,
    pub min_blocks: usize,
    pub output_dir: PathBuf,
    /// Master seed for the whole run; replica r synthesizes under the
    /// derived sub-seed (seed, r), and flow component i under a further
    /// derivation from that. Any seed inside `flow` is overridden.
    pub seed: u64,
    /// Segmented-vs-single SSE ratio under which a crossover counts as
    /// significant.
    pub significance_ratio: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: RunMode::Pipeline,
            flow: None,
            input_path: None,
            orders: vec![2, 3, 4],
            wavelet: Wavelet::Haar,
            replicas: 1,
            min_blocks: 16,
            output_dir: PathBuf::from("."),
            seed: 0,
            significance_ratio: 0.5,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        match (&self.flow, &self.input_path) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either a flow or an input path, not both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::Config(
                    "set exactly one of flow and input path".into(),
                ))
            }
            _ => {}
        }
        match self.mode {
            RunMode::Analyze if self.input_path.is_none() => {
                return Err(Error::Config("analyze mode needs an input path".into()))
            }
            RunMode::Synthesize | RunMode::Pipeline if self.flow.is_none() => {
                return Err(Error::Config("synthesis modes need a flow".into()))
            }
            _ => {}
        }
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.replicas > 1 && self.flow.is_none() {
            return Err(Error::Config(
                "external traces cannot be replicated; replicas > 1 needs a flow".into(),
            ));
        }
        if self.orders.is_empty() {
            return Err(Error::Config("orders must not be empty".into()));
        }
        for &m in &self.orders {
            if !(2..=4).contains(&m) {
                return Err(Error::UnsupportedOrder(m));
            }
        }
        if self.min_blocks == 0 {
            return Err(Error::Config("min_blocks must be at least 1".into()));
        }
        if !(self.significance_ratio > 0.0 && self.significance_ratio < 1.0) {
            return Err(Error::Config(format!(
                "significance ratio {} outside (0, 1)",
                self.significance_ratio
            )));
        }
        if let Some(flow) = &self.flow {
            flow.validate()?;
        }
        Ok(())
    }

    fn sorted_orders(&self) -> Vec<u32> {
        let mut orders = self.orders.clone();
        orders.sort_unstable();
        orders.dedup();
        orders
    }

    fn crossover_settings(&self) -> CrossoverSettings {
        CrossoverSettings {
            significance_ratio: self.significance_ratio,
            ..CrossoverSettings::default()
        }
    }
}

/// Replica-averaged diagram; standard errors are zero when replicas = 1.
#[derive(Debug, Clone)]
pub struct EnsembleDiagram {
    pub diagram: ScalingDiagram,
    pub replicas: usize,
}

impl EnsembleDiagram {
    pub fn average(per_replica: &[ScalingDiagram]) -> Result<Self> {
        Ok(EnsembleDiagram {
            diagram: ensemble_average(per_replica)?,
            replicas: per_replica.len(),
        })
    }
}

/// Read a trace CSV: one numeric column of counts, or two columns
/// (timestamp, count) with uniform spacing. A non-numeric first line is
/// treated as a header. Line numbers in errors are 0-based file lines.
pub fn ingest_trace(path: &Path) -> Result<TraceSeries> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut columns = 0usize;
    let mut header_allowed = true;
    for (line, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let mut values = Vec::with_capacity(fields.len());
        let mut bad_field = None;
        for field in &fields {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => {
                    bad_field = Some(format!("non-finite value {field:?}"));
                    break;
                }
                Err(_) => {
                    bad_field = Some(format!("non-numeric field {field:?}"));
                    break;
                }
            }
        }
        if let Some(detail) = bad_field {
            if header_allowed {
                header_allowed = false;
                continue;
            }
            return Err(Error::Parse { line, detail });
        }
        header_allowed = false;
        if rows.is_empty() {
            columns = values.len();
            if columns > 2 {
                return Err(Error::Parse {
                    line,
                    detail: format!("expected 1 or 2 columns, got {columns}"),
                });
            }
        } else if values.len() != columns {
            return Err(Error::Parse {
                line,
                detail: format!("expected {columns} columns, got {}", values.len()),
            });
        }
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let values: Vec<f64> = if columns == 1 {
        rows.iter().map(|(_, v)| v[0]).collect()
    } else {
        if rows.len() >= 2 {
            let step = rows[1].1[0] - rows[0].1[0];
            if !(step > 0.0) {
                return Err(Error::Parse {
                    line: rows[1].0,
                    detail: format!("timestamps must increase, step {step}"),
                });
            }
            for pair in rows.windows(2).skip(1) {
                let gap = pair[1].1[0] - pair[0].1[0];
                if (gap - step).abs() > 1e-9 * step.abs().max(1.0) {
                    return Err(Error::Spacing {
                        line: pair[1].0,
                        expected: step,
                        got: gap,
                    });
                }
            }
        }
        rows.iter().map(|(_, v)| v[1]).collect()
    };
    let mut series = TraceSeries::new(values, SeriesKind::Increments)?;
    if let Some(name) = path.file_name() {
        series
            .meta
            .insert("source".into(), name.to_string_lossy().into_owned());
    }
    Ok(series)
}

/// Everything the fit stage produced, serialized as fit_report.json.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub fractal: FractalFitReport,
    pub wavelet_slope: Option<f64>,
    pub wavelet_hurst: Option<HurstEstimate>,
    pub cumulant_crossover: Option<CrossoverReport>,
    pub wavelet_crossover: Option<CrossoverReport>,
    pub cumulant_predictions: BTreeMap<u32, CrossoverPrediction>,
    pub wavelet_prediction: Option<CrossoverPrediction>,
    /// Stages that could not run on this input, with the reason.
    pub skipped: Vec<String>,
}

/// Analytic crossover predictions for a two-component flow. Cumulant
/// predictions exist per order whenever the marginal's unit cumulant is
/// nonzero and the small-scale prefactor dominates; the wavelet prediction
/// uses the exact Haar-on-fGn prefactor, so it is emitted only for the
/// Haar wavelet on Gaussian flows.
pub fn flow_predictions(
    flow: &FlowSpec,
    orders: &[u32],
    wavelet: Wavelet,
) -> (BTreeMap<u32, CrossoverPrediction>, Option<CrossoverPrediction>) {
    if flow.components.len() != 2 {
        return (BTreeMap::new(), None);
    }
    let small = &flow.components[0];
    let large = &flow.components[1];
    let mut cumulant = BTreeMap::new();
    for &m in orders {
        let unit = flow.marginal.unit_cumulant(m);
        if unit == 0.0 {
            continue;
        }
        let c1 = small.weight.powi(m as i32) * unit;
        let c2 = large.weight.powi(m as i32) * unit;
        if let Ok(p) = predict_crossover_cumulant(c1, c2, small.hurst, large.hurst, m) {
            cumulant.insert(m, p);
        }
    }
    let haar_prefactor =
        |h: f64, weight: f64| weight * weight * (4.0 - (2.0 * h).exp2()) * (-2.0 * h).exp2();
    let wavelet_prediction = if wavelet == Wavelet::Haar && flow.marginal == Marginal::Gaussian {
        predict_crossover_wavelet(
            haar_prefactor(small.hurst, small.weight),
            haar_prefactor(large.hurst, large.weight),
            small.hurst,
            large.hurst,
            SeriesKind::Increments,
        )
        .ok()
    } else {
        None
    };
    (cumulant, wavelet_prediction)
}

struct ReplicaScan {
    cumulant: BTreeMap<u32, ScalingDiagram>,
    wavelet: ScalingDiagram,
}

fn scan_replica(series: &TraceSeries, config: &RunConfig, orders: &[u32]) -> Result<ReplicaScan> {
    let length = series.values.len();
    let ladder = dyadic_ladder(length, config.min_blocks);
    let table = cumulant_scan(series, &ladder, orders)?;
    let mut cumulant = BTreeMap::new();
    for &m in orders {
        cumulant.insert(m, table.diagram(m)?);
    }
    let max_octave = default_max_octave(length);
    if max_octave == 0 {
        return Err(Error::InsufficientData {
            what: "samples for a wavelet octave",
            needed: 2 * crate::wavelet::MIN_OCTAVE_COEFFICIENTS,
            got: length,
        });
    }
    let variances = dwt_detail_variances(series, config.wavelet, max_octave)?;
    let wavelet = logscale_diagram(&variances)?;
    Ok(ReplicaScan { cumulant, wavelet })
}

/// Scan each replica, average the diagrams, and run every fit that has
/// enough admitted points. `flow` supplies analytic predictions when the
/// input was synthesized.
pub struct AnalysisResult {
    pub cumulant_diagrams: BTreeMap<u32, EnsembleDiagram>,
    pub wavelet_diagram: EnsembleDiagram,
    pub report: FitReport,
}

pub fn analyze_replicas(
    replicas: &[TraceSeries],
    config: &RunConfig,
    flow: Option<&FlowSpec>,
) -> Result<AnalysisResult> {
    if replicas.is_empty() {
        return Err(Error::EmptyInput);
    }
    let orders = config.sorted_orders();
    let scans: Vec<ReplicaScan> = replicas
        .par_iter()
        .map(|series| scan_replica(series, config, &orders))
        .collect::<Result<_>>()?;

    let mut cumulant_diagrams = BTreeMap::new();
    for &m in &orders {
        let per_replica: Vec<ScalingDiagram> =
            scans.iter().map(|s| s.cumulant[&m].clone()).collect();
        cumulant_diagrams.insert(m, EnsembleDiagram::average(&per_replica)?);
    }
    let wavelet_per_replica: Vec<ScalingDiagram> =
        scans.iter().map(|s| s.wavelet.clone()).collect();
    let wavelet_diagram = EnsembleDiagram::average(&wavelet_per_replica)?;

    let mut skipped = Vec::new();
    let mut fits: Vec<UnifractalFit> = Vec::new();
    for &m in &orders {
        let diagram = &cumulant_diagrams[&m].diagram;
        if diagram.len() >= 3 {
            fits.push(fit_unifractal(diagram)?);
        } else {
            skipped.push(format!(
                "order {m}: only {} admitted scales, need 3 for a slope fit",
                diagram.len()
            ));
        }
    }
    let fractal = FractalFitReport::assemble(&fits)?;

    let (wavelet_slope, wavelet_hurst) = if wavelet_diagram.diagram.len() >= 3 {
        let line = wls_line(
            &wavelet_diagram.diagram.scales(),
            &wavelet_diagram.diagram.statistics(),
            &wavelet_diagram.diagram.weights(),
        )?;
        (
            Some(line.slope),
            Some(hurst_from_slope(line.slope, SeriesKind::Increments)),
        )
    } else {
        skipped.push(format!(
            "wavelet: only {} admitted octaves, need 3 for a slope fit",
            wavelet_diagram.diagram.len()
        ));
        (None, None)
    };

    let (cumulant_predictions, wavelet_prediction) = match flow {
        Some(flow) => flow_predictions(flow, &orders, config.wavelet),
        None => (BTreeMap::new(), None),
    };
    let settings = config.crossover_settings();

    let cumulant_crossover = match cumulant_diagrams.get(&2) {
        Some(ens) if ens.diagram.len() >= 5 => Some(crossover_report(
            &ens.diagram,
            cumulant_predictions.get(&2).copied(),
            HurstInversion::CumulantOrder(2),
            &settings,
        )?),
        Some(ens) => {
            skipped.push(format!(
                "cumulant crossover: only {} admitted scales, need 5",
                ens.diagram.len()
            ));
            None
        }
        None => {
            skipped.push("cumulant crossover: order 2 not scanned".into());
            None
        }
    };
    let wavelet_crossover = if wavelet_diagram.diagram.len() >= 5 {
        Some(crossover_report(
            &wavelet_diagram.diagram,
            wavelet_prediction,
            HurstInversion::WaveletIncrements,
            &settings,
        )?)
    } else {
        skipped.push(format!(
            "wavelet crossover: only {} admitted octaves, need 5",
            wavelet_diagram.diagram.len()
        ));
        None
    };

    Ok(AnalysisResult {
        cumulant_diagrams,
        wavelet_diagram,
        report: FitReport {
            fractal,
            wavelet_slope,
            wavelet_hurst,
            cumulant_crossover,
            wavelet_crossover,
            cumulant_predictions,
            wavelet_prediction,
            skipped,
        },
    })
}

/// Synthesize the flow's replicas under derived sub-seeds of the master.
pub fn synthesize_replicas(
    flow: &FlowSpec,
    master_seed: u64,
    replicas: usize,
) -> Result<Vec<TraceSeries>> {
    (0..replicas)
        .into_par_iter()
        .map(|r| compose_mixture(&flow.reseeded(derive_seed(master_seed, r as u64))))
        .collect()
}

fn format_value(v: f64) -> String {
    format!("{v}")
}

fn write_diagram_csv(path: &Path, diagram: &ScalingDiagram) -> Result<()> {
    let mut out = String::from("scale_index,log2_statistic,weight,stderr\n");
    for p in &diagram.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_value(p.scale_index),
            format_value(p.log2_statistic),
            format_value(p.weight),
            format_value(p.stderr)
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Plot-ready CSV: the observed ensemble points plus both fitted segment
/// lines sampled at every observed scale. The break abscissa rides in a
/// comment header so plotting stays a single-file affair.
pub fn emit_plot_data(
    diagram: &EnsembleDiagram,
    fit: &SegmentedFit,
    path: &Path,
) -> Result<()> {
    let mut out = format!("# log2_break={}\n", format_value(fit.log2_break));
    out.push_str("kind,scale_index,value,weight,stderr\n");
    for p in &diagram.diagram.points {
        out.push_str(&format!(
            "observed,{},{},{},{}\n",
            format_value(p.scale_index),
            format_value(p.log2_statistic),
            format_value(p.weight),
            format_value(p.stderr)
        ));
    }
    for (label, slope, intercept) in [
        ("fit_low", fit.slope_low, fit.intercept_low),
        ("fit_high", fit.slope_high, fit.intercept_high),
    ] {
        for p in &diagram.diagram.points {
            out.push_str(&format!(
                "{label},{},{},0,0\n",
                format_value(p.scale_index),
                format_value(slope * p.scale_index + intercept)
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct RunMeta<'a> {
    package: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    replica_seeds: Vec<u64>,
    seed_derivation: &'static str,
    ensemble_averaging: &'static str,
    artifacts: Vec<String>,
}

const SEED_DERIVATION_NOTE: &str =
    "replica r runs the flow under sub-seed derive(seed, r); component i of that flow draws from derive(sub-seed, i)";
const ENSEMBLE_NOTE: &str =
    "pointwise mean of log2 statistics across replicas (geometric mean of the raw statistics); a scale is kept only when every replica admitted it";

/// What a run produced, for callers that want to print a summary.
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub artifacts: Vec<String>,
    pub cumulant_significant: Option<bool>,
    pub wavelet_significant: Option<bool>,
}

/// Execute the configured run and write all artifacts under the output
/// directory. Results are computed fully before the first write, so a
/// failing run leaves no artifact set behind.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.mode {
        RunMode::Synthesize => run_synthesize(config),
        RunMode::Analyze => run_analysis(config, None),
        RunMode::Pipeline => {
            let flow = config.flow.as_ref().expect("validated");
            info!(
                "synthesizing {} replica(s) of {} components at length {}",
                config.replicas,
                flow.components.len(),
                flow.length
            );
            let replicas = synthesize_replicas(flow, config.seed, config.replicas)?;
            run_analysis(config, Some(replicas))
        }
    }
}

fn run_synthesize(config: &RunConfig) -> Result<RunOutput> {
    let flow = config.flow.as_ref().expect("validated").reseeded(config.seed);
    let series = compose_mixture(&flow)?;
    fs::create_dir_all(&config.output_dir)?;
    let mut out = String::from("count\n");
    for v in &series.values {
        out.push_str(&format_value(*v));
        out.push('\n');
    }
    let trace_path = config.output_dir.join("trace.csv");
    fs::write(&trace_path, out)?;
    let artifacts = vec!["trace.csv".to_string(), "run_meta.json".to_string()];
    write_json(
        &config.output_dir.join("run_meta.json"),
        &RunMeta {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            replica_seeds: vec![config.seed],
            seed_derivation: SEED_DERIVATION_NOTE,
            ensemble_averaging: ENSEMBLE_NOTE,
            artifacts: artifacts.clone(),
        },
    )?;
    info!("wrote {} samples to {}", series.values.len(), trace_path.display());
    Ok(RunOutput {
        output_dir: config.output_dir.clone(),
        artifacts,
        cumulant_significant: None,
        wavelet_significant: None,
    })
}

fn run_analysis(config: &RunConfig, synthesized: Option<Vec<TraceSeries>>) -> Result<RunOutput> {
    let (replicas, replica_seeds, flow) = match synthesized {
        Some(replicas) => {
            let seeds = (0..config.replicas)
                .map(|r| derive_seed(config.seed, r as u64))
                .collect();
            (replicas, seeds, config.flow.as_ref())
        }
        None => {
            let path = config.input_path.as_ref().expect("validated");
            info!("ingesting {}", path.display());
            (vec![ingest_trace(path)?], Vec::new(), None)
        }
    };
    let result = analyze_replicas(&replicas, config, flow)?;
    for note in &result.report.skipped {
        debug!("skipped: {note}");
    }

    fs::create_dir_all(&config.output_dir)?;
    let mut artifacts = Vec::new();
    for (m, ens) in &result.cumulant_diagrams {
        let name = format!("cumulant_diagram_m{m}.csv");
        write_diagram_csv(&config.output_dir.join(&name), &ens.diagram)?;
        artifacts.push(name);
    }
    write_diagram_csv(
        &config.output_dir.join("wavelet_diagram.csv"),
        &result.wavelet_diagram.diagram,
    )?;
    artifacts.push("wavelet_diagram.csv".to_string());
    if let Some(report) = &result.report.cumulant_crossover {
        let name = "plot_cumulant_m2.csv".to_string();
        emit_plot_data(
            &result.cumulant_diagrams[&2],
            &report.segmented,
            &config.output_dir.join(&name),
        )?;
        artifacts.push(name);
    }
    if let Some(report) = &result.report.wavelet_crossover {
        let name = "plot_wavelet.csv".to_string();
        emit_plot_data(
            &result.wavelet_diagram,
            &report.segmented,
            &config.output_dir.join(&name),
        )?;
        artifacts.push(name);
    }
    write_json(&config.output_dir.join("fit_report.json"), &result.report)?;
    artifacts.push("fit_report.json".to_string());
    artifacts.push("run_meta.json".to_string());
    write_json(
        &config.output_dir.join("run_meta.json"),
        &RunMeta {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            replica_seeds,
            seed_derivation: SEED_DERIVATION_NOTE,
            ensemble_averaging: ENSEMBLE_NOTE,
            artifacts: artifacts.clone(),
        },
    )?;
    info!("wrote {} artifacts to {}", artifacts.len(), config.output_dir.display());
    Ok(RunOutput {
        output_dir: config.output_dir.clone(),
        artifacts,
        cumulant_significant: result
            .report
            .cumulant_crossover
            .as_ref()
            .map(|r| r.significant),
        wavelet_significant: result
            .report
            .wavelet_crossover
            .as_ref()
            .map(|r| r.significant),
    })
}
