//! Orthonormal discrete wavelet pyramid, per-octave detail variances, and
//! the wavelet logscale diagram.

use serde::{Deserialize, Serialize};

use crate::diagram::{DiagramPoint, ScalingDiagram};
use crate::error::{Error, Result};
use crate::series::{SeriesKind, TraceSeries};

/// Daubechies-4 scaling taps. The detail taps follow by the usual
/// alternating-flip g[k] = (-1)^k h[3-k].
const D4_H: [f64; 4] = [
    0.4829629131445341,
    0.8365163037378077,
    0.22414386804201339,
    -0.12940952255126034,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wavelet {
    #[default]
    Haar,
    D4,
}

impl Wavelet {
    pub fn name(self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::D4 => "d4",
        }
    }
}

/// Mean squared detail coefficient at one octave. Octaves with zero
/// variance or fewer than 8 coefficients exist in the list but are not
/// admitted to the diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctaveVariance {
    pub octave: u32,
    pub variance: f64,
    pub coefficient_count: usize,
}

/// Octaves with fewer detail coefficients than this are too noisy to
/// regress on.
pub const MIN_OCTAVE_COEFFICIENTS: usize = 8;

/// Largest octave that still keeps `MIN_OCTAVE_COEFFICIENTS` detail
/// coefficients for the given length.
pub fn default_max_octave(length: usize) -> u32 {
    let mut octave = 0u32;
    while length >> (octave + 1) >= MIN_OCTAVE_COEFFICIENTS {
        octave += 1;
    }
    octave
}

fn haar_step(input: &[f64], approx: &mut Vec<f64>, detail: &mut Vec<f64>) {
    let half = input.len() / 2;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    approx.clear();
    detail.clear();
    for k in 0..half {
        let a = input[2 * k];
        let b = input[2 * k + 1];
        approx.push((a + b) * s);
        detail.push((a - b) * s);
    }
}

fn d4_step(input: &[f64], approx: &mut Vec<f64>, detail: &mut Vec<f64>) {
    let n = input.len();
    let half = n / 2;
    approx.clear();
    detail.clear();
    for k in 0..half {
        let mut s = 0.0;
        let mut d = 0.0;
        for (i, &h) in D4_H.iter().enumerate() {
            let v = input[(2 * k + i) % n];
            s += h * v;
            // g[i] = (-1)^i h[3-i]
            let g = if i % 2 == 0 { D4_H[3 - i] } else { -D4_H[3 - i] };
            d += g * v;
        }
        approx.push(s);
        detail.push(d);
    }
}

/// Full pyramid: per-octave detail coefficients plus the final
/// approximation. Odd-length stages drop their last sample before the
/// filter pass, so counts are successive floor halvings.
pub fn dwt_pyramid(values: &[f64], wavelet: Wavelet, max_octave: u32) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut current = values.to_vec();
    let mut details = Vec::with_capacity(max_octave as usize);
    for _ in 0..max_octave {
        if current.len() % 2 == 1 {
            current.pop();
        }
        let mut approx = Vec::new();
        let mut detail = Vec::new();
        match wavelet {
            Wavelet::Haar => haar_step(&current, &mut approx, &mut detail),
            Wavelet::D4 => d4_step(&current, &mut approx, &mut detail),
        }
        details.push(detail);
        current = approx;
    }
    (details, current)
}

/// Mean squared detail coefficient per octave 1..=max_octave, with periodic
/// boundary handling.
pub fn dwt_detail_variances(
    series: &TraceSeries,
    wavelet: Wavelet,
    max_octave: u32,
) -> Result<Vec<OctaveVariance>> {
    if max_octave == 0 {
        return Err(Error::Domain("max octave must be at least 1".into()));
    }
    let needed = 1usize
        .checked_shl(max_octave + 2)
        .ok_or_else(|| Error::Domain(format!("max octave {max_octave} overflows")))?;
    if series.values.len() < needed {
        return Err(Error::Size(format!(
            "{} samples cannot support octave {max_octave}; need at least {needed}",
            series.values.len()
        )));
    }
    let (details, _) = dwt_pyramid(&series.values, wavelet, max_octave);
    Ok(details
        .iter()
        .enumerate()
        .map(|(i, d)| OctaveVariance {
            octave: i as u32 + 1,
            variance: d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64,
            coefficient_count: d.len(),
        })
        .collect())
}

/// Points (octave, log2 variance) weighted by coefficient count. Octaves
/// with near-zero variance or under-populated coefficient sets are left out.
pub fn logscale_diagram(variances: &[OctaveVariance]) -> Result<ScalingDiagram> {
    // D4 detail taps do not cancel constants exactly in floating point, so an
    // annihilated octave can surface as variance around 1e-33 rather than 0.
    let points: Vec<DiagramPoint> = variances
        .iter()
        .filter(|v| {
            v.variance > 1e-12
                && v.variance.is_finite()
                && v.coefficient_count >= MIN_OCTAVE_COEFFICIENTS
        })
        .map(|v| DiagramPoint {
            scale_index: v.octave as f64,
            log2_statistic: v.variance.log2(),
            weight: v.coefficient_count as f64,
            stderr: 0.0,
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            what: "octaves with usable variance",
            needed: 3,
            got: points.len(),
        });
    }
    ScalingDiagram::new(2, points)
}

/// Hurst estimate recovered from a wavelet diagram slope. Slopes are
/// 2H - 1 on increment input and 2H + 1 on cumulative input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurstEstimate {
    pub value: f64,
    pub out_of_range: bool,
}

pub fn hurst_from_slope(slope: f64, kind: SeriesKind) -> HurstEstimate {
    let value = match kind {
        SeriesKind::Increments => (slope + 1.0) / 2.0,
        SeriesKind::Cumulative => (slope - 1.0) / 2.0,
    };
    HurstEstimate {
        value,
        out_of_range: !(value > 0.0 && value < 1.0),
    }
}
