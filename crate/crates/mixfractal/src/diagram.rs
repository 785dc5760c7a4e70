//! Logscale diagrams: the regression-ready view of a multi-scale statistic,
//! shared by the cumulant and wavelet paths, plus ensemble averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One admitted scale. `scale_index` is log2 of the block size for cumulant
/// diagrams and the octave number for wavelet diagrams; both count doublings
/// of scale, so fits treat them identically. `stderr` is 0 until replicas
/// are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub scale_index: f64,
    pub log2_statistic: f64,
    pub weight: f64,
    pub stderr: f64,
}

/// Points admitted to regression, sorted by strictly increasing scale.
/// Rows excluded upstream (near-zero statistic, too few blocks) never enter;
/// the producing table keeps them with flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingDiagram {
    pub order: u32,
    pub points: Vec<DiagramPoint>,
}

impl ScalingDiagram {
    pub fn new(order: u32, points: Vec<DiagramPoint>) -> Result<Self> {
        for pair in points.windows(2) {
            if pair[0].scale_index >= pair[1].scale_index {
                return Err(Error::Domain(format!(
                    "diagram scales must increase strictly: {} then {}",
                    pair[0].scale_index, pair[1].scale_index
                )));
            }
        }
        for p in &points {
            if !(p.scale_index.is_finite() && p.log2_statistic.is_finite()) {
                return Err(Error::Domain("diagram points must be finite".into()));
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::Domain(format!(
                    "diagram weight {} must be positive",
                    p.weight
                )));
            }
        }
        Ok(ScalingDiagram { order, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.scale_index).collect()
    }

    pub fn statistics(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.log2_statistic).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.weight).collect()
    }
}

/// Pointwise average of per-replica diagrams in the log domain (a geometric
/// mean of the underlying statistics). A scale survives only if every
/// replica admitted it; `stderr` becomes the standard error of the replica
/// mean at that scale (0 for a single replica).
pub fn ensemble_average(diagrams: &[ScalingDiagram]) -> Result<ScalingDiagram> {
    let first = diagrams.first().ok_or(Error::EmptyInput)?;
    for d in diagrams {
        if d.order != first.order {
            return Err(Error::Domain(format!(
                "cannot average diagrams of orders {} and {}",
                first.order, d.order
            )));
        }
    }
    let replicas = diagrams.len() as f64;
    let mut points = Vec::new();
    for p in &first.points {
        let mut values = Vec::with_capacity(diagrams.len());
        let mut weight_sum = 0.0;
        let mut admitted_everywhere = true;
        for d in diagrams {
            match d.points.iter().find(|q| q.scale_index == p.scale_index) {
                Some(q) => {
                    values.push(q.log2_statistic);
                    weight_sum += q.weight;
                }
                None => {
                    admitted_everywhere = false;
                    break;
                }
            }
        }
        if !admitted_everywhere {
            continue;
        }
        let mean = values.iter().sum::<f64>() / replicas;
        let stderr = if diagrams.len() > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (replicas - 1.0);
            (var / replicas).sqrt()
        } else {
            0.0
        };
        points.push(DiagramPoint {
            scale_index: p.scale_index,
            log2_statistic: mean,
            weight: weight_sum / replicas,
            stderr,
        });
    }
    ScalingDiagram::new(first.order, points)
}
