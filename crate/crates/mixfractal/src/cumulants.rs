//! Unbiased cumulant estimation (k-statistics, orders 2 to 4), the
//! multi-scale cumulant scan, and the uni-fractal and linear-fractal model
//! fits on the resulting diagrams.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::aggregation::{aggregate, ScaleLadder};
use crate::diagram::{DiagramPoint, ScalingDiagram};
use crate::error::{Error, Result};
use crate::fit::wls_line;
use crate::series::{SeriesKind, TraceSeries};

/// Rows whose cumulant magnitude falls below this are flagged near-zero;
/// their logarithm would be unusable.
pub const NEAR_ZERO_THRESHOLD: f64 = 1e-12;

/// Rows estimated from fewer complete blocks than this are excluded from
/// regression.
pub const MIN_REGRESSION_BLOCKS: usize = 16;

/// Unbiased k-statistic of the sample, orders 2 to 4.
pub fn sample_cumulant(series: &TraceSeries, order: u32) -> Result<f64> {
    k_statistic(&series.values, order)
}

pub(crate) fn k_statistic(values: &[f64], order: u32) -> Result<f64> {
    if !(2..=4).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    let n = values.len();
    // n = order is the smallest sample where every denominator factor stays
    // positive; k2 of two samples is well defined.
    if n < order as usize {
        return Err(Error::InsufficientData {
            what: "samples for a k-statistic",
            needed: order as usize,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    Ok(match order {
        2 => nf / (nf - 1.0) * m2,
        3 => nf * nf * m3 / ((nf - 1.0) * (nf - 2.0)),
        _ => {
            nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2)
                / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0))
        }
    })
}

/// One (order, block size) cell of the scan. `magnitude` is |k_m| of the
/// aggregated series; the sign is kept separately so odd cumulants stay
/// informative after the modulus.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CumulantRow {
    pub order: u32,
    pub block: usize,
    pub blocks: usize,
    pub magnitude: f64,
    pub sign: i8,
    /// Magnitude indistinguishable from zero: below the absolute floor, or
    /// for orders 3 and 4 below three null standard errors
    /// (sqrt(6 k2^3 / B) and sqrt(24 k2^4 / B)).
    pub near_zero: bool,
    /// Not admitted to regression: near-zero or from too few blocks.
    pub excluded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CumulantScalingTable {
    pub orders: Vec<u32>,
    pub rows: Vec<CumulantRow>,
}

impl CumulantScalingTable {
    /// Regression-ready diagram for one order: admitted rows only, with
    /// log2 block size against log2 magnitude, weighted by block count.
    pub fn diagram(&self, order: u32) -> Result<ScalingDiagram> {
        if !self.orders.contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let points = self
            .rows
            .iter()
            .filter(|r| r.order == order && !r.excluded)
            .map(|r| DiagramPoint {
                scale_index: (r.block as f64).log2(),
                log2_statistic: r.magnitude.log2(),
                weight: r.blocks as f64,
                stderr: 0.0,
            })
            .collect();
        ScalingDiagram::new(order, points)
    }
}

/// Aggregate at every ladder block size and estimate |k_m| there for each
/// requested order. Rows are never dropped: unusable ones carry flags.
pub fn cumulant_scan(
    series: &TraceSeries,
    ladder: &ScaleLadder,
    orders: &[u32],
) -> Result<CumulantScalingTable> {
    if series.kind != SeriesKind::Increments {
        return Err(Error::Kind {
            expected: SeriesKind::Increments.name(),
            got: series.kind.name(),
        });
    }
    let mut sorted: Vec<u32> = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::Config("cumulant scan needs at least one order".into()));
    }
    for &m in &sorted {
        if !(2..=4).contains(&m) {
            return Err(Error::UnsupportedOrder(m));
        }
    }
    let mut rows = Vec::with_capacity(sorted.len() * ladder.block_sizes.len());
    for &block in &ladder.block_sizes {
        let aggregated = aggregate(series, block)?;
        let blocks = aggregated.values.len();
        let k2 = k_statistic(&aggregated.values, 2).unwrap_or(0.0);
        for &order in &sorted {
            let k = k_statistic(&aggregated.values, order)?;
            let magnitude = k.abs();
            let null_stderr = match order {
                3 => (6.0 * k2.powi(3) / blocks as f64).sqrt(),
                4 => (24.0 * k2.powi(4) / blocks as f64).sqrt(),
                _ => 0.0,
            };
            let near_zero = magnitude < NEAR_ZERO_THRESHOLD || magnitude < 3.0 * null_stderr;
            rows.push(CumulantRow {
                order,
                block,
                blocks,
                magnitude,
                sign: if k > 0.0 {
                    1
                } else if k < 0.0 {
                    -1
                } else {
                    0
                },
                near_zero,
                excluded: near_zero || blocks < MIN_REGRESSION_BLOCKS,
            });
        }
    }
    Ok(CumulantScalingTable {
        orders: sorted,
        rows,
    })
}

/// Uni-fractal fit of one diagram: slope m + 2(H-1), hence
/// H = (slope - m)/2 + 1. `out_of_range` marks H outside (0, 1) without
/// rejecting the fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UnifractalFit {
    pub order: u32,
    pub hurst: f64,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub slope_stderr: f64,
    pub out_of_range: bool,
}

pub fn fit_unifractal(diagram: &ScalingDiagram) -> Result<UnifractalFit> {
    if diagram.len() < 3 {
        return Err(Error::InsufficientData {
            what: "admitted diagram points",
            needed: 3,
            got: diagram.len(),
        });
    }
    let line = wls_line(&diagram.scales(), &diagram.statistics(), &diagram.weights())?;
    let hurst = (line.slope - diagram.order as f64) / 2.0 + 1.0;
    Ok(UnifractalFit {
        order: diagram.order,
        hurst,
        slope: line.slope,
        intercept: line.intercept,
        residual: line.sse,
        slope_stderr: line.slope_stderr,
        out_of_range: !(hurst > 0.0 && hurst < 1.0),
    })
}

/// Linear-fractal fit slope(m) = A*m + B across orders.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFractalFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

pub fn fit_linear_fractal(slopes: &BTreeMap<u32, f64>) -> Result<LinearFractalFit> {
    if slopes.len() < 2 {
        return Err(Error::InsufficientData {
            what: "orders for a linear-fractal fit",
            needed: 2,
            got: slopes.len(),
        });
    }
    let x: Vec<f64> = slopes.keys().map(|&m| m as f64).collect();
    let y: Vec<f64> = slopes.values().copied().collect();
    let w = vec![1.0; x.len()];
    let line = wls_line(&x, &y, &w)?;
    Ok(LinearFractalFit {
        a: line.slope,
        b: line.intercept,
        residual: line.sse,
    })
}

/// Per-order Hurst estimates are declared inconsistent when two orders
/// disagree by more than three combined slope standard errors (floored at
/// 0.01 so exact diagrams do not trip on zero residual).
const HURST_STDERR_FLOOR: f64 = 0.01;

/// Combined view of the per-order fits and the cross-order linear model.
#[derive(Debug, Clone, Serialize)]
pub struct FractalFitReport {
    pub slopes: BTreeMap<u32, f64>,
    pub intercepts: BTreeMap<u32, f64>,
    pub hurst_by_order: BTreeMap<u32, f64>,
    pub residuals: BTreeMap<u32, f64>,
    pub unifractal_h: f64,
    pub out_of_range: bool,
    pub inconsistent: bool,
    pub linear: Option<LinearFractalFit>,
}

impl FractalFitReport {
    pub fn assemble(fits: &[UnifractalFit]) -> Result<FractalFitReport> {
        if fits.is_empty() {
            return Err(Error::InsufficientData {
                what: "per-order fits",
                needed: 1,
                got: 0,
            });
        }
        let mut slopes = BTreeMap::new();
        let mut intercepts = BTreeMap::new();
        let mut hurst_by_order = BTreeMap::new();
        let mut residuals = BTreeMap::new();
        let mut weight_sum = 0.0;
        let mut weighted_h = 0.0;
        for f in fits {
            slopes.insert(f.order, f.slope);
            intercepts.insert(f.order, f.intercept);
            hurst_by_order.insert(f.order, f.hurst);
            residuals.insert(f.order, f.residual);
            let se = (f.slope_stderr / 2.0).max(HURST_STDERR_FLOOR);
            weight_sum += 1.0 / (se * se);
            weighted_h += f.hurst / (se * se);
        }
        let unifractal_h = weighted_h / weight_sum;
        let mut inconsistent = false;
        for a in fits {
            for b in fits {
                let sa = (a.slope_stderr / 2.0).max(HURST_STDERR_FLOOR);
                let sb = (b.slope_stderr / 2.0).max(HURST_STDERR_FLOOR);
                if (a.hurst - b.hurst).abs() > 3.0 * (sa + sb) {
                    inconsistent = true;
                }
            }
        }
        let linear = if slopes.len() >= 2 {
            Some(fit_linear_fractal(&slopes)?)
        } else {
            None
        };
        Ok(FractalFitReport {
            slopes,
            intercepts,
            hurst_by_order,
            residuals,
            unifractal_h,
            out_of_range: fits.iter().any(|f| f.out_of_range),
            inconsistent,
            linear,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::dyadic_ladder;
    use crate::synthesis::synthesize_fgn;

    fn increments(values: &[f64]) -> TraceSeries {
        TraceSeries::new(values.to_vec(), SeriesKind::Increments).unwrap()
    }

    /// Brute-force k-statistics straight from raw power sums. Independent
    /// of the central-moment forms in the implementation.
    fn power_sum_oracle(values: &[f64], order: u32) -> f64 {
        let n = values.len() as f64;
        let s1: f64 = values.iter().sum();
        let s2: f64 = values.iter().map(|v| v.powi(2)).sum();
        let s3: f64 = values.iter().map(|v| v.powi(3)).sum();
        let s4: f64 = values.iter().map(|v| v.powi(4)).sum();
        match order {
            2 => (n * s2 - s1 * s1) / (n * (n - 1.0)),
            3 => (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3)
                / (n * (n - 1.0) * (n - 2.0)),
            4 => {
                (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2
                    - 3.0 * n * (n - 1.0) * s2 * s2
                    - 4.0 * n * (n + 1.0) * s1 * s3
                    + n * n * (n + 1.0) * s4)
                    / (n * (n - 1.0) * (n - 2.0) * (n - 3.0))
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn k_statistics_match_hand_values() {
        let s = increments(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!((sample_cumulant(&s, 2).unwrap() - 2.5).abs() < 1e-12);
        assert!(sample_cumulant(&s, 3).unwrap().abs() < 1e-12);
        assert!((sample_cumulant(&s, 4).unwrap() - -7.5).abs() < 1e-12);
        let two = increments(&[0.0, 2.0]);
        assert_eq!(sample_cumulant(&two, 2).unwrap(), 2.0);
    }

    #[test]
    fn k_statistics_match_the_power_sum_oracle() {
        // Deterministic ad-hoc generator; no statistical structure needed.
        let mut state = 0x2545f4914f6cdd1du64;
        for len in [5usize, 8, 13, 21, 34, 64] {
            let values: Vec<f64> = (0..len)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
                })
                .collect();
            let s = increments(&values);
            for order in 2..=4 {
                let got = sample_cumulant(&s, order).unwrap();
                let want = power_sum_oracle(&values, order);
                let scale = want.abs().max(1e-6);
                assert!(
                    ((got - want) / scale).abs() < 1e-10,
                    "order {order} len {len}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn shift_invariance_and_scale_equivariance() {
        let base = [0.3, -1.2, 2.4, 0.9, -0.5, 1.7, -2.2, 0.1];
        let s = increments(&base);
        for order in 2..=4u32 {
            let k = sample_cumulant(&s, order).unwrap();
            for c in [1.0, -3.5, 100.0] {
                let shifted = increments(&base.map(|v| v + c));
                let ks = sample_cumulant(&shifted, order).unwrap();
                assert!((ks - k).abs() < 1e-9 * k.abs().max(1.0), "shift {c} order {order}");
            }
            for c in [2.0, -0.5] {
                let scaled = increments(&base.map(|v| v * c));
                let kc = sample_cumulant(&scaled, order).unwrap();
                let want = c.powi(order as i32) * k;
                assert!((kc - want).abs() < 1e-10 * want.abs().max(1.0), "scale {c} order {order}");
            }
        }
    }

    #[test]
    fn order_and_length_guards() {
        let s = increments(&[1.0, 2.0, 3.0]);
        assert!(matches!(sample_cumulant(&s, 5), Err(Error::UnsupportedOrder(5))));
        assert!(matches!(sample_cumulant(&s, 1), Err(Error::UnsupportedOrder(1))));
        assert!(matches!(sample_cumulant(&s, 4), Err(Error::InsufficientData { .. })));
        assert!(sample_cumulant(&s, 3).is_ok());
    }

    #[test]
    fn additivity_under_independence() {
        let a = synthesize_fgn(0.6, 1 << 15, 21).unwrap();
        let b = synthesize_fgn(0.6, 1 << 15, 22).unwrap();
        let sum: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        let ka = sample_cumulant(&a, 2).unwrap();
        let kb = sample_cumulant(&b, 2).unwrap();
        let ks = k_statistic(&sum, 2).unwrap();
        assert!((ks - (ka + kb)).abs() < 0.05 * (ka + kb), "{ks} vs {}", ka + kb);
    }

    #[test]
    fn white_noise_variance_slope_is_one() {
        let s = synthesize_fgn(0.5, 1 << 14, 7).unwrap();
        let ladder = dyadic_ladder(s.values.len(), 16);
        let table = cumulant_scan(&s, &ladder, &[2]).unwrap();
        let fit = fit_unifractal(&table.diagram(2).unwrap()).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "slope {}", fit.slope);
        assert!((fit.hurst - 0.5).abs() < 0.05, "H {}", fit.hurst);
    }

    #[test]
    fn gaussian_third_order_rows_are_flagged() {
        let s = synthesize_fgn(0.6, 1 << 14, 3).unwrap();
        let ladder = dyadic_ladder(s.values.len(), 16);
        let table = cumulant_scan(&s, &ladder, &[3]).unwrap();
        let flagged = table
            .rows
            .iter()
            .filter(|r| r.order == 3)
            .all(|r| r.excluded || r.near_zero);
        assert!(flagged, "rows: {:?}", table.rows);
    }

    #[test]
    fn constant_series_rows_are_near_zero() {
        let s = increments(&[2.0; 64]);
        let ladder = dyadic_ladder(64, 16);
        let table = cumulant_scan(&s, &ladder, &[2, 3, 4]).unwrap();
        assert!(table.rows.iter().all(|r| r.near_zero && r.excluded));
        assert!(table.diagram(2).unwrap().is_empty());
    }

    #[test]
    fn scan_preserves_every_row_with_flags() {
        let s = synthesize_fgn(0.5, 1 << 10, 5).unwrap();
        let ladder = dyadic_ladder(1 << 10, 16);
        let table = cumulant_scan(&s, &ladder, &[2, 4]).unwrap();
        assert_eq!(table.rows.len(), 2 * ladder.block_sizes.len());
        // Order 2 of white noise is far from zero at every scale.
        assert!(table
            .rows
            .iter()
            .filter(|r| r.order == 2)
            .all(|r| !r.excluded));
        let diagram = table.diagram(2).unwrap();
        assert_eq!(diagram.len(), ladder.block_sizes.len());
        assert_eq!(diagram.points[0].weight, 1024.0);
        assert!(table.diagram(3).is_err());
    }

    #[test]
    fn unifractal_inversion_on_noiseless_diagrams() {
        let exact = |slope: f64| {
            let points = (0..6)
                .map(|i| DiagramPoint {
                    scale_index: i as f64,
                    log2_statistic: slope * i as f64 + 0.25,
                    weight: 1.0,
                    stderr: 0.0,
                })
                .collect();
            ScalingDiagram::new(2, points).unwrap()
        };
        let fit = fit_unifractal(&exact(1.4)).unwrap();
        assert!((fit.hurst - 0.7).abs() < 1e-12);
        assert!(!fit.out_of_range);
        let fit = fit_unifractal(&exact(1.0)).unwrap();
        assert!((fit.hurst - 0.5).abs() < 1e-12);
        let fit = fit_unifractal(&exact(2.4)).unwrap();
        assert!((fit.hurst - 1.2).abs() < 1e-12);
        assert!(fit.out_of_range);
    }

    #[test]
    fn unifractal_needs_three_points() {
        let points = vec![
            DiagramPoint { scale_index: 0.0, log2_statistic: 0.0, weight: 1.0, stderr: 0.0 },
            DiagramPoint { scale_index: 1.0, log2_statistic: 1.0, weight: 1.0, stderr: 0.0 },
        ];
        let d = ScalingDiagram::new(2, points).unwrap();
        assert!(matches!(fit_unifractal(&d), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn linear_fractal_fit_recovers_exact_lines() {
        let slopes: BTreeMap<u32, f64> = [(2, 1.4), (3, 2.4), (4, 3.4)].into();
        let fit = fit_linear_fractal(&slopes).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-12);
        assert!((fit.b - -0.6).abs() < 1e-12);
        assert!(fit.residual < 1e-20);

        let slopes: BTreeMap<u32, f64> = [(2, 2.0), (3, 3.0)].into();
        let fit = fit_linear_fractal(&slopes).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-12);
        assert!(fit.b.abs() < 1e-12);

        let one: BTreeMap<u32, f64> = [(2, 1.4)].into();
        assert!(matches!(
            fit_linear_fractal(&one),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn report_flags_disagreeing_orders() {
        let fit = |order: u32, hurst: f64| UnifractalFit {
            order,
            hurst,
            slope: order as f64 + 2.0 * (hurst - 1.0),
            intercept: 0.0,
            residual: 0.0,
            slope_stderr: 0.0,
            out_of_range: false,
        };
        let consistent = FractalFitReport::assemble(&[fit(2, 0.7), fit(3, 0.71)]).unwrap();
        assert!(!consistent.inconsistent);
        assert!((consistent.unifractal_h - 0.705).abs() < 1e-9);
        assert!(consistent.linear.is_some());

        let split = FractalFitReport::assemble(&[fit(2, 0.5), fit(3, 0.9)]).unwrap();
        assert!(split.inconsistent);

        let single = FractalFitReport::assemble(&[fit(2, 0.7)]).unwrap();
        assert!(!single.inconsistent);
        assert!(single.linear.is_none());
        assert!(FractalFitReport::assemble(&[]).is_err());
    }
}
