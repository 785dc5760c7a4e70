//! Analytic crossover prediction for two-component mixtures and empirical
//! crossover detection in any scaling diagram.

use serde::Serialize;

use crate::diagram::ScalingDiagram;
use crate::error::{Error, Result};
use crate::fit::{fit_two_powerlaw, wls_line, TwoPowerLaw};
use crate::series::SeriesKind;
use crate::wavelet::{hurst_from_slope, HurstEstimate};

/// Scale at which the dominant component of a two-regime statistic flips,
/// with the asymptotic slopes on either side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverPrediction {
    pub log2_break: f64,
    pub small_scale_slope: f64,
    pub large_scale_slope: f64,
}

fn check_prefactors(c_small: f64, c_large: f64) -> Result<()> {
    if !(c_small > 0.0 && c_large > 0.0) || !c_small.is_finite() || !c_large.is_finite() {
        return Err(Error::Domain(format!(
            "crossover prefactors must be positive and finite, got {c_small} and {c_large}"
        )));
    }
    if c_small <= c_large {
        return Err(Error::NoCrossover { c_small, c_large });
    }
    Ok(())
}

fn check_ordering(h1: f64, h2: f64) -> Result<()> {
    if !(h1 < h2) {
        return Err(Error::Ordering { h1, h2 });
    }
    Ok(())
}

/// Where c1 * n^{m+2(H1-1)} meets c2 * n^{m+2(H2-1)}:
/// n* = (c1/c2)^{1/(2(H2-H1))}. Demands c1 > c2, otherwise the steeper
/// regime dominates from the start and no crossover exists.
pub fn predict_crossover_cumulant(
    c1: f64,
    c2: f64,
    h1: f64,
    h2: f64,
    order: u32,
) -> Result<CrossoverPrediction> {
    check_prefactors(c1, c2)?;
    check_ordering(h1, h2)?;
    let m = order as f64;
    Ok(CrossoverPrediction {
        log2_break: (c1 / c2).log2() / (2.0 * (h2 - h1)),
        small_scale_slope: m + 2.0 * (h1 - 1.0),
        large_scale_slope: m + 2.0 * (h2 - 1.0),
    })
}

/// Octave-domain analogue for wavelet diagrams: the break octave is
/// j* = log2(c3/c4) / (2(H2-H1)); regime slopes depend on whether the
/// transform ran on increments (2H-1) or on the cumulative path (2H+1).
pub fn predict_crossover_wavelet(
    c3: f64,
    c4: f64,
    h1: f64,
    h2: f64,
    kind: SeriesKind,
) -> Result<CrossoverPrediction> {
    check_prefactors(c3, c4)?;
    check_ordering(h1, h2)?;
    let offset = match kind {
        SeriesKind::Increments => -1.0,
        SeriesKind::Cumulative => 1.0,
    };
    Ok(CrossoverPrediction {
        log2_break: (c3 / c4).log2() / (2.0 * (h2 - h1)),
        small_scale_slope: 2.0 * h1 + offset,
        large_scale_slope: 2.0 * h2 + offset,
    })
}

/// Best two-segment weighted line fit over a diagram, against the
/// single-line baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentedFit {
    /// Index of the last point in the low-scale segment.
    pub break_index: usize,
    /// Abscissa where the two fitted lines intersect; midpoint of the
    /// bracketing scales when the slopes are numerically equal.
    pub log2_break: f64,
    pub slope_low: f64,
    pub intercept_low: f64,
    pub slope_high: f64,
    pub intercept_high: f64,
    pub sse: f64,
    pub single_line_sse: f64,
}

/// Exhaustive breakpoint scan with at least two points per side; ties go to
/// the smaller break index.
pub fn fit_segmented(diagram: &ScalingDiagram) -> Result<SegmentedFit> {
    let n = diagram.len();
    if n < 5 {
        return Err(Error::InsufficientData {
            what: "admitted diagram points",
            needed: 5,
            got: n,
        });
    }
    let x = diagram.scales();
    let y = diagram.statistics();
    let w = diagram.weights();
    let single = wls_line(&x, &y, &w)?;
    let mut best: Option<SegmentedFit> = None;
    for b in 1..=n - 3 {
        let low = wls_line(&x[..=b], &y[..=b], &w[..=b])?;
        let high = wls_line(&x[b + 1..], &y[b + 1..], &w[b + 1..])?;
        let sse = low.sse + high.sse;
        if best.as_ref().is_none_or(|f| sse < f.sse - 1e-15) {
            let log2_break = if (low.slope - high.slope).abs() > 1e-12 {
                (high.intercept - low.intercept) / (low.slope - high.slope)
            } else {
                0.5 * (x[b] + x[b + 1])
            };
            best = Some(SegmentedFit {
                break_index: b,
                log2_break,
                slope_low: low.slope,
                intercept_low: low.intercept,
                slope_high: high.slope,
                intercept_high: high.intercept,
                sse,
                single_line_sse: single.sse,
            });
        }
    }
    Ok(best.expect("breakpoint scan covers at least one split"))
}

/// How a diagram slope converts to a Hurst exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HurstInversion {
    /// Aggregated cumulant of the given order: slope = m + 2(H-1).
    CumulantOrder(u32),
    /// Wavelet detail variance on increment input: slope = 2H - 1.
    WaveletIncrements,
    /// Wavelet detail variance on the cumulative path: slope = 2H + 1.
    WaveletCumulative,
}

impl HurstInversion {
    pub fn hurst(self, slope: f64) -> HurstEstimate {
        match self {
            HurstInversion::CumulantOrder(m) => {
                let value = (slope - m as f64) / 2.0 + 1.0;
                HurstEstimate {
                    value,
                    out_of_range: !(value > 0.0 && value < 1.0),
                }
            }
            HurstInversion::WaveletIncrements => hurst_from_slope(slope, SeriesKind::Increments),
            HurstInversion::WaveletCumulative => hurst_from_slope(slope, SeriesKind::Cumulative),
        }
    }
}

/// Detection thresholds. A crossover is reported significant only when the
/// two-segment fit beats the single line by `significance_ratio` AND the
/// smooth two-power-law refinement is well formed: finite parameters, slope
/// separation within the bracket, break inside the observed scales, and a
/// refined SSE that also clears the ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverSettings {
    pub significance_ratio: f64,
    pub min_slope_separation: f64,
    pub max_slope_separation: f64,
}

impl Default for CrossoverSettings {
    fn default() -> Self {
        CrossoverSettings {
            significance_ratio: 0.5,
            min_slope_separation: 0.1,
            max_slope_separation: 4.0,
        }
    }
}

/// Crossover detection result. The reported break and regime slopes come
/// from the refinement when it is well formed, else from the raw segmented
/// fit; `segmented` always keeps the raw fit for inspection.
#[derive(Debug, Clone, Serialize)]
pub struct CrossoverReport {
    pub segmented: SegmentedFit,
    pub refined: Option<TwoPowerLaw>,
    pub significant: bool,
    pub sse_ratio: f64,
    pub log2_break: f64,
    pub slope_low: f64,
    pub slope_high: f64,
    pub hurst_low: HurstEstimate,
    pub hurst_high: HurstEstimate,
    pub prediction: Option<CrossoverPrediction>,
    /// |empirical - analytic| break, when a prediction was supplied.
    pub deviation: Option<f64>,
}

pub fn crossover_report(
    diagram: &ScalingDiagram,
    prediction: Option<CrossoverPrediction>,
    inversion: HurstInversion,
    settings: &CrossoverSettings,
) -> Result<CrossoverReport> {
    let segmented = fit_segmented(diagram)?;
    let x = diagram.scales();
    let refined = fit_two_powerlaw(
        &x,
        &diagram.statistics(),
        &diagram.weights(),
        [
            segmented.intercept_low,
            segmented.intercept_high,
            segmented.slope_low,
            segmented.slope_high,
        ],
    )?;

    let sse_budget = settings.significance_ratio * segmented.single_line_sse;
    let separation = refined.slope_high - refined.slope_low;
    let refined_break = refined.log2_break();
    let well_formed = [
        refined.intercept_low,
        refined.intercept_high,
        refined.slope_low,
        refined.slope_high,
        refined_break,
    ]
    .iter()
    .all(|v| v.is_finite())
        && separation >= settings.min_slope_separation
        && separation <= settings.max_slope_separation
        && refined_break >= x[1]
        && refined_break <= x[x.len() - 2]
        && refined.sse <= sse_budget;
    let significant = segmented.sse < sse_budget && well_formed;

    let (log2_break, slope_low, slope_high) = if well_formed {
        (refined_break, refined.slope_low, refined.slope_high)
    } else {
        (segmented.log2_break, segmented.slope_low, segmented.slope_high)
    };
    let sse_ratio = if segmented.single_line_sse > 0.0 {
        segmented.sse / segmented.single_line_sse
    } else {
        1.0
    };
    Ok(CrossoverReport {
        segmented,
        refined: Some(refined),
        significant,
        sse_ratio,
        log2_break,
        slope_low,
        slope_high,
        hurst_low: inversion.hurst(slope_low),
        hurst_high: inversion.hurst(slope_high),
        prediction,
        deviation: prediction.map(|p| (log2_break - p.log2_break).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::DiagramPoint;

    fn diagram_from(xs: &[f64], ys: &[f64], ws: &[f64]) -> ScalingDiagram {
        let points = xs
            .iter()
            .zip(ys)
            .zip(ws)
            .map(|((&x, &y), &w)| DiagramPoint {
                scale_index: x,
                log2_statistic: y,
                weight: w,
                stderr: 0.0,
            })
            .collect();
        ScalingDiagram::new(2, points).unwrap()
    }

    /// Exact two-power-law curve y = log2(2*2^x + 2^{1.4x}) over 15 dyadic
    /// scales with the block counts of a 2^14-sample scan as weights.
    fn exact_mixture_diagram() -> ScalingDiagram {
        let xs: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| (2.0 * x.exp2() + (1.4 * x).exp2()).log2())
            .collect();
        let ws: Vec<f64> = xs.iter().map(|&x| ((1 << 14) as f64 / x.exp2()).floor()).collect();
        diagram_from(&xs, &ys, &ws)
    }

    #[test]
    fn cumulant_prediction_closed_form() {
        let p = predict_crossover_cumulant(2.0, 1.0, 0.5, 0.7, 2).unwrap();
        assert!((p.log2_break - 2.5).abs() < 1e-12);
        assert!((p.small_scale_slope - 1.0).abs() < 1e-12);
        assert!((p.large_scale_slope - 1.4).abs() < 1e-12);
        // Substituting n* back makes the two power laws agree.
        let n_star = p.log2_break.exp2();
        assert!((n_star - 5.6568542494923806).abs() < 1e-10);
        let lhs = 2.0 * n_star.powf(p.small_scale_slope);
        let rhs = 1.0 * n_star.powf(p.large_scale_slope);
        assert!(((lhs - rhs) / rhs).abs() < 1e-10);
    }

    #[test]
    fn near_equal_prefactors_cross_at_scale_one() {
        let p = predict_crossover_cumulant(1.0 + 1e-9, 1.0, 0.5, 0.7, 2).unwrap();
        assert!(p.log2_break > 0.0 && p.log2_break < 1e-6);
    }

    #[test]
    fn prediction_preconditions() {
        assert!(matches!(
            predict_crossover_cumulant(1.0, 2.0, 0.5, 0.7, 2),
            Err(Error::NoCrossover { .. })
        ));
        assert!(matches!(
            predict_crossover_cumulant(2.0, 1.0, 0.7, 0.5, 2),
            Err(Error::Ordering { .. })
        ));
        assert!(predict_crossover_cumulant(0.0, -1.0, 0.5, 0.7, 2).is_err());
        assert!(matches!(
            predict_crossover_wavelet(1.0, 2.0, 0.5, 0.7, SeriesKind::Increments),
            Err(Error::NoCrossover { .. })
        ));
    }

    #[test]
    fn wavelet_prediction_conventions() {
        let p = predict_crossover_wavelet(4.0, 1.0, 0.5, 0.7, SeriesKind::Increments).unwrap();
        assert!((p.log2_break - 5.0).abs() < 1e-12);
        assert!(p.small_scale_slope.abs() < 1e-12);
        assert!((p.large_scale_slope - 0.4).abs() < 1e-12);
        let p = predict_crossover_wavelet(4.0, 1.0, 0.5, 0.7, SeriesKind::Cumulative).unwrap();
        assert!((p.small_scale_slope - 2.0).abs() < 1e-12);
        assert!((p.large_scale_slope - 2.4).abs() < 1e-12);
    }

    #[test]
    fn segmented_fit_recovers_an_exact_kink() {
        // Slope 1 up to x=5, slope 1.4 beyond, continuous at the kink.
        let xs: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x <= 5.0 { x } else { 5.0 + 1.4 * (x - 5.0) })
            .collect();
        let ws = vec![1.0; 12];
        let fit = fit_segmented(&diagram_from(&xs, &ys, &ws)).unwrap();
        assert_eq!(fit.break_index, 4);
        assert!((fit.log2_break - 5.0).abs() < 1e-9);
        assert!((fit.slope_low - 1.0).abs() < 1e-9);
        assert!((fit.slope_high - 1.4).abs() < 1e-9);
        assert!(fit.sse < 1e-18);
        assert!(fit.sse <= fit.single_line_sse);
    }

    #[test]
    fn segmented_fit_on_a_pure_line_degenerates() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 0.7 * x + 2.0).collect();
        let ws = vec![1.0; 8];
        let fit = fit_segmented(&diagram_from(&xs, &ys, &ws)).unwrap();
        assert!((fit.slope_low - fit.slope_high).abs() < 1e-9);
        assert!((fit.sse - fit.single_line_sse).abs() < 1e-18);
    }

    #[test]
    fn segmented_fit_matches_the_frozen_oracle_on_the_exact_curve() {
        let fit = fit_segmented(&exact_mixture_diagram()).unwrap();
        assert_eq!(fit.break_index, 3);
        let close = |got: f64, want: f64| ((got - want) / want).abs() < 1e-9;
        assert!(close(fit.log2_break, 3.4378405135907637), "{}", fit.log2_break);
        assert!(close(fit.slope_low, 1.1652997092884767));
        assert!(close(fit.intercept_low, 1.5797113104157001));
        assert!(close(fit.slope_high, 1.2935848312109315));
        assert!(close(fit.intercept_high, 1.1386875209797545));
        assert!(close(fit.sse, 5.881150611583708));
        assert!(close(fit.single_line_sse, 77.495837941206659));
    }

    #[test]
    fn segmented_fit_needs_five_points() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 1.0, 2.0, 3.0];
        let ws = [1.0; 4];
        assert!(matches!(
            fit_segmented(&diagram_from(&xs, &ys, &ws)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn segmented_invariants_hold_across_synthetic_kinks() {
        for &(s1, s2) in &[(0.5, 1.5), (1.0, 1.4), (-0.2, 0.9), (2.0, 3.5)] {
            for &kink in &[3.0, 5.0, 8.0] {
                for n in [8usize, 11, 15] {
                    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
                    let ys: Vec<f64> = xs
                        .iter()
                        .map(|&x| {
                            if x <= kink {
                                s1 * x
                            } else {
                                s1 * kink + s2 * (x - kink)
                            }
                        })
                        .collect();
                    let ws = vec![1.0; n];
                    let fit = fit_segmented(&diagram_from(&xs, &ys, &ws)).unwrap();
                    assert!(fit.sse <= fit.single_line_sse + 1e-9);
                    assert!(fit.break_index >= 1 && fit.break_index <= n - 3);
                    // With >= 3 exact points per side the kink is recovered.
                    if kink >= 2.0 && (n as f64 - 1.0) - kink >= 2.0 {
                        assert!((fit.log2_break - kink).abs() < 1e-6,
                            "kink {kink} n {n} slopes ({s1},{s2}): got {}", fit.log2_break);
                        assert!((fit.slope_low - s1).abs() < 1e-9);
                        assert!((fit.slope_high - s2).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn report_refines_the_exact_curve_to_the_true_break() {
        let prediction = predict_crossover_cumulant(2.0, 1.0, 0.5, 0.7, 2).unwrap();
        let report = crossover_report(
            &exact_mixture_diagram(),
            Some(prediction),
            HurstInversion::CumulantOrder(2),
            &CrossoverSettings::default(),
        )
        .unwrap();
        assert!(report.significant);
        assert!(report.sse_ratio < 0.5);
        assert!((report.log2_break - 2.5).abs() < 1e-6, "{}", report.log2_break);
        assert!((report.slope_low - 1.0).abs() < 1e-6);
        assert!((report.slope_high - 1.4).abs() < 1e-6);
        assert!((report.hurst_low.value - 0.5).abs() < 1e-6);
        assert!((report.hurst_high.value - 0.7).abs() < 1e-6);
        assert!(report.deviation.unwrap() < 1e-6);
    }

    #[test]
    fn report_on_a_single_regime_is_not_significant() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.2 * x - 0.5).collect();
        let ws = vec![1.0; 10];
        let report = crossover_report(
            &diagram_from(&xs, &ys, &ws),
            None,
            HurstInversion::CumulantOrder(2),
            &CrossoverSettings::default(),
        )
        .unwrap();
        assert!(!report.significant);
        assert!((report.slope_low - report.slope_high).abs() < 1e-6);
        assert!(report.deviation.is_none());
    }

    #[test]
    fn dominance_holds_two_octaves_from_a_wide_break() {
        // With a large Hurst separation the dominant branch carries > 90%
        // of the sum two octaves away from the crossover in each direction.
        let p = predict_crossover_cumulant(2.0, 1.0, 0.06, 0.92, 2).unwrap();
        let share = |x: f64| {
            let u = 2.0 * (p.small_scale_slope * x).exp2();
            let v = (p.large_scale_slope * x).exp2();
            (u / (u + v), v / (u + v))
        };
        let (low_share, _) = share(p.log2_break - 2.0);
        let (_, high_share) = share(p.log2_break + 2.0);
        assert!(low_share > 0.9, "low side {low_share}");
        assert!(high_share > 0.9, "high side {high_share}");
    }

    #[test]
    fn hurst_inversions_agree_with_their_conventions() {
        let h = HurstInversion::CumulantOrder(3).hurst(2.2);
        assert!((h.value - 0.6).abs() < 1e-12);
        let h = HurstInversion::WaveletIncrements.hurst(0.4);
        assert!((h.value - 0.7).abs() < 1e-12);
        let h = HurstInversion::WaveletCumulative.hurst(2.4);
        assert!((h.value - 0.7).abs() < 1e-12);
    }
}
