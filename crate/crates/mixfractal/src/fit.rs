//! Weighted line fits and the damped Gauss-Newton refinement of a
//! two-power-law model, shared by the cumulant, wavelet and crossover paths.

use serde::Serialize;

use crate::error::{Error, Result};

/// Weighted least-squares line y = slope*x + intercept. `sse` is the
/// weighted sum of squared residuals; `slope_stderr` is 0 when the fit has
/// no residual degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WlsLine {
    pub slope: f64,
    pub intercept: f64,
    pub sse: f64,
    pub slope_stderr: f64,
}

pub fn wls_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<WlsLine> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Domain("fit inputs must have equal lengths".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            what: "points for a line fit",
            needed: 2,
            got: x.len(),
        });
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("fit weights must sum to a positive value".into()));
    }
    let xbar = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let ybar = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / total;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..x.len() {
        sxx += w[i] * (x[i] - xbar) * (x[i] - xbar);
        sxy += w[i] * (x[i] - xbar) * (y[i] - ybar);
    }
    if !(sxx > 0.0) {
        return Err(Error::Domain("line fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = (0..x.len())
        .map(|i| {
            let r = y[i] - slope * x[i] - intercept;
            w[i] * r * r
        })
        .sum();
    let slope_stderr = if x.len() > 2 {
        (sse / (x.len() as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(WlsLine {
        slope,
        intercept,
        sse,
        slope_stderr,
    })
}

/// Sum of two power laws in the log2 domain:
/// y = log2(2^{intercept_low + slope_low*x} + 2^{intercept_high + slope_high*x}),
/// canonicalized so slope_low <= slope_high. The low branch dominates at
/// small x and the high branch at large x whenever the slopes differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPowerLaw {
    pub intercept_low: f64,
    pub slope_low: f64,
    pub intercept_high: f64,
    pub slope_high: f64,
    pub sse: f64,
}

impl TwoPowerLaw {
    /// Abscissa where the two branches are equal. Non-finite when the
    /// slopes coincide.
    pub fn log2_break(&self) -> f64 {
        (self.intercept_low - self.intercept_high) / (self.slope_high - self.slope_low)
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let u = (self.intercept_low + self.slope_low * x).exp2();
        let v = (self.intercept_high + self.slope_high * x).exp2();
        (u + v).log2()
    }
}

fn powerlaw_residuals(theta: &[f64; 4], x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<[f64; 4]>) {
    let mut residuals = Vec::with_capacity(x.len());
    let mut jacobian = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let u = (theta[0] + theta[2] * x[i]).exp2();
        let v = (theta[1] + theta[3] * x[i]).exp2();
        let t = u + v;
        residuals.push(y[i] - t.log2());
        jacobian.push([u / t, v / t, x[i] * u / t, x[i] * v / t]);
    }
    (residuals, jacobian)
}

fn weighted_sse(theta: &[f64; 4], x: &[f64], y: &[f64], w: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| {
            let u = (theta[0] + theta[2] * x[i]).exp2();
            let v = (theta[1] + theta[3] * x[i]).exp2();
            let r = y[i] - (u + v).log2();
            w[i] * r * r
        })
        .sum()
}

/// Solve a 4x4 linear system by Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = [0.0; 4];
    for col in (0..4).rev() {
        let mut acc = b[col];
        for k in col + 1..4 {
            acc -= a[col][k] * out[k];
        }
        out[col] = acc / a[col][col];
    }
    if out.iter().all(|v| v.is_finite()) {
        Some(out)
    } else {
        None
    }
}

/// Fit the two-power-law model by Levenberg-Marquardt, seeded with
/// (intercept_low, intercept_high, slope_low, slope_high) from a segmented
/// line fit. Never diverges: steps are accepted only if they lower the
/// weighted SSE, so the result is at worst the seed.
pub fn fit_two_powerlaw(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    seed: [f64; 4],
) -> Result<TwoPowerLaw> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::Domain("fit inputs must have equal lengths".into()));
    }
    if x.len() < 5 {
        return Err(Error::InsufficientData {
            what: "points for a two-power-law fit",
            needed: 5,
            got: x.len(),
        });
    }
    let mut theta = seed;
    let mut lambda = 1e-3;
    let mut sse = weighted_sse(&theta, x, y, w);
    'outer: for _ in 0..200 {
        let (residuals, jacobian) = powerlaw_residuals(&theta, x, y);
        let mut a = [[0.0; 4]; 4];
        let mut g = [0.0; 4];
        for i in 0..x.len() {
            for p in 0..4 {
                g[p] += w[i] * jacobian[i][p] * residuals[i];
                for q in 0..4 {
                    a[p][q] += w[i] * jacobian[i][p] * jacobian[i][q];
                }
            }
        }
        for _ in 0..30 {
            let mut damped = a;
            for p in 0..4 {
                damped[p][p] += lambda * a[p][p] + 1e-12;
            }
            if let Some(step) = solve4(damped, g) {
                let trial = [
                    theta[0] + step[0],
                    theta[1] + step[1],
                    theta[2] + step[2],
                    theta[3] + step[3],
                ];
                let trial_sse = weighted_sse(&trial, x, y, w);
                if trial_sse.is_finite() && trial_sse <= sse {
                    theta = trial;
                    sse = trial_sse;
                    lambda = (lambda * 0.3).max(1e-12);
                    continue 'outer;
                }
            }
            lambda *= 10.0;
        }
        break;
    }
    if theta[2] > theta[3] {
        theta = [theta[1], theta[0], theta[3], theta[2]];
    }
    Ok(TwoPowerLaw {
        intercept_low: theta[0],
        intercept_high: theta[1],
        slope_low: theta[2],
        slope_high: theta[3],
        sse,
    })
}
