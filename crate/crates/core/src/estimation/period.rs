//! Period of a sinusoidal oscillation in counting data against delay.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::harmonic::{fit_harmonic, HarmonicFit};
use crate::montecarlo::CountRecord;
use crate::{Error, Result};

/// Amplitude over its standard error needed to call an oscillation detected.
pub const DETECTION_SIGNIFICANCE: f64 = 5.0;
const MIN_GRID: usize = 200;
const GOLDEN_ITERATIONS: usize = 80;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodFit {
    pub detected: bool,
    /// `None` unless an oscillation was detected.
    pub period: Option<f64>,
    pub period_err: Option<f64>,
    /// Best-fit frequency, reported even when nothing was detected.
    pub frequency: f64,
    pub mean: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub phase: f64,
    pub chi_squared: f64,
    pub dof: usize,
    /// `amplitude / amplitude_err`.
    pub significance: f64,
}

/// Fits `m + a cos(2π f τ − φ)` to witness frequencies, with `setting`
/// read as the delay τ.
///
/// The frequency is searched on a grid from half a cycle over the scan to
/// the Nyquist limit of the closest sample spacing, then refined by golden
/// section.
pub fn fit_period(records: &[CountRecord]) -> Result<PeriodFit> {
    if records.iter().any(|r| r.n_heralds == 0 || r.n_witness > r.n_heralds) {
        return Err(Error::InvalidDataset("each record needs n_witness ≤ n_heralds, n_heralds > 0".into()));
    }
    let points: Vec<(f64, f64, f64)> = records
        .iter()
        .map(|r| {
            let n = r.n_heralds as f64;
            (r.setting, r.n_witness as f64 / n, n * n / r.n_witness.max(1) as f64)
        })
        .collect();
    let mut taus: Vec<f64> = points.iter().map(|p| p.0).collect();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    if taus.len() < 5 {
        return Err(Error::DegenerateDesign(format!(
            "{} distinct delays; at least 5 are needed to fit a period",
            taus.len()
        )));
    }
    if records.iter().all(|r| r.n_witness == 0) {
        return Err(Error::NoSignal("every delay has zero counts".into()));
    }
    let span = taus[taus.len() - 1] - taus[0];
    let dt_min = taus.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let f_lo = 0.5 / span;
    let f_hi = 0.5 / dt_min;
    let grid = MIN_GRID.max((20.0 * span * (f_hi - f_lo)).ceil() as usize);

    let chi2 = |f: f64| -> f64 {
        fit_harmonic(&points, TAU * f)
            .map(|fit| fit.chi_squared)
            .unwrap_or(f64::INFINITY)
    };
    let step = (f_hi - f_lo) / (grid - 1) as f64;
    let (best_idx, _) = (0..grid)
        .map(|i| (i, chi2(f_lo + i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    let f0 = f_lo + best_idx as f64 * step;
    let f = golden_minimum(&chi2, (f0 - step).max(f_lo), (f0 + step).min(f_hi));

    let fit: HarmonicFit = fit_harmonic(&points, TAU * f)?;
    let c = fit.coefficients;
    let dof = points.len().saturating_sub(4);
    let inflation = if dof > 0 { (fit.chi_squared / dof as f64).max(1.0) } else { 1.0 };

    let amplitude = c[1].hypot(c[2]);
    let amplitude_var = if amplitude > 0.0 {
        let g = [c[1] / amplitude, c[2] / amplitude];
        g[0] * g[0] * fit.covariance[(1, 1)]
            + 2.0 * g[0] * g[1] * fit.covariance[(1, 2)]
            + g[1] * g[1] * fit.covariance[(2, 2)]
    } else {
        fit.covariance[(1, 1)].max(fit.covariance[(2, 2)])
    };
    let amplitude_err = (amplitude_var * inflation).sqrt();
    let significance = amplitude / amplitude_err;
    let detected = significance > DETECTION_SIGNIFICANCE;

    let (period, period_err) = if detected {
        // χ² ≈ χ²_min + (f − f̂)²/σ_f² near the minimum.
        let h = 1e-3 * step.max(f * 1e-6);
        let curvature = (chi2(f + h) - 2.0 * fit.chi_squared + chi2(f - h)) / (h * h);
        let sigma_f = if curvature > 0.0 {
            (2.0 / curvature * inflation).sqrt()
        } else {
            f64::INFINITY
        };
        (Some(1.0 / f), Some(sigma_f / (f * f)))
    } else {
        (None, None)
    };

    Ok(PeriodFit {
        detected,
        period,
        period_err,
        frequency: f,
        mean: c[0],
        amplitude,
        amplitude_err,
        phase: c[2].atan2(c[1]),
        chi_squared: fit.chi_squared,
        dof,
        significance,
    })
}

fn golden_minimum(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..GOLDEN_ITERATIONS {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}
