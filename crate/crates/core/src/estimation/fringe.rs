//! Fringe fitting: `P(Δφ) = A (1 + V cos(Δφ − φ₀))`.
//!
//! The model is fitted linearly as `c₀ + c₁ cos Δφ + c₂ sin Δφ`, then
//! `A = c₀`, `V = √(c₁² + c₂²)/c₀` and `φ₀ = atan2(c₂, c₁)`, with the
//! covariance carried over by the delta method.

use std::f64::consts::{PI, TAU};
use std::io::Read;

use nalgebra::{Matrix3, Vector3};
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::harmonic::{fit_harmonic, HarmonicFit};
use crate::montecarlo::CountRecord;
use crate::quantum::wrap_phase;
use crate::rng::{stream, Domain};
use crate::{Error, Result};

/// Bootstrap replaces the analytic errors when any point has fewer counts.
pub const BOOTSTRAP_COUNT_THRESHOLD: u64 = 10;
pub const BOOTSTRAP_REPLICATES: u64 = 1000;
const BOOTSTRAP_SEED: u64 = 0x5EED_F1D0;
const DISTINCT_PHASE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub delta_phi: f64,
    pub counts: u64,
    pub trials: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeDataset {
    points: Vec<FringePoint>,
}

impl FringeDataset {
    pub fn new(points: Vec<FringePoint>) -> Result<Self> {
        for p in &points {
            if p.trials == 0 {
                return Err(Error::InvalidDataset(format!(
                    "point at Δφ = {} has zero trials",
                    p.delta_phi
                )));
            }
            if p.counts > p.trials {
                return Err(Error::InvalidDataset(format!(
                    "point at Δφ = {} has {} counts in {} trials",
                    p.delta_phi, p.counts, p.trials
                )));
            }
            if !p.delta_phi.is_finite() {
                return Err(Error::InvalidDataset("non-finite phase".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn from_records(records: &[CountRecord]) -> Result<Self> {
        Self::new(
            records
                .iter()
                .map(|r| FringePoint {
                    delta_phi: r.setting,
                    counts: r.n_witness,
                    trials: r.n_heralds,
                })
                .collect(),
        )
    }

    /// Reads CSV with at least the columns `delta_phi_rad`, `n_witness` and
    /// `n_heralds`; other columns are ignored.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            delta_phi_rad: f64,
            n_witness: u64,
            n_heralds: u64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            points.push(FringePoint {
                delta_phi: row.delta_phi_rad,
                counts: row.n_witness,
                trials: row.n_heralds,
            });
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }

    fn distinct_phases(&self) -> usize {
        let mut phases: Vec<f64> = self.points.iter().map(|p| wrap_phase(p.delta_phi)).collect();
        phases.sort_by(f64::total_cmp);
        let mut distinct = 0;
        for (i, p) in phases.iter().enumerate() {
            let dup_prev = i > 0 && p - phases[i - 1] < DISTINCT_PHASE_TOLERANCE;
            let dup_first = i > 0 && TAU - p + phases[0] < DISTINCT_PHASE_TOLERANCE;
            if !dup_prev && !dup_first {
                distinct += 1;
            }
        }
        distinct
    }
}

/// A fringe sample given directly as a frequency and a least-squares weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPoint {
    pub delta_phi: f64,
    pub frequency: f64,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMethod {
    Analytic,
    Bootstrap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// A: mean detection probability.
    pub mean: f64,
    /// V clipped to `[0, 1]`.
    pub visibility: f64,
    pub visibility_unclipped: f64,
    /// φ₀ in `(−π, π]`.
    pub phase_offset: f64,
    pub mean_err: f64,
    pub visibility_err: f64,
    pub phase_offset_err: f64,
    /// Covariance of (A, V, φ₀).
    pub covariance: [[f64; 3]; 3],
    pub chi_squared: f64,
    pub dof: usize,
    /// Observed minus fitted probability, in input order.
    pub residuals: Vec<f64>,
    pub error_method: ErrorMethod,
}

impl FringeFit {
    pub fn evaluate(&self, delta_phi: f64) -> f64 {
        self.mean * (1.0 + self.visibility_unclipped * (delta_phi - self.phase_offset).cos())
    }
}

/// Weighted fit of Poissonian counts.
///
/// Weights are the inverse Poisson variance of each frequency,
/// `n² / max(k, 1)`. When any point has fewer than
/// [`BOOTSTRAP_COUNT_THRESHOLD`] counts, the uncertainties come from a
/// parametric bootstrap of the counts instead of the normal equations.
pub fn fit_fringe(data: &FringeDataset) -> Result<FringeFit> {
    if data.distinct_phases() < 3 {
        return Err(Error::DegenerateDesign(
            "fewer than three distinct phases (mod 2π)".into(),
        ));
    }
    if data.points.iter().all(|p| p.counts == 0) {
        return Err(Error::NoSignal("every point has zero counts".into()));
    }
    let mut fit = fit_counts(&data.points)?;
    if data.points.iter().any(|p| p.counts < BOOTSTRAP_COUNT_THRESHOLD) {
        if let Some(boot) = bootstrap(&data.points, &fit) {
            fit.mean_err = boot[(0, 0)].sqrt();
            fit.visibility_err = boot[(1, 1)].sqrt();
            fit.phase_offset_err = boot[(2, 2)].sqrt();
            fit.covariance = to_array(&boot);
            fit.error_method = ErrorMethod::Bootstrap;
        }
    }
    Ok(fit)
}

fn count_triples(points: &[FringePoint]) -> Vec<(f64, f64, f64)> {
    points
        .iter()
        .map(|p| {
            let n = p.trials as f64;
            (p.delta_phi, p.counts as f64 / n, n * n / p.counts.max(1) as f64)
        })
        .collect()
}

fn fit_counts(points: &[FringePoint]) -> Result<FringeFit> {
    let triples = count_triples(points);
    let linear = fit_harmonic(&triples, 1.0)?;
    to_fringe_fit(&linear, &triples)
}

/// Fits frequencies with caller-supplied weights. The covariance is the
/// inverse weighted normal matrix, so weights should be inverse variances.
pub fn fit_frequencies(points: &[FrequencyPoint]) -> Result<FringeFit> {
    let triples: Vec<_> = points
        .iter()
        .map(|p| (p.delta_phi, p.frequency, p.weight))
        .collect();
    let linear = fit_harmonic(&triples, 1.0)?;
    to_fringe_fit(&linear, &triples)
}

fn to_fringe_fit(linear: &HarmonicFit, triples: &[(f64, f64, f64)]) -> Result<FringeFit> {
    let c = linear.coefficients;
    let mean = c[0];
    if mean <= 0.0 {
        return Err(Error::NoSignal(format!("fitted mean level {mean:e} is not positive")));
    }
    let amplitude = c[1].hypot(c[2]);
    let visibility = amplitude / mean;
    let phase_offset = c[2].atan2(c[1]);

    let jacobian = if amplitude > 0.0 {
        Matrix3::new(
            1.0, 0.0, 0.0,
            -amplitude / (mean * mean), c[1] / (amplitude * mean), c[2] / (amplitude * mean),
            0.0, -c[2] / (amplitude * amplitude), c[1] / (amplitude * amplitude),
        )
    } else {
        // V = 0 exactly: use the radial spread of (c₁, c₂) for V and leave
        // the phase undetermined.
        Matrix3::new(
            1.0, 0.0, 0.0,
            0.0, std::f64::consts::FRAC_1_SQRT_2 / mean, std::f64::consts::FRAC_1_SQRT_2 / mean,
            0.0, 0.0, 0.0,
        )
    };
    let mut covariance = jacobian * linear.covariance * jacobian.transpose();
    if amplitude == 0.0 {
        covariance[(2, 2)] = PI * PI;
    }

    let residuals = triples
        .iter()
        .map(|&(x, y, _)| y - linear.evaluate(1.0, x))
        .collect();
    Ok(FringeFit {
        mean,
        visibility: visibility.clamp(0.0, 1.0),
        visibility_unclipped: visibility,
        phase_offset,
        mean_err: covariance[(0, 0)].sqrt(),
        visibility_err: covariance[(1, 1)].sqrt(),
        phase_offset_err: covariance[(2, 2)].sqrt(),
        covariance: to_array(&covariance),
        chi_squared: linear.chi_squared,
        dof: triples.len().saturating_sub(3),
        residuals,
        error_method: ErrorMethod::Analytic,
    })
}

fn to_array(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

/// Parametric bootstrap: counts redrawn from the fitted model. Returns the
/// sample covariance of (A, V, φ₀), or `None` if too few replicates fit.
fn bootstrap(points: &[FringePoint], fit: &FringeFit) -> Option<Matrix3<f64>> {
    let model: Vec<f64> = points.iter().map(|p| fit.evaluate(p.delta_phi).clamp(0.0, 1.0)).collect();
    let samples: Vec<Vector3<f64>> = (0..BOOTSTRAP_REPLICATES)
        .into_par_iter()
        .filter_map(|b| {
            let resampled: Vec<FringePoint> = points
                .iter()
                .zip(&model)
                .enumerate()
                .map(|(i, (p, &prob))| {
                    let mut rng = stream(BOOTSTRAP_SEED, Domain::Bootstrap, b, i as u64);
                    let counts = Binomial::new(p.trials, prob).ok()?.sample(&mut rng);
                    Some(FringePoint { counts, ..*p })
                })
                .collect::<Option<_>>()?;
            let refit = fit_counts(&resampled).ok()?;
            let dphase = wrap_phase(refit.phase_offset - fit.phase_offset + PI) - PI;
            Some(Vector3::new(
                refit.mean - fit.mean,
                refit.visibility_unclipped - fit.visibility_unclipped,
                dphase,
            ))
        })
        .collect();
    if (samples.len() as u64) < BOOTSTRAP_REPLICATES / 2 {
        return None;
    }
    let n = samples.len() as f64;
    let centre = samples.iter().fold(Vector3::zeros(), |acc, s| acc + s) / n;
    let cov = samples
        .iter()
        .map(|s| (s - centre) * (s - centre).transpose())
        .fold(Matrix3::zeros(), |acc, m| acc + m)
        / (n - 1.0);
    Some(cov)
}
