//! Concurrence and fidelity from a parity oscillation plus measured
//! populations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::quantum::{
    Operator, ParityAnalysis, MINUS_MINUS, MINUS_PLUS, PLUS_MINUS, PLUS_PLUS,
};
use crate::quantum::parity_of_operator;
use crate::{Error, Result};

const POPULATION_SUM_TOLERANCE: f64 = 1e-9;
const NEGATIVE_POPULATION_TOLERANCE: f64 = 1e-12;
/// RMS response below which a model column is treated as absent.
const NEGLIGIBLE_COLUMN: f64 = 1e-9;

/// One point of a parity scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityPoint {
    pub rf_phase: f64,
    pub value: f64,
    pub std_err: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityEstimate {
    /// Fitted Re ρ₀₁.
    pub coherence_re: f64,
    /// Fitted Im ρ₀₁, `None` when the analysis is blind to it.
    pub coherence_im: Option<f64>,
    /// |ρ₀₁| as far as the analysis resolves it. When only the real part is
    /// identifiable this is |Re ρ₀₁|, a lower bound on the true magnitude.
    pub coherence_magnitude: f64,
    pub coherence_err: f64,
    /// `max(0, 2(|ρ₀₁| − √(ρ₂₂ ρ₃₃)))`.
    pub concurrence: f64,
    pub concurrence_err: f64,
    /// Overlap with (|g+,g−⟩ + |g−,g+⟩)/√2.
    pub fidelity: f64,
    pub fidelity_err: f64,
    pub rms_residual: f64,
}

/// Estimates concurrence with the default two-pulse analysis.
///
/// `populations` are (ρ₀₀, ρ₁₁, ρ₂₂, ρ₃₃) in the crate basis order
/// (|g−,g+⟩, |g+,g−⟩, |g−,g−⟩, |g+,g+⟩).
pub fn concurrence_from_parity(
    populations: [f64; 4],
    curve: &[ParityPoint],
) -> Result<ParityEstimate> {
    concurrence_from_parity_with(populations, curve, &ParityAnalysis::default())
}

/// Estimates concurrence from a parity scan taken with `analysis`.
///
/// The parity is linear in ρ, so the curve is fitted as the known population
/// contribution plus Re ρ₀₁ and Im ρ₀₁ times their responses. Coherences
/// outside the single-excitation block are assumed absent.
pub fn concurrence_from_parity_with(
    populations: [f64; 4],
    curve: &[ParityPoint],
    analysis: &ParityAnalysis,
) -> Result<ParityEstimate> {
    check_populations(&populations)?;
    if curve.iter().any(|p| !p.value.is_finite() || !p.rf_phase.is_finite()) {
        return Err(Error::InvalidDataset("non-finite parity point".into()));
    }

    let mut base = Operator::zeros();
    for (i, p) in populations.iter().enumerate() {
        base[(i, i)] = C64::new(*p, 0.0);
    }
    let mut re_op = Operator::zeros();
    re_op[(MINUS_PLUS, PLUS_MINUS)] = C64::new(1.0, 0.0);
    re_op[(PLUS_MINUS, MINUS_PLUS)] = C64::new(1.0, 0.0);
    let mut im_op = Operator::zeros();
    im_op[(MINUS_PLUS, PLUS_MINUS)] = C64::new(0.0, 1.0);
    im_op[(PLUS_MINUS, MINUS_PLUS)] = C64::new(0.0, -1.0);

    let n = curve.len();
    let mut target = DVector::zeros(n);
    let mut re_col = DVector::zeros(n);
    let mut im_col = DVector::zeros(n);
    for (k, point) in curve.iter().enumerate() {
        let pulses = analysis.pulses(point.rf_phase);
        target[k] = point.value - parity_of_operator(&base, &pulses);
        re_col[k] = parity_of_operator(&re_op, &pulses);
        im_col[k] = parity_of_operator(&im_op, &pulses);
    }

    // Responses to a unit coherence are O(1) per point when informative.
    let scale = (n as f64).sqrt();
    if re_col.norm() <= NEGLIGIBLE_COLUMN * scale {
        return Err(Error::DegenerateDesign(
            "parity scan carries no information on Re ρ₀₁".into(),
        ));
    }
    let fit_im = im_col.norm() > NEGLIGIBLE_COLUMN * scale;
    let params = if fit_im { 2 } else { 1 };
    if n <= params {
        return Err(Error::DegenerateDesign(format!(
            "{n} parity points cannot constrain {params} parameter(s) with an error estimate"
        )));
    }

    let design = if fit_im {
        DMatrix::from_columns(&[re_col, im_col])
    } else {
        DMatrix::from_columns(&[re_col])
    };
    let normal = design.transpose() * &design;
    let inverse = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateDesign("Re and Im responses are collinear".into()))?
        .inverse();
    let solution = &inverse * design.transpose() * &target;
    let residual = &target - &design * &solution;
    let rss = residual.norm_squared();
    let s2 = rss / (n - params) as f64;
    let cov = inverse * s2;

    let re = solution[0];
    let re_err = cov[(0, 0)].sqrt();
    let (im, magnitude, magnitude_err) = if fit_im {
        let im = solution[1];
        let mag = re.hypot(im);
        let err = if mag > 0.0 {
            let g = [re / mag, im / mag];
            (g[0] * g[0] * cov[(0, 0)] + 2.0 * g[0] * g[1] * cov[(0, 1)] + g[1] * g[1] * cov[(1, 1)])
                .sqrt()
        } else {
            cov[(0, 0)].max(cov[(1, 1)]).sqrt()
        };
        (Some(im), mag, err)
    } else {
        (None, re.abs(), re_err)
    };

    let double = (populations[MINUS_MINUS].max(0.0) * populations[PLUS_PLUS].max(0.0)).sqrt();
    let fidelity = 0.5 * (populations[MINUS_PLUS] + populations[PLUS_MINUS]) + re;
    Ok(ParityEstimate {
        coherence_re: re,
        coherence_im: im,
        coherence_magnitude: magnitude,
        coherence_err: magnitude_err,
        concurrence: (2.0 * (magnitude - double)).max(0.0),
        concurrence_err: 2.0 * magnitude_err,
        fidelity,
        fidelity_err: re_err,
        rms_residual: (rss / n as f64).sqrt(),
    })
}

fn check_populations(p: &[f64; 4]) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < -NEGATIVE_POPULATION_TOLERANCE) {
        return Err(Error::InconsistentPopulations(format!(
            "populations must be non-negative, got {p:?}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > POPULATION_SUM_TOLERANCE {
        return Err(Error::InconsistentPopulations(format!(
            "populations sum to {sum}, expected 1"
        )));
    }
    Ok(())
}
