//! Post-herald state of the atom pair and the witness-photon fringe.

use num_complex::Complex64 as C64;

use crate::error::check_probability;
use crate::quantum::{
    DensityMatrix, Operator, MINUS_MINUS, MINUS_PLUS, PLUS_MINUS, PLUS_PLUS,
};
use crate::{Error, Result};

const FRACTION_TOLERANCE: f64 = 1e-12;

/// Imperfect heralded state.
///
/// A herald leaves the pair in the single-excitation subspace with
/// probability `single`, in |g−,g−⟩ (false herald, no excitation) with
/// probability `zero`, and in |g+,g+⟩ (double excitation) with probability
/// `double`. Within the single-excitation block the populations are equal and
/// the coherence is reduced by the factor `coherence` (γ), which lumps
/// together motional dephasing and other imperfections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeraldModel {
    pub coherence: f64,
    pub phase: f64,
    pub single: f64,
    pub zero: f64,
    pub double: f64,
}

impl HeraldModel {
    pub fn new(coherence: f64, phase: f64, single: f64, zero: f64, double: f64) -> Result<Self> {
        let model = Self {
            coherence,
            phase,
            single,
            zero,
            double,
        };
        model.validate()?;
        Ok(model)
    }

    /// Splits the contamination `1 − single` evenly between zero and double
    /// excitation.
    pub fn with_even_split(coherence: f64, phase: f64, single: f64) -> Result<Self> {
        let rest = 1.0 - single;
        Self::new(coherence, phase, single, rest / 2.0, rest / 2.0)
    }

    /// Same as [`with_even_split`](Self::with_even_split) but parameterised by
    /// the off-diagonal magnitude |ρ₀₁| = γ·single/2.
    pub fn from_coherence_magnitude(magnitude: f64, phase: f64, single: f64) -> Result<Self> {
        if single <= 0.0 {
            return Err(Error::OutOfRange {
                name: "single",
                value: single,
                expected: "positive when a coherence is requested",
            });
        }
        Self::with_even_split(2.0 * magnitude / single, phase, single)
    }

    /// Ideal herald: the pure Bell state with phase `phase`.
    pub fn ideal(phase: f64) -> Self {
        Self {
            coherence: 1.0,
            phase,
            single: 1.0,
            zero: 0.0,
            double: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("coherence", self.coherence)?;
        check_probability("single", self.single)?;
        check_probability("zero", self.zero)?;
        check_probability("double", self.double)?;
        if !self.phase.is_finite() {
            return Err(Error::OutOfRange {
                name: "phase",
                value: self.phase,
                expected: "finite",
            });
        }
        let total = self.single + self.zero + self.double;
        if (total - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(Error::InconsistentPopulations(format!(
                "single + zero + double = {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// |ρ₀₁| of the heralded state.
    pub fn coherence_magnitude(&self) -> f64 {
        self.coherence * self.single / 2.0
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        heralded_state(self)
    }
}

/// Density matrix produced by a herald.
pub fn heralded_state(model: &HeraldModel) -> Result<DensityMatrix> {
    model.validate()?;
    let half = model.single / 2.0;
    let mut rho = Operator::zeros();
    rho[(MINUS_PLUS, MINUS_PLUS)] = C64::new(half, 0.0);
    rho[(PLUS_MINUS, PLUS_MINUS)] = C64::new(half, 0.0);
    let coh = C64::from_polar(model.coherence * half, model.phase);
    rho[(MINUS_PLUS, PLUS_MINUS)] = coh;
    rho[(PLUS_MINUS, MINUS_PLUS)] = coh.conj();
    rho[(MINUS_MINUS, MINUS_MINUS)] = C64::new(model.zero, 0.0);
    rho[(PLUS_PLUS, PLUS_PLUS)] = C64::new(model.double, 0.0);
    DensityMatrix::new(rho)
}

/// Witness detection parameters.
///
/// `kappa` is the probability of detecting a witness photon per herald from a
/// pair with exactly one atom in |g−⟩, which is the separable-state level
/// P_sep. `p_w` and `eta` are kept for the rate budget; nominally
/// `kappa = collection_factor · eta · p_w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmissionConfig {
    pub kappa: f64,
    pub p_w: f64,
    pub eta: f64,
}

impl EmissionConfig {
    pub fn new(kappa: f64, p_w: f64, eta: f64) -> Result<Self> {
        check_probability("kappa", kappa)?;
        check_probability("p_w", p_w)?;
        check_probability("eta", eta)?;
        Ok(Self { kappa, p_w, eta })
    }

    /// `kappa = eta · p_w`, i.e. a collection factor of one.
    pub fn from_efficiency(eta: f64, p_w: f64) -> Result<Self> {
        Self::new(eta * p_w, p_w, eta)
    }

    /// `kappa / (eta · p_w)`; infinite when `eta · p_w` is zero.
    pub fn collection_factor(&self) -> f64 {
        self.kappa / (self.eta * self.p_w)
    }
}

/// Probability of detecting a witness photon at phase difference Δφ:
/// `κ [ρ₀₀ + ρ₁₁ + 2 Re(ρ₀₁ e^{iΔφ}) + 2ρ₂₂]`.
///
/// ρ is expressed in the herald frame: a state prepared with phase 0 is
/// maximally bright at Δφ = 0.
pub fn witness_probability(rho: &DensityMatrix, delta_phi: f64, cfg: &EmissionConfig) -> f64 {
    let populations = rho.population(MINUS_PLUS) + rho.population(PLUS_MINUS);
    let cross = rho.single_excitation_coherence() * C64::from_polar(1.0, delta_phi);
    let emitters = populations + 2.0 * cross.re + 2.0 * rho.population(MINUS_MINUS);
    (cfg.kappa * emitters).max(0.0)
}

/// Analytic fringe visibility of ρ: `2|ρ₀₁| / (ρ₀₀ + ρ₁₁ + 2ρ₂₂)`.
pub fn fringe_visibility(rho: &DensityMatrix) -> Result<f64> {
    let emitters =
        rho.population(MINUS_PLUS) + rho.population(PLUS_MINUS) + 2.0 * rho.population(MINUS_MINUS);
    if emitters <= f64::EPSILON {
        return Err(Error::NoEmitterPopulation);
    }
    Ok((2.0 * rho.single_excitation_coherence().norm() / emitters).min(1.0))
}

/// Mean of the witness fringe over one period: `κ (ρ₀₀ + ρ₁₁ + 2ρ₂₂)`.
pub fn mean_witness_probability(rho: &DensityMatrix, cfg: &EmissionConfig) -> f64 {
    let emitters =
        rho.population(MINUS_PLUS) + rho.population(PLUS_MINUS) + 2.0 * rho.population(MINUS_MINUS);
    cfg.kappa * emitters
}

/// The fringe expected from a state of concurrence `concurrence` under the
/// single-excitation assumption: `κ (1 + C cos Δφ)` on each grid point.
pub fn predicted_fringe_from_concurrence(
    concurrence: f64,
    kappa: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    check_probability("concurrence", concurrence)?;
    check_probability("kappa", kappa)?;
    Ok(grid
        .iter()
        .map(|dphi| kappa * (1.0 + concurrence * dphi.cos()))
        .collect())
}

/// `R = P / P_sep`.
pub fn relative_probability(p: f64, p_sep: f64) -> Result<f64> {
    if p_sep <= 0.0 || !p_sep.is_finite() {
        return Err(Error::OutOfRange {
            name: "p_sep",
            value: p_sep,
            expected: "a positive separable-state probability",
        });
    }
    Ok(p / p_sep)
}
