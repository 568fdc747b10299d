//! Magnetic field gradients and the phase they imprint on the entangled
//! state.
//!
//! The two atoms sit `z` apart along the gradient, so their Zeeman
//! splittings differ by `g_J μ_B (∂B/∂z) z / h`. The relative phase of
//! |g−,g+⟩ and |g+,g−⟩ advances at this difference frequency.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability};
use crate::{Error, Result};

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Landé factor of the S₁/₂ ground state used by default.
pub const DEFAULT_G_FACTOR: f64 = 2.0025;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradiometerConfig {
    /// Bias field B₀, T.
    pub bias_field: f64,
    /// Field gradient along the crystal axis, T/m.
    pub gradient: f64,
    /// Atom separation z, m.
    pub separation: f64,
    pub g_factor: f64,
}

impl GradiometerConfig {
    pub fn new(bias_field: f64, gradient: f64, separation: f64, g_factor: f64) -> Result<Self> {
        let cfg = Self { bias_field, gradient, separation, g_factor };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 0.453 mT bias, 0.85 mT/m gradient, 5.2 µm separation.
    pub fn published() -> Self {
        Self {
            bias_field: 0.453e-3,
            gradient: 0.85e-3,
            separation: 5.2e-6,
            g_factor: DEFAULT_G_FACTOR,
        }
    }

    pub fn with_gradient(self, gradient: f64) -> Self {
        Self { gradient, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("separation", self.separation)?;
        check_positive("g_factor", self.g_factor)?;
        if !(self.bias_field.is_finite() && self.bias_field >= 0.0) {
            return Err(Error::OutOfRange {
                name: "bias_field",
                value: self.bias_field,
                expected: "finite and ≥ 0",
            });
        }
        if !self.gradient.is_finite() {
            return Err(Error::OutOfRange {
                name: "gradient",
                value: self.gradient,
                expected: "finite",
            });
        }
        Ok(())
    }

    /// Zeeman splitting per tesla, Hz/T.
    fn hertz_per_tesla(&self) -> f64 {
        self.g_factor * BOHR_MAGNETON / PLANCK
    }
}

/// Ground-state Zeeman splitting `g_J μ_B B / h` in Hz.
pub fn zeeman_splitting(field: f64, cfg: &GradiometerConfig) -> f64 {
    cfg.hertz_per_tesla() * field
}

/// Difference of the two atoms' Zeeman splittings, Hz.
pub fn differential_frequency(cfg: &GradiometerConfig) -> f64 {
    cfg.hertz_per_tesla() * cfg.gradient * cfg.separation
}

/// Phase accumulated between |g−,g+⟩ and |g+,g−⟩ after delay `tau` (s).
pub fn gradient_phase(tau: f64, cfg: &GradiometerConfig) -> f64 {
    TAU * differential_frequency(cfg) * tau
}

/// Oscillation period of the witness signal against delay; infinite for a
/// vanishing gradient.
pub fn oscillation_period(cfg: &GradiometerConfig) -> f64 {
    1.0 / differential_frequency(cfg).abs()
}

/// Gradient magnitude that produces an oscillation period `period` (s).
pub fn gradient_from_period(period: f64, cfg: &GradiometerConfig) -> Result<f64> {
    if period.is_nan() || period <= 0.0 {
        return Err(Error::OutOfRange {
            name: "period",
            value: period,
            expected: "> 0",
        });
    }
    Ok(1.0 / (cfg.hertz_per_tesla() * cfg.separation * period))
}

/// Expected witness probability `κ (1 + V cos(Δφ_set − φ_grad(τ)))` at each
/// delay.
pub fn delay_scan_expectation(
    taus: &[f64],
    set_phase: f64,
    visibility: f64,
    kappa: f64,
    cfg: &GradiometerConfig,
) -> Result<Vec<f64>> {
    check_probability("visibility", visibility)?;
    check_probability("kappa", kappa)?;
    Ok(taus
        .iter()
        .map(|&tau| kappa * (1.0 + visibility * (set_phase - gradient_phase(tau, cfg)).cos()))
        .collect())
}
