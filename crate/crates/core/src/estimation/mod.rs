//! Statistical inference on counting data.

mod fringe;
mod harmonic;
mod parity;
mod period;

use serde::{Deserialize, Serialize};

pub use fringe::{
    fit_fringe, fit_frequencies, ErrorMethod, FrequencyPoint, FringeDataset, FringeFit, FringePoint,
    BOOTSTRAP_COUNT_THRESHOLD, BOOTSTRAP_REPLICATES,
};
pub use harmonic::HarmonicFit;
pub use parity::{
    concurrence_from_parity, concurrence_from_parity_with, ParityEstimate, ParityPoint,
};
pub use period::{fit_period, PeriodFit, DETECTION_SIGNIFICANCE};

use crate::error::check_probability;
use crate::Result;

/// A value with its one-standard-deviation uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Reads the fitted visibility as a concurrence.
///
/// Only meaningful when the state lives in the single-excitation subspace;
/// the product state `½(|g−⟩+|g+⟩)⊗(|g−⟩+|g+⟩)` has visibility ½ and zero
/// concurrence.
pub fn concurrence_from_fringe(fit: &FringeFit) -> Estimate {
    Estimate {
        value: fit.visibility,
        std_err: fit.visibility_err,
    }
}

/// Zero-delay g⁽²⁾ of the two-atom emission for photon indistinguishability
/// `m`: linear between 0.5 (distinguishable) and 1 (indistinguishable).
pub fn g2_zero(m: f64) -> Result<f64> {
    check_probability("indistinguishability", m)?;
    Ok(0.5 * (1.0 + m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g2_endpoints_and_midpoint() {
        assert_eq!(g2_zero(1.0).unwrap(), 1.0);
        assert_eq!(g2_zero(0.0).unwrap(), 0.5);
        assert_eq!(g2_zero(0.5).unwrap(), 0.75);
        assert!(g2_zero(-0.1).is_err());
        assert!(g2_zero(1.01).is_err());
    }

    #[test]
    fn g2_is_monotone_and_bounded() {
        let values: Vec<f64> = (0..=100).map(|i| g2_zero(i as f64 / 100.0).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!(values.iter().all(|g| (0.5..=1.0).contains(g)));
    }
}
