use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("state has no emitter population (|g+,g+>): visibility undefined")]
    NoEmitterPopulation,

    #[error("parameter `{name}` = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("population fractions are inconsistent: {0}")]
    InconsistentPopulations(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("delay {tau_s} s is outside the calibration table range [{min_s}, {max_s}] s")]
    Extrapolation { tau_s: f64, min_s: f64, max_s: f64 },

    #[error("invalid calibration table: {0}")]
    InvalidTable(String),

    #[error("phase readout is ambiguous: {0}")]
    AmbiguousPhase(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Checks that `value` is a probability.
pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "a probability in [0, 1]",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "a finite positive number",
        })
    }
}
