//! Two-qubit state algebra for the atom pair.
//!
//! Every vector and matrix in this crate uses the same basis ordering, named
//! after the amplitudes `(a, b, c, d)` of a general pure state:
//!
//! | index | ket        | amplitude |
//! |-------|------------|-----------|
//! | 0     | \|g−,g+⟩   | a         |
//! | 1     | \|g+,g−⟩   | b         |
//! | 2     | \|g−,g−⟩   | c         |
//! | 3     | \|g+,g+⟩   | d         |
//!
//! The first label is atom A, the second atom B. Only atoms in |g−⟩ can
//! scatter a witness photon, so |g+,g+⟩ is dark and |g−,g−⟩ emits twice as
//! strongly as the single-excitation kets.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub type Operator = Matrix4<C64>;

pub const MINUS_PLUS: usize = 0;
pub const PLUS_MINUS: usize = 1;
pub const MINUS_MINUS: usize = 2;
pub const PLUS_PLUS: usize = 3;

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
/// Most negative eigenvalue accepted (and clipped to zero) in a density matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;
/// Eigenvalues below this are rounding noise and treated as zero before a
/// square root, which would otherwise amplify 1e-16 to 1e-8.
const SPECTRAL_FLOOR: f64 = 1e-14;

/// Index into the (A, B) product basis with g− = 0 and g+ = 1, i.e. `2*A + B`.
const PRODUCT_INDEX: [usize; 4] = [1, 2, 0, 3];

/// Eigenvalue of σz⊗σz on each basis ket.
const ZZ_SIGN: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

fn cplx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Optical geometry of the common mode.
///
/// `herald_path` and `witness_path` are the round-trip paths `d` and `d′`
/// (twice the atom-mirror distance) at the herald and witness detections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseConfig {
    pub wavelength: f64,
    pub separation: f64,
    pub herald_path: f64,
    pub witness_path: f64,
}

impl PhaseConfig {
    pub fn new(wavelength: f64, separation: f64, herald_path: f64, witness_path: f64) -> Result<Self> {
        crate::error::check_positive("wavelength", wavelength)?;
        Ok(Self {
            wavelength,
            separation,
            herald_path,
            witness_path,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    // Phases are evaluated as 2π·frac(length/λ) so that the metre-scale
    // paths do not swamp the sub-wavelength part in double precision.
    fn phase_of_length(&self, length: f64) -> f64 {
        let cycles = length / self.wavelength;
        wrap_phase(TAU * (cycles - cycles.floor()))
    }

    /// φ = k(z − d), reduced to `[0, 2π)`.
    pub fn herald_phase(&self) -> f64 {
        self.phase_of_length(self.separation - self.herald_path)
    }

    /// φ′ = k(z − d′), reduced to `[0, 2π)`.
    pub fn witness_phase(&self) -> f64 {
        self.phase_of_length(self.separation - self.witness_path)
    }

    /// Δφ = φ − φ′ = k(d′ − d), reduced to `[0, 2π)`.
    pub fn phase_difference(&self) -> f64 {
        self.phase_of_length(self.witness_path - self.herald_path)
    }
}

/// Phase of the heralded entangled state for a given geometry.
pub fn phase_of_state(config: &PhaseConfig) -> f64 {
    config.herald_phase()
}

/// Normalized pure state `a|g−,g+⟩ + b|g+,g−⟩ + c|g−,g−⟩ + d|g+,g+⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PureTwoQubitState {
    amplitudes: [C64; 4],
}

impl PureTwoQubitState {
    /// Rejects amplitudes whose squared norm differs from one by more than
    /// [`NORM_TOLERANCE`].
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let amplitudes = [a, b, c, d];
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { amplitudes })
    }

    /// Scales the amplitudes to unit norm.
    pub fn normalized(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let norm = [a, b, c, d].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= f64::MIN_POSITIVE || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(Self {
            amplitudes: [a / norm, b / norm, c / norm, d / norm],
        })
    }

    /// The heralded Bell state `(|g+,g−⟩ + e^{iφ}|g−,g+⟩)/√2`.
    pub fn entangled(phase: f64) -> Self {
        Self {
            amplitudes: [
                C64::from_polar(FRAC_1_SQRT_2, phase),
                cplx(FRAC_1_SQRT_2),
                C64::default(),
                C64::default(),
            ],
        }
    }

    /// `(|g−,g+⟩ − |g+,g−⟩)/√2`.
    pub fn singlet() -> Self {
        Self {
            amplitudes: [
                cplx(FRAC_1_SQRT_2),
                cplx(-FRAC_1_SQRT_2),
                C64::default(),
                C64::default(),
            ],
        }
    }

    /// The separable reference |g+,g−⟩: exactly one emitter, no interference.
    pub fn separable() -> Self {
        Self::basis(PLUS_MINUS)
    }

    /// The product state `½(|g−⟩+|g+⟩)⊗(|g−⟩+|g+⟩)`: separable, yet its
    /// fringe has visibility ½.
    pub fn product_superposition() -> Self {
        Self {
            amplitudes: [cplx(0.5); 4],
        }
    }

    pub fn basis(index: usize) -> Self {
        let mut amplitudes = [C64::default(); 4];
        amplitudes[index] = cplx(1.0);
        Self { amplitudes }
    }

    pub fn a(&self) -> C64 {
        self.amplitudes[MINUS_PLUS]
    }

    pub fn b(&self) -> C64 {
        self.amplitudes[PLUS_MINUS]
    }

    pub fn c(&self) -> C64 {
        self.amplitudes[MINUS_MINUS]
    }

    pub fn d(&self) -> C64 {
        self.amplitudes[PLUS_PLUS]
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.amplitudes
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Relative emission intensity into the common mode when the atoms carry
/// optical phases `phase_a` and `phase_b`:
/// `|a|² + |b|² + 2|c|² + 2 Re(a* b e^{i(φ_A − φ_B)})`.
pub fn intensity(state: &PureTwoQubitState, phase_a: f64, phase_b: f64) -> f64 {
    let (a, b, c) = (state.a(), state.b(), state.c());
    let cross = a.conj() * b * C64::from_polar(1.0, phase_a - phase_b);
    let value = a.norm_sqr() + b.norm_sqr() + 2.0 * c.norm_sqr() + 2.0 * cross.re;
    value.max(0.0)
}

/// Fringe visibility `2|ab| / (|a|² + |b|² + 2|c|²)` of a pure state.
pub fn visibility_pure(state: &PureTwoQubitState) -> Result<f64> {
    let (a, b, c) = (state.a(), state.b(), state.c());
    let emitters = a.norm_sqr() + b.norm_sqr() + 2.0 * c.norm_sqr();
    if emitters <= f64::EPSILON {
        return Err(Error::NoEmitterPopulation);
    }
    Ok((2.0 * (a * b).norm() / emitters).min(1.0))
}

/// Concurrence `2|cd − ab|` of a pure state.
pub fn concurrence_pure(state: &PureTwoQubitState) -> f64 {
    let (a, b, c, d) = (state.a(), state.b(), state.c(), state.d());
    (2.0 * (c * d - a * b).norm()).min(1.0)
}

/// A validated two-qubit density matrix in the crate basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: Operator,
}

impl DensityMatrix {
    pub fn new(rho: Operator) -> Result<Self> {
        check_density(&rho)?;
        Ok(Self { rho })
    }

    pub fn from_pure(state: &PureTwoQubitState) -> Self {
        let v = state.amplitudes();
        let rho = Operator::from_fn(|i, j| v[i] * v[j].conj());
        Self { rho }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Operator::identity() * cplx(0.25),
        }
    }

    /// Builds an X-state: diagonal `populations`, the single-excitation
    /// coherence ρ₀₁ and the double/zero-excitation coherence ρ₂₃.
    pub fn x_state(populations: [f64; 4], single: C64, double: C64) -> Result<Self> {
        let mut rho = Operator::zeros();
        for (i, p) in populations.iter().enumerate() {
            rho[(i, i)] = cplx(*p);
        }
        rho[(MINUS_PLUS, PLUS_MINUS)] = single;
        rho[(PLUS_MINUS, MINUS_PLUS)] = single.conj();
        rho[(MINUS_MINUS, PLUS_PLUS)] = double;
        rho[(PLUS_PLUS, MINUS_MINUS)] = double.conj();
        Self::new(rho)
    }

    pub fn matrix(&self) -> &Operator {
        &self.rho
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.rho[(row, col)]
    }

    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.population(i))
    }

    /// ρ₀₁ = ⟨g−,g+|ρ|g+,g−⟩.
    pub fn single_excitation_coherence(&self) -> C64 {
        self.rho[(MINUS_PLUS, PLUS_MINUS)]
    }

    /// Eigenvalues in ascending order, slightly negative values clipped to 0.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.rho);
        let mut values = [0.0; 4];
        for (dst, src) in values.iter_mut().zip(eig.eigenvalues.iter()) {
            *dst = src.max(0.0);
        }
        values.sort_by(f64::total_cmp);
        values
    }

    fn sqrt(&self) -> Operator {
        let eig = SymmetricEigen::new(self.rho);
        let vecs = eig.eigenvectors;
        let mut root = Operator::zeros();
        for (k, value) in eig.eigenvalues.iter().enumerate() {
            let col = vecs.column(k);
            if *value > SPECTRAL_FLOOR {
                root += col * col.adjoint() * cplx(value.sqrt());
            }
        }
        root
    }
}

fn check_density(rho: &Operator) -> Result<()> {
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
    }
    let asym = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > HERMITIAN_TOLERANCE {
        return Err(Error::InvalidDensityMatrix(format!(
            "not Hermitian (max |ρ - ρ†| = {asym:e})"
        )));
    }
    let trace = rho.trace();
    if (trace.re - 1.0).abs() > TRACE_TOLERANCE || trace.im.abs() > TRACE_TOLERANCE {
        return Err(Error::InvalidDensityMatrix(format!("trace is {trace}")));
    }
    let min_eig = SymmetricEigen::new(*rho)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOLERANCE {
        return Err(Error::InvalidDensityMatrix(format!(
            "negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

/// σy⊗σy in the crate basis: swaps a↔b with sign +1 and c↔d with sign −1.
fn spin_flip_operator() -> Operator {
    let mut y = Operator::zeros();
    y[(MINUS_PLUS, PLUS_MINUS)] = cplx(1.0);
    y[(PLUS_MINUS, MINUS_PLUS)] = cplx(1.0);
    y[(MINUS_MINUS, PLUS_PLUS)] = cplx(-1.0);
    y[(PLUS_PLUS, MINUS_MINUS)] = cplx(-1.0);
    y
}

/// Spin-flip (Wootters) concurrence `max(0, λ₁ − λ₂ − λ₃ − λ₄)`.
///
/// The λᵢ are the square roots of the eigenvalues of ρρ̃, obtained here from
/// the Hermitian form √ρ ρ̃ √ρ, which has the same spectrum.
pub fn concurrence_mixed(rho: &DensityMatrix) -> f64 {
    let y = spin_flip_operator();
    let flipped = y * rho.matrix().conjugate() * y;
    let root = rho.sqrt();
    let m = root * flipped * root;
    let m = (m + m.adjoint()) * cplx(0.5);
    let mut lambdas: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|v| if *v > SPECTRAL_FLOOR { v.sqrt() } else { 0.0 })
        .collect();
    lambdas.sort_by(|x, y| y.total_cmp(x));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0)
}

/// Overlap ⟨ψ(φ)|ρ|ψ(φ)⟩ with the ideal heralded state.
pub fn fidelity_with_target(rho: &DensityMatrix, phase: f64) -> f64 {
    let v = PureTwoQubitState::entangled(phase).amplitudes();
    let mut acc = C64::default();
    for i in 0..4 {
        for j in 0..4 {
            acc += v[i].conj() * rho.element(i, j) * v[j];
        }
    }
    acc.re.clamp(0.0, 1.0)
}

/// A global RF pulse: pulse area `area` (θ) and RF phase `phase` (φ_RF).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RfPulse {
    pub area: f64,
    pub phase: f64,
}

impl RfPulse {
    pub fn new(area: f64, phase: f64) -> Self {
        Self { area, phase }
    }
}

/// `exp(−i θ/2 (cos φ σx + sin φ σy))` on one qubit, ordered (g−, g+).
fn single_qubit_rotation(pulse: RfPulse) -> Matrix2<C64> {
    let (s, c) = (pulse.area / 2.0).sin_cos();
    let off = C64::new(0.0, -s);
    Matrix2::new(
        cplx(c),
        off * C64::from_polar(1.0, -pulse.phase),
        off * C64::from_polar(1.0, pulse.phase),
        cplx(c),
    )
}

/// The same rotation applied to both atoms, in the crate basis.
fn global_rotation(pulse: RfPulse) -> Operator {
    let r = single_qubit_rotation(pulse);
    Operator::from_fn(|i, j| {
        let (p, q) = (PRODUCT_INDEX[i], PRODUCT_INDEX[j]);
        r[(p / 2, q / 2)] * r[(p % 2, q % 2)]
    })
}

/// ⟨σz⊗σz⟩ of `U op U†` where `U` is the pulse sequence applied in order.
/// `op` need not be a state; the map is linear in it.
pub(crate) fn parity_of_operator(op: &Operator, pulses: &[RfPulse]) -> f64 {
    let u = pulses
        .iter()
        .fold(Operator::identity(), |acc, p| global_rotation(*p) * acc);
    let rotated = u * op * u.adjoint();
    (0..4).map(|i| ZZ_SIGN[i] * rotated[(i, i)].re).sum()
}

/// Parity ⟨σz⊗σz⟩ after one global rotation of area θ and RF phase φ_RF.
pub fn parity_expectation(rho: &DensityMatrix, area: f64, rf_phase: f64) -> f64 {
    parity_after_pulses(rho, &[RfPulse::new(area, rf_phase)])
}

/// Parity after a sequence of global pulses, applied first to last.
pub fn parity_after_pulses(rho: &DensityMatrix, pulses: &[RfPulse]) -> f64 {
    parity_of_operator(rho.matrix(), pulses).clamp(-1.0, 1.0)
}

/// Parity analysis used for state characterisation.
///
/// A single global rotation cannot turn the |g−,g+⟩/|g+,g−⟩ coherence into
/// a φ_RF-dependent parity signal, so the analysis applies a fixed
/// `preparation` pulse followed by a pulse of area `analysis_area` at the
/// scanned RF phase. With two π/2 pulses the parity oscillates at 2φ_RF.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParityAnalysis {
    pub preparation: RfPulse,
    pub analysis_area: f64,
}

impl Default for ParityAnalysis {
    fn default() -> Self {
        Self {
            preparation: RfPulse::new(std::f64::consts::FRAC_PI_2, 0.0),
            analysis_area: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl ParityAnalysis {
    pub fn pulses(&self, rf_phase: f64) -> [RfPulse; 2] {
        [self.preparation, RfPulse::new(self.analysis_area, rf_phase)]
    }

    pub fn expectation(&self, rho: &DensityMatrix, rf_phase: f64) -> f64 {
        parity_after_pulses(rho, &self.pulses(rf_phase))
    }
}
