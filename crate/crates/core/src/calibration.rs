//! Mirror displacement calibration: PZT voltage ramp, Michelson readout and
//! the delay-to-phase lookup table.
//!
//! The witness phase is `Δφ = k(d′ − d)` and the mirror moves by
//! `x = (d′ − d)/2`, so `Δφ = 2kx`, the same argument a Michelson
//! interferometer at the same wavelength sees.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::check_positive;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampConfig {
    /// Ramp amplitude ΔU, V.
    pub amplitude: f64,
    /// Ramp duration ΔT, s.
    pub duration: f64,
    /// Offset voltage, V.
    pub offset: f64,
    /// Voltage step that moves the mirror by λ/2, V.
    pub volts_per_half_wavelength: f64,
}

impl RampConfig {
    pub fn new(amplitude: f64, duration: f64, offset: f64, volts_per_half_wavelength: f64) -> Result<Self> {
        let ramp = Self { amplitude, duration, offset, volts_per_half_wavelength };
        ramp.validate()?;
        Ok(ramp)
    }

    /// 14.0 V over 200 µs on a 47.9 V offset, one full fringe.
    pub fn published() -> Self {
        Self {
            amplitude: 14.0,
            duration: 200e-6,
            offset: 47.9,
            volts_per_half_wavelength: 14.0,
        }
    }

    /// The 18.0 V step used for the point beyond one fringe.
    pub fn extended() -> Self {
        Self { amplitude: 18.0, ..Self::published() }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("ramp duration", self.duration)?;
        check_positive("volts_per_half_wavelength", self.volts_per_half_wavelength)
    }
}

/// Mirror displacement for a voltage step `voltage` under the linear PZT
/// response.
pub fn pzt_displacement(voltage: f64, ramp: &RampConfig, wavelength: f64) -> f64 {
    voltage / ramp.volts_per_half_wavelength * wavelength / 2.0
}

/// Ordered (delay, phase) anchors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    anchors: Vec<(f64, f64)>,
}

impl CalibrationTable {
    /// Anchors as (τ in s, Δφ in rad). Delays must be strictly increasing
    /// and phases nondecreasing.
    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::InvalidTable("no anchors".into()));
        }
        if anchors.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return Err(Error::InvalidTable("non-finite anchor".into()));
        }
        for w in anchors.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidTable(format!(
                    "delays not strictly increasing at {} s",
                    w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::InvalidTable(format!(
                    "phase decreases at {} s",
                    w[1].0
                )));
            }
        }
        Ok(Self { anchors })
    }

    /// 60, 93, 129, 164, 203 µs for Δφ = 0, π/2, π, 3π/2, 2π.
    pub fn published() -> Self {
        Self {
            anchors: vec![
                (60e-6, 0.0),
                (93e-6, FRAC_PI_2),
                (129e-6, PI),
                (164e-6, 3.0 * FRAC_PI_2),
                (203e-6, TAU),
            ],
        }
    }

    /// Single anchor for the larger ramp: 220 µs for Δφ = 5π/2.
    pub fn extended_ramp() -> Self {
        Self { anchors: vec![(220e-6, 5.0 * FRAC_PI_2)] }
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn range(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }

    /// Reads CSV with columns `tau_us,delta_phi_rad`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut anchors = Vec::new();
        for row in rdr.deserialize() {
            let row: TableRow = row?;
            anchors.push((row.tau_us / 1e6, row.delta_phi_rad));
        }
        Self::new(anchors)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for &(tau, phi) in &self.anchors {
            wtr.serialize(TableRow { tau_us: tau * 1e6, delta_phi_rad: phi })?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Mirror position `x(t) = Δφ(t)/(2k)` implied by the table, held at the
    /// end values outside the anchor range.
    pub fn mirror_motion(&self, wavelength: f64) -> impl Fn(f64) -> f64 + '_ {
        let two_k = 2.0 * TAU / wavelength;
        let (lo, hi) = self.range();
        move |t| {
            let t = t.clamp(lo, hi);
            interpolate(&self.anchors, t) / two_k
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableRow {
    tau_us: f64,
    delta_phi_rad: f64,
}

fn interpolate(anchors: &[(f64, f64)], tau: f64) -> f64 {
    let i = anchors.partition_point(|a| a.0 <= tau);
    if i == 0 {
        return anchors[0].1;
    }
    if i == anchors.len() {
        return anchors[i - 1].1;
    }
    let (t0, p0) = anchors[i - 1];
    let (t1, p1) = anchors[i];
    if tau == t0 {
        return p0;
    }
    p0 + (p1 - p0) * (tau - t0) / (t1 - t0)
}

/// Phase difference at delay `tau` (s), piecewise linear between anchors.
pub fn delay_to_phase(tau: f64, table: &CalibrationTable) -> Result<f64> {
    let (lo, hi) = table.range();
    if !(lo..=hi).contains(&tau) {
        return Err(Error::Extrapolation { tau_s: tau, min_s: lo, max_s: hi });
    }
    Ok(interpolate(&table.anchors, tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MichelsonConfig {
    /// Mean intensity I₀.
    pub intensity: f64,
    /// Fringe visibility V_M.
    pub visibility: f64,
}

impl Default for MichelsonConfig {
    fn default() -> Self {
        Self { intensity: 1.0, visibility: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MichelsonTrace {
    pub times: Vec<f64>,
    pub intensity: Vec<f64>,
}

/// Interferometer signal `I₀(1 + V_M cos 2k x(t))` sampled uniformly over
/// the ramp duration.
pub fn michelson_trace(
    ramp: &RampConfig,
    mirror_motion: impl Fn(f64) -> f64,
    wavelength: f64,
    samples: usize,
    cfg: &MichelsonConfig,
) -> Result<MichelsonTrace> {
    michelson_trace_window(mirror_motion, wavelength, 0.0, ramp.duration, samples, cfg)
}

/// As [`michelson_trace`], over an arbitrary window `[start, end]`.
pub fn michelson_trace_window(
    mirror_motion: impl Fn(f64) -> f64,
    wavelength: f64,
    start: f64,
    end: f64,
    samples: usize,
    cfg: &MichelsonConfig,
) -> Result<MichelsonTrace> {
    check_positive("wavelength", wavelength)?;
    if samples < 2 {
        return Err(Error::OutOfRange {
            name: "samples",
            value: samples as f64,
            expected: "≥ 2",
        });
    }
    // Written negated so that NaN fails too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(end > start) {
        return Err(Error::OutOfRange { name: "window end", value: end, expected: "after window start" });
    }
    let two_k = 2.0 * TAU / wavelength;
    let times: Vec<f64> = (0..samples)
        .map(|i| start + (end - start) * i as f64 / (samples - 1) as f64)
        .collect();
    let intensity = times
        .iter()
        .map(|&t| cfg.intensity * (1.0 + cfg.visibility * (two_k * mirror_motion(t)).cos()))
        .collect();
    Ok(MichelsonTrace { times, intensity })
}

/// Unwrapped optical phase against time, zero at the first sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub times: Vec<f64>,
    pub phases: Vec<f64>,
}

impl PhaseTrace {
    /// Linear interpolation of the phase at `t`, clamped to the trace ends.
    pub fn phase_at(&self, t: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.times.iter().copied().zip(self.phases.iter().copied()).collect();
        interpolate(&pts, t)
    }

    /// First time at which the phase reaches `phase`, or `None` if it never
    /// does.
    pub fn time_at_phase(&self, phase: f64) -> Option<f64> {
        let i = self.phases.iter().position(|p| *p >= phase)?;
        if i == 0 {
            return Some(self.times[0]);
        }
        let (p0, p1) = (self.phases[i - 1], self.phases[i]);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        Some(t0 + (t1 - t0) * (phase - p0) / (p1 - p0))
    }
}

/// Recovers the optical phase from a Michelson trace by inverting the
/// cosine and unfolding it at the fringe extrema.
///
/// The phase is assumed to advance monotonically. The trace is normalized
/// by its own extremes, so it should cover at least one maximum and one
/// minimum for an accurate readout. A reversal of the folded phase away
/// from 0 or π means the mirror turned around and is reported as
/// [`Error::AmbiguousPhase`].
pub fn phase_from_trace(trace: &MichelsonTrace) -> Result<PhaseTrace> {
    let n = trace.intensity.len();
    if n < 2 || trace.times.len() != n {
        return Err(Error::InvalidDataset("trace needs ≥ 2 samples with matching times".into()));
    }
    let max = trace.intensity.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = trace.intensity.iter().copied().fold(f64::INFINITY, f64::min);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(max - min > 1e-12 * max.abs().max(1e-300)) {
        return Err(Error::NoSignal("trace has no fringe contrast".into()));
    }
    let folded: Vec<f64> = trace
        .intensity
        .iter()
        .map(|&i| ((2.0 * i - max - min) / (max - min)).clamp(-1.0, 1.0).acos())
        .collect();
    let steps: Vec<f64> = folded.windows(2).map(|w| w[1] - w[0]).collect();
    let max_step = steps.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let turn_tolerance = 2.0 * max_step;

    // Branch m: phase = mπ + θ for even m, (m+1)π − θ for odd m.
    let first_dir = steps.iter().copied().find(|s| *s != 0.0).unwrap_or(0.0);
    let mut branch: i64 = if first_dir < 0.0 { 1 } else { 0 };
    let mut rising = first_dir >= 0.0;
    let unfold = |m: i64, theta: f64| {
        if m % 2 == 0 { m as f64 * PI + theta } else { (m + 1) as f64 * PI - theta }
    };

    let mut phases = Vec::with_capacity(n);
    phases.push(unfold(branch, folded[0]));
    for k in 1..n {
        let step = steps[k - 1];
        let reversed = (rising && step < 0.0) || (!rising && step > 0.0);
        if reversed {
            let near_top = PI - folded[k - 1] <= turn_tolerance;
            let near_bottom = folded[k - 1] <= turn_tolerance;
            if (rising && !near_top) || (!rising && !near_bottom) {
                return Err(Error::AmbiguousPhase(format!(
                    "fringe reverses at t = {} s away from an extremum",
                    trace.times[k]
                )));
            }
            branch += 1;
            rising = !rising;
        }
        phases.push(unfold(branch, folded[k]));
    }
    let origin = phases[0];
    phases.iter_mut().for_each(|p| *p -= origin);
    Ok(PhaseTrace { times: trace.times.clone(), phases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const LAMBDA: f64 = 493e-9;

    #[test]
    fn displacement_examples() {
        let ramp = RampConfig::published();
        assert_abs_diff_eq!(pzt_displacement(14.0, &ramp, LAMBDA), 246.5e-9, epsilon = 1e-18);
        assert_eq!(pzt_displacement(0.0, &ramp, LAMBDA), 0.0);
        assert_abs_diff_eq!(pzt_displacement(7.0, &ramp, LAMBDA), LAMBDA / 4.0, epsilon = 1e-18);
        assert_abs_diff_eq!(
            pzt_displacement(10.0, &ramp, LAMBDA),
            2.0 * pzt_displacement(5.0, &ramp, LAMBDA),
            epsilon = 1e-20
        );
    }

    #[test]
    fn table_lookup() {
        let table = CalibrationTable::published();
        for &(tau, phi) in table.anchors() {
            assert_eq!(delay_to_phase(tau, &table).unwrap(), phi);
        }
        assert_abs_diff_eq!(delay_to_phase(111e-6, &table).unwrap(), 0.75 * PI, epsilon = 1e-12);
        assert!(matches!(delay_to_phase(59e-6, &table), Err(Error::Extrapolation { .. })));
        assert!(matches!(delay_to_phase(204e-6, &table), Err(Error::Extrapolation { .. })));
        let ext = CalibrationTable::extended_ramp();
        assert_eq!(delay_to_phase(220e-6, &ext).unwrap(), 2.5 * PI);
        assert!(delay_to_phase(219e-6, &ext).is_err());
    }

    #[test]
    fn table_validation_and_csv() {
        assert!(CalibrationTable::new(vec![]).is_err());
        assert!(CalibrationTable::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(CalibrationTable::new(vec![(1.0, 1.0), (2.0, 0.0)]).is_err());
        let mut buf = Vec::new();
        CalibrationTable::published().to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("tau_us,delta_phi_rad\n"));
        let back = CalibrationTable::from_csv(text.as_bytes()).unwrap();
        for (a, b) in back.anchors().iter().zip(CalibrationTable::published().anchors()) {
            assert_abs_diff_eq!(a.0, b.0, epsilon = 1e-15);
            assert_eq!(a.1, b.1);
        }
    }

    #[test]
    fn half_wavelength_sweep_is_one_fringe() {
        let ramp = RampConfig::published();
        let motion = |t: f64| pzt_displacement(ramp.amplitude * t / ramp.duration, &ramp, LAMBDA);
        let trace = michelson_trace(&ramp, motion, LAMBDA, 2001, &MichelsonConfig::default()).unwrap();
        assert_abs_diff_eq!(trace.intensity[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.intensity[1000], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.intensity[2000], 2.0, epsilon = 1e-9);
        let phase = phase_from_trace(&trace).unwrap();
        for (t, p) in phase.times.iter().zip(&phase.phases) {
            assert_abs_diff_eq!(*p, TAU * t / ramp.duration, epsilon = 1e-6);
        }
    }

    #[test]
    fn static_mirror_gives_flat_trace_and_no_phase() {
        let ramp = RampConfig::published();
        let trace = michelson_trace(&ramp, |_| 1e-7, LAMBDA, 100, &MichelsonConfig::default()).unwrap();
        assert!(trace.intensity.iter().all(|i| *i == trace.intensity[0]));
        assert!(matches!(phase_from_trace(&trace), Err(Error::NoSignal(_))));
        let dark = MichelsonConfig { intensity: 1.0, visibility: 0.0 };
        let ramped = |t: f64| LAMBDA / 2.0 * t / ramp.duration;
        let trace = michelson_trace(&ramp, ramped, LAMBDA, 100, &dark).unwrap();
        assert!(phase_from_trace(&trace).is_err());
    }

    #[test]
    fn table_round_trip_through_interferometer() {
        let table = CalibrationTable::published();
        let (lo, hi) = table.range();
        let trace = michelson_trace_window(
            table.mirror_motion(LAMBDA),
            LAMBDA,
            lo,
            hi,
            14_301,
            &MichelsonConfig { intensity: 0.7, visibility: 0.9 },
        )
        .unwrap();
        let phase = phase_from_trace(&trace).unwrap();
        for &(tau, phi) in table.anchors() {
            assert!((phase.phase_at(tau) - phi).abs() < TAU / 100.0);
            let t = phase.time_at_phase(phi - 1e-9).unwrap();
            assert!((t - tau).abs() < 1e-6, "{t} vs {tau}");
        }
    }

    #[test]
    fn reversal_mid_fringe_is_ambiguous() {
        let ramp = RampConfig::published();
        // Mirror goes to 3λ/8 (three quarters of a fringe) and comes back.
        let motion = |t: f64| 3.0 * LAMBDA / 8.0 * (1.0 - (2.0 * t / ramp.duration - 1.0).abs());
        let trace = michelson_trace(&ramp, motion, LAMBDA, 1001, &MichelsonConfig::default()).unwrap();
        assert!(matches!(phase_from_trace(&trace), Err(Error::AmbiguousPhase(_))));
    }
}
