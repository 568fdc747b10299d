use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use atompair::calibration::{delay_to_phase, michelson_trace_window, phase_from_trace, MichelsonConfig};
use atompair::emission::{
    fringe_visibility, mean_witness_probability, predicted_fringe_from_concurrence,
    relative_probability, witness_probability,
};
use atompair::estimation::{
    concurrence_from_parity, fit_fringe, fit_period, g2_zero, FringeDataset, PeriodFit,
};
use atompair::gradiometry::{
    delay_scan_expectation, gradient_from_period, gradient_phase, oscillation_period,
};
use atompair::montecarlo::{
    efficiency_product, herald_probability, rate_budget, simulate_delay_scan,
    simulate_parity_scan, simulate_state_scan, ScanOptions,
};
use atompair::quantum::{concurrence_mixed, DensityMatrix, ParityAnalysis, PureTwoQubitState};
use serde::Serialize;

use crate::config::Resolved;

/// Writes `bytes` to `out`, or to standard output when `out` is `None`.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row)?;
    }
    Ok(wtr.into_inner().map_err(|e| e.into_error())?)
}

/// Inclusive grid of `n` points on `[lo, hi]`.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum FringeState {
    /// The configured heralded state.
    Heralded,
    /// ½(|g−⟩+|g+⟩)⊗(|g−⟩+|g+⟩), prepared by global RF pulses.
    Product,
}

#[derive(Serialize)]
struct FringeRow {
    delta_phi_rad: f64,
    p_witness: f64,
    p_err: f64,
    r_relative: f64,
    n_heralds: u64,
    n_witness: u64,
    p_model: f64,
    p_concurrence: f64,
}

pub fn fringe(cfg: &Resolved, state: FringeState, points: usize, opts: &ScanOptions) -> Result<Vec<u8>> {
    let rho = match state {
        FringeState::Heralded => cfg.herald.state()?,
        FringeState::Product => DensityMatrix::from_pure(&PureTwoQubitState::product_superposition()),
    };
    let grid = linspace(0.0, TAU, points);
    let records = simulate_state_scan(&rho, &cfg.emission, &grid, opts)?;
    // A single excited atom emits with probability κ at every phase.
    let p_separable = cfg.emission.kappa;
    let concurrence_curve =
        predicted_fringe_from_concurrence(concurrence_mixed(&rho), cfg.emission.kappa, &grid)?;
    let rows: Vec<FringeRow> = records
        .iter()
        .zip(&concurrence_curve)
        .map(|(r, &p_concurrence)| {
            Ok(FringeRow {
                delta_phi_rad: r.setting,
                p_witness: r.frequency(),
                p_err: r.poisson_error(),
                r_relative: relative_probability(r.frequency(), p_separable)?,
                n_heralds: r.n_heralds,
                n_witness: r.n_witness,
                p_model: witness_probability(&rho, r.setting, &cfg.emission),
                p_concurrence,
            })
        })
        .collect::<Result<_>>()?;
    to_csv(&rows)
}

#[derive(Serialize)]
struct DelayRow {
    tau_ms: f64,
    p_witness: f64,
    p_err: f64,
    expectation: f64,
}

#[derive(Serialize)]
pub struct DelayReport {
    set_phase_rad: f64,
    #[serde(rename = "gradient_mT_per_m")]
    gradient_mt_per_m: f64,
    expected_period_ms: f64,
    detected: bool,
    period_ms: Option<f64>,
    period_err_ms: Option<f64>,
    #[serde(rename = "inferred_gradient_mT_per_m")]
    inferred_gradient_mt_per_m: Option<f64>,
    significance: f64,
    fit: PeriodFit,
}

pub struct DelayScan {
    pub csv: Vec<u8>,
    pub report: Vec<u8>,
}

pub fn delay_scan(
    cfg: &Resolved,
    set_phase: f64,
    points: usize,
    tau_max_ms: f64,
    opts: &ScanOptions,
) -> Result<DelayScan> {
    ensure!(tau_max_ms > 0.0 && tau_max_ms.is_finite(), "--tau-max-ms must be positive");
    let grad = cfg.gradiometer;
    let taus = linspace(0.0, tau_max_ms * 1e-3, points);
    let records = simulate_delay_scan(
        &cfg.herald,
        &cfg.emission,
        &taus,
        set_phase,
        |t| gradient_phase(t, &grad),
        opts,
    )?;
    let rho = cfg.herald.state()?;
    let visibility = fringe_visibility(&rho)?;
    let mean = mean_witness_probability(&rho, &cfg.emission);
    let offset = rho.single_excitation_coherence().arg();
    let expectation = delay_scan_expectation(&taus, set_phase + offset, visibility, mean, &grad)?;
    let rows: Vec<DelayRow> = records
        .iter()
        .zip(&expectation)
        .map(|(r, &e)| DelayRow {
            tau_ms: r.setting * 1e3,
            p_witness: r.frequency(),
            p_err: r.poisson_error(),
            expectation: e,
        })
        .collect();

    let fit = fit_period(&records)?;
    let inferred = match fit.period {
        Some(p) => Some(gradient_from_period(p, &grad)? * 1e3),
        None => None,
    };
    let report = DelayReport {
        set_phase_rad: set_phase,
        gradient_mt_per_m: grad.gradient * 1e3,
        expected_period_ms: oscillation_period(&grad) * 1e3,
        detected: fit.detected,
        period_ms: fit.period.map(|p| p * 1e3),
        period_err_ms: fit.period_err.map(|e| e * 1e3),
        inferred_gradient_mt_per_m: inferred,
        significance: fit.significance,
        fit,
    };
    Ok(DelayScan { csv: to_csv(&rows)?, report: to_json(&report)? })
}

pub fn fit(csv_path: &Path) -> Result<Vec<u8>> {
    let file = std::fs::File::open(csv_path).with_context(|| format!("opening {}", csv_path.display()))?;
    let data = FringeDataset::from_csv(file).with_context(|| format!("reading {}", csv_path.display()))?;
    let fit = fit_fringe(&data)?;
    to_json(&fit)
}

#[derive(Serialize)]
struct Budget {
    herald_probability_per_attempt: f64,
    herald_rate_per_s: f64,
    witness_rate_per_min: f64,
    kappa: f64,
    configured_eta: f64,
    efficiency_product: Option<f64>,
    eta_over_efficiency_product: Option<f64>,
    collection_factor: f64,
    herald_stage_us: f64,
    sequence_period_us: f64,
}

pub fn budget(cfg: &Resolved) -> Result<Vec<u8>> {
    let rates = rate_budget(&cfg.sequence, cfg.emission.kappa);
    let product = cfg.efficiency.as_ref().map(efficiency_product);
    to_json(&Budget {
        herald_probability_per_attempt: herald_probability(&cfg.sequence),
        herald_rate_per_s: rates.herald_rate,
        witness_rate_per_min: rates.witness_rate_per_min,
        kappa: cfg.emission.kappa,
        configured_eta: cfg.sequence.eta,
        efficiency_product: product,
        eta_over_efficiency_product: product.filter(|p| *p > 0.0).map(|p| cfg.sequence.eta / p),
        collection_factor: cfg.emission.collection_factor(),
        herald_stage_us: cfg.sequence.herald_stage_duration() * 1e6,
        sequence_period_us: 1e6 / cfg.sequence.sequence_rate,
    })
}

#[derive(Serialize)]
struct AnchorCheck {
    tau_us: f64,
    delta_phi_rad: f64,
    table_phase_rad: f64,
    recovered_phase_rad: f64,
    recovered_tau_us: Option<f64>,
}

#[derive(Serialize)]
struct CalibrationReport {
    wavelength_nm: f64,
    samples: usize,
    max_phase_error_rad: f64,
    max_delay_error_us: f64,
    anchors: Vec<AnchorCheck>,
}

/// Round trip: table → mirror motion → Michelson trace → phase readout.
pub fn calibrate(cfg: &Resolved, samples: usize) -> Result<Vec<u8>> {
    let table = &cfg.table;
    let (lo, hi) = table.range();
    ensure!(hi > lo, "calibration table needs at least two anchors for a round trip");
    let trace = michelson_trace_window(
        table.mirror_motion(cfg.wavelength),
        cfg.wavelength,
        lo,
        hi,
        samples,
        &MichelsonConfig::default(),
    )?;
    let phase = phase_from_trace(&trace)?;
    let mut anchors = Vec::new();
    for &(tau, phi) in table.anchors() {
        // The readout is zero at the first sample; shift to the table origin.
        let recovered = phase.phase_at(tau) + table.anchors()[0].1;
        let recovered_tau = phase.time_at_phase(phi - table.anchors()[0].1 - 1e-9);
        anchors.push(AnchorCheck {
            tau_us: tau * 1e6,
            delta_phi_rad: phi,
            table_phase_rad: delay_to_phase(tau, table)?,
            recovered_phase_rad: recovered,
            recovered_tau_us: recovered_tau.map(|t| t * 1e6),
        });
    }
    let max_phase_error_rad = anchors
        .iter()
        .map(|a| (a.recovered_phase_rad - a.delta_phi_rad).abs())
        .fold(0.0, f64::max);
    let max_delay_error_us = anchors
        .iter()
        .map(|a| a.recovered_tau_us.map_or(f64::INFINITY, |t| (t - a.tau_us).abs()))
        .fold(0.0, f64::max);
    to_json(&CalibrationReport {
        wavelength_nm: cfg.wavelength * 1e9,
        samples,
        max_phase_error_rad,
        max_delay_error_us,
        anchors,
    })
}

#[derive(Serialize)]
struct ParityRow {
    rf_phase_rad: f64,
    parity: f64,
    parity_err: f64,
    expectation: f64,
}

pub struct ParityScan {
    pub csv: Vec<u8>,
    pub report: Vec<u8>,
}

pub fn parity(cfg: &Resolved, points: usize, shots: u64, seed: u64) -> Result<ParityScan> {
    let rho = cfg.herald.state()?;
    let analysis = ParityAnalysis::default();
    let phases = linspace(0.0, PI, points);
    let curve = simulate_parity_scan(&rho, &analysis, &phases, shots, seed)?;
    let rows: Vec<ParityRow> = curve
        .iter()
        .map(|p| ParityRow {
            rf_phase_rad: p.rf_phase,
            parity: p.value,
            parity_err: p.std_err,
            expectation: analysis.expectation(&rho, p.rf_phase),
        })
        .collect();
    let estimate = concurrence_from_parity(rho.populations(), &curve)?;
    Ok(ParityScan { csv: to_csv(&rows)?, report: to_json(&estimate)? })
}

#[derive(Serialize)]
struct G2 {
    indistinguishability: f64,
    g2_zero: f64,
}

pub fn g2(m: f64) -> Result<Vec<u8>> {
    to_json(&G2 { indistinguishability: m, g2_zero: g2_zero(m)? })
}
