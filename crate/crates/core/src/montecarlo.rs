//! Attempt-level Monte Carlo of the experimental sequence and its rate
//! budget.
//!
//! Counting is Binomial per herald. The heralds at each scan point are cut
//! into fixed blocks of [`BLOCK_HERALDS`]; block `j` of point `i` always
//! draws from stream `(seed, i, j)`. Shards are contiguous runs of blocks
//! summed in parallel, so the totals do not depend on the shard count.

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emission::{witness_probability, EmissionConfig, HeraldModel};
use crate::error::{check_positive, check_probability};
use crate::estimation::ParityPoint;
use crate::quantum::{DensityMatrix, ParityAnalysis};
use crate::rng::{stream, Domain};
use crate::{Error, Result};

pub const BLOCK_HERALDS: u64 = 1 << 16;

/// Timing and probabilities of one experimental sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceConfig {
    /// Single-atom Raman probability of the weak herald pulse.
    pub p_e: f64,
    /// Single-atom Raman probability of the strong witness pulse.
    pub p_w: f64,
    /// Overall single-photon detection efficiency.
    pub eta: f64,
    pub attempts_per_sequence: u32,
    /// Sequences per second.
    pub sequence_rate: f64,
    pub cooling_time: f64,
    pub pump_time: f64,
    pub excitation_pulse: f64,
    pub witness_window: f64,
}

impl SequenceConfig {
    /// The published operating point.
    pub fn published() -> Self {
        Self {
            p_e: 0.06,
            p_w: 0.80,
            eta: 0.002,
            attempts_per_sequence: 30,
            sequence_rate: 704.0,
            cooling_time: 300e-6,
            pump_time: 20e-6,
            excitation_pulse: 48e-9,
            witness_window: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_e", self.p_e)?;
        check_probability("p_w", self.p_w)?;
        check_probability("eta", self.eta)?;
        if self.attempts_per_sequence == 0 {
            return Err(Error::OutOfRange {
                name: "attempts_per_sequence",
                value: 0.0,
                expected: "at least 1",
            });
        }
        check_positive("sequence_rate", self.sequence_rate)?;
        check_positive("cooling_time", self.cooling_time)?;
        check_positive("pump_time", self.pump_time)?;
        check_positive("excitation_pulse", self.excitation_pulse)?;
        check_positive("witness_window", self.witness_window)?;
        Ok(())
    }

    /// Cooling plus every attempt, excluding the post-herald witness stage.
    pub fn herald_stage_duration(&self) -> f64 {
        self.cooling_time + self.attempts_per_sequence as f64 * (self.pump_time + self.excitation_pulse)
    }
}

/// Probability that one attempt heralds: `2 p_e (1 − p_e) η`.
pub fn herald_probability(cfg: &SequenceConfig) -> f64 {
    2.0 * cfg.p_e * (1.0 - cfg.p_e) * cfg.eta
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBudget {
    /// Heralds per second.
    pub herald_rate: f64,
    /// Witness detections per minute.
    pub witness_rate_per_min: f64,
}

pub fn rate_budget(cfg: &SequenceConfig, kappa: f64) -> RateBudget {
    let herald_rate = cfg.sequence_rate * cfg.attempts_per_sequence as f64 * herald_probability(cfg);
    RateBudget {
        herald_rate,
        witness_rate_per_min: herald_rate * kappa * 60.0,
    }
}

/// Factors of the single-photon detection efficiency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBudget {
    /// Fraction of the emission collected into the common mode (NA-limited).
    pub collection_fraction: f64,
    pub optics_transmission: f64,
    pub detector_quantum_efficiency: f64,
}

impl EfficiencyBudget {
    pub fn published() -> Self {
        Self {
            collection_fraction: 0.06,
            optics_transmission: 0.07,
            detector_quantum_efficiency: 0.70,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("collection_fraction", self.collection_fraction)?;
        check_probability("optics_transmission", self.optics_transmission)?;
        check_probability("detector_quantum_efficiency", self.detector_quantum_efficiency)
    }
}

pub fn efficiency_product(budget: &EfficiencyBudget) -> f64 {
    budget.collection_fraction * budget.optics_transmission * budget.detector_quantum_efficiency
}

/// Counts at one scan setting (a phase difference or a delay).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: f64,
    pub n_heralds: u64,
    pub n_witness: u64,
}

impl CountRecord {
    pub fn frequency(&self) -> f64 {
        self.n_witness as f64 / self.n_heralds as f64
    }

    /// Poissonian error bar `√k / n` on the frequency.
    pub fn poisson_error(&self) -> f64 {
        (self.n_witness as f64).sqrt() / self.n_heralds as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub heralds_per_point: u64,
    pub seed: u64,
    /// Number of parallel shards per point. Does not affect the output.
    pub shards: usize,
}

impl ScanOptions {
    pub fn new(heralds_per_point: u64, seed: u64) -> Self {
        Self {
            heralds_per_point,
            seed,
            shards: 1,
        }
    }

    pub fn with_shards(mut self, shards: usize) -> Self {
        self.shards = shards;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.heralds_per_point == 0 {
            return Err(Error::OutOfRange {
                name: "heralds_per_point",
                value: 0.0,
                expected: "at least 1",
            });
        }
        Ok(())
    }
}

/// Number of successes in `trials` Bernoulli(`p`) draws at scan point `point`.
pub fn draw_binomial(
    seed: u64,
    domain: Domain,
    point: u64,
    trials: u64,
    p: f64,
    shards: usize,
) -> u64 {
    let p = p.clamp(0.0, 1.0);
    let blocks = trials.div_ceil(BLOCK_HERALDS);
    if blocks == 0 {
        return 0;
    }
    let shards = (shards.max(1) as u64).min(blocks);
    let block_draw = |block: u64| {
        let start = block * BLOCK_HERALDS;
        let n = BLOCK_HERALDS.min(trials - start);
        let mut rng = stream(seed, domain, point, block);
        Binomial::new(n, p).expect("p clamped to [0, 1]").sample(&mut rng)
    };
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let lo = s * blocks / shards;
            let hi = (s + 1) * blocks / shards;
            (lo..hi).map(block_draw).sum::<u64>()
        })
        .sum()
}

/// Fringe scan of an arbitrary state: `Binomial(heralds, P(Δφ))` per point.
pub fn simulate_state_scan(
    rho: &DensityMatrix,
    emission: &EmissionConfig,
    grid: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<CountRecord>> {
    opts.validate()?;
    Ok(scan(grid, opts, Domain::FringeScan, |dphi| {
        witness_probability(rho, dphi, emission)
    }))
}

/// Fringe scan of the heralded state.
pub fn simulate_fringe_scan(
    herald: &HeraldModel,
    emission: &EmissionConfig,
    grid: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<CountRecord>> {
    simulate_state_scan(&herald.state()?, emission, grid, opts)
}

/// Delay scan: at delay τ the effective phase is `set_phase − gradient_phase(τ)`.
pub fn simulate_delay_scan<F>(
    herald: &HeraldModel,
    emission: &EmissionConfig,
    delays: &[f64],
    set_phase: f64,
    gradient_phase: F,
    opts: &ScanOptions,
) -> Result<Vec<CountRecord>>
where
    F: Fn(f64) -> f64 + Sync,
{
    opts.validate()?;
    let rho = herald.state()?;
    Ok(scan(delays, opts, Domain::DelayScan, |tau| {
        witness_probability(&rho, set_phase - gradient_phase(tau), emission)
    }))
}

fn scan<P>(settings: &[f64], opts: &ScanOptions, domain: Domain, probability: P) -> Vec<CountRecord>
where
    P: Fn(f64) -> f64 + Sync,
{
    settings
        .par_iter()
        .enumerate()
        .map(|(i, &setting)| {
            let p = probability(setting);
            CountRecord {
                setting,
                n_heralds: opts.heralds_per_point,
                n_witness: draw_binomial(opts.seed, domain, i as u64, opts.heralds_per_point, p, opts.shards),
            }
        })
        .collect()
}

/// Projective parity measurements: each shot yields ±1 with probability
/// `(1 ± ⟨P⟩)/2`. Returns the sample mean and its standard error per phase.
pub fn simulate_parity_scan(
    rho: &DensityMatrix,
    analysis: &ParityAnalysis,
    rf_phases: &[f64],
    shots_per_point: u64,
    seed: u64,
) -> Result<Vec<ParityPoint>> {
    if shots_per_point == 0 {
        return Err(Error::OutOfRange {
            name: "shots_per_point",
            value: 0.0,
            expected: "at least 1",
        });
    }
    Ok(rf_phases
        .par_iter()
        .enumerate()
        .map(|(i, &rf_phase)| {
            let expected = analysis.expectation(rho, rf_phase);
            let even = draw_binomial(
                seed,
                Domain::ParityShots,
                i as u64,
                shots_per_point,
                (1.0 + expected) / 2.0,
                1,
            );
            let n = shots_per_point as f64;
            let value = 2.0 * even as f64 / n - 1.0;
            ParityPoint {
                rf_phase,
                value,
                std_err: ((1.0 - value * value).max(0.0) / n).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::PureTwoQubitState;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn herald_probability_examples() {
        assert_abs_diff_eq!(herald_probability(&SequenceConfig::published()), 2.256e-4, epsilon = 1e-18);
        let none = SequenceConfig { p_e: 0.0, ..SequenceConfig::published() };
        assert_eq!(herald_probability(&none), 0.0);
        let best = SequenceConfig { p_e: 0.5, eta: 1.0, ..SequenceConfig::published() };
        assert_eq!(herald_probability(&best), 0.5);
    }

    #[test]
    fn rate_budget_examples() {
        let budget = rate_budget(&SequenceConfig::published(), 1.63e-3);
        assert_abs_diff_eq!(budget.herald_rate, 704.0 * 30.0 * 2.256e-4, epsilon = 1e-12);
        assert_abs_diff_eq!(budget.herald_rate, 4.76, epsilon = 0.01);
        // From the published herald rate instead of the computed one.
        assert_abs_diff_eq!(5.02 * 1.63e-3 * 60.0, 0.49, epsilon = 0.01);

        let idle = SequenceConfig { attempts_per_sequence: 0, ..SequenceConfig::published() };
        assert!(idle.validate().is_err());
        let idle_budget = rate_budget(&idle, 1.63e-3);
        assert_eq!(idle_budget.herald_rate, 0.0);
        assert_eq!(idle_budget.witness_rate_per_min, 0.0);
    }

    #[test]
    fn rate_budget_is_linear_in_rate_and_attempts() {
        let base = SequenceConfig::published();
        let b0 = rate_budget(&base, 1.63e-3);
        let faster = rate_budget(&SequenceConfig { sequence_rate: 3.0 * base.sequence_rate, ..base }, 1.63e-3);
        assert_abs_diff_eq!(faster.herald_rate, 3.0 * b0.herald_rate, epsilon = 1e-12);
        assert_abs_diff_eq!(faster.witness_rate_per_min, 3.0 * b0.witness_rate_per_min, epsilon = 1e-12);
        let more = rate_budget(&SequenceConfig { attempts_per_sequence: 60, ..base }, 1.63e-3);
        assert_abs_diff_eq!(more.herald_rate, 2.0 * b0.herald_rate, epsilon = 1e-12);
    }

    #[test]
    fn efficiency_examples() {
        assert_abs_diff_eq!(efficiency_product(&EfficiencyBudget::published()), 2.94e-3, epsilon = 1e-15);
        let zero = EfficiencyBudget { optics_transmission: 0.0, ..EfficiencyBudget::published() };
        assert_eq!(efficiency_product(&zero), 0.0);
        let unit = EfficiencyBudget {
            collection_fraction: 1.0,
            optics_transmission: 1.0,
            detector_quantum_efficiency: 1.0,
        };
        assert_eq!(efficiency_product(&unit), 1.0);
        assert!(EfficiencyBudget { collection_fraction: 1.5, ..unit }.validate().is_err());
    }

    #[test]
    fn published_sequence_fits_in_its_period() {
        let cfg = SequenceConfig::published();
        cfg.validate().unwrap();
        assert!(cfg.herald_stage_duration() < 1.0 / cfg.sequence_rate);
    }

    #[test]
    fn dark_fringe_point_never_clicks() {
        let rho = PureTwoQubitState::entangled(0.0).density();
        let emission = EmissionConfig::new(1.0, 0.8, 0.002).unwrap();
        let records = simulate_state_scan(&rho, &emission, &[PI, PI], &ScanOptions::new(100_000, 3)).unwrap();
        assert!(records.iter().all(|r| r.n_witness == 0));
    }

    #[test]
    fn same_seed_same_records_any_sharding() {
        let herald = HeraldModel::from_coherence_magnitude(0.135, 0.0, 0.91).unwrap();
        let emission = EmissionConfig::new(1.63e-3, 0.8, 0.002).unwrap();
        let grid: Vec<f64> = (0..9).map(|i| i as f64 * PI / 4.0).collect();
        let opts = ScanOptions::new(1_000_000, 42);
        let a = simulate_fringe_scan(&herald, &emission, &grid, &opts).unwrap();
        let b = simulate_fringe_scan(&herald, &emission, &grid, &opts).unwrap();
        let c = simulate_fringe_scan(&herald, &emission, &grid, &opts.with_shards(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = simulate_fringe_scan(&herald, &emission, &grid, &ScanOptions::new(1_000_000, 43)).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn zero_heralds_rejected() {
        let herald = HeraldModel::ideal(0.0);
        let emission = EmissionConfig::new(1.63e-3, 0.8, 0.002).unwrap();
        assert!(simulate_fringe_scan(&herald, &emission, &[0.0], &ScanOptions::new(0, 1)).is_err());
    }

    #[test]
    fn delay_scan_is_periodic_and_flat_without_gradient() {
        let herald = HeraldModel::from_coherence_magnitude(0.135, 0.0, 0.91).unwrap();
        let emission = EmissionConfig::new(1.0, 0.8, 0.002).unwrap();
        let rho = herald.state().unwrap();
        let period = 8.0e-3;
        let grad = |tau: f64| 2.0 * PI * tau / period;
        // Expected probabilities: same at τ = 0 and τ = T.
        let p0 = witness_probability(&rho, -grad(0.0), &emission);
        let pt = witness_probability(&rho, -grad(period), &emission);
        assert_abs_diff_eq!(p0, pt, epsilon = 1e-12);

        let half = EmissionConfig::new(0.5, 0.8, 0.002).unwrap();
        let opts = ScanOptions::new(200_000, 5);
        let flat = simulate_delay_scan(&herald, &half, &[0.0, 1e-3, 5e-3], 0.0, |_| 0.0, &opts).unwrap();
        let p: f64 = 0.5 * 1.27;
        let sigma = (p * (1.0 - p) / 200_000.0).sqrt();
        for r in &flat {
            assert!((r.frequency() - p).abs() < 5.0 * sigma, "{r:?}");
        }
    }
}
