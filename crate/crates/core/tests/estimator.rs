//! Sampling behaviour of the estimators over many simulated data sets.

use std::f64::consts::{PI, TAU};

use atompair::emission::{fringe_visibility, EmissionConfig, HeraldModel};
use atompair::estimation::{concurrence_from_parity, fit_fringe, fit_period, FringeDataset};
use atompair::gradiometry::{gradient_phase, oscillation_period, GradiometerConfig};
use atompair::montecarlo::{simulate_delay_scan, simulate_fringe_scan, simulate_parity_scan, ScanOptions};
use atompair::quantum::{concurrence_mixed, DensityMatrix, ParityAnalysis};
use num_complex::Complex64 as C64;

const SEEDS: u64 = 200;

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * TAU / n as f64).collect()
}

fn published_emission() -> EmissionConfig {
    EmissionConfig::new(1.63e-3, 0.8, 0.0016).unwrap()
}

#[test]
fn visibility_estimate_is_unbiased_with_honest_errors() {
    let herald = HeraldModel::from_coherence_magnitude(0.135, 0.0, 0.91).unwrap();
    let truth = fringe_visibility(&herald.state().unwrap()).unwrap();
    let mut values = Vec::new();
    let mut covered = 0;
    for seed in 0..SEEDS {
        let opts = ScanOptions::new(20_000, seed);
        let records = simulate_fringe_scan(&herald, &published_emission(), &grid(9), &opts).unwrap();
        let fit = fit_fringe(&FringeDataset::from_records(&records).unwrap()).unwrap();
        if (fit.visibility_unclipped - truth).abs() <= 2.0 * fit.visibility_err {
            covered += 1;
        }
        values.push(fit.visibility_unclipped);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - truth).abs() < 4.0 * sd / n.sqrt(), "mean {mean}, truth {truth}, sd {sd}");
    let coverage = covered as f64 / n;
    assert!((0.88..=0.99).contains(&coverage), "2σ coverage {coverage}");
}

#[test]
fn separable_state_gives_visibility_consistent_with_zero() {
    let herald = HeraldModel::with_even_split(0.0, 0.0, 0.91).unwrap();
    let mut large = 0;
    for seed in 0..SEEDS {
        let opts = ScanOptions::new(20_000, seed);
        let records = simulate_fringe_scan(&herald, &published_emission(), &grid(9), &opts).unwrap();
        let fit = fit_fringe(&FringeDataset::from_records(&records).unwrap()).unwrap();
        if fit.visibility > 4.0 * fit.visibility_err {
            large += 1;
        }
    }
    assert!(large <= 2, "{large} of {SEEDS} separable scans show a 4σ fringe");
}

#[test]
fn parity_concurrence_covers_truth() {
    let pops = [0.455, 0.455, 0.045, 0.045];
    let rho = DensityMatrix::x_state(pops, C64::new(0.195, 0.0), C64::default()).unwrap();
    let truth = concurrence_mixed(&rho);
    let phases: Vec<f64> = (0..16).map(|i| i as f64 * PI / 16.0).collect();
    let mut covered = 0;
    for seed in 0..SEEDS {
        let curve = simulate_parity_scan(&rho, &ParityAnalysis::default(), &phases, 100, seed).unwrap();
        let est = concurrence_from_parity(pops, &curve).unwrap();
        if (est.concurrence - truth).abs() <= 2.0 * est.concurrence_err {
            covered += 1;
        }
    }
    let coverage = covered as f64 / SEEDS as f64;
    assert!(coverage >= 0.88, "2σ coverage {coverage}");
}

#[test]
fn delay_scan_period_matches_gradient() {
    let cfg = GradiometerConfig::published();
    let herald = HeraldModel::from_coherence_magnitude(0.135, 0.0, 0.91).unwrap();
    let taus: Vec<f64> = (0..41).map(|i| i as f64 * 0.5e-3).collect();
    let opts = ScanOptions::new(400_000, 11);
    let mut periods = Vec::new();
    for set in [0.0, PI / 2.0] {
        let records =
            simulate_delay_scan(&herald, &published_emission(), &taus, set, |t| gradient_phase(t, &cfg), &opts)
                .unwrap();
        let fit = fit_period(&records).unwrap();
        assert!(fit.detected);
        let period = fit.period.unwrap();
        assert!((period - oscillation_period(&cfg)).abs() < 3.0 * fit.period_err.unwrap() + 1e-5);
        periods.push(period);
    }
    assert!((periods[0] - periods[1]).abs() < 0.3e-3);

    let flat = simulate_delay_scan(&herald, &published_emission(), &taus, 0.0, |_| 0.0, &opts).unwrap();
    assert!(!fit_period(&flat).unwrap().detected);
}
