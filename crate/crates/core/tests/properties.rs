use std::f64::consts::{PI, TAU};

use atompair::calibration::{delay_to_phase, CalibrationTable};
use atompair::emission::{
    fringe_visibility, mean_witness_probability, witness_probability, EmissionConfig, HeraldModel,
};
use atompair::estimation::{fit_frequencies, FrequencyPoint};
use atompair::gradiometry::{
    delay_scan_expectation, gradient_from_period, gradient_phase, oscillation_period,
    GradiometerConfig,
};
use atompair::montecarlo::draw_binomial;
use atompair::quantum::{
    concurrence_mixed, concurrence_pure, fidelity_with_target, parity_after_pulses,
    visibility_pure, DensityMatrix, Operator, ParityAnalysis, PureTwoQubitState, RfPulse,
};
use atompair::rng::Domain;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn amplitudes() -> impl Strategy<Value = [C64; 4]> {
    prop::array::uniform8(-1.0f64..1.0).prop_filter_map("zero vector", |v| {
        let amps = [0, 1, 2, 3].map(|i| C64::new(v[2 * i], v[2 * i + 1]));
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        (norm > 1e-3).then_some(amps)
    })
}

fn pure_state() -> impl Strategy<Value = PureTwoQubitState> {
    amplitudes().prop_map(|[a, b, c, d]| PureTwoQubitState::normalized(a, b, c, d).unwrap())
}

/// ρ = G G† / tr, with G a random complex 4×4 matrix.
fn density() -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_filter_map("singular", |v| {
        let g = Operator::from_fn(|i, j| C64::new(v[8 * i + 2 * j], v[8 * i + 2 * j + 1]));
        let m = g * g.adjoint();
        let tr = m.trace().re;
        if tr < 1e-6 {
            return None;
        }
        let mut rho = m / C64::new(tr, 0.0);
        // Enforce exact Hermiticity after the division.
        rho = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
        DensityMatrix::new(rho).ok()
    })
}

proptest! {
    #[test]
    fn visibility_equals_concurrence_on_single_excitation_states(
        a in (-1.0f64..1.0, -1.0f64..1.0),
        b in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let (a, b) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        prop_assume!(a.norm_sqr() + b.norm_sqr() > 1e-3);
        let s = PureTwoQubitState::normalized(a, b, C64::default(), C64::default()).unwrap();
        prop_assert!((visibility_pure(&s).unwrap() - concurrence_pure(&s)).abs() < 1e-12);
    }

    #[test]
    fn mixed_concurrence_agrees_with_pure_formula(s in pure_state()) {
        let c = concurrence_mixed(&s.density());
        prop_assert!((c - concurrence_pure(&s)).abs() < 1e-10, "{} vs {}", c, concurrence_pure(&s));
    }

    #[test]
    fn state_measures_are_bounded(rho in density(), phase in -PI..PI) {
        let c = concurrence_mixed(&rho);
        prop_assert!((0.0..=1.0).contains(&c));
        let f = fidelity_with_target(&rho, phase);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn parity_is_bounded_and_periodic(
        rho in density(),
        area in 0.0f64..TAU,
        rf in -PI..PI,
        prep in 0.0f64..TAU,
    ) {
        let p = parity_after_pulses(&rho, &[RfPulse::new(area, rf)]);
        prop_assert!((-1.0..=1.0).contains(&p));
        let q = parity_after_pulses(&rho, &[RfPulse::new(area, rf + TAU)]);
        prop_assert!((p - q).abs() < 1e-10);
        let analysis = ParityAnalysis { preparation: RfPulse::new(prep, 0.3), analysis_area: area };
        let e = analysis.expectation(&rho, rf);
        prop_assert!((-1.0..=1.0).contains(&e));
        prop_assert!((e - analysis.expectation(&rho, rf + TAU)).abs() < 1e-10);
    }

    #[test]
    fn witness_fringe_is_periodic_with_the_right_mean(
        rho in density(),
        kappa in 1e-4f64..0.2,
        dphi in -PI..PI,
    ) {
        let cfg = EmissionConfig::new(kappa, 0.8, 0.01).unwrap();
        let p = witness_probability(&rho, dphi, &cfg);
        prop_assert!(p >= 0.0);
        prop_assert!((p - witness_probability(&rho, dphi + TAU, &cfg)).abs() < 1e-15);
        let n = 16;
        let mean: f64 = (0..n)
            .map(|i| witness_probability(&rho, i as f64 * TAU / n as f64, &cfg))
            .sum::<f64>() / n as f64;
        prop_assert!((mean - mean_witness_probability(&rho, &cfg)).abs() < 1e-12);
    }

    #[test]
    fn fringe_visibility_is_concurrence_without_double_occupation(
        p0 in 0.01f64..1.0,
        coh in 0.0f64..1.0,
        phase in -PI..PI,
    ) {
        let p1 = 1.0 - p0;
        let single = C64::from_polar(coh * (p0 * p1).sqrt(), phase);
        let rho = DensityMatrix::x_state([p0, p1, 0.0, 0.0], single, C64::default()).unwrap();
        prop_assert!((fringe_visibility(&rho).unwrap() - concurrence_mixed(&rho)).abs() < 1e-10);
    }

    #[test]
    fn herald_model_yields_valid_states(
        gamma in 0.0f64..1.0,
        phase in -PI..PI,
        single in 0.0f64..1.0,
    ) {
        let model = HeraldModel::with_even_split(gamma, phase, single).unwrap();
        let rho = model.state().unwrap();
        let tr: f64 = rho.populations().iter().sum();
        prop_assert!((tr - 1.0).abs() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|e| *e >= 0.0));
    }

    #[test]
    fn noiseless_fringe_fit_recovers_parameters(
        mean in 1e-4f64..0.3,
        vis in 0.05f64..1.0,
        phi0 in -3.0f64..3.0,
        n in 3usize..20,
    ) {
        let points: Vec<FrequencyPoint> = (0..n)
            .map(|i| {
                let x = i as f64 * TAU / n as f64;
                FrequencyPoint { delta_phi: x, frequency: mean * (1.0 + vis * (x - phi0).cos()), weight: 1.0 }
            })
            .collect();
        let fit = fit_frequencies(&points).unwrap();
        prop_assert!((fit.mean - mean).abs() < 1e-10 * mean.max(1.0));
        prop_assert!((fit.visibility - vis).abs() < 1e-9);
        let dphi = (fit.phase_offset - phi0 + PI).rem_euclid(TAU) - PI;
        prop_assert!(dphi.abs() < 1e-8);
    }

    #[test]
    fn gradient_phase_is_linear(
        tau in 0.0f64..0.05,
        grad in -2e-3f64..2e-3,
        z in 1e-6f64..2e-5,
        scale in 0.1f64..10.0,
    ) {
        let cfg = GradiometerConfig::new(0.453e-3, grad, z, 2.0025).unwrap();
        let base = gradient_phase(tau, &cfg);
        let tol = 1e-12 * base.abs().max(1e-12) * scale;
        prop_assert!((gradient_phase(scale * tau, &cfg) - scale * base).abs() <= tol);
        let g2 = cfg.with_gradient(scale * grad);
        prop_assert!((gradient_phase(tau, &g2) - scale * base).abs() <= tol);
        let z2 = GradiometerConfig { separation: scale * z, ..cfg };
        prop_assert!((gradient_phase(tau, &z2) - scale * base).abs() <= tol);
    }

    #[test]
    fn period_round_trip_and_trace_bounds(
        grad in 1e-6f64..5e-3,
        vis in 0.0f64..1.0,
        kappa in 1e-4f64..0.5,
        set in -PI..PI,
    ) {
        let cfg = GradiometerConfig::published().with_gradient(grad);
        let back = gradient_from_period(oscillation_period(&cfg), &cfg).unwrap();
        prop_assert!((back - grad).abs() <= 1e-12 * grad);
        let taus: Vec<f64> = (0..40).map(|i| i as f64 * 0.5e-3).collect();
        for p in delay_scan_expectation(&taus, set, vis, kappa, &cfg).unwrap() {
            prop_assert!(p >= kappa * (1.0 - vis) - 1e-15 && p <= kappa * (1.0 + vis) + 1e-15);
        }
    }

    #[test]
    fn table_lookup_is_monotone_through_anchors(
        steps in prop::collection::vec((1e-6f64..50e-6, 0.0f64..2.0), 1..8),
        probes in prop::collection::vec(0.0f64..1.0, 20),
    ) {
        let mut anchors = vec![(10e-6, 0.0)];
        for (dt, dphi) in steps {
            let (t, p) = *anchors.last().unwrap();
            anchors.push((t + dt, p + dphi));
        }
        let table = CalibrationTable::new(anchors.clone()).unwrap();
        for (t, p) in &anchors {
            prop_assert_eq!(delay_to_phase(*t, &table).unwrap(), *p);
        }
        let (lo, hi) = table.range();
        let mut taus: Vec<f64> = probes.iter().map(|u| lo + u * (hi - lo)).collect();
        taus.sort_by(f64::total_cmp);
        let phases: Vec<f64> = taus.iter().map(|t| delay_to_phase(*t, &table).unwrap()).collect();
        prop_assert!(phases.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn binomial_draws_do_not_depend_on_sharding(
        seed in any::<u64>(),
        trials in 1u64..400_000,
        p in 0.0f64..1.0,
        shards in 2usize..12,
    ) {
        let one = draw_binomial(seed, Domain::FringeScan, 3, trials, p, 1);
        prop_assert!(one <= trials);
        prop_assert_eq!(one, draw_binomial(seed, Domain::FringeScan, 3, trials, p, shards));
    }
}
