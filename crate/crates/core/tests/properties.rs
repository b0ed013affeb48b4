//! Randomized and grid checks of the invariants each module promises.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

use easer_sim::detection::{
    click_pattern_probability, monte_carlo_counts, project_and_renormalize, schmidt_coefficients, CoincidencePattern,
    DetectionConfig, Detector,
};
use easer_sim::double_pass::{
    amplification_ratios, amplification_ratios_in_basis, delay_scan, exact_double_pass, fit_fringe, fourfold_pattern,
    fringe_scan, linspace, perturbative_probabilities, twofold_pattern, DoublePassConfig, FringeOrder,
};
use easer_sim::fock::{Ladder, Polarization, SpatialMode};
use easer_sim::pdc::{
    evolve_exact, mean_pair_number, minimal_cutoff, pair_distribution, singlet_term, state_analytic, PdcParams,
};
use easer_sim::polarization::{half_wave_swap, rotate, ModeSelection, PolarizationUnitary};
use easer_sim::{ModeOccupation, Slot, StateVector};

const CUTOFF: u32 = 5;

fn ket_strategy(max: u32) -> impl Strategy<Value = ModeOccupation> {
    (0..=max, 0..=max, 0..=max, 0..=max).prop_map(|(a, b, c, d)| ModeOccupation::new(a, b, c, d))
}

fn amp_strategy() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

fn terms_strategy(max: u32) -> impl Strategy<Value = Vec<(ModeOccupation, Complex64)>> {
    prop::collection::vec((ket_strategy(max), amp_strategy()), 1..8)
}

/// Random state with at most `max` photons per slot, normalized.
fn state_strategy(max: u32, cutoff: u32) -> impl Strategy<Value = StateVector> {
    terms_strategy(max)
        .prop_filter_map("zero state", move |terms| StateVector::from_amplitudes(cutoff, terms).ok()?.normalized().ok())
}

fn unitary_strategy() -> impl Strategy<Value = PolarizationUnitary> {
    (0.0..PI, -PI..PI, -PI..PI, -PI..PI).prop_map(|(t, a, b, d)| PolarizationUnitary::from_angles(t, a, b, d))
}

fn slot_strategy() -> impl Strategy<Value = Slot> {
    prop::sample::select(Slot::ALL.to_vec())
}

fn close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
    a.add_scaled(b, Complex64::new(-1.0, 0.0)).norm() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ladder_adjointness(phi in state_strategy(2, CUTOFF), psi in state_strategy(2, CUTOFF), slot in slot_strategy()) {
        let lhs = phi.inner_product(&psi.apply_ladder(slot, Ladder::Raise).unwrap());
        let rhs = phi.apply_ladder(slot, Ladder::Lower).unwrap().inner_product(&psi);
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn canonical_commutator_on_basis_kets(ket in ket_strategy(2), slot in slot_strategy()) {
        let s = StateVector::basis(CUTOFF, ket).unwrap();
        let lower_raise = s.apply_ladder(slot, Ladder::Raise).unwrap().apply_ladder(slot, Ladder::Lower).unwrap();
        let raise_lower = s.apply_ladder(slot, Ladder::Lower).unwrap().apply_ladder(slot, Ladder::Raise).unwrap();
        let diff = lower_raise.add_scaled(&raise_lower, Complex64::new(-1.0, 0.0));
        // (n+1) − n, up to rounding of √(n+1)·√(n+1)
        prop_assert!((diff.amplitude(&ket) - 1.0).norm() <= 4.0 * f64::EPSILON);
        prop_assert_eq!(diff.len(), 1);
    }

    #[test]
    fn norm_ignores_order_and_zero_entries(terms in terms_strategy(2), zeros in prop::collection::vec(ket_strategy(2), 0..4)) {
        let forward = StateVector::from_amplitudes(CUTOFF, terms.clone()).unwrap();
        let mut padded: Vec<_> = terms.into_iter().rev().collect();
        padded.extend(zeros.into_iter().map(|k| (k, Complex64::new(0.0, 0.0))));
        let backward = StateVector::from_amplitudes(CUTOFF, padded).unwrap();
        prop_assert!((forward.norm_sqr() - backward.norm_sqr()).abs() <= 1e-14 * forward.norm_sqr().max(1.0));
        prop_assert!(backward.iter().all(|(_, a)| *a != Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn rotation_preserves_norm(s in state_strategy(2, 4), u in unitary_strategy(), which in 0..3usize) {
        let modes = [ModeSelection::A, ModeSelection::B, ModeSelection::Both][which];
        let r = rotate(&s, modes, &u).unwrap();
        prop_assert!((r.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_compose(s in state_strategy(2, 4), u1 in unitary_strategy(), u2 in unitary_strategy()) {
        let sequential = rotate(&rotate(&s, ModeSelection::Both, &u1).unwrap(), ModeSelection::Both, &u2).unwrap();
        let combined = rotate(&s, ModeSelection::Both, &u2.compose(&u1)).unwrap();
        prop_assert!(close(&sequential, &combined, 1e-12));
    }

    #[test]
    fn half_wave_is_an_involution(s in state_strategy(3, CUTOFF), which in 0..3usize) {
        let modes = [ModeSelection::A, ModeSelection::B, ModeSelection::Both][which];
        prop_assert_eq!(half_wave_swap(&half_wave_swap(&s, modes), modes), s);
    }

    #[test]
    fn detection_completeness_click_patterns(
        s in state_strategy(2, 4),
        splitters in prop::collection::btree_set(slot_strategy(), 0..3),
        eta in 0.0..=1.0f64,
        u in unitary_strategy(),
    ) {
        let cfg = DetectionConfig { efficiency: eta, ..DetectionConfig::in_basis(u) }.with_splitters(splitters);
        let detectors = cfg.detectors();
        let mut total = 0.0;
        for mask in 0u32..(1 << detectors.len()) {
            let (on, off): (Vec<(usize, &Detector)>, Vec<_>) =
                detectors.iter().enumerate().partition(|(i, _)| mask & (1 << i) != 0);
            let pattern = CoincidencePattern::new(on.into_iter().map(|(_, d)| *d), off.into_iter().map(|(_, d)| *d))
                .unwrap();
            total += click_pattern_probability(&s, &cfg, &pattern).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projection_consistency(
        terms in prop::collection::vec(((0..=2u32, 0..=1u32, 0..=2u32, 0..=2u32), amp_strategy()), 1..6),
    ) {
        // mode a never holds H and V photons in the same ket
        let kets = terms.into_iter().map(|((n, pol, bh, bv), a)| {
            let (ah, av) = if pol == 0 { (n, 0) } else { (0, n) };
            (ModeOccupation::new(ah, av, bh, bv), a)
        });
        let s = match StateVector::from_amplitudes(4, kets).unwrap().normalized() {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let hv = PolarizationUnitary::identity();
        let occupied: f64 = s.iter().filter(|(k, _)| k.mode_total(SpatialMode::A) > 0).map(|(_, a)| a.norm_sqr()).sum();
        let mut summed = 0.0;
        for outcome in [Polarization::H, Polarization::V] {
            if let Ok((p, rest)) = project_and_renormalize(&s, SpatialMode::A, outcome, &hv) {
                prop_assert!((rest.norm_sqr() - 1.0).abs() < 1e-12);
                summed += p;
            }
        }
        prop_assert!((summed - occupied).abs() < 1e-12);
    }

    #[test]
    fn schmidt_sanity(s in state_strategy(2, 4)) {
        let c = schmidt_coefficients(&s);
        let squares: f64 = c.iter().map(|x| x * x).sum();
        prop_assert!((squares - 1.0).abs() < 1e-10);
        let dim = |f: fn(&ModeOccupation) -> (u32, u32)| {
            s.iter().map(|(k, _)| f(k)).collect::<std::collections::BTreeSet<_>>().len()
        };
        let bound = dim(|k| (k.a_h, k.a_v)).min(dim(|k| (k.b_h, k.b_v)));
        prop_assert!(c.len() <= bound);
        prop_assert!(c.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ratios_do_not_depend_on_the_analysis_basis(u in unitary_strategy(), tau in 0.001..0.1f64) {
        let cfg = DoublePassConfig::symmetric(tau);
        let hv = amplification_ratios(&cfg).unwrap();
        let rotated = amplification_ratios_in_basis(&cfg, &u, &u).unwrap();
        for (term, r) in &hv {
            prop_assert!((rotated[term] - r).abs() < 1e-10, "{} {} vs {}", term, rotated[term], r);
        }
    }

    #[test]
    fn fringe_law_holds(tau in 0.001..0.2f64, order in 1..=2u32) {
        let order = FringeOrder::try_from(2 * order).unwrap();
        let scan = fringe_scan(&DoublePassConfig::symmetric(tau), &linspace(0.0, 2.0 * PI, 73), order).unwrap();
        let fit = fit_fringe(&scan, order);
        prop_assert!(fit.relative_residual <= 1e-9);
        prop_assert!((fit.visibility - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn detection_completeness_exact_counts(s in state_strategy(2, 2), splitter in prop::option::of(slot_strategy())) {
        let cfg = DetectionConfig { number_resolving: true, ..Default::default() }.with_splitters(splitter);
        let detectors = cfg.detectors();
        let max = 2u32;
        let mut total = 0.0;
        let combos = (max + 1).pow(detectors.len() as u32);
        for index in 0..combos {
            let mut rest = index;
            let mut pattern = CoincidencePattern::default();
            for d in &detectors {
                pattern = pattern.with_count(*d, rest % (max + 1)).unwrap();
                rest /= max + 1;
            }
            total += click_pattern_probability(&s, &cfg, &pattern).unwrap();
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn monte_carlo_frequency_converges(p in 0.0..=1.0f64, seed in any::<u64>()) {
        let pulses = 40_000u64;
        let probs: BTreeMap<String, f64> = [("x".to_string(), p)].into();
        let n = monte_carlo_counts(&probs, pulses, seed).unwrap()["x"] as f64;
        let sigma = (p * (1.0 - p) * pulses as f64).sqrt();
        prop_assert!((n - p * pulses as f64).abs() <= 4.0 * sigma + 1e-9);
    }
}

#[test]
fn singlets_are_invariant_under_common_rotations() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let us: Vec<PolarizationUnitary> =
        (0..50).map(|_| unitary_strategy().new_tree(&mut runner).unwrap().current()).collect();
    for n in 1..=3 {
        let s = singlet_term(n, n).unwrap();
        for u in &us {
            let r = rotate(&s, ModeSelection::Both, u).unwrap();
            assert!((s.inner_product(&r).norm() - 1.0).abs() < 1e-10, "n = {n}, U = {u}");
        }
    }
}

#[test]
fn analytic_blocks_are_singlets() {
    let params = PdcParams::new(0.4, 0.7, 12).unwrap();
    let s = state_analytic(&params);
    for n in 0..=4 {
        let block = s.pair_block(n).normalized().unwrap();
        assert!(block.fidelity(&singlet_term(n, 12).unwrap()) >= 1.0 - 1e-12);
    }
}

#[test]
fn exact_evolution_matches_closed_form_blockwise() {
    for &tau in &[0.05, 0.1, 0.2, 0.3] {
        for &phi in &[0.0, PI / 3.0] {
            let params = PdcParams::new(tau, phi, 12).unwrap();
            let exact = evolve_exact(&params).unwrap();
            let closed = state_analytic(&params);
            assert!(exact.fidelity(&closed) >= 1.0 - 1e-8, "tau {tau}, phi {phi}");
            for n in 0..=12 {
                let diff = exact.pair_block(n).norm() - closed.pair_block(n).norm();
                // blocks next to the cutoff feel the truncation of the generator
                assert!(diff.abs() < 1e-6, "tau {tau}, phi {phi}, n {n}: {diff}");
            }
        }
    }
}

#[test]
fn pair_distribution_matches_formula() {
    for &tau in &[0.2_f64, 0.5, 0.9] {
        let params = PdcParams::with_tolerance(tau, 0.0, minimal_cutoff(tau, 1e-12), 1e-12).unwrap();
        let dist = pair_distribution(&state_analytic(&params)).unwrap();
        let t2 = tau.tanh().powi(2);
        for &(n, p) in dist.iter().take(11) {
            let expected = f64::from(n + 1) * t2.powi(n as i32) * (1.0 - t2).powi(2);
            assert!((p - expected).abs() < 1e-12, "tau {tau}, n {n}");
        }
        // oracle: direct summation of n·P(n) over the untruncated series
        let summed: f64 = (0..2000).map(|n| f64::from(n) * f64::from(n + 1) * t2.powi(n) * (1.0 - t2).powi(2)).sum();
        let mean = mean_pair_number(&dist);
        assert!((mean - summed).abs() / summed < 1e-9, "tau {tau}: {mean} vs {summed}");
        assert!((summed - 2.0 * tau.sinh().powi(2)).abs() / summed < 1e-12);
    }
}

#[test]
fn delay_envelope_is_monotone_with_exact_limits() {
    let cfg = DoublePassConfig::default();
    let hv_terms = [ModeOccupation::new(1, 0, 0, 1), ModeOccupation::new(1, 1, 1, 1), ModeOccupation::new(2, 0, 0, 2)];
    let delays = linspace(0.0, 2000.0, 401);
    let stimulated = perturbative_probabilities(&DoublePassConfig { overlap: 1.0, ..cfg }).unwrap();
    let independent = perturbative_probabilities(&DoublePassConfig { overlap: 0.0, ..cfg }).unwrap();
    for term in &hv_terms {
        let scan = delay_scan(&cfg, &delays, term).unwrap();
        assert!(scan.rows.windows(2).all(|w| w[1].rate_max <= w[0].rate_max), "{term}");
        assert_eq!(scan.rows[0].rate_max, stimulated[term]);
        let far = scan.rows.last().unwrap();
        assert_eq!(far.rate_max, independent[term]);
        assert_eq!(far.rate_min, independent[term]);
    }
}

// Leading-order probabilities against the exact double pass, measured as
// coincidence clicks behind polarizers (twofold) and polarizing splitters
// (fourfold).
#[test]
fn perturbative_matches_exact_coincidences_for_small_tau() {
    let detection = DetectionConfig::default();
    for &tau in &[0.005, 0.01, 0.02, 0.03, 0.04, 0.05] {
        let cfg = DoublePassConfig::symmetric(tau);
        let pert = perturbative_probabilities(&cfg).unwrap();
        let exact = exact_double_pass(&cfg).unwrap();
        let two = click_pattern_probability(&exact, &detection, &twofold_pattern()).unwrap();
        let four = click_pattern_probability(&exact, &detection, &fourfold_pattern()).unwrap();
        let rel2 = (two / pert[&ModeOccupation::new(1, 0, 0, 1)] - 1.0).abs();
        let rel4 = (four / pert[&ModeOccupation::new(1, 1, 1, 1)] - 1.0).abs();
        assert!(rel2 <= 0.02 && rel4 <= 0.02, "tau {tau}: {rel2} {rel4}");
    }
}

#[test]
fn perturbative_matches_exact_terms_for_small_tau() {
    for &tau in &[0.005, 0.01, 0.02, 0.03] {
        let cfg = DoublePassConfig::symmetric(tau);
        let pert = perturbative_probabilities(&cfg).unwrap();
        let exact = exact_double_pass(&cfg).unwrap();
        for (term, p) in &pert {
            let rel = (exact.amplitude(term).norm_sqr() / p - 1.0).abs();
            assert!(rel <= 0.02, "tau {tau}, {term}: {rel}");
        }
    }
}

// Exact term weights carry the vacuum depletion of the total strength
// T = 2τ: the n-pair weight is (1 − tanh²T)²·tanh^{2n}T relative to T^{2n}, so
// the leading relative deficit is 2T² + (2n/3)·T² = (2 + 2n/3)·T².
#[test]
fn term_level_gap_is_second_order_depletion() {
    let tau = 0.05;
    let big_t = 2.0 * tau;
    let cfg = DoublePassConfig::symmetric(tau);
    let pert = perturbative_probabilities(&cfg).unwrap();
    let exact = exact_double_pass(&cfg).unwrap();
    for (term, p) in &pert {
        let n = f64::from(term.total() / 2);
        let t2 = big_t.tanh().powi(2);
        let predicted = (1.0 - t2).powi(2) * t2.powf(n) / big_t.powf(2.0 * n) - 1.0;
        let gap = exact.amplitude(term).norm_sqr() / p - 1.0;
        assert!((gap - predicted).abs() < 1e-9, "{term}: {gap} vs {predicted}");
        let leading = -(2.0 + 2.0 * n / 3.0) * big_t * big_t;
        assert!((gap - leading).abs() < 1e-3, "{term}: {gap} vs {leading}");
    }
}
