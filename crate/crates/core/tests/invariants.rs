use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use scramble_core::classical::{flow_on_grid, BlochVector, FlowParams};
use scramble_core::collective::{build_lmg_hamiltonian, DickeState};
use scramble_core::dynamics::{qfi, Propagator};
use scramble_core::entanglement::block_entropy;
use scramble_core::spectral::{fold_quasienergy, spacing_ratio};

fn random_state(n: usize, re: &[f64], im: &[f64]) -> DickeState {
    let amps: Vec<C64> = re.iter().zip(im).take(n + 1).map(|(&a, &b)| C64::new(a, b)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    DickeState::from_amplitudes(n, amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn amplitudes() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (prop::collection::vec(0.1f64..1.0, 41), prop::collection::vec(-1.0f64..1.0, 41))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_is_unitary(n in 2usize..40, h in 0.0f64..3.0, t in 0.0f64..50.0) {
        let psi = DickeState::polarized_up(n).unwrap();
        let p = Propagator::new(&build_lmg_hamiltonian(n, 1.0, h).unwrap()).unwrap();
        let out = DickeState::from_amplitudes(n, p.evolve(psi.amplitudes(), t)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(n in 2usize..40, (re, im) in amplitudes(), l in 1usize..40) {
        let psi = random_state(n, &re, &im);
        let l = 1 + l % (n - 1).max(1);
        prop_assume!(l < n);
        let s = block_entropy(&psi, l).unwrap();
        let s_rest = block_entropy(&psi, n - l).unwrap();
        prop_assert!((s - s_rest).abs() < 1e-8, "{} vs {}", s, s_rest);
        prop_assert!(s > -1e-12 && s <= ((l.min(n - l) + 1) as f64).ln() + 1e-10);
    }

    #[test]
    fn qfi_bounds(n in 1usize..40, (re, im) in amplitudes()) {
        let q = qfi(&random_state(n, &re, &im));
        let nf = n as f64;
        prop_assert!(q.f_q >= -1e-9 && q.f_q <= nf * nf + 1e-9);
    }

    #[test]
    fn spacing_ratio_is_affine_invariant(
        levels in prop::collection::vec(-10.0f64..10.0, 5..60),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let mut sorted = levels.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        prop_assume!(sorted.len() >= 3);
        let mapped: Vec<f64> = sorted.iter().map(|x| scale * x + shift).collect();
        let r = spacing_ratio(&sorted, None).unwrap();
        let r2 = spacing_ratio(&mapped, None).unwrap();
        prop_assert!((r - r2).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn folding_stays_in_the_zone(mu in -1e3f64..1e3, tau in 0.1f64..5.0) {
        let f = fold_quasienergy(mu, tau);
        prop_assert!(f > -PI / tau - 1e-12 && f <= PI / tau + 1e-12);
        let turns = (mu - f) * tau / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-8);
    }

    #[test]
    fn classical_flow_conserves_energy_and_length(q in -1.0f64..1.0, p in -3.0f64..3.0, h in 0.0f64..3.0) {
        let params = FlowParams::new(1.0, h);
        let m0 = BlochVector::from_canonical(q, p).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let traj = flow_on_grid(m0, params, &times, 2.5e-3).unwrap();
        let e0 = params.energy(&m0);
        // RK4 drift at h = 3, dt = 1e-2 is about 1e-6; the smaller step brings it near 4e-9
        for m in &traj.points {
            prop_assert!((m.norm() - 1.0).abs() < 1e-8);
            prop_assert!((params.energy(m) - e0).abs() < 1e-8, "{}", params.energy(m) - e0);
        }
    }
}
