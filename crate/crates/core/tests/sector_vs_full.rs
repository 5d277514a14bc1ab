use num_complex::Complex64 as C64;
use scramble_core::collective::{build_lmg_hamiltonian, DickeState};
use scramble_core::dynamics::{magnetization_z, square_commutator, Generator, Propagator};
use scramble_core::entanglement::block_entropy;
use scramble_core::full_ed::{
    build_longrange_hamiltonian, embed_dicke, full_magnetization, full_square_commutator, project_to_dicke,
    restrict_to_sector, sector_offset, subsystem_entropy, EvolutionMethod, FullPropagator, FullState,
};
use scramble_core::linalg::max_abs_diff;

const TIMES: [f64; 5] = [0.0, 0.4, 1.1, 2.5, 4.0];

#[test]
fn restricted_hamiltonian_is_the_sector_one_plus_offset() {
    for n in [4, 6, 8] {
        let (j, h) = (1.0, 0.7);
        let full = build_longrange_hamiltonian(n, 0.0, j, h).unwrap();
        let sector = build_lmg_hamiltonian(n, j, h).unwrap();
        let mut shifted = sector.matrix().clone();
        for k in 0..=n {
            shifted[(k, k)] += C64::new(sector_offset(j), 0.0);
        }
        let diff = max_abs_diff(&restrict_to_sector(&full).unwrap(), &shifted);
        assert!(diff < 1e-12, "N = {n}: {diff}");
    }
}

#[test]
fn quench_dynamics_agree() {
    for n in [6, 8] {
        let (j, h) = (1.0, 1.3);
        let psi0 = DickeState::polarized_up(n).unwrap();
        let sector = build_lmg_hamiltonian(n, j, h).unwrap();
        let sp = Propagator::new(&sector).unwrap();
        let fp = FullPropagator::new(build_longrange_hamiltonian(n, 0.0, j, h).unwrap(), EvolutionMethod::Dense).unwrap();
        let full0 = FullState::polarized_up(n).unwrap();
        for &t in &TIMES {
            let s = DickeState::from_amplitudes(n, sp.evolve(psi0.amplitudes(), t)).unwrap();
            let f = FullState::from_amplitudes(n, fp.evolve(full0.amplitudes(), t)).unwrap();
            // the full state stays symmetric and differs by the global phase e^{-i J t / 2}
            let phase = C64::from_polar(1.0, -sector_offset(j) * t);
            let proj = project_to_dicke(&f).unwrap();
            let err = proj.iter().zip(s.amplitudes()).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "N = {n}, t = {t}: {err}");
            assert!((full_magnetization(&f) - magnetization_z(&s)).abs() < 1e-10);
            for l in 1..n {
                let mask = (1u32 << l) - 1;
                let d = (subsystem_entropy(&f, mask).unwrap() - block_entropy(&s, l).unwrap()).abs();
                assert!(d < 1e-9, "N = {n}, t = {t}, L = {l}: {d}");
            }
        }
        let cs = square_commutator(&psi0, Generator::Hamiltonian(&sector), &TIMES).unwrap();
        let cf = full_square_commutator(&full0, &fp, &TIMES).unwrap();
        for (a, b) in cs.values.iter().zip(&cf.values) {
            assert!((a - b).abs() < 1e-10, "N = {n}: {a} vs {b}");
        }
    }
}

#[test]
fn embedding_preserves_norm() {
    let psi = DickeState::polarized_up(7).unwrap();
    let f = embed_dicke(&psi).unwrap();
    assert!((f.norm() - 1.0).abs() < 1e-14);
}
