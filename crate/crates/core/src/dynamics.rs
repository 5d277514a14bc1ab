//! Exact evolution on the Dicke sector and the observables built from it.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::collective::{
    build_floquet, build_lmg_hamiltonian, CollectiveOperator, DickeState, OperatorKind, SpinLadder,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::record::{self, TimeSeriesRecord};

/// Quench protocol: prepare at `h0`, evolve with `hf`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchPlan {
    pub h0: f64,
    pub hf: f64,
    pub j: f64,
    pub times: Vec<f64>,
}

impl QuenchPlan {
    pub fn new(h0: f64, hf: f64, j: f64, times: Vec<f64>) -> Result<Self> {
        record::check_grid(&times)?;
        Ok(Self { h0, hf, j, times })
    }

    /// `|↑…↑⟩` for `h0 = 0`, otherwise the ground state of `Ĥ(h0)`.
    pub fn initial_state(&self, n_spins: usize) -> Result<DickeState> {
        if self.h0 == 0.0 {
            DickeState::polarized_up(n_spins)
        } else {
            ground_state(n_spins, self.j, self.h0)
        }
    }
}

/// Lowest eigenvector of `Ĥ(J, h)`, phase fixed so the largest amplitude is real positive.
pub fn ground_state(n_spins: usize, j: f64, h: f64) -> Result<DickeState> {
    let ham = build_lmg_hamiltonian(n_spins, j, h)?;
    let prop = Propagator::new(&ham)?;
    let col = prop.vectors.col_as_slice(0);
    let pivot = col
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ZERO);
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { linalg::ONE };
    DickeState::from_amplitudes(n_spins, col.iter().map(|a| a * phase).collect())
}

/// Spectral decomposition `H = V diag(E) V†` reused for every time point.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_spins: usize,
    values: Vec<f64>,
    vectors: CMat,
}

impl Propagator {
    pub fn new(hamiltonian: &CollectiveOperator) -> Result<Self> {
        if hamiltonian.kind() != OperatorKind::Hermitian {
            return Err(Error::domain("time evolution needs a Hermitian generator"));
        }
        let (values, vectors) = match hamiltonian.as_real_symmetric() {
            Some(real) => {
                let eig = linalg::SymmetricEigen::new(&real)?;
                (eig.values, linalg::to_complex(&eig.vectors))
            }
            None => {
                let evd = hamiltonian
                    .matrix()
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::numerical(format!("hermitian eigensolver did not converge: {e:?}")))?;
                let values = (0..hamiltonian.dim()).map(|i| evd.S()[i].re).collect();
                (values, evd.U().to_owned())
            }
        };
        Ok(Self { n_spins: hamiltonian.n_spins(), values, vectors })
    }

    pub fn energies(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &CMat {
        &self.vectors
    }

    /// Coordinates of `psi` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &[C64]) -> Vec<C64> {
        linalg::adjoint_matvec(&self.vectors, psi)
    }

    pub fn from_eigenbasis(&self, coeffs: &[C64]) -> Vec<C64> {
        linalg::matvec(&self.vectors, coeffs)
    }

    /// `e^{−iEt}` applied to eigenbasis coordinates.
    pub fn phase(&self, coeffs: &[C64], t: f64) -> Vec<C64> {
        coeffs
            .iter()
            .zip(&self.values)
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect()
    }

    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        self.from_eigenbasis(&self.phase(&self.to_eigenbasis(psi), t))
    }

    /// `V† A V`.
    pub fn operator_in_eigenbasis(&self, op: &CMat) -> CMat {
        self.vectors.adjoint() * &(op * &self.vectors)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }
}

/// `ψ(t) = e^{−iHt} ψ₀` at every requested time.
pub fn evolve_quench(psi0: &DickeState, hamiltonian: &CollectiveOperator, times: &[f64]) -> Result<Vec<DickeState>> {
    check_match(psi0, hamiltonian)?;
    let prop = Propagator::new(hamiltonian)?;
    let c0 = prop.to_eigenbasis(psi0.amplitudes());
    Ok(times
        .iter()
        .map(|&t| DickeState::from_raw(psi0.n_spins(), prop.from_eigenbasis(&prop.phase(&c0, t))))
        .collect())
}

/// Stroboscopic states `ψ_n = Uⁿ ψ₀` for `n = 0..=n_periods`.
pub fn evolve_kicked(psi0: &DickeState, floquet: &CollectiveOperator, n_periods: usize) -> Result<Vec<DickeState>> {
    check_match(psi0, floquet)?;
    if floquet.kind() != OperatorKind::Unitary {
        return Err(Error::domain("kicked evolution needs a unitary one-period operator"));
    }
    let mut out = Vec::with_capacity(n_periods + 1);
    let mut v = psi0.amplitudes().to_vec();
    out.push(psi0.clone());
    for _ in 0..n_periods {
        v = floquet.apply(&v);
        out.push(DickeState::from_raw(psi0.n_spins(), v.clone()));
    }
    Ok(out)
}

fn check_match(psi: &DickeState, op: &CollectiveOperator) -> Result<()> {
    if psi.n_spins() != op.n_spins() {
        return Err(Error::Shape(format!(
            "state has N = {} but operator has N = {}",
            psi.n_spins(),
            op.n_spins()
        )));
    }
    Ok(())
}

/// `⟨m̂_z⟩` for a Dicke state.
pub fn magnetization_z(psi: &DickeState) -> f64 {
    let s = psi.spin();
    psi.amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| a.norm_sqr() * (s - i as f64) / s)
        .sum()
}

/// `⟨m̂_z⟩(t)` along a quench.
pub fn magnetization_series(psi0: &DickeState, hamiltonian: &CollectiveOperator, times: &[f64]) -> Result<TimeSeriesRecord> {
    let states = evolve_quench(psi0, hamiltonian, times)?;
    let values = states.iter().map(magnetization_z).collect();
    TimeSeriesRecord::new("mz", times.to_vec(), values)
}

/// Generator of the dynamics for square-commutator and QFI series.
#[derive(Debug, Clone, Copy)]
pub enum Generator<'a> {
    Hamiltonian(&'a CollectiveOperator),
    Floquet(&'a CollectiveOperator),
}

const IMAG_TOL: f64 = 1e-8;
const NEG_TOL: f64 = 1e-12;

fn finish_commutator(value: C64, t: f64) -> Result<f64> {
    if value.im.abs() > IMAG_TOL {
        return Err(Error::numerical(format!("square commutator has imaginary part {} at t = {t}", value.im)));
    }
    if value.re < -NEG_TOL {
        return Err(Error::numerical(format!("square commutator is negative ({}) at t = {t}", value.re)));
    }
    Ok(value.re.max(0.0))
}

/// `c(t) = −⟨ψ₀|[m̂_z(t), m̂_z]²|ψ₀⟩ = ‖[m̂_z(t), m̂_z] ψ₀‖²`.
///
/// For a Hamiltonian `times` are physical times; for a Floquet operator they
/// are read as period counts and must be non-negative integers.
pub fn square_commutator(psi0: &DickeState, generator: Generator<'_>, times: &[f64]) -> Result<TimeSeriesRecord> {
    let n = psi0.n_spins();
    let s = n as f64 / 2.0;
    let mz: Vec<f64> = (0..=n).map(|i| (s - i as f64) / s).collect();
    let psi = psi0.amplitudes();
    let b_psi: Vec<C64> = psi.iter().zip(&mz).map(|(a, m)| a * m).collect();
    let values = match generator {
        Generator::Hamiltonian(h) => {
            check_match(psi0, h)?;
            let prop = Propagator::new(h)?;
            let mz_mat = Mat::from_fn(n + 1, n + 1, |i, j| if i == j { C64::new(mz[i], 0.0) } else { ZERO });
            let a_eig = prop.operator_in_eigenbasis(&mz_mat);
            let psi_e = prop.to_eigenbasis(psi);
            let bpsi_e = prop.to_eigenbasis(&b_psi);
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                // A(t) x in the eigenbasis: e^{iEt} A_e e^{−iEt} x
                let heis = |x: &[C64]| prop.phase(&linalg::matvec(&a_eig, &prop.phase(x, t)), -t);
                let first = prop.from_eigenbasis(&heis(&bpsi_e));
                let second = prop.from_eigenbasis(&heis(&psi_e));
                let diff: Vec<C64> = first
                    .iter()
                    .zip(&second)
                    .zip(&mz)
                    .map(|((x, y), m)| x - y * m)
                    .collect();
                out.push(finish_commutator(C64::new(linalg::norm_sqr(&diff), 0.0), t)?);
            }
            out
        }
        Generator::Floquet(u) => {
            check_match(psi0, u)?;
            let steps = period_counts(times)?;
            let u_adj = u.matrix().adjoint().to_owned();
            let mut heis = Mat::from_fn(n + 1, n + 1, |i, j| if i == j { C64::new(mz[i], 0.0) } else { ZERO });
            let mut current = 0usize;
            let mut out = Vec::with_capacity(times.len());
            for (&t, &k) in times.iter().zip(&steps) {
                while current < k {
                    heis = &u_adj * &(&heis * u.matrix());
                    current += 1;
                }
                let first = linalg::matvec(&heis, &b_psi);
                let second = linalg::matvec(&heis, psi);
                let diff: Vec<C64> = first
                    .iter()
                    .zip(&second)
                    .zip(&mz)
                    .map(|((x, y), m)| x - y * m)
                    .collect();
                out.push(finish_commutator(C64::new(linalg::norm_sqr(&diff), 0.0), t)?);
            }
            out
        }
    };
    TimeSeriesRecord::new("cqt", times.to_vec(), values)
}

/// Reads times as stroboscopic period counts.
pub fn period_counts(times: &[f64]) -> Result<Vec<usize>> {
    record::check_grid(times)?;
    times
        .iter()
        .map(|&t| {
            if (t - t.round()).abs() > 1e-9 {
                Err(Error::domain(format!("kicked dynamics needs integer period counts, got {t}")))
            } else {
                Ok(t.round() as usize)
            }
        })
        .collect()
}

/// Quantum Fisher information of a pure state for collective generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qfi {
    /// `4 Var(Ŝ_a) / N` for `a = x, y, z`.
    pub per_axis: [f64; 3],
    /// Maximum over the three coordinate axes.
    pub f_q: f64,
    /// `4 λ_max(Cov) / N`, the optimum over all collective directions.
    pub f_q_optimal: f64,
}

impl Qfi {
    /// `F_Q = N f_Q`.
    pub fn fisher(&self, n_spins: usize) -> f64 {
        self.f_q * n_spins as f64
    }
}

/// Covariance matrix `½⟨{Ŝa, Ŝb}⟩ − ⟨Ŝa⟩⟨Ŝb⟩`.
pub fn spin_covariance(psi: &DickeState) -> [[f64; 3]; 3] {
    let ladder = SpinLadder::new(psi.n_spins()).expect("state has N ≥ 1");
    let v = psi.amplitudes();
    let sv: [Vec<C64>; 3] = [ladder.apply_sx(v), ladder.apply_sy(v), ladder.apply_sz(v)];
    let mean: [f64; 3] = std::array::from_fn(|a| linalg::dot(v, &sv[a]).re);
    let mut cov = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in a..3 {
            // ⟨Sa Sb⟩ = ⟨Sa ψ|Sb ψ⟩ for Hermitian Sa
            let ab = linalg::dot(&sv[a], &sv[b]).re;
            cov[a][b] = ab - mean[a] * mean[b];
            cov[b][a] = cov[a][b];
        }
    }
    cov
}

pub fn qfi(psi: &DickeState) -> Qfi {
    let n = psi.n_spins() as f64;
    let cov = spin_covariance(psi);
    let per_axis = [4.0 * cov[0][0] / n, 4.0 * cov[1][1] / n, 4.0 * cov[2][2] / n];
    let f_q = per_axis.iter().copied().fold(f64::MIN, f64::max);
    let m = Mat::from_fn(3, 3, |i, j| cov[i][j]);
    let top = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map(|v| v[2])
        .unwrap_or(f64::NAN);
    Qfi { per_axis, f_q, f_q_optimal: 4.0 * top / n }
}

/// `f_Q(t)` along the dynamics; the second record holds the z-axis density.
pub fn qfi_series(psi0: &DickeState, generator: Generator<'_>, times: &[f64]) -> Result<(TimeSeriesRecord, TimeSeriesRecord)> {
    let states = match generator {
        Generator::Hamiltonian(h) => evolve_quench(psi0, h, times)?,
        Generator::Floquet(u) => {
            let steps = period_counts(times)?;
            let all = evolve_kicked(psi0, u, *steps.last().unwrap_or(&0))?;
            steps.iter().map(|&k| all[k].clone()).collect()
        }
    };
    let q: Vec<Qfi> = states.iter().map(qfi).collect();
    Ok((
        TimeSeriesRecord::new("fq", times.to_vec(), q.iter().map(|x| x.f_q).collect())?,
        TimeSeriesRecord::new("fq_z", times.to_vec(), q.iter().map(|x| x.per_axis[2]).collect())?,
    ))
}

/// `⟨ψ₀| A B(t) |ψ₀⟩` with `B(t) = e^{iHt} B e^{−iHt}`.
pub fn two_time_correlator(
    psi0: &DickeState,
    a: &CollectiveOperator,
    b: &CollectiveOperator,
    hamiltonian: &CollectiveOperator,
    t: f64,
) -> Result<C64> {
    check_match(psi0, a)?;
    check_match(psi0, b)?;
    check_match(psi0, hamiltonian)?;
    let prop = Propagator::new(hamiltonian)?;
    let psi_t = prop.evolve(psi0.amplitudes(), t);
    let b_psi_t = b.apply(&psi_t);
    // e^{iHt} B e^{−iHt} ψ₀
    let back = prop.evolve(&b_psi_t, -t);
    let a_dag_psi = a.apply_adjoint(psi0.amplitudes());
    Ok(linalg::dot(&a_dag_psi, &back))
}

/// Full quench bundle used by the runner: states at each time for reuse.
pub fn quench_states(n_spins: usize, plan: &QuenchPlan) -> Result<(DickeState, CollectiveOperator, Vec<DickeState>)> {
    let psi0 = plan.initial_state(n_spins)?;
    let ham = build_lmg_hamiltonian(n_spins, plan.j, plan.hf)?;
    let states = evolve_quench(&psi0, &ham, &plan.times)?;
    Ok((psi0, ham, states))
}

/// Kicked-top bundle: Floquet operator and stroboscopic states.
pub fn kicked_states(
    n_spins: usize,
    j: f64,
    h: f64,
    k: f64,
    tau: f64,
    n_periods: usize,
) -> Result<(CollectiveOperator, Vec<DickeState>)> {
    let u = build_floquet(n_spins, j, h, k, tau)?;
    let psi0 = DickeState::polarized_up(n_spins)?;
    let states = evolve_kicked(&psi0, &u, n_periods)?;
    Ok((u, states))
}

/// Parameters of the revival detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalDetector {
    /// Revivals are only searched for after this time.
    pub t_min: f64,
    /// Width of the sliding window defining the oscillation envelope.
    pub window: f64,
    /// Fraction of the initial envelope the signal has to regain.
    pub fraction: f64,
}

impl Default for RevivalDetector {
    fn default() -> Self {
        Self { t_min: 10.0, window: 2.0, fraction: 0.9 }
    }
}

impl RevivalDetector {
    /// Sliding-window envelope of `|x(t) − x̄|`, where `x̄` is the series mean.
    pub fn envelope(&self, series: &TimeSeriesRecord) -> Vec<f64> {
        let mean = series.values.iter().sum::<f64>() / series.len().max(1) as f64;
        let dev: Vec<f64> = series.values.iter().map(|v| (v - mean).abs()).collect();
        let mut out = Vec::with_capacity(dev.len());
        let mut start = 0;
        for (i, &t) in series.times.iter().enumerate() {
            while series.times[start] < t - self.window {
                start += 1;
            }
            out.push(dev[start..=i].iter().copied().fold(0.0, f64::max));
        }
        out
    }

    /// First time after `t_min` at which the envelope climbs back to
    /// `fraction` of its initial value after having dropped below it.
    pub fn detect(&self, series: &TimeSeriesRecord) -> Option<f64> {
        let env = self.envelope(series);
        let i0 = series.times.iter().position(|&t| t >= self.window)?;
        let target = self.fraction * env[i0];
        let mut dropped = false;
        for (i, &t) in series.times.iter().enumerate().skip(i0) {
            if env[i] < target {
                dropped = true;
            } else if dropped && t > self.t_min {
                return Some(t);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::{build_mz, build_spin_operators};

    fn grid(t_max: f64, dt: f64) -> Vec<f64> {
        record::uniform_grid(t_max, dt).unwrap()
    }

    #[test]
    fn eigenstate_is_stationary() {
        let ham = build_lmg_hamiltonian(10, 1.0, 0.7).unwrap();
        let psi = ground_state(10, 1.0, 0.7).unwrap();
        let states = evolve_quench(&psi, &ham, &grid(5.0, 0.5)).unwrap();
        for s in states {
            assert!((psi.overlap(&s).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_and_energy_conserved() {
        let n = 60;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let e0 = psi.expectation(&ham).re;
        let hnorm = 2.0 * n as f64;
        for s in evolve_quench(&psi, &ham, &grid(20.0, 0.37)).unwrap() {
            assert!((s.norm() - 1.0).abs() < 1e-12);
            assert!((s.expectation(&ham).re - e0).abs() < 1e-10 * hnorm);
        }
    }

    #[test]
    fn kicked_zero_periods_is_identity_and_k0_matches_quench() {
        let n = 16;
        let psi = DickeState::polarized_up(n).unwrap();
        let u = build_floquet(n, 1.0, 2.0, 0.0, 0.5).unwrap();
        let kicked = evolve_kicked(&psi, &u, 6).unwrap();
        assert_eq!(kicked[0], psi);
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let times: Vec<f64> = (0..=6).map(|k| 0.5 * k as f64).collect();
        let quench = evolve_quench(&psi, &ham, &times).unwrap();
        for (a, b) in kicked.iter().zip(&quench) {
            assert!((a.overlap(b).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn commutator_starts_at_zero_and_stays_bounded() {
        let n = 40;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let c = square_commutator(&psi, Generator::Hamiltonian(&ham), &grid(30.0, 0.1)).unwrap();
        assert!(c.values[0].abs() < 1e-14);
        assert!(c.values.iter().all(|&v| (0.0..=4.0).contains(&v)));
    }

    #[test]
    fn commutator_matches_dense_heisenberg() {
        let n = 12;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let mz = build_mz(n).unwrap();
        let t = 0.8;
        let c = square_commutator(&psi, Generator::Hamiltonian(&ham), &[0.0, t]).unwrap();
        let prop = Propagator::new(&ham).unwrap();
        let u = Mat::from_fn(n + 1, n + 1, |i, j| prop.evolve(&unit(n + 1, j), t)[i]);
        let mzt = u.adjoint() * &(mz.matrix() * &u);
        let comm = &(&mzt * mz.matrix()) - &(mz.matrix() * &mzt);
        let v = linalg::matvec(&comm, psi.amplitudes());
        assert!((c.values[1] - linalg::norm_sqr(&v)).abs() < 1e-12);
    }

    fn unit(d: usize, j: usize) -> Vec<C64> {
        let mut v = vec![ZERO; d];
        v[j] = linalg::ONE;
        v
    }

    #[test]
    fn kicked_commutator_with_zero_kick_matches_hamiltonian() {
        let n = 20;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let u = build_floquet(n, 1.0, 2.0, 0.0, 0.25).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let periods: Vec<f64> = (0..=12).map(f64::from).collect();
        let ck = square_commutator(&psi, Generator::Floquet(&u), &periods).unwrap();
        let times: Vec<f64> = periods.iter().map(|k| 0.25 * k).collect();
        let ch = square_commutator(&psi, Generator::Hamiltonian(&ham), &times).unwrap();
        for (a, b) in ck.values.iter().zip(&ch.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn small_time_commutator_law() {
        // c ≈ 16 h² t² / N³ for t → 0
        let n = 200;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let t = 0.01;
        let c = square_commutator(&psi, Generator::Hamiltonian(&ham), &[0.0, t]).unwrap();
        let expected = 16.0 * 4.0 * t * t / (n as f64).powi(3);
        assert!((c.values[1] / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coherent_state_qfi_is_one() {
        let q = qfi(&DickeState::polarized_up(50).unwrap());
        assert!((q.f_q - 1.0).abs() < 1e-12);
        assert!((q.per_axis[0] - 1.0).abs() < 1e-12);
        assert!(q.per_axis[2].abs() < 1e-12);
        assert!((q.f_q_optimal - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_like_state_has_maximal_qfi() {
        let n = 10;
        let mut amps = vec![ZERO; n + 1];
        amps[0] = linalg::ONE;
        amps[n] = linalg::ONE;
        let psi = DickeState::from_amplitudes(n, amps).unwrap();
        assert!((qfi(&psi).f_q - n as f64).abs() < 1e-10);
    }

    #[test]
    fn correlator_identities() {
        let n = 14;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi = DickeState::polarized_up(n).unwrap();
        let ops = build_spin_operators(n).unwrap();
        let mz = build_mz(n).unwrap();
        let mx = ops.sx.scaled(2.0 / n as f64);
        let c0 = two_time_correlator(&psi, &mz, &mz, &ham, 0.0).unwrap();
        assert!((c0.re - 1.0).abs() < 1e-12);
        // ⟨A B(t)⟩* = ⟨B(t) A⟩
        let t = 1.3;
        let ab = two_time_correlator(&psi, &mx, &mz, &ham, t).unwrap();
        let prop = Propagator::new(&ham).unwrap();
        let a_psi = mx.apply(psi.amplitudes());
        let bt_a_psi = prop.evolve(&mz.apply(&prop.evolve(&a_psi, t)), -t);
        let ba = linalg::dot(psi.amplitudes(), &bt_a_psi);
        assert!((ab.conj() - ba).norm() < 1e-12);
    }

    #[test]
    fn floquet_times_must_be_integers() {
        let u = build_floquet(4, 1.0, 1.0, 1.0, 1.0).unwrap();
        let psi = DickeState::polarized_up(4).unwrap();
        assert!(square_commutator(&psi, Generator::Floquet(&u), &[0.0, 0.5]).is_err());
    }

    #[test]
    fn revival_detector_on_synthetic_beating() {
        // cos(ωt) under a Gaussian envelope that revives at t = 50
        let times = grid(80.0, 0.05);
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                let env = (-(t / 8.0).powi(2)).exp() + (-((t - 50.0) / 8.0).powi(2)).exp();
                env * (4.0 * t).cos()
            })
            .collect();
        let rec = TimeSeriesRecord::new("x", times, values).unwrap();
        let det = RevivalDetector { t_min: 10.0, window: 2.0, fraction: 0.5 };
        let t = det.detect(&rec).unwrap();
        assert!(t > 38.0 && t < 50.0, "{t}");
    }
}
