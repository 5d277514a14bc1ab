//! Operators on the maximal-spin (Dicke) sector of `N` spin-1/2.
//!
//! Basis index `i = 0..=N` labels `|S, M⟩` with `S = N/2` and `M = S − i`,
//! so `i` is the number of flipped spins. The initial state of every protocol,
//! `|↑↑…↑⟩`, is `i = 0`.
//!
//! Hamiltonian convention: `Ĥ = −(2J/N) Ŝz² − 2h Ŝx`, i.e. the `α = 0` Ising
//! chain with couplings `J/N` and the constant `J/2` from the `i = j` terms
//! dropped. The field enters with a minus sign so that the classical limit is
//! `H₀(Q, P) = −J/2 Q² − h √(1−Q²) cos 2P` with `m_x = √(1−Q²) cos 2P`. The
//! opposite sign on the field is unitarily equivalent (π rotation about z) and
//! leaves all z-axis observables unchanged.

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, SymmetricEigen, ONE, ZERO};

/// Pure state on the Dicke sector.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    n_spins: usize,
    amplitudes: Vec<C64>,
}

impl DickeState {
    /// `|↑↑…↑⟩`, amplitude one on `M = S`.
    pub fn polarized_up(n_spins: usize) -> Result<Self> {
        check_size(n_spins)?;
        let mut amplitudes = vec![ZERO; n_spins + 1];
        amplitudes[0] = ONE;
        Ok(Self { n_spins, amplitudes })
    }

    /// Wraps amplitudes ordered `M = S, S−1, …, −S`. The vector is normalized.
    pub fn from_amplitudes(n_spins: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_size(n_spins)?;
        if amplitudes.len() != n_spins + 1 {
            return Err(Error::Shape(format!(
                "Dicke state of N = {n_spins} needs {} amplitudes, got {}",
                n_spins + 1,
                amplitudes.len()
            )));
        }
        let nrm = linalg::norm(&amplitudes);
        if !(nrm.is_finite() && nrm > 0.0) {
            return Err(Error::numerical("cannot normalize a zero or non-finite state"));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / nrm).collect();
        Ok(Self { n_spins, amplitudes })
    }

    pub(crate) fn from_raw(n_spins: usize, amplitudes: Vec<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), n_spins + 1);
        Self { n_spins, amplitudes }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// Total spin `S = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn overlap(&self, other: &DickeState) -> C64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }

    pub fn expectation(&self, op: &CollectiveOperator) -> C64 {
        linalg::dot(&self.amplitudes, &linalg::matvec(&op.matrix, &self.amplitudes))
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSystemSize { n, reason: "at least one spin is required" });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Hermitian,
    Unitary,
    General,
}

/// Dense operator on the Dicke sector.
#[derive(Debug, Clone)]
pub struct CollectiveOperator {
    n_spins: usize,
    matrix: CMat,
    kind: OperatorKind,
}

impl CollectiveOperator {
    pub fn new(n_spins: usize, matrix: CMat, kind: OperatorKind) -> Result<Self> {
        check_size(n_spins)?;
        if matrix.nrows() != n_spins + 1 || matrix.ncols() != n_spins + 1 {
            return Err(Error::Shape(format!(
                "operator on N = {n_spins} must be {0}×{0}",
                n_spins + 1
            )));
        }
        Ok(Self { n_spins, matrix, kind })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.n_spins + 1
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        linalg::matvec(&self.matrix, v)
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        linalg::adjoint_matvec(&self.matrix, v)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    /// `‖[A, B]‖_max`.
    pub fn commutator_norm(&self, other: &CollectiveOperator) -> f64 {
        let ab = &self.matrix * &other.matrix;
        let ba = &other.matrix * &self.matrix;
        linalg::max_abs_diff(&ab, &ba)
    }

    /// Scales the operator, e.g. `m̂ = Ŝ / S`.
    pub fn scaled(&self, factor: f64) -> CollectiveOperator {
        let kind = if self.kind == OperatorKind::Hermitian { OperatorKind::Hermitian } else { OperatorKind::General };
        CollectiveOperator {
            n_spins: self.n_spins,
            matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * factor),
            kind,
        }
    }

    /// Real symmetric copy, available when the operator has no imaginary entries.
    pub fn as_real_symmetric(&self) -> Option<Mat<f64>> {
        if self.kind != OperatorKind::Hermitian {
            return None;
        }
        linalg::real_part_if_real(&self.matrix, 1e-14)
    }
}

/// Ladder coefficients `⟨i−1|Ŝ₊|i⟩ = √(S(S+1) − M(M+1))` with `M = S − i`.
#[derive(Debug, Clone)]
pub struct SpinLadder {
    n_spins: usize,
    raise: Vec<f64>,
}

impl SpinLadder {
    pub fn new(n_spins: usize) -> Result<Self> {
        check_size(n_spins)?;
        let s = n_spins as f64 / 2.0;
        let raise = (0..=n_spins)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    let m = s - i as f64;
                    (s * (s + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
                }
            })
            .collect();
        Ok(Self { n_spins, raise })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn m_value(&self, i: usize) -> f64 {
        self.n_spins as f64 / 2.0 - i as f64
    }

    pub fn apply_sz(&self, v: &[C64]) -> Vec<C64> {
        v.iter().enumerate().map(|(i, &a)| a * self.m_value(i)).collect()
    }

    pub fn apply_splus(&self, v: &[C64]) -> Vec<C64> {
        let d = v.len();
        (0..d).map(|i| if i + 1 < d { v[i + 1] * self.raise[i + 1] } else { ZERO }).collect()
    }

    pub fn apply_sminus(&self, v: &[C64]) -> Vec<C64> {
        (0..v.len()).map(|i| if i > 0 { v[i - 1] * self.raise[i] } else { ZERO }).collect()
    }

    pub fn apply_sx(&self, v: &[C64]) -> Vec<C64> {
        let p = self.apply_splus(v);
        let m = self.apply_sminus(v);
        p.iter().zip(&m).map(|(a, b)| (a + b) * 0.5).collect()
    }

    pub fn apply_sy(&self, v: &[C64]) -> Vec<C64> {
        let p = self.apply_splus(v);
        let m = self.apply_sminus(v);
        // (S₊ − S₋)/(2i) = −i/2 (S₊ − S₋)
        p.iter().zip(&m).map(|(a, b)| (a - b) * C64::new(0.0, -0.5)).collect()
    }

    /// Applies `Ŝ_axis` for axis 0, 1, 2 = x, y, z.
    pub fn apply_axis(&self, axis: usize, v: &[C64]) -> Vec<C64> {
        match axis {
            0 => self.apply_sx(v),
            1 => self.apply_sy(v),
            2 => self.apply_sz(v),
            _ => panic!("spin axis index {axis} out of range"),
        }
    }
}

/// `(Ŝx, Ŝy, Ŝz)` on the Dicke sector.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: CollectiveOperator,
    pub sy: CollectiveOperator,
    pub sz: CollectiveOperator,
}

impl SpinOperators {
    pub fn axis(&self, axis: usize) -> &CollectiveOperator {
        match axis {
            0 => &self.sx,
            1 => &self.sy,
            2 => &self.sz,
            _ => panic!("spin axis index {axis} out of range"),
        }
    }
}

pub fn build_spin_operators(n_spins: usize) -> Result<SpinOperators> {
    let ladder = SpinLadder::new(n_spins)?;
    let d = n_spins + 1;
    let mut sx = CMat::zeros(d, d);
    let mut sy = CMat::zeros(d, d);
    let mut sz = CMat::zeros(d, d);
    for i in 0..d {
        sz[(i, i)] = C64::new(ladder.m_value(i), 0.0);
        if i > 0 {
            // ⟨i−1|S₊|i⟩ = c, ⟨i|S₋|i−1⟩ = c
            let c = ladder.raise[i];
            sx[(i - 1, i)] = C64::new(0.5 * c, 0.0);
            sx[(i, i - 1)] = C64::new(0.5 * c, 0.0);
            sy[(i - 1, i)] = C64::new(0.0, -0.5 * c);
            sy[(i, i - 1)] = C64::new(0.0, 0.5 * c);
        }
    }
    Ok(SpinOperators {
        sx: CollectiveOperator::new(n_spins, sx, OperatorKind::Hermitian)?,
        sy: CollectiveOperator::new(n_spins, sy, OperatorKind::Hermitian)?,
        sz: CollectiveOperator::new(n_spins, sz, OperatorKind::Hermitian)?,
    })
}

/// Normalized magnetization `m̂_z = Ŝz / S`.
pub fn build_mz(n_spins: usize) -> Result<CollectiveOperator> {
    Ok(build_spin_operators(n_spins)?.sz.scaled(2.0 / n_spins as f64))
}

/// `Ĥ = −(2J/N) Ŝz² − 2h Ŝx`.
pub fn build_lmg_hamiltonian(n_spins: usize, j: f64, h: f64) -> Result<CollectiveOperator> {
    let ladder = SpinLadder::new(n_spins)?;
    let d = n_spins + 1;
    let n = n_spins as f64;
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        let mz = ladder.m_value(i);
        m[(i, i)] = C64::new(-2.0 * j / n * mz * mz, 0.0);
        if i > 0 {
            let off = C64::new(-h * ladder.raise[i], 0.0);
            m[(i - 1, i)] = off;
            m[(i, i - 1)] = off;
        }
    }
    CollectiveOperator::new(n_spins, m, OperatorKind::Hermitian)
}

/// Diagonal of the kick `exp(−i (2K/N) Ŝz²)`.
pub fn kick_phases(n_spins: usize, k: f64) -> Vec<C64> {
    let s = n_spins as f64 / 2.0;
    (0..=n_spins)
        .map(|i| {
            let m = s - i as f64;
            C64::from_polar(1.0, -2.0 * k / n_spins as f64 * m * m)
        })
        .collect()
}

/// One-period Floquet operator `Û = exp(−i(2K/N)Ŝz²) exp(−iĤτ)`.
pub fn build_floquet(n_spins: usize, j: f64, h: f64, k: f64, tau: f64) -> Result<CollectiveOperator> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("kick period must be positive, got τ = {tau}")));
    }
    let ham = build_lmg_hamiltonian(n_spins, j, h)?;
    let real = ham.as_real_symmetric().expect("LMG Hamiltonian is real symmetric");
    let eig = SymmetricEigen::new(&real)?;
    let phases: Vec<C64> = eig.values.iter().map(|&e| C64::from_polar(1.0, -e * tau)).collect();
    let free = linalg::reconstruct(&eig.vectors, &phases);
    let kick = kick_phases(n_spins, k);
    let d = n_spins + 1;
    let u = Mat::from_fn(d, d, |r, c| kick[r] * free[(r, c)]);
    CollectiveOperator::new(n_spins, u, OperatorKind::Unitary)
}

/// Parity `exp(iπ Ŝx)`, built from the exact `Ŝx` eigenbasis.
pub fn build_parity(n_spins: usize) -> Result<CollectiveOperator> {
    let ops = build_spin_operators(n_spins)?;
    let real = ops.sx.as_real_symmetric().expect("Sx is real symmetric");
    let eig = SymmetricEigen::new(&real)?;
    // eigenvalues of Sx are exactly M = −S..S; snap to remove rounding
    let phases: Vec<C64> = eig
        .values
        .iter()
        .map(|&m| {
            let m = (2.0 * m).round() / 2.0;
            C64::from_polar(1.0, std::f64::consts::PI * m)
        })
        .collect();
    let p = linalg::reconstruct(&eig.vectors, &phases);
    CollectiveOperator::new(n_spins, p, OperatorKind::Unitary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn commutator(a: &CMat, b: &CMat) -> CMat {
        let ab = a * b;
        let ba = b * a;
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| ab[(i, j)] - ba[(i, j)])
    }

    #[test]
    fn single_spin_is_pauli_over_two() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(ops.sz.matrix()[(0, 0)], C64::new(0.5, 0.0));
        assert_eq!(ops.sz.matrix()[(1, 1)], C64::new(-0.5, 0.0));
        assert_eq!(ops.sx.matrix()[(0, 1)], C64::new(0.5, 0.0));
        assert_eq!(ops.sx.matrix()[(1, 0)], C64::new(0.5, 0.0));
    }

    #[test]
    fn spin_one_entries() {
        let ops = build_spin_operators(2).unwrap();
        let r = std::f64::consts::SQRT_2 / 2.0;
        for (i, m) in [1.0, 0.0, -1.0].iter().enumerate() {
            assert_eq!(ops.sz.matrix()[(i, i)].re, *m);
        }
        for (a, b) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert!((ops.sx.matrix()[(a, b)].re - r).abs() < 1e-15);
        }
    }

    #[test]
    fn angular_momentum_algebra() {
        for n in [1, 2, 5, 10, 33] {
            let ops = build_spin_operators(n).unwrap();
            let s = n as f64 / 2.0;
            let xyz = [&ops.sx, &ops.sy, &ops.sz];
            for a in 0..3 {
                let b = (a + 1) % 3;
                let c = (a + 2) % 3;
                let lhs = commutator(xyz[a].matrix(), xyz[b].matrix());
                let rhs = Mat::from_fn(n + 1, n + 1, |i, j| linalg::I * xyz[c].matrix()[(i, j)]);
                assert!(max_abs_diff(&lhs, &rhs) < 1e-10, "N={n} axes {a}{b}");
            }
            let mut s2 = CMat::zeros(n + 1, n + 1);
            for op in xyz {
                s2 = &s2 + &(op.matrix() * op.matrix());
            }
            let casimir = Mat::from_fn(n + 1, n + 1, |i, j| {
                if i == j { C64::new(s * (s + 1.0), 0.0) } else { ZERO }
            });
            assert!(max_abs_diff(&s2, &casimir) < 1e-10);
        }
    }

    #[test]
    fn ladder_matches_dense() {
        let n = 9;
        let ops = build_spin_operators(n).unwrap();
        let ladder = SpinLadder::new(n).unwrap();
        let v: Vec<C64> = (0..=n).map(|i| C64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.01)).collect();
        for axis in 0..3 {
            let a = ladder.apply_axis(axis, &v);
            let b = ops.axis(axis).apply(&v);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_spins_rejected() {
        assert!(matches!(build_spin_operators(0), Err(Error::InvalidSystemSize { .. })));
        assert!(build_lmg_hamiltonian(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn single_spin_hamiltonian_spectrum() {
        let h = build_lmg_hamiltonian(1, 1.0, 1.0).unwrap();
        let vals = linalg::hermitian_eigenvalues(h.matrix()).unwrap();
        assert!((vals[0] + 1.5).abs() < 1e-12);
        assert!((vals[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spectrum_symmetric_under_field_reversal() {
        let a = linalg::hermitian_eigenvalues(build_lmg_hamiltonian(12, 1.0, 0.7).unwrap().matrix()).unwrap();
        let b = linalg::hermitian_eigenvalues(build_lmg_hamiltonian(12, 1.0, -0.7).unwrap().matrix()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn floquet_is_unitary_and_reduces_without_kick() {
        let u = build_floquet(20, 1.0, 2.0, 20.0, 1.0).unwrap();
        assert!(u.unitarity_defect() < 1e-10);
        assert_eq!(u.kind(), OperatorKind::Unitary);

        // K = 0: U^n = exp(−iHnτ)
        let u0 = build_floquet(20, 1.0, 2.0, 0.0, 0.25).unwrap();
        let u_long = build_floquet(20, 1.0, 2.0, 0.0, 1.0).unwrap();
        let psi = DickeState::polarized_up(20).unwrap();
        let mut v = psi.amplitudes().to_vec();
        for _ in 0..4 {
            v = u0.apply(&v);
        }
        let w = u_long.apply(psi.amplitudes());
        for (x, y) in v.iter().zip(&w) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn floquet_rejects_nonpositive_period() {
        assert!(matches!(build_floquet(4, 1.0, 1.0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn parity_squares_to_plus_or_minus_identity() {
        for n in [1, 2, 3, 8, 11] {
            let p = build_parity(n).unwrap();
            let p2 = p.matrix() * p.matrix();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let target = Mat::from_fn(n + 1, n + 1, |i, j| if i == j { C64::new(sign, 0.0) } else { ZERO });
            assert!(max_abs_diff(&p2, &target) < 1e-10, "N={n}");
        }
        // single spin: exp(iπσx/2) = iσx
        let p = build_parity(1).unwrap();
        assert!((p.matrix()[(0, 1)] - linalg::I).norm() < 1e-12);
        assert!(p.matrix()[(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn parity_commutes_with_dynamics() {
        let n = 100;
        let p = build_parity(n).unwrap();
        let h = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        assert!(p.commutator_norm(&h) < 1e-10);
        let u = build_floquet(40, 1.0, 2.0, 20.0, 1.0).unwrap();
        assert!(build_parity(40).unwrap().commutator_norm(&u) < 1e-10);
    }

    #[test]
    fn parity_sectors_cover_the_sector() {
        for n in [7, 8] {
            let p = build_parity(n).unwrap();
            let eig = p.matrix().eigenvalues().unwrap();
            let plus = eig.iter().filter(|z| (z.re - 1.0).abs() < 1e-8 || (z.im - 1.0).abs() < 1e-8).count();
            let minus = eig.iter().filter(|z| (z.re + 1.0).abs() < 1e-8 || (z.im + 1.0).abs() < 1e-8).count();
            assert_eq!(plus + minus, n + 1);
        }
    }
}
