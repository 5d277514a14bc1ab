//! Full `2^N` Hilbert-space engine for power-law couplings.
//!
//! Basis state `x` has bit `i` set when site `i` points down, so `x = 0` is
//! `|↑↑…↑⟩`. The Hamiltonian is
//! `H = −½ Σ_{i≠j} J_ij σᶻ_i σᶻ_j − h Σ_i σˣ_i` with
//! `J_ij = J |i−j|^{−α} / N(α)` and Kac factor `N(α) = Σ_{r=1}^{N} r^{−α}`.
//!
//! At `α = 0` this equals the sector Hamiltonian of [`crate::collective`] plus
//! the constant `J/2` (the `i = j` terms of `(Σσᶻ)²`), see [`sector_offset`].

use std::collections::HashMap;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::collective::{kick_phases, DickeState};
use crate::entanglement::{entropy_of_matrix, LnFactorials};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, SymmetricEigen, ZERO};
use crate::record::{self, TimeSeriesRecord};

pub const MAX_SPINS: usize = 14;

/// Largest size for which evolution uses a dense eigendecomposition by default.
pub const DENSE_LIMIT: usize = 10;

/// Energy difference between the full Hamiltonian at `α = 0` and the sector one.
pub fn sector_offset(j: f64) -> f64 {
    0.5 * j
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidSystemSize { n, reason: "at least one spin is required" });
    }
    if n > MAX_SPINS {
        return Err(Error::InvalidSystemSize { n, reason: "full Hilbert space limited to 14 spins" });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Symmetric couplings `J_ij` with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    alpha: f64,
    kac: f64,
    values: Vec<f64>,
}

impl CouplingMatrix {
    pub fn power_law(n: usize, alpha: f64, j: f64, boundary: Boundary) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystemSize { n, reason: "at least one spin is required" });
        }
        if !(alpha >= 0.0) {
            return Err(Error::domain(format!("power-law exponent must be non-negative, got α = {alpha}")));
        }
        let kac = kac_factor(n, alpha);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    let mut r = i.abs_diff(k);
                    if boundary == Boundary::Periodic {
                        r = r.min(n - r);
                    }
                    values[i * n + k] = j * (r as f64).powf(-alpha) / kac;
                }
            }
        }
        Ok(Self { n, alpha, kac, values })
    }

    /// Arbitrary couplings; must be symmetric with zero diagonal.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!("coupling matrix for N = {n} needs {} entries", n * n)));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::domain("couplings must have zero diagonal"));
            }
            for k in 0..i {
                if (values[i * n + k] - values[k * n + i]).abs() > 1e-14 {
                    return Err(Error::domain("couplings must be symmetric"));
                }
            }
        }
        Ok(Self { n, alpha: f64::NAN, kac: f64::NAN, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kac(&self) -> f64 {
        self.kac
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// `N(α) = Σ_{r=1}^{N} r^{−α}`.
pub fn kac_factor(n: usize, alpha: f64) -> f64 {
    (1..=n).map(|r| (r as f64).powf(-alpha)).sum()
}

/// Matrix-free real Hamiltonian on the full space.
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    n: usize,
    diag: Vec<f64>,
    h: f64,
}

impl FullHamiltonian {
    pub fn new(couplings: &CouplingMatrix, h: f64) -> Result<Self> {
        let n = couplings.n();
        check_size(n)?;
        let d = 1usize << n;
        let diag = (0..d)
            .map(|x| {
                let mut e = 0.0;
                for i in 0..n {
                    let si = spin(x, i);
                    for k in (i + 1)..n {
                        e -= couplings.get(i, k) * si * spin(x, k);
                    }
                }
                e
            })
            .collect();
        Ok(Self { n, diag, h })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out: Vec<C64> = v.iter().zip(&self.diag).map(|(a, e)| a * e).collect();
        if self.h != 0.0 {
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = ZERO;
                for i in 0..self.n {
                    acc += v[x ^ (1 << i)];
                }
                *o -= acc * self.h;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let d = self.dim();
        Mat::from_fn(d, d, |r, c| {
            if r == c {
                self.diag[r]
            } else if (r ^ c).count_ones() == 1 {
                -self.h
            } else {
                0.0
            }
        })
    }

    /// Bounds `[E_min, E_max]` from Gershgorin discs.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let r = self.h.abs() * self.n as f64;
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min) - r;
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max) + r;
        (lo, hi)
    }
}

fn spin(x: usize, i: usize) -> f64 {
    if x >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `H` for power-law couplings with open boundaries.
pub fn build_longrange_hamiltonian(n: usize, alpha: f64, j: f64, h: f64) -> Result<FullHamiltonian> {
    check_size(n)?;
    FullHamiltonian::new(&CouplingMatrix::power_law(n, alpha, j, Boundary::Open)?, h)
}

/// Pure state on the `2^N` space.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n: usize,
    amplitudes: Vec<C64>,
}

impl FullState {
    pub fn polarized_up(n: usize) -> Result<Self> {
        check_size(n)?;
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[0] = linalg::ONE;
        Ok(Self { n, amplitudes })
    }

    pub fn from_amplitudes(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_size(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::Shape(format!("state of {n} spins needs {} amplitudes", 1usize << n)));
        }
        let nrm = linalg::norm(&amplitudes);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::numerical("cannot normalize a zero or non-finite state"));
        }
        Ok(Self { n, amplitudes: amplitudes.into_iter().map(|a| a / nrm).collect() })
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }
}

/// Columns `|D_N^k⟩` of the symmetric subspace inside the full space.
pub fn dicke_embedding(n: usize) -> Result<Mat<f64>> {
    check_size(n)?;
    let lf = LnFactorials::new(n);
    Ok(Mat::from_fn(1 << n, n + 1, |x, k| {
        if (x as u32).count_ones() as usize == k {
            (-0.5 * lf.ln_binomial(n, k)).exp()
        } else {
            0.0
        }
    }))
}

/// Maps a Dicke-sector state into the full space.
pub fn embed_dicke(psi: &DickeState) -> Result<FullState> {
    let v = dicke_embedding(psi.n_spins())?;
    Ok(FullState { n: psi.n_spins(), amplitudes: linalg::real_matvec(&v, psi.amplitudes()) })
}

/// Projects a full state onto the symmetric subspace (no renormalization).
pub fn project_to_dicke(state: &FullState) -> Result<Vec<C64>> {
    let v = dicke_embedding(state.n)?;
    Ok(linalg::real_transpose_matvec(&v, &state.amplitudes))
}

/// `V† H V` on the symmetric subspace.
pub fn restrict_to_sector(ham: &FullHamiltonian) -> Result<CMat> {
    let v = dicke_embedding(ham.n)?;
    let n = ham.n;
    let cols: Vec<Vec<C64>> = (0..=n)
        .map(|k| ham.apply(&v.col_as_slice(k).iter().map(|&a| C64::new(a, 0.0)).collect::<Vec<_>>()))
        .collect();
    Ok(Mat::from_fn(n + 1, n + 1, |r, c| {
        v.col_as_slice(r).iter().zip(&cols[c]).fold(ZERO, |acc, (a, b)| acc + b * *a)
    }))
}

/// Collective spin components applied to a full-space vector.
pub fn apply_collective(n: usize, axis: usize, v: &[C64]) -> Vec<C64> {
    let d = v.len();
    let mut out = vec![ZERO; d];
    match axis {
        0 => {
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = ZERO;
                for i in 0..n {
                    acc += v[x ^ (1 << i)];
                }
                *o = acc * 0.5;
            }
        }
        1 => {
            // σʸ|↑⟩ = i|↓⟩, σʸ|↓⟩ = −i|↑⟩
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = ZERO;
                for i in 0..n {
                    let src = x ^ (1 << i);
                    let sign = if x >> i & 1 == 1 { 1.0 } else { -1.0 };
                    acc += v[src] * C64::new(0.0, sign);
                }
                *o = acc * 0.5;
            }
        }
        2 => {
            for (x, o) in out.iter_mut().enumerate() {
                let m = 0.5 * (n as f64 - 2.0 * (x as u32).count_ones() as f64);
                *o = v[x] * m;
            }
        }
        _ => panic!("spin axis index {axis} out of range"),
    }
    out
}

/// Diagonal of `m̂_z = (1/N) Σ σᶻ_i`.
pub fn mz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|x| (n as f64 - 2.0 * (x as u32).count_ones() as f64) / n as f64).collect()
}

/// Way of computing `e^{−iHt}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvolutionMethod {
    /// Dense eigendecomposition up to [`DENSE_LIMIT`] spins, Chebyshev above.
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone)]
enum Engine {
    Dense(SymmetricEigen),
    Chebyshev { center: f64, half_width: f64 },
}

/// Time evolution on the full space.
#[derive(Debug, Clone)]
pub struct FullPropagator {
    ham: FullHamiltonian,
    engine: Engine,
}

const CHEB_CHUNK: f64 = 40.0;
const CHEB_TOL: f64 = 1e-18;

impl FullPropagator {
    pub fn new(ham: FullHamiltonian, method: EvolutionMethod) -> Result<Self> {
        let dense = match method {
            EvolutionMethod::Auto => ham.n <= DENSE_LIMIT,
            EvolutionMethod::Dense => true,
            EvolutionMethod::Chebyshev => false,
        };
        let engine = if dense {
            Engine::Dense(SymmetricEigen::new(&ham.to_dense())?)
        } else {
            let (lo, hi) = ham.spectral_bounds();
            Engine::Chebyshev { center: 0.5 * (hi + lo), half_width: 0.5 * (hi - lo) * 1.01 + 1e-12 }
        };
        Ok(Self { ham, engine })
    }

    pub fn hamiltonian(&self) -> &FullHamiltonian {
        &self.ham
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.engine, Engine::Dense(_))
    }

    /// `e^{−iHt} v` for any real `t`.
    pub fn evolve(&self, v: &[C64], t: f64) -> Vec<C64> {
        match &self.engine {
            Engine::Dense(eig) => {
                let c = linalg::real_transpose_matvec(&eig.vectors, v);
                let c: Vec<C64> = c.iter().zip(&eig.values).map(|(a, &e)| a * C64::from_polar(1.0, -e * t)).collect();
                linalg::real_matvec(&eig.vectors, &c)
            }
            Engine::Chebyshev { center, half_width } => {
                if t == 0.0 {
                    return v.to_vec();
                }
                let chunks = (t.abs() * half_width / CHEB_CHUNK).ceil().max(1.0) as usize;
                let dt = t / chunks as f64;
                let mut w = v.to_vec();
                for _ in 0..chunks {
                    w = self.chebyshev_step(&w, dt, *center, *half_width);
                }
                w
            }
        }
    }

    fn chebyshev_step(&self, v: &[C64], dt: f64, center: f64, half_width: f64) -> Vec<C64> {
        let x = half_width * dt.abs();
        let kmax = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
        let bessel = bessel_j_sequence(x, kmax);
        let scaled = |w: &[C64]| -> Vec<C64> {
            self.ham.apply(w).iter().zip(w).map(|(hw, wi)| (hw - wi * center) / half_width).collect()
        };
        // e^{−iH̃x} = J₀ + 2 Σ (−i)^k J_k T_k(H̃); dt < 0 flips the sign of i
        let mi = if dt >= 0.0 { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
        let mut t_prev = v.to_vec();
        let mut t_cur = scaled(v);
        let mut acc: Vec<C64> = v.iter().map(|a| a * bessel[0]).collect();
        let mut phase = mi;
        for (a, b) in acc.iter_mut().zip(&t_cur) {
            *a += b * phase * (2.0 * bessel[1]);
        }
        for (k, &jk) in bessel.iter().enumerate().skip(2) {
            let ht = scaled(&t_cur);
            let t_next: Vec<C64> = ht.iter().zip(&t_prev).map(|(a, b)| a * 2.0 - b).collect();
            phase *= mi;
            let coef = phase * (2.0 * jk);
            for (a, b) in acc.iter_mut().zip(&t_next) {
                *a += b * coef;
            }
            t_prev = t_cur;
            t_cur = t_next;
            if k as f64 > x && jk.abs() < CHEB_TOL {
                break;
            }
        }
        let shift = C64::from_polar(1.0, -center * dt);
        acc.iter().map(|a| a * shift).collect()
    }
}

/// `J_0(x), …, J_kmax(x)` by Miller's downward recurrence, `x ≥ 0`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let base = kmax.max(x.ceil() as usize);
    let start = 2 * ((base + (160.0 * base as f64).sqrt() as usize + 20) / 2);
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&j) {
        *o = v / norm;
    }
    out
}

/// Covariance-based QFI densities on the full space, as in [`crate::dynamics::Qfi`].
pub fn full_qfi(state: &FullState) -> crate::dynamics::Qfi {
    let n = state.n;
    let v = &state.amplitudes;
    let sv: [Vec<C64>; 3] = std::array::from_fn(|a| apply_collective(n, a, v));
    let mean: [f64; 3] = std::array::from_fn(|a| linalg::dot(v, &sv[a]).re);
    let mut cov = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            cov[a][b] = linalg::dot(&sv[a], &sv[b]).re - mean[a] * mean[b];
        }
    }
    let nf = n as f64;
    let per_axis = [4.0 * cov[0][0] / nf, 4.0 * cov[1][1] / nf, 4.0 * cov[2][2] / nf];
    let f_q = per_axis.iter().copied().fold(f64::MIN, f64::max);
    let m = Mat::from_fn(3, 3, |i, j| 0.5 * (cov[i][j] + cov[j][i]));
    let top = m.self_adjoint_eigenvalues(faer::Side::Lower).map(|v| v[2]).unwrap_or(f64::NAN);
    crate::dynamics::Qfi { per_axis, f_q, f_q_optimal: 4.0 * top / nf }
}

/// `⟨S²⟩`, conserved at `α = 0`.
pub fn total_spin_squared(state: &FullState) -> f64 {
    (0..3).map(|a| linalg::norm_sqr(&apply_collective(state.n, a, &state.amplitudes))).sum()
}

pub fn full_magnetization(state: &FullState) -> f64 {
    state
        .amplitudes
        .iter()
        .zip(mz_diagonal(state.n))
        .map(|(a, m)| a.norm_sqr() * m)
        .sum()
}

/// States `e^{−iHt} ψ₀` at each time in `times`.
pub fn full_evolve(state: &FullState, prop: &FullPropagator, times: &[f64]) -> Result<Vec<FullState>> {
    record::check_grid(times)?;
    check_pair(state, prop)?;
    let mut out = Vec::with_capacity(times.len());
    let mut cur = state.amplitudes.clone();
    let mut t = 0.0;
    for &target in times {
        cur = if prop.is_dense() { prop.evolve(&state.amplitudes, target) } else { prop.evolve(&cur, target - t) };
        t = target;
        out.push(FullState { n: state.n, amplitudes: cur.clone() });
    }
    Ok(out)
}

fn check_pair(state: &FullState, prop: &FullPropagator) -> Result<()> {
    if state.n != prop.ham.n {
        return Err(Error::Shape(format!("state has N = {} but Hamiltonian has N = {}", state.n, prop.ham.n)));
    }
    Ok(())
}

/// `c(t) = ‖[m̂_z(t), m̂_z] ψ₀‖²` on the full space.
pub fn full_square_commutator(state: &FullState, prop: &FullPropagator, times: &[f64]) -> Result<TimeSeriesRecord> {
    record::check_grid(times)?;
    check_pair(state, prop)?;
    let mz = mz_diagonal(state.n);
    let psi = &state.amplitudes;
    let b_psi: Vec<C64> = psi.iter().zip(&mz).map(|(a, m)| a * m).collect();
    let mut values = Vec::with_capacity(times.len());
    let mut fwd_psi = psi.clone();
    let mut fwd_bpsi = b_psi.clone();
    let mut t = 0.0;
    for &target in times {
        fwd_psi = prop.evolve(&fwd_psi, target - t);
        fwd_bpsi = prop.evolve(&fwd_bpsi, target - t);
        t = target;
        let a1: Vec<C64> = fwd_bpsi.iter().zip(&mz).map(|(a, m)| a * m).collect();
        let a2: Vec<C64> = fwd_psi.iter().zip(&mz).map(|(a, m)| a * m).collect();
        let first = prop.evolve(&a1, -target);
        let second = prop.evolve(&a2, -target);
        let diff: f64 = first
            .iter()
            .zip(&second)
            .zip(&mz)
            .map(|((x, y), m)| (x - y * m).norm_sqr())
            .sum();
        values.push(diff);
    }
    TimeSeriesRecord::new("cqt", times.to_vec(), values)
}

/// Floquet step `exp(−i(2K/N)Ŝz²) e^{−iHτ}` on the full space.
#[derive(Debug, Clone)]
pub struct FullFloquet {
    prop: FullPropagator,
    kick: Vec<C64>,
    tau: f64,
}

impl FullFloquet {
    pub fn new(prop: FullPropagator, k: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("kick period must be positive, got τ = {tau}")));
        }
        let n = prop.ham.n;
        // exp(−i(2K/N) M²) with M = N/2 − popcount(x)
        let sector = kick_phases(n, k);
        let kick = (0..1usize << n).map(|x| sector[(x as u32).count_ones() as usize]).collect();
        Ok(Self { prop, kick, tau })
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.prop.evolve(v, self.tau).iter().zip(&self.kick).map(|(a, p)| a * p).collect()
    }

    pub fn evolve(&self, state: &FullState, n_periods: usize) -> Vec<FullState> {
        let mut out = Vec::with_capacity(n_periods + 1);
        let mut v = state.amplitudes.clone();
        out.push(state.clone());
        for _ in 0..n_periods {
            v = self.apply(&v);
            out.push(FullState { n: state.n, amplitudes: v.clone() });
        }
        out
    }

    /// Restriction `V† U V` to the symmetric subspace.
    pub fn sector_matrix(&self) -> Result<CMat> {
        let n = self.prop.ham.n;
        let v = dicke_embedding(n)?;
        let cols: Vec<Vec<C64>> = (0..=n)
            .map(|k| self.apply(&v.col_as_slice(k).iter().map(|&a| C64::new(a, 0.0)).collect::<Vec<_>>()))
            .collect();
        Ok(Mat::from_fn(n + 1, n + 1, |r, c| {
            v.col_as_slice(r).iter().zip(&cols[c]).fold(ZERO, |acc, (a, b)| acc + b * *a)
        }))
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Kicked `c(n)` on the full space by forward and backward stroboscopic evolution.
pub fn full_kicked_square_commutator(state: &FullState, floquet: &FullFloquet, n_max: usize) -> Result<Vec<f64>> {
    let mz = mz_diagonal(state.n);
    let inv_kick: Vec<C64> = floquet.kick.iter().map(|p| p.conj()).collect();
    let back = |v: &[C64]| -> Vec<C64> {
        let w: Vec<C64> = v.iter().zip(&inv_kick).map(|(a, p)| a * p).collect();
        floquet.prop.evolve(&w, -floquet.tau)
    };
    let psi = state.amplitudes.clone();
    let bpsi: Vec<C64> = psi.iter().zip(&mz).map(|(a, m)| a * m).collect();
    let (mut f1, mut f2) = (bpsi, psi);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            f1 = floquet.apply(&f1);
            f2 = floquet.apply(&f2);
        }
        let mut a1: Vec<C64> = f1.iter().zip(&mz).map(|(a, m)| a * m).collect();
        let mut a2: Vec<C64> = f2.iter().zip(&mz).map(|(a, m)| a * m).collect();
        for _ in 0..n {
            a1 = back(&a1);
            a2 = back(&a2);
        }
        out.push(a1.iter().zip(&a2).zip(&mz).map(|((x, y), m)| (x - y * m).norm_sqr()).sum());
    }
    Ok(out)
}

/// Bitmask over sites.
pub type SiteMask = u32;

/// Reduced density matrix of the sites in `mask`.
pub fn partial_trace(state: &FullState, mask: SiteMask) -> Result<CMat> {
    let n = state.n;
    let full: SiteMask = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    if mask & !full != 0 {
        return Err(Error::InvalidPartition(format!("mask {mask:#b} names sites beyond N = {n}")));
    }
    let keep: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    let rest: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
    let (da, db) = (1usize << keep.len(), 1usize << rest.len());
    let mut m = CMat::zeros(da, db);
    for (x, &amp) in state.amplitudes.iter().enumerate() {
        let a = keep.iter().enumerate().fold(0, |acc, (k, &i)| acc | ((x >> i & 1) << k));
        let b = rest.iter().enumerate().fold(0, |acc, (k, &i)| acc | ((x >> i & 1) << k));
        m[(a, b)] = amp;
    }
    Ok(&m * m.adjoint())
}

/// Entropy of the sites in `mask`, evaluated on the smaller side of the cut.
pub fn subsystem_entropy(state: &FullState, mask: SiteMask) -> Result<f64> {
    let n = state.n;
    let full: SiteMask = (1 << n) - 1;
    if mask == 0 || mask == full {
        return Ok(0.0);
    }
    let small = if mask.count_ones() as usize <= n / 2 { mask } else { full & !mask };
    entropy_of_matrix(&partial_trace(state, small)?)
}

/// Assignment of sites to the blocks `A, B, C`; the rest form `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SitePartition {
    pub a: SiteMask,
    pub b: SiteMask,
    pub c: SiteMask,
}

impl SitePartition {
    pub fn new(n: usize, a: SiteMask, b: SiteMask, c: SiteMask) -> Result<Self> {
        let full: SiteMask = (1 << n) - 1;
        if a == 0 || b == 0 || c == 0 {
            return Err(Error::InvalidPartition("blocks A, B, C must be non-empty".into()));
        }
        if a & b != 0 || a & c != 0 || b & c != 0 {
            return Err(Error::InvalidPartition("blocks overlap".into()));
        }
        if (a | b | c) & !full != 0 {
            return Err(Error::InvalidPartition(format!("blocks name sites beyond N = {n}")));
        }
        if a | b | c == full {
            return Err(Error::InvalidPartition("block D must be non-empty".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Contiguous blocks of the given lengths starting at site 0, in order A, B, C.
    pub fn contiguous(n: usize, n_a: usize, n_b: usize, n_c: usize) -> Result<Self> {
        let run = |start: usize, len: usize| -> SiteMask { (((1u64 << len) - 1) << start) as SiteMask };
        Self::new(n, run(0, n_a), run(n_a, n_b), run(n_a + n_b, n_c))
    }
}

/// Entropies of subsystems cached by mask.
#[derive(Debug)]
pub struct EntropyCache<'a> {
    state: &'a FullState,
    cache: HashMap<SiteMask, f64>,
}

impl<'a> EntropyCache<'a> {
    pub fn new(state: &'a FullState) -> Self {
        Self { state, cache: HashMap::new() }
    }

    pub fn entropy(&mut self, mask: SiteMask) -> Result<f64> {
        if let Some(&s) = self.cache.get(&mask) {
            return Ok(s);
        }
        let s = subsystem_entropy(self.state, mask)?;
        self.cache.insert(mask, s);
        // S(X) = S(complement) for a pure state
        let full: SiteMask = (1 << self.state.n) - 1;
        self.cache.insert(full & !mask, s);
        Ok(s)
    }

    pub fn tmi(&mut self, p: SitePartition) -> Result<f64> {
        Ok(self.entropy(p.a)? + self.entropy(p.b)? + self.entropy(p.c)?
            - self.entropy(p.a | p.b)?
            - self.entropy(p.a | p.c)?
            - self.entropy(p.b | p.c)?
            + self.entropy(p.a | p.b | p.c)?)
    }
}

pub fn partition_tmi(state: &FullState, partition: SitePartition) -> Result<f64> {
    EntropyCache::new(state).tmi(partition)
}

/// Every split of an open chain into four non-empty contiguous blocks, with
/// each of the four blocks in turn playing `D`.
pub fn contiguous_partitions(n: usize) -> Result<Vec<SitePartition>> {
    if n < 4 {
        return Err(Error::InvalidPartition(format!("need at least 4 sites, got {n}")));
    }
    let run = |start: usize, end: usize| -> SiteMask { (((1u64 << (end - start)) - 1) << start) as SiteMask };
    let mut out = Vec::new();
    for c1 in 1..n - 2 {
        for c2 in c1 + 1..n - 1 {
            for c3 in c2 + 1..n {
                let blocks = [run(0, c1), run(c1, c2), run(c2, c3), run(c3, n)];
                for d in 0..4 {
                    let abc: Vec<SiteMask> = (0..4).filter(|&i| i != d).map(|i| blocks[i]).collect();
                    out.push(SitePartition::new(n, abc[0], abc[1], abc[2])?);
                }
            }
        }
    }
    Ok(out)
}

/// Minimum TMI and the partition attaining it.
pub fn min_tmi(state: &FullState, partitions: &[SitePartition]) -> Result<(f64, SitePartition)> {
    let mut cache = EntropyCache::new(state);
    let mut best: Option<(f64, SitePartition)> = None;
    for &p in partitions {
        let v = cache.tmi(p)?;
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, p));
        }
    }
    best.ok_or_else(|| Error::InvalidPartition("no partitions supplied".into()))
}

/// Every assignment of sites to four non-empty blocks, up to relabelling
/// of `A, B, C`; limited to 10 sites.
pub fn all_partitions(n: usize) -> Result<Vec<SitePartition>> {
    if n > 10 {
        return Err(Error::InvalidSystemSize { n, reason: "exhaustive partition scan limited to 10 sites" });
    }
    if n < 4 {
        return Err(Error::InvalidPartition(format!("need at least 4 sites, got {n}")));
    }
    let mut out = Vec::new();
    let total = 4usize.pow(n as u32);
    for code in 0..total {
        let mut masks = [0 as SiteMask; 4];
        let mut c = code;
        for i in 0..n {
            masks[c % 4] |= 1 << i;
            c /= 4;
        }
        if masks.contains(&0) {
            continue;
        }
        // A, B, C are interchangeable; keep the ordering a < b < c
        if masks[0] < masks[1] && masks[1] < masks[2] {
            out.push(SitePartition { a: masks[0], b: masks[1], c: masks[2] });
        }
    }
    Ok(out)
}

/// Dense reduced matrix for a block of `l` leading sites, projected onto the
/// block's symmetric subspace; used to compare with the sector engine.
pub fn symmetric_block_rdm(state: &FullState, l: usize) -> Result<CMat> {
    let rho = partial_trace(state, ((1u64 << l) - 1) as SiteMask)?;
    let e = linalg::to_complex(&crate::entanglement::symmetric_embedding(l));
    Ok(e.transpose() * &(&rho * &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::build_lmg_hamiltonian;

    #[test]
    fn kac_limits() {
        assert_eq!(kac_factor(7, 0.0), 7.0);
        assert!((kac_factor(7, 60.0) - 1.0).abs() < 1e-15);
        let c = CouplingMatrix::power_law(6, 0.0, 1.0, Boundary::Open).unwrap();
        assert!((c.get(0, 5) - 1.0 / 6.0).abs() < 1e-15);
        let nn = CouplingMatrix::power_law(6, 80.0, 1.0, Boundary::Open).unwrap();
        assert!((nn.get(2, 3) - 1.0).abs() < 1e-12);
        assert!(nn.get(0, 2) < 1e-20);
    }

    #[test]
    fn periodic_distance() {
        let c = CouplingMatrix::power_law(6, 1.0, 1.0, Boundary::Periodic).unwrap();
        assert_eq!(c.get(0, 5), c.get(0, 1));
    }

    #[test]
    fn size_guard() {
        assert!(matches!(build_longrange_hamiltonian(15, 0.0, 1.0, 1.0), Err(Error::InvalidSystemSize { .. })));
        assert!(build_longrange_hamiltonian(0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn coupling_validation() {
        assert!(CouplingMatrix::from_values(2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(CouplingMatrix::from_values(2, vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(CouplingMatrix::from_values(2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn apply_matches_dense() {
        let ham = build_longrange_hamiltonian(5, 1.3, 1.0, 0.7).unwrap();
        let dense = linalg::to_complex(&ham.to_dense());
        let v: Vec<C64> = (0..32).map(|i| C64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let a = ham.apply(&v);
        let b = linalg::matvec(&dense, &v);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).norm() < 1e-13));
    }

    #[test]
    fn sector_restriction_is_lmg_plus_constant() {
        for n in [2, 5, 8] {
            let full = build_longrange_hamiltonian(n, 0.0, 1.0, 2.0).unwrap();
            let restricted = restrict_to_sector(&full).unwrap();
            let lmg = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
            let shifted = Mat::from_fn(n + 1, n + 1, |i, j| {
                lmg.matrix()[(i, j)] + if i == j { C64::new(sector_offset(1.0), 0.0) } else { ZERO }
            });
            assert!(linalg::max_abs_diff(&restricted, &shifted) < 1e-12, "N={n}");
        }
    }

    #[test]
    fn bessel_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        let j = bessel_j_sequence(30.0, 40);
        assert!((j[0] - (-0.086_367_983_581_040_23)).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_matches_dense() {
        let ham = build_longrange_hamiltonian(8, 0.7, 1.0, 0.9).unwrap();
        let dense = FullPropagator::new(ham.clone(), EvolutionMethod::Dense).unwrap();
        let cheb = FullPropagator::new(ham, EvolutionMethod::Chebyshev).unwrap();
        let psi = FullState::polarized_up(8).unwrap();
        for t in [0.3, 2.0, 17.5, -4.0] {
            let a = dense.evolve(psi.amplitudes(), t);
            let b = cheb.evolve(psi.amplitudes(), t);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "t={t} err={err}");
        }
    }

    #[test]
    fn partial_trace_of_product_is_pure() {
        let psi = FullState::polarized_up(6).unwrap();
        for p in contiguous_partitions(6).unwrap() {
            assert!(partition_tmi(&psi, p).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn bell_pair_entropy() {
        let mut amps = vec![ZERO; 4];
        amps[0] = linalg::ONE;
        amps[3] = linalg::ONE;
        let psi = FullState::from_amplitudes(2, amps).unwrap();
        assert!((subsystem_entropy(&psi, 0b01).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn partition_counts() {
        // C(n−1, 3) cut choices, four choices of D
        assert_eq!(contiguous_partitions(12).unwrap().len(), 165 * 4);
        // Stirling S(n, 4) · 4 labelled-D choices
        assert_eq!(all_partitions(5).unwrap().len(), 10 * 4);
        assert!(SitePartition::new(4, 0b0001, 0b0011, 0b0100).is_err());
        assert!(SitePartition::new(3, 0b001, 0b010, 0b100).is_err());
    }

    #[test]
    fn total_spin_conserved_at_alpha_zero() {
        let ham = build_longrange_hamiltonian(8, 0.0, 1.0, 2.0).unwrap();
        let prop = FullPropagator::new(ham, EvolutionMethod::Auto).unwrap();
        let psi = FullState::polarized_up(8).unwrap();
        let s2 = total_spin_squared(&psi);
        assert!((s2 - 20.0).abs() < 1e-12);
        for s in full_evolve(&psi, &prop, &[0.0, 1.0, 5.0]).unwrap() {
            assert!((total_spin_squared(&s) - s2).abs() < 1e-10);
        }
    }
}
