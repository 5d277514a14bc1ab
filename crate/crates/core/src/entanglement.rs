//! Reduced density matrices of permutation-symmetric states and the entropies
//! built from them.
//!
//! A Dicke state `|D_N^k⟩` (k flipped spins) splits over disjoint blocks of
//! sizes `L₁, …, L_m` and the remainder `R` as
//! `Σ √(Π C(L_i, k_i) · C(R, k_R) / C(N, k)) |D_{L₁}^{k₁}⟩ ⊗ … ⊗ |D_R^{k_R}⟩`,
//! so every reduced state lives on the product of the blocks' symmetric
//! subspaces and depends on block sizes only.

use faer::Mat;

use crate::collective::DickeState;
use crate::elliptic;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};

/// `ln n!` for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub fn new(n_max: usize) -> Self {
        let mut t = Vec::with_capacity(n_max + 1);
        t.push(0.0);
        for n in 1..=n_max {
            t.push(t[n - 1] + (n as f64).ln());
        }
        Self(t)
    }

    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return f64::NEG_INFINITY;
        }
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// Reduced state on the symmetric subspaces of a list of blocks.
///
/// Rows are indexed by the excitation numbers `(k₁, …, k_m)` with `k₁` the
/// slowest index.
#[derive(Debug, Clone)]
pub struct SymmetricRdm {
    block_sizes: Vec<usize>,
    matrix: CMat,
}

impl SymmetricRdm {
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }
}

/// Reduced density matrix of `psi` on blocks of the given sizes.
pub fn dicke_block_rdm(psi: &DickeState, block_sizes: &[usize]) -> Result<SymmetricRdm> {
    let n = psi.n_spins();
    let total: usize = block_sizes.iter().sum();
    if total > n {
        return Err(Error::InvalidPartition(format!("blocks {block_sizes:?} hold {total} > N = {n} spins")));
    }
    if block_sizes.contains(&0) {
        return Err(Error::InvalidPartition("block sizes must be positive".into()));
    }
    let rest = n - total;
    let lf = LnFactorials::new(n);
    let dims: Vec<usize> = block_sizes.iter().map(|l| l + 1).collect();
    let dim: usize = dims.iter().product();

    // excitation multi-index for each flat row, and its total
    let mut multi = Vec::with_capacity(dim);
    for flat in 0..dim {
        let mut r = flat;
        let mut ks = vec![0usize; dims.len()];
        for (slot, &d) in ks.iter_mut().zip(&dims).rev() {
            *slot = r % d;
            r /= d;
        }
        let ln_block: f64 = ks.iter().zip(block_sizes).map(|(&k, &l)| lf.ln_binomial(l, k)).sum();
        multi.push((ks.iter().sum::<usize>(), ln_block));
    }

    let amps = psi.amplitudes();
    let mut rho = CMat::zeros(dim, dim);
    let mut w = vec![ZERO; dim];
    for kr in 0..=rest {
        let ln_rest = lf.ln_binomial(rest, kr);
        let mut any = false;
        for (slot, &(ksum, ln_block)) in w.iter_mut().zip(&multi) {
            let k = ksum + kr;
            *slot = if k <= n {
                let c = (0.5 * (ln_block + ln_rest - lf.ln_binomial(n, k))).exp();
                any |= amps[k] != ZERO;
                amps[k] * c
            } else {
                ZERO
            };
        }
        if !any {
            continue;
        }
        for j in 0..dim {
            let wj = w[j].conj();
            if wj == ZERO {
                continue;
            }
            for (i, wi) in w.iter().enumerate() {
                rho[(i, j)] += wi * wj;
            }
        }
    }
    Ok(SymmetricRdm { block_sizes: block_sizes.to_vec(), matrix: rho })
}

const EIG_FLOOR: f64 = 1e-14;
const TRACE_TOL: f64 = 1e-8;

/// Von Neumann entropy `−Σ λ ln λ` of a density matrix (natural log).
pub fn entropy_of_matrix(rho: &CMat) -> Result<f64> {
    let tr: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    if (tr - 1.0).abs() > TRACE_TOL {
        return Err(Error::numerical(format!("density matrix has trace {tr}")));
    }
    let vals = linalg::hermitian_eigenvalues(rho)?;
    Ok(vals.iter().filter(|&&l| l > EIG_FLOOR).map(|&l| -l * l.ln()).sum::<f64>().max(0.0))
}

pub fn entropy(rho: &SymmetricRdm) -> Result<f64> {
    entropy_of_matrix(&rho.matrix)
}

/// Entropy of any `l` spins of a symmetric state (`l = 0` or `l = N` give zero).
pub fn block_entropy(psi: &DickeState, l: usize) -> Result<f64> {
    if l == 0 || l == psi.n_spins() {
        return Ok(0.0);
    }
    // the smaller side has the smaller matrix and the same spectrum
    let l = l.min(psi.n_spins() - l);
    entropy(&dicke_block_rdm(psi, &[l])?)
}

/// Sizes of three disjoint blocks `A, B, C`; `D` holds the remaining spins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
}

impl BlockPartition {
    pub fn new(n_spins: usize, n_a: usize, n_b: usize, n_c: usize) -> Result<Self> {
        if n_a == 0 || n_b == 0 || n_c == 0 {
            return Err(Error::InvalidPartition("blocks A, B, C must be non-empty".into()));
        }
        if n_a + n_b + n_c >= n_spins {
            return Err(Error::InvalidPartition(format!(
                "blocks ({n_a}, {n_b}, {n_c}) leave no spins for D out of N = {n_spins}"
            )));
        }
        Ok(Self { n_a, n_b, n_c })
    }

    pub fn n_d(&self, n_spins: usize) -> usize {
        n_spins - self.n_a - self.n_b - self.n_c
    }
}

/// `I₃(A:B:C) = S_A + S_B + S_C − S_AB − S_AC − S_BC + S_ABC`.
///
/// For a symmetric state the union of two blocks is itself a block of the
/// summed size, so every term is a single-block entropy.
pub fn tmi(psi: &DickeState, partition: BlockPartition) -> Result<f64> {
    let n = psi.n_spins();
    let p = BlockPartition::new(n, partition.n_a, partition.n_b, partition.n_c)?;
    let s = |l: usize| block_entropy(psi, l);
    Ok(s(p.n_a)? + s(p.n_b)? + s(p.n_c)? - s(p.n_a + p.n_b)? - s(p.n_a + p.n_c)? - s(p.n_b + p.n_c)?
        + s(p.n_a + p.n_b + p.n_c)?)
}

/// Mutual information `I(A:B) = S_A + S_B − S_AB` for blocks of sizes `a`, `b`.
pub fn mutual_information(psi: &DickeState, a: usize, b: usize) -> Result<f64> {
    if a + b > psi.n_spins() {
        return Err(Error::InvalidPartition(format!("{a} + {b} spins exceed N = {}", psi.n_spins())));
    }
    Ok(block_entropy(psi, a)? + block_entropy(psi, b)? - block_entropy(psi, a + b)?)
}

/// `ln ñ` with `ñ = (a+1)(b+1)(c+1)(a+b+c+1) / [(a+b+1)(a+c+1)(b+c+1)]`: the
/// TMI of blocks whose reduced states are maximally mixed on their symmetric
/// subspaces.
pub fn ergodic_tmi_reference(n_a: usize, n_b: usize, n_c: usize) -> Result<f64> {
    if n_a == 0 || n_b == 0 || n_c == 0 {
        return Err(Error::InvalidPartition("block sizes must be positive".into()));
    }
    let (a, b, c) = (n_a as f64, n_b as f64, n_c as f64);
    let num = (a + 1.0) * (b + 1.0) * (c + 1.0) * (a + b + c + 1.0);
    let den = (a + b + 1.0) * (a + c + 1.0) * (b + c + 1.0);
    Ok((num / den).ln())
}

/// Page's mean entanglement entropy `ln m − m/(2n)` for an `m × n` bipartition, `m ≤ n`.
pub fn page_entropy_reference(m: usize, n: usize) -> Result<f64> {
    if m == 0 || m > n {
        return Err(Error::domain(format!("Page entropy needs 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    Ok((m as f64).ln() - m as f64 / (2.0 * n as f64))
}

/// Page value for a block of `l` spins in a symmetric state of `n` spins.
pub fn page_entropy_block(l: usize, n_spins: usize) -> Result<f64> {
    if l == 0 || l >= n_spins {
        return Err(Error::InvalidPartition(format!("block of {l} spins in N = {n_spins}")));
    }
    let (m, n) = (l + 1, n_spins - l + 1);
    page_entropy_reference(m.min(n), m.max(n))
}

/// Long-time z-axis QFI density `φ_Q^z` after a quench from `|↑…↑⟩` into the
/// ferromagnetic phase, from the classical orbit:
/// `φ = (1/k²)[(k² − 1) + E(θ_k, k)/F(θ_k, k) − (π / 2F(θ_k, k))²]`
/// with `k = J/(2h)` and `θ_k = arcsin(1/k)`.
pub fn phi_q_z(j: f64, h: f64) -> Result<f64> {
    let k = j / (2.0 * h);
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::domain(format!(
            "closed form holds only in the ferromagnetic regime k = J/(2h) ≥ 1, got k = {k}"
        )));
    }
    if k == 1.0 {
        return Ok(0.0);
    }
    let theta = (1.0 / k).asin();
    let f = elliptic::elliptic_f(theta, k)?;
    let e = elliptic::elliptic_e(theta, k)?;
    let k2 = k * k;
    let g = std::f64::consts::PI / (2.0 * f);
    Ok(((k2 - 1.0) + e / f - g * g) / k2)
}

/// Dense matrix of a product-basis density operator restricted to blocks; used
/// by tests and by the full-space engine to compare against [`dicke_block_rdm`].
pub fn symmetric_embedding(block_len: usize) -> Mat<f64> {
    // columns: normalized Dicke states |D_L^k⟩ on L qubits, basis bit i = site i flipped
    let d = 1usize << block_len;
    let lf = LnFactorials::new(block_len);
    Mat::from_fn(d, block_len + 1, |x, k| {
        if (x as u64).count_ones() as usize == k {
            (-0.5 * lf.ln_binomial(block_len, k)).exp()
        } else {
            0.0
        }
    })
}

/// Converts a symmetric RDM of a single block to the `2^L`-dimensional product basis.
pub fn to_product_basis(rho: &SymmetricRdm) -> Result<CMat> {
    if rho.block_sizes.len() != 1 {
        return Err(Error::InvalidPartition("only single-block RDMs can be embedded".into()));
    }
    let e = linalg::to_complex(&symmetric_embedding(rho.block_sizes[0]));
    Ok(&e * &(&rho.matrix * e.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use crate::collective::build_lmg_hamiltonian;
    use crate::dynamics::evolve_quench;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c64(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_state(n: usize, seed: u64) -> DickeState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..=n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        DickeState::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn triplet_zero_is_maximally_entangled() {
        let psi = DickeState::from_amplitudes(2, vec![ZERO, c64(1.0), ZERO]).unwrap();
        let rho = dicke_block_rdm(&psi, &[1]).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!(rho.matrix()[(0, 1)].norm() < 1e-14);
        assert!((entropy(&rho).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn product_state_is_pure_on_every_block() {
        let psi = DickeState::polarized_up(12).unwrap();
        for sizes in [vec![1], vec![3, 4], vec![2, 2, 2]] {
            let rho = dicke_block_rdm(&psi, &sizes).unwrap();
            assert!(entropy(&rho).unwrap().abs() < 1e-12);
        }
        let p = BlockPartition::new(12, 2, 3, 4).unwrap();
        assert!(tmi(&psi, p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rdm_is_a_density_matrix() {
        let psi = random_state(11, 3);
        let rho = dicke_block_rdm(&psi, &[2, 3, 1]).unwrap();
        assert_eq!(rho.dim(), 3 * 4 * 2);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(linalg::hermiticity_defect(rho.matrix()) < 1e-12);
        assert!(rho.eigenvalues().unwrap().iter().all(|&l| l > -1e-10));
    }

    #[test]
    fn complement_has_the_same_entropy() {
        let psi = random_state(13, 9);
        for l in 1..13 {
            let a = entropy(&dicke_block_rdm(&psi, &[l]).unwrap()).unwrap();
            let b = entropy(&dicke_block_rdm(&psi, &[13 - l]).unwrap()).unwrap();
            assert!((a - b).abs() < 1e-10, "l={l}");
        }
    }

    #[test]
    fn two_blocks_equal_their_union() {
        let psi = random_state(10, 5);
        let joint = entropy(&dicke_block_rdm(&psi, &[2, 3]).unwrap()).unwrap();
        let union = entropy(&dicke_block_rdm(&psi, &[5]).unwrap()).unwrap();
        assert!((joint - union).abs() < 1e-10);
        let swapped = entropy(&dicke_block_rdm(&psi, &[3, 2]).unwrap()).unwrap();
        assert!((joint - swapped).abs() < 1e-10);
    }

    #[test]
    fn tmi_from_multiblock_rdms_agrees() {
        let n = 9;
        let ham = build_lmg_hamiltonian(n, 1.0, 2.0).unwrap();
        let psi0 = DickeState::polarized_up(n).unwrap();
        let psi = evolve_quench(&psi0, &ham, &[3.7]).unwrap().remove(0);
        let (a, b, c) = (1, 2, 3);
        let s = |sizes: &[usize]| entropy(&dicke_block_rdm(&psi, sizes).unwrap()).unwrap();
        let direct = s(&[a]) + s(&[b]) + s(&[c]) - s(&[a, b]) - s(&[a, c]) - s(&[b, c]) + s(&[a, b, c]);
        let fast = tmi(&psi, BlockPartition::new(n, a, b, c).unwrap()).unwrap();
        assert!((direct - fast).abs() < 1e-10);
    }

    #[test]
    fn oversized_blocks_rejected() {
        let psi = DickeState::polarized_up(5).unwrap();
        assert!(matches!(dicke_block_rdm(&psi, &[3, 3]), Err(Error::InvalidPartition(_))));
        assert!(BlockPartition::new(5, 1, 2, 2).is_err());
        assert!(BlockPartition::new(5, 0, 2, 1).is_err());
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        let rho = Mat::from_fn(2, 2, |i, j| if i == j { c64(0.6) } else { ZERO });
        assert!(matches!(entropy_of_matrix(&rho), Err(Error::Numerical(_))));
        let mixed = Mat::from_fn(4, 4, |i, j| if i == j { c64(0.25) } else { ZERO });
        assert!((entropy_of_matrix(&mixed).unwrap() - 4f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn reference_formulas() {
        assert!((ergodic_tmi_reference(1, 10, 20).unwrap() - (14784.0f64 / 8184.0).ln()).abs() < 1e-14);
        assert!((ergodic_tmi_reference(1, 1, 1).unwrap() - (32.0f64 / 27.0).ln()).abs() < 1e-14);
        assert!((page_entropy_reference(2, 2).unwrap() - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!((page_entropy_reference(1, 7).unwrap() + 1.0 / 14.0).abs() < 1e-15);
        assert!(page_entropy_reference(3, 2).is_err());
    }

    #[test]
    fn phi_q_z_domain_and_limits() {
        assert!(matches!(phi_q_z(1.0, 1.0), Err(Error::Domain(_))));
        assert_eq!(phi_q_z(1.0, 0.5).unwrap(), 0.0);
        // the approach to the separatrix is logarithmic in k − 1
        let near: Vec<f64> = [1e-4, 1e-8, 1e-12]
            .iter()
            .map(|d| phi_q_z(1.0, 0.5 / (1.0 + d)).unwrap())
            .collect();
        assert!(near.windows(2).all(|w| w[1] < w[0]), "{near:?}");
        assert!(near[2] < 0.06);
        for i in 0..50 {
            let k = 1.1 + i as f64 * (10.0 - 1.1) / 49.0;
            let v = phi_q_z(1.0, 1.0 / (2.0 * k)).unwrap();
            assert!(v > 0.0 && v <= 0.5, "k={k} φ={v}");
        }
    }

    #[test]
    fn embedding_has_orthonormal_columns() {
        let e = symmetric_embedding(5);
        let g = e.transpose() * &e;
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - want).abs() < 1e-14);
            }
        }
    }
}
