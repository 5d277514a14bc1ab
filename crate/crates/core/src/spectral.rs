//! Floquet quasienergies, parity sectors and level statistics.

use std::f64::consts::PI;

use faer::Mat;

use crate::collective::CollectiveOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, SymmetricEigen};

/// Largest allowed `‖[U, P]‖` entry.
pub const PARITY_TOLERANCE: f64 = 1e-8;

/// Minimum number of levels for a sector average of `r`.
pub const MIN_LEVELS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Even,
    Odd,
    /// Both sectors merged into one list.
    Mixed,
}

impl Sector {
    fn label(self) -> Option<i8> {
        match self {
            Sector::Even => Some(1),
            Sector::Odd => Some(-1),
            Sector::Mixed => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetSpectrum {
    /// Quasienergies in `(−π/τ, π/τ]`, ascending.
    pub quasienergies: Vec<f64>,
    /// `+1` or `−1` per level.
    pub parity_labels: Vec<i8>,
    pub tau: f64,
}

impl FloquetSpectrum {
    pub fn len(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasienergies.is_empty()
    }

    pub fn sector(&self, sector: Sector) -> Vec<f64> {
        match sector.label() {
            None => self.quasienergies.clone(),
            Some(l) => self
                .quasienergies
                .iter()
                .zip(&self.parity_labels)
                .filter(|(_, &p)| p == l)
                .map(|(&q, _)| q)
                .collect(),
        }
    }

    pub fn sector_size(&self, sector: Sector) -> usize {
        match sector.label() {
            None => self.len(),
            Some(l) => self.parity_labels.iter().filter(|&&p| p == l).count(),
        }
    }
}

/// Folds `μ` into `(−π/τ, π/τ]`.
pub fn fold_quasienergy(mu: f64, tau: f64) -> f64 {
    let period = 2.0 * PI / tau;
    let mut x = mu.rem_euclid(period);
    if x > PI / tau {
        x -= period;
    }
    x
}

/// Orthonormal bases of the two parity eigenspaces. `P` has eigenvalues
/// `±1` (integer spin, `P` real) or `±i` (half-integer spin, `P` imaginary),
/// so one of `Re P`, `Im P` is a real symmetric matrix with the same
/// eigenvectors.
fn parity_bases(parity: &CollectiveOperator) -> Result<(Mat<f64>, Mat<f64>)> {
    let p = parity.matrix();
    let d = p.nrows();
    let re = Mat::from_fn(d, d, |i, j| p[(i, j)].re);
    let im = Mat::from_fn(d, d, |i, j| p[(i, j)].im);
    let herm = if re.norm_l2() >= im.norm_l2() { re } else { im };
    let eig = SymmetricEigen::new(&herm)?;
    let plus: Vec<usize> = (0..d).filter(|&i| eig.values[i] > 0.0).collect();
    let minus: Vec<usize> = (0..d).filter(|&i| eig.values[i] <= 0.0).collect();
    if eig.values.iter().any(|v| (v.abs() - 1.0).abs() > 1e-8) {
        return Err(Error::numerical("parity operator does not square to ±1"));
    }
    let pick = |idx: &[usize]| Mat::from_fn(d, idx.len(), |i, k| eig.vectors[(i, idx[k])]);
    Ok((pick(&plus), pick(&minus)))
}

/// `Vᵀ U W` for real `V`, `W`.
fn project(u: &CMat, v: &Mat<f64>, w: &Mat<f64>) -> CMat {
    let vc = linalg::to_complex(v);
    let wc = linalg::to_complex(w);
    vc.transpose() * (u * wc)
}

/// Quasienergies of `U = exp(−iμτ)` sorted, with their parity labels.
pub fn floquet_spectrum(u: &CollectiveOperator, parity: &CollectiveOperator, tau: f64) -> Result<FloquetSpectrum> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!("kick period must be positive, got τ = {tau}")));
    }
    if u.dim() != parity.dim() {
        return Err(Error::Shape(format!("U has dimension {}, parity {}", u.dim(), parity.dim())));
    }
    let defect = u.commutator_norm(parity);
    if defect > PARITY_TOLERANCE {
        return Err(Error::numerical(format!("U does not commute with parity: ‖[U, P]‖ = {defect:e}")));
    }
    let (even, odd) = parity_bases(parity)?;
    let mut levels: Vec<(f64, i8)> = Vec::with_capacity(u.dim());
    for (basis, label) in [(&even, 1i8), (&odd, -1i8)] {
        if basis.ncols() == 0 {
            continue;
        }
        let block = project(u.matrix(), basis, basis);
        for z in linalg::general_eigenvalues(&block)? {
            if (z.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::numerical(format!("Floquet eigenvalue off the unit circle: |λ| = {}", z.norm())));
            }
            levels.push((fold_quasienergy(-z.arg() / tau, tau), label));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(FloquetSpectrum {
        quasienergies: levels.iter().map(|l| l.0).collect(),
        parity_labels: levels.iter().map(|l| l.1).collect(),
        tau,
    })
}

/// Mean of `min(δ_α, δ_{α+1}) / max(δ_α, δ_{α+1})` over sorted `levels`.
/// With `period`, the levels live on a circle and the wrap-around spacing
/// is included.
pub fn spacing_ratio(levels: &[f64], period: Option<f64>) -> Result<f64> {
    if levels.len() < 3 {
        return Err(Error::domain(format!("need at least 3 levels, got {}", levels.len())));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut spacings: Vec<f64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(p) = period {
        spacings.push(sorted[0] + p - sorted[sorted.len() - 1]);
    }
    let pairs = if period.is_some() { spacings.len() } else { spacings.len() - 1 };
    let mut acc = 0.0;
    let mut count = 0usize;
    for a in 0..pairs {
        let (x, y) = (spacings[a], spacings[(a + 1) % spacings.len()]);
        let hi = x.max(y);
        if hi > 0.0 {
            acc += x.min(y) / hi;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::numerical("all level spacings vanish"));
    }
    Ok(acc / count as f64)
}

/// Sector average of the level-spacing ratio.
pub fn level_spacing_ratio(spectrum: &FloquetSpectrum, sector: Sector) -> Result<f64> {
    let levels = spectrum.sector(sector);
    if levels.len() < MIN_LEVELS {
        return Err(Error::domain(format!("{} levels in sector, at least {MIN_LEVELS} needed", levels.len())));
    }
    spacing_ratio(&levels, Some(2.0 * PI / spectrum.tau))
}

/// Mean ratio for Poisson levels.
pub const R_POISSON: f64 = 0.386;
/// Mean ratio for the circular orthogonal ensemble.
pub const R_COE: f64 = 0.5295;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Regular,
    Unstable,
}

/// `√N` in the regular regime, `ln N / (2λ)` near an unstable point.
pub fn ehrenfest_estimate(n_spins: f64, regime: Regime, lambda: Option<f64>) -> Result<f64> {
    if !(n_spins >= 1.0) {
        return Err(Error::domain(format!("system size must be at least 1, got {n_spins}")));
    }
    match (regime, lambda) {
        (Regime::Regular, _) => Ok(n_spins.sqrt()),
        (Regime::Unstable, Some(l)) if l > 0.0 => Ok(n_spins.ln() / (2.0 * l)),
        (Regime::Unstable, _) => Err(Error::domain("the unstable estimate needs a positive rate λ")),
    }
}
