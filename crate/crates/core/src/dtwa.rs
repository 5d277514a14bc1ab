//! Discrete truncated Wigner approximation for spin-1/2 chains.
//!
//! Every site of `|↑⟩` starts on one of the two phase points
//! `σ = (+1, +1, +1)` or `(−1, −1, +1)` with probability 1/2, and precesses
//! in its instantaneous mean field, `σ̇_i = 2 σ_i × b_i` with
//! `b_i = (h, 0, Σ_j J_ij σ_j^z)`. The kick rotates each site about z by
//! `2(K/N) Σ_{j≠i} σ_j^z`.
//!
//! The mirrored striation, `σ = (±1, ∓1, +1)`, describes the same state.
//! [`PhaseSpaceChoice::Symmetrized`] draws one of the two striations per
//! sample, which removes the spurious on-site `σ_x σ_y` correlation of the
//! single table.
//!
//! Sites that start on the same phase point see the same field whenever the
//! couplings are uniform, so at `α = 0` each sample reduces exactly to two
//! clusters and depends only on how many sites start on `(+1, +1, +1)`.

use std::collections::BTreeMap;

use faer::{Mat, Side};
use rand::Rng;
use rayon::prelude::*;

use crate::classical::KickParams;
use crate::dynamics::period_counts;
use crate::error::{Error, Result};
use crate::full_ed::CouplingMatrix;
use crate::ode::{self, Rk4};
use crate::record::{self, TimeSeriesRecord};
use crate::twa::sample_rng;

/// Initial discrete phase points of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpinEnsemble {
    n_spins: usize,
    n_samples: usize,
    seed: u64,
    /// `±1` per (sample, site): the sign of `σ_x`.
    signs: Vec<i8>,
    /// Per sample: `σ_y = −σ_x` instead of `σ_y = σ_x`.
    mirrored: Vec<bool>,
}

/// Which discrete phase space the initial points are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseSpaceChoice {
    /// The single table: `σ_y = σ_x` on every site.
    Table,
    /// Each sample picks the table or its mirror with probability 1/2.
    #[default]
    Symmetrized,
}

impl DiscreteSpinEnsemble {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Initial `σ` of one site.
    pub fn site(&self, sample: usize, i: usize) -> [f64; 3] {
        let s = f64::from(self.signs[sample * self.n_spins + i]);
        [s, if self.mirrored[sample] { -s } else { s }, 1.0]
    }

    pub fn sample_sites(&self, sample: usize) -> Vec<[f64; 3]> {
        (0..self.n_spins).map(|i| self.site(sample, i)).collect()
    }

    pub fn is_mirrored(&self, sample: usize) -> bool {
        self.mirrored[sample]
    }

    /// Number of sites of a sample with `σ_x = +1`.
    pub fn n_plus(&self, sample: usize) -> usize {
        self.signs[sample * self.n_spins..(sample + 1) * self.n_spins].iter().filter(|&&s| s > 0).count()
    }
}

/// Draws the initial phase points of `|↑…↑⟩` from the symmetrized phase space.
pub fn dtwa_sample(n_spins: usize, n_samples: usize, seed: u64) -> Result<DiscreteSpinEnsemble> {
    dtwa_sample_with(n_spins, n_samples, seed, PhaseSpaceChoice::default())
}

pub fn dtwa_sample_with(n_spins: usize, n_samples: usize, seed: u64, choice: PhaseSpaceChoice) -> Result<DiscreteSpinEnsemble> {
    if n_spins == 0 {
        return Err(Error::InvalidSystemSize { n: n_spins, reason: "at least one spin is required" });
    }
    if n_samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let mut signs = Vec::with_capacity(n_spins * n_samples);
    let mut mirrored = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let mut rng = sample_rng(seed, k as u64);
        mirrored.push(choice == PhaseSpaceChoice::Symmetrized && rng.random::<bool>());
        for _ in 0..n_spins {
            signs.push(if rng.random::<bool>() { 1 } else { -1 });
        }
    }
    Ok(DiscreteSpinEnsemble { n_spins, n_samples, seed, signs, mirrored })
}

/// Couplings driving the mean-field precession.
#[derive(Debug, Clone, PartialEq)]
pub enum DtwaCouplings {
    /// `J_ij = J/N` for all pairs; enables the exact two-cluster reduction.
    Uniform { j: f64 },
    Matrix(CouplingMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwaProtocol {
    pub couplings: DtwaCouplings,
    pub h: f64,
    /// With a kick, times are period counts.
    pub kick: Option<KickParams>,
}

/// Per-sample collective quantities at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleMoments {
    /// `Σ_i σ_i^a`.
    pub sum: [f64; 3],
    /// `Σ_i σ_i^a σ_i^b`.
    pub self_pair: [[f64; 3]; 3],
    /// `D = Σ_i (σ_i^x ∂/∂σ_i^y − σ_i^y ∂/∂σ_i^x) Σ_j σ_j^z(t)`.
    pub d: f64,
}

/// Groups of identical sites with multiplicities, coupled through `w`.
struct Clusters {
    counts: Vec<f64>,
    /// `b_g^z = Σ_h w[g][h] σ_h^z`.
    w: Vec<f64>,
    /// Kick angle `θ_g = Σ_h kw[g][h] σ_h^z`.
    kw: Vec<f64>,
    h: f64,
}

impl Clusters {
    fn groups(&self) -> usize {
        self.counts.len()
    }

    fn field_z(&self, coeffs: &[f64], y: &[f64], g: usize, tangent: bool) -> f64 {
        let gsz = self.groups();
        let off = if tangent { 3 * gsz } else { 0 };
        (0..gsz).map(|k| coeffs[g * gsz + k] * y[off + 3 * k + 2]).sum()
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        let g_n = self.groups();
        for g in 0..g_n {
            let s = &y[3 * g..3 * g + 3];
            let v = &y[3 * g_n + 3 * g..3 * g_n + 3 * g + 3];
            let bz = self.field_z(&self.w, y, g, false);
            let dbz = self.field_z(&self.w, y, g, true);
            let h = self.h;
            // 2 σ × b with b = (h, 0, bz)
            dy[3 * g] = 2.0 * s[1] * bz;
            dy[3 * g + 1] = 2.0 * (s[2] * h - s[0] * bz);
            dy[3 * g + 2] = -2.0 * s[1] * h;
            // 2 (δσ × b + σ × δb)
            let t = 3 * g_n + 3 * g;
            dy[t] = 2.0 * (v[1] * bz + s[1] * dbz);
            dy[t + 1] = 2.0 * (v[2] * h - v[0] * bz - s[0] * dbz);
            dy[t + 2] = -2.0 * v[1] * h;
        }
    }

    fn kick(&self, y: &mut [f64]) {
        let g_n = self.groups();
        let angles: Vec<f64> = (0..g_n).map(|g| 2.0 * self.field_z(&self.kw, y, g, false)).collect();
        let dangles: Vec<f64> = (0..g_n).map(|g| 2.0 * self.field_z(&self.kw, y, g, true)).collect();
        for g in 0..g_n {
            let (sn, cs) = angles[g].sin_cos();
            let (x, yy) = (y[3 * g], y[3 * g + 1]);
            let nx = cs * x - sn * yy;
            let ny = sn * x + cs * yy;
            y[3 * g] = nx;
            y[3 * g + 1] = ny;
            let t = 3 * g_n + 3 * g;
            let (vx, vy) = (y[t], y[t + 1]);
            y[t] = cs * vx - sn * vy - dangles[g] * ny;
            y[t + 1] = sn * vx + cs * vy + dangles[g] * nx;
        }
    }

    fn moments(&self, y: &[f64]) -> SampleMoments {
        let g_n = self.groups();
        let mut m = SampleMoments::default();
        for g in 0..g_n {
            let c = self.counts[g];
            let s = &y[3 * g..3 * g + 3];
            for a in 0..3 {
                m.sum[a] += c * s[a];
                for b in 0..3 {
                    m.self_pair[a][b] += c * s[a] * s[b];
                }
            }
            m.d += c * y[3 * g_n + 3 * g + 2];
        }
        m
    }

    fn initial(&self, spins: &[[f64; 3]]) -> Vec<f64> {
        let g_n = self.groups();
        let mut y = vec![0.0; 6 * g_n];
        for (g, s) in spins.iter().enumerate() {
            y[3 * g..3 * g + 3].copy_from_slice(s);
            y[3 * g_n + 3 * g] = -s[1];
            y[3 * g_n + 3 * g + 1] = s[0];
        }
        y
    }

    fn run(&self, spins: &[[f64; 3]], kick: Option<KickParams>, times: &[f64], dt: f64) -> Result<Vec<SampleMoments>> {
        let mut y = self.initial(spins);
        self.run_from(&mut y, kick, times, dt)
    }

    fn run_from(&self, y: &mut [f64], kick: Option<KickParams>, times: &[f64], dt: f64) -> Result<Vec<SampleMoments>> {
        let mut rk = Rk4::new(y.len());
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| self.rhs(y, dy);
        let mut out = Vec::with_capacity(times.len());
        match kick {
            None => {
                let mut t = 0.0;
                for &target in times {
                    rk.advance(&mut f, t, target, y, dt);
                    t = target;
                    out.push(self.moments(y));
                }
            }
            Some(kp) => {
                let mut done = 0;
                for k in period_counts(times)? {
                    while done < k {
                        rk.advance(&mut f, 0.0, kp.tau, y, dt);
                        self.kick(y);
                        done += 1;
                    }
                    out.push(self.moments(y));
                }
            }
        }
        if out.iter().any(|m| !m.d.is_finite() || !m.sum[2].is_finite()) {
            return Err(Error::numerical("DTWA trajectory overflowed"));
        }
        Ok(out)
    }
}

fn kick_strength(kick: Option<KickParams>) -> f64 {
    kick.map_or(0.0, |k| k.k)
}

/// Two clusters for uniform couplings.
fn cluster_system(n: usize, j: f64, h: f64, kick: Option<KickParams>, n_plus: usize, mirrored: bool) -> (Clusters, Vec<[f64; 3]>) {
    let sy = if mirrored { -1.0 } else { 1.0 };
    let mut counts = Vec::new();
    let mut spins = Vec::new();
    if n_plus > 0 {
        counts.push(n_plus as f64);
        spins.push([1.0, sy, 1.0]);
    }
    if n_plus < n {
        counts.push((n - n_plus) as f64);
        spins.push([-1.0, -sy, 1.0]);
    }
    let g_n = counts.len();
    let nf = n as f64;
    let k = kick_strength(kick);
    let mut w = vec![0.0; g_n * g_n];
    let mut kw = vec![0.0; g_n * g_n];
    for g in 0..g_n {
        for hh in 0..g_n {
            let others = counts[hh] - if g == hh { 1.0 } else { 0.0 };
            w[g * g_n + hh] = j / nf * others;
            kw[g * g_n + hh] = k / nf * others;
        }
    }
    (Clusters { counts, w, kw, h }, spins)
}

/// One group per site for arbitrary couplings.
fn site_system(couplings: &CouplingMatrix, h: f64, kick: Option<KickParams>) -> Clusters {
    let n = couplings.n();
    let nf = n as f64;
    let k = kick_strength(kick);
    let mut w = vec![0.0; n * n];
    let mut kw = vec![0.0; n * n];
    for i in 0..n {
        for jj in 0..n {
            w[i * n + jj] = couplings.get(i, jj);
            if i != jj {
                kw[i * n + jj] = k / nf;
            }
        }
    }
    Clusters { counts: vec![1.0; n], w, kw, h }
}

fn uniform_as_matrix(n: usize, j: f64) -> Result<CouplingMatrix> {
    let vals = (0..n * n).map(|x| if x / n == x % n { 0.0 } else { j / n as f64 }).collect();
    CouplingMatrix::from_values(n, vals)
}

/// How trajectories are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DtwaMode {
    /// Two-cluster reduction when couplings are uniform, per-site otherwise.
    #[default]
    Auto,
    /// Per-site integration regardless of couplings.
    PerSite,
}

/// Distinct trajectories with the number of samples that share each one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRuns {
    pub runs: Vec<Vec<SampleMoments>>,
    pub multiplicity: Vec<usize>,
}

impl WeightedRuns {
    pub fn n_samples(&self) -> usize {
        self.multiplicity.iter().sum()
    }
}

/// Moment series of every distinct trajectory, in a fixed order.
pub fn dtwa_moments(
    ensemble: &DiscreteSpinEnsemble,
    protocol: &DtwaProtocol,
    times: &[f64],
    dt: f64,
    mode: DtwaMode,
) -> Result<WeightedRuns> {
    ode::check_step(dt)?;
    record::check_grid(times)?;
    let n = ensemble.n_spins;
    match (&protocol.couplings, mode) {
        (DtwaCouplings::Uniform { j }, DtwaMode::Auto) => {
            // trajectories depend on the sample only through (n₊, striation)
            let mut counts: BTreeMap<(usize, bool), usize> = BTreeMap::new();
            for s in 0..ensemble.n_samples {
                *counts.entry((ensemble.n_plus(s), ensemble.mirrored[s])).or_default() += 1;
            }
            let keys: Vec<(usize, bool)> = counts.keys().copied().collect();
            let runs = keys
                .par_iter()
                .map(|&(np, mirrored)| {
                    let (sys, spins) = cluster_system(n, *j, protocol.h, protocol.kick, np, mirrored);
                    sys.run(&spins, protocol.kick, times, dt)
                })
                .collect::<Result<_>>()?;
            Ok(WeightedRuns { runs, multiplicity: counts.into_values().collect() })
        }
        (couplings, _) => {
            let matrix = match couplings {
                DtwaCouplings::Uniform { j } => uniform_as_matrix(n, *j)?,
                DtwaCouplings::Matrix(m) => {
                    if m.n() != n {
                        return Err(Error::Shape(format!("couplings for {} sites, ensemble has {n}", m.n())));
                    }
                    m.clone()
                }
            };
            let sys = site_system(&matrix, protocol.h, protocol.kick);
            let runs = (0..ensemble.n_samples)
                .into_par_iter()
                .map(|s| sys.run(&ensemble.sample_sites(s), protocol.kick, times, dt))
                .collect::<Result<_>>()?;
            Ok(WeightedRuns { runs, multiplicity: vec![1; ensemble.n_samples] })
        }
    }
}

/// Ensemble averages of the DTWA estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct DtwaSeries {
    pub mz: TimeSeriesRecord,
    pub fq: TimeSeriesRecord,
    pub fq_optimal: TimeSeriesRecord,
    pub cqt: TimeSeriesRecord,
}

/// Reduces the weighted runs sequentially in their fixed order.
pub fn dtwa_reduce(n_spins: usize, times: &[f64], runs: &WeightedRuns) -> Result<DtwaSeries> {
    if runs.n_samples() == 0 || runs.runs.len() != runs.multiplicity.len() {
        return Err(Error::domain("no samples to average"));
    }
    let nf = n_spins as f64;
    let inv = 1.0 / runs.n_samples() as f64;
    let mut mz = Vec::with_capacity(times.len());
    let mut fq = Vec::with_capacity(times.len());
    let mut fq_opt = Vec::with_capacity(times.len());
    let mut cqt = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        let mut selfp = [[0.0; 3]; 3];
        let mut d2 = 0.0;
        for (series, &mult) in runs.runs.iter().zip(&runs.multiplicity) {
            let w = mult as f64 * inv;
            let m = &series[k];
            for a in 0..3 {
                mean[a] += w * m.sum[a];
                for b in 0..3 {
                    second[a][b] += w * m.sum[a] * m.sum[b];
                    selfp[a][b] += w * m.self_pair[a][b];
                }
            }
            d2 += w * m.d * m.d;
        }
        // Weyl symbols: σ_i^a σ_j^b for i ≠ j, and (σ^a)² = 1 on each site
        let cov = Mat::from_fn(3, 3, |a, b| {
            let diag = if a == b { nf } else { 0.0 };
            0.25 * (second[a][b] - selfp[a][b] + diag) - 0.25 * mean[a] * mean[b]
        });
        mz.push(mean[2] / nf);
        fq.push((0..3).map(|a| 4.0 * cov[(a, a)] / nf).fold(f64::MIN, f64::max));
        let top = cov.self_adjoint_eigenvalues(Side::Lower).map(|v| v[2]).unwrap_or(f64::NAN);
        fq_opt.push(4.0 * top / nf);
        cqt.push(4.0 * d2 / nf.powi(4));
    }
    Ok(DtwaSeries {
        mz: TimeSeriesRecord::new("mz_dtwa", times.to_vec(), mz)?,
        fq: TimeSeriesRecord::new("fq_dtwa", times.to_vec(), fq)?,
        fq_optimal: TimeSeriesRecord::new("fq_opt_dtwa", times.to_vec(), fq_opt)?,
        cqt: TimeSeriesRecord::new("cqt_dtwa", times.to_vec(), cqt)?,
    })
}

/// Evolves an ensemble and returns all DTWA estimators.
pub fn dtwa_run(ensemble: &DiscreteSpinEnsemble, protocol: &DtwaProtocol, times: &[f64], dt: f64) -> Result<DtwaSeries> {
    let per = dtwa_moments(ensemble, protocol, times, dt, DtwaMode::Auto)?;
    dtwa_reduce(ensemble.n_spins, times, &per)
}

/// `f_Q(t)` from the ensemble.
pub fn dtwa_qfi(ensemble: &DiscreteSpinEnsemble, protocol: &DtwaProtocol, times: &[f64], dt: f64) -> Result<TimeSeriesRecord> {
    Ok(dtwa_run(ensemble, protocol, times, dt)?.fq)
}

/// `c(t) = (4/N⁴) ⟨D²⟩`.
pub fn dtwa_square_commutator(ensemble: &DiscreteSpinEnsemble, protocol: &DtwaProtocol, times: &[f64], dt: f64) -> Result<TimeSeriesRecord> {
    Ok(dtwa_run(ensemble, protocol, times, dt)?.cqt)
}

/// Per-site spin configurations of each sample at each time (`time × sample × site`).
pub fn dtwa_evolve(
    ensemble: &DiscreteSpinEnsemble,
    protocol: &DtwaProtocol,
    times: &[f64],
    dt: f64,
) -> Result<Vec<Vec<Vec<[f64; 3]>>>> {
    ode::check_step(dt)?;
    record::check_grid(times)?;
    let n = ensemble.n_spins;
    let matrix = match &protocol.couplings {
        DtwaCouplings::Uniform { j } => uniform_as_matrix(n, *j)?,
        DtwaCouplings::Matrix(m) => m.clone(),
    };
    let sys = site_system(&matrix, protocol.h, protocol.kick);
    let per_sample: Vec<Vec<Vec<[f64; 3]>>> = (0..ensemble.n_samples)
        .into_par_iter()
        .map(|s| -> Result<Vec<Vec<[f64; 3]>>> {
            let mut y = sys.initial(&ensemble.sample_sites(s));
            let mut rk = Rk4::new(y.len());
            let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| sys.rhs(y, dy);
            let snap = |y: &[f64]| (0..n).map(|i| [y[3 * i], y[3 * i + 1], y[3 * i + 2]]).collect::<Vec<_>>();
            let mut out = Vec::with_capacity(times.len());
            match protocol.kick {
                None => {
                    let mut t = 0.0;
                    for &target in times {
                        rk.advance(&mut f, t, target, &mut y, dt);
                        t = target;
                        out.push(snap(&y));
                    }
                }
                Some(kp) => {
                    let mut done = 0;
                    for k in period_counts(times)? {
                        while done < k {
                            rk.advance(&mut f, 0.0, kp.tau, &mut y, dt);
                            sys.kick(&mut y);
                            done += 1;
                        }
                        out.push(snap(&y));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok((0..times.len()).map(|k| per_sample.iter().map(|s| s[k].clone()).collect()).collect())
}

/// Finite-difference version of `D` for one sample, perturbing every site
/// along `(−σ^y, σ^x, 0)` by `±δ`.
pub fn finite_difference_d(
    ensemble: &DiscreteSpinEnsemble,
    sample: usize,
    protocol: &DtwaProtocol,
    times: &[f64],
    dt: f64,
    delta: f64,
) -> Result<Vec<f64>> {
    let n = ensemble.n_spins;
    let matrix = match &protocol.couplings {
        DtwaCouplings::Uniform { j } => uniform_as_matrix(n, *j)?,
        DtwaCouplings::Matrix(m) => m.clone(),
    };
    let sys = site_system(&matrix, protocol.h, protocol.kick);
    let base = ensemble.sample_sites(sample);
    let shifted = |eps: f64| -> Result<Vec<f64>> {
        let spins: Vec<[f64; 3]> = base.iter().map(|s| [s[0] - eps * s[1], s[1] + eps * s[0], s[2]]).collect();
        Ok(sys.run(&spins, protocol.kick, times, dt)?.iter().map(|m| m.sum[2]).collect())
    };
    let plus = shifted(delta)?;
    let minus = shifted(-delta)?;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * delta)).collect())
}

/// Variational `D` for one sample on the per-site path.
pub fn variational_d(ensemble: &DiscreteSpinEnsemble, sample: usize, protocol: &DtwaProtocol, times: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = ensemble.n_spins;
    let matrix = match &protocol.couplings {
        DtwaCouplings::Uniform { j } => uniform_as_matrix(n, *j)?,
        DtwaCouplings::Matrix(m) => m.clone(),
    };
    let sys = site_system(&matrix, protocol.h, protocol.kick);
    Ok(sys.run(&ensemble.sample_sites(sample), protocol.kick, times, dt)?.iter().map(|m| m.d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{flow_on_grid, BlochVector, FlowParams};

    fn quench(j: f64, h: f64) -> DtwaProtocol {
        DtwaProtocol { couplings: DtwaCouplings::Uniform { j }, h, kick: None }
    }

    #[test]
    fn initial_table() {
        let e = dtwa_sample(30, 2000, 1).unwrap();
        let mut sx = 0.0;
        for s in 0..e.n_samples() {
            for i in 0..e.n_spins() {
                let v = e.site(s, i);
                assert_eq!(v[2], 1.0);
                assert_eq!(v[0] * v[1], if e.is_mirrored(s) { -1.0 } else { 1.0 });
                assert_eq!(v[0] * v[0], 1.0);
                sx += v[0];
            }
        }
        let mean = sx / (30.0 * 2000.0);
        assert!(mean.abs() < 4.0 / (2000f64).sqrt());
    }

    #[test]
    fn identical_sites_follow_collective_flow() {
        // all sites on (+1,+1,+1): one cluster; rescaled it is the classical
        // flow with J(N−1)/N
        let n = 40;
        let (sys, spins) = cluster_system(n, 1.0, 2.0, None, n, false);
        let times: Vec<f64> = (0..=20).map(|k| 0.25 * k as f64).collect();
        let mut y = sys.initial(&spins);
        let mut rk = Rk4::new(y.len());
        let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| sys.rhs(y, dy);
        let r3 = 3f64.sqrt();
        let m0 = BlochVector::new(1.0 / r3, 1.0 / r3, 1.0 / r3);
        // |σ| = √3, so the field (J/N)(N−1)σ^z = J_eff √3 m_z
        let classical = flow_on_grid(m0, FlowParams::new(r3 * (n - 1) as f64 / n as f64, 2.0), &times, 1e-3).unwrap();
        let mut t = 0.0;
        for (k, &target) in times.iter().enumerate() {
            rk.advance(&mut f, t, target, &mut y, 1e-3);
            t = target;
            let m = classical.points[k];
            assert!((y[0] / r3 - m.x).abs() < 1e-9);
            assert!((y[2] / r3 - m.z).abs() < 1e-9);
        }
    }

    #[test]
    fn clusters_match_per_site_integration() {
        let n = 12;
        let e = dtwa_sample(n, 6, 4).unwrap();
        let times = [0.0, 0.5, 1.5, 3.0];
        let kicked = DtwaProtocol {
            couplings: DtwaCouplings::Uniform { j: 1.0 },
            h: 2.0,
            kick: Some(KickParams::new(3.0, 0.5).unwrap()),
        };
        for (p, grid) in [(quench(1.0, 2.0), &times[..]), (kicked, &[0.0, 1.0, 2.0, 4.0][..])] {
            let a = dtwa_moments(&e, &p, grid, 1e-3, DtwaMode::Auto).unwrap();
            let b = dtwa_moments(&e, &p, grid, 1e-3, DtwaMode::PerSite).unwrap();
            assert_eq!(a.n_samples(), b.n_samples());
            let sa = dtwa_reduce(n, grid, &a).unwrap();
            let sb = dtwa_reduce(n, grid, &b).unwrap();
            for (x, y) in [(&sa.mz, &sb.mz), (&sa.cqt, &sb.cqt), (&sa.fq, &sb.fq)] {
                for (u, v) in x.values.iter().zip(&y.values) {
                    assert!((u - v).abs() < 1e-9 * u.abs().max(1e-3), "{u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn per_site_norm_conserved() {
        let e = dtwa_sample(8, 3, 2).unwrap();
        let c = CouplingMatrix::power_law(8, 1.5, 1.0, crate::full_ed::Boundary::Open).unwrap();
        let p = DtwaProtocol { couplings: DtwaCouplings::Matrix(c), h: 0.75, kick: None };
        let snaps = dtwa_evolve(&e, &p, &[0.0, 5.0, 20.0], 1e-3).unwrap();
        for snap in &snaps {
            for sample in snap {
                for s in sample {
                    let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                    assert!((r - 3f64.sqrt()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn estimators_at_time_zero() {
        let n = 50;
        let e = dtwa_sample(n, 4000, 9).unwrap();
        let s = dtwa_run(&e, &quench(1.0, 2.0), &[0.0], 1e-3).unwrap();
        assert!((s.mz.values[0] - 1.0).abs() < 1e-12);
        assert!(s.cqt.values[0].abs() < 1e-12);
        assert!((s.fq.values[0] - 1.0).abs() < 0.1);
    }

    #[test]
    fn short_time_commutator_law() {
        let n = 100;
        let e = dtwa_sample(n, 4000, 12).unwrap();
        let t = 0.02;
        let c = dtwa_square_commutator(&e, &quench(1.0, 2.0), &[0.0, t], 1e-3).unwrap();
        let exact = 16.0 * 4.0 * t * t / (n as f64).powi(3);
        assert!((c.values[1] / exact - 1.0).abs() < 0.05, "{}", c.values[1] / exact);
    }

    #[test]
    fn variational_matches_finite_difference() {
        let e = dtwa_sample(10, 2, 5).unwrap();
        let c = CouplingMatrix::power_law(10, 0.5, 1.0, crate::full_ed::Boundary::Open).unwrap();
        let p = DtwaProtocol { couplings: DtwaCouplings::Matrix(c), h: 0.75, kick: None };
        let times = [0.0, 1.0, 3.0, 5.0];
        let var = variational_d(&e, 0, &p, &times, 1e-3).unwrap();
        let fd = finite_difference_d(&e, 0, &p, &times, 1e-3, 1e-6).unwrap();
        for (a, b) in var.iter().zip(&fd).skip(1) {
            assert!((a - b).abs() < 1e-4 * a.abs().max(1e-2), "{a} vs {b}");
        }
    }
}
