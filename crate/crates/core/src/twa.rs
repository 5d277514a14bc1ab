//! Truncated Wigner approximation on the collective sphere.
//!
//! The polarized state `|↑…↑⟩` has a Gaussian Wigner function around the
//! north pole with `⟨m_x²⟩ = ⟨m_y²⟩ = 1/N`. Each sample is evolved with the
//! classical flow (and kicks), and averages over samples approximate quantum
//! expectation values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::classical::{self, BlochVector, FlowParams, KickParams};
use crate::dynamics::period_counts;
use crate::error::{Error, Result};
use crate::ode::{self, Rk4};
use crate::record::{self, TimeSeriesRecord};

/// One phase-space point with its Monte Carlo weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwaSample {
    pub m0: BlochVector,
    pub weight: f64,
}

/// Per-sample generator: one ChaCha stream per sample index, so draws do not
/// depend on how samples are scheduled.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws `n_samples` points from the Wigner function of `|↑…↑⟩`.
pub fn twa_sample(n_spins: usize, n_samples: usize, seed: u64) -> Result<Vec<TwaSample>> {
    if n_spins == 0 {
        return Err(Error::InvalidSystemSize { n: n_spins, reason: "at least one spin is required" });
    }
    if n_samples == 0 {
        return Err(Error::domain("need at least one sample"));
    }
    let sigma = (1.0 / n_spins as f64).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
    let weight = 1.0 / n_samples as f64;
    Ok((0..n_samples)
        .map(|k| {
            let mut rng = sample_rng(seed, k as u64);
            loop {
                let x: f64 = normal.sample(&mut rng);
                let y: f64 = normal.sample(&mut rng);
                let r2 = x * x + y * y;
                if r2 <= 1.0 {
                    break TwaSample { m0: BlochVector::new(x, y, (1.0 - r2).sqrt()), weight };
                }
            }
        })
        .collect())
}

/// Collective dynamics driving each sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Continuous flow; times are physical times.
    Quench(FlowParams),
    /// Flow for `τ` then kick; times are period counts.
    Kicked(FlowParams, KickParams),
}

/// Trajectory of `m` and of the tangent seeded along `∂m/∂P(0)`, on the output grid.
fn sample_track(m0: BlochVector, protocol: Protocol, times: &[f64], dt: f64) -> Result<Vec<[f64; 6]>> {
    let dir = classical::momentum_direction(&m0);
    let mut y = [m0.x, m0.y, m0.z, dir[0], dir[1], dir[2]];
    let mut rk = Rk4::new(6);
    let mut out = Vec::with_capacity(times.len());
    match protocol {
        Protocol::Quench(params) => {
            let mut t = 0.0;
            for &target in times {
                classical::flow_tangent(params, &mut y, target - t, dt, &mut rk);
                t = target;
                out.push(y);
            }
        }
        Protocol::Kicked(params, kick) => {
            let steps = period_counts(times)?;
            let mut done = 0;
            for &k in &steps {
                while done < k {
                    classical::flow_tangent(params, &mut y, kick.tau, dt, &mut rk);
                    let (m, v) = y.split_at_mut(3);
                    kick.apply(m, Some(v));
                    done += 1;
                }
                out.push(y);
            }
        }
    }
    Ok(out)
}

/// Evolves every sample and returns the per-sample tracks in sample order.
fn all_tracks(samples: &[TwaSample], protocol: Protocol, times: &[f64], dt: f64) -> Result<Vec<Vec<[f64; 6]>>> {
    ode::check_step(dt)?;
    record::check_grid(times)?;
    samples.par_iter().map(|s| sample_track(s.m0, protocol, times, dt)).collect()
}

/// Weighted average of `f(m(t))` over the samples.
pub fn twa_observable<F>(samples: &[TwaSample], protocol: Protocol, times: &[f64], dt: f64, f: F) -> Result<TimeSeriesRecord>
where
    F: Fn(&BlochVector) -> f64 + Sync,
{
    let tracks = all_tracks(samples, protocol, times, dt)?;
    let mut values = vec![0.0; times.len()];
    for (s, track) in samples.iter().zip(&tracks) {
        for (v, y) in values.iter_mut().zip(track) {
            *v += s.weight * f(&BlochVector::new(y[0], y[1], y[2]));
        }
    }
    TimeSeriesRecord::new("twa", times.to_vec(), values)
}

/// Estimator `c(t) = κ ħ_eff² ⟨{Q(t), Q(0)}²⟩` with `ħ_eff = 1/N` and a calibration
/// constant `κ` (1 reproduces the exact short-time law `16h²t²/N³`).
pub fn twa_square_commutator(
    samples: &[TwaSample],
    n_spins: usize,
    protocol: Protocol,
    times: &[f64],
    dt: f64,
    calibration: f64,
) -> Result<TimeSeriesRecord> {
    let tracks = all_tracks(samples, protocol, times, dt)?;
    let hbar = 1.0 / n_spins as f64;
    let mut values = vec![0.0; times.len()];
    let mut flagged = 0usize;
    let mut total_weight = 0.0;
    for (s, track) in samples.iter().zip(&tracks) {
        if track.iter().any(|y| !y[5].is_finite() || y[5].abs() > 1e150) {
            flagged += 1;
            continue;
        }
        total_weight += s.weight;
        for (v, y) in values.iter_mut().zip(track) {
            *v += s.weight * y[5] * y[5];
        }
    }
    if total_weight == 0.0 {
        return Err(Error::numerical("every TWA sample overflowed its tangent"));
    }
    for v in &mut values {
        *v *= calibration * hbar * hbar / total_weight;
    }
    Ok(TimeSeriesRecord::new("cqt_twa", times.to_vec(), values)?.with_meta("flagged_samples", flagged))
}

/// Ratio of an exact `c(t)` to an estimator on the points of `[t0, t1]`,
/// averaged in log space.
pub fn calibration_ratio(exact: &TimeSeriesRecord, estimate: &TimeSeriesRecord, t0: f64, t1: f64) -> Result<f64> {
    let mut acc = 0.0;
    let mut count = 0usize;
    for ((&te, &ve), (&ts, &vs)) in exact.times.iter().zip(&exact.values).zip(estimate.times.iter().zip(&estimate.values)) {
        if (te - ts).abs() > 1e-9 {
            return Err(Error::Shape("calibration needs matching time grids".into()));
        }
        if te >= t0 && te <= t1 && ve > 0.0 && vs > 0.0 {
            acc += (ve / vs).ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Shape(format!("no positive points in [{t0}, {t1}]")));
    }
    Ok((acc / count as f64).exp())
}
