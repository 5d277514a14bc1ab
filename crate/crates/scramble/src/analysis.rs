//! Derived quantities shared by the figure recipes and the acceptance checks.

use scramble_core::collective::{build_floquet, build_lmg_hamiltonian, DickeState};
use scramble_core::dynamics::{evolve_kicked, qfi, square_commutator, Generator, Propagator, QuenchPlan};
use scramble_core::entanglement::{block_entropy, tmi, BlockPartition};
use scramble_core::fit::{fit_exponential, fit_power_law, Fit};
use scramble_core::record::uniform_grid;
use scramble_core::{Error, Result, TimeSeriesRecord};

/// Exact `c(t)` after a quench `h0 → hf` from the ground state at `h0`.
pub fn ed_square_commutator(n: usize, j: f64, h0: f64, hf: f64, times: &[f64]) -> Result<TimeSeriesRecord> {
    let psi0 = QuenchPlan::new(h0, hf, j, times.to_vec())?.initial_state(n)?;
    let ham = build_lmg_hamiltonian(n, j, hf)?;
    square_commutator(&psi0, Generator::Hamiltonian(&ham), times)
}

/// `f_Q(t)` after a quench from `|↑…↑⟩`, without storing the states.
pub fn ed_qfi_series(n: usize, j: f64, hf: f64, times: &[f64]) -> Result<TimeSeriesRecord> {
    let psi0 = DickeState::polarized_up(n)?;
    let prop = Propagator::new(&build_lmg_hamiltonian(n, j, hf)?)?;
    let c0 = prop.to_eigenbasis(psi0.amplitudes());
    let values = times
        .iter()
        .map(|&t| Ok(qfi(&DickeState::from_amplitudes(n, prop.from_eigenbasis(&prop.phase(&c0, t)))?).f_q))
        .collect::<Result<Vec<f64>>>()?;
    TimeSeriesRecord::new("fq", times.to_vec(), values)
}

/// Window of the early power-law fit.
pub const EARLY_WINDOW: (f64, f64) = (0.01, 0.1);
/// Times over which the `N³ c(t)` collapse is checked.
pub const COLLAPSE_T_MAX: f64 = 1.0;

/// Fits of the regular quench at one `N`.
#[derive(Debug, Clone)]
pub struct RegularQuench {
    pub n: usize,
    pub early: Fit,
    /// `N³ c(t)` on `(0, COLLAPSE_T_MAX]`.
    pub scaled: TimeSeriesRecord,
    pub post_window: (f64, f64),
    pub post: Fit,
    pub late: TimeSeriesRecord,
}

/// `t* = N/2`, well before the first revival.
pub fn post_ehrenfest_window(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (2.0 * nf.sqrt(), nf / 2.0)
}

pub fn regular_quench(n: usize, j: f64, hf: f64) -> Result<RegularQuench> {
    let early_times = uniform_grid(COLLAPSE_T_MAX, 0.005)?;
    let early_c = ed_square_commutator(n, j, 0.0, hf, &early_times)?;
    let early = fit_power_law(&early_c, EARLY_WINDOW.0, EARLY_WINDOW.1)?;
    let n3 = (n as f64).powi(3);
    let scaled = TimeSeriesRecord::new("n3_cqt", early_times, early_c.values.iter().map(|v| v * n3).collect())?;
    let post_window = post_ehrenfest_window(n);
    let late = ed_square_commutator(n, j, 0.0, hf, &uniform_grid(post_window.1, 0.1)?)?;
    let post = fit_power_law(&late, post_window.0, post_window.1)?;
    Ok(RegularQuench { n, early, scaled, post_window, post, late })
}

/// Spread of scaled curves sharing a grid over the points with `t ≥ t_min`.
#[derive(Debug, Clone, Copy)]
pub struct Spread {
    /// Largest `max − min` divided by the peak of the mean curve.
    pub peak: f64,
    /// Largest pointwise `(max − min)/mean`.
    pub pointwise: f64,
}

pub fn collapse_spread(curves: &[&TimeSeriesRecord], t_min: f64) -> Result<Spread> {
    let first = curves.first().ok_or_else(|| Error::domain("no curves"))?;
    let (mut width, mut top, mut pointwise) = (0.0f64, 0.0f64, 0.0f64);
    for i in (0..first.len()).filter(|&i| first.times[i] >= t_min) {
        let vals: Vec<f64> = curves.iter().map(|c| c.values[i]).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        width = width.max(hi - lo);
        top = top.max(mean.abs());
        if mean > 0.0 {
            pointwise = pointwise.max((hi - lo) / mean);
        }
    }
    if top == 0.0 {
        return Err(Error::domain("scaled curves vanish on the window"));
    }
    Ok(Spread { peak: width / top, pointwise })
}

/// Time averages of `f_Q` over the decades `[√N, 10√N]` and `[10√N, 100√N]`.
#[derive(Debug, Clone, Copy)]
pub struct DecadeDrift {
    pub first: f64,
    pub second: f64,
}

impl DecadeDrift {
    pub fn drift(&self) -> f64 {
        ((self.second - self.first) / self.first).abs()
    }
}

pub fn qfi_decade_drift(n: usize, j: f64, hf: f64) -> Result<DecadeDrift> {
    let t0 = (n as f64).sqrt();
    let times: Vec<f64> = uniform_grid(100.0 * t0, 0.1)?.into_iter().filter(|&t| t >= t0).collect();
    let fq = ed_qfi_series(n, j, hf, &times)?;
    Ok(DecadeDrift { first: fq.time_average(t0, 10.0 * t0)?, second: fq.time_average(10.0 * t0, 100.0 * t0)? })
}

/// `[1, ln N]` for the exponential fit near the unstable point.
pub fn dpt_window(n: usize) -> (f64, f64) {
    (1.0, (n as f64).ln())
}

/// Saturation of a kicked `c(n)`.
#[derive(Debug, Clone, Copy)]
pub struct Saturation {
    /// Mean over the second half of the run.
    pub plateau: f64,
    /// First period with `c ≥ 0.9 × plateau`.
    pub t_sat: f64,
    /// Relative change between the two halves of `[t_sat, 11 t_sat]`.
    pub drift: f64,
}

pub fn saturation(c: &TimeSeriesRecord) -> Result<Saturation> {
    let t_end = *c.times.last().ok_or_else(|| Error::domain("empty series"))?;
    let plateau = c.time_average(t_end / 2.0, t_end)?;
    let t_sat = c
        .iter()
        .find(|&(_, v)| v >= 0.9 * plateau)
        .map(|(t, _)| t)
        .ok_or_else(|| Error::numerical("c(t) never reaches 90% of its plateau"))?
        .max(1.0);
    let t_mid = 6.0 * t_sat;
    let t_far = 11.0 * t_sat;
    if t_far > t_end {
        return Err(Error::domain(format!("run of {t_end} periods is shorter than 11 t_sat = {t_far}")));
    }
    let a = c.time_average(t_sat, t_mid)?;
    let b = c.time_average(t_mid, t_far)?;
    Ok(Saturation { plateau, t_sat, drift: ((b - a) / a).abs() })
}

/// Time-averaged diagnostics of a kicked run.
#[derive(Debug, Clone)]
pub struct KickedAverages {
    pub cqt: TimeSeriesRecord,
    pub fq: TimeSeriesRecord,
    pub entropies: Vec<(usize, TimeSeriesRecord)>,
    pub i3: TimeSeriesRecord,
    pub blocks: (usize, usize, usize),
}

pub fn kicked_run(
    n: usize,
    j: f64,
    h: f64,
    k: f64,
    tau: f64,
    n_periods: usize,
    block_lengths: &[usize],
    blocks: (usize, usize, usize),
) -> Result<KickedAverages> {
    let u = build_floquet(n, j, h, k, tau)?;
    let psi0 = DickeState::polarized_up(n)?;
    let states = evolve_kicked(&psi0, &u, n_periods)?;
    let times: Vec<f64> = (0..=n_periods).map(|p| p as f64).collect();
    let cqt = square_commutator(&psi0, Generator::Floquet(&u), &times)?;
    let fq = TimeSeriesRecord::new("fq", times.clone(), states.iter().map(|s| qfi(s).f_q).collect())?;
    let entropies = block_lengths
        .iter()
        .map(|&l| {
            let v = states.iter().map(|s| block_entropy(s, l)).collect::<Result<Vec<_>>>()?;
            Ok((l, TimeSeriesRecord::new(format!("s_{l}"), times.clone(), v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let part = BlockPartition::new(n, blocks.0, blocks.1, blocks.2)?;
    let i3 = TimeSeriesRecord::new("tmi", times, states.iter().map(|s| tmi(s, part)).collect::<Result<Vec<_>>>()?)?;
    Ok(KickedAverages { cqt, fq, entropies, i3, blocks })
}

/// Exponential rate of a kicked `c(n)` on `[1, t_sat − 1]`.
pub fn kicked_growth(c: &TimeSeriesRecord, sat: &Saturation) -> Result<Fit> {
    fit_exponential(c, 1.0, (sat.t_sat - 1.0).max(2.0))
}

/// Plateau of `f_Q^z / N = 4 Var(Ŝ_z) / N²` after a quench from `|↑…↑⟩`,
/// averaged over `[t0, t1]`.
pub fn qfi_z_plateau(n: usize, j: f64, hf: f64, t0: f64, t1: f64, dt: f64) -> Result<f64> {
    let psi0 = DickeState::polarized_up(n)?;
    let prop = Propagator::new(&build_lmg_hamiltonian(n, j, hf)?)?;
    let c0 = prop.to_eigenbasis(psi0.amplitudes());
    let times: Vec<f64> = uniform_grid(t1, dt)?.into_iter().filter(|&t| t >= t0).collect();
    let mut acc = 0.0;
    for &t in &times {
        let s = DickeState::from_amplitudes(n, prop.from_eigenbasis(&prop.phase(&c0, t)))?;
        acc += qfi(&s).per_axis[2];
    }
    Ok(acc / (times.len() as f64 * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturation_of_a_step() {
        let t: Vec<f64> = (0..=200).map(|k| k as f64).collect();
        let v = t.iter().map(|&x| if x < 5.0 { 0.1 * x } else { 1.0 }).collect();
        let s = saturation(&TimeSeriesRecord::new("c", t, v).unwrap()).unwrap();
        assert_eq!(s.t_sat, 5.0);
        assert_eq!(s.plateau, 1.0);
        assert!(s.drift < 1e-12);
    }

    #[test]
    fn spread_of_identical_curves() {
        let r = TimeSeriesRecord::new("c", vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let r2 = TimeSeriesRecord::new("c", vec![0.0, 1.0], vec![1.1, 2.0]).unwrap();
        assert_eq!(collapse_spread(&[&r, &r], 0.0).unwrap().peak, 0.0);
        let s = collapse_spread(&[&r, &r2], 0.0).unwrap();
        assert!((s.pointwise - 0.1 / 1.05).abs() < 1e-12);
        assert!((s.peak - 0.05).abs() < 1e-12);
    }

    #[test]
    fn early_exponent_small_n() {
        let r = regular_quench(20, 1.0, 2.0).unwrap();
        assert!((r.early.exponent - 2.0).abs() < 0.05, "{}", r.early.exponent);
    }
}
