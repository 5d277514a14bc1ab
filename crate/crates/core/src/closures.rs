//! Closed hierarchies for the square commutator valid up to the Ehrenfest time.
//!
//! The cumulant closure propagates the symmetric matrix
//! `c_ab(t) = −⟨[m_a(t), m_z][m_b(t), m_z]⟩` together with the classical
//! magnetization. With second-order cumulants of `m` dropped, the commutators
//! evolve with the Jacobian of the classical flow, `ċ = L c + c Lᵀ`.
//!
//! The Holstein–Primakoff scheme follows the classical spin in a rotating
//! frame and propagates the Gaussian fluctuations `Δ^{qq}, Δ^{pp}, Δ^{qp}` of
//! the zero mode. The frame is set up with the Ising axis along `x` and the
//! field along `z`, so the initial polarized state sits at `θ = π/2, φ = 0`
//! away from the coordinate pole.

use crate::classical::{BlochVector, FlowParams};
use crate::error::{Error, Result};
use crate::ode;
use crate::record::{self, TimeSeriesRecord};

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosureForm {
    /// Equations obtained from the Jacobian of the classical flow.
    #[default]
    Derived,
    /// A variant whose coefficients differ from the Jacobian in three of the
    /// six cumulant equations. Kept for comparison.
    Alternate,
}

/// Commutator moments and the classical magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorPairState {
    pub c_zz: f64,
    pub c_zy: f64,
    pub c_yy: f64,
    pub c_xy: f64,
    pub c_xz: f64,
    pub c_xx: f64,
    pub m: BlochVector,
}

impl CommutatorPairState {
    /// Equal-time values on the spin coherent state along `m0`.
    pub fn initial(n_spins: usize, m0: BlochVector) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::InvalidSystemSize { n: n_spins, reason: "at least one spin is required" });
        }
        if (m0.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("initial magnetization must be a unit vector, |m| = {}", m0.norm())));
        }
        let nf = n_spins as f64;
        let m = m0.to_array();
        // ⟨m_c m_d⟩ = m_c m_d + (δ_cd − m_c m_d)/N on a coherent state
        let second = |c: usize, d: usize| m[c] * m[d] + (if c == d { 1.0 } else { 0.0 } - m[c] * m[d]) / nf;
        // [m_a, m_z] = (2i/N) ε_{a z c} m_c: x ↦ −m_y, y ↦ +m_x, z ↦ 0
        let legs: [&[(usize, f64)]; 3] = [&[(1, -1.0)], &[(0, 1.0)], &[]];
        let pair = |a: usize, b: usize| {
            let mut acc = 0.0;
            for &(c, sc) in legs[a] {
                for &(d, sd) in legs[b] {
                    acc += sc * sd * second(c, d);
                }
            }
            4.0 / (nf * nf) * acc
        };
        Ok(Self {
            c_zz: pair(2, 2),
            c_zy: pair(2, 1),
            c_yy: pair(1, 1),
            c_xy: pair(0, 1),
            c_xz: pair(0, 2),
            c_xx: pair(0, 0),
            m: m0,
        })
    }

    fn to_vec(self) -> [f64; 9] {
        [self.m.x, self.m.y, self.m.z, self.c_zz, self.c_zy, self.c_yy, self.c_xy, self.c_xz, self.c_xx]
    }

    fn from_vec(y: &[f64]) -> Self {
        Self {
            m: BlochVector::new(y[0], y[1], y[2]),
            c_zz: y[3],
            c_zy: y[4],
            c_yy: y[5],
            c_xy: y[6],
            c_xz: y[7],
            c_xx: y[8],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.c_xx, self.c_xy, self.c_xz],
            [self.c_xy, self.c_yy, self.c_zy],
            [self.c_xz, self.c_zy, self.c_zz],
        ]
    }
}

fn cumulant_rhs(params: FlowParams, form: ClosureForm, y: &[f64], dy: &mut [f64]) {
    let (j, h) = (params.j, params.h);
    let v = params.velocity(&y[..3]);
    dy[..3].copy_from_slice(&v);
    let (mx, my, mz) = (y[0], y[1], y[2]);
    let (zz, zy, yy, xy, xz, xx) = (y[3], y[4], y[5], y[6], y[7], y[8]);
    match form {
        ClosureForm::Derived => {
            let l = params.jacobian(&y[..3]);
            let c = CommutatorPairState::from_vec(y).matrix();
            let mut lc = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    lc[a][b] = (0..3).map(|k| l[a][k] * c[k][b]).sum();
                }
            }
            let d = |a: usize, b: usize| lc[a][b] + lc[b][a];
            dy[3] = d(2, 2);
            dy[4] = d(2, 1);
            dy[5] = d(1, 1);
            dy[6] = d(0, 1);
            dy[7] = d(0, 2);
            dy[8] = d(0, 0);
        }
        ClosureForm::Alternate => {
            dy[3] = -4.0 * h * zy;
            dy[4] = -2.0 * h * yy + 2.0 * h * zz - 2.0 * j * (zz * mz + xz * mx);
            dy[5] = 4.0 * h * zy - 4.0 * j * (xy * mz + xy * mz);
            dy[6] = 2.0 * h * xz - 2.0 * j * (xx * mz + xz * mx) + 2.0 * j * (yy * mz + zy * my);
            dy[7] = -2.0 * h * xy + 2.0 * j * (zz * my + zy * mz);
            dy[8] = 2.0 * j * (xz * my + xy * mz);
        }
    }
}

/// Full closure trajectory on `times`.
pub fn cumulant_closure_states(
    n_spins: usize,
    params: FlowParams,
    m0: BlochVector,
    times: &[f64],
    dt: f64,
    form: ClosureForm,
) -> Result<Vec<CommutatorPairState>> {
    let y0 = CommutatorPairState::initial(n_spins, m0)?.to_vec();
    let rows = ode::integrate_on_grid(&mut |_t, y: &[f64], dy: &mut [f64]| cumulant_rhs(params, form, y, dy), &y0, times, dt, |y| {
        CommutatorPairState::from_vec(y)
    })?;
    Ok(rows)
}

/// `c(t) = c_zz(t)` from the cumulant closure.
pub fn cumulant_closure_c(
    n_spins: usize,
    params: FlowParams,
    m0: BlochVector,
    times: &[f64],
    dt: f64,
    form: ClosureForm,
) -> Result<TimeSeriesRecord> {
    let states = cumulant_closure_states(n_spins, params, m0, times, dt, form)?;
    if let Some((t, s)) = times.iter().zip(&states).find(|(_, s)| s.c_zz < -1e-12) {
        return Err(Error::numerical(format!("closure produced c_zz = {} < 0 at t = {t}", s.c_zz)));
    }
    TimeSeriesRecord::new("cqt_cumulant", times.to_vec(), states.iter().map(|s| s.c_zz).collect())
}

/// Rotating-frame angles and zero-mode fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrameState {
    pub theta: f64,
    pub phi: f64,
    pub delta_qq: f64,
    pub delta_pp: f64,
    pub delta_qp: f64,
}

impl RotatingFrameState {
    /// Gaussian vacuum at the given frame angles.
    pub fn vacuum(theta: f64, phi: f64) -> Self {
        Self { theta, phi, delta_qq: 0.5, delta_pp: 0.5, delta_qp: 0.0 }
    }

    /// `Δ^{qq}Δ^{pp} − (Δ^{qp})²`, at least 1/4 for a physical state.
    pub fn uncertainty(&self) -> f64 {
        self.delta_qq * self.delta_pp - self.delta_qp * self.delta_qp
    }

    /// Unscaled assembly `sin²φ Δ^{pp} + cos²θ cos²φ Δ^{qq} − 2 cosθ sinφ cosφ Δ^{qp}`.
    pub fn assembly(&self) -> f64 {
        let ct = self.theta.cos();
        let (sp, cp) = self.phi.sin_cos();
        sp * sp * self.delta_pp + ct * ct * cp * cp * self.delta_qq - 2.0 * ct * sp * cp * self.delta_qp
    }
}

/// Prefactor mapping the assembly onto `c(t)`: fluctuations with `Δ = 1/2`
/// correspond to `⟨δm²⟩ = 1/N`, and the commutator adds `(2/N)²`.
pub fn hp_prefactor(n_spins: usize) -> f64 {
    8.0 / (n_spins as f64).powi(3)
}

fn hp_rhs(j: f64, h: f64, form: ClosureForm, y: &[f64], dy: &mut [f64]) {
    let (theta, phi) = (y[0], y[1]);
    let (qq, pp, qp) = (y[2], y[3], y[4]);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let theta_dot = 2.0 * j * st * cp * sp;
    let phi_dot = -2.0 * h + 2.0 * j * ct * cp * cp;
    dy[0] = theta_dot;
    dy[1] = phi_dot;
    match form {
        ClosureForm::Alternate => {
            dy[2] = 4.0 * j * ct * sp * cp * qq + 4.0 * j * (cp * cp - sp * sp) * qp;
            dy[3] = -4.0 * j * ct * sp * cp * pp - 4.0 * j * cp * cp * st * st * qp;
            dy[4] = -2.0 * j * cp * cp * st * st * qq + 2.0 * j * (cp * cp - sp * sp) * pp;
        }
        ClosureForm::Derived => {
            // flow with Ising axis x and field z: ṁ = (2h m_y, −2h m_x + 2J m_x m_z, −2J m_x m_y)
            let m = [st * cp, st * sp, ct];
            let l = [
                [0.0, 2.0 * h, 0.0],
                [-2.0 * h + 2.0 * j * m[2], 0.0, 2.0 * j * m[0]],
                [-2.0 * j * m[1], -2.0 * j * m[0], 0.0],
            ];
            let e_q = [ct * cp, ct * sp, -st];
            let e_p = [-sp, cp, 0.0];
            let form_l = |u: &[f64; 3], v: &[f64; 3]| -> f64 {
                (0..3).map(|a| u[a] * (0..3).map(|b| l[a][b] * v[b]).sum::<f64>()).sum()
            };
            // the tangent basis turns about m at rate φ̇ cosθ
            let a_qq = form_l(&e_q, &e_q);
            let a_qp = form_l(&e_q, &e_p) + phi_dot * ct;
            let a_pq = form_l(&e_p, &e_q) - phi_dot * ct;
            let a_pp = form_l(&e_p, &e_p);
            dy[2] = 2.0 * (a_qq * qq + a_qp * qp);
            dy[3] = 2.0 * (a_pq * qp + a_pp * pp);
            dy[4] = a_qq * qp + a_qp * pp + a_pq * qq + a_pp * qp;
        }
    }
}

/// Rotating-frame trajectory on `times`.
pub fn holstein_primakoff_states(
    j: f64,
    h: f64,
    start: RotatingFrameState,
    times: &[f64],
    dt: f64,
    form: ClosureForm,
) -> Result<Vec<RotatingFrameState>> {
    let y0 = [start.theta, start.phi, start.delta_qq, start.delta_pp, start.delta_qp];
    ode::integrate_on_grid(&mut |_t, y: &[f64], dy: &mut [f64]| hp_rhs(j, h, form, y, dy), &y0, times, dt, |y| RotatingFrameState {
        theta: y[0],
        phi: y[1],
        delta_qq: y[2],
        delta_pp: y[3],
        delta_qp: y[4],
    })
}

/// `c(t)` from the Gaussian spin-wave scheme, starting from the vacuum at
/// `(θ₀, φ₀)` in the rotated frame (`π/2, 0` is the polarized state).
pub fn holstein_primakoff_c(
    n_spins: usize,
    j: f64,
    h: f64,
    theta0: f64,
    phi0: f64,
    times: &[f64],
    dt: f64,
    form: ClosureForm,
) -> Result<TimeSeriesRecord> {
    if n_spins == 0 {
        return Err(Error::InvalidSystemSize { n: n_spins, reason: "at least one spin is required" });
    }
    let states = holstein_primakoff_states(j, h, RotatingFrameState::vacuum(theta0, phi0), times, dt, form)?;
    let scale = hp_prefactor(n_spins);
    TimeSeriesRecord::new("cqt_hp", times.to_vec(), states.iter().map(|s| scale * s.assembly()).collect())
}

/// Trailing moving average over `window` time units (pointwise for `window = 0`).
pub fn trailing_average(record: &TimeSeriesRecord, window: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(record.len());
    let mut start = 0;
    let mut acc = 0.0;
    for (i, (&t, &v)) in record.times.iter().zip(&record.values).enumerate() {
        acc += v;
        while record.times[start] < t - window - 1e-9 {
            acc -= record.values[start];
            start += 1;
        }
        out.push(acc / (i - start + 1) as f64);
    }
    out
}

/// First time at which the trailing average of `method` over `window`
/// deviates from that of `reference` by more than `threshold` (relative).
/// Averaging over one oscillation period removes the nodes of oscillating
/// signals, where pointwise ratios are meaningless. Points where the
/// averaged reference is below `1e-6` of its maximum are skipped. Returns
/// the last common time if no deviation occurs.
pub fn ehrenfest_validity_window(method: &TimeSeriesRecord, reference: &TimeSeriesRecord, threshold: f64, window: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::domain("validity threshold must be positive"));
    }
    if !(window >= 0.0) {
        return Err(Error::domain("averaging window must be non-negative"));
    }
    let mut t_common = Vec::new();
    let mut vm = Vec::new();
    let mut vr = Vec::new();
    let mut j = 0;
    for (&t, &v) in method.times.iter().zip(&method.values) {
        while j < reference.times.len() && reference.times[j] < t - 1e-9 {
            j += 1;
        }
        if j == reference.times.len() {
            break;
        }
        if (reference.times[j] - t).abs() <= 1e-9 {
            t_common.push(t);
            vm.push(v);
            vr.push(reference.values[j]);
        }
    }
    let Some(&t_last) = t_common.last() else {
        return Err(Error::Shape("method and reference share no time points".into()));
    };
    let am = trailing_average(&TimeSeriesRecord::new("m", t_common.clone(), vm)?, window);
    let ar = trailing_average(&TimeSeriesRecord::new("r", t_common.clone(), vr)?, window);
    let top = ar.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    for ((&t, &m), &r) in t_common.iter().zip(&am).zip(&ar) {
        if r.abs() <= 1e-6 * top {
            continue;
        }
        if ((m - r) / r).abs() > threshold {
            return Ok(t);
        }
    }
    Ok(t_last)
}

/// Checks that `dt` is usable and that `times` is a valid grid.
pub fn check_inputs(times: &[f64], dt: f64) -> Result<()> {
    ode::check_step(dt)?;
    record::check_grid(times)
}
