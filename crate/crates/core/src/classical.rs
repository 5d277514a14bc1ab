//! Classical limit of the collective dynamics on the unit sphere.
//!
//! With `m = (m_x, m_y, m_z)`, `Q = m_z` and `m_x + i m_y = √(1−Q²) e^{2iP}`,
//! the energy per spin is `H₀ = −J/2 Q² − h √(1−Q²) cos 2P` and the flow is
//!
//! ```text
//! ṁ_x = 2J m_y m_z,   ṁ_y = 2h m_z − 2J m_x m_z,   ṁ_z = −2h m_y,
//! ```
//!
//! i.e. `Q̇ = −∂H₀/∂P`, `Ṗ = ∂H₀/∂Q`. Integration happens in Cartesian
//! coordinates so the poles, where the initial state sits, are regular.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ode::{self, Rk4};
use crate::record::{self, TimeSeriesRecord};

/// Point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const NORTH: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Normalizes an arbitrary non-zero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain("cannot project a zero vector onto the sphere"));
        }
        Ok(Self { x: x / r, y: y / r, z: z / r })
    }

    /// Point with canonical coordinates `(Q, P)`.
    pub fn from_canonical(q: f64, p: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&q) {
            return Err(Error::domain(format!("Q = {q} lies outside [−1, 1]")));
        }
        let r = (1.0 - q * q).sqrt();
        Ok(Self { x: r * (2.0 * p).cos(), y: r * (2.0 * p).sin(), z: q })
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn q(&self) -> f64 {
        self.z
    }

    /// Canonical momentum folded into `[−π/2, π/2)`, the period of `e^{2iP}`.
    pub fn p(&self) -> f64 {
        fold_momentum(0.5 * self.y.atan2(self.x))
    }
}

/// Folds `P` into `[−π/2, π/2)`.
pub fn fold_momentum(p: f64) -> f64 {
    (p + 0.5 * PI).rem_euclid(PI) - 0.5 * PI
}

/// Couplings of the collective model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    pub j: f64,
    pub h: f64,
}

impl FlowParams {
    pub fn new(j: f64, h: f64) -> Self {
        Self { j, h }
    }

    pub fn energy(&self, m: &BlochVector) -> f64 {
        -0.5 * self.j * m.z * m.z - self.h * m.x
    }

    /// Right-hand side of the spin equations.
    pub fn velocity(&self, m: &[f64]) -> [f64; 3] {
        let (j, h) = (self.j, self.h);
        [2.0 * j * m[1] * m[2], 2.0 * h * m[2] - 2.0 * j * m[0] * m[2], -2.0 * h * m[1]]
    }

    /// `∂ṁ/∂m`.
    pub fn jacobian(&self, m: &[f64]) -> [[f64; 3]; 3] {
        let (j, h) = (self.j, self.h);
        [
            [0.0, 2.0 * j * m[2], 2.0 * j * m[1]],
            [-2.0 * j * m[2], 0.0, 2.0 * h - 2.0 * j * m[0]],
            [0.0, -2.0 * h, 0.0],
        ]
    }

    /// Flow of `(m, δm)` packed as six numbers.
    pub fn tangent_rhs(&self, y: &[f64], dy: &mut [f64]) {
        let v = self.velocity(&y[..3]);
        dy[..3].copy_from_slice(&v);
        let a = self.jacobian(&y[..3]);
        for r in 0..3 {
            dy[3 + r] = a[r][0] * y[3] + a[r][1] * y[4] + a[r][2] * y[5];
        }
    }
}

/// Kick of strength `K`: rotation of `(m_x, m_y)` about z by `2K m_z`,
/// i.e. `P → P + K Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickParams {
    pub k: f64,
    pub tau: f64,
}

impl KickParams {
    pub fn new(k: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("kick period must be positive, got τ = {tau}")));
        }
        Ok(Self { k, tau })
    }

    /// Applies the kick to `m` and, if given, to a tangent vector at `m`.
    pub fn apply(&self, m: &mut [f64], tangent: Option<&mut [f64]>) {
        let angle = 2.0 * self.k * m[2];
        let (s, c) = angle.sin_cos();
        let (x, y) = (m[0], m[1]);
        m[0] = c * x - s * y;
        m[1] = s * x + c * y;
        if let Some(v) = tangent {
            let (vx, vy, vz) = (v[0], v[1], v[2]);
            // R δm + 2K δm_z ∂_θ(R m)
            v[0] = c * vx - s * vy - 2.0 * self.k * vz * m[1];
            v[1] = s * vx + c * vy + 2.0 * self.k * vz * m[0];
        }
    }
}

const NORM_DRIFT: f64 = 1e-12;

fn renormalize(m: &mut [f64]) {
    let r = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if (r - 1.0).abs() > NORM_DRIFT {
        for c in m.iter_mut().take(3) {
            *c /= r;
        }
    }
}

/// Time-sampled classical magnetization with an optional tangent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<BlochVector>,
    pub tangents: Option<Vec<[f64; 3]>>,
}

impl BlochTrajectory {
    pub fn q_series(&self) -> Vec<f64> {
        self.points.iter().map(|m| m.z).collect()
    }
}

fn check_sphere(m: &BlochVector) -> Result<()> {
    if (m.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::domain(format!("initial point has |m| = {}, expected 1", m.norm())));
    }
    Ok(())
}

/// Integrates the flow with RK4 and records the state at every time in `times`.
pub fn flow_on_grid(m0: BlochVector, params: FlowParams, times: &[f64], dt: f64) -> Result<BlochTrajectory> {
    check_sphere(&m0)?;
    ode::check_step(dt)?;
    record::check_grid(times)?;
    let mut rk = Rk4::new(3);
    let mut y = m0.to_array().to_vec();
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy.copy_from_slice(&params.velocity(y));
    let mut points = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        let n = ((target - t) / dt - 1e-9).ceil().max(0.0) as usize;
        if n > 0 {
            let h = (target - t) / n as f64;
            for k in 0..n {
                rk.step(&mut f, t + k as f64 * h, &mut y, h);
                renormalize(&mut y);
            }
        }
        t = target;
        points.push(BlochVector::new(y[0], y[1], y[2]));
    }
    Ok(BlochTrajectory { times: times.to_vec(), points, tangents: None })
}

/// Return time of a periodic orbit through `m0`: the first maximum of
/// `m(t)·m0` after the overlap has dropped below 1/2, refined by a parabola
/// through the three bracketing steps.
pub fn orbit_period(m0: BlochVector, params: FlowParams, t_max: f64, dt: f64) -> Result<f64> {
    check_sphere(&m0)?;
    ode::check_step(dt)?;
    let mut rk = Rk4::new(3);
    let mut y = m0.to_array();
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy.copy_from_slice(&params.velocity(y));
    let a = m0.to_array();
    let overlap = |y: &[f64]| a[0] * y[0] + a[1] * y[1] + a[2] * y[2];
    let mut left = false;
    let (mut d0, mut d1) = (1.0, 1.0);
    let mut t = 0.0;
    while t < t_max {
        rk.step(&mut f, t, &mut y, dt);
        renormalize(&mut y);
        t += dt;
        let d2 = overlap(&y);
        left |= d2 < 0.5;
        if left && d1 > 0.5 && d1 >= d0 && d1 > d2 {
            let curv = d0 - 2.0 * d1 + d2;
            let shift = if curv != 0.0 { 0.5 * (d0 - d2) / curv } else { 0.0 };
            return Ok(t - dt + shift * dt);
        }
        (d0, d1) = (d1, d2);
    }
    Err(Error::numerical(format!("no return to the initial point before t = {t_max}")))
}

/// Integrates the flow up to `t_max`, recording every step.
pub fn integrate_flow(m0: BlochVector, j: f64, h: f64, t_max: f64, dt: f64) -> Result<BlochTrajectory> {
    let grid = record::uniform_grid(t_max, dt)?;
    flow_on_grid(m0, FlowParams::new(j, h), &grid, dt)
}

/// Evolves `(m, δm)` for a time `span` in steps no longer than `dt`.
pub fn flow_tangent(params: FlowParams, y: &mut [f64; 6], span: f64, dt: f64, rk: &mut Rk4) {
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| params.tangent_rhs(y, dy);
    if span <= 0.0 {
        return;
    }
    let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for k in 0..n {
        rk.step(&mut f, k as f64 * h, y, h);
        renormalize(&mut y[..3]);
    }
}

/// One period of the kicked dynamics: free flow for `τ`, then the kick.
pub fn kicked_map(m: BlochVector, params: FlowParams, kick: KickParams, dt: f64) -> Result<BlochVector> {
    ode::check_step(dt)?;
    let mut rk = Rk4::new(3);
    let mut y = m.to_array();
    let mut f = |_t: f64, y: &[f64], dy: &mut [f64]| dy.copy_from_slice(&params.velocity(y));
    rk.advance(&mut f, 0.0, kick.tau, &mut y, dt);
    renormalize(&mut y);
    kick.apply(&mut y, None);
    Ok(BlochVector::from_array(y))
}

/// Stroboscopic orbit `m_0, m_1, …, m_n`.
pub fn kicked_orbit(m0: BlochVector, params: FlowParams, kick: KickParams, n_periods: usize, dt: f64) -> Result<Vec<BlochVector>> {
    check_sphere(&m0)?;
    let mut out = Vec::with_capacity(n_periods + 1);
    out.push(m0);
    let mut m = m0;
    for _ in 0..n_periods {
        m = kicked_map(m, params, kick, dt)?;
        out.push(m);
    }
    Ok(out)
}

/// Stroboscopic `(Q, P)` clouds, one per seed; each cloud starts with its seed.
pub fn poincare_section(
    seeds: &[BlochVector],
    n_periods: usize,
    params: FlowParams,
    kick: KickParams,
    dt: f64,
) -> Result<Vec<Vec<(f64, f64)>>> {
    seeds
        .iter()
        .map(|&s| Ok(kicked_orbit(s, params, kick, n_periods, dt)?.iter().map(|m| (m.q(), m.p())).collect()))
        .collect()
}

/// Fraction of cells of a `bins × bins` grid over `Q ∈ [−1, 1]`, `P ∈ [−π/2, π/2)` that a cloud visits.
pub fn occupancy_fraction(cloud: &[(f64, f64)], bins: usize) -> f64 {
    let mut seen = vec![false; bins * bins];
    for &(q, p) in cloud {
        let iq = (((q + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
        let ip = (((fold_momentum(p) + 0.5 * PI) / PI * bins as f64) as usize).min(bins - 1);
        seen[iq * bins + ip] = true;
    }
    seen.iter().filter(|&&s| s).count() as f64 / (bins * bins) as f64
}

/// Tangent vector along which `P(0)` increases at fixed `Q(0)`: `∂m/∂P = 2(−m_y, m_x, 0)`.
pub fn momentum_direction(m: &BlochVector) -> [f64; 3] {
    [-2.0 * m.y, 2.0 * m.x, 0.0]
}

/// `{Q(t), Q(0)} = ∂Q(t)/∂P(0)`, obtained from the Cartesian tangent flow
/// seeded along [`momentum_direction`]; regular at the poles.
pub fn tangent_poisson_bracket(m0: BlochVector, params: FlowParams, times: &[f64], dt: f64) -> Result<TimeSeriesRecord> {
    check_sphere(&m0)?;
    ode::check_step(dt)?;
    record::check_grid(times)?;
    let v = momentum_direction(&m0);
    let mut y = [m0.x, m0.y, m0.z, v[0], v[1], v[2]];
    let mut rk = Rk4::new(6);
    let mut values = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        flow_tangent(params, &mut y, target - t, dt, &mut rk);
        t = target;
        if !y[5].is_finite() {
            return Err(Error::numerical(format!("tangent overflow before t = {target}")));
        }
        values.push(y[5]);
    }
    TimeSeriesRecord::new("poisson_bracket", times.to_vec(), values)
}

/// Jacobian `∂(Q, P)(t) / ∂(Q, P)(0)` away from the poles.
pub fn canonical_tangent_map(m0: BlochVector, params: FlowParams, t: f64, dt: f64) -> Result<[[f64; 2]; 2]> {
    check_sphere(&m0)?;
    let rho0 = (m0.x * m0.x + m0.y * m0.y).sqrt();
    if rho0 < 1e-6 {
        return Err(Error::domain("canonical chart is singular at the poles"));
    }
    // ∂m/∂Q at fixed P, from m_x + i m_y = √(1−Q²) e^{2iP}
    let rho2 = rho0 * rho0;
    let dq = [-m0.z * m0.x / rho2, -m0.z * m0.y / rho2, 1.0];
    let dp = momentum_direction(&m0);
    let mut rk = Rk4::new(6);
    let mut cols = [[0.0; 2]; 2];
    for (c, dir) in [dq, dp].iter().enumerate() {
        let mut y = [m0.x, m0.y, m0.z, dir[0], dir[1], dir[2]];
        flow_tangent(params, &mut y, t, dt, &mut rk);
        let rho2 = y[0] * y[0] + y[1] * y[1];
        if rho2 < 1e-12 {
            return Err(Error::domain("trajectory passed through a pole"));
        }
        let d_q = y[5];
        let d_p = (y[0] * y[4] - y[1] * y[3]) / (2.0 * rho2);
        cols[c] = [d_q, d_p];
    }
    Ok([[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]])
}

/// Outcome of a Benettin run.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    /// `(time, running estimate)` after each renormalization.
    pub trace: Vec<(f64, f64)>,
    /// Whether the estimate moved less than 1% (or 1e−3 absolute) over the last decade of time.
    pub converged: bool,
}

impl LyapunovEstimate {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            let tail: Vec<_> = self.trace.iter().rev().take(5).collect();
            Err(Error::numerical(format!("Lyapunov estimate did not settle; last values {tail:?}")))
        }
    }
}

/// Largest Lyapunov exponent by tangent propagation with periodic renormalization.
///
/// With a kick, one renormalization interval is `renorm_every` periods of
/// length `τ`; without one, it is `renorm_every` units of time.
pub fn lyapunov_benettin(
    m0: BlochVector,
    params: FlowParams,
    kick: Option<KickParams>,
    n_intervals: usize,
    renorm_every: usize,
    dt: f64,
) -> Result<LyapunovEstimate> {
    check_sphere(&m0)?;
    ode::check_step(dt)?;
    if n_intervals == 0 || renorm_every == 0 {
        return Err(Error::domain("Benettin run needs at least one interval of positive length"));
    }
    // start along an arbitrary tangent direction
    let seed = if m0.z.abs() < 0.9 { [0.0, 0.0, 1.0] } else { [1.0, 0.0, 0.0] };
    let mut v = project_tangent(&m0.to_array(), seed);
    let n0 = norm3(&v);
    v.iter_mut().for_each(|c| *c /= n0);
    let mut y = [m0.x, m0.y, m0.z, v[0], v[1], v[2]];
    let mut rk = Rk4::new(6);
    let mut log_sum = 0.0;
    let mut t = 0.0;
    let mut trace = Vec::with_capacity(n_intervals);
    for _ in 0..n_intervals {
        for _ in 0..renorm_every {
            match kick {
                Some(kp) => {
                    flow_tangent(params, &mut y, kp.tau, dt, &mut rk);
                    let (m, v) = y.split_at_mut(3);
                    kp.apply(m, Some(v));
                    t += kp.tau;
                }
                None => {
                    flow_tangent(params, &mut y, 1.0, dt, &mut rk);
                    t += 1.0;
                }
            }
        }
        let m = [y[0], y[1], y[2]];
        let v = project_tangent(&m, [y[3], y[4], y[5]]);
        let nv = norm3(&v);
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(Error::numerical(format!("tangent vector degenerate at t = {t}")));
        }
        log_sum += nv.ln();
        for i in 0..3 {
            y[3 + i] = v[i] / nv;
        }
        trace.push((t, log_sum / t));
    }
    let lambda = log_sum / t;
    let converged = {
        let t_ref = t / 10.0;
        let earlier = trace.iter().rev().find(|(tt, _)| *tt <= t_ref).map(|p| p.1);
        match earlier {
            Some(e) => (lambda - e).abs() <= (0.01 * lambda.abs()).max(1e-3),
            None => false,
        }
    };
    Ok(LyapunovEstimate { lambda, trace, converged })
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn project_tangent(m: &[f64; 3], v: [f64; 3]) -> [f64; 3] {
    let d = m[0] * v[0] + m[1] * v[1] + m[2] * v[2];
    [v[0] - d * m[0], v[1] - d * m[1], v[2] - d * m[2]]
}

/// Largest divergence rate of two nearby trajectories, a cross-check of the Benettin estimate.
pub fn two_trajectory_rate(
    m0: BlochVector,
    params: FlowParams,
    kick: KickParams,
    n_periods: usize,
    separation: f64,
    dt: f64,
) -> Result<f64> {
    let dir = project_tangent(&m0.to_array(), [0.3, -0.5, 0.8]);
    let nd = norm3(&dir);
    let mut a = m0;
    let mut b = BlochVector::normalized(
        m0.x + separation * dir[0] / nd,
        m0.y + separation * dir[1] / nd,
        m0.z + separation * dir[2] / nd,
    )?;
    let mut log_sum = 0.0;
    for _ in 0..n_periods {
        a = kicked_map(a, params, kick, dt)?;
        b = kicked_map(b, params, kick, dt)?;
        let d = [b.x - a.x, b.y - a.y, b.z - a.z];
        let r = norm3(&d);
        log_sum += (r / separation).ln();
        b = BlochVector::normalized(
            a.x + separation * d[0] / r,
            a.y + separation * d[1] / r,
            a.z + separation * d[2] / r,
        )?;
    }
    Ok(log_sum / (n_periods as f64 * kick.tau))
}

/// Instability rate `2√(h(1−h))` of the saddle at `m = (1, 0, 0)` for `J = 1`.
pub fn separatrix_exponent(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::domain(format!("separatrix exists only for 0 < h < 1 (J = 1), got h = {h}")));
    }
    Ok(2.0 * (h * (1.0 - h)).sqrt())
}

/// Canonical vector field `(Q̇, Ṗ) = (−∂H₀/∂P, ∂H₀/∂Q)`.
pub fn canonical_velocity(params: FlowParams, q: f64, p: f64) -> (f64, f64) {
    let r = (1.0 - q * q).sqrt();
    let dh_dp = 2.0 * params.h * r * (2.0 * p).sin();
    let dh_dq = -params.j * q + params.h * q / r * (2.0 * p).cos();
    (-dh_dp, dh_dq)
}

/// Largest real eigenvalue of the finite-difference Jacobian of the canonical
/// field at the saddle `Q = P = 0`.
pub fn saddle_instability(params: FlowParams, step: f64) -> f64 {
    let d = |q: f64, p: f64| canonical_velocity(params, q, p);
    let (a, c) = {
        let (fp, gp) = d(step, 0.0);
        let (fm, gm) = d(-step, 0.0);
        ((fp - fm) / (2.0 * step), (gp - gm) / (2.0 * step))
    };
    let (b, e) = {
        let (fp, gp) = d(0.0, step);
        let (fm, gm) = d(0.0, -step);
        ((fp - fm) / (2.0 * step), (gp - gm) / (2.0 * step))
    };
    // [[a, b], [c, e]]
    let tr = a + e;
    let det = a * e - b * c;
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        tr / 2.0 + disc.sqrt()
    } else {
        tr / 2.0
    }
}

/// Classical ground state of `H₀` at field `h0`, taking the `Q > 0` branch in the ferromagnetic phase.
pub fn ground_state_point(j: f64, h0: f64) -> BlochVector {
    if h0.abs() >= j {
        BlochVector::new(h0.signum(), 0.0, 0.0)
    } else {
        let mx = h0 / j;
        BlochVector::new(mx, 0.0, (1.0 - mx * mx).sqrt())
    }
}

/// Time-averaged order parameter after a quench `h0 → hf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DptResult {
    pub q_bar: f64,
    pub h_c: f64,
}

/// `Q̄ = (1/T)∫₀^T Q(s) ds` from the classical ground state at `h0`, with
/// the critical field `h_c = (h0 + J)/2` where `Q̄` vanishes.
pub fn dpt_order_parameter(h0: f64, hf: f64, j: f64, t_avg: f64, dt: f64) -> Result<DptResult> {
    let traj = integrate_flow(ground_state_point(j, h0), j, hf, t_avg, dt)?;
    let q = traj.q_series();
    if q.len() < 2 {
        return Err(Error::domain("averaging window shorter than one step"));
    }
    let mut integral = 0.0;
    for k in 1..q.len() {
        integral += 0.5 * (q[k] + q[k - 1]) * (traj.times[k] - traj.times[k - 1]);
    }
    let span = traj.times[q.len() - 1];
    Ok(DptResult { q_bar: integral / span, h_c: 0.5 * (h0 + j) })
}

/// Classical `Q(t)` series on a grid.
pub fn q_series(m0: BlochVector, params: FlowParams, times: &[f64], dt: f64) -> Result<TimeSeriesRecord> {
    let traj = flow_on_grid(m0, params, times, dt)?;
    TimeSeriesRecord::new("q", times.to_vec(), traj.q_series())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_precession_period() {
        // J = 0: rotation about x at angular speed 2h
        let t = orbit_period(BlochVector::NORTH, FlowParams::new(0.0, 2.0), 10.0, 1e-3).unwrap();
        assert!((t - PI / 2.0).abs() < 1e-5, "{t}");
        assert!(orbit_period(BlochVector::NORTH, FlowParams::new(1.0, 0.0), 10.0, 1e-3).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let m = BlochVector::from_canonical(0.3, 0.7).unwrap();
        assert!((m.norm() - 1.0).abs() < 1e-15);
        assert!((m.q() - 0.3).abs() < 1e-15);
        assert!((m.p() - 0.7).abs() < 1e-14);
        assert!((fold_momentum(0.7 + PI) - 0.7).abs() < 1e-14);
        assert!(BlochVector::from_canonical(1.5, 0.0).is_err());
    }

    #[test]
    fn velocity_matches_canonical_field() {
        let params = FlowParams::new(1.3, 0.7);
        let (q, p) = (0.4, 0.35);
        let m = BlochVector::from_canonical(q, p).unwrap();
        let v = params.velocity(&m.to_array());
        let (qd, pd) = canonical_velocity(params, q, p);
        assert!((v[2] - qd).abs() < 1e-13);
        // Ṗ from the Cartesian velocity: (m_x ṁ_y − m_y ṁ_x)/(2ρ²)
        let rho2 = m.x * m.x + m.y * m.y;
        assert!(((m.x * v[1] - m.y * v[0]) / (2.0 * rho2) - pd).abs() < 1e-13);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let traj = integrate_flow(BlochVector::new(1.0, 0.0, 0.0), 1.0, 2.0, 10.0, 1e-2).unwrap();
        assert!(traj.points.iter().all(|m| (m.x - 1.0).abs() < 1e-15 && m.y == 0.0 && m.z == 0.0));
    }

    #[test]
    fn zero_field_precesses_at_rate_two_j_mz() {
        let m0 = BlochVector::from_canonical(0.6, 0.0).unwrap();
        let traj = flow_on_grid(m0, FlowParams::new(1.0, 0.0), &[0.0, 1.0], 1e-3).unwrap();
        let end = traj.points[1];
        assert!((end.z - 0.6).abs() < 1e-14);
        // m_x + i m_y rotates by −2 J m_z t
        let angle = end.y.atan2(end.x);
        assert!((angle + 1.2).abs() < 1e-10);
    }

    #[test]
    fn energy_and_norm_conserved() {
        let params = FlowParams::new(1.0, 2.0);
        let m0 = BlochVector::normalized(0.1, 0.05, 1.0).unwrap();
        let traj = integrate_flow(m0, params.j, params.h, 100.0, 1e-3).unwrap();
        let e0 = params.energy(&m0);
        for m in &traj.points {
            assert!((params.energy(m) - e0).abs() < 1e-8);
            assert!((m.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let params = FlowParams::new(1.0, 0.3);
        let m0 = BlochVector::from_canonical(0.5, 0.2).unwrap();
        let end = |dt: f64| flow_on_grid(m0, params, &[0.0, 5.0], dt).unwrap().points[1];
        let exact = end(1e-4);
        let err = |dt: f64| {
            let m = end(dt);
            ((m.x - exact.x).powi(2) + (m.y - exact.y).powi(2) + (m.z - exact.z).powi(2)).sqrt()
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio > 13.0 && ratio < 19.0, "ratio {ratio}");
    }

    #[test]
    fn kick_without_strength_is_plain_flow() {
        let params = FlowParams::new(1.0, 2.0);
        let m0 = BlochVector::from_canonical(0.2, 0.1).unwrap();
        let kicked = kicked_map(m0, params, KickParams::new(0.0, 1.0).unwrap(), 1e-3).unwrap();
        let flowed = flow_on_grid(m0, params, &[0.0, 1.0], 1e-3).unwrap().points[1];
        assert!((kicked.x - flowed.x).abs() < 1e-14 && (kicked.z - flowed.z).abs() < 1e-14);
    }

    #[test]
    fn kick_shifts_momentum_by_k_q() {
        let kick = KickParams::new(0.7, 1.0).unwrap();
        let mut m = BlochVector::from_canonical(0.4, 0.1).unwrap().to_array();
        kick.apply(&mut m, None);
        let after = BlochVector::from_array(m);
        assert!((after.p() - fold_momentum(0.1 + 0.7 * 0.4)).abs() < 1e-14);
        let mut pole = [0.0, 0.0, 1.0];
        kick.apply(&mut pole, None);
        assert_eq!(pole, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn kick_tangent_matches_finite_difference() {
        let kick = KickParams::new(3.0, 1.0).unwrap();
        let m = BlochVector::from_canonical(0.3, 0.4).unwrap().to_array();
        let v = [0.1, -0.2, 0.3];
        let mut mv = m;
        let mut tv = v;
        kick.apply(&mut mv, Some(&mut tv));
        let eps = 1e-7;
        let mut plus = [m[0] + eps * v[0], m[1] + eps * v[1], m[2] + eps * v[2]];
        let mut minus = [m[0] - eps * v[0], m[1] - eps * v[1], m[2] - eps * v[2]];
        kick.apply(&mut plus, None);
        kick.apply(&mut minus, None);
        for i in 0..3 {
            assert!(((plus[i] - minus[i]) / (2.0 * eps) - tv[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn map_preserves_norm_over_many_periods() {
        let params = FlowParams::new(1.0, 2.0);
        let kick = KickParams::new(20.0, 1.0).unwrap();
        let orbit = kicked_orbit(BlochVector::from_canonical(0.1, 0.3).unwrap(), params, kick, 10_000, 0.01).unwrap();
        assert!(orbit.iter().all(|m| (m.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn poisson_bracket_matches_finite_difference() {
        let params = FlowParams::new(1.0, 2.0);
        let (q0, p0) = (0.5, 0.3);
        let m0 = BlochVector::from_canonical(q0, p0).unwrap();
        let times = [0.0, 1.0, 3.0, 5.0];
        let pb = tangent_poisson_bracket(m0, params, &times, 1e-3).unwrap();
        assert_eq!(pb.values[0], 0.0);
        let d = 1e-6;
        let plus = flow_on_grid(BlochVector::from_canonical(q0, p0 + d).unwrap(), params, &times, 1e-3).unwrap();
        let minus = flow_on_grid(BlochVector::from_canonical(q0, p0 - d).unwrap(), params, &times, 1e-3).unwrap();
        for k in 1..times.len() {
            let fd = (plus.points[k].z - minus.points[k].z) / (2.0 * d);
            assert!((fd - pb.values[k]).abs() < 1e-4 * fd.abs().max(1e-3), "t={}", times[k]);
        }
    }

    #[test]
    fn canonical_tangent_map_is_symplectic() {
        let params = FlowParams::new(1.0, 2.0);
        let m0 = BlochVector::from_canonical(0.3, 0.2).unwrap();
        for t in [0.5, 5.0, 20.0] {
            let a = canonical_tangent_map(m0, params, t, 1e-3).unwrap();
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            assert!((det - 1.0).abs() < 1e-6, "t={t} det={det}");
        }
    }

    #[test]
    fn separatrix_rate() {
        assert!((separatrix_exponent(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!(separatrix_exponent(1e-12).unwrap() < 1e-5);
        assert!(separatrix_exponent(0.0).is_err());
        assert!(separatrix_exponent(1.0).is_err());
        for h in [0.2, 0.5, 0.8] {
            let num = saddle_instability(FlowParams::new(1.0, h), 1e-5);
            assert!((num - separatrix_exponent(h).unwrap()).abs() < 1e-6, "h={h}");
        }
    }

    #[test]
    fn dpt_critical_field() {
        let r = dpt_order_parameter(0.0, 0.2, 1.0, 50.0, 1e-2).unwrap();
        assert_eq!(r.h_c, 0.5);
        assert!(r.q_bar > 0.5);
    }

    #[test]
    fn benettin_positive_in_chaos_zero_when_integrable() {
        let params = FlowParams::new(1.0, 2.0);
        let chaotic = lyapunov_benettin(
            BlochVector::from_canonical(0.2, 0.3).unwrap(),
            params,
            Some(KickParams::new(20.0, 1.0).unwrap()),
            300,
            1,
            1e-2,
        )
        .unwrap();
        assert!(chaotic.lambda > 0.5);
        let regular = lyapunov_benettin(BlochVector::normalized(0.05, 0.0, 1.0).unwrap(), params, None, 2000, 1, 1e-2).unwrap();
        assert!(regular.lambda < 1e-2, "{}", regular.lambda);
    }

    #[test]
    fn occupancy_counts_cells() {
        let cloud = vec![(0.0, 0.0), (0.0, 0.0), (0.99, 1.5)];
        assert!((occupancy_fraction(&cloud, 10) - 0.02).abs() < 1e-15);
    }
}
