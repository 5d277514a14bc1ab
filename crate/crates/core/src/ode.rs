//! Fixed-step classical Runge–Kutta integration.

use crate::error::{Error, Result};

/// Workspace for the classical fourth-order Runge–Kutta step.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.tmp.len()
    }

    /// Advances `y` from `t` to `t + dt` under `ẏ = f(t, y)`.
    pub fn step<F>(&mut self, f: &mut F, t: f64, y: &mut [f64], dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        debug_assert_eq!(y.len(), self.dim());
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        f(t + half, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        f(t + half, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }

    /// Integrates from `t0` to `t1` in equal steps no longer than `dt`.
    pub fn advance<F>(&mut self, f: &mut F, t0: f64, t1: f64, y: &mut [f64], dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return;
        }
        let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            self.step(f, t0 + k as f64 * h, y, h);
        }
    }
}

pub fn check_step(dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("integration step must be positive, got dt = {dt}")));
    }
    Ok(())
}

/// Integrates `ẏ = f(t, y)` and records `observe(y)` at every time in `times`,
/// which must start at zero and increase.
pub fn integrate_on_grid<F, O, T>(f: &mut F, y0: &[f64], times: &[f64], dt: f64, mut observe: O) -> Result<Vec<T>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(&[f64]) -> T,
{
    check_step(dt)?;
    crate::record::check_grid(times)?;
    let mut rk = Rk4::new(y0.len());
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    for &target in times {
        rk.advance(f, t, target, &mut y, dt);
        t = target;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("integration blew up before t = {target}")));
        }
        out.push(observe(&y));
    }
    Ok(out)
}
