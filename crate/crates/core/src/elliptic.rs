//! Incomplete elliptic integrals via Carlson's symmetric forms.
//!
//! `F(φ, k) = sin φ · R_F(cos²φ, 1 − k² sin²φ, 1)` and
//! `E(φ, k) = F(φ, k) − (k²/3) sin³φ · R_D(cos²φ, 1 − k² sin²φ, 1)`,
//! valid for `k² sin²φ ≤ 1`, which covers moduli `k > 1` as long as the
//! amplitude stays below `arcsin(1/k)`.

use crate::error::{Error, Result};

const RF_TOL: f64 = 1e-4;
const RD_TOL: f64 = 1e-4;

/// Carlson's `R_F(x, y, z)`; at most one argument may be zero.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    if x.min(y).min(z) < 0.0 || [x + y, x + z, y + z].iter().any(|&s| s <= 0.0) {
        return Err(Error::domain(format!("R_F({x}, {y}, {z}) is undefined")));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RF_TOL {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return Ok((1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / ave.sqrt());
        }
    }
}

/// Carlson's `R_D(x, y, z)`; `z > 0` and at most one of `x, y` zero.
pub fn carlson_rd(x: f64, y: f64, z: f64) -> Result<f64> {
    if x.min(y) < 0.0 || x + y <= 0.0 || z <= 0.0 {
        return Err(Error::domain(format!("R_D({x}, {y}, {z}) is undefined")));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = 0.0;
    let mut fac = 1.0;
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum += fac / (sz * (z + lambda));
        fac *= 0.25;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = 0.2 * (x + y + 3.0 * z);
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < RD_TOL {
            let ea = dx * dy;
            let eb = dz * dz;
            let ec = ea - eb;
            let ed = ea - 6.0 * eb;
            let ee = ed + ec + ec;
            let c1 = 3.0 / 14.0;
            let c2 = 1.0 / 6.0;
            let c3 = 9.0 / 22.0;
            let c4 = 3.0 / 26.0;
            let c5 = 0.25 * c3;
            let c6 = 1.5 * c4;
            let series = 1.0
                + ed * (-c1 + c5 * ed - c6 * dz * ee)
                + dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea));
            return Ok(3.0 * sum + fac * series / (ave * ave.sqrt()));
        }
    }
}

fn check_amplitude(phi: f64, k: f64) -> Result<(f64, f64, f64)> {
    let s = phi.sin();
    let c = phi.cos();
    let y = 1.0 - k * k * s * s;
    if y < -1e-15 || !(0.0..=std::f64::consts::FRAC_PI_2).contains(&phi) {
        return Err(Error::domain(format!(
            "elliptic integral needs 0 ≤ φ ≤ π/2 and k² sin²φ ≤ 1 (φ = {phi}, k = {k})"
        )));
    }
    Ok((s, c, y.max(0.0)))
}

/// Incomplete integral of the first kind `F(φ, k) = ∫₀^φ dθ / √(1 − k² sin²θ)`.
pub fn elliptic_f(phi: f64, k: f64) -> Result<f64> {
    let (s, c, y) = check_amplitude(phi, k)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 && c.abs() < 1e-15 {
        return Ok(f64::INFINITY);
    }
    Ok(s * carlson_rf(c * c, y, 1.0)?)
}

/// Incomplete integral of the second kind `E(φ, k) = ∫₀^φ √(1 − k² sin²θ) dθ`.
pub fn elliptic_e(phi: f64, k: f64) -> Result<f64> {
    let (s, c, y) = check_amplitude(phi, k)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 && c.abs() < 1e-15 {
        return Ok(1.0);
    }
    let rf = carlson_rf(c * c, y, 1.0)?;
    let rd = carlson_rd(c * c, y, 1.0)?;
    Ok(s * rf - k * k * s * s * s * rd / 3.0)
}

/// Complete integral `K(k) = F(π/2, k)`, `0 ≤ k < 1`.
pub fn complete_k(k: f64) -> Result<f64> {
    elliptic_f(std::f64::consts::FRAC_PI_2, k)
}

/// Complete integral `E(k) = E(π/2, k)`, `0 ≤ k ≤ 1`.
pub fn complete_e(k: f64) -> Result<f64> {
    elliptic_e(std::f64::consts::FRAC_PI_2, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn matches_quadrature() {
        for &(phi, k) in &[(0.3, 0.2), (1.0, 0.9), (FRAC_PI_2, 0.5), (0.4, 2.0), (0.2, 4.0)] {
            let f = simpson(|t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi, 2000);
            let e = simpson(|t| (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi, 2000);
            assert!((elliptic_f(phi, k).unwrap() - f).abs() < 1e-10, "F({phi},{k})");
            assert!((elliptic_e(phi, k).unwrap() - e).abs() < 1e-10, "E({phi},{k})");
        }
    }

    #[test]
    fn known_values() {
        assert!((complete_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((complete_e(0.0).unwrap() - FRAC_PI_2).abs() < 1e-14);
        assert!((complete_e(1.0).unwrap() - 1.0).abs() < 1e-14);
        // K(1/√2) = Γ(1/4)² / (4√π)
        let gamma_quarter = 3.625_609_908_221_908;
        let k = gamma_quarter * gamma_quarter / (4.0 * PI.sqrt());
        assert!((complete_k(std::f64::consts::FRAC_1_SQRT_2).unwrap() - k).abs() < 1e-13);
    }

    #[test]
    fn reciprocal_modulus_identity() {
        // F(arcsin(1/k), k) = K(1/k) / k
        for k in [1.5f64, 2.0, 4.0, 10.0] {
            let lhs = elliptic_f((1.0 / k).asin(), k).unwrap();
            let rhs = complete_k(1.0 / k).unwrap() / k;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_relation() {
        // E K' + E' K − K K' = π/2
        let k = 0.6f64;
        let kp = (1.0 - k * k).sqrt();
        let (kk, ee) = (complete_k(k).unwrap(), complete_e(k).unwrap());
        let (kkp, eep) = (complete_k(kp).unwrap(), complete_e(kp).unwrap());
        assert!((ee * kkp + eep * kk - kk * kkp - FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn outside_domain() {
        assert!(elliptic_f(1.0, 2.0).is_err());
        assert!(carlson_rf(-1.0, 1.0, 1.0).is_err());
        assert_eq!(elliptic_f(FRAC_PI_2, 1.0).unwrap(), f64::INFINITY);
    }
}
