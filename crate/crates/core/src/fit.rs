//! Least-squares fits of power laws and exponentials on a time window.

use crate::error::{Error, Result};
use crate::record::TimeSeriesRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    /// Power-law exponent or exponential rate.
    pub exponent: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the linearized fit.
    pub r2: f64,
    pub n_points: usize,
}

/// Ordinary least squares `y = a + b x`, returning `(a, b, r²)`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} abscissae for {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::domain("a fit needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((my - slope * mx, slope, r2))
}

fn window_points(record: &TimeSeriesRecord, t0: f64, t1: f64, need_positive_t: bool) -> Vec<(f64, f64)> {
    record
        .iter()
        .filter(|&(t, v)| t >= t0 && t <= t1 && v > 0.0 && v.is_finite() && (!need_positive_t || t > 0.0))
        .collect()
}

/// `y ≈ A t^b` fitted in log-log space on `[t0, t1]`.
pub fn fit_power_law(record: &TimeSeriesRecord, t0: f64, t1: f64) -> Result<Fit> {
    let pts = window_points(record, t0, t1, true);
    if pts.len() < 2 {
        return Err(Error::domain(format!("fewer than two positive points in [{t0}, {t1}]")));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (a, b, r2) = linear_regression(&x, &y)?;
    Ok(Fit { exponent: b, prefactor: a.exp(), r2, n_points: pts.len() })
}

/// `y ≈ A e^{λ t}` fitted in log-linear space on `[t0, t1]`.
pub fn fit_exponential(record: &TimeSeriesRecord, t0: f64, t1: f64) -> Result<Fit> {
    let pts = window_points(record, t0, t1, false);
    if pts.len() < 2 {
        return Err(Error::domain(format!("fewer than two positive points in [{t0}, {t1}]")));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (a, b, r2) = linear_regression(&x, &y)?;
    Ok(Fit { exponent: b, prefactor: a.exp(), r2, n_points: pts.len() })
}

/// Exponent of `y ∝ x^b` from paired positive samples (e.g. a time scale versus `N`).
pub fn scaling_exponent(x: &[f64], y: &[f64]) -> Result<Fit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("scaling fits need positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (a, b, r2) = linear_regression(&lx, &ly)?;
    Ok(Fit { exponent: b, prefactor: a.exp(), r2, n_points: x.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> TimeSeriesRecord {
        let t: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        TimeSeriesRecord::new("s", t, v).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let f = fit_power_law(&series(|t| 3.0 * t.powf(2.5)), 0.5, 8.0).unwrap();
        assert!((f.exponent - 2.5).abs() < 1e-12);
        assert!((f.prefactor - 3.0).abs() < 1e-10);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_exponential() {
        let f = fit_exponential(&series(|t| 0.5 * (1.7 * t).exp()), 1.0, 9.0).unwrap();
        assert!((f.exponent - 1.7).abs() < 1e-12);
        assert!((f.prefactor - 0.5).abs() < 1e-10);
    }

    #[test]
    fn empty_window() {
        assert!(fit_power_law(&series(|t| t), 20.0, 30.0).is_err());
    }

    #[test]
    fn scaling() {
        let f = scaling_exponent(&[50.0, 200.0, 800.0], &[7.0, 14.0, 28.0]).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
    }
}
