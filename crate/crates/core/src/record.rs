use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A labelled `(t, value)` series together with the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl TimeSeriesRecord {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(Self { label: label.into(), times, values, metadata: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Values at times inside `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> (Vec<f64>, Vec<f64>) {
        self.iter().filter(|(t, _)| *t >= t0 && *t <= t1).unzip()
    }

    /// Mean of the values at times inside `[t0, t1]`.
    pub fn time_average(&self, t0: f64, t1: f64) -> Result<f64> {
        let (_, v) = self.window(t0, t1);
        if v.is_empty() {
            return Err(Error::Shape(format!("no samples of '{}' in [{t0}, {t1}]", self.label)));
        }
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Uniform grid `0, dt, 2dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    if !(t_max >= 0.0) || !t_max.is_finite() {
        return Err(Error::domain(format!("time horizon must be non-negative, got {t_max}")));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// Checks that a grid starts at zero and is strictly increasing.
pub fn check_grid(times: &[f64]) -> Result<()> {
    match times.first() {
        None => return Err(Error::domain("empty time grid")),
        Some(&t0) if t0 != 0.0 => return Err(Error::domain(format!("time grid must start at 0, got {t0}"))),
        _ => {}
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("time grid must be strictly increasing"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoint() {
        let g = uniform_grid(1.0, 0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
        check_grid(&g).unwrap();
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(check_grid(&[0.0, 1.0, 1.0]).is_err());
        assert!(check_grid(&[0.5, 1.0]).is_err());
        assert!(uniform_grid(1.0, 0.0).is_err());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(TimeSeriesRecord::new("x", vec![0.0], vec![]).is_err());
    }

    #[test]
    fn time_average_over_window() {
        let r = TimeSeriesRecord::new("x", vec![0.0, 1.0, 2.0, 3.0], vec![5.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.time_average(1.0, 3.0).unwrap(), 2.0);
        assert!(r.time_average(10.0, 11.0).is_err());
    }
}
