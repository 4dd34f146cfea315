use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::panel::lagrange_at;
use crate::error::{Error, Result};

/// `a · r^e`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }

    pub fn zero() -> Self {
        Self { coeff: 0.0, exponent: 0.0 }
    }

    /// Law with exponent `e` through the point `(r, v)`.
    pub fn through(r: f64, v: f64, exponent: f64) -> Self {
        Self { coeff: v * r.powf(-exponent), exponent }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.coeff == 0.0 { 0.0 } else { self.coeff * r.powf(self.exponent) }
    }
}

/// Nodal values on a geometric grid plus power-law extensions below
/// `r_min` and above `r_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    grid: RadialGrid,
    values: Vec<f64>,
    pub inner_law: PowerLaw,
    pub tail_law: PowerLaw,
}

impl RadialFunction {
    /// Laws with the given exponents are matched to the end nodes.
    pub fn new(grid: RadialGrid, values: Vec<f64>, inner_exp: f64, tail_exp: f64) -> Result<Self> {
        check_values(&grid, &values)?;
        let n = values.len();
        let inner = PowerLaw::through(grid.r_min(), values[0], inner_exp);
        let tail = PowerLaw::through(grid.r_max(), values[n - 1], tail_exp);
        Ok(Self { grid, values, inner_law: inner, tail_law: tail })
    }

    pub fn with_laws(grid: RadialGrid, values: Vec<f64>, inner: PowerLaw, tail: PowerLaw) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values, inner_law: inner, tail_law: tail })
    }

    pub fn from_fn(grid: &RadialGrid, f: impl Fn(f64) -> f64, inner_exp: f64, tail_exp: f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid.clone(), values, inner_exp, tail_exp)
    }

    /// Exponents taken from the log-slope of the two outermost nodes at
    /// each end, or `fallback` when the values change sign or vanish.
    pub fn with_end_slopes(grid: RadialGrid, values: Vec<f64>, fallback: (f64, f64)) -> Result<Self> {
        check_values(&grid, &values)?;
        let n = values.len();
        let r = grid.nodes();
        let slope = |i: usize, j: usize, fb: f64| {
            let (a, b) = (values[i], values[j]);
            if a != 0.0 && b != 0.0 && a.signum() == b.signum() {
                let s = (b / a).ln() / (r[j] / r[i]).ln();
                if s.abs() < 1e-9 { 0.0 } else { s }
            } else {
                fb
            }
        };
        let e0 = slope(0, 1, fallback.0);
        let e1 = slope(n - 2, n - 1, fallback.1);
        Self::new(grid, values, e0, e1)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at `r` and whether it came from a power-law extension.
    pub fn eval_flagged(&self, r: f64) -> (f64, bool) {
        if r < self.grid.r_min() * (1.0 - 1e-13) {
            return (self.inner_law.eval(r), true);
        }
        if r > self.grid.r_max() * (1.0 + 1e-13) {
            return (self.tail_law.eval(r), true);
        }
        let (st, l) = lagrange_at(&self.grid, r.ln());
        let v = l.iter().zip(&self.values[st..]).map(|(l, v)| l * v).sum();
        (v, false)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_flagged(r).0
    }

    /// Values on another grid, flagging nodes served by the extensions.
    pub fn resample(&self, grid: &RadialGrid) -> (RadialFunction, Vec<bool>) {
        let (values, flags): (Vec<f64>, Vec<bool>) =
            grid.nodes().iter().map(|&r| self.eval_flagged(r)).unzip();
        let f = RadialFunction {
            grid: grid.clone(),
            values,
            inner_law: self.inner_law,
            tail_law: self.tail_law,
        };
        (f, flags)
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64, inner_exp: f64, tail_exp: f64) -> Result<Self> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self::new(self.grid.clone(), values, inner_exp, tail_exp)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

fn check_values(grid: &RadialGrid, values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::InvalidParams(format!(
            "{} values for a {}-node grid",
            values.len(),
            grid.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("profile values must be finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bubble(r: f64) -> f64 {
        (1.0 + r * r).powf(-0.5)
    }

    #[test]
    fn laws_match_end_nodes() {
        let g = RadialGrid::geometric(1e-2, 1e2, 128).unwrap();
        let f = RadialFunction::from_fn(&g, |r| 3.0 * r.powf(-2.0), -2.0, -2.0).unwrap();
        assert!((f.inner_law.coeff - 3.0).abs() < 1e-12);
        assert!((f.tail_law.coeff - 3.0).abs() < 1e-12);
        assert!((f.eval(1e-4) - 3e8).abs() < 1e-3);
        assert!(f.eval_flagged(1e3).1);
        assert!(!f.eval_flagged(1.0).1);
    }

    #[test]
    fn interpolation_accuracy() {
        let g = RadialGrid::geometric(1e-3, 1e3, 513).unwrap();
        let f = RadialFunction::from_fn(&g, bubble, 0.0, -1.0).unwrap();
        for &r in &[0.0123, 0.77, 3.3, 91.0] {
            assert!((f.eval(r) / bubble(r) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn end_slopes() {
        let g = RadialGrid::geometric(1e-2, 1e2, 64).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r.powf(1.5) + 2.0 * r.powf(-0.5)).collect();
        let f = RadialFunction::with_end_slopes(g, v, (0.0, 0.0)).unwrap();
        assert!((f.inner_law.exponent + 0.5).abs() < 1e-3);
        assert!((f.tail_law.exponent - 1.5).abs() < 1e-3);
    }

    #[test]
    fn resample_flags_extension() {
        let g = RadialGrid::geometric(1e-1, 1e1, 64).unwrap();
        let f = RadialFunction::from_fn(&g, bubble, 0.0, -1.0).unwrap();
        let h = RadialGrid::geometric(1e-2, 1e0, 64).unwrap();
        let (_, flags) = f.resample(&h);
        assert!(flags[0]);
        assert!(!flags[63]);
    }

    #[test]
    fn rejects_mismatch() {
        let g = RadialGrid::geometric(1e-1, 1e1, 32).unwrap();
        assert!(RadialFunction::new(g.clone(), vec![1.0; 31], 0.0, 0.0).is_err());
        assert!(RadialFunction::new(g, vec![f64::NAN; 32], 0.0, 0.0).is_err());
    }
}
