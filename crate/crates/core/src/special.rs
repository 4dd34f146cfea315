//! Closed-form ingredients: Riesz constants, the bubble family, singular
//! solutions and the Kelvin transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exponents::{compute_exponents, ProblemParams};
use crate::radial::{PowerLaw, RadialFunction, RadialGrid};

/// `|S^{n-1}| = 2π^{n/2}/Γ(n/2)`
pub fn sphere_area(n: u32) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// Normalisation of the Riesz kernel `C(α)|x-y|^{α-n}`, via log-Gamma.
pub fn riesz_constant(n: u32, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    if !(alpha > 0.0 && alpha < nf) {
        return Err(Error::Domain(format!("alpha = {alpha} outside (0, {n})")));
    }
    let ln = ln_gamma(0.5 * (nf - alpha))
        - alpha * 2f64.ln()
        - 0.5 * nf * PI.ln()
        - ln_gamma(0.5 * alpha);
    Ok(ln.exp())
}

pub fn pochhammer(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (x + j as f64))
}

/// Coefficients `c_k` with
/// `∫_{S^{n-1}} |r e₁ − s ω|^{2m−n} dσ = |S^{n-1}| R^{2m−n} Σ_k c_k (ρ/R)^{2k}`,
/// `R = max(r, s)`, `ρ = min(r, s)`.
pub fn riesz_angular_coefficients(n: u32, m: u32) -> Vec<f64> {
    let a = 0.5 * (n as f64 - 2.0 * m as f64);
    let half = 0.5 * n as f64;
    let mut fact = 1.0;
    (0..m as usize)
        .map(|k| {
            if k > 0 {
                fact *= k as f64;
            }
            pochhammer(a, k) * pochhammer(1.0 - m as f64, k) / (pochhammer(half, k) * fact)
        })
        .collect()
}

/// Closed form of the angular Riesz kernel for `α = 2m < n`.
pub fn riesz_angular_closed(n: u32, m: u32, r: f64, s: f64) -> f64 {
    let (big, small) = if r >= s { (r, s) } else { (s, r) };
    let z = (small / big).powi(2);
    let c = riesz_angular_coefficients(n, m);
    let poly = c.iter().rev().fold(0.0, |acc, ck| acc * z + ck);
    sphere_area(n) * big.powf(2.0 * m as f64 - n as f64) * poly
}

/// `(−Δ)^m U_q = Σ_j c_j U_{q+m+j}` with `U_q = (1+|x|²)^{-q}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UqCoefficients {
    pub n: u32,
    pub q: f64,
    pub m: u32,
    /// `(j, c_j)` for `j = 0..=m`.
    pub terms: Vec<(usize, f64)>,
}

impl UqCoefficients {
    pub fn leading(&self) -> f64 {
        self.terms[self.m as usize].1
    }

    pub fn eval(&self, r: f64) -> f64 {
        let base = 1.0 + r * r;
        self.terms
            .iter()
            .map(|&(j, c)| c * base.powf(-(self.q + self.m as f64 + j as f64)))
            .sum()
    }
}

/// Composes `−ΔU_q = 2q(n−2−2q)U_{q+1} + 4q(q+1)U_{q+2}` `m` times.
pub fn poly_laplacian_uq(n: u32, q: f64, m: u32) -> Result<UqCoefficients> {
    if !(q > 0.0) || m < 1 {
        return Err(Error::Domain(format!("need q > 0 and m >= 1, got q = {q}, m = {m}")));
    }
    let nf = n as f64;
    // after k steps: index j ↦ coefficient of U_{q+k+j}
    let mut c = vec![1.0];
    for k in 0..m as usize {
        let mut next = vec![0.0; c.len() + 1];
        for (j, &cj) in c.iter().enumerate() {
            let qq = q + (k + j) as f64;
            next[j] += cj * 2.0 * qq * (nf - 2.0 - 2.0 * qq);
            next[j + 1] += cj * 4.0 * qq * (qq + 1.0);
        }
        c = next;
    }
    Ok(UqCoefficients { n, q, m, terms: c.into_iter().enumerate().collect() })
}

/// `C0 |x|^{-θ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSolution {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub theta: f64,
    pub params: ProblemParams,
}

impl SingularSolution {
    pub fn eval(&self, r: f64) -> f64 {
        self.c0 * r.powf(-self.theta)
    }

    pub fn profile(&self, grid: &RadialGrid) -> RadialFunction {
        let values = grid.nodes().iter().map(|&r| self.eval(r)).collect();
        let law = PowerLaw::new(self.c0, -self.theta);
        RadialFunction::with_laws(grid.clone(), values, law, law).expect("finite singular profile")
    }
}

pub fn singular_solution(params: &ProblemParams) -> Result<SingularSolution> {
    params.validate_model()?;
    let ex = compute_exponents(params)?;
    match ex.c0 {
        Some(c0) => Ok(SingularSolution { c0, theta: ex.theta, params: *params }),
        None => Err(Error::NoSingularSolution(ex.k)),
    }
}

/// `σ̃ = (n−2m)p − (n+2m+σ)`, the weight carried by the Kelvin image.
pub fn kelvin_sigma(params: &ProblemParams) -> f64 {
    let (n, m2) = (params.dim(), params.order());
    (n - m2) * params.p - (n + m2 + params.sigma)
}

/// `v(r) = r^{2m−n} u(1/r)` on the reciprocal grid. The power laws swap
/// ends, so every node is exact and nothing is extrapolated.
pub fn kelvin_transform(u: &RadialFunction, n: u32, m: u32) -> RadialFunction {
    let k = 2.0 * m as f64 - n as f64;
    let grid = u.grid().reciprocal();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.values().iter().rev())
        .map(|(&s, &v)| s.powf(k) * v)
        .collect();
    let swap = |law: PowerLaw| PowerLaw::new(law.coeff, k - law.exponent);
    RadialFunction::with_laws(grid, values, swap(u.tail_law), swap(u.inner_law))
        .expect("kelvin image of a finite profile")
}
