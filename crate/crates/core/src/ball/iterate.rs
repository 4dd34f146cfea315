use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::green::GreenBallOperator;
use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::radial::{PowerLaw, RadialFunction};

#[derive(Clone, Copy, Debug)]
pub struct MonotoneOptions {
    /// Stop when the sup-change falls below `tol · max(1, sup u)`.
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_cap: f64,
    pub growth_steps: usize,
    /// Allowed node-wise decrease, relative to `max(1, sup u)`.
    pub monotone_tol: f64,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 400_000, divergence_cap: 1e8, growth_steps: 50, monotone_tol: 1e-12 }
    }
}

/// One solution of `(A)_λ`.
#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    #[serde(skip)]
    pub u: RadialFunction,
    pub sup_norm: f64,
    pub iterations: usize,
}

impl BranchPoint {
    pub fn u_at_zero(&self) -> f64 {
        self.u.values()[0]
    }
}

#[derive(Clone, Debug)]
pub enum MonotoneOutcome {
    Converged { point: BranchPoint, worst_step: f64 },
    Diverged { iterations: usize, sup: f64 },
    Capped { iterations: usize, sup: f64, change: f64 },
}

/// Minimal branch from bisection plus any continued large solutions.
#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub lambda_star_bracket: (f64, f64),
    pub warnings: Vec<String>,
    pub continuation: Vec<BranchPoint>,
}

pub(crate) struct Lifted<'a> {
    op: &'a GreenBallOperator,
    dense: DMatrix<f64>,
    weight: Vec<f64>,
    p: f64,
    sigma: f64,
}

impl<'a> Lifted<'a> {
    pub(crate) fn new(op: &'a GreenBallOperator, params: &ProblemParams) -> Result<Self> {
        params.validate_model()?;
        if params.sigma <= -params.order() {
            return Err(Error::Domain(format!("sigma = {} must exceed -2m", params.sigma)));
        }
        if params.n != op.n() || params.m != op.m() {
            return Err(Error::InvalidParams("Green operator built for other (n, m)".into()));
        }
        let dense = op.dense_with_inner(params.sigma)?;
        let weight = op.grid().nodes().iter().map(|r| r.powf(params.sigma)).collect();
        Ok(Self { op, dense, weight, p: params.p, sigma: params.sigma })
    }

    pub(crate) fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub(crate) fn source(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(u.len(), u.iter().zip(&self.weight).map(|(v, w)| w * (1.0 + v).powf(self.p)))
    }

    pub(crate) fn source_derivative(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.weight).map(|(v, w)| self.p * w * (1.0 + v).powf(self.p - 1.0)).collect()
    }

    pub(crate) fn profile(&self, values: Vec<f64>) -> Result<RadialFunction> {
        let grid = self.op.grid().clone();
        let inner = PowerLaw::new(values[0], 0.0);
        RadialFunction::with_laws(grid, values, inner, PowerLaw::zero())
    }

    pub(crate) fn sigma(&self) -> f64 {
        self.sigma
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Runs `w_{k+1} = λ G[|x|^σ (1+w_k)^p]` from `start` (default `0`),
/// checking node-wise monotonicity at every step.
pub fn monotone_probe(
    op: &GreenBallOperator,
    params: &ProblemParams,
    lambda: f64,
    start: Option<&[f64]>,
    opts: MonotoneOptions,
) -> Result<MonotoneOutcome> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be positive")));
    }
    let lifted = Lifted::new(op, params)?;
    let len = op.grid().len();
    let mut w = match start {
        Some(s) if s.len() == len => s.to_vec(),
        Some(_) => return Err(Error::InvalidParams("warm start has wrong length".into())),
        None => vec![0.0; len],
    };
    let mut next = DVector::zeros(len);
    let mut worst = 0.0f64;
    let mut growing = 0usize;
    let mut last_sup = sup(&w);
    let mut change = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let src = lifted.source(&w);
        next.gemv(lambda, lifted.dense(), &src, 0.0);
        let s = sup(next.as_slice());
        if !s.is_finite() {
            return Ok(MonotoneOutcome::Diverged { iterations: it, sup: f64::INFINITY });
        }
        let scale = s.max(1.0);
        change = 0.0;
        for (a, b) in next.iter().zip(&w) {
            let d = a - b;
            worst = worst.min(d / scale);
            change = change.max(d.abs());
        }
        if worst < -opts.monotone_tol {
            return Err(Error::Consistency(format!(
                "monotone iteration decreased by {:.3e} (relative) at step {it}",
                -worst
            )));
        }
        w.copy_from_slice(next.as_slice());
        growing = if s > last_sup { growing + 1 } else { 0 };
        last_sup = s;
        if s > opts.divergence_cap && growing >= opts.growth_steps.min(it) {
            return Ok(MonotoneOutcome::Diverged { iterations: it, sup: s });
        }
        if change <= opts.tol * scale {
            let u = lifted.profile(w)?;
            let point = BranchPoint { lambda, sup_norm: s, iterations: it, u };
            return Ok(MonotoneOutcome::Converged { point, worst_step: worst });
        }
    }
    Ok(MonotoneOutcome::Capped { iterations: opts.max_iter, sup: last_sup, change })
}

/// Minimal solution `u_λ` of `(A)_λ`.
pub fn monotone_iterate(op: &GreenBallOperator, params: &ProblemParams, lambda: f64) -> Result<BranchPoint> {
    match monotone_probe(op, params, lambda, None, MonotoneOptions::default())? {
        MonotoneOutcome::Converged { point, .. } => Ok(point),
        MonotoneOutcome::Diverged { iterations, sup } => Err(Error::NonConvergence(format!(
            "monotone iteration diverged at lambda = {lambda}: sup {sup:.3e} after {iterations} steps"
        ))),
        MonotoneOutcome::Capped { iterations, sup, change } => Err(Error::NonConvergence(format!(
            "iteration cap {iterations} at lambda = {lambda}: sup {sup:.3e}, last change {change:.3e}"
        ))),
    }
}

/// Bisection on convergence of the monotone iteration. Converged probes
/// become the branch; the returned bracket has width below `tol`.
pub fn estimate_lambda_star(
    op: &GreenBallOperator,
    params: &ProblemParams,
    tol: f64,
) -> Result<((f64, f64), Branch)> {
    estimate_lambda_star_with(op, params, tol, MonotoneOptions::default())
}

pub fn estimate_lambda_star_with(
    op: &GreenBallOperator,
    params: &ProblemParams,
    tol: f64,
    opts: MonotoneOptions,
) -> Result<((f64, f64), Branch)> {
    let lifted = Lifted::new(op, params)?;
    let wbar = op.apply_values(&lifted.weight, lifted.sigma());
    let lambda0 = (1.0 + sup(&wbar)).powf(-params.p);
    let mut warnings = Vec::new();
    let mut points: Vec<BranchPoint> = Vec::new();

    let first = match monotone_probe(op, params, lambda0, None, opts)? {
        MonotoneOutcome::Converged { point, .. } => point,
        _ => return Err(Error::Consistency(format!("no convergence at the safe lambda {lambda0:.6e}"))),
    };
    let mut lo = lambda0;
    let mut warm = first.u.values().to_vec();
    points.push(first);

    let mut hi = 2.0 * lo;
    let mut found = false;
    for _ in 0..80 {
        match monotone_probe(op, params, hi, Some(&warm), opts)? {
            MonotoneOutcome::Converged { point, .. } => {
                lo = hi;
                warm = point.u.values().to_vec();
                points.push(point);
                hi *= 2.0;
            }
            MonotoneOutcome::Diverged { .. } => {
                found = true;
                break;
            }
            MonotoneOutcome::Capped { iterations, .. } => {
                warnings.push(format!("cap of {iterations} steps at lambda = {hi}; treated as divergent"));
                found = true;
                break;
            }
        }
    }
    if !found {
        return Err(Error::NonConvergence("no divergent lambda found".into()));
    }

    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        match monotone_probe(op, params, mid, Some(&warm), opts)? {
            MonotoneOutcome::Converged { point, .. } => {
                lo = mid;
                warm = point.u.values().to_vec();
                points.push(point);
            }
            MonotoneOutcome::Diverged { .. } => hi = mid,
            MonotoneOutcome::Capped { iterations, .. } => {
                warnings.push(format!("cap of {iterations} steps at lambda = {mid}; bracket widened"));
                hi = mid;
            }
        }
    }
    points.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let branch = Branch { points, lambda_star_bracket: (lo, hi), warnings, continuation: Vec::new() };
    Ok(((lo, hi), branch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::build_green;
    use crate::radial::RadialGrid;

    fn op31() -> GreenBallOperator {
        build_green(3, 1, &RadialGrid::geometric(1e-6, 1.0, 128).unwrap()).unwrap()
    }

    #[test]
    fn small_lambda_linearisation() {
        let op = op31();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let wbar = op.apply_values(&vec![1.0; 128], 0.0);
        let lam = 1e-6;
        let u = monotone_iterate(&op, &params, lam).unwrap();
        let ratio = u.u_at_zero() / lam;
        assert!((ratio / wbar[0] - 1.0).abs() < 1e-5);
        // constant source: w̄ = (1 − r²)/6
        assert!((wbar[0] - 1.0 / 6.0).abs() < 1e-10);
    }

    #[test]
    fn iterates_below_supersolution() {
        let op = op31();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let wbar = op.apply_values(&vec![1.0; 128], 0.0);
        let lam0 = (1.0 + sup(&wbar)).powf(-2.0);
        let u = monotone_iterate(&op, &params, lam0).unwrap();
        for (a, b) in u.u.values().iter().zip(&wbar) {
            assert!(*a <= b + 1e-12);
        }
    }

    #[test]
    fn lambda_star_brackets_and_branch_monotone() {
        let op = op31();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let (br, branch) = estimate_lambda_star(&op, &params, 1e-3).unwrap();
        assert!(br.1 - br.0 < 1e-3);
        let u0: Vec<f64> = branch.points.iter().map(|p| p.u_at_zero()).collect();
        assert!(u0.windows(2).all(|w| w[1] >= w[0]));
        // grid refinement changes the estimate by far less than 20%
        let fine = build_green(3, 1, &RadialGrid::geometric(1e-6, 1.0, 192).unwrap()).unwrap();
        let (br2, _) = estimate_lambda_star(&fine, &params, 1e-3).unwrap();
        assert!((br2.0 / br.0 - 1.0).abs() < 0.2);
    }

    #[test]
    fn minimality_from_supersolution() {
        let op = op31();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let lam = 0.5;
        let u = monotone_iterate(&op, &params, lam).unwrap();
        // 1.05·u is a supersolution here; iterating from it stays above u_λ
        let start: Vec<f64> = u.u.values().iter().map(|x| 1.05 * x).collect();
        let lifted = Lifted::new(&op, &params).unwrap();
        let mut w = start;
        for _ in 0..2000 {
            let src = lifted.source(&w);
            let next = lifted.dense() * src * lam;
            w = next.iter().copied().collect();
        }
        for (a, b) in w.iter().zip(u.u.values()) {
            assert!(*a >= b - 1e-9);
        }
    }

    #[test]
    fn rejects_bad_lambda() {
        let op = op31();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        assert!(monotone_probe(&op, &params, -1.0, None, MonotoneOptions::default()).is_err());
    }
}
