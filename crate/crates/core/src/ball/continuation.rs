use nalgebra::{DMatrix, DVector};

use super::green::GreenBallOperator;
use super::iterate::{BranchPoint, Lifted};
use crate::error::{Error, Result};
use crate::exponents::ProblemParams;

/// Continuation in the amplitude `s = u(r_min)`.
#[derive(Clone, Copy, Debug)]
pub struct ContinuationOptions {
    pub s_max: f64,
    pub growth: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_iter: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self { s_max: 1e6, growth: 1.15, max_steps: 600, newton_tol: 1e-11, newton_iter: 30 }
    }
}

struct State {
    u: Vec<f64>,
    lambda: f64,
    s: f64,
}

/// Follows the branch through `start` until `u(r_min) ≥ s_max`.
/// Each step solves the bordered system in `(u, λ)` with `u(r_min)` pinned.
pub fn continue_in_amplitude(
    op: &GreenBallOperator,
    params: &ProblemParams,
    start: &BranchPoint,
    opts: ContinuationOptions,
) -> Result<Vec<BranchPoint>> {
    if !(opts.growth > 1.0) {
        return Err(Error::InvalidParams(format!("growth = {} must exceed 1", opts.growth)));
    }
    let lifted = Lifted::new(op, params)?;
    let len = op.grid().len();
    if start.u.len() != len {
        return Err(Error::InvalidParams("start point lives on another grid".into()));
    }
    let mut cur = State { u: start.u.values().to_vec(), lambda: start.lambda, s: start.u_at_zero() };
    if !(cur.s > 0.0) {
        return Err(Error::InvalidParams("start point must have u(r_min) > 0".into()));
    }
    let mut prev: Option<State> = None;
    let mut out = Vec::new();
    let mut growth = opts.growth;
    let mut steps = 0usize;
    while cur.s < opts.s_max {
        if steps >= opts.max_steps {
            return Err(Error::NonConvergence(format!(
                "continuation stopped at u0 = {:.3e} after {steps} steps",
                cur.s
            )));
        }
        steps += 1;
        let target = (cur.s * growth).min(opts.s_max);
        let (guess, lguess) = predict(&cur, prev.as_ref(), target);
        match corrector(&lifted, guess, lguess, target, opts) {
            Some((u, lambda, iters)) => {
                let point = BranchPoint {
                    lambda,
                    sup_norm: u.iter().fold(0.0f64, |a, x| a.max(x.abs())),
                    iterations: iters,
                    u: lifted.profile(u.clone())?,
                };
                out.push(point);
                prev = Some(std::mem::replace(&mut cur, State { u, lambda, s: target }));
                growth = (growth * 1.2).min(opts.growth);
            }
            None => {
                growth = 1.0 + 0.5 * (growth - 1.0);
                if growth < 1.0 + 1e-4 {
                    return Err(Error::NonConvergence(format!(
                        "continuation step collapsed at u0 = {:.3e}, lambda = {:.6}",
                        cur.s, cur.lambda
                    )));
                }
            }
        }
    }
    Ok(out)
}

/// Secant extrapolation in `(log s, log(1+u), λ)`.
fn predict(cur: &State, prev: Option<&State>, target: f64) -> (Vec<f64>, f64) {
    match prev {
        Some(p) => {
            let fac = (target / cur.s).ln() / (cur.s / p.s).ln();
            let u = cur
                .u
                .iter()
                .zip(&p.u)
                .map(|(a, b)| {
                    let (la, lb) = ((1.0 + a).ln(), (1.0 + b).ln());
                    (la + fac * (la - lb)).exp() - 1.0
                })
                .collect();
            (u, cur.lambda + fac * (cur.lambda - p.lambda))
        }
        None => (cur.u.iter().map(|v| v * target / cur.s).collect(), cur.lambda),
    }
}

fn corrector(
    lifted: &Lifted,
    mut u: Vec<f64>,
    mut lambda: f64,
    target: f64,
    opts: ContinuationOptions,
) -> Option<(Vec<f64>, f64, usize)> {
    let len = u.len();
    let dense = lifted.dense();
    for it in 1..=opts.newton_iter {
        if u.iter().any(|v| !(v.is_finite() && *v > -1.0)) || !lambda.is_finite() {
            return None;
        }
        let g = lifted.source(&u);
        let gu = dense * &g;
        let dg = lifted.source_derivative(&u);
        let mut jac = DMatrix::zeros(len + 1, len + 1);
        for j in 0..len {
            let c = lambda * dg[j];
            for i in 0..len {
                jac[(i, j)] = -c * dense[(i, j)];
            }
        }
        for i in 0..len {
            jac[(i, i)] += 1.0;
            jac[(i, len)] = -gu[i];
        }
        jac[(len, 0)] = 1.0;
        let mut rhs = DVector::zeros(len + 1);
        for i in 0..len {
            rhs[i] = -(u[i] - lambda * gu[i]);
        }
        rhs[len] = target - u[0];
        let d = jac.lu().solve(&rhs)?;
        let mut step = 0.0f64;
        for i in 0..len {
            u[i] += d[i];
            step = step.max(d[i].abs());
        }
        lambda += d[len];
        if step / target.max(1.0) < opts.newton_tol {
            return Some((u, lambda, it));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{build_green, monotone_iterate};
    use crate::radial::RadialGrid;

    #[test]
    fn continuation_matches_minimal_branch() {
        let op = build_green(3, 1, &RadialGrid::geometric(1e-6, 1.0, 128).unwrap()).unwrap();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let start = monotone_iterate(&op, &params, 0.2).unwrap();
        let opts = ContinuationOptions { s_max: 4.0 * start.u_at_zero(), ..Default::default() };
        let pts = continue_in_amplitude(&op, &params, &start, opts).unwrap();
        assert!(!pts.is_empty());
        // early points sit on the minimal branch, reproduced by monotone iteration
        let early = &pts[0];
        let again = monotone_iterate(&op, &params, early.lambda).unwrap();
        assert!((again.u_at_zero() / early.u_at_zero() - 1.0).abs() < 1e-8);
        // each continued point solves the integral equation
        let lifted = Lifted::new(&op, &params).unwrap();
        for p in &pts {
            let g = lifted.source(p.u.values());
            let res = lifted.dense() * g * p.lambda;
            let err = res.iter().zip(p.u.values()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(err < 1e-9 * p.sup_norm.max(1.0));
        }
        let last = pts.last().unwrap();
        assert!((last.u_at_zero() - opts.s_max).abs() < 1e-9 * opts.s_max);
    }

    #[test]
    fn rejects_flat_growth() {
        let op = build_green(3, 1, &RadialGrid::geometric(1e-6, 1.0, 64).unwrap()).unwrap();
        let params = ProblemParams::new(3, 1, 0.0, 2.0);
        let start = monotone_iterate(&op, &params, 0.1).unwrap();
        let opts = ContinuationOptions { growth: 1.0, ..Default::default() };
        assert!(continue_in_amplitude(&op, &params, &start, opts).is_err());
    }
}
