//! Entire radial solutions of `u = C(2m) I_{2m}(|x|^σ u^p)` on `ℝⁿ`.
//!
//! The unknown is the vector of nodal values on a geometric grid. Below
//! `r_min` the profile is held constant and above `r_max` it follows a fixed
//! tail law, so the source has explicit power-law ends and the Riesz
//! operator closes the system.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::{compute_exponents, ProblemParams};
use crate::radial::{t_derivative, PowerLaw, RadialFunction, RadialGrid, RieszOperator};
use crate::verify::{sph_orders, SphOrder};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    /// Newton on the nodal system.
    Newton,
    /// `u ← (1−τ)u + τ T(u)`, rescaled to the anchor after every step.
    Picard { damping: f64 },
}

/// Decay law held beyond `r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// `r^{2m−n}`
    Fast,
    /// `r^{−θ}`
    Slow,
}

#[derive(Clone, Copy, Debug)]
pub struct EntireOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Radius `r*` of the normalisation `u(r*) = init(r*)`; radii at or
    /// below `r_min` select the innermost node.
    pub anchor_radius: f64,
    /// Overrides the tail chosen from the exponents.
    pub tail: Option<TailMode>,
    /// Sup-norm growth or decay factor that counts as blow-up or collapse.
    pub divergence_factor: f64,
    /// Rescale the guess by `κ^{-1/(p−1)}`, `κ = T(u)/u` at the innermost
    /// node, before Newton.
    pub normalize_guess: bool,
}

impl Default for EntireOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            method: Method::Newton,
            anchor_radius: 0.0,
            tail: None,
            divergence_factor: 1e8,
            normalize_guess: true,
        }
    }
}

/// Least-squares line through `(log r, log u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFit {
    pub coeff: f64,
    pub exponent: f64,
    pub max_residual: f64,
    pub window: (f64, f64),
    pub nodes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub u_at_zero: f64,
    pub decay_fit: Option<PowerFit>,
    pub sph_summary: Vec<SphOrder>,
    pub tail_mode: TailMode,
    pub method: Method,
    /// Whether the anchor was pinned during the iteration.
    pub pinned: bool,
    /// Multiplier of the scaling direction in the last bordered step.
    pub multiplier: Option<f64>,
    pub anchor: (f64, f64),
    /// Residual after every iteration.
    pub trajectory: Vec<f64>,
}

/// Starting profiles.
#[derive(Clone, Debug)]
pub enum InitialGuess {
    /// `a (1+r²)^{−θ/2}` with `a = C0` when the singular solution exists.
    Bubble,
    /// `C0 max(r, 1)^{−θ}`.
    TruncatedSingular,
    /// Bubble with random amplitude, width and smooth log-perturbation.
    Perturbed { seed: u64, index: u64 },
    Profile(RadialFunction),
}

impl InitialGuess {
    pub fn label(&self) -> String {
        match self {
            Self::Bubble => "bubble".into(),
            Self::TruncatedSingular => "truncated-singular".into(),
            Self::Perturbed { seed, index } => format!("perturbed-{seed}-{index}"),
            Self::Profile(_) => "profile".into(),
        }
    }

    pub fn build(&self, params: &ProblemParams, grid: &RadialGrid) -> Result<RadialFunction> {
        let ex = compute_exponents(params)?;
        let theta = ex.theta;
        let amp = ex.c0.unwrap_or(1.0);
        let decay = match params.dim() > params.order() {
            true => -tail_exponent(tail_mode_for(params)?, params),
            false => theta,
        };
        let bubble = |a: f64, w: f64, r: f64| a * (1.0 + (r / w).powi(2)).powf(-0.5 * decay);
        match self {
            Self::Bubble => RadialFunction::from_fn(grid, |r| bubble(amp, 1.0, r), 0.0, -decay),
            Self::TruncatedSingular => RadialFunction::from_fn(grid, |r| amp * r.max(1.0).powf(-theta), 0.0, -theta),
            Self::Perturbed { seed, index } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*index);
                let a = amp * rng.random_range(-1.0f64..1.0).exp();
                let w = rng.random_range(-1.5f64..1.5).exp();
                let modes: Vec<f64> = (1..=4).map(|k| rng.random_range(-0.4..0.4) / k as f64).collect();
                let (t0, t1) = (grid.r_min().ln(), grid.r_max().ln());
                RadialFunction::from_fn(
                    grid,
                    |r| {
                        let x = (r.ln() - t0) / (t1 - t0);
                        let bump: f64 = modes
                            .iter()
                            .enumerate()
                            .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * x).sin())
                            .sum();
                        bubble(a, w, r) * bump.exp()
                    },
                    0.0,
                    -decay,
                )
            }
            Self::Profile(u) => {
                if u.grid().digest() == grid.digest() {
                    Ok(u.clone())
                } else {
                    Ok(u.resample(grid).0)
                }
            }
        }
    }
}

/// Nodal form of `T(u) = C(2m) I_{2m}(|x|^σ u^p)` with its end laws.
struct Fixed<'a> {
    op: &'a RieszOperator,
    weight: Vec<f64>,
    p: f64,
    /// `∂T/∂f_0` and `∂T/∂f_{N−1}` through the end laws.
    inner: Vec<f64>,
    tail: Vec<f64>,
}

impl<'a> Fixed<'a> {
    fn new(op: &'a RieszOperator, params: &ProblemParams, tail_exp: f64) -> Result<Self> {
        let grid = op.grid();
        let sigma = params.sigma;
        let f_tail = sigma + params.p * tail_exp;
        let inner: Vec<f64> =
            op.inner_moment(sigma)?.into_iter().map(|x| x * grid.r_min().powf(-sigma)).collect();
        let tail: Vec<f64> =
            op.tail_moment(f_tail)?.into_iter().map(|x| x * grid.r_max().powf(-f_tail)).collect();
        let weight = grid.nodes().iter().map(|r| r.powf(sigma)).collect();
        Ok(Self { op, weight, p: params.p, inner, tail })
    }

    fn source(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.weight).map(|(v, w)| w * v.powf(self.p)).collect()
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let f = self.source(u);
        let c = self.op.constant();
        let last = f.len() - 1;
        let mf = self.op.matrix() * DVector::from_column_slice(&f);
        mf.iter()
            .zip(self.inner.iter().zip(&self.tail))
            .map(|(x, (a, b))| c * x + a * f[0] + b * f[last])
            .collect()
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let len = u.len();
        let c = self.op.constant();
        let d: Vec<f64> = u.iter().zip(&self.weight).map(|(v, w)| self.p * w * v.powf(self.p - 1.0)).collect();
        let m = self.op.matrix();
        let mut jac = DMatrix::from_fn(len, len, |i, j| -c * m[(i, j)] * d[j]);
        for i in 0..len {
            jac[(i, i)] += 1.0;
            jac[(i, 0)] -= self.inner[i] * d[0];
            jac[(i, len - 1)] -= self.tail[i] * d[len - 1];
        }
        jac
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn residual(u: &[f64], tu: &[f64]) -> f64 {
    let diff = u.iter().zip(tu).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    diff / sup(u)
}

pub fn tail_mode_for(params: &ProblemParams) -> Result<TailMode> {
    let ex = compute_exponents(params)?;
    Ok(if params.p > ex.p_sobolev.value() {
        TailMode::Slow
    } else {
        TailMode::Fast
    })
}

fn tail_exponent(mode: TailMode, params: &ProblemParams) -> f64 {
    match mode {
        TailMode::Fast => params.order() - params.dim(),
        TailMode::Slow => -params.theta(),
    }
}

struct Outcome {
    u: Vec<f64>,
    iterations: usize,
    multiplier: Option<f64>,
    trajectory: Vec<f64>,
}

/// Solves the integral equation from `init`.
///
/// Newton runs pinned at the anchor with a bordered scaling direction when
/// the fast tail is held, and unpinned otherwise.
pub fn solve_entire(
    params: &ProblemParams,
    init: &RadialFunction,
    op: &RieszOperator,
    opts: &EntireOptions,
) -> Result<(RadialFunction, SolveReport)> {
    params.validate_model()?;
    let (n, m) = (params.n, params.m);
    if n <= 2 * m {
        return Err(Error::Unsupported(format!("entire solver needs n > 2m, got n = {n}, m = {m}")));
    }
    if params.sigma <= -params.order() {
        return Err(Error::Domain(format!("sigma = {} must exceed -2m", params.sigma)));
    }
    if op.n() != n || op.m() != m {
        return Err(Error::InvalidParams("Riesz operator built for other (n, m)".into()));
    }
    let grid = op.grid();
    let init = InitialGuess::Profile(init.clone()).build(params, grid)?;
    if init.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParams("initial profile must be positive".into()));
    }
    let mode = match opts.tail {
        Some(t) => t,
        None => tail_mode_for(params)?,
    };
    let tail_exp = tail_exponent(mode, params);
    let fixed = Fixed::new(op, params, tail_exp)?;
    let init = match opts.method {
        Method::Newton if opts.normalize_guess => {
            let kappa = fixed.apply(init.values())[0] / init.values()[0];
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(Error::InvalidParams(format!("guess gives T(u)/u = {kappa:e} at r_min")));
            }
            let c = kappa.powf(-1.0 / (params.p - 1.0));
            RadialFunction::new(grid.clone(), init.values().iter().map(|v| c * v).collect(), 0.0, tail_exp)?
        }
        _ => init,
    };
    let ia = if opts.anchor_radius <= grid.r_min() { 0 } else { grid.nearest(opts.anchor_radius) };
    let anchor = (grid.nodes()[ia], init.values()[ia]);
    let pinned = matches!(opts.method, Method::Newton) && mode == TailMode::Fast;

    let out = match opts.method {
        Method::Newton => newton(&fixed, params, init.values().to_vec(), pinned, ia, opts),
        Method::Picard { damping } => picard(&fixed, params, init.values().to_vec(), damping, ia, opts),
    }?;

    let tu = fixed.apply(&out.u);
    let res = residual(&out.u, &tu);
    if !(res < opts.tol) {
        return Err(Error::NonConvergence(format!(
            "residual {res:.3e} above tolerance {:.1e} after {} iterations",
            opts.tol, out.iterations
        )));
    }
    let values = out.u;
    let u0 = values[0];
    let last = *values.last().expect("non-empty grid");
    let u = RadialFunction::with_laws(
        grid.clone(),
        values,
        PowerLaw::new(u0, 0.0),
        PowerLaw::through(grid.r_max(), last, tail_exp),
    )?;
    let window = (grid.r_max() * 1e-3, grid.r_max());
    let decay_fit = fit_power_law(&u, window).ok();
    let sph_summary = if m >= 2 { sph_orders(&u, n, m)? } else { Vec::new() };
    let report = SolveReport {
        converged: true,
        iterations: out.iterations,
        residual: res,
        u_at_zero: u0,
        decay_fit,
        sph_summary,
        tail_mode: mode,
        method: opts.method,
        pinned,
        multiplier: out.multiplier,
        anchor,
        trajectory: out.trajectory,
    };
    Ok((u, report))
}

fn summary(trajectory: &[f64]) -> String {
    let tail: Vec<String> = trajectory.iter().rev().take(4).rev().map(|r| format!("{r:.2e}")).collect();
    format!("residuals [.., {}]", tail.join(", "))
}

fn check_bounds(u: &[f64], scale0: f64, opts: &EntireOptions, it: usize, traj: &[f64]) -> Result<()> {
    let s = sup(u);
    if !s.is_finite() || s > scale0 * opts.divergence_factor {
        return Err(Error::NonConvergence(format!("blow-up at iteration {it}: sup u = {s:.3e}; {}", summary(traj))));
    }
    if s < scale0 / opts.divergence_factor {
        return Err(Error::NonConvergence(format!("collapse at iteration {it}: sup u = {s:.3e}; {}", summary(traj))));
    }
    Ok(())
}

fn newton(
    fixed: &Fixed,
    params: &ProblemParams,
    mut u: Vec<f64>,
    pinned: bool,
    ia: usize,
    opts: &EntireOptions,
) -> Result<Outcome> {
    let len = u.len();
    let h = fixed.op.grid().log_step();
    let theta = params.theta();
    let target = u[ia];
    let scale0 = sup(&u);
    // scaling generator θu + r u'
    let psi = |u: &[f64]| -> Vec<f64> {
        let du = t_derivative(u, h, 1);
        u.iter().zip(&du).map(|(a, b)| theta * a + b).collect()
    };
    // G = u − T(u) − μψ(u); μ stays 0 when unpinned
    let extended = |u: &[f64], tu: &[f64], mu: f64| -> Vec<f64> {
        let ps = if mu != 0.0 { psi(u) } else { vec![0.0; u.len()] };
        u.iter().zip(tu).zip(&ps).map(|((a, b), c)| a - b - mu * c).collect()
    };
    let merit = |u: &[f64], g: &[f64]| u.iter().zip(g).fold(0.0f64, |m, (a, b)| m.max((b / a).abs()));
    let mut trajectory = Vec::new();
    let mut mu = 0.0;
    let mut tu = fixed.apply(&u);
    for it in 1..=opts.max_iter {
        let g = extended(&u, &tu, mu);
        let mut jac = fixed.jacobian(&u);
        let (step, dmu) = if pinned {
            let ps = psi(&u);
            jac = jac.resize(len + 1, len + 1, 0.0);
            for i in 0..len {
                jac[(i, len)] = -ps[i];
            }
            jac[(len, ia)] = 1.0;
            let mut rhs = DVector::zeros(len + 1);
            for i in 0..len {
                rhs[i] = -g[i];
            }
            rhs[len] = target - u[ia];
            let d = jac
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NonConvergence(format!("singular bordered Jacobian at iteration {it}")))?;
            (d.rows(0, len).iter().copied().collect::<Vec<f64>>(), d[len])
        } else {
            let rhs = DVector::from_iterator(len, g.iter().map(|x| -x));
            let d = jac
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NonConvergence(format!("singular Jacobian at iteration {it}")))?;
            (d.iter().copied().collect(), 0.0)
        };
        let m0 = merit(&u, &g);
        let mut lam = 1.0;
        let (next, tnext, mnext) = loop {
            let cand: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + lam * d).collect();
            if cand.iter().all(|v| *v > 0.0) {
                let tc = fixed.apply(&cand);
                let mc = mu + lam * dmu;
                if merit(&cand, &extended(&cand, &tc, mc)) < (1.0 - 1e-4 * lam) * m0 {
                    break (cand, tc, mc);
                }
            }
            lam *= 0.5;
            if lam < 1e-4 {
                return Err(Error::NonConvergence(format!(
                    "line search stalled at iteration {it}; {}",
                    summary(&trajectory)
                )));
            }
        };
        u = next;
        tu = tnext;
        mu = mnext;
        let res = residual(&u, &tu);
        trajectory.push(res);
        check_bounds(&u, scale0, opts, it, &trajectory)?;
        if res < opts.tol {
            let multiplier = pinned.then_some(mu);
            return Ok(Outcome { u, iterations: it, multiplier, trajectory });
        }
    }
    Err(Error::NonConvergence(format!("iteration cap {} reached; {}", opts.max_iter, summary(&trajectory))))
}

fn picard(
    fixed: &Fixed,
    params: &ProblemParams,
    mut u: Vec<f64>,
    damping: f64,
    ia: usize,
    opts: &EntireOptions,
) -> Result<Outcome> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParams(format!("damping = {damping} outside (0, 1]")));
    }
    let target = u[ia];
    let scale0 = sup(&u);
    let mut tau = damping;
    let mut last_change = f64::INFINITY;
    let mut trajectory = Vec::new();
    for it in 1..=opts.max_iter {
        let tu = fixed.apply(&u);
        let mut next: Vec<f64> = u.iter().zip(&tu).map(|(a, b)| (1.0 - tau) * a + tau * b).collect();
        let k = target / next[ia];
        next.iter_mut().for_each(|v| *v *= k);
        if next.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::NonConvergence(format!("iterate lost positivity at step {it}")));
        }
        let change = residual(&next, &u);
        if change > last_change {
            tau = (0.5 * tau).max(1e-3);
        }
        last_change = change;
        u = next;
        trajectory.push(change);
        check_bounds(&u, scale0, opts, it, &trajectory)?;
        if change < 0.1 * opts.tol {
            // T(v) = κ v on the normalised fixed point, so κ^{−1/(p−1)} v solves u = T(u)
            let tv = fixed.apply(&u);
            let kappa = tv[ia] / u[ia];
            let a = kappa.powf(-1.0 / (params.p - 1.0));
            u.iter_mut().for_each(|v| *v *= a);
            return Ok(Outcome { u, iterations: it, multiplier: None, trajectory });
        }
    }
    Err(Error::NonConvergence(format!("iteration cap {} reached; {}", opts.max_iter, summary(&trajectory))))
}

/// Fits `u ≈ a r^e` over the nodes inside `window`.
pub fn fit_power_law(u: &RadialFunction, window: (f64, f64)) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(r, _)| **r >= window.0 * (1.0 - 1e-12) && **r <= window.1 * (1.0 + 1e-12))
        .map(|(r, v)| (*r, *v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InvalidParams(format!("window holds {} nodes, need 8", pts.len())));
    }
    if let Some((r, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("non-positive value {v} at r = {r}")));
    }
    let k = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (r, v)| (a + r.ln(), b + v.ln()));
    let (mx, my) = (sx / k, sy / k);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (r, v)| {
        let dx = r.ln() - mx;
        (a + dx * dx, b + dx * (v.ln() - my))
    });
    let e = sxy / sxx;
    let la = my - e * mx;
    let max_residual = pts.iter().fold(0.0f64, |m, (r, v)| m.max((v.ln() - la - e * r.ln()).abs()));
    Ok(PowerFit { coeff: la.exp(), exponent: e, max_residual, window, nodes: pts.len() })
}

/// `s^θ u(s r)` on the same grid, extended by the power laws where `s r`
/// leaves it.
pub fn scale_profile(u: &RadialFunction, theta: f64, s: f64) -> Result<RadialFunction> {
    let k = s.powf(theta);
    let values = u.grid().nodes().iter().map(|&r| k * u.eval(s * r)).collect();
    let law = |l: PowerLaw| PowerLaw::new(l.coeff * k * s.powf(l.exponent), l.exponent);
    RadialFunction::with_laws(u.grid().clone(), values, law(u.inner_law), law(u.tail_law))
}

/// Family member with value 1 at the origin: `u(s r)/u(0)`, `s = u(0)^{−1/θ}`.
pub fn normalize_at_origin(u: &RadialFunction, theta: f64) -> Result<RadialFunction> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("normalisation needs theta > 0, got {theta}")));
    }
    let u0 = u.values()[0];
    scale_profile(u, theta, u0.powf(-1.0 / theta))
}

/// Positive, node-wise non-increasing and flat at the inner end.
pub fn is_classical_profile(u: &RadialFunction) -> bool {
    let v = u.values();
    let r = u.grid().nodes();
    let positive = v.iter().all(|x| *x > 0.0);
    let monotone = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let flat = positive && ((v[8] / v[0]).ln() / (r[8] / r[0]).ln()).abs() < 0.05;
    positive && monotone && flat
}

#[derive(Clone, Debug, Serialize)]
pub struct StartOutcome {
    pub index: usize,
    pub init: String,
    pub converged: bool,
    pub classical: bool,
    pub iterations: Option<usize>,
    pub u_at_zero: Option<f64>,
    pub message: Option<String>,
}

/// Independent solves from the bubble, the truncated singular profile and
/// `starts − 2` seeded random perturbations.
pub fn multistart(
    params: &ProblemParams,
    op: &RieszOperator,
    opts: &EntireOptions,
    starts: usize,
    seed: u64,
) -> Result<Vec<StartOutcome>> {
    params.validate_model()?;
    let guesses: Vec<InitialGuess> = (0..starts)
        .map(|i| match i {
            0 => InitialGuess::Bubble,
            1 => InitialGuess::TruncatedSingular,
            _ => InitialGuess::Perturbed { seed, index: i as u64 },
        })
        .collect();
    guesses
        .par_iter()
        .enumerate()
        .map(|(index, g)| {
            let init = g.build(params, op.grid())?;
            let label = g.label();
            Ok(match solve_entire(params, &init, op, opts) {
                Ok((u, rep)) => StartOutcome {
                    index,
                    init: label,
                    converged: true,
                    classical: is_classical_profile(&u),
                    iterations: Some(rep.iterations),
                    u_at_zero: Some(rep.u_at_zero),
                    message: None,
                },
                Err(Error::NonConvergence(msg)) => StartOutcome {
                    index,
                    init: label,
                    converged: false,
                    classical: false,
                    iterations: None,
                    u_at_zero: None,
                    message: Some(msg),
                },
                Err(e) => return Err(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::AngularOptions;
    use std::sync::OnceLock;

    fn grid() -> RadialGrid {
        RadialGrid::geometric(1e-3, 1e3, 257).unwrap()
    }

    fn op31() -> &'static RieszOperator {
        static OP: OnceLock<RieszOperator> = OnceLock::new();
        OP.get_or_init(|| RieszOperator::build(3, 1, &grid(), AngularOptions::default()).unwrap())
    }

    fn op72() -> &'static RieszOperator {
        static OP: OnceLock<RieszOperator> = OnceLock::new();
        OP.get_or_init(|| RieszOperator::build(7, 2, &grid(), AngularOptions::default()).unwrap())
    }

    fn bubble_init(g: &RadialGrid) -> RadialFunction {
        RadialFunction::from_fn(g, |r| (1.0 + r * r).powf(-0.5), 0.0, -1.0).unwrap()
    }

    #[test]
    fn exact_power_fit() {
        let g = grid();
        let u = RadialFunction::from_fn(&g, |r| 5.0 * r.powi(-2), -2.0, -2.0).unwrap();
        let f = fit_power_law(&u, (0.1, 10.0)).unwrap();
        assert!((f.coeff - 5.0).abs() < 1e-10 && (f.exponent + 2.0).abs() < 1e-10);
        let b = bubble_init(&g);
        let near = fit_power_law(&b, (1.0, 10.0)).unwrap().exponent;
        let far = fit_power_law(&b, (100.0, 1000.0)).unwrap().exponent;
        assert!((far + 1.0).abs() < (near + 1.0).abs() && (far + 1.0).abs() < 1e-4);
        assert!(fit_power_law(&b, (2.0, 2.1)).is_err());
    }

    #[test]
    fn bubble_is_reproduced() {
        let params = ProblemParams::new(3, 1, 0.0, 5.0);
        let init = bubble_init(op31().grid());
        let (u, rep) = solve_entire(&params, &init, op31(), &EntireOptions::default()).unwrap();
        assert!(rep.converged && rep.pinned && rep.iterations <= 200);
        assert_eq!(rep.tail_mode, TailMode::Fast);
        // anchored member s^{1/2} 3^{1/4}(1+s²r²)^{-1/2} with u(1) = 2^{-1/2}
        let c = 3f64.powf(0.25);
        let (r1, c1) = rep.anchor;
        let g = |s: f64| c * s.sqrt() / (1.0 + s * s * r1 * r1).sqrt() - c1;
        let (mut lo, mut hi) = (1e-6, 1.0 / r1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        let s = 0.5 * (lo + hi);
        let err = u
            .grid()
            .nodes()
            .iter()
            .zip(u.values())
            .map(|(r, v)| {
                let e = c * s.sqrt() / (1.0 + s * s * r * r).sqrt();
                ((v - e) / e).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn scaling_covariance() {
        let params = ProblemParams::new(3, 1, 0.0, 5.0);
        let init = bubble_init(op31().grid());
        let scaled = scale_profile(&init, 0.5, 1.7).unwrap();
        let opts = EntireOptions::default();
        let (a, _) = solve_entire(&params, &init, op31(), &opts).unwrap();
        let (b, _) = solve_entire(&params, &scaled, op31(), &opts).unwrap();
        let (na, nb) = (normalize_at_origin(&a, 0.5).unwrap(), normalize_at_origin(&b, 0.5).unwrap());
        for (r, (x, y)) in na.grid().nodes().iter().zip(na.values().iter().zip(nb.values())) {
            if (0.1..=10.0).contains(r) {
                assert!((x / y - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn supercritical_biharmonic() {
        let params = ProblemParams::new(7, 2, 0.0, 4.0);
        let init = InitialGuess::Bubble.build(&params, op72().grid()).unwrap();
        let (u, rep) = solve_entire(&params, &init, op72(), &EntireOptions::default()).unwrap();
        assert_eq!(rep.tail_mode, TailMode::Slow);
        assert!(!rep.pinned);
        let fit = rep.decay_fit.unwrap();
        assert!((fit.exponent / (-4.0 / 3.0) - 1.0).abs() < 0.05);
        assert!(is_classical_profile(&u));
        assert!(rep.sph_summary.iter().all(|s| s.positive));
        // independent single application of T
        let fixed = Fixed::new(op72(), &params, -4.0 / 3.0).unwrap();
        assert!(residual(u.values(), &fixed.apply(u.values())) < 1e-9);
    }

    /// RK4 for `Δ²u = u⁴` in `ℝ⁷` as a first-order system in
    /// `(u, u', v, v')` with `v = −Δu`, started from the regular series.
    fn shoot(b: f64, r_end: f64, steps: usize) -> Vec<(f64, f64)> {
        let n = 7.0;
        let rhs = |r: f64, y: [f64; 4]| {
            [y[1], -y[2] - (n - 1.0) / r * y[1], y[3], -y[0].abs().powi(4) - (n - 1.0) / r * y[3]]
        };
        let r0 = 1e-4;
        let mut y = [1.0 - b * r0 * r0 / (2.0 * n), -b * r0 / n, b - r0 * r0 / (2.0 * n), -r0 / n];
        let h = (r_end - r0) / steps as f64;
        let mut out = Vec::with_capacity(steps);
        let mut r = r0;
        for _ in 0..steps {
            let k1 = rhs(r, y);
            let add = |y: [f64; 4], k: [f64; 4], c: f64| [y[0] + c * k[0], y[1] + c * k[1], y[2] + c * k[2], y[3] + c * k[3]];
            let k2 = rhs(r + 0.5 * h, add(y, k1, 0.5 * h));
            let k3 = rhs(r + 0.5 * h, add(y, k2, 0.5 * h));
            let k4 = rhs(r + h, add(y, k3, h));
            for i in 0..4 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += h;
            out.push((r, y[0]));
        }
        out
    }

    #[test]
    fn matches_shooting_profile() {
        // -Δu(0) of the entire solution with u(0) = 1, frozen from bisection
        // on the shooting parameter
        let b = 0.6608622037378731;
        let path = shoot(b, 10.0, 200_000);
        let params = ProblemParams::new(7, 2, 0.0, 4.0);
        let init = InitialGuess::Bubble.build(&params, op72().grid()).unwrap();
        let (u, _) = solve_entire(&params, &init, op72(), &EntireOptions::default()).unwrap();
        let v = normalize_at_origin(&u, 4.0 / 3.0).unwrap();
        let mut worst = 0.0f64;
        for (r, w) in path.iter().step_by(997).filter(|(r, _)| *r >= 0.1) {
            worst = worst.max((v.eval(*r) / w - 1.0).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn subcritical_multistart_fails() {
        let params = ProblemParams::new(7, 2, 0.0, 3.0);
        let outs = multistart(&params, op72(), &EntireOptions::default(), 4, 7).unwrap();
        assert!(outs.iter().all(|o| !(o.converged && o.classical)));
    }

    #[test]
    fn perturbed_guesses_are_deterministic() {
        let params = ProblemParams::new(7, 2, 0.0, 4.0);
        let g = grid();
        let a = InitialGuess::Perturbed { seed: 3, index: 5 }.build(&params, &g).unwrap();
        let b = InitialGuess::Perturbed { seed: 3, index: 5 }.build(&params, &g).unwrap();
        let c = InitialGuess::Perturbed { seed: 3, index: 6 }.build(&params, &g).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn rejects_low_dimension() {
        let g = RadialGrid::geometric(1e-2, 1e2, 64).unwrap();
        let op = RieszOperator::build(3, 1, &g, AngularOptions::default()).unwrap();
        let params = ProblemParams::new(2, 1, 0.0, 3.0);
        let init = bubble_init(&g);
        assert!(solve_entire(&params, &init, &op, &EntireOptions::default()).is_err());
    }
}
