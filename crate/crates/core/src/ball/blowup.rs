use serde::Serialize;

use super::iterate::{Branch, BranchPoint};
use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::radial::{RadialFunction, RadialGrid};

/// `v_k(x) = u^{λ_k}(r_k x) / u^{λ_k}(0)` with `λ_k r_k^{2m+σ} u(0)^{p−1} = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupProfile {
    pub lambda: f64,
    pub u_at_zero: f64,
    pub r_k: f64,
    #[serde(skip)]
    pub v: RadialFunction,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupResult {
    pub profiles: Vec<BlowupProfile>,
    /// Sup-distance between successive profiles on the target grid.
    pub cauchy: Vec<f64>,
    #[serde(skip)]
    pub limit: RadialFunction,
}

/// Rescales every branch point with `u(0) ≥ threshold` onto `target`,
/// ordered by increasing `u(0)`. The last profile is the limit.
pub fn blowup_rescale(
    branch: &Branch,
    params: &ProblemParams,
    target: &RadialGrid,
    threshold: f64,
) -> Result<BlowupResult> {
    params.validate_model()?;
    let mut pts: Vec<&BranchPoint> = branch
        .points
        .iter()
        .chain(&branch.continuation)
        .filter(|p| p.u_at_zero() >= threshold)
        .collect();
    if pts.len() < 2 {
        let top = branch.points.iter().chain(&branch.continuation).map(|p| p.u_at_zero()).fold(0.0, f64::max);
        return Err(Error::InsufficientBlowup(format!(
            "{} points above u(0) = {threshold:.3e}; largest u(0) is {top:.3e}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.u_at_zero().total_cmp(&b.u_at_zero()));
    let a = params.order() + params.sigma;
    let profiles: Vec<BlowupProfile> = pts
        .iter()
        .map(|p| {
            let u0 = p.u_at_zero();
            let r_k = (p.lambda * u0.powf(params.p - 1.0)).powf(-1.0 / a);
            let values: Vec<f64> = target.nodes().iter().map(|&x| p.u.eval(r_k * x).max(0.0) / u0).collect();
            let v = RadialFunction::with_end_slopes(target.clone(), values, (0.0, -params.theta()))?;
            Ok(BlowupProfile { lambda: p.lambda, u_at_zero: u0, r_k, v })
        })
        .collect::<Result<_>>()?;
    let cauchy = profiles
        .windows(2)
        .map(|w| w[0].v.values().iter().zip(w[1].v.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
        .collect();
    let limit = profiles.last().expect("at least two profiles").v.clone();
    Ok(BlowupResult { profiles, cauchy, limit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::PowerLaw;

    fn point(lambda: f64, u0: f64, grid: &RadialGrid) -> BranchPoint {
        // exact profile u = u0 (1 + (r/ε)²)^{-1/2}, so v is independent of ε
        let eps = u0.powf(-2.0);
        let values = grid.nodes().iter().map(|r| u0 / (1.0 + (r / eps).powi(2)).sqrt()).collect();
        let u = RadialFunction::with_laws(grid.clone(), values, PowerLaw::new(u0, 0.0), PowerLaw::zero()).unwrap();
        BranchPoint { lambda, sup_norm: u0, iterations: 0, u }
    }

    #[test]
    fn normalisation_and_bounds() {
        let ball = RadialGrid::geometric(1e-10, 1.0, 400).unwrap();
        let params = ProblemParams::new(3, 1, 0.0, 5.0);
        let branch = Branch {
            points: vec![point(1.0, 10.0, &ball), point(1.0, 100.0, &ball)],
            lambda_star_bracket: (1.0, 1.1),
            warnings: vec![],
            continuation: vec![point(1.0, 1000.0, &ball)],
        };
        let target = RadialGrid::geometric(1e-2, 1e2, 64).unwrap();
        let res = blowup_rescale(&branch, &params, &target, 50.0).unwrap();
        assert_eq!(res.profiles.len(), 2);
        for p in &res.profiles {
            assert!(p.v.values().iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
            assert!((p.v.values()[0] - 1.0).abs() < 1e-3);
            // r_k^2 u0^4 = 1 and ε = u0^{-2}
            assert!((p.r_k * p.u_at_zero.powi(2) - 1.0).abs() < 1e-12);
        }
        assert!(res.cauchy[0] < 1e-8);
    }

    #[test]
    fn too_short() {
        let ball = RadialGrid::geometric(1e-6, 1.0, 64).unwrap();
        let params = ProblemParams::new(3, 1, 0.0, 5.0);
        let branch = Branch {
            points: vec![point(1.0, 2.0, &ball)],
            lambda_star_bracket: (1.0, 1.1),
            warnings: vec![],
            continuation: vec![],
        };
        let target = RadialGrid::geometric(1e-2, 1e2, 64).unwrap();
        assert!(matches!(blowup_rescale(&branch, &params, &target, 1e3), Err(Error::InsufficientBlowup(_))));
    }
}
