//! Scaling exponents and regime classification.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ball::GreenBallOperator;
use crate::error::{Error, Result};

/// The tuple `(n, m, σ, p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: u32,
    pub m: u32,
    pub sigma: f64,
    pub p: f64,
}

impl ProblemParams {
    pub fn new(n: u32, m: u32, sigma: f64, p: f64) -> Self {
        Self { n, m, sigma, p }
    }

    /// Structural checks shared by every operation.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if !self.sigma.is_finite() || !self.p.is_finite() {
            return Err(Error::InvalidParams("sigma and p must be finite".into()));
        }
        if self.sigma == -2.0 * self.m as f64 {
            return Err(Error::CriticalWeight);
        }
        Ok(())
    }

    /// Checks required before any solve: also `p > 1`.
    pub fn validate_model(&self) -> Result<()> {
        self.validate()?;
        if self.p == 1.0 {
            return Err(Error::DegenerateExponent);
        }
        if self.p < 1.0 {
            return Err(Error::OutOfModel(self.p));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        (2.0 * self.m as f64 + self.sigma) / (self.p - 1.0)
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    pub fn order(&self) -> f64 {
        2.0 * self.m as f64
    }
}

/// A real exponent or `+∞`, totally ordered.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(x) => x,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Exponent::Finite(_))
    }

    /// Total order; finite values compare with `f64::total_cmp`.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => a.total_cmp(b),
            (Exponent::Finite(_), Exponent::Infinite) => Ordering::Less,
            (Exponent::Infinite, Exponent::Finite(_)) => Ordering::Greater,
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
        }
    }

    /// `x < self`
    pub fn exceeds(self, x: f64) -> bool {
        match self {
            Exponent::Finite(v) => x < v,
            Exponent::Infinite => true,
        }
    }

    /// `x >= self`
    pub fn reached_by(self, x: f64) -> bool {
        !self.exceeds(x)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(x) => write!(f, "{x}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(x) => s.serialize_f64(*x),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Exponent::Finite(x)),
            Raw::Str(s) if s == "inf" => Ok(Exponent::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad exponent {s}"))),
        }
    }
}

/// Derived exponents of a parameter point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub theta: f64,
    pub p_sobolev: Exponent,
    pub p_serrin: Exponent,
    /// Product constant of the singular solution.
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
}

/// `∏_{k<m}(θ+2k) · ∏_{k=1..m}(n−2k−θ)`
pub fn k_product(n: u32, m: u32, theta: f64) -> f64 {
    let n = n as f64;
    let mut k = 1.0;
    for j in 0..m {
        k *= theta + 2.0 * j as f64;
    }
    for j in 1..=m {
        k *= n - 2.0 * j as f64 - theta;
    }
    k
}

pub fn compute_exponents(params: &ProblemParams) -> Result<Exponents> {
    params.validate()?;
    if params.p == 1.0 {
        return Err(Error::DegenerateExponent);
    }
    let (n, m2, sigma) = (params.dim(), params.order(), params.sigma);
    let theta = params.theta();
    let (p_sobolev, p_serrin) = if n > m2 {
        (
            Exponent::Finite((n + m2 + 2.0 * sigma) / (n - m2)),
            Exponent::Finite((n + sigma) / (n - m2)),
        )
    } else {
        (Exponent::Infinite, Exponent::Infinite)
    };
    let k = k_product(params.n, params.m, theta);
    let c0 = (k > 0.0).then(|| k.powf(1.0 / (params.p - 1.0)));
    Ok(Exponents { theta, p_sobolev, p_serrin, k, c0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NoneExists,
    Exists,
    Unknown,
}

/// Statements a verdict can rest on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    DistributionalLiouville,
    CriticalDimensionNonexistence,
    ClassicalLiouville,
    SupercriticalExistence,
    SingularSolution,
    PuncturedIsDistributional,
    NegativeThetaWitness,
    OpenPuncturedNecessity,
    OpenStrongHardyDistributional,
    OpenClassical,
}

impl Statement {
    pub fn describe(self) -> &'static str {
        match self {
            Statement::DistributionalLiouville => {
                "no distributional solution when n - 2m - theta <= 0"
            }
            Statement::CriticalDimensionNonexistence => "no classical solution when n = 2m",
            Statement::ClassicalLiouville => {
                "no classical solution for n >= 2m, sigma > -2m, 1 < p < p_S"
            }
            Statement::SupercriticalExistence => {
                "radial positive classical solutions for n > 2m, sigma > -2m, p >= p_S"
            }
            Statement::SingularSolution => "C0|x|^-theta solves the equation off the origin when K > 0",
            Statement::PuncturedIsDistributional => {
                "a punctured solution with n - 2m - theta > 0 is distributional"
            }
            Statement::NegativeThetaWitness => {
                "C0|x|^-theta is classical when K > 0 and theta < 0"
            }
            Statement::OpenPuncturedNecessity => {
                "open: whether K > 0 is necessary for punctured solutions"
            }
            Statement::OpenStrongHardyDistributional => {
                "open: distributional solutions for sigma < -2m with n - 2m - theta > 0"
            }
            Statement::OpenClassical => "open: no statement covers this classical regime",
        }
    }
}

/// One verdict with the statement it rests on and the predicates evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub theorem: Statement,
    pub statement: String,
    pub predicates: BTreeMap<String, f64>,
}

impl Certificate {
    fn new(verdict: Verdict, theorem: Statement, predicates: &BTreeMap<String, f64>) -> Self {
        Self {
            verdict,
            theorem,
            statement: theorem.describe().to_string(),
            predicates: predicates.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeCertificate {
    pub params: ProblemParams,
    pub exponents: Exponents,
    pub distributional: Certificate,
    pub classical: Certificate,
    pub punctured: Certificate,
}

pub fn classify(params: &ProblemParams) -> Result<RegimeCertificate> {
    params.validate_model()?;
    let ex = compute_exponents(params)?;
    let n = params.dim();
    let m2 = params.order();
    let sigma = params.sigma;
    let p = params.p;
    let gap = n - m2 - ex.theta;

    let mut pred = BTreeMap::new();
    pred.insert("theta".to_string(), ex.theta);
    pred.insert("n-2m-theta".to_string(), gap);
    pred.insert("K".to_string(), ex.k);
    pred.insert("sigma+2m".to_string(), sigma + m2);
    if let Exponent::Finite(ps) = ex.p_sobolev {
        pred.insert("p-p_S".to_string(), p - ps);
    }
    if let Exponent::Finite(pc) = ex.p_serrin {
        pred.insert("p-p_c".to_string(), p - pc);
    }

    let weight_ok = sigma > -m2;
    let distributional = if gap <= 0.0 {
        Certificate::new(Verdict::NoneExists, Statement::DistributionalLiouville, &pred)
    } else if weight_ok && ex.p_serrin.is_finite() && p > ex.p_serrin.value() {
        Certificate::new(Verdict::Exists, Statement::SingularSolution, &pred)
    } else if ex.k > 0.0 {
        Certificate::new(Verdict::Exists, Statement::PuncturedIsDistributional, &pred)
    } else {
        Certificate::new(Verdict::Unknown, Statement::OpenStrongHardyDistributional, &pred)
    };

    let classical = if n >= m2 && weight_ok && ex.p_sobolev.exceeds(p) {
        let st = if n == m2 {
            Statement::CriticalDimensionNonexistence
        } else {
            Statement::ClassicalLiouville
        };
        Certificate::new(Verdict::NoneExists, st, &pred)
    } else if n > m2 && weight_ok && ex.p_sobolev.reached_by(p) {
        Certificate::new(Verdict::Exists, Statement::SupercriticalExistence, &pred)
    } else if ex.k > 0.0 && ex.theta < 0.0 {
        Certificate::new(Verdict::Exists, Statement::NegativeThetaWitness, &pred)
    } else {
        Certificate::new(Verdict::Unknown, Statement::OpenClassical, &pred)
    };

    let punctured = if ex.k > 0.0 {
        Certificate::new(Verdict::Exists, Statement::SingularSolution, &pred)
    } else {
        Certificate::new(Verdict::Unknown, Statement::OpenPuncturedNecessity, &pred)
    };

    Ok(RegimeCertificate { params: *params, exponents: ex, distributional, classical, punctured })
}

/// Options for the power iteration behind [`first_eigenvalue`].
#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000 }
    }
}

/// `λ_{1,σ}` of `(−Δ)^m u = λ|x|^σ u` on the unit ball.
pub fn first_eigenvalue(n: u32, m: u32, sigma: f64, green: &GreenBallOperator) -> Result<f64> {
    first_eigenvalue_with(n, m, sigma, green, EigenOptions::default())
}

pub fn first_eigenvalue_with(
    n: u32,
    m: u32,
    sigma: f64,
    green: &GreenBallOperator,
    opts: EigenOptions,
) -> Result<f64> {
    if sigma <= -2.0 * m as f64 {
        return Err(Error::Domain(format!("sigma = {sigma} must exceed -2m")));
    }
    if n <= 2 * m {
        return Err(Error::Unsupported(format!("n = {n} must exceed 2m = {}", 2 * m)));
    }
    if green.n() != n || green.m() != m {
        return Err(Error::InvalidParams("Green operator built for other (n, m)".into()));
    }
    let grid = green.grid();
    let weight: Vec<f64> = grid.nodes().iter().map(|r| r.powf(sigma)).collect();
    let quad = crate::radial::RadialQuadrature::new(grid, n as f64 + sigma);
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        quad.integrate(&prod)
    };

    let mut f = vec![1.0; grid.len()];
    let mut prev = f64::NAN;
    let mut prev2 = f64::NAN;
    for _ in 0..opts.max_iter {
        let src: Vec<f64> = f.iter().zip(&weight).map(|(a, w)| a * w).collect();
        let g = green.apply_values(&src, sigma);
        let rho = inner(&f, &g) / inner(&f, &f);
        let norm = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonConvergence("power iteration lost its iterate".into()));
        }
        f = g.iter().map(|x| x / norm).collect();
        if (rho - prev).abs() <= opts.tol * rho.abs() {
            return Ok(1.0 / rho);
        }
        prev2 = prev;
        prev = rho;
    }
    Err(Error::NonConvergence(format!(
        "power iteration cap reached; last quotients {prev2:.12e}, {prev:.12e}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pp(n: u32, m: u32, sigma: f64, p: f64) -> ProblemParams {
        ProblemParams::new(n, m, sigma, p)
    }

    #[test]
    fn lane_emden_three_dims() {
        let e = compute_exponents(&pp(3, 1, 0.0, 5.0)).unwrap();
        assert!((e.theta - 0.5).abs() < 1e-15);
        assert_eq!(e.p_sobolev, Exponent::Finite(5.0));
        assert_eq!(e.p_serrin, Exponent::Finite(3.0));
    }

    #[test]
    fn infinite_exponents_in_low_dimension() {
        let e = compute_exponents(&pp(4, 2, 0.0, 2.0)).unwrap();
        assert_eq!(e.p_sobolev, Exponent::Infinite);
        assert_eq!(e.p_serrin, Exponent::Infinite);
    }

    #[test]
    fn biharmonic_product_constant() {
        let e = compute_exponents(&pp(7, 2, 0.0, 3.0)).unwrap();
        assert_eq!(e.k, 24.0);
        assert!((e.c0.unwrap() - 24f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn p_one_is_degenerate() {
        assert_eq!(compute_exponents(&pp(3, 1, 0.0, 1.0)), Err(Error::DegenerateExponent));
    }

    #[test]
    fn critical_weight_rejected() {
        assert_eq!(classify(&pp(3, 1, -2.0, 2.0)).unwrap_err(), Error::CriticalWeight);
        assert!(matches!(classify(&pp(3, 1, 0.0, 0.5)), Err(Error::OutOfModel(_))));
    }

    #[test]
    fn subcritical_biharmonic() {
        let c = classify(&pp(7, 2, 0.0, 2.0)).unwrap();
        assert_eq!(c.distributional.verdict, Verdict::NoneExists);
        assert_eq!(c.classical.verdict, Verdict::NoneExists);
        assert_eq!(c.classical.theorem, Statement::ClassicalLiouville);
        assert!((c.distributional.predicates["n-2m-theta"] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn supercritical_biharmonic() {
        let c = classify(&pp(7, 2, 0.0, 4.0)).unwrap();
        assert_eq!(c.classical.verdict, Verdict::Exists);
        assert_eq!(c.distributional.verdict, Verdict::Exists);
        assert_eq!(c.punctured.verdict, Verdict::Exists);
    }

    #[test]
    fn negative_theta_witness() {
        let c = classify(&pp(5, 3, -6.5, 2.0)).unwrap();
        assert!((c.exponents.theta + 0.5).abs() < 1e-15);
        assert!((c.exponents.k - 6.890625).abs() < 1e-12);
        assert_eq!(c.punctured.verdict, Verdict::Exists);
        assert_eq!(c.classical.verdict, Verdict::Exists);
        assert_eq!(c.classical.theorem, Statement::NegativeThetaWitness);
        assert_eq!(c.distributional.verdict, Verdict::NoneExists);
    }

    #[test]
    fn critical_dimension() {
        let c = classify(&pp(4, 2, 0.0, 3.0)).unwrap();
        assert_eq!(c.classical.verdict, Verdict::NoneExists);
        assert_eq!(c.classical.theorem, Statement::CriticalDimensionNonexistence);
    }

    #[test]
    fn unknown_punctured_when_k_negative() {
        let c = classify(&pp(7, 2, 0.0, 2.0)).unwrap();
        assert!(c.exponents.k < 0.0);
        assert_eq!(c.punctured.verdict, Verdict::Unknown);
        assert_eq!(c.punctured.theorem, Statement::OpenPuncturedNecessity);
    }

    #[test]
    fn sobolev_boundary_is_closed() {
        // p = p_S exactly: (n, m, σ) = (6, 1, 0), p_S = 2
        let c = classify(&pp(6, 1, 0.0, 2.0)).unwrap();
        assert_eq!(c.exponents.p_sobolev, Exponent::Finite(2.0));
        assert_eq!(c.classical.verdict, Verdict::Exists);
        // p = p_c exactly: (6, 1, 0), p_c = 1.5 gives n - 2m - θ = 0
        let c = classify(&pp(6, 1, 0.0, 1.5)).unwrap();
        assert_eq!(c.distributional.verdict, Verdict::NoneExists);
    }

    #[test]
    fn json_shape() {
        let c = classify(&pp(7, 2, 0.0, 2.0)).unwrap();
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        assert_eq!(v["distributional"]["verdict"], "NoneExists");
        assert!(v["distributional"]["theorem"].is_string());
        assert!(v["distributional"]["predicates"].is_object());
        let v = serde_json::to_value(compute_exponents(&pp(4, 2, 0.0, 2.0)).unwrap()).unwrap();
        assert_eq!(v["p_sobolev"], "inf");
    }

    #[test]
    fn exponent_order_is_total() {
        let xs = [Exponent::Infinite, Exponent::Finite(2.0), Exponent::Finite(-1.0)];
        let mut s = xs.to_vec();
        s.sort_by(Exponent::total_cmp);
        assert_eq!(s, vec![Exponent::Finite(-1.0), Exponent::Finite(2.0), Exponent::Infinite]);
        assert!(Exponent::Infinite.exceeds(1e300));
    }

    #[test]
    fn k_roots_vanish() {
        for (n, m) in [(3u32, 1u32), (7, 2), (9, 3), (12, 4)] {
            for j in 0..m {
                assert_eq!(k_product(n, m, -2.0 * j as f64), 0.0);
            }
            for j in 1..=m {
                assert_eq!(k_product(n, m, n as f64 - 2.0 * j as f64), 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn serrin_below_sobolev(n in 3u32..20, m in 1u32..5, sigma in -3.9f64..6.0, p in 1.01f64..9.0) {
            prop_assume!(n > 2 * m);
            prop_assume!(sigma > -2.0 * m as f64);
            let e = compute_exponents(&pp(n, m, sigma, p)).unwrap();
            prop_assert!(e.p_serrin.value() < e.p_sobolev.value());
        }

        #[test]
        fn theta_at_sobolev(n in 3u32..20, m in 1u32..5, sigma in -1.9f64..6.0) {
            prop_assume!(n > 2 * m);
            let nf = n as f64; let m2 = 2.0 * m as f64;
            let ps = (nf + m2 + 2.0 * sigma) / (nf - m2);
            prop_assume!(ps > 1.0 + 1e-6);
            let theta = (m2 + sigma) / (ps - 1.0);
            prop_assert!((theta - (nf - m2) / 2.0).abs() < 1e-9 * (1.0 + theta.abs()));
        }

        #[test]
        fn serrin_crossing_flips_distributional(n in 3u32..16, m in 1u32..4, sigma in -1.5f64..5.0, d in 0.01f64..2.0) {
            prop_assume!(n > 2 * m);
            let e = compute_exponents(&pp(n, m, sigma, 2.0)).unwrap();
            let pc = e.p_serrin.value();
            prop_assume!(pc - d > 1.0);
            let below = classify(&pp(n, m, sigma, pc - d)).unwrap();
            let above = classify(&pp(n, m, sigma, pc + d)).unwrap();
            prop_assert_eq!(below.distributional.verdict, Verdict::NoneExists);
            prop_assert_eq!(above.distributional.verdict, Verdict::Exists);
        }

        #[test]
        fn certificates_consistent(n in 1u32..16, m in 1u32..5, sigma in -12.0f64..8.0, p in 1.05f64..9.0) {
            let params = pp(n, m, sigma, p);
            prop_assume!(params.validate().is_ok());
            let c = classify(&params).unwrap();
            let gap = c.distributional.predicates["n-2m-theta"];
            if c.classical.verdict == Verdict::Exists && c.distributional.verdict == Verdict::NoneExists {
                prop_assert!(gap <= 0.0);
            }
            if c.classical.verdict == Verdict::Exists && gap > 0.0 {
                prop_assert_eq!(c.distributional.verdict, Verdict::Exists);
            }
        }
    }
}
