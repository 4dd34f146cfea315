//! Gauss rules and the graded angular quadrature used by the kernel tables.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

use crate::special::sphere_area;

type Rule = Arc<[(f64, f64)]>;

/// Gauss-Legendre `(node, weight)` pairs on `[-1, 1]`, memoised by order.
pub fn gauss_legendre(q: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(q)
        .or_insert_with(|| {
            let deg = NonZeroUsize::new(q.max(1)).unwrap();
            GaussLegendre::new(deg).as_node_weight_pairs().into()
        })
        .clone()
}

/// Gauss-Jacobi pairs for the weight `(1-x)^α (1+x)^β` on `[-1, 1]`.
pub fn gauss_jacobi(q: usize, alpha: f64, beta: f64) -> Vec<(f64, f64)> {
    let deg = NonZeroUsize::new(q.max(2)).unwrap();
    let a = FiniteAboveNegOneF64::new(alpha).expect("jacobi alpha above -1");
    let b = FiniteAboveNegOneF64::new(beta).expect("jacobi beta above -1");
    GaussJacobi::new(deg, a, b).as_node_weight_pairs().to_vec()
}

/// Composite Gauss-Legendre rule in the polar angle, graded geometrically
/// toward `φ = 0` from a caller-supplied length scale.
#[derive(Clone, Copy, Debug)]
pub struct AngularQuadrature {
    pub n: u32,
    pub base_points: usize,
    pub max_points: usize,
    pub rel_tol: f64,
}

impl AngularQuadrature {
    pub fn new(n: u32) -> Self {
        Self { n, base_points: 8, max_points: 256, rel_tol: 1e-10 }
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// `∫_{S^{n-1}} g dσ` for a zonal `g`, passed as a function of
    /// `sin²(φ/2)`. Returns the value and the per-panel order accepted.
    ///
    /// The order is doubled until two successive estimates agree to
    /// `rel_tol`, up to `max_points`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, scale: f64, g: F) -> (f64, usize) {
        if self.n == 1 {
            return (g(0.0) + g(1.0), 1);
        }
        let breaks = panel_breaks(scale);
        let c = sphere_area(self.n - 1);
        let mut q = self.base_points;
        let mut prev = self.panels(&breaks, q, &g);
        loop {
            let q2 = 2 * q;
            let cur = self.panels(&breaks, q2, &g);
            let done = (cur - prev).abs() <= self.rel_tol * cur.abs() || q2 >= self.max_points;
            if done || !cur.is_finite() {
                return (c * cur, q2);
            }
            prev = cur;
            q = q2;
        }
    }

    fn panels<F: Fn(f64) -> f64>(&self, breaks: &[f64], q: usize, g: &F) -> f64 {
        let rule = gauss_legendre(q);
        let k = self.n as i32 - 2;
        let mut sum = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            let mut part = 0.0;
            for &(x, wt) in rule.iter() {
                let phi = mid + half * x;
                let sh = (0.5 * phi).sin();
                part += wt * g(sh * sh) * phi.sin().powi(k);
            }
            sum += half * part;
        }
        sum
    }
}

fn panel_breaks(scale: f64) -> Vec<f64> {
    let d = scale.abs().max(1e-9);
    if d >= 1.0 {
        return vec![0.0, 0.5 * PI, PI];
    }
    let mut b = vec![0.0, d];
    let mut x = d;
    while 2.0 * x < PI {
        x *= 2.0;
        b.push(x);
    }
    if PI - x < 0.25 * x {
        *b.last_mut().unwrap() = PI;
    } else {
        b.push(PI);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let r = gauss_legendre(6);
        let s: f64 = r.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_beta_moment() {
        // ∫_{-1}^{1} (1-x)^{-1/2} (1+x) dx = 8√2/3
        let r = gauss_jacobi(4, -0.5, 1.0);
        let s: f64 = r.iter().map(|(_, w)| w).sum();
        assert!((s - 8.0 * 2f64.sqrt() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_area_recovered() {
        for n in 1..9 {
            let (v, _) = AngularQuadrature::new(n).integrate(1.0, |_| 1.0);
            assert!((v - sphere_area(n)).abs() < 1e-12 * sphere_area(n), "n = {n}");
        }
    }

    #[test]
    fn zonal_moment() {
        // ∫_{S^2} cos²φ dσ = 4π/3
        let (v, _) = AngularQuadrature::new(3).integrate(0.3, |s| (1.0 - 2.0 * s).powi(2));
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn breaks_cover_half_circle() {
        for s in [1e-12, 1e-4, 0.3, 0.9, 3.0] {
            let b = panel_breaks(s);
            assert_eq!(b[0], 0.0);
            assert_eq!(*b.last().unwrap(), PI);
            assert!(b.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
