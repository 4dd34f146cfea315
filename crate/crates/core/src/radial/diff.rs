use super::function::RadialFunction;
use crate::error::{Error, Result};

/// Finite-difference half width; the central stencils are 8th order.
pub const HALF: usize = 4;
const WIDTH: usize = 2 * HALF + 1;

/// Fornberg's recursion: `w[k][j]` is the weight of node `j` in the
/// `k`-th derivative at `x0`.
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Precomputed weights on a uniform unit-spaced 9-point window, for every
/// offset of the evaluation point inside the window.
#[derive(Clone, Debug)]
pub struct Stencil {
    /// `w[offset][order][j]`, orders 1 and 2.
    w: Vec<Vec<Vec<f64>>>,
}

impl Stencil {
    pub fn new() -> Self {
        let xs: Vec<f64> = (0..WIDTH).map(|j| j as f64).collect();
        let w = (0..WIDTH).map(|o| fornberg_weights(o as f64, &xs, 2)).collect();
        Self { w }
    }

    fn apply(&self, v: &[f64], i: usize, order: usize, h: f64) -> f64 {
        let n = v.len();
        let start = i.saturating_sub(HALF).min(n - WIDTH);
        let w = &self.w[i - start][order];
        let s: f64 = w.iter().zip(&v[start..start + WIDTH]).map(|(a, b)| a * b).sum();
        s / h.powi(order as i32)
    }
}

impl Default for Stencil {
    fn default() -> Self {
        Self::new()
    }
}

/// `d^k v / dt^k` at every node; one-sided windows near the ends.
pub fn t_derivative(values: &[f64], h: f64, order: usize) -> Vec<f64> {
    assert!(order == 1 || order == 2);
    let st = Stencil::new();
    (0..values.len()).map(|i| st.apply(values, i, order, h)).collect()
}

/// `−Δu = −r^{-2}(u_tt + (n−2)u_t)` on all nodes.
pub fn laplacian_full(values: &[f64], nodes: &[f64], h: f64, n: u32) -> Vec<f64> {
    let st = Stencil::new();
    let k = n as f64 - 2.0;
    (0..values.len())
        .map(|i| {
            let d1 = st.apply(values, i, 1, h);
            let d2 = st.apply(values, i, 2, h);
            -(d2 + k * d1) / (nodes[i] * nodes[i])
        })
        .collect()
}

fn neg_laplacian_interior(values: &[f64], nodes: &[f64], h: f64, n: u32) -> Vec<f64> {
    let st = Stencil::new();
    let k = n as f64 - 2.0;
    (HALF..values.len() - HALF)
        .map(|i| {
            let d1 = st.apply(values, i, 1, h);
            let d2 = st.apply(values, i, 2, h);
            -(d2 + k * d1) / (nodes[i] * nodes[i])
        })
        .collect()
}

/// Discrete `(−Δ)^m u` on the nodes that keep a full central stencil
/// through all `m` applications.
pub fn radial_polyharmonic(u: &RadialFunction, n: u32, m: u32) -> Result<RadialFunction> {
    let trim = HALF * m as usize;
    let len = u.len();
    if len < 2 * trim + crate::radial::RadialGrid::MIN_NODES {
        return Err(Error::GridTooSmall(format!(
            "{len} nodes cannot absorb {trim} boundary layers per side"
        )));
    }
    let h = u.grid().log_step();
    let mut vals = u.values().to_vec();
    let mut nodes = u.grid().nodes().to_vec();
    for _ in 0..m {
        vals = neg_laplacian_interior(&vals, &nodes, h, n);
        nodes = nodes[HALF..nodes.len() - HALF].to_vec();
    }
    let grid = u.grid().subgrid(trim, len - trim)?;
    let m2 = 2.0 * m as f64;
    let fallback = (u.inner_law.exponent - m2, u.tail_law.exponent - m2);
    RadialFunction::with_end_slopes(grid, vals, fallback)
}
