use super::grid::RadialGrid;
use crate::quadrature::gauss_legendre;

/// Width of the local Lagrange interpolant in `t`.
pub const STENCIL: usize = 8;

fn stencil_start(panel: usize, len: usize) -> usize {
    panel.saturating_sub(STENCIL / 2 - 1).min(len - STENCIL)
}

/// Stencil start and Lagrange basis values at log-radius `t`.
pub fn lagrange_at(grid: &RadialGrid, t: f64) -> (usize, [f64; STENCIL]) {
    let tn = grid.log_nodes();
    let start = stencil_start(grid.panel_of(t), grid.len());
    (start, basis(&tn[start..start + STENCIL], t))
}

fn basis(nodes: &[f64], t: f64) -> [f64; STENCIL] {
    let mut l = [1.0; STENCIL];
    for (a, la) in l.iter_mut().enumerate() {
        for b in 0..STENCIL {
            if a != b {
                *la *= (t - nodes[b]) / (nodes[a] - nodes[b]);
            }
        }
    }
    l
}

/// Gauss-Legendre points on every grid panel, with the interpolation
/// stencil used to carry nodal values there.
#[derive(Clone, Debug)]
pub struct PanelRule {
    pub q: usize,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub dt: Vec<f64>,
    pub start: Vec<usize>,
    pub basis: Vec<[f64; STENCIL]>,
}

impl PanelRule {
    pub fn new(grid: &RadialGrid, q: usize) -> Self {
        let tn = grid.log_nodes();
        let rule = gauss_legendre(q);
        let panels = grid.len() - 1;
        let mut out = Self {
            q,
            t: Vec::with_capacity(panels * q),
            s: Vec::with_capacity(panels * q),
            dt: Vec::with_capacity(panels * q),
            start: Vec::with_capacity(panels * q),
            basis: Vec::with_capacity(panels * q),
        };
        for j in 0..panels {
            let (a, b) = (tn[j], tn[j + 1]);
            let st = stencil_start(j, grid.len());
            for &(x, w) in rule.iter() {
                let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                out.t.push(t);
                out.s.push(t.exp());
                out.dt.push(0.5 * (b - a) * w);
                out.start.push(st);
                out.basis.push(basis(&tn[st..st + STENCIL], t));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Interpolated nodal values at every quadrature point.
    pub fn interpolate(&self, values: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let st = self.start[k];
                self.basis[k].iter().zip(&values[st..st + STENCIL]).map(|(l, v)| l * v).sum()
            })
            .collect()
    }
}

/// Weights for `∫ g(r) r^{w-1} dr` over the grid span, from the local
/// interpolant of the nodal values of `g`.
#[derive(Clone, Debug)]
pub struct RadialQuadrature {
    grid: RadialGrid,
    power: f64,
    weights: Vec<f64>,
    q: usize,
}

impl RadialQuadrature {
    pub fn new(grid: &RadialGrid, power: f64) -> Self {
        let rule = PanelRule::new(grid, 8);
        let mut weights = vec![0.0; grid.len()];
        for k in 0..rule.len() {
            let w = rule.dt[k] * (power * rule.t[k]).exp();
            let st = rule.start[k];
            for (a, l) in rule.basis[k].iter().enumerate() {
                weights[st + a] += w * l;
            }
        }
        Self { grid: grid.clone(), power, weights, q: 8 }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Integral over `[a, b]` clipped to the grid span.
    pub fn integrate_between(&self, values: &[f64], a: f64, b: f64) -> f64 {
        let tn = self.grid.log_nodes();
        let ta = a.max(self.grid.r_min()).ln();
        let tb = b.min(self.grid.r_max()).ln();
        if tb <= ta {
            return 0.0;
        }
        let rule = gauss_legendre(self.q);
        let (ja, jb) = (self.grid.panel_of(ta), self.grid.panel_of(tb));
        let mut sum = 0.0;
        for j in ja..=jb {
            let lo = tn[j].max(ta);
            let hi = tn[j + 1].min(tb);
            if hi <= lo {
                continue;
            }
            let st = stencil_start(j, self.grid.len());
            let nodes = &tn[st..st + STENCIL];
            for &(x, w) in rule.iter() {
                let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                let l = basis(nodes, t);
                let g: f64 = l.iter().zip(&values[st..st + STENCIL]).map(|(l, v)| l * v).sum();
                sum += 0.5 * (hi - lo) * w * g * (self.power * t).exp();
            }
        }
        sum
    }

    /// Running integral from `r_min` to each node.
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        let nodes = self.grid.nodes();
        let mut out = vec![0.0; nodes.len()];
        for i in 1..nodes.len() {
            out[i] = out[i - 1] + self.integrate_between(values, nodes[i - 1], nodes[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_reproduces_powers() {
        let g = RadialGrid::geometric(1e-2, 1e2, 200).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r.powf(-1.5)).collect();
        let rule = PanelRule::new(&g, 4);
        let vi = rule.interpolate(&v);
        let err = rule.s.iter().zip(vi).fold(0.0f64, |m, (s, x)| m.max((x / s.powf(-1.5) - 1.0).abs()));
        assert!(err < 1e-10);
    }

    #[test]
    fn moment_of_power() {
        // ∫_{0.1}^{10} r^2 · r^{2} dr = (10^5 - 10^-5)/5
        let g = RadialGrid::geometric(0.1, 10.0, 100).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
        let q = RadialQuadrature::new(&g, 3.0);
        let exact = (1e5 - 1e-5) / 5.0;
        assert!((q.integrate(&v) / exact - 1.0).abs() < 1e-10);
        let part = q.integrate_between(&v, 1.0, 2.0);
        assert!((part - 31.0 / 5.0).abs() < 1e-9);
        let c = q.cumulative(&v);
        assert!((c[99] / exact - 1.0).abs() < 1e-10);
    }
}
