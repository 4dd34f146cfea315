use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, AngularQuadrature};
use crate::radial::{AngularOptions, PanelRule, PowerLaw, RadialFunction, RadialGrid, STENCIL};
use crate::special::{pochhammer, riesz_angular_closed, riesz_angular_coefficients, riesz_constant, sphere_area};

/// Gauss-Jacobi order for the Boggio `t`-integral.
pub const T_ORDER: usize = 16;

/// `∫_1^∞ (t²−1)^{m−1} t^{1−n} dt = B(m, n/2−m)/2` by Gauss-Jacobi.
pub fn boggio_full_integral(n: u32, m: u32, order: usize) -> f64 {
    let b = 0.5 * n as f64 - m as f64;
    let mf = m as f64;
    let rule = gauss_jacobi(order, b - 1.0, mf - 1.0);
    let s: f64 = rule.iter().map(|(_, w)| w).sum();
    0.5 * s * 0.5f64.powf(mf + b - 1.0)
}

/// `∫_1^T (t²−1)^{m−1} t^{1−n} dt` written through `w = 1 − T^{-2}`.
pub fn boggio_t_integral(w: f64, n: u32, m: u32, order: usize) -> f64 {
    let b = 0.5 * n as f64 - m as f64;
    let mf = m as f64;
    if w <= 0.0 {
        return 0.0;
    }
    if w <= 0.5 {
        // v = w(1+x)/2 keeps v^{m-1} in the Jacobi weight
        let rule = gauss_jacobi(order, 0.0, mf - 1.0);
        let s: f64 = rule.iter().map(|&(x, wt)| wt * (1.0 - 0.5 * w * (1.0 + x)).powf(b - 1.0)).sum();
        0.5 * (0.5 * w).powf(mf) * s
    } else {
        // complement with z = 1 − v, z^{b-1} in the weight
        let z = 1.0 - w;
        let rule = gauss_jacobi(order, 0.0, b - 1.0);
        let s: f64 = rule.iter().map(|&(x, wt)| wt * (1.0 - 0.5 * z * (1.0 + x)).powi(m as i32 - 1)).sum();
        boggio_full_integral(n, m, order) - 0.5 * (0.5 * z).powf(b) * s
    }
}

/// Calibrated Boggio constant `k_{n,m} = C(2m) / ∫_1^∞(t²−1)^{m−1}t^{1−n}dt`.
pub fn boggio_constant(n: u32, m: u32) -> Result<f64> {
    check_dims(n, m)?;
    Ok(riesz_constant(n, 2.0 * m as f64)? / boggio_full_integral(n, m, T_ORDER))
}

fn check_dims(n: u32, m: u32) -> Result<()> {
    if n <= 2 * m {
        return Err(Error::Unsupported(format!("Boggio kernel needs n > 2m, got n = {n}, m = {m}")));
    }
    Ok(())
}

/// Pointwise Boggio kernel `G(x, y)` with the `t`-integral by quadrature.
/// Arguments are `|x|²`, `|y|²` and `x·y`.
pub fn boggio_kernel(n: u32, m: u32, k_nm: f64, x2: f64, y2: f64, xy: f64) -> f64 {
    let d2 = (x2 + y2 - 2.0 * xy).max(0.0);
    let b2 = x2 * y2 - 2.0 * xy + 1.0;
    let w = ((1.0 - x2) * (1.0 - y2) / b2).clamp(0.0, 1.0);
    k_nm * d2.powf(m as f64 - 0.5 * n as f64) * boggio_t_integral(w, n, m, T_ORDER)
}

/// The same kernel split as `C(2m)(|x−y|^{2m−n} − [x,y]^{2m−n} Σ_j (b)_j w^j / j!)`,
/// exact for integer `m`. Returns the regular part
/// `C(2m)[x,y]^{2m−n} Σ_j (b)_j w^j / j!`.
fn regular_part(c: f64, e: f64, poly: &[f64], b2: f64, w: f64) -> f64 {
    let sum = poly.iter().rev().fold(0.0, |acc, p| acc * w + p);
    c * b2.powf(0.5 * e) * sum
}

fn regular_coefficients(n: u32, m: u32) -> Vec<f64> {
    let b = 0.5 * n as f64 - m as f64;
    let mut fact = 1.0;
    (0..m as usize)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            pochhammer(b, j) / fact
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GreenOptions {
    pub angular: AngularOptions,
}

/// Boggio's Dirichlet Green function of `(−Δ)^m` on the unit ball,
/// averaged over spheres and tabulated on a geometric grid ending at 1.
#[derive(Clone, Debug)]
pub struct GreenBallOperator {
    n: u32,
    m: u32,
    k_nm: f64,
    t_order: usize,
    constant: f64,
    grid: RadialGrid,
    rule: PanelRule,
    table: Vec<f64>,
    matrix: DMatrix<f64>,
    riesz_coeffs: Vec<f64>,
    regular_coeffs: Vec<f64>,
    quad: AngularQuadrature,
}

pub fn build_green(n: u32, m: u32, grid: &RadialGrid) -> Result<GreenBallOperator> {
    GreenBallOperator::build(n, m, grid, GreenOptions::default())
}

impl GreenBallOperator {
    pub fn build(n: u32, m: u32, grid: &RadialGrid, opts: GreenOptions) -> Result<Self> {
        check_dims(n, m)?;
        if (grid.r_max() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParams(format!(
                "ball grid must end at r = 1, ends at {}",
                grid.r_max()
            )));
        }
        let constant = riesz_constant(n, 2.0 * m as f64)?;
        let k_nm = boggio_constant(n, m)?;
        let rule = PanelRule::new(grid, opts.angular.radial_points);
        let quad = opts.angular.quadrature(n);
        let mut op = Self {
            n,
            m,
            k_nm,
            t_order: T_ORDER,
            constant,
            grid: grid.clone(),
            rule,
            table: Vec::new(),
            matrix: DMatrix::zeros(0, 0),
            riesz_coeffs: riesz_angular_coefficients(n, m),
            regular_coeffs: regular_coefficients(n, m),
            quad,
        };
        let cols = op.rule.len();
        let mut table = vec![0.0; grid.len() * cols];
        table.par_chunks_mut(cols).zip(grid.nodes().par_iter()).for_each(|(row, &r)| {
            for (x, &s) in row.iter_mut().zip(&op.rule.s) {
                *x = op.averaged(r, s);
            }
        });
        op.table = table;
        op.matrix = op.assemble();
        Ok(op)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k_nm(&self) -> f64 {
        self.k_nm
    }

    pub fn t_order(&self) -> usize {
        self.t_order
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn sources(&self) -> &[f64] {
        &self.rule.s
    }

    pub fn table_entry(&self, i: usize, k: usize) -> f64 {
        self.table[i * self.rule.len() + k]
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Sphere average `∫_{S^{n−1}} G(r e₁, s ω) dσ(ω)`.
    pub fn averaged(&self, r: f64, s: f64) -> f64 {
        if r >= 1.0 || s >= 1.0 {
            return 0.0;
        }
        let e = 2.0 * self.m as f64 - self.n as f64;
        let base = (1.0 - r * s).powi(2);
        let rs4 = 4.0 * r * s;
        let wnum = (1.0 - r * r) * (1.0 - s * s);
        let scale = (1.0 - r * s) / (r * s).sqrt();
        let (reg, _) = self.quad.integrate(scale, |sh2| {
            let b2 = base + rs4 * sh2;
            regular_part(self.constant, e, &self.regular_coeffs, b2, wnum / b2)
        });
        self.constant * riesz_angular_closed(self.n, self.m, r, s) - reg
    }

    /// Sphere average computed from the quadrature form of the kernel,
    /// without the split. Slower; used to cross-check the table.
    pub fn averaged_direct(&self, r: f64, s: f64) -> f64 {
        let (x2, y2) = (r * r, s * s);
        let scale = (r - s).abs() / (r * s).sqrt();
        self.quad
            .integrate(scale, |sh2| {
                let xy = r * s * (1.0 - 2.0 * sh2);
                boggio_kernel(self.n, self.m, self.k_nm, x2, y2, xy)
            })
            .0
    }

    /// `|S^{n−1}| G(r e₁, 0)`, the kernel against a point mass at the centre.
    pub fn at_origin(&self, r: f64) -> f64 {
        let e = 2.0 * self.m as f64 - self.n as f64;
        let w = 1.0 - r * r;
        let reg = regular_part(self.constant, e, &self.regular_coeffs, 1.0, w);
        sphere_area(self.n) * (self.constant * r.powf(e) - reg)
    }

    /// Contribution of a unit inner law `s^{e0}` on `(0, r_min)`.
    pub fn inner_moment(&self, e0: f64) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        if nf + e0 <= 0.0 {
            return Err(Error::Divergence(format!("source core not integrable: e0 = {e0}")));
        }
        let rmin = self.grid.r_min();
        let area = sphere_area(self.n);
        let a = 2.0 * self.m as f64;
        let e = a - nf;
        Ok(self
            .grid
            .nodes()
            .iter()
            .map(|&r| {
                if r >= 1.0 {
                    return 0.0;
                }
                let mut riesz = 0.0;
                for (k, c) in self.riesz_coeffs.iter().enumerate() {
                    let k2 = 2.0 * k as f64;
                    let q = nf + e0 + k2;
                    riesz += c * r.powf(e - k2) * rmin.powf(q) / q;
                }
                let reg = regular_part(self.constant, e, &self.regular_coeffs, 1.0, 1.0 - r * r);
                area * (self.constant * riesz - reg * rmin.powf(nf + e0) / (nf + e0))
            })
            .collect())
    }

    /// `G[f]` at the nodes; the source below `r_min` follows `s^{e0}`
    /// through the first node.
    pub fn apply_values(&self, f: &[f64], e0: f64) -> Vec<f64> {
        let v = DVector::from_column_slice(f);
        let mut out: Vec<f64> = (&self.matrix * v).iter().copied().collect();
        if f[0] != 0.0 {
            let a0 = f[0] * self.grid.r_min().powf(-e0);
            let inner = self.inner_moment(e0).expect("source exponent checked by caller");
            for (o, x) in out.iter_mut().zip(inner) {
                *o += a0 * x;
            }
        }
        out
    }

    /// Same as [`apply_values`] but with the inner column folded into a
    /// dense matrix, for Jacobians.
    pub fn dense_with_inner(&self, e0: f64) -> Result<DMatrix<f64>> {
        let mut mat = self.matrix.clone();
        let inner = self.inner_moment(e0)?;
        let scale = self.grid.r_min().powf(-e0);
        for (i, x) in inner.iter().enumerate() {
            mat[(i, 0)] += scale * x;
        }
        Ok(mat)
    }

    fn assemble(&self) -> DMatrix<f64> {
        let len = self.grid.len();
        let cols = self.rule.len();
        let nf = self.n as f64;
        let mut mat = DMatrix::zeros(len, len);
        for i in 0..len {
            let row = &self.table[i * cols..(i + 1) * cols];
            for (k, &a_ik) in row.iter().enumerate() {
                let x = a_ik * self.rule.dt[k] * self.rule.s[k].powf(nf);
                let st = self.rule.start[k];
                for a in 0..STENCIL {
                    mat[(i, st + a)] += x * self.rule.basis[k][a];
                }
            }
        }
        mat
    }

    /// Smallest table entry over rows with `r < 1`.
    pub fn min_interior_entry(&self) -> f64 {
        let cols = self.rule.len();
        let rows = self.grid.len() - 1;
        self.table[..rows * cols].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fitted constants `(c, C)` of the two-sided bound
    /// `c B_low ≤ G ≤ C |x−y|^{2m−n}` over a lattice of point pairs, with
    /// `B_low = |x−y|^{2m−n} min{1, ((1−|x|)(1−|y|)/|x−y|²)^m}`.
    pub fn two_sided_constants(&self, samples: usize) -> (f64, f64) {
        let e = 2.0 * self.m as f64 - self.n as f64;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 1..samples {
            let r = 1.0 - (-(6.0 * i as f64 / samples as f64)).exp();
            for j in 1..samples {
                let s = 1.0 - (-(6.0 * j as f64 / samples as f64)).exp();
                for k in 0..samples {
                    let phi = std::f64::consts::PI * (k as f64 / samples as f64).powi(2);
                    let xy = r * s * phi.cos();
                    let d2 = r * r + s * s - 2.0 * xy;
                    if d2 < 1e-12 {
                        continue;
                    }
                    let g = boggio_kernel(self.n, self.m, self.k_nm, r * r, s * s, xy);
                    let free = d2.powf(0.5 * e);
                    let q = ((1.0 - r) * (1.0 - s) / d2).min(1.0).powi(self.m as i32);
                    lo = lo.min(g / (free * q));
                    hi = hi.max(g / free);
                }
            }
        }
        (lo, hi)
    }
}

/// Dirichlet solve `u = G[f]` on the unit ball.
pub fn green_apply(op: &GreenBallOperator, f: &RadialFunction) -> Result<RadialFunction> {
    if f.grid().digest() != op.grid.digest() {
        return Err(Error::InvalidParams("profile grid differs from operator grid".into()));
    }
    let e0 = f.inner_law.exponent;
    let nf = op.n as f64;
    if f.values()[0] != 0.0 && nf + e0 <= 0.0 {
        return Err(Error::Divergence(format!("source not integrable at 0: e0 = {e0}")));
    }
    let out = op.apply_values(f.values(), e0);
    let a = 2.0 * op.m as f64;
    let ue0 = if e0 + a > 0.0 { 0.0 } else { e0 + a };
    let inner = PowerLaw::through(op.grid.r_min(), out[0], ue0);
    RadialFunction::with_laws(op.grid.clone(), out, inner, PowerLaw::zero())
}
