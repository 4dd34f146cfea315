use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::function::{PowerLaw, RadialFunction};
use super::grid::RadialGrid;
use super::panel::{PanelRule, STENCIL};
use crate::error::{Error, Result};
use crate::quadrature::AngularQuadrature;
use crate::special::{riesz_angular_coefficients, riesz_constant, sphere_area};

/// Directory for cached kernel tables.
pub const CACHE_ENV: &str = "POLYHENON_KERNEL_CACHE";

const MAGIC: &[u8; 8] = b"PHRIESZ1";

#[derive(Clone, Copy, Debug)]
pub struct AngularOptions {
    pub base_points: usize,
    pub max_points: usize,
    pub rel_tol: f64,
    /// Gauss points per radial panel.
    pub radial_points: usize,
}

impl Default for AngularOptions {
    fn default() -> Self {
        Self { base_points: 8, max_points: 256, rel_tol: 1e-10, radial_points: 6 }
    }
}

impl AngularOptions {
    pub fn quadrature(&self, n: u32) -> AngularQuadrature {
        AngularQuadrature {
            n,
            base_points: self.base_points,
            max_points: self.max_points,
            rel_tol: self.rel_tol,
        }
    }
}

/// `∫_{S^{n-1}} |r e₁ − s ω|^{α−n} dσ(ω)` by graded angular quadrature.
pub fn angular_kernel(quad: &AngularQuadrature, alpha: f64, r: f64, s: f64) -> f64 {
    let e = 0.5 * (alpha - quad.n as f64);
    let d2 = (r - s) * (r - s);
    let rs4 = 4.0 * r * s;
    let scale = (r - s).abs() / (r * s).sqrt();
    quad.integrate(scale, |sh2| (d2 + rs4 * sh2).powf(e)).0
}

/// Tabulated radial Riesz potential `I_{2m}` on a geometric grid.
#[derive(Clone, Debug)]
pub struct RieszOperator {
    n: u32,
    m: u32,
    grid: RadialGrid,
    constant: f64,
    rule: PanelRule,
    table: Vec<f64>,
    matrix: DMatrix<f64>,
    moments: Vec<f64>,
    options: AngularOptions,
}

impl RieszOperator {
    pub fn build(n: u32, m: u32, grid: &RadialGrid, opts: AngularOptions) -> Result<Self> {
        Self::build_cached(n, m, grid, opts, None)
    }

    /// Reads the angular table from `cache_dir` when present and writes
    /// it there after a fresh build.
    pub fn build_cached(
        n: u32,
        m: u32,
        grid: &RadialGrid,
        opts: AngularOptions,
        cache_dir: Option<&Path>,
    ) -> Result<Self> {
        let alpha = 2.0 * m as f64;
        let constant = riesz_constant(n, alpha)?;
        let rule = PanelRule::new(grid, opts.radial_points);
        let cols = rule.len();
        let path = cache_dir.map(|d| cache_path(d, n, alpha, grid, &opts));
        let cached = path.as_deref().and_then(|p| read_table(p, grid.len(), cols));
        let table = match cached {
            Some(t) => t,
            None => {
                let t = build_table(n, alpha, grid, &rule, &opts);
                if let Some(p) = &path {
                    write_table(p, grid.len(), cols, &t)?;
                }
                t
            }
        };
        let matrix = assemble(grid, &rule, &table, n);
        let moments = riesz_angular_coefficients(n, m);
        Ok(Self { n, m, grid: grid.clone(), constant, rule, table, matrix, moments, options: opts })
    }

    /// Uses [`CACHE_ENV`] when it is set.
    pub fn build_env(n: u32, m: u32, grid: &RadialGrid, opts: AngularOptions) -> Result<Self> {
        let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Self::build_cached(n, m, grid, opts, dir.as_deref())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        2.0 * self.m as f64
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Nyström matrix without the factor `C(α)`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn options(&self) -> AngularOptions {
        self.options
    }

    /// Radial quadrature points (the table's second index).
    pub fn sources(&self) -> &[f64] {
        &self.rule.s
    }

    /// Tabulated `A(r_i, s_k)`.
    pub fn table_entry(&self, i: usize, k: usize) -> f64 {
        self.table[i * self.rule.len() + k]
    }

    /// Fresh evaluation of the angular kernel at any `(r, s)`.
    pub fn angular(&self, r: f64, s: f64) -> f64 {
        angular_kernel(&self.options.quadrature(self.n), self.alpha(), r, s)
    }

    /// Contribution of a unit inner law `s^{e0}` on `(0, r_min)`, scaled by
    /// `C(α)`.
    pub fn inner_moment(&self, e0: f64) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        if nf + e0 <= 0.0 {
            return Err(Error::Divergence(format!(
                "core not integrable: need n + e0 > 0, got e0 = {e0}"
            )));
        }
        let rmin = self.grid.r_min();
        let scale = self.constant * sphere_area(self.n);
        let a = self.alpha();
        Ok(self
            .grid
            .nodes()
            .iter()
            .map(|&r| {
                let mut s = 0.0;
                for (k, c) in self.moments.iter().enumerate() {
                    let k2 = 2.0 * k as f64;
                    let e = nf + e0 + k2;
                    s += c * r.powf(a - nf - k2) * rmin.powf(e) / e;
                }
                scale * s
            })
            .collect())
    }

    /// Contribution of a unit tail law `s^{e}` on `(r_max, ∞)`, scaled by
    /// `C(α)`.
    pub fn tail_moment(&self, e: f64) -> Result<Vec<f64>> {
        let a = self.alpha();
        if a + e >= 0.0 {
            return Err(Error::Divergence(format!(
                "tail not integrable: need alpha + e_inf < 0, got e_inf = {e}"
            )));
        }
        let rmax = self.grid.r_max();
        let scale = self.constant * sphere_area(self.n);
        Ok(self
            .grid
            .nodes()
            .iter()
            .map(|&r| {
                let mut s = 0.0;
                for (k, c) in self.moments.iter().enumerate() {
                    let k2 = 2.0 * k as f64;
                    let x = a + e - k2;
                    s += c * r.powf(k2) * rmax.powf(x) / (-x);
                }
                scale * s
            })
            .collect())
    }

    /// `I_α f` at the nodes from nodal values and explicit end laws.
    pub fn apply_values(&self, f: &[f64], inner: PowerLaw, tail: PowerLaw) -> Result<Vec<f64>> {
        let v = DVector::from_column_slice(f);
        let mut out: Vec<f64> = (&self.matrix * v).iter().map(|x| x * self.constant).collect();
        self.add_ends(&mut out, inner, tail)?;
        Ok(out)
    }

    /// `I_α f` with `f` sampled directly at the quadrature points, so a
    /// jump at a grid node is integrated exactly.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64, inner: PowerLaw, tail: PowerLaw) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        let fq: Vec<f64> = self
            .rule
            .s
            .iter()
            .zip(&self.rule.dt)
            .map(|(&s, &dt)| f(s) * dt * s.powf(nf))
            .collect();
        let cols = self.rule.len();
        let mut out: Vec<f64> = (0..self.grid.len())
            .map(|i| {
                let row = &self.table[i * cols..(i + 1) * cols];
                self.constant * row.iter().zip(&fq).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        self.add_ends(&mut out, inner, tail)?;
        Ok(out)
    }

    fn add_ends(&self, out: &mut [f64], inner: PowerLaw, tail: PowerLaw) -> Result<()> {
        if inner.coeff != 0.0 {
            for (o, x) in out.iter_mut().zip(self.inner_moment(inner.exponent)?) {
                *o += inner.coeff * x;
            }
        }
        if tail.coeff != 0.0 {
            for (o, x) in out.iter_mut().zip(self.tail_moment(tail.exponent)?) {
                *o += tail.coeff * x;
            }
        }
        Ok(())
    }
}

/// `I_α f` as a profile; the output laws follow the input exponents.
pub fn riesz_apply(op: &RieszOperator, f: &RadialFunction) -> Result<RadialFunction> {
    if f.grid().len() != op.grid.len() || f.grid().digest() != op.grid.digest() {
        return Err(Error::InvalidParams("profile grid differs from operator grid".into()));
    }
    let out = op.apply_values(f.values(), f.inner_law, f.tail_law)?;
    let nf = op.n as f64;
    let a = op.alpha();
    let e0 = if f.inner_law.coeff == 0.0 || f.inner_law.exponent + a > 0.0 {
        0.0
    } else {
        f.inner_law.exponent + a
    };
    let e1 = if f.tail_law.coeff == 0.0 || f.tail_law.exponent < -nf {
        a - nf
    } else {
        f.tail_law.exponent + a
    };
    RadialFunction::new(op.grid.clone(), out, e0, e1)
}

fn build_table(n: u32, alpha: f64, grid: &RadialGrid, rule: &PanelRule, opts: &AngularOptions) -> Vec<f64> {
    let quad = opts.quadrature(n);
    let cols = rule.len();
    let mut table = vec![0.0; grid.len() * cols];
    table.par_chunks_mut(cols).zip(grid.nodes().par_iter()).for_each(|(row, &r)| {
        for (x, &s) in row.iter_mut().zip(&rule.s) {
            *x = angular_kernel(&quad, alpha, r, s);
        }
    });
    table
}

fn assemble(grid: &RadialGrid, rule: &PanelRule, table: &[f64], n: u32) -> DMatrix<f64> {
    let len = grid.len();
    let cols = rule.len();
    let nf = n as f64;
    let w: Vec<f64> = rule.s.iter().zip(&rule.dt).map(|(&s, &dt)| dt * s.powf(nf)).collect();
    let mut mat = DMatrix::zeros(len, len);
    for i in 0..len {
        let row = &table[i * cols..(i + 1) * cols];
        for k in 0..cols {
            let x = row[k] * w[k];
            let st = rule.start[k];
            for a in 0..STENCIL {
                mat[(i, st + a)] += x * rule.basis[k][a];
            }
        }
    }
    mat
}

fn cache_path(dir: &Path, n: u32, alpha: f64, grid: &RadialGrid, opts: &AngularOptions) -> PathBuf {
    let tag = format!(
        "{}-{}-{}-{:e}",
        grid.digest(),
        opts.radial_points,
        opts.max_points,
        opts.rel_tol
    );
    let short: String = crate::io::short_hash(&tag);
    dir.join(format!("riesz_n{n}_a{alpha}_{short}.bin"))
}

fn read_table(path: &Path, rows: usize, cols: usize) -> Option<Vec<f64>> {
    let mut f = fs::File::open(path).ok()?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf).ok()?;
    if buf.len() != 24 + 8 * rows * cols || &buf[..8] != MAGIC {
        return None;
    }
    let r = u64::from_le_bytes(buf[8..16].try_into().ok()?) as usize;
    let c = u64::from_le_bytes(buf[16..24].try_into().ok()?) as usize;
    if r != rows || c != cols {
        return None;
    }
    Some(
        buf[24..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
    )
}

fn write_table(path: &Path, rows: usize, cols: usize, table: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 8 * table.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    for x in table {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let tmp = path.with_extension("tmp");
    fs::File::create(&tmp)?.write_all(&buf)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
