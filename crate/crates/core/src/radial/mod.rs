//! Radial grids, profiles, discrete operators and the Riesz potential.

mod diff;
mod function;
mod grid;
mod panel;
mod riesz;

pub use diff::{fornberg_weights, laplacian_full, radial_polyharmonic, t_derivative, Stencil};
pub use function::{PowerLaw, RadialFunction};
pub use grid::RadialGrid;
pub use panel::{lagrange_at, PanelRule, RadialQuadrature, STENCIL};
pub use riesz::{riesz_apply, AngularOptions, RieszOperator, CACHE_ENV};
