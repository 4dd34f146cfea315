//! Dirichlet problems on the unit ball: Boggio's Green function, the
//! monotone iteration for `(−Δ)^m u = λ|x|^σ(1+u)^p`, the extremal
//! parameter and the blow-up rescaling of large solutions.

mod blowup;
mod continuation;
mod green;
mod iterate;

pub use blowup::{blowup_rescale, BlowupProfile, BlowupResult};
pub use continuation::{continue_in_amplitude, ContinuationOptions};
pub use green::{
    boggio_constant, boggio_full_integral, boggio_kernel, boggio_t_integral, build_green, green_apply,
    GreenBallOperator, GreenOptions, T_ORDER,
};
pub use iterate::{
    estimate_lambda_star, monotone_iterate, monotone_probe, Branch, BranchPoint, MonotoneOptions,
    MonotoneOutcome,
};
