//! Average-precision scoring, cross-domain matrices, and the
//! forgetting/elasticity diagnostics.

mod ap;
mod diagnostics;
mod matrix;

pub use ap::{ap_bruteforce_oracle, average_precision};
pub use diagnostics::{elasticity, forgetting};
pub use matrix::{cross_matrix, eval_on_domain, zero_shot_row, DomainScore, EvalMatrix};
