//! The symmetric bilinear logistic model and its coordinate-descent solver.
//!
//! The logit of subject `i` is
//!
//! ```text
//! alpha0 + sum_h [ alpha_h b_h' x0_i b_h + rho_h b_h' x1_i b_h + gamma_h b_h' x2_i b_h ]
//! ```
//!
//! and the objective is the mean negative log-likelihood plus, for every
//! component and every node pair `v < u`,
//!
//! ```text
//! delta * [ eta (|alpha_h| + |rho_h| + |gamma_h|) |b_hu| |b_hv|
//!         + (1 - eta) (alpha_h^2 + rho_h^2 + gamma_h^2) b_hu^2 b_hv^2 / 2 ]
//! ```

mod config;
mod fit;
mod interpret;
mod loss;
mod params;
mod report;
pub(crate) mod solver;

pub use config::FitConfig;
pub use fit::{fit, fit_single_ordered, fit_with_start, validate_inputs, FitResult};
pub use interpret::{
    extract_subgraphs, normalize_components, recover_age_effect, recover_age_effects,
    selected_edges, AgeEffect, Edge, NormalizedComponent, WeightedEdge,
};
pub use loss::{loss, mean_negative_log_likelihood, pair_sums, penalty};
pub use params::{AgeTerm, Component, SblrParams};
pub use report::{ComponentReport, FitReport};
pub use solver::{Coordinate, LogitCache, NodeMajorDesigns, Partial, Solver, Surrogate};
