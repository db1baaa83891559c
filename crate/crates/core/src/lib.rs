//! Symmetric bilinear logistic regression (SBLR) for longitudinal network predictors.
//!
//! A binary outcome is modelled through a small number of rank-one symmetric
//! components `beta_h beta_h^T`, each weighted by a quadratic age effect
//! `lambda_h(g) = gamma_h g^2 + rho_h g + alpha_h`. Elastic-net penalties on the
//! entries of the component matrices push every `beta_h` towards a sparse
//! support, so each surviving component selects a clique in the network.
//!
//! The crate is organised around the pipeline:
//!
//! * [`data`]: longitudinal subjects, validation, file formats, pooled
//!   standardization and the averaged design matrices.
//! * [`model`]: the SBLR parameters, penalized loss and coordinate-descent solver.
//! * [`baseline`]: an unstructured elastic-net logistic regression on the
//!   same design matrices.
//! * [`method`]: both estimators behind one trait, registered by name.
//! * [`selection`]: penalty grids, k-fold cross-validation on deviance and the
//!   one-standard-error rule.
//! * [`synthetic`]: the basis-subgraph network generator and edge-recovery metrics.
//! * [`experiment`]: selection plus refit, and replicate studies.
//! * [`bench`]: per-cycle timing ladders and a peak-tracking allocator.

pub mod baseline;
pub mod bench;
pub mod data;
pub mod error;
pub mod experiment;
pub mod method;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod selection;
pub mod synthetic;

pub use error::{Error, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
