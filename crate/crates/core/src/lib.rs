//! Monte Carlo maximum-likelihood estimation for exponential-family models on
//! binary variables.
//!
//! A model defines `pi(x | theta) = exp(theta . g(x)) / Z(theta)` through its
//! sufficient statistics `g`. The estimators never evaluate `Z`: they drive
//! `theta` with the discrepancy between sampled and observed statistics.
//!
//! * [`estimators::cd_estimate`] is contrastive divergence, used as an initialiser.
//! * [`estimators::ee_estimate`] is the equilibrium-expectation estimator.
//! * [`estimators::pcd_estimate`] is persistent contrastive divergence, the baseline.
//!
//! The [`oracle`] module enumerates small models exactly and is used to check
//! all of the above.

pub mod convergence;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod model;
pub mod models;
pub mod oracle;
pub mod sampler;
pub mod state;

pub use error::{Error, Result};
pub use model::Model;
pub use state::{BinaryState, Encoding, Layout, ParamVector, Proposal, StatVector};
