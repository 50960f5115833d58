//! Covert capacity of non-coherent Rayleigh-fading channels.
//!
//! The crate evaluates the square-root-law pre-constant of covert
//! communication over a fast-fading channel observed by a legitimate receiver
//! with gain `theta` and by a warden with unit gain. It provides:
//!
//! * discrete input distributions and their transforms ([`dist`]),
//! * exponential output densities ([`channel`]),
//! * adaptive quadrature on `[0, inf)` ([`quad`]),
//! * divergences of output mixtures, closed forms and analytic bounds ([`divergence`]),
//! * the covert-capacity objective, its bounds, optimizers and KKT checks ([`capacity`]),
//! * the vanishing-weight input sequence used for achievability ([`asymptotics`]),
//! * Monte-Carlo detection experiments ([`montecarlo`]).

// Argument checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod capacity;
pub mod channel;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod montecarlo;
pub mod quad;

pub use capacity::{ConstrainedSolution, FixedKResult, GridSpec, KktReport, OptConfig};
pub use channel::{ChannelParams, Link};
pub use dist::{Atom, DiscreteDist};
pub use divergence::{DivergenceReport, Method};
pub use error::{Error, Result};
pub use montecarlo::{DetectionReport, SimConfig};
pub use quad::{Quadrature, QuadratureConfig};

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
