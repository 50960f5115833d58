//! Shared fixtures for the criterion benches.

use covertcap_core::DiscreteDist;

/// Three-atom input with mass at zero, typical of constrained optima.
pub fn sample_input() -> DiscreteDist {
    DiscreteDist::new_validated(&[(0.0, 0.9), (0.4, 0.06), (0.8, 0.04)]).expect("valid input")
}
