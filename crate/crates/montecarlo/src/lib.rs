//! Monte Carlo machinery for diversity estimation under i.i.d. Rayleigh
//! fading: channel sampling, the subset union bound on the joint ML error
//! probability, small-scale lattice decoding, effective-radius diagnostics
//! and log–log slope fitting.

mod channel;
mod lattice;
mod sim;
mod slope;
mod union;

pub use channel::{complex_gaussian, db_to_rho, noise_variance, sample_channel, sample_channel_seeded, trial_rng};
pub use lattice::{closest_point, lattice_decode_trial, LatticeSpec};
pub use sim::{estimate_diversity, estimate_with, fit_rows, run, run_with, Mode, SimConfig, SimOutput, SnrRow};
pub use slope::{fit_slope, SlopeEstimate};
pub use union::{effective_radius, pe_union_bound, UnionBound};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error(transparent)]
    Scheme(#[from] macdmt_scheme::SchemeError),
}
