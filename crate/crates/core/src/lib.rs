//! Exact diversity–multiplexing tradeoff curves for MIMO point-to-point and
//! multiple-access channels, for both finite constellations and infinite
//! constellations (lattices without a shaping region).
//!
//! Every curve is a [`PiecewiseLinearCurve`] over exact rationals, so
//! breakpoints, anchors and crossovers can be compared with `==`.

mod config;
mod curve;
mod dmt;
mod error;
pub mod rational;

pub use config::{MacConfig, Regime};
pub use curve::PiecewiseLinearCurve;
pub use dmt::{
    fc_dmt_mac_general, fc_dmt_mac_symmetric, fc_dmt_p2p, ic_dim_interval, ic_dmt_mac_symmetric,
    ic_dmt_upper_p2p, intermediate_dim, intermediate_line, is_convex, optimal_dim_symmetric,
    orthogonal_dmt, Orthogonal,
};
pub use error::DmtError;
pub use rational::{rat, Rational};
