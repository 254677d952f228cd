//! Max-min optimization of per-user dimension allocations for infinite
//! constellations over the MIMO multiple-access channel, plus the witnesses
//! and exponent bounds that go with it.

mod lp;
mod maxmin;
mod witness;

pub use lp::{exponent_min_lp, exponent_min_lp_vertices, ratio_bound, LpSolution};
pub use maxmin::{
    candidate_dims, ic_dmt_general_upper, maximize_dim_allocation, subset_objective, Method,
    OptOptions, OptResult,
};
pub use witness::{suboptimality_witness, witness_family, WitnessReport};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OptError {
    #[error("infeasible dimension tuple: {0}")]
    Infeasible(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dmt(#[from] macdmt_core::DmtError),
}
