//! SDP engine and see-saw search over unassisted strategies.

mod blocks;
pub mod sdp;
mod seesaw;

pub use blocks::{
    clean_povm, completeness_constraints, povm_update, povm_update_with, povm_value, state_update,
};
pub use sdp::{
    sdp_solve, sdp_solve_from, sdp_solve_with, Constraint, SdpOptions, SdpProblem, SdpSolution,
    SdpStart, SparseHermitian, ACCEPT_GAP, ACCEPT_MIN_EIG, ACCEPT_RESIDUAL,
};
pub use seesaw::{seesaw, RestartTrace, SeesawConfig, SeesawResult};
