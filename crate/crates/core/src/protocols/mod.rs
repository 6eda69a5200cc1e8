//! Games, correlation tables and their simulation.

mod game;
mod ideal;
mod lhs;
mod simulate;
mod table;

pub use game::{make_game, GameSpec, Scenario};
pub use ideal::{
    ideal_encodings, ideal_measurements, qubit_b_sum, relay_strategy, UnassistedStrategy,
};
pub use lhs::{adaptive_product_povm, lhs_simulation, LhsModel, PostProcessing};
pub use simulate::{
    ef_protocol_value, ideal_score, score, simulate_eapm, simulate_symmetric, simulate_unassisted,
    NO_SIGNALLING_TOL,
};
pub use table::{CorrelationTable, NONNEG_TOL, NORMALIZATION_TOL};
