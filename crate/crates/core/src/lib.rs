//! Entanglement certification with entanglement-assisted product
//! measurements: qudit primitives, game protocols, analytic and SDP bounds,
//! and see-saw search over unassisted strategies.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod par;
pub mod protocols;
pub mod qudit;

pub use error::{Error, Result};
