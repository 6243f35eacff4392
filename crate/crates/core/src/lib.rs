//! Exact two-atom Tavis-Cummings dynamics and tangle-based entanglement
//! measures for qubit-qubit-qudit pure states.

pub mod dynamics;
pub mod error;
pub mod markoff;
pub mod measures;
pub mod random;
pub mod roof;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{partial_trace, Cut, DensityMatrix, PartialTrace, PureState, SystemShape};
