//! States, layouts and information measures over tagged subsystems.

pub mod encoding;
pub mod layout;
pub mod linalg;
pub mod measures;
pub mod state;

pub use layout::{Party, Role, Subsystem, SubsystemLayout};
pub use linalg::{CMat, CVec};
pub use measures::{
    entanglement_entropy, fannes_bound, fidelity_pure_mixed, schmidt_decompose, trace_distance,
    trace_distance_pure, von_neumann_entropy, Schmidt, Q_CONTINUITY,
};
pub use state::{DensityOperator, PartitionedState, QuantumState};
