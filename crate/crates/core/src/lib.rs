//! Simulation toolkit for dissipation-driven (autonomous) error correction of
//! the three-qubit bit-flip code.
//!
//! The crate builds the effective Lindblad models of the protocol, integrates
//! them with a block-sparse exponential propagator or fixed-step RK4, and
//! extracts fidelities, subspace populations and fitted correction rates.

pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod lindblad;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod par;

pub use error::{Error, Result};
pub use hilbert::{
    annihilate, embed, make_space, projector, sigma, tensor, Axis, CompositeSpace, DensityMatrix,
    Operator, StateVector, C64,
};
pub use lindblad::{
    dissipator, integrate, integrate_observed, liouvillian, step_propagator, BlockPropagator,
    Collapse, IntegrateOptions, LindbladModel, Method, Superoperator, TimeGrid, Trajectory,
};
pub use par::ExecPolicy;
