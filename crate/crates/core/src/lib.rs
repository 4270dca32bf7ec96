//! Simulation of dissipative cat-qubit gates.
//!
//! Operators live on labeled tensor-product Fock spaces ([`space`],
//! [`operator`]); every engine consumes a [`model::LindbladModel`]. The
//! deterministic integrator is in [`dynamics`], photon-counting unravelings
//! in [`stochastic`]. Gate factories are collected in [`gates`], the
//! flat-drive coefficient solver in [`flat`], error extraction in
//! [`metrics`] and the extended noise model and validation checks in
//! [`noise`].
//!
//! All rates and times are expressed in units of the two-photon exchange
//! rate g₂ unless stated otherwise.

pub mod coefficient;
pub mod dynamics;
pub mod error;
pub mod flat;
pub mod gates;
pub mod metrics;
pub mod model;
pub mod noise;
pub mod ode;
pub mod operator;
pub mod sfb;
pub mod space;
pub mod sparse;
pub mod state;
pub mod stochastic;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use coefficient::TimeCoefficient;
pub use num_complex::Complex64;
pub use error::{CatError, Result};
pub use model::LindbladModel;
pub use operator::{AncillaOp, FockOp, Operator};
pub use space::{HilbertSpace, Mode, ModeKind, SpaceRef};
pub use state::{CatCode, Logical, QuantumState};
