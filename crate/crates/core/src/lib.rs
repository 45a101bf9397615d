//! Exact simulation of CHSH Bell-test circuits.
//!
//! The numerical core ([`state`], [`matrix`], [`density`], [`channel`]) is
//! generic over [`Scalar`] (`f32` or `f64`). Experiment campaigns run in `f64`.

pub mod analytic;
pub mod channel;
pub mod circuit;
pub mod connectivity;
pub mod decompose;
pub mod density;
pub mod error;
pub mod estimator;
pub mod gate;
pub mod matrix;
pub mod scalar;
pub mod simulate;
pub mod state;
pub mod variants;
pub mod verify;

pub use channel::{ChannelKind, ChannelSpec};
pub use circuit::{CircuitOp, CircuitSpec};
pub use connectivity::{check_feasibility, load_coupling_map, CouplingMap, FeasibilityReport};
pub use error::{Result, SimError};
pub use estimator::{run_experiment, ExperimentConfig, ExperimentResult};
pub use scalar::Scalar;
pub use simulate::NoiseModel;
pub use variants::{BuildOptions, ObservableLabel, VariantLabel};

pub type StateVectorF64 = state::StateVector<f64>;
pub type StateVectorF32 = state::StateVector<f32>;
pub type GateF64 = gate::Gate<f64>;
pub type GateF32 = gate::Gate<f32>;
pub type DensityMatrixF64 = density::DensityMatrix<f64>;
pub type KrausChannelF64 = channel::KrausChannel<f64>;
