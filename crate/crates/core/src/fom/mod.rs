//! Full-order model: operators, time discretization, the transient Newton
//! solver and snapshot generation.

pub mod operators;
pub mod params;
pub mod snapshots;
pub mod synth;
pub mod transient;
pub mod waveform;

pub use operators::{ConvectiveTensor, FomOperators, Resistance};
pub use params::{BdfScheme, MembraneParams, ParamBox, ParameterSample, TimeGrid};
pub use snapshots::{generate_snapshots, sample_parameters, SnapshotSet};
pub use synth::{generate_operators, SynthConfig};
pub use transient::{solve_transient, step_residual, InitialState, NewtonSettings, Trajectory};
pub use waveform::Waveform;
