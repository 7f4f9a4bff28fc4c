pub mod calibration;
pub mod fringe;
pub mod gate;
pub mod sdf;

pub use gate::{bell_fidelity, fidelity_vs_duration, optimize_rabi, power_curves, GateModel, GateResult, GateSettings};
