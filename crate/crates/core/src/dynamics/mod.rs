//! Pulse propagators over an explicit composite basis.

pub mod microwave;
pub mod propagator;
pub mod pulse;
pub mod pump;
pub mod raman;
pub mod state;

pub use microwave::{detuned_rabi_transfer, free_evolution, level_shifts, mw_propagator};
pub use propagator::{Propagator, PropagatorKind, SuperBlock};
pub use pulse::{
    MicrowavePulse, MwTransition, OpticalPump422, ProbePulse, PulseSpec, RamanPulse,
};
pub use pump::{pump_evolution, pump_propagator, pump_transfer};
pub use raman::{light_shift_khz, raman_propagator, raman_resonance, scattering_rate, CoreOptics};
pub use state::{Basis, QuantumState};
