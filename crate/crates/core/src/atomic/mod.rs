//! Level structure of the composite Rydberg-electron × ionic-core system.

pub mod angular;
pub mod levels;
pub mod shift;
pub mod transitions;

pub use angular::{clebsch_gordan, core_line_strengths, wigner_3j, Polarization};
pub use levels::{CompositeLevel, CoreLevel, CoreTerm, RydbergKind, RydbergLevel};
pub use shift::{
    circular_gradient, level_shift, quadrupole_delta, total_delta, ShiftMode, ShiftModel,
};
pub use transitions::{hydrogenic_interval_ghz, transition_frequency, LevelStructure, Nu0Table};
