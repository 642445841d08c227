pub mod dataset;
pub mod delta_star;
pub mod presets;
pub mod detect;
pub mod run;
pub mod spec;

pub use dataset::{Axis, SpectrumDataset};
pub use detect::{detect, Channel, DetectionModel, DetectionRecord, DETECTOR_MANIFOLDS};
pub use run::{evolve, run_sequence, run_sequence_with, simulate_point, Execution, Physics, PointValue};
pub use spec::{InitialState, Readout, Scan, SequenceSpec, Step};
pub use delta_star::{find_delta_star, ramsey_phase, DeltaStarOptions, DeltaStarResult};
