pub mod fit;
pub mod pipeline;

pub use fit::{
    analytic_jacobian, fit, fit_xy, numeric_jacobian, wrap_phase, FitKind, FitModel, FitOptions,
    FitResult, Param, ParamEstimate,
};
pub use pipeline::{
    applied_offsets_khz, fit_b_extract_theta, fit_fringes, fit_raman_resonance,
    light_shift_extrapolate, mw_three_step_pipeline, BThetaResult, Estimate, ExtrapolationResult,
    MwReport,
};
