//! Unit conventions.
//!
//! Public interfaces use kHz / GHz / MHz for frequencies and microseconds for
//! time. All frequencies are cyclic (ν, not ω). Internal level-structure work
//! is done in atomic units and converted here.

/// One Hartree divided by Planck's constant, in Hz.
pub const HARTREE_HZ: f64 = 6.579_683_920e15;

/// One Hartree divided by Planck's constant, in kHz.
pub const HARTREE_KHZ: f64 = HARTREE_HZ * 1e-3;

pub const KHZ_PER_GHZ: f64 = 1e6;
pub const KHZ_PER_MHZ: f64 = 1e3;

/// Product of a frequency in kHz and a duration in µs, in cycles.
pub const KHZ_US: f64 = 1e-3;

/// Radians accumulated by a kHz-scale frequency over a µs-scale duration.
#[inline]
pub fn phase_rad(freq_khz: f64, duration_us: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_khz * duration_us * KHZ_US
}
