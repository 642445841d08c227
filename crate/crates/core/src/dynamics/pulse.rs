use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Microwave transition between two circular manifolds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwTransition {
    pub n_a: u32,
    pub n_b: u32,
    /// Applied frequency is twice the source frequency when true.
    #[serde(default)]
    pub two_photon: bool,
}

impl MwTransition {
    pub fn hi(&self) -> u32 {
        self.n_a.max(self.n_b)
    }

    pub fn lo(&self) -> u32 {
        self.n_a.min(self.n_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrowavePulse {
    pub transition: MwTransition,
    /// Source frequency, GHz.
    pub source_freq: f64,
    /// Cyclic Rabi frequency on the addressed line, kHz. A π pulse has
    /// `rabi * duration = 500` (kHz · µs).
    pub rabi: f64,
    /// µs.
    pub duration: f64,
    /// Drive phase, rad.
    #[serde(default)]
    pub phase: f64,
}

impl MicrowavePulse {
    /// Frequency seen by the atom, GHz.
    pub fn applied_ghz(&self) -> f64 {
        if self.transition.two_photon {
            2.0 * self.source_freq
        } else {
            self.source_freq
        }
    }

    /// Rabi frequency giving pulse area `area` (rad) over `duration`.
    pub fn rabi_for_area(area: f64, duration: f64) -> f64 {
        area / (2.0 * std::f64::consts::PI * duration * crate::units::KHZ_US)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanPulse {
    /// One-photon detuning Δ from the 4d₃/₂ → 5p₁/₂ line, GHz.
    pub big_delta: f64,
    /// Two-photon detuning δ between the beams, kHz.
    pub small_delta: f64,
    /// Reduced Rabi frequency of the π beam, kHz.
    pub omega_pi: f64,
    /// Reduced Rabi frequency of each circular component of the σ beam, kHz.
    pub omega_sigma: f64,
    /// µs.
    pub duration: f64,
    #[serde(default)]
    pub scattering_on: bool,
}

/// Angular weight of the π leg (d±1/2 ↔ p±1/2).
pub const RAMAN_PI_STRENGTH: f64 = 1.0 / 3.0;
/// Angular weight of the σ leg (d±3/2 ↔ p±1/2).
pub const RAMAN_SIGMA_STRENGTH: f64 = 0.5;

impl RamanPulse {
    pub fn big_delta_khz(&self) -> f64 {
        self.big_delta * crate::units::KHZ_PER_GHZ
    }

    /// Effective two-photon Rabi frequency Ω̃ on |3/2| ↔ |1/2|, kHz.
    pub fn effective_rabi(&self) -> f64 {
        self.omega_pi * self.omega_sigma * (RAMAN_PI_STRENGTH * RAMAN_SIGMA_STRENGTH).sqrt()
            / (2.0 * self.big_delta_khz())
    }

    /// Beam amplitudes (ω_π, ω_σ) giving effective Rabi `omega_eff` with the
    /// intensity ratio ω_π²/ω_σ² = `ratio`.
    pub fn beams_for(omega_eff: f64, big_delta_ghz: f64, ratio: f64) -> (f64, f64) {
        let product = omega_eff * 2.0 * big_delta_ghz * crate::units::KHZ_PER_GHZ
            / (RAMAN_PI_STRENGTH * RAMAN_SIGMA_STRENGTH).sqrt();
        let sigma = (product / ratio.sqrt()).abs().sqrt();
        (product / sigma, sigma)
    }

    /// Light shift of |3/2| minus that of |1/2|, kHz.
    pub fn differential_light_shift(&self) -> f64 {
        (self.omega_sigma.powi(2) - self.omega_pi.powi(2)) / (12.0 * self.big_delta_khz())
    }

    /// Largest single-beam Rabi over |Δ|; the adiabatic elimination wants
    /// this well below one.
    pub fn adiabaticity(&self) -> f64 {
        self.omega_pi.abs().max(self.omega_sigma.abs()) / self.big_delta_khz().abs()
    }

    pub fn adiabatic_warning(&self) -> Option<String> {
        let a = self.adiabaticity();
        (a > 0.1).then(|| {
            format!("Raman beam Rabi frequency is {a:.2} of |Δ|; adiabatic elimination is poor")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalPump422 {
    /// Duration of the 422 nm light, µs.
    pub duration: f64,
    #[serde(default)]
    pub repumper_on: bool,
    /// Extra repumper time after the 422 nm light ends, µs.
    #[serde(default)]
    pub repumper_overhang: f64,
    /// Fraction of the final 4d₃/₂ population returned to 5s₁/₂, standing in
    /// for unmodeled pumping imperfections.
    #[serde(default)]
    pub leak: f64,
}

/// 51c → 53c style probe: moves circular population between manifolds
/// irrespective of the core state. Applied inside detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePulse {
    pub transition: (u32, u32),
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PulseSpec {
    Microwave(MicrowavePulse),
    Raman(RamanPulse),
    OpticalPump422(OpticalPump422),
    Probe(ProbePulse),
}

fn check_duration(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Config(format!("{name} must be a finite non-negative duration, got {v}")));
    }
    Ok(())
}

impl PulseSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            PulseSpec::Microwave(_) => "microwave",
            PulseSpec::Raman(_) => "raman",
            PulseSpec::OpticalPump422(_) => "optical_pump422",
            PulseSpec::Probe(_) => "probe",
        }
    }

    /// Time the pulse occupies in the sequence, µs.
    pub fn duration(&self) -> f64 {
        match self {
            PulseSpec::Microwave(p) => p.duration,
            PulseSpec::Raman(p) => p.duration,
            PulseSpec::OpticalPump422(p) => {
                p.duration + if p.repumper_on { p.repumper_overhang } else { 0.0 }
            }
            PulseSpec::Probe(p) => p.duration,
        }
    }

    /// Manifolds the pulse needs in the basis.
    pub fn manifolds(&self) -> Vec<u32> {
        match self {
            PulseSpec::Microwave(p) => vec![p.transition.n_a, p.transition.n_b],
            PulseSpec::Probe(p) => vec![p.transition.0, p.transition.1],
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PulseSpec::Microwave(p) => {
                check_duration("duration", p.duration)?;
                if p.transition.n_a == p.transition.n_b {
                    return Err(Error::Config("microwave transition needs two manifolds".into()));
                }
                if p.transition.lo() < 2 {
                    return Err(Error::Config("microwave transition needs n >= 2".into()));
                }
                if !(p.rabi >= 0.0) || !p.rabi.is_finite() {
                    return Err(Error::Config(format!("rabi must be >= 0, got {}", p.rabi)));
                }
                if !p.source_freq.is_finite() || !p.phase.is_finite() {
                    return Err(Error::Config("source_freq and phase must be finite".into()));
                }
            }
            PulseSpec::Raman(p) => {
                check_duration("duration", p.duration)?;
                if p.big_delta == 0.0 || !p.big_delta.is_finite() {
                    return Err(Error::Domain("Raman one-photon detuning must be non-zero".into()));
                }
                if !p.small_delta.is_finite()
                    || !p.omega_pi.is_finite()
                    || !p.omega_sigma.is_finite()
                {
                    return Err(Error::Config("Raman parameters must be finite".into()));
                }
            }
            PulseSpec::OpticalPump422(p) => {
                check_duration("duration", p.duration)?;
                check_duration("repumper_overhang", p.repumper_overhang)?;
                if !(0.0..=1.0).contains(&p.leak) {
                    return Err(Error::Config(format!("leak must lie in [0, 1], got {}", p.leak)));
                }
            }
            PulseSpec::Probe(p) => {
                check_duration("duration", p.duration)?;
                if p.transition.0 == p.transition.1 {
                    return Err(Error::Config("probe transition needs two manifolds".into()));
                }
            }
        }
        Ok(())
    }
}
