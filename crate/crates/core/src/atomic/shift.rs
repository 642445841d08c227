//! Quadrupole coupling between the circular Rydberg electron and the 4d₃/₂
//! core, plus the second-order dipole correction.

use serde::{Deserialize, Serialize};

use super::levels::{CompositeLevel, CoreTerm};
use crate::error::{Error, Result};
use crate::units::HARTREE_KHZ;

/// ⟨ℓ m | P₂(cos θ) | ℓ m⟩ = [ℓ(ℓ+1) − 3m²] / [(2ℓ−1)(2ℓ+3)].
pub fn angular_p2_expectation(l: u32, m: i64) -> f64 {
    let l = l as f64;
    let m = m as f64;
    (l * (l + 1.0) - 3.0 * m * m) / ((2.0 * l - 1.0) * (2.0 * l + 3.0))
}

/// Hydrogenic ⟨r⁻³⟩ in atomic units, valid for ℓ ≥ 1.
pub fn radial_inverse_cube(n: u32, l: u32) -> f64 {
    let n = n as f64;
    let l = l as f64;
    1.0 / (n.powi(3) * l * (l + 0.5) * (l + 1.0))
}

/// |⟨(3cos²θ − 1)/r³⟩| for the circular state nc, in atomic units.
///
/// With ℓ = m = n − 1 this reduces to 4 / [(2n+1)(2n−1) n⁴].
pub fn circular_gradient(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("circular_gradient needs n >= 2, got {n}")));
    }
    let l = n - 1;
    let angular = 2.0 * angular_p2_expectation(l, i64::from(l));
    Ok(angular.abs() * radial_inverse_cube(n, l))
}

/// First-order splitting δₙ between the |m_j| = 3/2 and 1/2 sublevels, in kHz.
pub fn quadrupole_delta(n: u32, theta: f64) -> Result<f64> {
    if !theta.is_finite() || theta < 0.0 {
        return Err(Error::Domain(format!("quadrupole moment must be >= 0, got {theta}")));
    }
    Ok(circular_gradient(n)? * theta * HARTREE_KHZ)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Exact circular-state gradient times Θ, plus the dipole term.
    ExactHydrogenic,
    /// δₙ = B (n_ref/n)⁶ + C (n_ref/n)⁸ with B in kHz.
    PowerLaw { b_khz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftModel {
    /// 4d₃/₂ quadrupole moment Θ in atomic units.
    pub theta: f64,
    /// Second-order dipole coefficient C at the reference n, kHz.
    pub dipole_c_khz: f64,
    /// Uncertainty carried with C for error propagation, kHz.
    pub dipole_c_sigma_khz: f64,
    pub reference_n: u32,
    pub mode: ShiftMode,
}

impl Default for ShiftModel {
    fn default() -> Self {
        Self {
            theta: 2.029,
            dipole_c_khz: -2.7,
            dipole_c_sigma_khz: 1.0,
            reference_n: 51,
            mode: ShiftMode::ExactHydrogenic,
        }
    }
}

impl ShiftModel {
    pub fn exact(theta: f64, dipole_c_khz: f64) -> Self {
        Self { theta, dipole_c_khz, ..Self::default() }
    }

    pub fn power_law(b_khz: f64, dipole_c_khz: f64) -> Self {
        Self { dipole_c_khz, mode: ShiftMode::PowerLaw { b_khz }, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::Config(format!("theta must be > 0, got {}", self.theta)));
        }
        if self.reference_n < 2 {
            return Err(Error::Config(format!(
                "reference_n must be >= 2, got {}",
                self.reference_n
            )));
        }
        if !self.dipole_c_khz.is_finite() || !(self.dipole_c_sigma_khz >= 0.0) {
            return Err(Error::Config("dipole coefficient must be finite, sigma >= 0".into()));
        }
        if let ShiftMode::PowerLaw { b_khz } = self.mode {
            if !(b_khz > 0.0) || !b_khz.is_finite() {
                return Err(Error::Config(format!("power-law B must be > 0, got {b_khz}")));
            }
        }
        Ok(())
    }

    fn ratio(&self, n: u32) -> f64 {
        f64::from(self.reference_n) / f64::from(n)
    }

    /// δₙ in kHz including the (n_ref/n)⁸ dipole term.
    pub fn total_delta(&self, n: u32) -> Result<f64> {
        self.validate()?;
        if n < 2 {
            return Err(Error::Domain(format!("n must be >= 2, got {n}")));
        }
        let x = self.ratio(n);
        let dipole = self.dipole_c_khz * x.powi(8);
        match self.mode {
            ShiftMode::ExactHydrogenic => Ok(quadrupole_delta(n, self.theta)? + dipole),
            ShiftMode::PowerLaw { b_khz } => Ok(b_khz * x.powi(6) + dipole),
        }
    }
}

/// Free-function form of [`ShiftModel::total_delta`].
pub fn total_delta(model: &ShiftModel, n: u32) -> Result<f64> {
    model.total_delta(n)
}

/// Energy shift of a composite level in kHz: ±δₙ/2 on 4d₃/₂, 0 on 5s₁/₂.
pub fn level_shift(level: &CompositeLevel, model: &ShiftModel) -> Result<f64> {
    match level.core.term {
        CoreTerm::S12 => Ok(0.0),
        CoreTerm::D32 => {
            let delta = model.total_delta(level.n())?;
            if level.core.abs_two_mj() == 3 {
                Ok(0.5 * delta)
            } else {
                Ok(-0.5 * delta)
            }
        }
        CoreTerm::P12 => Err(Error::Unsupported(format!("quadrupole shift of {level}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gradient_closed_form_reduction() {
        for n in 2..=80u32 {
            let nf = f64::from(n);
            let reduced = 4.0 / ((2.0 * nf + 1.0) * (2.0 * nf - 1.0) * nf.powi(4));
            assert_relative_eq!(circular_gradient(n).unwrap(), reduced, max_relative = 1e-13);
        }
        assert!(circular_gradient(1).is_err());
        assert!(circular_gradient(0).is_err());
    }

    #[test]
    fn gradient_n51_value() {
        let g = circular_gradient(51).unwrap();
        assert!((g - 5.683e-11).abs() < 0.001e-11, "{g}");
    }

    #[test]
    fn delta51_forward_prediction() {
        let d = quadrupole_delta(51, 2.029).unwrap();
        assert!((d - 759.0).abs() < 1.0, "{d}");
        assert_eq!(quadrupole_delta(51, 0.0).unwrap(), 0.0);
        assert!(quadrupole_delta(51, -1.0).is_err());
    }

    #[test]
    fn delta49_value() {
        let d = quadrupole_delta(49, 2.029).unwrap();
        assert!((d - 965.0).abs() < 1.0, "{d}");
    }

    #[test]
    fn power_law_arithmetic() {
        let m = ShiftModel::power_law(757.0, -2.7);
        assert_relative_eq!(m.total_delta(51).unwrap(), 754.3, epsilon = 1e-9);
        let d49 = m.total_delta(49).unwrap();
        // 757 × 1.271290 − 2.7 × 1.377180 = 958.648
        assert!((d49 - 958.648).abs() < 1e-3, "{d49}");
        assert!((d49 - 958.7).abs() < 0.1);
        let split = d49 - m.total_delta(51).unwrap();
        assert!((split - 204.4).abs() < 0.1, "{split}");
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(ShiftModel::power_law(-1.0, -2.7).total_delta(51).is_err());
        assert!(ShiftModel::exact(0.0, -2.7).total_delta(51).is_err());
        let bad_ref = ShiftModel { reference_n: 1, ..ShiftModel::default() };
        assert!(bad_ref.total_delta(51).is_err());
    }

    #[test]
    fn level_shift_signs_and_trace() {
        let m = ShiftModel::default();
        let d51 = m.total_delta(51).unwrap();
        let lvl = |t, mj| CompositeLevel::new(51, t, mj).unwrap();
        assert_relative_eq!(level_shift(&lvl(CoreTerm::D32, 3), &m).unwrap(), d51 / 2.0);
        assert_relative_eq!(level_shift(&lvl(CoreTerm::D32, -1), &m).unwrap(), -d51 / 2.0);
        assert_eq!(level_shift(&lvl(CoreTerm::S12, 1), &m).unwrap(), 0.0);
        assert!(matches!(
            level_shift(&lvl(CoreTerm::P12, 1), &m),
            Err(Error::Unsupported(_))
        ));
        let trace: f64 = CoreTerm::D32
            .two_mj_values()
            .map(|mj| level_shift(&lvl(CoreTerm::D32, mj), &m).unwrap())
            .sum();
        assert!(trace.abs() < 1e-12);
    }

    #[test]
    fn delta_decreasing_and_linear() {
        let mut prev = f64::INFINITY;
        for n in 2..=120 {
            let d = quadrupole_delta(n, 2.0).unwrap();
            assert!(d < prev);
            prev = d;
            assert_relative_eq!(quadrupole_delta(n, 4.0).unwrap(), 2.0 * d, max_relative = 1e-14);
        }
    }

    #[test]
    fn approaches_sixth_power_law() {
        let d51 = quadrupole_delta(51, 1.0).unwrap();
        for n in [49u32, 50, 53] {
            let ratio = quadrupole_delta(n, 1.0).unwrap() / d51;
            let law = (51.0 / f64::from(n)).powi(6);
            assert!((ratio / law - 1.0).abs() < 0.01);
        }
        let ratio = circular_gradient(49).unwrap() / circular_gradient(51).unwrap();
        assert!((ratio / (51.0f64 / 49.0).powi(6) - 1.0).abs() < 0.005);
        // deviation shrinks with n
        let dev = |n: u32| {
            let r = quadrupole_delta(n, 1.0).unwrap() / quadrupole_delta(2 * n, 1.0).unwrap();
            (r / 64.0 - 1.0).abs()
        };
        assert!(dev(100) < dev(20));
    }
}
