//! Two-photon Raman coupling inside the 4d₃/₂ manifold with 5p₁/₂
//! adiabatically eliminated.
//!
//! The π beam drives d ±1/2 ↔ p ±1/2; the σ beam is a σ⁺/σ⁻ pair driving
//! d ±3/2 ↔ p ±1/2 (and, spectator, d ∓1/2 ↔ p ±1/2). The resonant pairs are
//! (+3/2, +1/2) and (−3/2, −1/2). The frame rotates the |m_j| = 3/2 levels at the
//! beat note δ.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::microwave::level_shifts;
use super::propagator::{hermitian_exp, lindblad_blocks, Propagator, PropagatorKind};
use super::pulse::RamanPulse;
use super::state::Basis;
use crate::atomic::{core_line_strengths, CoreLevel, CoreTerm, LevelStructure, Polarization};
use crate::error::{Error, Result};
use crate::units::{phase_rad, KHZ_US};

/// Branching of 5p₁/₂ decay into 5s₁/₂ (the rest goes to 4d₃/₂).
pub const BRANCH_TO_S: f64 = 17.0 / 18.0;
pub const BRANCH_TO_D: f64 = 1.0 / 18.0;

/// Optical constants of the ionic core.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CoreOptics {
    /// 5p₁/₂ natural linewidth Γ/2π, MHz.
    pub gamma_p_mhz: f64,
    /// Mean 5s ↔ 5p pumping rate of the 422 nm light, µs⁻¹.
    pub rate_422: f64,
    /// Repumper rate on the full-strength 4d ↔ 5p line, µs⁻¹.
    pub rate_repump: f64,
}

impl Default for CoreOptics {
    fn default() -> Self {
        Self { gamma_p_mhz: 21.5, rate_422: 20.0, rate_repump: 20.0 }
    }
}

impl CoreOptics {
    /// Γ in µs⁻¹.
    pub fn gamma_per_us(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.gamma_p_mhz
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_p_mhz", self.gamma_p_mhz),
            ("rate_422", self.rate_422),
            ("rate_repump", self.rate_repump),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn d(two_mj: i8) -> CoreLevel {
    CoreLevel { term: CoreTerm::D32, two_mj }
}

/// Light shift of each d sublevel, kHz, and the virtual excitations behind it
/// as (p level, weight) pairs with weight = s·ω²/(4Δ²).
fn virtual_couplings(pulse: &RamanPulse, core: CoreLevel) -> Vec<(CoreLevel, f64)> {
    let delta = pulse.big_delta_khz();
    let mut out = Vec::new();
    for upper in CoreTerm::P12.sublevels() {
        let beams = [
            (Polarization::Pi, pulse.omega_pi),
            (Polarization::SigmaPlus, pulse.omega_sigma),
            (Polarization::SigmaMinus, pulse.omega_sigma),
        ];
        for (pol, omega) in beams {
            let s = core_line_strengths(pol, core, upper);
            if s > 0.0 && omega != 0.0 {
                out.push((upper, s * omega * omega / (4.0 * delta * delta)));
            }
        }
    }
    out
}

pub fn light_shift_khz(pulse: &RamanPulse, core: CoreLevel) -> f64 {
    // s ω²/(4Δ) = weight · Δ
    virtual_couplings(pulse, core).iter().map(|(_, w)| w).sum::<f64>() * pulse.big_delta_khz()
}

/// Scattering rate out of a d sublevel, µs⁻¹.
pub fn scattering_rate(pulse: &RamanPulse, core: CoreLevel, optics: &CoreOptics) -> f64 {
    optics.gamma_per_us() * virtual_couplings(pulse, core).iter().map(|(_, w)| w).sum::<f64>()
}

/// Two-photon resonance δ for manifold n, kHz (includes the light shift).
pub fn raman_resonance(pulse: &RamanPulse, structure: &LevelStructure, n: u32) -> Result<f64> {
    Ok(structure.delta(n)? + light_shift_khz(pulse, d(3)) - light_shift_khz(pulse, d(1)))
}

/// Raman pulse starting at absolute time `t0`, µs.
pub fn raman_propagator(
    pulse: &RamanPulse,
    structure: &LevelStructure,
    optics: &CoreOptics,
    basis: &Basis,
    t0: f64,
) -> Result<Propagator> {
    if pulse.big_delta == 0.0 {
        return Err(Error::Domain("Raman one-photon detuning must be non-zero".into()));
    }
    if !basis.levels().iter().any(|l| l.core.term == CoreTerm::D32) {
        return Err(Error::Config("Raman pulse needs 4d3/2 levels in the basis".into()));
    }
    let dim = basis.len();
    let shifts = level_shifts(basis, structure)?;
    let omega_eff = pulse.effective_rabi();
    let is_stretched = |c: &CoreLevel| c.term == CoreTerm::D32 && c.abs_two_mj() == 3;

    let mut h = DMatrix::<C64>::zeros(dim, dim);
    for (i, level) in basis.levels().iter().enumerate() {
        let mut e = shifts[i];
        if level.core.term == CoreTerm::D32 {
            e += light_shift_khz(pulse, level.core);
        }
        if is_stretched(&level.core) {
            e -= pulse.small_delta;
        }
        h[(i, i)] = C64::new(e, 0.0);
    }
    for (i, level) in basis.levels().iter().enumerate() {
        if !is_stretched(&level.core) {
            continue;
        }
        let mut partner = *level;
        partner.core = d(level.core.two_mj.signum());
        if let Some(j) = basis.index_of(&partner) {
            h[(i, j)] = C64::new(0.5 * omega_eff, 0.0);
            h[(j, i)] = C64::new(0.5 * omega_eff, 0.0);
        }
    }
    let h = h * C64::new(2.0 * std::f64::consts::PI * KHZ_US, 0.0);

    let frame = |t: f64, sign: f64| -> Vec<C64> {
        basis
            .levels()
            .iter()
            .map(|l| {
                if is_stretched(&l.core) {
                    C64::from_polar(1.0, -sign * phase_rad(pulse.small_delta, t))
                } else {
                    C64::new(1.0, 0.0)
                }
            })
            .collect()
    };
    let r1 = frame(t0 + pulse.duration, 1.0);
    let r0_dag = frame(t0, -1.0);

    if !pulse.scattering_on {
        let body = hermitian_exp(&h, pulse.duration);
        let u = DMatrix::from_fn(dim, dim, |i, j| r1[i] * body[(i, j)] * r0_dag[j]);
        return Ok(Propagator::unitary(basis.clone(), u));
    }

    let jumps = scattering_jumps(pulse, optics, basis);
    let groups = manifold_groups(basis);
    let blocks = lindblad_blocks(&h, &jumps, &groups, pulse.duration);
    Ok(Propagator {
        basis: basis.clone(),
        kind: PropagatorKind::Channel { pre_phase: r0_dag, blocks, post_phase: r1 },
    })
}

/// Groups for the block-Lindblad map: one per manifold with its 5p levels
/// split off as singletons (nothing couples to them during a Raman pulse).
fn manifold_groups(basis: &Basis) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    for n in basis.ns() {
        groups.push(basis.indices_where(|l| l.n() == n && l.core.term != CoreTerm::P12));
        for i in basis.indices_where(|l| l.n() == n && l.core.term == CoreTerm::P12) {
            groups.push(vec![i]);
        }
    }
    groups.retain(|g| !g.is_empty());
    groups
}

/// Jump operators √(R·b) Σ_n |n, f⟩⟨n, i| for every virtual excitation i → p
/// and decay p → f. Acting identically on every manifold keeps the
/// Rydberg-electron coherence intact through a core scattering event.
fn scattering_jumps(pulse: &RamanPulse, optics: &CoreOptics, basis: &Basis) -> Vec<DMatrix<C64>> {
    let dim = basis.len();
    let gamma = optics.gamma_per_us();
    let mut jumps = Vec::new();
    for from in CoreTerm::D32.sublevels() {
        for (upper, weight) in virtual_couplings(pulse, from) {
            let rate = gamma * weight;
            for (term, branch) in [(CoreTerm::S12, BRANCH_TO_S), (CoreTerm::D32, BRANCH_TO_D)] {
                for to in term.sublevels() {
                    let strength: f64 = Polarization::ALL
                        .iter()
                        .map(|pol| core_line_strengths(*pol, upper, to))
                        .sum();
                    if strength == 0.0 {
                        continue;
                    }
                    let amp = (rate * branch * strength).sqrt();
                    let mut l = DMatrix::<C64>::zeros(dim, dim);
                    let mut any = false;
                    for (i, level) in basis.levels().iter().enumerate() {
                        if level.core != from {
                            continue;
                        }
                        let mut target = *level;
                        target.core = to;
                        if let Some(j) = basis.index_of(&target) {
                            l[(j, i)] = C64::new(amp, 0.0);
                            any = true;
                        }
                    }
                    if any {
                        jumps.push(l);
                    }
                }
            }
        }
    }
    jumps
}
