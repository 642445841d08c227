use serde::{Deserialize, Serialize};

use super::presets::{linspace, ramsey_steps, scaled_raman, RamseyOptions};
use super::run::{run_sequence, Physics};
use super::spec::{InitialState, Readout, Scan, SequenceSpec};
use crate::analysis::{fit_fringes, wrap_phase};
use crate::atomic::{CoreLevel, CoreTerm};
use crate::dynamics::{raman_resonance, RamanPulse};
use crate::error::{Error, Result};
use crate::units::{KHZ_PER_GHZ, KHZ_US};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaStarOptions {
    /// Pulse timings, beam geometry and Ω̃ at unit power.
    pub ramsey: RamseyOptions,
    /// Search window relative to the light-shifted 49c resonance, kHz.
    pub window_lo: f64,
    pub window_hi: f64,
    pub grid_step: f64,
    /// Fringe points per phase measurement.
    pub fringe_points: usize,
    /// Bisection stops below this δ interval, kHz.
    pub tolerance: f64,
}

impl Default for DeltaStarOptions {
    fn default() -> Self {
        Self {
            ramsey: RamseyOptions { scattering_on: false, ..RamseyOptions::default() },
            window_lo: -60.0,
            window_hi: 10.0,
            grid_step: 2.5,
            fringe_points: 41,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStarResult {
    pub delta_star: f64,
    /// Light-shifted 49c Raman resonance, kHz.
    pub resonance: f64,
    /// |δ* − resonance|, kHz.
    pub offset: f64,
    /// Center-to-center Ramsey separation used, µs.
    pub separation: f64,
    /// Raman pulse duration (2π on resonance), µs.
    pub pulse_duration: f64,
    pub omega_eff: f64,
}

/// Phase and amplitude of fringes from 51c,4d,|m_j|=3/2 with an optional
/// Raman pulse, x axis in applied-frequency kHz.
pub fn ramsey_phase(
    physics: &Physics,
    opts: &RamseyOptions,
    raman: Option<RamanPulse>,
    points: usize,
) -> Result<(f64, f64)> {
    let d32 = CoreLevel { term: CoreTerm::D32, two_mj: 3 };
    let nu32 = physics.structure.mw_line_ghz(51, 49, d32)?;
    let steps = ramsey_steps(&physics.structure, opts, raman, 0.0)?;
    let last = steps.len() - 1;
    let period_khz = 1.0 / (opts.separation * KHZ_US);
    let span_applied = 1.5 * period_khz;
    let spec = SequenceSpec {
        id: "delta_star_ramsey".into(),
        initial: InitialState::Mixture {
            levels: vec![(51, CoreTerm::D32, 3, 0.5), (51, CoreTerm::D32, -3, 0.5)],
        },
        steps,
        scan: Scan {
            name: "source_ghz".into(),
            unit: "GHz".into(),
            paths: vec!["steps[0].source_freq".into(), format!("steps[{last}].source_freq")],
            values: linspace(nu32 / 2.0, 0.5 * span_applied / KHZ_PER_GHZ, points),
        },
        shots_per_point: 0,
        readout: Readout::Channel { n: 49 },
        mw_jitter_khz: 0.0,
    };
    let ds = run_sequence(&spec, physics, 0)?;
    let x: Vec<f64> = ds.axis.values.iter().map(|v| (2.0 * v - nu32) * KHZ_PER_GHZ).collect();
    let r = fit_fringes(&x, &ds.values, &ds.errors, opts.separation * KHZ_US)?;
    Ok((r.value("phase"), r.value("amp")))
}

/// Raman detuning giving an exact π fringe shift, found by a grid search
/// around the 49c resonance followed by bisection. `power` scales both beam
/// intensities; the pulse stays a resonant 2π pulse.
pub fn find_delta_star(physics: &Physics, power: f64, opts: &DeltaStarOptions) -> Result<DeltaStarResult> {
    if !(power > 0.0) {
        return Err(Error::Domain(format!("Raman power must be positive, got {power}")));
    }
    let mut ro = opts.ramsey;
    let omega = ro.omega_eff * power;
    let tau = 1.0 / (omega * KHZ_US);
    let mut base = scaled_raman(ro.big_delta, ro.omega_eff, ro.intensity_ratio, power, tau, ro.scattering_on)?;
    let needed = tau + 0.5 * (ro.first_duration + ro.second_duration) + 1.0;
    ro.separation = ro.separation.max(needed);
    let resonance = raman_resonance(&base, &physics.structure, 49)?;

    let (phi0, _) = ramsey_phase(physics, &ro, None, opts.fringe_points)?;
    let mut g = |delta: f64| -> Result<f64> {
        base.small_delta = delta;
        let (phi, _) = ramsey_phase(physics, &ro, Some(base), opts.fringe_points)?;
        Ok(wrap_phase(phi - phi0 - std::f64::consts::PI))
    };

    let n = ((opts.window_hi - opts.window_lo) / opts.grid_step).round().max(1.0) as usize;
    let deltas: Vec<f64> = (0..=n).map(|k| resonance + opts.window_lo + opts.grid_step * k as f64).collect();
    let values: Vec<f64> = deltas.iter().map(|&d| g(d)).collect::<Result<_>>()?;
    // Genuine zero crossings only, not ±π wraps; nearest to resonance wins.
    let crossing = (0..n)
        .filter(|&k| values[k] * values[k + 1] <= 0.0 && (values[k] - values[k + 1]).abs() < 2.0)
        .min_by(|&a, &b| {
            let da = (0.5 * (deltas[a] + deltas[a + 1]) - resonance).abs();
            let db = (0.5 * (deltas[b] + deltas[b + 1]) - resonance).abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| {
            Error::Search(format!(
                "no π crossing of the fringe phase in δ ∈ [{:.1}, {:.1}] kHz",
                deltas[0], deltas[n]
            ))
        })?;
    let (mut lo, mut hi) = (deltas[crossing], deltas[crossing + 1]);
    let (mut glo, _) = (values[crossing], values[crossing + 1]);
    while hi - lo > opts.tolerance {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if gm * glo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    let delta_star = 0.5 * (lo + hi);
    Ok(DeltaStarResult {
        delta_star,
        resonance,
        offset: (delta_star - resonance).abs(),
        separation: ro.separation,
        pulse_duration: tau,
        omega_eff: omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nonpositive_power_is_rejected() {
        assert!(find_delta_star(&Physics::default(), 0.0, &DeltaStarOptions::default()).is_err());
    }

    #[test]
    fn bare_fringe_phase_is_reproducible() {
        let p = Physics::default();
        let o = RamseyOptions::default();
        let (a, amp) = ramsey_phase(&p, &o, None, 41).unwrap();
        let (b, _) = ramsey_phase(&p, &o, None, 61).unwrap();
        assert!(wrap_phase(a - b).abs() < 1e-6);
        assert!(amp > 0.3);
    }
}
