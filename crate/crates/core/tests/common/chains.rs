//! Randomized pulse chains on the 49/50/51 manifolds.

use proptest::prelude::*;
use srcirc::atomic::{CompositeLevel, CoreTerm};
use srcirc::dynamics::{
    free_evolution, mw_propagator, pump_propagator, raman_propagator, Basis, MicrowavePulse, MwTransition,
    OpticalPump422, QuantumState, RamanPulse,
};
use srcirc::sequences::Physics;

#[derive(Debug, Clone)]
pub enum Op {
    Mw { to_49: bool, detune_khz: f64, rabi: f64, duration: f64, phase: f64 },
    Raman { delta: f64, omega: f64, duration: f64, scattering: bool },
    Pump { duration: f64, repumper: bool, leak: f64 },
    Wait(f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (any::<bool>(), -500.0..500.0f64, 1.0..300.0f64, 0.01..20.0f64, -3.2..3.2f64)
            .prop_map(|(to_49, detune_khz, rabi, duration, phase)| Op::Mw { to_49, detune_khz, rabi, duration, phase }),
        (500.0..1200.0f64, 5.0..150.0f64, 0.1..20.0f64, any::<bool>())
            .prop_map(|(delta, omega, duration, scattering)| Op::Raman { delta, omega, duration, scattering }),
        (0.0..60.0f64, any::<bool>(), 0.0..0.3f64).prop_map(|(duration, repumper, leak)| Op::Pump { duration, repumper, leak }),
        (0.0..30.0f64).prop_map(Op::Wait),
    ]
}

/// Initial sublevel weights and one to four operations.
pub fn chain() -> impl Strategy<Value = (Vec<f64>, Vec<Op>)> {
    (prop::collection::vec(0.0..1.0f64, 4), prop::collection::vec(op(), 1..5))
}

/// Apply the chain, checking unitarity of coherent steps and the trace,
/// Hermiticity and positivity of ρ after every step.
pub fn check_chain(weights: &[f64], ops: &[Op]) -> Result<(), TestCaseError> {
    let physics = Physics::default();
    let s = &physics.structure;
    let basis = Basis::manifolds([49, 50, 51]).unwrap();
    let levels = [(CoreTerm::S12, 1), (CoreTerm::S12, -1), (CoreTerm::D32, 3), (CoreTerm::D32, -1)];
    let total: f64 = weights.iter().sum::<f64>() + 1e-3;
    let mix: Vec<(CompositeLevel, f64)> = levels
        .iter()
        .zip(weights)
        .map(|(&(t, m), w)| (CompositeLevel::new(51, t, m).unwrap(), (w + 2.5e-4) / total))
        .collect();
    let mut state = QuantumState::mixture(basis.clone(), &mix).unwrap();
    let mut t = 0.0;
    for op in ops {
        let (prop, dur) = match *op {
            Op::Mw { to_49, detune_khz, rabi, duration, phase } => {
                let (n_b, two_photon) = if to_49 { (49, true) } else { (50, false) };
                let nu = s.bare_interval_ghz(51, n_b).unwrap() + detune_khz * 1e-6;
                let p = MicrowavePulse {
                    transition: MwTransition { n_a: 51, n_b, two_photon },
                    source_freq: if two_photon { nu / 2.0 } else { nu },
                    rabi,
                    duration,
                    phase,
                };
                (mw_propagator(&p, s, &basis, t).unwrap(), duration)
            }
            Op::Raman { delta, omega, duration, scattering } => {
                let (wp, ws) = RamanPulse::beams_for(omega, 0.65, 1.3);
                let p = RamanPulse { big_delta: 0.65, small_delta: delta, omega_pi: wp, omega_sigma: ws, duration, scattering_on: scattering };
                (raman_propagator(&p, s, &physics.optics, &basis, t).unwrap(), duration)
            }
            Op::Pump { duration, repumper, leak } => {
                let p = OpticalPump422 { duration, repumper_on: repumper, repumper_overhang: if repumper { 5.0 } else { 0.0 }, leak };
                (pump_propagator(&p, &physics.optics, &basis).unwrap(), duration)
            }
            Op::Wait(tau) => (free_evolution(&basis, s, tau).unwrap(), tau),
        };
        if let Some(defect) = prop.unitarity_defect() {
            prop_assert!(defect < 1e-9, "unitarity defect {defect:e}");
        }
        state = prop.apply_unchecked(&state).unwrap();
        t += dur;
        prop_assert!((state.trace() - 1.0).abs() < 1e-9, "trace {}", state.trace());
        prop_assert!(state.max_hermitian_defect() < 1e-9);
        prop_assert!(state.min_eigenvalue() > -1e-9, "eigenvalue {}", state.min_eigenvalue());
    }
    Ok(())
}
