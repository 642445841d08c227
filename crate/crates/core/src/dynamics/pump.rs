//! Rate-equation optical pumping of the ionic core (422 nm light plus an
//! optional π-polarized 1092 nm repumper). Optical coherences are not kept.

use nalgebra::DMatrix;

use super::propagator::{Propagator, PropagatorKind};
use super::pulse::OpticalPump422;
use super::raman::{CoreOptics, BRANCH_TO_D, BRANCH_TO_S};
use super::state::{Basis, QuantumState};
use crate::atomic::{core_line_strengths, CoreLevel, CoreTerm, Polarization};
use crate::error::{Error, Result};

/// Local ordering of the eight core sublevels used by the rate matrices.
fn core_levels() -> Vec<CoreLevel> {
    CoreTerm::ALL.iter().flat_map(|t| t.sublevels()).collect()
}

fn total_strength(a: CoreLevel, b: CoreLevel) -> f64 {
    Polarization::ALL.iter().map(|p| core_line_strengths(*p, a, b)).sum()
}

#[derive(Clone, Copy)]
struct Drives {
    blue: bool,
    repump: bool,
}

/// Rate matrix A with dp/dt = A p over [`core_levels`].
fn rate_matrix(optics: &CoreOptics, drives: Drives) -> DMatrix<f64> {
    let levels = core_levels();
    let n = levels.len();
    let mut a = DMatrix::zeros(n, n);
    let mut add = |from: usize, to: usize, rate: f64| {
        if rate > 0.0 {
            a[(to, from)] += rate;
            a[(from, from)] -= rate;
        }
    };
    let gamma = optics.gamma_per_us();
    for (i, lo) in levels.iter().enumerate() {
        for (j, up) in levels.iter().enumerate() {
            if up.term != CoreTerm::P12 || lo.term == CoreTerm::P12 {
                continue;
            }
            let s = total_strength(*up, *lo);
            if s == 0.0 {
                continue;
            }
            match lo.term {
                CoreTerm::S12 => {
                    add(j, i, gamma * BRANCH_TO_S * s);
                    if drives.blue {
                        add(i, j, optics.rate_422 * s);
                        add(j, i, optics.rate_422 * s);
                    }
                }
                CoreTerm::D32 => {
                    add(j, i, gamma * BRANCH_TO_D * s);
                    let pi = core_line_strengths(Polarization::Pi, *up, *lo);
                    if drives.repump && pi > 0.0 {
                        add(i, j, optics.rate_repump * pi);
                        add(j, i, optics.rate_repump * pi);
                    }
                }
                CoreTerm::P12 => unreachable!(),
            }
        }
    }
    a
}

/// Transfer matrix for the complete pump stage on one core (8 × 8).
pub fn pump_transfer(pulse: &OpticalPump422, optics: &CoreOptics) -> Result<DMatrix<f64>> {
    optics.validate()?;
    super::pulse::PulseSpec::OpticalPump422(*pulse).validate()?;
    let levels = core_levels();
    let n = levels.len();
    let overhang = if pulse.repumper_on { pulse.repumper_overhang } else { 0.0 };
    if pulse.duration == 0.0 && overhang == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut m = DMatrix::identity(n, n);
    if pulse.duration > 0.0 {
        let a = rate_matrix(optics, Drives { blue: true, repump: pulse.repumper_on });
        m = (a * pulse.duration).exp() * m;
    }
    if overhang > 0.0 {
        let a = rate_matrix(optics, Drives { blue: false, repump: true });
        m = (a * overhang).exp() * m;
    }
    // Whatever is left in 5p decays after the light is off.
    let mut settle = DMatrix::identity(n, n);
    for (j, up) in levels.iter().enumerate() {
        if up.term != CoreTerm::P12 {
            continue;
        }
        settle[(j, j)] = 0.0;
        for (i, lo) in levels.iter().enumerate() {
            let branch = match lo.term {
                CoreTerm::S12 => BRANCH_TO_S,
                CoreTerm::D32 => BRANCH_TO_D,
                CoreTerm::P12 => continue,
            };
            settle[(i, j)] += branch * total_strength(*up, *lo);
        }
    }
    m = settle * m;
    if pulse.leak > 0.0 {
        let mut leak = DMatrix::identity(n, n);
        let s_idx: Vec<usize> =
            (0..n).filter(|&i| levels[i].term == CoreTerm::S12).collect();
        for (j, lvl) in levels.iter().enumerate() {
            if lvl.term != CoreTerm::D32 {
                continue;
            }
            leak[(j, j)] = 1.0 - pulse.leak;
            for &i in &s_idx {
                leak[(i, j)] += pulse.leak / s_idx.len() as f64;
            }
        }
        m = leak * m;
    }
    Ok(m)
}

/// Pump stage on every manifold of `basis`.
pub fn pump_propagator(
    pulse: &OpticalPump422,
    optics: &CoreOptics,
    basis: &Basis,
) -> Result<Propagator> {
    let local = pump_transfer(pulse, optics)?;
    let levels = core_levels();
    let d = basis.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (i, li) in basis.levels().iter().enumerate() {
        for (j, lj) in basis.levels().iter().enumerate() {
            if li.n() != lj.n() {
                continue;
            }
            let a = levels.iter().position(|c| *c == li.core).expect("core level enumerated");
            let b = levels.iter().position(|c| *c == lj.core).expect("core level enumerated");
            m[(i, j)] = local[(a, b)];
        }
    }
    // A manifold missing some core sublevels cannot conserve population.
    for j in 0..d {
        let col: f64 = m.column(j).sum();
        if (col - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "pumping needs every 5s/5p/4d sublevel of manifold n={} in the basis",
                basis.levels()[j].n()
            )));
        }
    }
    Ok(Propagator { basis: basis.clone(), kind: PropagatorKind::Incoherent(m) })
}

/// Evolve `initial` through the pump stage.
pub fn pump_evolution(
    pulse: &OpticalPump422,
    initial: &QuantumState,
    optics: &CoreOptics,
) -> Result<QuantumState> {
    pump_propagator(pulse, optics, initial.basis())?.apply(initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::CompositeLevel;

    fn ground_mixture() -> QuantumState {
        let b = Basis::manifolds([51]).unwrap();
        QuantumState::mixture(
            b,
            &[
                (CompositeLevel::new(51, CoreTerm::S12, 1).unwrap(), 1.0),
                (CompositeLevel::new(51, CoreTerm::S12, -1).unwrap(), 1.0),
            ],
        )
        .unwrap()
    }

    fn pump(duration: f64, repumper_on: bool) -> OpticalPump422 {
        OpticalPump422 { duration, repumper_on, repumper_overhang: 5.0, leak: 0.0 }
    }

    #[test]
    fn equal_mixture_without_repumper() {
        let out = pump_evolution(&pump(400.0, false), &ground_mixture(), &CoreOptics::default())
            .unwrap();
        out.validate().unwrap();
        for mj in CoreTerm::D32.two_mj_values() {
            let p = out.population(&CompositeLevel::new(51, CoreTerm::D32, mj).unwrap());
            assert!((p - 0.25).abs() < 1e-6, "{mj}: {p}");
        }
    }

    #[test]
    fn repumper_empties_half_sublevels() {
        let out =
            pump_evolution(&pump(400.0, true), &ground_mixture(), &CoreOptics::default()).unwrap();
        let half = out.population_where(|l| l.core.term == CoreTerm::D32 && l.core.abs_two_mj() == 1);
        let stretched =
            out.population_where(|l| l.core.term == CoreTerm::D32 && l.core.abs_two_mj() == 3);
        assert!(half < 1e-9, "{half}");
        assert!(stretched > 0.99, "{stretched}");
        assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_is_identity() {
        let m = pump_transfer(&pump(0.0, false), &CoreOptics::default()).unwrap();
        assert_eq!(m, DMatrix::identity(8, 8));
    }

    #[test]
    fn leak_moves_population_to_ground() {
        let mut p = pump(400.0, true);
        p.leak = 0.08;
        let out = pump_evolution(&p, &ground_mixture(), &CoreOptics::default()).unwrap();
        let s = out.population_where(|l| l.core.term == CoreTerm::S12);
        assert!((s - 0.08).abs() < 1e-3, "{s}");
    }

    #[test]
    fn incomplete_basis_rejected() {
        let b = Basis::new([CompositeLevel::new(51, CoreTerm::S12, 1).unwrap()]);
        assert!(pump_propagator(&pump(1.0, false), &CoreOptics::default(), &b).is_err());
    }
}
