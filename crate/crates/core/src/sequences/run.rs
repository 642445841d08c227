use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde_json::json;

use super::dataset::{Axis, SpectrumDataset};
use super::detect::{detect, DetectionModel};
use super::spec::{Readout, SequenceSpec};
use crate::atomic::{CoreTerm, LevelStructure, ShiftMode};
use crate::dynamics::{
    free_evolution, mw_propagator, pump_propagator, raman_propagator, Basis, CoreOptics,
    MicrowavePulse, PulseSpec, QuantumState,
};
use crate::error::{Error, Result};
use crate::units::KHZ_PER_GHZ;

/// Everything about the atom and apparatus a sequence runs against.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub structure: LevelStructure,
    pub optics: CoreOptics,
    pub detection: DetectionModel,
}

impl Default for Physics {
    fn default() -> Self {
        Self {
            structure: LevelStructure::default_strontium(),
            optics: CoreOptics::default(),
            detection: DetectionModel::default(),
        }
    }
}

impl Physics {
    pub fn with_structure(structure: LevelStructure) -> Self {
        Self { structure, ..Self::default() }
    }
}

/// State after every step, plus the time at which the chain ends (µs).
pub fn evolve(
    spec: &SequenceSpec,
    physics: &Physics,
    basis: &Basis,
    initial: &QuantumState,
) -> Result<(QuantumState, f64)> {
    let mut state = initial.clone();
    let mut t = 0.0;
    for (i, step) in spec.steps.iter().enumerate() {
        let stage = |e: Error| Error::Pipeline { step: format!("steps[{i}]"), reason: e.to_string() };
        if step.delay > 0.0 {
            state = free_evolution(basis, &physics.structure, step.delay)
                .and_then(|u| u.apply(&state))
                .map_err(stage)?;
            t += step.delay;
        }
        let prop = match &step.pulse {
            PulseSpec::Microwave(p) => Some(mw_propagator(p, &physics.structure, basis, t)),
            PulseSpec::Raman(p) => {
                Some(raman_propagator(p, &physics.structure, &physics.optics, basis, t))
            }
            PulseSpec::OpticalPump422(p) => Some(pump_propagator(p, &physics.optics, basis)),
            // Probes act in detection.
            PulseSpec::Probe(_) => None,
        };
        if let Some(prop) = prop {
            let dur = step.pulse.duration();
            state = prop.and_then(|u| u.apply(&state)).map_err(stage)?;
            t += dur;
        }
    }
    Ok((state, t))
}

/// Noiseless readout quantities for one configured point. Most readouts give
/// one probability; the selective ratio gives (π_{3/2}, π_{1/2}).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointValue {
    Probability(f64),
    Pair(f64, f64),
    Ratio(f64),
}

impl PointValue {
    pub fn value(&self) -> f64 {
        match *self {
            PointValue::Probability(p) | PointValue::Ratio(p) => p,
            PointValue::Pair(p32, p12) => {
                if p32 + p12 > 0.0 {
                    p12 / (p32 + p12)
                } else {
                    0.0
                }
            }
        }
    }
}

fn stretched_pop(state: &QuantumState, n: u32, abs_two_mj: i8) -> f64 {
    state.population_where(|l| {
        l.n() == n && l.core.term == CoreTerm::D32 && l.core.abs_two_mj() == abs_two_mj
    })
}

fn probe_transfer(
    probe: &MicrowavePulse,
    channel: u32,
    state: &QuantumState,
    t: f64,
    physics: &Physics,
) -> Result<f64> {
    let u = mw_propagator(probe, &physics.structure, state.basis(), t)?;
    let out = u.apply(state)?;
    Ok(detect(&out, None, &physics.detection).channel(channel))
}

/// Evaluate the readout of a fully substituted spec (no scan applied).
pub fn simulate_point(spec: &SequenceSpec, physics: &Physics, basis: &Basis) -> Result<PointValue> {
    let initial = spec.initial.build(basis)?;
    let (state, t) = evolve(spec, physics, basis, &initial)?;
    Ok(match &spec.readout {
        Readout::Channel { n } => {
            PointValue::Probability(detect(&state, spec.probe().as_ref(), &physics.detection).channel(*n))
        }
        Readout::SelectiveRatio { probes, channel } => PointValue::Pair(
            probe_transfer(&probes[0], *channel, &state, t, physics)?,
            probe_transfer(&probes[1], *channel, &state, t, physics)?,
        ),
        Readout::SublevelRatio { n } => {
            let p32 = stretched_pop(&state, *n, 3);
            let p12 = stretched_pop(&state, *n, 1);
            PointValue::Ratio(if p32 + p12 > 0.0 { p12 / (p32 + p12) } else { 0.0 })
        }
        Readout::Population { n, term, abs_two_mj } => PointValue::Probability(state.population_where(|l| {
            l.n() == *n && l.core.term == *term && abs_two_mj.is_none_or(|m| l.core.abs_two_mj() == m)
        })),
    })
}

/// Equal-weight average over a Gaussian grid of microwave offsets.
fn jittered_point(spec: &SequenceSpec, physics: &Physics, basis: &Basis, nodes: usize) -> Result<PointValue> {
    let sigma = spec.mw_jitter_khz;
    let half = 4.0 * sigma;
    let n = nodes.max(3) | 1;
    let mut acc = (0.0, 0.0);
    let mut wsum = 0.0;
    let mut first = None;
    for k in 0..n {
        let x = -half + 2.0 * half * k as f64 / (n - 1) as f64;
        let w = (-0.5 * (x / sigma).powi(2)).exp();
        let mut shifted = spec.clone();
        let shift_mw = |p: &mut MicrowavePulse| {
            let div = if p.transition.two_photon { 2.0 } else { 1.0 };
            p.source_freq += x / div / KHZ_PER_GHZ;
        };
        for s in &mut shifted.steps {
            if let PulseSpec::Microwave(p) = &mut s.pulse {
                shift_mw(p);
            }
        }
        if let Readout::SelectiveRatio { probes, .. } = &mut shifted.readout {
            probes.iter_mut().for_each(shift_mw);
        }
        let v = simulate_point(&shifted, physics, basis)?;
        first.get_or_insert(v);
        match v {
            PointValue::Pair(a, b) => {
                acc.0 += w * a;
                acc.1 += w * b;
            }
            other => acc.0 += w * other.value(),
        }
        wsum += w;
    }
    Ok(match first.expect("at least one node") {
        PointValue::Pair(..) => PointValue::Pair(acc.0 / wsum, acc.1 / wsum),
        PointValue::Ratio(_) => PointValue::Ratio(acc.0 / wsum),
        PointValue::Probability(_) => PointValue::Probability(acc.0 / wsum),
    })
}

/// Number of offset nodes used for the microwave jitter average.
pub const JITTER_NODES: usize = 41;

/// FNV-1a over (seed, sequence id, point index); stable across platforms.
pub fn point_seed(seed: u64, id: &str, index: usize) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: &[u8]| {
        for b in bytes {
            h ^= u64::from(*b);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(&seed.to_le_bytes());
    feed(id.as_bytes());
    feed(&(index as u64).to_le_bytes());
    h
}

fn sample(rng: &mut ChaCha8Rng, n: u32, p: f64) -> u64 {
    Binomial::new(u64::from(n), p.clamp(0.0, 1.0)).expect("valid binomial").sample(rng)
}

/// Standard deviation of a proportion k/n, using the Beta(k+1, n−k+1)
/// posterior so that 0 and n counts still carry a finite error.
fn proportion_sigma(k: u64, n: u32) -> f64 {
    let (k, n) = (k as f64, f64::from(n));
    ((k + 1.0) * (n - k + 1.0) / ((n + 2.0).powi(2) * (n + 3.0))).sqrt()
}

fn noisy(value: PointValue, shots: u32, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match value {
        PointValue::Probability(p) | PointValue::Ratio(p) => {
            let k = sample(rng, shots, p);
            (k as f64 / f64::from(shots), proportion_sigma(k, shots))
        }
        PointValue::Pair(p32, p12) => {
            let k32 = sample(rng, shots, p32) as f64;
            let k12 = sample(rng, shots, p12) as f64;
            let tot = k32 + k12;
            if tot == 0.0 {
                return (0.0, 1.0);
            }
            let s32 = proportion_sigma(k32 as u64, shots) * f64::from(shots);
            let s12 = proportion_sigma(k12 as u64, shots) * f64::from(shots);
            let r = k12 / tot;
            let sigma = ((k32 * s12).powi(2) + (k12 * s32).powi(2)).sqrt() / tot.powi(2);
            (r, sigma)
        }
    }
}

/// How scan points are distributed over threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled, else sequential.
    Default,
    Sequential,
}

/// Run every scan point; shot mode samples binomially with a per-point
/// deterministic seed.
pub fn run_sequence(spec: &SequenceSpec, physics: &Physics, rng_seed: u64) -> Result<SpectrumDataset> {
    run_sequence_with(spec, physics, rng_seed, Execution::Default)
}

/// [`run_sequence`] with an explicit execution strategy. Output does not
/// depend on the strategy.
pub fn run_sequence_with(
    spec: &SequenceSpec,
    physics: &Physics,
    rng_seed: u64,
    execution: Execution,
) -> Result<SpectrumDataset> {
    spec.validate()?;
    physics.optics.validate()?;
    let basis = spec.basis()?;
    let n_points = spec.scan.values.len();
    let jitter = spec.shots_per_point > 0 && spec.mw_jitter_khz > 0.0;
    let point = |i: usize| {
        let point = spec.at_point(i)?;
        if jitter {
            jittered_point(&point, physics, &basis, JITTER_NODES)
        } else {
            simulate_point(&point, physics, &basis)
        }
    };
    let points: Vec<Result<PointValue>> = match execution {
        Execution::Default => crate::par::map_indexed(n_points, point),
        Execution::Sequential => crate::par::map_indexed_sequential(n_points, point),
    };
    let points: Vec<PointValue> = points.into_iter().collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(n_points);
    let mut errors = Vec::with_capacity(n_points);
    for (i, v) in points.iter().enumerate() {
        if spec.shots_per_point == 0 {
            values.push(v.value());
            errors.push(0.0);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(point_seed(rng_seed, &spec.id, i));
            let (x, e) = noisy(*v, spec.shots_per_point, &mut rng);
            values.push(x);
            errors.push(e);
        }
    }
    let mut ds = SpectrumDataset {
        axis: Axis {
            name: spec.scan.name.clone(),
            unit: spec.scan.unit.clone(),
            values: spec.scan.values.clone(),
        },
        observable: spec.readout.name(),
        values,
        errors,
        shots: vec![spec.shots_per_point; n_points],
        extra: Default::default(),
        metadata: Default::default(),
    };
    if let Some(first) = spec.scan.paths.first() {
        if let Some(PulseSpec::Microwave(p)) = first
            .strip_suffix(".source_freq")
            .and_then(|s| s.strip_prefix("steps["))
            .and_then(|s| s.strip_suffix(']'))
            .and_then(|s| s.parse::<usize>().ok())
            .and_then(|i| spec.steps.get(i))
            .map(|s| s.pulse)
        {
            let factor = if p.transition.two_photon { 2.0 } else { 1.0 };
            ds.extra.insert(
                "applied_ghz".into(),
                spec.scan.values.iter().map(|v| v * factor).collect(),
            );
        }
    }
    ds.metadata = metadata(spec, physics, rng_seed);
    ds.validate()?;
    Ok(ds)
}

fn metadata(
    spec: &SequenceSpec,
    physics: &Physics,
    seed: u64,
) -> std::collections::BTreeMap<String, serde_json::Value> {
    let model = &physics.structure.model;
    let mut m = std::collections::BTreeMap::new();
    m.insert("sequence_id".into(), json!(spec.id));
    m.insert("seed".into(), json!(seed));
    m.insert("shots_per_point".into(), json!(spec.shots_per_point));
    m.insert("mode".into(), json!(if spec.shots_per_point == 0 { "noiseless" } else { "shots" }));
    m.insert("mw_jitter_khz".into(), json!(if spec.shots_per_point == 0 { 0.0 } else { spec.mw_jitter_khz }));
    m.insert("theta_au".into(), json!(model.theta));
    m.insert("dipole_c_khz".into(), json!(model.dipole_c_khz));
    m.insert("reference_n".into(), json!(model.reference_n));
    m.insert(
        "shift_mode".into(),
        match model.mode {
            ShiftMode::ExactHydrogenic => json!("exact_hydrogenic"),
            ShiftMode::PowerLaw { b_khz } => json!({ "power_law_b_khz": b_khz }),
        },
    );
    m.insert("gamma_p_mhz".into(), json!(physics.optics.gamma_p_mhz));
    m.insert("background".into(), json!(physics.detection.background));
    m.insert("scan_paths".into(), json!(spec.scan.paths));
    let warnings: Vec<String> = spec
        .steps
        .iter()
        .filter_map(|s| match s.pulse {
            PulseSpec::Raman(r) => r.adiabatic_warning(),
            _ => None,
        })
        .collect();
    if !warnings.is_empty() {
        m.insert("warnings".into(), json!(warnings));
    }
    m
}
