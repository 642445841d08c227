use serde::{Deserialize, Serialize};

use super::run::Physics;
use super::spec::{InitialState, Readout, Scan, SequenceSpec, Step};
use crate::atomic::{CoreLevel, CoreTerm, LevelStructure};
use crate::dynamics::{
    raman_resonance, MicrowavePulse, MwTransition, OpticalPump422, ProbePulse, PulseSpec,
    RamanPulse,
};
use crate::error::{Error, Result};
use crate::units::KHZ_PER_GHZ;

/// Gaussian σ of the applied microwave frequency in realistic spectroscopy
/// datasets, kHz. Chosen so a free Gaussian fit of the unpumped spectrum has
/// σ ≈ 78 kHz. Other presets default to no jitter: at this level it would
/// wash out 15 µs Ramsey fringes entirely.
pub const DEFAULT_MW_JITTER_KHZ: f64 = 60.0;
/// Effective Rabi frequency of the 17 µs Raman π pulse, kHz.
pub const NOMINAL_RAMAN_RABI_KHZ: f64 = 500.0 / 17.0;
/// Detuning between the 51c and 49c Raman lines assumed by the 2π condition, kHz.
pub const RAMSEY_TILDE_DELTA_KHZ: f64 = 200.0;

fn d(two_mj: i8) -> CoreLevel {
    CoreLevel { term: CoreTerm::D32, two_mj }
}

fn mw_pi(n_a: u32, n_b: u32, applied_ghz: f64, duration: f64, two_photon: bool) -> MicrowavePulse {
    let source = if two_photon { applied_ghz / 2.0 } else { applied_ghz };
    MicrowavePulse {
        transition: MwTransition { n_a, n_b, two_photon },
        source_freq: source,
        rabi: 500.0 / duration,
        duration,
        phase: 0.0,
    }
}

fn mw_half_pi(n_a: u32, n_b: u32, applied_ghz: f64, duration: f64, two_photon: bool) -> MicrowavePulse {
    MicrowavePulse { rabi: 250.0 / duration, ..mw_pi(n_a, n_b, applied_ghz, duration, two_photon) }
}

/// Symmetric grid `center ± span` with the given step.
pub fn grid(center: f64, span: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * span / step).round() as i64;
    (0..=n).map(|k| center - span + step * k as f64).collect()
}

/// `count` points evenly covering `center ± span`.
pub fn linspace(center: f64, span: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![center];
    }
    (0..count).map(|k| center - span + 2.0 * span * k as f64 / (count - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PumpOptions {
    pub duration: f64,
    pub repumper_overhang: f64,
    pub leak: f64,
}

impl Default for PumpOptions {
    fn default() -> Self {
        Self { duration: 40.0, repumper_overhang: 5.0, leak: 0.0 }
    }
}

impl PumpOptions {
    fn step(&self, repumper_on: bool) -> Step {
        Step::new(
            0.0,
            PulseSpec::OpticalPump422(OpticalPump422 {
                duration: self.duration,
                repumper_on,
                repumper_overhang: if repumper_on { self.repumper_overhang } else { 0.0 },
                leak: self.leak,
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwVariant {
    NoPump,
    Pump,
    PumpPlusRepump,
}

impl MwVariant {
    pub fn label(self) -> &'static str {
        match self {
            MwVariant::NoPump => "no_pump",
            MwVariant::Pump => "pump",
            MwVariant::PumpPlusRepump => "pump_plus_repump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MwSpectroscopyOptions {
    pub pump: PumpOptions,
    /// Spectroscopy π pulse, µs.
    pub pulse_duration: f64,
    pub span_khz: f64,
    pub step_khz: f64,
    pub shots: u32,
    pub jitter_khz: f64,
}

impl Default for MwSpectroscopyOptions {
    fn default() -> Self {
        Self {
            pump: PumpOptions::default(),
            pulse_duration: 15.0,
            span_khz: 400.0,
            step_khz: 5.0,
            shots: 0,
            jitter_khz: DEFAULT_MW_JITTER_KHZ,
        }
    }
}

/// 51c → 49c two-photon spectroscopy, scanning the applied frequency over
/// ν₀ ± span (the scan itself is in source frequency, GHz).
pub fn mw_spectroscopy(
    physics: &Physics,
    variant: MwVariant,
    opts: &MwSpectroscopyOptions,
) -> Result<SequenceSpec> {
    let nu0 = physics.structure.bare_interval_ghz(51, 49)?;
    let mut steps = Vec::new();
    match variant {
        MwVariant::NoPump => {}
        MwVariant::Pump => steps.push(opts.pump.step(false)),
        MwVariant::PumpPlusRepump => steps.push(opts.pump.step(true)),
    }
    let pulse = mw_pi(51, 49, nu0, opts.pulse_duration, true);
    steps.push(Step::new(1.0, PulseSpec::Microwave(pulse)));
    let k = steps.len() - 1;
    let values = grid(0.0, opts.span_khz, opts.step_khz)
        .into_iter()
        .map(|off| (nu0 + off / KHZ_PER_GHZ) / 2.0)
        .collect();
    Ok(SequenceSpec {
        id: format!("mw_spectroscopy_{}", variant.label()),
        initial: InitialState::GroundMixture { n: 51 },
        steps,
        scan: Scan {
            name: "source_ghz".into(),
            unit: "GHz".into(),
            paths: vec![format!("steps[{k}].source_freq")],
            values,
        },
        shots_per_point: opts.shots,
        readout: Readout::Channel { n: 49 },
        mw_jitter_khz: opts.jitter_khz,
    })
}

/// Manifold used by the m_j-selective probes for a Raman experiment in `n`.
pub fn probe_partner(n: u32) -> u32 {
    match n {
        51 => 49,
        49 => 51,
        n => n - 2,
    }
}

/// The two selective probes, at ν_{3/2} and ν_{1/2} of `n → partner`.
pub fn selective_probes(structure: &LevelStructure, n: u32, duration: f64) -> Result<[MicrowavePulse; 2]> {
    let partner = probe_partner(n);
    let nu32 = structure.mw_line_ghz(n, partner, d(3))?;
    let nu12 = structure.mw_line_ghz(n, partner, d(1))?;
    Ok([mw_pi(n, partner, nu32, duration, true), mw_pi(n, partner, nu12, duration, true)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamanSpectroscopyOptions {
    pub pump: PumpOptions,
    /// Δ, GHz.
    pub big_delta: f64,
    /// π:σ intensity ratio.
    pub intensity_ratio: f64,
    /// Ω̃ at unit power, kHz.
    pub omega_eff: f64,
    pub scattering_on: bool,
    pub span_khz: f64,
    pub step_khz: f64,
    pub probe_duration: f64,
    pub shots: u32,
    pub jitter_khz: f64,
}

impl Default for RamanSpectroscopyOptions {
    fn default() -> Self {
        Self {
            pump: PumpOptions::default(),
            big_delta: 0.65,
            intensity_ratio: 1.3,
            omega_eff: NOMINAL_RAMAN_RABI_KHZ,
            scattering_on: true,
            span_khz: 150.0,
            step_khz: 2.0,
            probe_duration: 15.0,
            shots: 0,
            jitter_khz: 0.0,
        }
    }
}

/// Raman beams with both intensities scaled by `power_scale`.
pub fn scaled_raman(
    big_delta: f64,
    omega_eff: f64,
    ratio: f64,
    power_scale: f64,
    duration: f64,
    scattering_on: bool,
) -> Result<RamanPulse> {
    if !(power_scale >= 0.0) || !power_scale.is_finite() {
        return Err(Error::Domain(format!("power scale must be >= 0, got {power_scale}")));
    }
    let (wp, ws) = RamanPulse::beams_for(omega_eff, big_delta, ratio);
    let amp = power_scale.sqrt();
    Ok(RamanPulse {
        big_delta,
        small_delta: 0.0,
        omega_pi: wp * amp,
        omega_sigma: ws * amp,
        duration,
        scattering_on,
    })
}

/// Pump to |m_j| = 3/2, scan a Raman pulse in δ around the light-shifted
/// resonance, read out π_{1/2}/(π_{3/2}+π_{1/2}) with selective probes.
pub fn raman_spectroscopy(
    physics: &Physics,
    n_init: u32,
    duration: f64,
    power_scale: f64,
    opts: &RamanSpectroscopyOptions,
) -> Result<SequenceSpec> {
    if !physics.structure.manifolds().contains(&n_init) {
        return Err(Error::Config(format!("manifold {n_init} is not in the configured table")));
    }
    let mut raman = scaled_raman(
        opts.big_delta,
        opts.omega_eff,
        opts.intensity_ratio,
        power_scale,
        duration,
        opts.scattering_on,
    )?;
    let center = raman_resonance(&raman, &physics.structure, n_init)?;
    raman.small_delta = center;
    let probes = selective_probes(&physics.structure, n_init, opts.probe_duration)?;
    Ok(SequenceSpec {
        id: format!("raman_spectroscopy_n{n_init}"),
        initial: InitialState::GroundMixture { n: n_init },
        steps: vec![opts.pump.step(true), Step::new(1.0, PulseSpec::Raman(raman))],
        scan: Scan {
            name: "delta_khz".into(),
            unit: "kHz".into(),
            paths: vec!["steps[1].small_delta".into()],
            values: grid(center, opts.span_khz, opts.step_khz),
        },
        shots_per_point: opts.shots,
        readout: Readout::SelectiveRatio { probes, channel: probe_partner(n_init) },
        mw_jitter_khz: opts.jitter_khz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterOptions {
    /// Duration of each π/2 pulse, µs.
    pub pulse_duration: f64,
    /// Center-to-center separation; `None` uses 1/(δ₅₀ − δ₅₁).
    pub separation: Option<f64>,
    /// Applied frequency; `None` uses the 51c → 50c 5s line.
    pub applied_ghz: Option<f64>,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self { pulse_duration: 0.5, separation: None, applied_ghz: None }
    }
}

/// 1/(δ₅₀ − δ₅₁), µs.
pub fn filter_delay(structure: &LevelStructure) -> Result<f64> {
    let diff = structure.delta(50)? - structure.delta(51)?;
    if diff == 0.0 {
        return Err(Error::Domain("δ50 = δ51, the filter delay is undefined".into()));
    }
    Ok(1.0 / (diff * crate::units::KHZ_US))
}

/// Two π/2 pulses on the one-photon 51c → 50c line. The first step carries
/// `lead` µs of delay.
pub fn filter_steps(structure: &LevelStructure, opts: &FilterOptions, lead: f64) -> Result<Vec<Step>> {
    let sep = match opts.separation {
        Some(s) => s,
        None => filter_delay(structure)?,
    };
    let nu = match opts.applied_ghz {
        Some(v) => v,
        None => structure.bare_interval_ghz(51, 50)?,
    };
    let gap = sep - opts.pulse_duration;
    if gap < 0.0 {
        return Err(Error::Config(format!(
            "filter pulses ({} µs) overlap for separation {sep} µs",
            opts.pulse_duration
        )));
    }
    let p = PulseSpec::Microwave(mw_half_pi(51, 50, nu, opts.pulse_duration, false));
    Ok(vec![Step::new(lead, p), Step::new(gap, p)])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterInput {
    Ground,
    DMixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PurificationOptions {
    pub filter: FilterOptions,
    pub span_khz: f64,
    pub points: usize,
    pub probe_duration: f64,
    pub shots: u32,
    pub jitter_khz: f64,
}

impl Default for PurificationOptions {
    fn default() -> Self {
        Self {
            filter: FilterOptions::default(),
            span_khz: 200.0,
            points: 81,
            probe_duration: 0.2,
            shots: 0,
            jitter_khz: 0.0,
        }
    }
}

/// Interference filter fringes: scan the filter frequency and detect 51c via
/// the 53c probe.
pub fn purification_filter(
    physics: &Physics,
    input: FilterInput,
    opts: &PurificationOptions,
) -> Result<SequenceSpec> {
    let nu = match opts.filter.applied_ghz {
        Some(v) => v,
        None => physics.structure.bare_interval_ghz(51, 50)?,
    };
    let mut steps = filter_steps(&physics.structure, &opts.filter, 0.0)?;
    steps.push(Step::new(
        0.0,
        PulseSpec::Probe(ProbePulse { transition: (51, 53), duration: opts.probe_duration }),
    ));
    let initial = match input {
        FilterInput::Ground => InitialState::GroundMixture { n: 51 },
        FilterInput::DMixture => InitialState::Mixture {
            levels: [-3, -1, 1, 3].iter().map(|&m| (51, CoreTerm::D32, m, 0.25)).collect(),
        },
    };
    let label = match input {
        FilterInput::Ground => "ground",
        FilterInput::DMixture => "d_mixture",
    };
    Ok(SequenceSpec {
        id: format!("purification_filter_{label}"),
        initial,
        steps,
        scan: Scan {
            name: "source_ghz".into(),
            unit: "GHz".into(),
            paths: vec!["steps[0].source_freq".into(), "steps[1].source_freq".into()],
            values: linspace(nu, opts.span_khz / KHZ_PER_GHZ, opts.points),
        },
        shots_per_point: opts.shots,
        readout: Readout::Channel { n: 53 },
        mw_jitter_khz: opts.jitter_khz,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamseyOptions {
    pub pump: PumpOptions,
    pub use_filter: bool,
    pub filter: FilterOptions,
    pub first_duration: f64,
    pub second_duration: f64,
    /// Center-to-center separation of the two π/2 pulses, µs.
    pub separation: f64,
    pub big_delta: f64,
    pub intensity_ratio: f64,
    /// Ω̃ of the 2π pulse, kHz; its duration is 1/Ω̃.
    pub omega_eff: f64,
    pub scattering_on: bool,
    /// Scan half-width in source frequency, kHz.
    pub span_khz: f64,
    pub points: usize,
    pub probe_duration: f64,
    pub shots: u32,
    pub jitter_khz: f64,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        Self {
            pump: PumpOptions::default(),
            use_filter: true,
            filter: FilterOptions::default(),
            first_duration: 0.15,
            second_duration: 0.45,
            separation: 15.0,
            big_delta: 0.65,
            intensity_ratio: 1.3,
            omega_eff: two_pi_condition_rabi(RAMSEY_TILDE_DELTA_KHZ),
            scattering_on: true,
            span_khz: 50.0,
            points: 41,
            probe_duration: 0.2,
            shots: 0,
            jitter_khz: 0.0,
        }
    }
}

/// Ω̃ satisfying √(Ω̃² + Δ̃²) = 2Ω̃.
pub fn two_pi_condition_rabi(tilde_delta_khz: f64) -> f64 {
    tilde_delta_khz / 3f64.sqrt()
}

/// The 2π Raman pulse used in the Ramsey experiment at two-photon detuning
/// `delta` (kHz).
pub fn ramsey_raman(opts: &RamseyOptions, delta: f64) -> Result<RamanPulse> {
    if !(opts.omega_eff > 0.0) {
        return Err(Error::Domain("Raman 2π pulse needs a positive effective Rabi frequency".into()));
    }
    let mut p = scaled_raman(
        opts.big_delta,
        opts.omega_eff,
        opts.intensity_ratio,
        1.0,
        1000.0 / opts.omega_eff,
        opts.scattering_on,
    )?;
    p.small_delta = delta;
    Ok(p)
}

/// Ramsey block on 51c → 49c, optionally with a Raman pulse centered in the
/// gap. The first step carries `lead` µs of delay.
pub fn ramsey_steps(
    structure: &LevelStructure,
    opts: &RamseyOptions,
    raman: Option<RamanPulse>,
    lead: f64,
) -> Result<Vec<Step>> {
    let nu32 = structure.mw_line_ghz(51, 49, d(3))?;
    let first = mw_half_pi(51, 49, nu32, opts.first_duration, true);
    let second = mw_half_pi(51, 49, nu32, opts.second_duration, true);
    let gap = opts.separation - 0.5 * (opts.first_duration + opts.second_duration);
    let mut steps = vec![Step::new(lead, PulseSpec::Microwave(first))];
    match raman {
        None => {
            if gap < 0.0 {
                return Err(Error::Config("Ramsey pulses overlap".into()));
            }
            steps.push(Step::new(gap, PulseSpec::Microwave(second)));
        }
        Some(r) => {
            let before = 0.5 * opts.separation - 0.5 * r.duration - 0.5 * opts.first_duration;
            let after = 0.5 * opts.separation - 0.5 * r.duration - 0.5 * opts.second_duration;
            if before < 0.0 || after < 0.0 {
                return Err(Error::Config(format!(
                    "Raman pulse of {:.3} µs does not fit in a {} µs Ramsey gap",
                    r.duration, opts.separation
                )));
            }
            steps.push(Step::new(before, PulseSpec::Raman(r)));
            steps.push(Step::new(after, PulseSpec::Microwave(second)));
        }
    }
    Ok(steps)
}

/// Pump, filter, Ramsey on 51c → 49c with an optional Raman 2π pulse,
/// 53c probe; the observable is the 49 channel.
pub fn ramsey_switch(
    physics: &Physics,
    raman_on: bool,
    delta: f64,
    opts: &RamseyOptions,
) -> Result<SequenceSpec> {
    let mut steps = vec![opts.pump.step(true)];
    if opts.use_filter {
        steps.extend(filter_steps(&physics.structure, &opts.filter, 1.0)?);
    }
    let raman = if raman_on { Some(ramsey_raman(opts, delta)?) } else { None };
    let first = steps.len();
    steps.extend(ramsey_steps(&physics.structure, opts, raman, 1.0)?);
    let last_mw = steps.len() - 1;
    steps.push(Step::new(
        0.0,
        PulseSpec::Probe(ProbePulse { transition: (51, 53), duration: opts.probe_duration }),
    ));
    let nu32 = physics.structure.mw_line_ghz(51, 49, d(3))?;
    Ok(SequenceSpec {
        id: format!("ramsey_switch_{}", if raman_on { "raman" } else { "bare" }),
        initial: InitialState::GroundMixture { n: 51 },
        steps,
        scan: Scan {
            name: "source_ghz".into(),
            unit: "GHz".into(),
            paths: vec![
                format!("steps[{first}].source_freq"),
                format!("steps[{last_mw}].source_freq"),
            ],
            values: linspace(nu32 / 2.0, opts.span_khz / KHZ_PER_GHZ, opts.points),
        },
        shots_per_point: opts.shots,
        readout: Readout::Channel { n: 49 },
        mw_jitter_khz: opts.jitter_khz,
    })
}

/// Raman pulse of variable duration on nc,4d₃/₂,|m_j|=3/2 with δ fixed on
/// the light-shifted 49c resonance, read out as the |m_j|=3/2 population.
/// The scan runs from 0 to `max_periods` 49c Rabi periods.
pub fn raman_rabi_flop(
    physics: &Physics,
    n: u32,
    opts: &RamseyOptions,
    max_periods: f64,
    points: usize,
) -> Result<SequenceSpec> {
    let mut raman = ramsey_raman(opts, 0.0)?;
    raman.small_delta = raman_resonance(&raman, &physics.structure, 49)?;
    let two_pi = raman.duration;
    let count = points.max(2);
    Ok(SequenceSpec {
        id: format!("raman_rabi_flop_n{n}"),
        initial: InitialState::Mixture { levels: vec![(n, CoreTerm::D32, 3, 0.5), (n, CoreTerm::D32, -3, 0.5)] },
        steps: vec![Step::new(0.0, PulseSpec::Raman(raman))],
        scan: Scan {
            name: "duration_us".into(),
            unit: "µs".into(),
            paths: vec!["steps[0].duration".into()],
            values: (0..count).map(|k| max_periods * two_pi * k as f64 / (count - 1) as f64).collect(),
        },
        shots_per_point: opts.shots,
        readout: Readout::Population { n, term: CoreTerm::D32, abs_two_mj: Some(3) },
        mw_jitter_khz: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::ShiftModel;
    use crate::sequences::run::run_sequence;

    fn power_law() -> Physics {
        let mut p = Physics::default();
        p.structure.model = ShiftModel::power_law(757.0, -2.7);
        p
    }

    #[test]
    fn filter_delay_matches_shift_difference() {
        let p = power_law();
        let t = filter_delay(&p.structure).unwrap();
        let diff = p.structure.delta(50).unwrap() - p.structure.delta(51).unwrap();
        assert!((t * diff - 1000.0).abs() < 1e-9);
        assert!((t - 10.5).abs() < 0.1, "{t}");
    }

    #[test]
    fn grids_are_symmetric() {
        let g = grid(10.0, 400.0, 5.0);
        assert_eq!(g.len(), 161);
        assert!((g[80] - 10.0).abs() < 1e-12);
        let l = linspace(0.0, 1.0, 5);
        assert_eq!(l, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn presets_validate() {
        let p = Physics::default();
        for v in [MwVariant::NoPump, MwVariant::Pump, MwVariant::PumpPlusRepump] {
            mw_spectroscopy(&p, v, &Default::default()).unwrap().validate().unwrap();
        }
        for n in [49, 51, 53] {
            raman_spectroscopy(&p, n, 17.0, 1.0, &Default::default()).unwrap().validate().unwrap();
        }
        ramsey_switch(&p, true, 900.0, &Default::default()).unwrap().validate().unwrap();
        ramsey_switch(&p, false, 0.0, &Default::default()).unwrap().validate().unwrap();
        for i in [FilterInput::Ground, FilterInput::DMixture] {
            purification_filter(&p, i, &Default::default()).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn ramsey_timing_is_center_to_center() {
        let p = Physics::default();
        let opts = RamseyOptions::default();
        let raman = ramsey_raman(&opts, 900.0).unwrap();
        let steps = ramsey_steps(&p.structure, &opts, Some(raman), 0.0).unwrap();
        let d = |s: &Step| s.pulse.duration();
        let c1 = d(&steps[0]) / 2.0;
        let raman_start = d(&steps[0]) + steps[1].delay;
        let c2 = raman_start + d(&steps[1]) + steps[2].delay + d(&steps[2]) / 2.0;
        assert!((c2 - c1 - 15.0).abs() < 1e-12);
        let raman_center = raman_start + d(&steps[1]) / 2.0;
        assert!((raman_center - (c1 + c2) / 2.0).abs() < 1e-12);
        assert!((raman.effective_rabi() * raman.duration - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn zero_power_gives_no_transfer() {
        let p = Physics::default();
        let opts = RamanSpectroscopyOptions { step_khz: 50.0, scattering_on: false, ..Default::default() };
        let spec = raman_spectroscopy(&p, 51, 17.0, 0.0, &opts).unwrap();
        let ds = run_sequence(&spec, &p, 0).unwrap();
        let first = ds.values[0];
        for v in &ds.values {
            assert!((v - first).abs() < 1e-12);
        }
        // Only the probe crosstalk of the ν_{1/2} probe on |3/2| remains.
        assert!(first < 0.05, "{first}");
    }
}
