use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::atomic::{CompositeLevel, CoreTerm};
use crate::dynamics::{Basis, MicrowavePulse, PulseSpec, QuantumState};
use crate::error::{Error, Result};

/// One entry of the pulse chain: wait `delay` µs, then play `pulse`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    #[serde(default)]
    pub delay: f64,
    pub pulse: PulseSpec,
}

impl Step {
    pub fn new(delay: f64, pulse: PulseSpec) -> Self {
        Self { delay, pulse }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    /// Equal mixture of nc,5s₁/₂,m_j = ±1/2 (state after circularization).
    GroundMixture { n: u32 },
    Level { n: u32, term: CoreTerm, two_mj: i8 },
    /// Incoherent mixture of (n, term, 2m_j, weight) entries.
    Mixture { levels: Vec<(u32, CoreTerm, i8, f64)> },
}

impl InitialState {
    pub fn manifolds(&self) -> Vec<u32> {
        match self {
            InitialState::GroundMixture { n } | InitialState::Level { n, .. } => vec![*n],
            InitialState::Mixture { levels } => levels.iter().map(|l| l.0).collect(),
        }
    }

    pub fn weights(&self) -> Result<Vec<(CompositeLevel, f64)>> {
        Ok(match self {
            InitialState::GroundMixture { n } => vec![
                (CompositeLevel::new(*n, CoreTerm::S12, 1)?, 0.5),
                (CompositeLevel::new(*n, CoreTerm::S12, -1)?, 0.5),
            ],
            InitialState::Level { n, term, two_mj } => {
                vec![(CompositeLevel::new(*n, *term, *two_mj)?, 1.0)]
            }
            InitialState::Mixture { levels } => levels
                .iter()
                .map(|(n, t, m, w)| Ok((CompositeLevel::new(*n, *t, *m)?, *w)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn build(&self, basis: &Basis) -> Result<QuantumState> {
        QuantumState::mixture(basis.clone(), &self.weights()?)
    }
}

/// Scanned parameter. Every path receives the same value at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub name: String,
    #[serde(default)]
    pub unit: String,
    pub paths: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Readout {
    /// Detected fraction in the channel of manifold `n`.
    Channel { n: u32 },
    /// π_{1/2}/(π_{3/2} + π_{1/2}): `probes[0]` measures π_{3/2} and
    /// `probes[1]` π_{1/2}, each as transfer into channel `channel`.
    SelectiveRatio { probes: [MicrowavePulse; 2], channel: u32 },
    /// Population ratio |m_j|=1/2 / (|m_j|=3/2 + |m_j|=1/2) in nc,4d₃/₂,
    /// read directly from ρ.
    SublevelRatio { n: u32 },
    /// Population of nc,term with |2m_j| = `abs_two_mj` (all sublevels when
    /// absent), read directly from ρ.
    Population {
        n: u32,
        term: CoreTerm,
        #[serde(default)]
        abs_two_mj: Option<i8>,
    },
}

impl Readout {
    pub fn name(&self) -> String {
        match self {
            Readout::Channel { n } => format!("p_detect_n{n}"),
            Readout::SelectiveRatio { .. } => "raman_transfer_ratio".into(),
            Readout::SublevelRatio { n } => format!("sublevel_ratio_n{n}"),
            Readout::Population { n, term, abs_two_mj } => match abs_two_mj {
                Some(m) => format!("population_n{n}_{}_abs2mj{m}", term.label()),
                None => format!("population_n{n}_{}", term.label()),
            },
        }
    }

    fn manifolds(&self) -> Vec<u32> {
        match self {
            Readout::Channel { .. } => Vec::new(),
            Readout::SelectiveRatio { probes, channel } => {
                let mut v = vec![*channel];
                for p in probes {
                    v.push(p.transition.n_a);
                    v.push(p.transition.n_b);
                }
                v
            }
            Readout::SublevelRatio { n } | Readout::Population { n, .. } => vec![*n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub id: String,
    pub initial: InitialState,
    #[serde(default)]
    pub steps: Vec<Step>,
    pub scan: Scan,
    /// 0 selects the noiseless expectation mode.
    #[serde(default)]
    pub shots_per_point: u32,
    pub readout: Readout,
    /// Gaussian σ of microwave frequency jitter in applied-frequency kHz,
    /// used only when shots_per_point > 0.
    #[serde(default)]
    pub mw_jitter_khz: f64,
}

/// Fields addressable by a scan path, per pulse kind.
pub fn pulse_fields(pulse: &PulseSpec) -> &'static [&'static str] {
    match pulse {
        PulseSpec::Microwave(_) => &["source_freq", "rabi", "duration", "phase"],
        PulseSpec::Raman(_) => {
            &["big_delta", "small_delta", "omega_pi", "omega_sigma", "duration"]
        }
        PulseSpec::OpticalPump422(_) => &["duration", "repumper_overhang", "leak"],
        PulseSpec::Probe(_) => &["duration"],
    }
}

fn parse_path(path: &str) -> Result<(usize, &str)> {
    let bad = || Error::Config(format!("scan path `{path}` is not of the form steps[i].field"));
    let rest = path.strip_prefix("steps[").ok_or_else(bad)?;
    let (idx, field) = rest.split_once("].").ok_or_else(bad)?;
    let idx: usize = idx.parse().map_err(|_| bad())?;
    Ok((idx, field))
}

fn field_mut<'a>(step: &'a mut Step, field: &str) -> Option<&'a mut f64> {
    if field == "delay" {
        return Some(&mut step.delay);
    }
    match &mut step.pulse {
        PulseSpec::Microwave(p) => match field {
            "source_freq" => Some(&mut p.source_freq),
            "rabi" => Some(&mut p.rabi),
            "duration" => Some(&mut p.duration),
            "phase" => Some(&mut p.phase),
            _ => None,
        },
        PulseSpec::Raman(p) => match field {
            "big_delta" => Some(&mut p.big_delta),
            "small_delta" => Some(&mut p.small_delta),
            "omega_pi" => Some(&mut p.omega_pi),
            "omega_sigma" => Some(&mut p.omega_sigma),
            "duration" => Some(&mut p.duration),
            _ => None,
        },
        PulseSpec::OpticalPump422(p) => match field {
            "duration" => Some(&mut p.duration),
            "repumper_overhang" => Some(&mut p.repumper_overhang),
            "leak" => Some(&mut p.leak),
            _ => None,
        },
        PulseSpec::Probe(p) => match field {
            "duration" => Some(&mut p.duration),
            _ => None,
        },
    }
}

impl SequenceSpec {
    /// Every path accepted by [`SequenceSpec::set_path`].
    pub fn valid_paths(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            out.push(format!("steps[{i}].delay"));
            for f in pulse_fields(&step.pulse) {
                out.push(format!("steps[{i}].{f}"));
            }
        }
        out
    }

    pub fn get_path(&self, path: &str) -> Result<f64> {
        let mut copy = self.steps.clone();
        let (idx, field) = parse_path(path)?;
        let step = copy
            .get_mut(idx)
            .ok_or_else(|| Error::Config(format!("scan path `{path}`: no step {idx}")))?;
        field_mut(step, field)
            .map(|v| *v)
            .ok_or_else(|| Error::Config(format!("scan path `{path}`: unknown field `{field}`")))
    }

    pub fn set_path(&mut self, path: &str, value: f64) -> Result<()> {
        let (idx, field) = parse_path(path)?;
        let n_steps = self.steps.len();
        let step = self.steps.get_mut(idx).ok_or_else(|| {
            Error::Config(format!("scan path `{path}`: no step {idx} (sequence has {n_steps})"))
        })?;
        let kind = step.pulse.kind();
        let slot = field_mut(step, field).ok_or_else(|| {
            Error::Config(format!("scan path `{path}`: {kind} pulses have no field `{field}`"))
        })?;
        *slot = value;
        Ok(())
    }

    /// Copy of the spec with scan point `index` substituted.
    pub fn at_point(&self, index: usize) -> Result<SequenceSpec> {
        let value = *self
            .scan
            .values
            .get(index)
            .ok_or_else(|| Error::Config(format!("scan has no point {index}")))?;
        let mut spec = self.clone();
        for path in &self.scan.paths {
            spec.set_path(path, value)?;
        }
        Ok(spec)
    }

    /// Trailing probe pulse, if any.
    pub fn probe(&self) -> Option<crate::dynamics::ProbePulse> {
        match self.steps.last().map(|s| s.pulse) {
            Some(PulseSpec::Probe(p)) => Some(p),
            _ => None,
        }
    }

    pub fn manifolds(&self) -> BTreeSet<u32> {
        let mut ns: BTreeSet<u32> = self.initial.manifolds().into_iter().collect();
        for s in &self.steps {
            ns.extend(s.pulse.manifolds());
        }
        ns.extend(self.readout.manifolds());
        ns
    }

    pub fn basis(&self) -> Result<Basis> {
        Basis::manifolds(self.manifolds())
    }

    /// All problems found, each prefixed by the offending field.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push("id: must not be empty".to_string());
        }
        if let Err(e) = self.initial.weights() {
            out.push(format!("initial: {e}"));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if !step.delay.is_finite() || step.delay < 0.0 {
                out.push(format!("steps[{i}].delay: must be >= 0, got {}", step.delay));
            }
            if let Err(e) = step.pulse.validate() {
                out.push(format!("steps[{i}]: {e}"));
            }
            if matches!(step.pulse, PulseSpec::Probe(_)) && i + 1 != self.steps.len() {
                out.push(format!("steps[{i}]: a probe pulse must be the last step"));
            }
        }
        if self.scan.values.is_empty() {
            out.push("scan.values: must not be empty".to_string());
        }
        if self.scan.values.iter().any(|v| !v.is_finite()) {
            out.push("scan.values: must be finite".to_string());
        }
        if self.scan.paths.is_empty() {
            out.push("scan.paths: must list at least one path".to_string());
        }
        let valid = self.valid_paths();
        for p in &self.scan.paths {
            if !valid.contains(p) {
                out.push(format!("scan.paths: unknown path `{p}`; valid paths: {}", valid.join(", ")));
            }
        }
        if !self.mw_jitter_khz.is_finite() || self.mw_jitter_khz < 0.0 {
            out.push(format!("mw_jitter_khz: must be >= 0, got {}", self.mw_jitter_khz));
        }
        if let Readout::SelectiveRatio { probes, .. } = &self.readout {
            for (k, p) in probes.iter().enumerate() {
                if let Err(e) = PulseSpec::Microwave(*p).validate() {
                    out.push(format!("readout.probes[{k}]: {e}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            None => Ok(()),
            Some(d) => Err(Error::Config(d)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{MwTransition, OpticalPump422};

    fn spec() -> SequenceSpec {
        SequenceSpec {
            id: "t".into(),
            initial: InitialState::GroundMixture { n: 51 },
            steps: vec![
                Step::new(
                    0.0,
                    PulseSpec::OpticalPump422(OpticalPump422 {
                        duration: 40.0,
                        repumper_on: false,
                        repumper_overhang: 0.0,
                        leak: 0.0,
                    }),
                ),
                Step::new(
                    1.0,
                    PulseSpec::Microwave(MicrowavePulse {
                        transition: MwTransition { n_a: 51, n_b: 49, two_photon: true },
                        source_freq: 52.6,
                        rabi: 33.3,
                        duration: 15.0,
                        phase: 0.0,
                    }),
                ),
            ],
            scan: Scan {
                name: "source".into(),
                unit: "GHz".into(),
                paths: vec!["steps[1].source_freq".into()],
                values: vec![52.6, 52.7],
            },
            shots_per_point: 0,
            readout: Readout::Channel { n: 49 },
            mw_jitter_khz: 0.0,
        }
    }

    #[test]
    fn paths_round_trip() {
        let mut s = spec();
        s.set_path("steps[1].rabi", 12.0).unwrap();
        assert_eq!(s.get_path("steps[1].rabi").unwrap(), 12.0);
        assert!(s.set_path("steps[0].rabi", 1.0).is_err());
        assert!(s.set_path("steps[7].delay", 1.0).is_err());
        assert!(s.set_path("pulses.1", 1.0).is_err());
        let p = s.at_point(1).unwrap();
        assert_eq!(p.get_path("steps[1].source_freq").unwrap(), 52.7);
        assert!(s.valid_paths().contains(&"steps[0].leak".to_string()));
    }

    #[test]
    fn diagnostics_name_fields() {
        let mut s = spec();
        assert!(s.diagnostics().is_empty());
        s.scan.values.clear();
        s.scan.paths.push("steps[1].bogus".into());
        s.steps[0].delay = -1.0;
        let d = s.diagnostics();
        assert_eq!(d.len(), 3, "{d:?}");
        assert!(d.iter().any(|x| x.starts_with("scan.values")));
        assert!(d.iter().any(|x| x.contains("valid paths") && x.contains("steps[1].source_freq")));
    }

    #[test]
    fn basis_from_steps() {
        let s = spec();
        assert_eq!(s.manifolds().into_iter().collect::<Vec<_>>(), vec![49, 51]);
        assert_eq!(s.basis().unwrap().len(), 16);
    }

    #[test]
    fn toml_round_trip() {
        let s = spec();
        let text = toml::to_string(&s).unwrap();
        let back: SequenceSpec = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
