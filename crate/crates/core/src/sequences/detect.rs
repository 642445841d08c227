use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::atomic::RydbergKind;
use crate::dynamics::{ProbePulse, QuantumState};

/// Manifolds resolved by the field-ionization detector.
pub const DETECTOR_MANIFOLDS: [u32; 4] = [49, 50, 51, 53];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Channel {
    Manifold(u32),
    Other,
}

impl Channel {
    pub fn for_n(n: u32) -> Channel {
        if DETECTOR_MANIFOLDS.contains(&n) {
            Channel::Manifold(n)
        } else {
            Channel::Other
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Manifold(n) => write!(f, "{n}"),
            Channel::Other => write!(f, "other"),
        }
    }
}

impl From<Channel> for String {
    fn from(c: Channel) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Channel {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "other" {
            return Ok(Channel::Other);
        }
        let n: u32 = s.parse().map_err(|_| format!("unknown detector channel `{s}`"))?;
        Ok(Channel::for_n(n))
    }
}

/// Non-circular contaminant from the preparation: a fixed fraction of the
/// signal that always ionizes in `channel` and ignores every pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    pub background: f64,
    pub background_channel: u32,
}

impl Default for DetectionModel {
    fn default() -> Self {
        Self { background: 0.10, background_channel: 51 }
    }
}

impl DetectionModel {
    pub fn ideal() -> Self {
        Self { background: 0.0, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub populations: BTreeMap<Channel, f64>,
    /// Shots used for this record (0 in noiseless mode).
    pub shots: u32,
}

impl DetectionRecord {
    pub fn channel(&self, n: u32) -> f64 {
        self.populations.get(&Channel::for_n(n)).copied().unwrap_or(0.0)
    }

    pub fn other(&self) -> f64 {
        self.populations.get(&Channel::Other).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.populations.values().sum()
    }
}

/// Bin populations by manifold. With a probe, circular population of its
/// first manifold is relabeled to the second regardless of the core state.
pub fn detect(
    state: &QuantumState,
    probe: Option<&ProbePulse>,
    model: &DetectionModel,
) -> DetectionRecord {
    let mut by_n: BTreeMap<u32, f64> = BTreeMap::new();
    for (level, p) in state.basis().levels().iter().zip(state.populations()) {
        let mut n = level.n();
        if let Some(pr) = probe {
            if level.rydberg.kind == RydbergKind::Circular && n == pr.transition.0 {
                n = pr.transition.1;
            }
        }
        *by_n.entry(n).or_default() += p.clamp(0.0, 1.0);
    }
    let signal = 1.0 - model.background;
    let mut populations: BTreeMap<Channel, f64> = BTreeMap::new();
    for c in DETECTOR_MANIFOLDS {
        populations.insert(Channel::Manifold(c), 0.0);
    }
    populations.insert(Channel::Other, 0.0);
    for (n, p) in by_n {
        *populations.entry(Channel::for_n(n)).or_default() += signal * p;
    }
    if model.background > 0.0 {
        *populations.entry(Channel::for_n(model.background_channel)).or_default() +=
            model.background;
    }
    for v in populations.values_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    DetectionRecord { populations, shots: 0 }
}
