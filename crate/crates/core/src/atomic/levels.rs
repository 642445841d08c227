use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rydberg electron state. Only circular states enter the dynamics; the
/// elliptical marker tags non-circular contaminants in the same manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RydbergLevel {
    pub n: u32,
    pub kind: RydbergKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RydbergKind {
    Circular,
    EllipticalMarker,
}

impl RydbergLevel {
    pub fn circular(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("circular state needs n >= 2, got {n}")));
        }
        Ok(Self { n, kind: RydbergKind::Circular })
    }

    /// Orbital angular momentum ℓ (= n − 1 for circular states).
    pub fn l(&self) -> Option<u32> {
        match self.kind {
            RydbergKind::Circular => Some(self.n - 1),
            RydbergKind::EllipticalMarker => None,
        }
    }

    /// Magnetic quantum number m (= n − 1 for circular states).
    pub fn m(&self) -> Option<u32> {
        self.l()
    }
}

/// Fine-structure terms of the Sr⁺-like ionic core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoreTerm {
    #[serde(rename = "5s1/2")]
    S12,
    #[serde(rename = "5p1/2")]
    P12,
    #[serde(rename = "4d3/2")]
    D32,
}

impl CoreTerm {
    pub const ALL: [CoreTerm; 3] = [CoreTerm::S12, CoreTerm::P12, CoreTerm::D32];

    /// 2j for the term.
    pub fn two_j(self) -> i8 {
        match self {
            CoreTerm::S12 | CoreTerm::P12 => 1,
            CoreTerm::D32 => 3,
        }
    }

    pub fn orbital_l(self) -> u8 {
        match self {
            CoreTerm::S12 => 0,
            CoreTerm::P12 => 1,
            CoreTerm::D32 => 2,
        }
    }

    /// All 2m_j values in ascending order.
    pub fn two_mj_values(self) -> impl Iterator<Item = i8> {
        let tj = self.two_j();
        (-tj..=tj).step_by(2)
    }

    pub fn sublevels(self) -> impl Iterator<Item = CoreLevel> {
        self.two_mj_values().map(move |two_mj| CoreLevel { term: self, two_mj })
    }

    pub fn label(self) -> &'static str {
        match self {
            CoreTerm::S12 => "5s1/2",
            CoreTerm::P12 => "5p1/2",
            CoreTerm::D32 => "4d3/2",
        }
    }
}

/// Ionic-core sublevel; `two_mj` stores 2m_j so half-integers stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoreLevel {
    pub term: CoreTerm,
    pub two_mj: i8,
}

impl CoreLevel {
    pub fn new(term: CoreTerm, two_mj: i8) -> Result<Self> {
        let tj = term.two_j();
        if two_mj.abs() > tj || (two_mj - tj) % 2 != 0 {
            return Err(Error::Domain(format!(
                "m_j = {}/2 is not a sublevel of {}",
                two_mj,
                term.label()
            )));
        }
        Ok(Self { term, two_mj })
    }

    pub fn mj(&self) -> f64 {
        f64::from(self.two_mj) / 2.0
    }

    pub fn abs_two_mj(&self) -> i8 {
        self.two_mj.abs()
    }
}

impl fmt::Display for CoreLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},mj={:+}/2", self.term.label(), self.two_mj)
    }
}

/// |nc, core⟩ product label used as the simulator basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompositeLevel {
    pub rydberg: RydbergLevel,
    pub core: CoreLevel,
}

impl CompositeLevel {
    pub fn new(n: u32, term: CoreTerm, two_mj: i8) -> Result<Self> {
        Ok(Self {
            rydberg: RydbergLevel::circular(n)?,
            core: CoreLevel::new(term, two_mj)?,
        })
    }

    pub fn n(&self) -> u32 {
        self.rydberg.n
    }
}

impl fmt::Display for CompositeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}c,{}", self.rydberg.n, self.core)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_quantum_numbers() {
        let r = RydbergLevel::circular(51).unwrap();
        assert_eq!(r.l(), Some(50));
        assert_eq!(r.m(), Some(50));
        assert!(RydbergLevel::circular(1).is_err());
    }

    #[test]
    fn core_sublevels() {
        assert_eq!(CoreTerm::D32.sublevels().count(), 4);
        assert_eq!(CoreTerm::S12.two_mj_values().collect::<Vec<_>>(), vec![-1, 1]);
        assert!(CoreLevel::new(CoreTerm::P12, 3).is_err());
        assert!(CoreLevel::new(CoreTerm::D32, 2).is_err());
        assert!(CoreLevel::new(CoreTerm::D32, -3).is_ok());
    }

    #[test]
    fn display_labels() {
        let l = CompositeLevel::new(51, CoreTerm::D32, 3).unwrap();
        assert_eq!(l.to_string(), "51c,4d3/2,mj=+3/2");
    }
}
