use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::levels::{CompositeLevel, CoreLevel, CoreTerm};
use super::shift::{level_shift, ShiftModel};
use crate::error::{Error, Result};
use crate::units::KHZ_PER_GHZ;

/// Rydberg constant for ⁸⁸Sr (reduced-mass corrected), in GHz.
const RYDBERG_SR88_GHZ: f64 = 3_289_821.43;

/// Hydrogenic estimate of the bare nc → n'c interval, in GHz. Used only to
/// fill table entries the configuration omits.
pub fn hydrogenic_interval_ghz(n_hi: u32, n_lo: u32) -> f64 {
    let a = f64::from(n_lo);
    let b = f64::from(n_hi);
    RYDBERG_SR88_GHZ * (1.0 / (a * a) - 1.0 / (b * b))
}

/// Bare (core-shift-free) frequencies of circular-to-circular intervals.
///
/// Keys are ordered `(n_hi, n_lo)` with `n_hi > n_lo`; the stored value is
/// E(n_hi) − E(n_lo) in GHz, i.e. the two-photon ν for Δn = 2 pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Nu0Table {
    entries: BTreeMap<(u32, u32), f64>,
}

impl Nu0Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, n_a: u32, n_b: u32, ghz: f64) -> Self {
        self.insert(n_a, n_b, ghz);
        self
    }

    pub fn insert(&mut self, n_a: u32, n_b: u32, ghz: f64) {
        let key = (n_a.max(n_b), n_a.min(n_b));
        self.entries.insert(key, ghz);
    }

    pub fn get(&self, n_a: u32, n_b: u32) -> Option<f64> {
        self.entries.get(&(n_a.max(n_b), n_a.min(n_b))).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.entries.iter().map(|(&(h, l), &v)| (h, l, v))
    }

    /// Table used by the shipped recipes.
    pub fn strontium_default() -> Self {
        Nu0Table::new()
            .with(51, 49, 105.357_547_0)
            .with(51, 50, 51.098_516)
            .with(53, 51, hydrogenic_interval_ghz(53, 51))
    }

    /// Bare manifold energies in GHz consistent with every table entry. Each
    /// connected group of manifolds is referenced to its smallest n.
    pub fn manifold_energies(&self) -> Result<BTreeMap<u32, f64>> {
        let mut adjacency: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
        for (hi, lo, v) in self.iter() {
            adjacency.entry(hi).or_default().push((lo, -v));
            adjacency.entry(lo).or_default().push((hi, v));
        }
        let mut energies = BTreeMap::new();
        let nodes: Vec<u32> = adjacency.keys().copied().collect();
        for start in nodes {
            if energies.contains_key(&start) {
                continue;
            }
            energies.insert(start, 0.0);
            let mut queue = VecDeque::from([start]);
            while let Some(node) = queue.pop_front() {
                let e = energies[&node];
                for &(next, step) in &adjacency[&node] {
                    let candidate = e + step;
                    match energies.get(&next) {
                        Some(&known) => {
                            if (known - candidate).abs() > 1e-9 {
                                return Err(Error::Config(format!(
                                    "nu0 table is inconsistent around n={next}: \
                                     {known} GHz vs {candidate} GHz"
                                )));
                            }
                        }
                        None => {
                            energies.insert(next, candidate);
                            queue.push_back(next);
                        }
                    }
                }
            }
        }
        Ok(energies)
    }
}

/// Frequency of the a ↔ b line in GHz (always positive).
///
/// Core-preserving microwave lines use the bare table interval plus the
/// difference of the endpoint shifts (upper-energy minus lower-energy level).
/// n-preserving lines within one core term are pure shift differences.
pub fn transition_frequency(
    a: &CompositeLevel,
    b: &CompositeLevel,
    model: &ShiftModel,
    table: &Nu0Table,
) -> Result<f64> {
    let sa = level_shift(a, model)?;
    let sb = level_shift(b, model)?;
    if a.n() == b.n() {
        if a.core.term != b.core.term {
            return Err(Error::Config(format!(
                "no bare optical frequency configured for {a} -> {b}"
            )));
        }
        return Ok((sa - sb).abs() / KHZ_PER_GHZ);
    }
    if a.core.term != b.core.term {
        return Err(Error::Domain(format!(
            "{a} -> {b} changes both the Rydberg and the core state"
        )));
    }
    let bare = table
        .get(a.n(), b.n())
        .ok_or_else(|| Error::Config(format!("no nu0 entry for {} <-> {}", a.n(), b.n())))?;
    let (upper_shift, lower_shift) = if a.n() > b.n() { (sa, sb) } else { (sb, sa) };
    Ok(bare + (upper_shift - lower_shift) / KHZ_PER_GHZ)
}

/// Everything needed to place the levels of a basis on an energy axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelStructure {
    pub model: ShiftModel,
    pub table: Nu0Table,
    manifold_energies: BTreeMap<u32, f64>,
}

impl LevelStructure {
    pub fn new(model: ShiftModel, table: Nu0Table) -> Result<Self> {
        model.validate()?;
        let manifold_energies = table.manifold_energies()?;
        Ok(Self { model, table, manifold_energies })
    }

    pub fn default_strontium() -> Self {
        Self::new(ShiftModel::default(), Nu0Table::strontium_default())
            .expect("shipped table is consistent")
    }

    pub fn delta(&self, n: u32) -> Result<f64> {
        self.model.total_delta(n)
    }

    /// Core shift of a level in kHz; 5p levels carry no modeled shift.
    pub fn shift_khz(&self, level: &CompositeLevel) -> Result<f64> {
        match level.core.term {
            CoreTerm::P12 => Ok(0.0),
            _ => level_shift(level, &self.model),
        }
    }

    pub fn transition_ghz(&self, a: &CompositeLevel, b: &CompositeLevel) -> Result<f64> {
        transition_frequency(a, b, &self.model, &self.table)
    }

    /// Bare interval E(n_hi) − E(n_lo) derived from the table graph, GHz.
    pub fn bare_interval_ghz(&self, n_a: u32, n_b: u32) -> Result<f64> {
        let ea = self.manifold_energies.get(&n_a);
        let eb = self.manifold_energies.get(&n_b);
        match (ea, eb) {
            (Some(ea), Some(eb)) => Ok((ea - eb).abs()),
            _ => Err(Error::Config(format!("no nu0 path between {n_a} and {n_b}"))),
        }
    }

    pub fn manifolds(&self) -> BTreeSet<u32> {
        self.manifold_energies.keys().copied().collect()
    }

    /// Microwave line for a given core sublevel between two manifolds, GHz.
    pub fn mw_line_ghz(&self, n_a: u32, n_b: u32, core: CoreLevel) -> Result<f64> {
        let a = CompositeLevel { rydberg: super::levels::RydbergLevel::circular(n_a)?, core };
        let b = CompositeLevel { rydberg: super::levels::RydbergLevel::circular(n_b)?, core };
        self.transition_ghz(&a, &b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(n: u32, t: CoreTerm, mj: i8) -> CompositeLevel {
        CompositeLevel::new(n, t, mj).unwrap()
    }

    #[test]
    fn ground_core_line_is_bare() {
        let table = Nu0Table::new().with(51, 49, 105.357546);
        let m = ShiftModel::power_law(757.0, -2.7);
        let f =
            transition_frequency(&lvl(51, CoreTerm::S12, 1), &lvl(49, CoreTerm::S12, 1), &m, &table)
                .unwrap();
        assert_eq!(f, 105.357546);
    }

    #[test]
    fn stretched_line_below_bare() {
        let table = Nu0Table::new().with(51, 49, 105.357546);
        let m = ShiftModel::power_law(757.0, -2.7);
        let f32 =
            transition_frequency(&lvl(51, CoreTerm::D32, 3), &lvl(49, CoreTerm::D32, 3), &m, &table)
                .unwrap();
        let offset_khz = (f32 - 105.357546) * 1e6;
        assert!((offset_khz + 102.2).abs() < 0.05, "{offset_khz}");
        // direction of the pair does not matter
        let rev =
            transition_frequency(&lvl(49, CoreTerm::D32, 3), &lvl(51, CoreTerm::D32, 3), &m, &table)
                .unwrap();
        assert_eq!(f32, rev);
        let f12 = transition_frequency(
            &lvl(51, CoreTerm::D32, -1),
            &lvl(49, CoreTerm::D32, -1),
            &m,
            &table,
        )
        .unwrap();
        assert!((f32 + f12 - 2.0 * 105.357546).abs() < 1e-12);
    }

    #[test]
    fn raman_line_is_delta() {
        let m = ShiftModel::power_law(757.0, -2.7);
        let f = transition_frequency(
            &lvl(51, CoreTerm::D32, 3),
            &lvl(51, CoreTerm::D32, 1),
            &m,
            &Nu0Table::new(),
        )
        .unwrap();
        assert!((f * 1e6 - 754.3).abs() < 1e-6);
    }

    #[test]
    fn missing_entries_and_mixed_lines() {
        let m = ShiftModel::default();
        let t = Nu0Table::new();
        assert!(matches!(
            transition_frequency(&lvl(51, CoreTerm::S12, 1), &lvl(49, CoreTerm::S12, 1), &m, &t),
            Err(Error::Config(_))
        ));
        assert!(transition_frequency(
            &lvl(51, CoreTerm::S12, 1),
            &lvl(49, CoreTerm::D32, 1),
            &m,
            &Nu0Table::strontium_default()
        )
        .is_err());
    }

    #[test]
    fn manifold_energies_from_table() {
        let t = Nu0Table::strontium_default();
        let e = t.manifold_energies().unwrap();
        assert!((e[&51] - e[&49] - 105.357547).abs() < 1e-12);
        assert!((e[&51] - e[&50] - 51.098516).abs() < 1e-12);
        let bad = Nu0Table::new().with(51, 49, 105.0).with(51, 50, 50.0).with(50, 49, 50.0);
        assert!(bad.manifold_energies().is_err());
        let ok = Nu0Table::new().with(51, 49, 100.0).with(51, 50, 50.0).with(50, 49, 50.0);
        assert!(ok.manifold_energies().is_ok());
    }

    #[test]
    fn hydrogenic_estimate_close_to_measured() {
        let est = hydrogenic_interval_ghz(51, 49);
        assert!((est - 105.3575).abs() < 0.01, "{est}");
    }
}
