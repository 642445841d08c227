use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::FitModel;
use crate::atomic::{LevelStructure, Nu0Table, ShiftMode, ShiftModel};
use crate::dynamics::CoreOptics;
use crate::error::{Error, Result};
use crate::sequences::presets::{
    mw_spectroscopy, purification_filter, raman_spectroscopy, ramsey_switch, FilterInput,
    MwSpectroscopyOptions, MwVariant, PurificationOptions, RamanSpectroscopyOptions,
    RamseyOptions, DEFAULT_MW_JITTER_KHZ,
};
use crate::dynamics::PulseSpec;
use crate::sequences::{DetectionModel, Physics, SequenceSpec};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "SRCIRC_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "srcirc-out";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Nu0Entry {
    pub n_hi: u32,
    pub n_lo: u32,
    pub ghz: f64,
}

fn default_nu0() -> Vec<Nu0Entry> {
    Nu0Table::strontium_default()
        .iter()
        .map(|(n_hi, n_lo, ghz)| Nu0Entry { n_hi, n_lo, ghz })
        .collect()
}

/// Atomic and apparatus constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub theta: f64,
    pub dipole_c_khz: f64,
    pub dipole_c_sigma_khz: f64,
    pub reference_n: u32,
    pub mode: ShiftMode,
    pub nu0: Vec<Nu0Entry>,
    pub gamma_p_mhz: f64,
    pub rate_422: f64,
    pub rate_repump: f64,
    /// Fraction of 4d₃/₂ returned to 5s after pumping, for realistic spectra.
    pub pumping_leak: f64,
    pub background: f64,
    /// Microwave frequency jitter σ for realistic spectroscopy, kHz.
    pub mw_jitter_khz: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let shift = ShiftModel::default();
        let optics = CoreOptics::default();
        Self {
            theta: shift.theta,
            dipole_c_khz: shift.dipole_c_khz,
            dipole_c_sigma_khz: shift.dipole_c_sigma_khz,
            reference_n: shift.reference_n,
            mode: shift.mode,
            nu0: default_nu0(),
            gamma_p_mhz: optics.gamma_p_mhz,
            rate_422: optics.rate_422,
            rate_repump: optics.rate_repump,
            pumping_leak: 0.10,
            background: DetectionModel::default().background,
            mw_jitter_khz: DEFAULT_MW_JITTER_KHZ,
        }
    }
}

impl ModelConfig {
    /// Model simulated by `reproduce`: the δₙ = B(51/n)⁶ + C(51/n)⁸ law at
    /// B = 757 kHz and a pumping leak of 0.08.
    pub fn reproduction() -> Self {
        Self { mode: ShiftMode::PowerLaw { b_khz: 757.0 }, pumping_leak: 0.08, ..Self::default() }
    }

    pub fn shift_model(&self) -> ShiftModel {
        ShiftModel {
            theta: self.theta,
            dipole_c_khz: self.dipole_c_khz,
            dipole_c_sigma_khz: self.dipole_c_sigma_khz,
            reference_n: self.reference_n,
            mode: self.mode,
        }
    }

    pub fn physics(&self) -> Result<Physics> {
        let model = self.shift_model();
        model.validate()?;
        let mut table = Nu0Table::new();
        for e in &self.nu0 {
            if e.n_hi == e.n_lo || !(e.ghz > 0.0) {
                return Err(Error::Config(format!(
                    "model.nu0 entry ({}, {}) must join two manifolds with a positive frequency",
                    e.n_hi, e.n_lo
                )));
            }
            table.insert(e.n_hi, e.n_lo, e.ghz);
        }
        let optics = CoreOptics { gamma_p_mhz: self.gamma_p_mhz, rate_422: self.rate_422, rate_repump: self.rate_repump };
        optics.validate()?;
        if !(0.0..=1.0).contains(&self.pumping_leak) {
            return Err(Error::Config(format!("model.pumping_leak must lie in [0, 1], got {}", self.pumping_leak)));
        }
        if !(0.0..1.0).contains(&self.background) {
            return Err(Error::Config(format!("model.background must lie in [0, 1), got {}", self.background)));
        }
        if !(self.mw_jitter_khz >= 0.0) {
            return Err(Error::Config("model.mw_jitter_khz must be >= 0".into()));
        }
        Ok(Physics {
            structure: LevelStructure::new(model, table)?,
            optics,
            detection: DetectionModel { background: self.background, ..DetectionModel::default() },
        })
    }
}

fn default_duration() -> f64 {
    17.0
}

fn unit() -> f64 {
    1.0
}

/// A named sequence builder with its options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetConfig {
    MwSpectroscopy {
        variant: MwVariant,
        #[serde(default)]
        options: MwSpectroscopyOptions,
    },
    RamanSpectroscopy {
        n_init: u32,
        #[serde(default = "default_duration")]
        duration: f64,
        #[serde(default = "unit")]
        power_scale: f64,
        #[serde(default)]
        options: RamanSpectroscopyOptions,
    },
    RamseySwitch {
        raman_on: bool,
        /// Raman δ in kHz; omitted means the δ* search result.
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        options: RamseyOptions,
    },
    PurificationFilter {
        input: FilterInput,
        #[serde(default)]
        options: PurificationOptions,
    },
}

impl PresetConfig {
    /// Build the sequence; `delta_star` resolves an omitted Ramsey δ.
    pub fn build(&self, physics: &Physics, delta_star: impl FnOnce() -> Result<f64>) -> Result<SequenceSpec> {
        match self {
            PresetConfig::MwSpectroscopy { variant, options } => mw_spectroscopy(physics, *variant, options),
            PresetConfig::RamanSpectroscopy { n_init, duration, power_scale, options } => {
                raman_spectroscopy(physics, *n_init, *duration, *power_scale, options)
            }
            PresetConfig::RamseySwitch { raman_on, delta, options } => {
                let d = match (raman_on, delta) {
                    (false, _) => 0.0,
                    (true, Some(d)) => *d,
                    (true, None) => delta_star()?,
                };
                ramsey_switch(physics, *raman_on, d, options)
            }
            PresetConfig::PurificationFilter { input, options } => purification_filter(physics, *input, options),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceEntry {
    pub name: String,
    #[serde(default)]
    pub preset: Option<PresetConfig>,
    #[serde(default)]
    pub spec: Option<SequenceSpec>,
    /// Replaces the scan values of the preset or spec.
    #[serde(default)]
    pub scan_values: Option<Vec<f64>>,
    /// Optional fit applied to the resulting dataset.
    #[serde(default)]
    pub fit: Option<FitModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the shot count of every preset when set.
    #[serde(default)]
    pub shots_per_point: Option<u32>,
    #[serde(default)]
    pub model: ModelConfig,
    /// Shipped recipe to execute with this model.
    #[serde(default)]
    pub recipe: Option<String>,
    #[serde(default, rename = "sequence")]
    pub sequences: Vec<SequenceEntry>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Output directory: the config value, else the environment, else a
    /// fixed default.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output_dir(self.output_dir.clone())
    }

    /// Build one entry. Presets take the model's pumping leak and, for
    /// microwave spectroscopy, its jitter; `shots_per_point` and
    /// `scan_values` override whatever the preset or inline spec carries.
    pub fn build_sequence(&self, entry: &SequenceEntry, physics: &Physics, delta_star: impl FnOnce() -> Result<f64>) -> Result<SequenceSpec> {
        let mut spec = match (&entry.preset, &entry.spec) {
            (Some(p), None) => {
                let mut spec = p.build(physics, delta_star)?;
                for step in &mut spec.steps {
                    if let PulseSpec::OpticalPump422(pump) = &mut step.pulse {
                        pump.leak = self.model.pumping_leak;
                    }
                }
                if let PresetConfig::MwSpectroscopy { .. } = p {
                    spec.mw_jitter_khz = self.model.mw_jitter_khz;
                }
                spec
            }
            (None, Some(s)) => s.clone(),
            (Some(_), Some(_)) => return Err(Error::Config("give either `preset` or `spec`, not both".into())),
            (None, None) => return Err(Error::Config("needs a `preset` or a `spec`".into())),
        };
        if let Some(s) = self.shots_per_point {
            spec.shots_per_point = s;
        }
        if let Some(v) = &entry.scan_values {
            spec.scan.values = v.clone();
        }
        if spec.id.is_empty() {
            spec.id = entry.name.clone();
        }
        Ok(spec)
    }

    /// Every problem found, without running anything.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let physics = match self.model.physics() {
            Ok(p) => Some(p),
            Err(e) => {
                out.push(format!("model: {e}"));
                None
            }
        };
        if let Some(r) = &self.recipe {
            if !super::recipes::RECIPES.contains(&r.as_str()) {
                out.push(format!("recipe: unknown recipe `{r}`; known: {}", super::recipes::RECIPES.join(", ")));
            }
        }
        if self.recipe.is_none() && self.sequences.is_empty() {
            out.push("config: nothing to run; give `recipe` or at least one [[sequence]]".into());
        }
        if let Some(dir) = &self.output_dir {
            if dir.is_file() {
                out.push(format!("output_dir: {} is a file", dir.display()));
            } else if dir.metadata().is_ok_and(|m| m.permissions().readonly()) {
                out.push(format!("output_dir: {} is not writable", dir.display()));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, entry) in self.sequences.iter().enumerate() {
            let at = format!("sequence[{i}] `{}`", entry.name);
            if entry.name.is_empty() || !entry.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
                out.push(format!("{at}: name must be non-empty and use only letters, digits, '-' or '_'"));
            }
            if !names.insert(entry.name.clone()) {
                out.push(format!("{at}: duplicate name"));
            }
            let Some(physics) = &physics else { continue };
            // A placeholder δ keeps validation free of the δ* search.
            match self.build_sequence(entry, physics, || Ok(900.0)) {
                Ok(spec) => {
                    out.extend(spec.diagnostics().into_iter().map(|d| format!("{at}: {d}")));
                    if spec.shots_per_point > 0 && self.seed.is_none() {
                        out.push(format!("{at}: seed is required when shots_per_point > 0"));
                    }
                }
                Err(e) => out.push(format!("{at}: {e}")),
            }
            if let Some(fit) = &entry.fit {
                if let Err(e) = fit.validate() {
                    out.push(format!("{at}.fit: {e}"));
                }
            }
        }
        if self.shots_per_point.is_some_and(|s| s > 0) && self.seed.is_none() {
            out.push("seed: required when shots_per_point > 0".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(d.join("\n")))
        }
    }
}

pub fn resolve_output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
seed = 3
[model]
mode = { power_law = { b_khz = 757.0 } }

[[sequence]]
name = "black"
preset = { kind = "mw_spectroscopy", variant = "no_pump" }
"#;

    #[test]
    fn good_config_has_no_diagnostics() {
        let c = RunConfig::from_toml(GOOD).unwrap();
        assert_eq!(c.diagnostics(), Vec::<String>::new());
        assert!(matches!(c.model.mode, ShiftMode::PowerLaw { .. }));
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let e = RunConfig::from_toml("seed = \n").unwrap_err().to_string();
        assert!(e.contains("line 1"), "{e}");
        let e = RunConfig::from_toml("sed = 1\n").unwrap_err().to_string();
        assert!(e.contains("sed"), "{e}");
    }

    #[test]
    fn shots_require_seed() {
        let c = RunConfig::from_toml(&GOOD.replace("seed = 3", "shots_per_point = 100")).unwrap();
        assert!(c.diagnostics().iter().any(|d| d.contains("seed")));
    }

    #[test]
    fn unknown_recipe_and_empty_config() {
        let c = RunConfig::from_toml("recipe = \"fig9\"").unwrap();
        assert!(c.diagnostics()[0].contains("fig9"));
        let c = RunConfig::from_toml("").unwrap();
        assert!(c.diagnostics()[0].contains("nothing to run"));
    }

    #[test]
    fn empty_scan_is_a_validation_error() {
        let c = RunConfig::from_toml(&format!("{GOOD}scan_values = []\n")).unwrap();
        assert!(c.diagnostics().iter().any(|d| d.contains("sequence[0] `black`: scan.values")));
    }

    #[test]
    fn model_leak_reaches_pump_steps() {
        let text = GOOD.replace("no_pump", "pump_plus_repump").replace("[model]", "[model]\npumping_leak = 0.2");
        let c = RunConfig::from_toml(&text).unwrap();
        let physics = c.model.physics().unwrap();
        let spec = c.build_sequence(&c.sequences[0], &physics, || unreachable!()).unwrap();
        assert!(matches!(spec.steps[0].pulse, PulseSpec::OpticalPump422(p) if p.leak == 0.2));
        assert_eq!(spec.mw_jitter_khz, DEFAULT_MW_JITTER_KHZ);
    }

    #[test]
    fn bad_model_is_reported() {
        let c = RunConfig::from_toml("recipe = \"fig2\"\n[model]\ntheta = -1.0\n").unwrap();
        assert!(c.diagnostics().iter().any(|d| d.starts_with("model:")));
    }
}
