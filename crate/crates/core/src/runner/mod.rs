//! Configuration files, shipped reproduction recipes and artifact output.

pub mod config;
pub mod output;
pub mod recipes;

use std::cell::Cell;

pub use config::{resolve_output_dir, ModelConfig, Nu0Entry, PresetConfig, RunConfig, SequenceEntry, DEFAULT_OUT_DIR, OUT_DIR_ENV};
pub use output::{Artifacts, FitReport, SummaryRow};
pub use recipes::{run_recipe, RecipeSettings, DEFAULT_SHOTS, RECIPES};

use crate::analysis::fit;
use crate::error::{Error, Result};
use crate::sequences::delta_star::{find_delta_star, DeltaStarOptions};
use crate::sequences::presets::RamseyOptions;
use crate::sequences::run_sequence;

/// Validate and execute a configuration: the recipe first, if any, then
/// every `[[sequence]]` entry with its optional fit.
pub fn run_config(cfg: &RunConfig) -> Result<Artifacts> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(0);
    let mut out = Artifacts::default();
    if let Some(recipe) = &cfg.recipe {
        let settings = RecipeSettings { model: cfg.model.clone(), seed, shots: cfg.shots_per_point.unwrap_or(0) };
        out.extend(run_recipe(recipe, &settings)?);
    }
    let physics = cfg.model.physics()?;
    for entry in &cfg.sequences {
        let found = Cell::new(None);
        let delta_star = || {
            let ramsey = match &entry.preset {
                Some(PresetConfig::RamseySwitch { options, .. }) => *options,
                _ => RamseyOptions::default(),
            };
            let opts = DeltaStarOptions { ramsey: RamseyOptions { scattering_on: false, ..ramsey }, ..Default::default() };
            let r = find_delta_star(&physics, 1.0, &opts)?;
            found.set(Some(r.delta_star));
            Ok(r.delta_star)
        };
        let stage = |what: &str, e: Error| Error::Pipeline { step: format!("{} {what}", entry.name), reason: e.to_string() };
        let spec = cfg.build_sequence(entry, &physics, delta_star).map_err(|e| stage("build", e))?;
        if let Some(d) = found.get() {
            out.row(format!("{}.delta_star", entry.name), d, None, "kHz");
        }
        let ds = run_sequence(&spec, &physics, seed).map_err(|e| stage("simulation", e))?;
        if let Some(model) = &entry.fit {
            let r = fit(&ds, model).map_err(|e| stage("fit", e))?;
            for p in r.report() {
                out.row(format!("{}.{}", entry.name, p.name), p.value, (!p.fixed).then_some(p.sigma), "");
            }
            out.fits.push((entry.name.clone(), r));
        }
        out.datasets.push((entry.name.clone(), ds));
    }
    Ok(out)
}
