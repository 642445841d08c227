use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{Estimate, FitKind, FitResult, ParamEstimate};
use crate::error::{Error, Result};
use crate::sequences::SpectrumDataset;

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub value: f64,
    pub sigma: Option<f64>,
    pub unit: String,
}

/// Fit report written as `<dataset>_fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub dataset: String,
    pub kind: FitKind,
    pub converged: bool,
    pub chi2: f64,
    pub iterations: usize,
    pub message: String,
    pub params: Vec<ParamEstimate>,
}

impl FitReport {
    pub fn new(dataset: &str, r: &FitResult) -> Self {
        Self {
            dataset: dataset.into(),
            kind: r.kind,
            converged: r.converged,
            chi2: r.chi2,
            iterations: r.iterations,
            message: r.message.clone(),
            params: r.report(),
        }
    }
}

/// Everything a run produces, in emission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub datasets: Vec<(String, SpectrumDataset)>,
    pub fits: Vec<(String, FitResult)>,
    pub summary: Vec<SummaryRow>,
}

impl Artifacts {
    pub fn row(&mut self, quantity: impl Into<String>, value: f64, sigma: Option<f64>, unit: &str) {
        self.summary.push(SummaryRow { quantity: quantity.into(), value, sigma, unit: unit.into() });
    }

    pub fn estimate(&mut self, quantity: impl Into<String>, e: Estimate, unit: &str) {
        self.row(quantity, e.value, Some(e.sigma), unit);
    }

    pub fn get(&self, quantity: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.quantity == quantity)
    }

    /// Summary value by name, NaN when absent.
    pub fn value(&self, quantity: &str) -> f64 {
        self.get(quantity).map_or(f64::NAN, |r| r.value)
    }

    pub fn dataset(&self, name: &str) -> Option<&SpectrumDataset> {
        self.datasets.iter().find(|(n, _)| n == name).map(|(_, d)| d)
    }

    pub fn fit(&self, name: &str) -> Option<&FitResult> {
        self.fits.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn extend(&mut self, other: Artifacts) {
        self.datasets.extend(other.datasets);
        self.fits.extend(other.fits);
        self.summary.extend(other.summary);
    }

    /// Write dataset CSV + JSON pairs, fit reports and `summary.{json,csv}`
    /// into `dir`; returns the written paths in order.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut paths = Vec::new();
        for (name, ds) in &self.datasets {
            paths.push(ds.write(dir, name)?);
            paths.push(dir.join(format!("{name}.json")));
        }
        for (name, fit) in &self.fits {
            let path = dir.join(format!("{name}_fit.json"));
            write_json(&path, &FitReport::new(name, fit))?;
            paths.push(path);
        }
        let path = dir.join("summary.json");
        write_json(&path, &self.summary)?;
        paths.push(path);
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["quantity", "value", "sigma", "unit"])?;
        for r in &self.summary {
            let sigma = r.sigma.map(|s| s.to_string()).unwrap_or_default();
            w.write_record([r.quantity.as_str(), &r.value.to_string(), &sigma, &r.unit])?;
        }
        w.flush()?;
        paths.push(path);
        Ok(paths)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
