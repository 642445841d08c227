use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

/// Scan axis, observable values and their binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDataset {
    pub axis: Axis,
    pub observable: String,
    pub values: Vec<f64>,
    /// Zero in noiseless mode.
    pub errors: Vec<f64>,
    pub shots: Vec<u32>,
    /// Additional per-point columns (e.g. the applied two-photon frequency).
    #[serde(default)]
    pub extra: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Sidecar written next to the CSV: everything except the columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    axis_name: String,
    axis_unit: String,
    observable: String,
    extra_columns: Vec<String>,
    metadata: BTreeMap<String, serde_json::Value>,
}

impl SpectrumDataset {
    pub fn new(axis: Axis, observable: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        let ds = Self {
            axis,
            observable: observable.into(),
            values,
            errors: vec![0.0; n],
            shots: vec![0; n],
            extra: BTreeMap::new(),
            metadata: BTreeMap::new(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.axis.values.len();
        if self.values.len() != n || self.errors.len() != n || self.shots.len() != n {
            return Err(Error::InvalidState(format!(
                "dataset columns differ in length: axis {n}, values {}, errors {}, shots {}",
                self.values.len(),
                self.errors.len(),
                self.shots.len()
            )));
        }
        if let Some((k, _)) = self.extra.iter().find(|(_, v)| v.len() != n) {
            return Err(Error::InvalidState(format!("extra column `{k}` has wrong length")));
        }
        if self.errors.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::InvalidState("errors must be >= 0".into()));
        }
        Ok(())
    }

    /// True when every error is zero (noiseless data).
    pub fn is_noiseless(&self) -> bool {
        self.errors.iter().all(|e| *e == 0.0)
    }

    /// Copy with the axis replaced by `(x − origin) · scale`.
    pub fn rescaled_axis(&self, origin: f64, scale: f64, name: &str, unit: &str) -> Self {
        let mut out = self.clone();
        out.axis = Axis {
            name: name.to_string(),
            unit: unit.to_string(),
            values: self.axis.values.iter().map(|x| (x - origin) * scale).collect(),
        };
        out
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec![self.axis.name.clone()];
        cols.extend(self.extra.keys().cloned());
        cols.extend(["value".into(), "error".into(), "shots".into()]);
        cols
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(self.column_names())?;
        for i in 0..self.len() {
            let mut rec = vec![self.axis.values[i].to_string()];
            rec.extend(self.extra.values().map(|v| v[i].to_string()));
            rec.push(self.values[i].to_string());
            rec.push(self.errors[i].to_string());
            rec.push(self.shots[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`; returns the CSV path.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        self.validate()?;
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        self.write_csv(std::fs::File::create(&csv_path)?)?;
        let sidecar = Sidecar {
            axis_name: self.axis.name.clone(),
            axis_unit: self.axis.unit.clone(),
            observable: self.observable.clone(),
            extra_columns: self.extra.keys().cloned().collect(),
            metadata: self.metadata.clone(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        std::fs::write(dir.join(format!("{stem}.json")), text)?;
        Ok(csv_path)
    }

    /// Read a dataset written by [`SpectrumDataset::write`].
    pub fn read(csv_path: &Path) -> Result<Self> {
        let side_path = csv_path.with_extension("json");
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(&side_path)?)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let headers = rdr.headers()?.clone();
        let expected_len = 4 + sidecar.extra_columns.len();
        if headers.len() != expected_len || headers.get(0) != Some(sidecar.axis_name.as_str()) {
            return Err(Error::Io(format!(
                "{}: header does not match its sidecar",
                csv_path.display()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Io(format!("bad number `{s}`")))
        };
        let mut axis = Vec::new();
        let mut extra: BTreeMap<String, Vec<f64>> =
            sidecar.extra_columns.iter().map(|k| (k.clone(), Vec::new())).collect();
        let (mut values, mut errors, mut shots) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            axis.push(parse(&rec[0])?);
            for (k, name) in sidecar.extra_columns.iter().enumerate() {
                extra.get_mut(name).expect("column listed").push(parse(&rec[1 + k])?);
            }
            let base = 1 + sidecar.extra_columns.len();
            values.push(parse(&rec[base])?);
            errors.push(parse(&rec[base + 1])?);
            shots.push(
                rec[base + 2].parse().map_err(|_| Error::Io("bad shot count".into()))?,
            );
        }
        let ds = Self {
            axis: Axis { name: sidecar.axis_name, unit: sidecar.axis_unit, values: axis },
            observable: sidecar.observable,
            values,
            errors,
            shots,
            extra,
            metadata: sidecar.metadata,
        };
        ds.validate()?;
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_json_round_trip() {
        let mut ds = SpectrumDataset::new(
            Axis { name: "source_ghz".into(), unit: "GHz".into(), values: vec![52.678773, 52.6787735] },
            "p49",
            vec![0.1, 0.2],
        )
        .unwrap();
        ds.errors = vec![0.01, 0.02];
        ds.shots = vec![100, 100];
        ds.extra.insert("applied_ghz".into(), vec![105.357546, 105.357547]);
        ds.metadata.insert("seed".into(), serde_json::json!(7));
        let dir = tempfile::tempdir().unwrap();
        let path = ds.write(dir.path(), "spec").unwrap();
        let back = SpectrumDataset::read(&path).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn length_mismatch_rejected() {
        let axis = Axis { name: "x".into(), unit: "".into(), values: vec![1.0] };
        assert!(SpectrumDataset::new(axis, "y", vec![1.0, 2.0]).is_err());
    }
}
