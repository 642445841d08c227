use serde::{Deserialize, Serialize};

use super::fit::{fit_xy, FitKind, FitModel, FitOptions, FitResult};
use crate::atomic::{quadrupole_delta, ShiftModel};
use crate::error::{Error, Result};
use crate::sequences::SpectrumDataset;
use crate::units::KHZ_PER_GHZ;

/// A value with its 1σ statistical (local-quadratic) uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

impl Estimate {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    /// Ratio with uncorrelated error propagation.
    pub fn ratio(self, other: Estimate) -> Estimate {
        let v = self.value / other.value;
        let rel = ((self.sigma / self.value).powi(2) + (other.sigma / other.value).powi(2)).sqrt();
        Estimate::new(v, (v * rel).abs())
    }
}

/// Frequency axis of a microwave dataset as applied-frequency kHz offsets
/// from `origin_ghz`. Uses the `applied_ghz` column when present.
pub fn applied_offsets_khz(ds: &SpectrumDataset, origin_ghz: f64) -> Vec<f64> {
    let ghz = ds.extra.get("applied_ghz").unwrap_or(&ds.axis.values);
    ghz.iter().map(|v| (v - origin_ghz) * KHZ_PER_GHZ).collect()
}

fn argmax(x: &[f64], y: &[f64], keep: impl Fn(f64) -> bool) -> Option<(f64, f64)> {
    x.iter()
        .zip(y)
        .filter(|(xi, _)| keep(**xi))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(a, b)| (*a, *b))
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

/// Results of the three-step Gaussian analysis of the microwave spectra.
/// Frequencies in GHz, width in kHz (standard deviation), areas in
/// probability × kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwReport {
    pub nu0_ghz: Estimate,
    pub w0_khz: Estimate,
    pub a0: Estimate,
    pub nu32_ghz: Estimate,
    pub nu12_ghz: Estimate,
    pub a32: Estimate,
    pub a12: Estimate,
    pub a32_prime: Estimate,
    pub a0_prime: Estimate,
    pub splitting_khz: Estimate,
    pub a32_over_a0: Estimate,
    pub a12_over_a0: Estimate,
    pub a32_prime_over_a0: Estimate,
    pub a0_prime_over_a0: Estimate,
    pub fits: Vec<(String, FitResult)>,
}

fn step(name: &str, r: Result<FitResult>) -> Result<FitResult> {
    let r = r.map_err(|e| Error::Pipeline { step: name.into(), reason: e.to_string() })?;
    if !r.converged {
        return Err(Error::Pipeline { step: name.into(), reason: r.message.clone() });
    }
    Ok(r)
}

/// Step 1: free Gaussian on the unpumped spectrum. Step 2: two Gaussians of
/// width w₀ on the pumped spectrum. Step 3: two Gaussians of width w₀ with
/// centers fixed at ν_{3/2} and ν₀ on the pumped + repumped spectrum.
pub fn mw_three_step_pipeline(
    black: &SpectrumDataset,
    red: &SpectrumDataset,
    blue: &SpectrumDataset,
) -> Result<MwReport> {
    let origin = {
        let ghz = black.extra.get("applied_ghz").unwrap_or(&black.axis.values);
        ghz.iter().sum::<f64>() / ghz.len().max(1) as f64
    };
    let opts = FitOptions::default();
    let g1 = FitKind::GaussianMulti { peaks: 1, shared_width: true };
    let g2 = FitKind::GaussianMulti { peaks: 2, shared_width: true };

    let x = applied_offsets_khz(black, origin);
    let (c0, _) = argmax(&x, &black.values, |_| true)
        .ok_or_else(|| Error::Pipeline { step: "step1".into(), reason: "empty dataset".into() })?;
    let area0 = trapezoid(&x, &black.values).max(1e-6);
    let m1 = FitModel::new(g1, &[0.0, 50.0, area0, c0])?.fix("offset", 0.0)?.bound("width", 1e-3, f64::INFINITY)?;
    let f1 = step("step1", fit_xy(&x, &black.values, &black.errors, &m1, &opts))?;
    let nu0 = f1.value("center_1");
    let w0 = f1.value("width");

    let x = applied_offsets_khz(red, origin);
    let left = argmax(&x, &red.values, |v| v < nu0).map(|p| p.0).unwrap_or(nu0 - 100.0);
    let right = argmax(&x, &red.values, |v| v > nu0).map(|p| p.0).unwrap_or(nu0 + 100.0);
    let half = 0.5 * trapezoid(&x, &red.values).max(1e-6);
    let m2 = FitModel::new(g2, &[0.0, w0, half, left, half, right])?.fix("offset", 0.0)?.fix("width", w0)?;
    let f2 = step("step2", fit_xy(&x, &red.values, &red.errors, &m2, &opts))?;
    let nu32 = f2.value("center_1");

    let x = applied_offsets_khz(blue, origin);
    let total = trapezoid(&x, &blue.values).max(1e-6);
    let m3 = FitModel::new(g2, &[0.0, w0, 0.9 * total, nu32, 0.1 * total, nu0])?
        .fix("offset", 0.0)?
        .fix("width", w0)?
        .fix("center_1", nu32)?
        .fix("center_2", nu0)?;
    let f3 = step("step3", fit_xy(&x, &blue.values, &blue.errors, &m3, &opts))?;

    let est = |f: &FitResult, name: &str| Estimate::new(f.value(name), f.sigma(name));
    let ghz = |f: &FitResult, name: &str| {
        Estimate::new(origin + f.value(name) / KHZ_PER_GHZ, f.sigma(name) / KHZ_PER_GHZ)
    };
    let a0 = est(&f1, "area_1");
    let a32 = est(&f2, "area_1");
    let a12 = est(&f2, "area_2");
    let a32p = est(&f3, "area_1");
    let a0p = est(&f3, "area_2");
    let c1 = est(&f2, "center_1");
    let c2 = est(&f2, "center_2");
    Ok(MwReport {
        nu0_ghz: ghz(&f1, "center_1"),
        w0_khz: est(&f1, "width"),
        a0,
        nu32_ghz: ghz(&f2, "center_1"),
        nu12_ghz: ghz(&f2, "center_2"),
        a32,
        a12,
        a32_prime: a32p,
        a0_prime: a0p,
        splitting_khz: Estimate::new(c2.value - c1.value, c1.sigma.hypot(c2.sigma)),
        a32_over_a0: a32.ratio(a0),
        a12_over_a0: a12.ratio(a0),
        a32_prime_over_a0: a32p.ratio(a0),
        a0_prime_over_a0: a0p.ratio(a0),
        fits: vec![("step1".into(), f1), ("step2".into(), f2), ("step3".into(), f3)],
    })
}

/// Rabi lineshape fit of a Raman spectrum (axis δ in kHz) with the pulse
/// duration fixed.
pub fn fit_raman_resonance(ds: &SpectrumDataset, duration: f64) -> Result<FitResult> {
    let x = &ds.axis.values;
    let y = &ds.values;
    let (c, ymax) = argmax(x, y, |_| true).ok_or_else(|| Error::Fit("empty dataset".into()))?;
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let model = FitModel::new(
        FitKind::RabiLineshape { duration },
        &[ymax - ymin, c, ymin, 500.0 / duration],
    )?;
    let r = fit_xy(x, y, &ds.errors, &model, &FitOptions::default())?;
    if !r.converged {
        return Err(Error::Fit(format!("Raman lineshape fit failed: {}", r.message)));
    }
    Ok(r)
}

/// Sine fit of Ramsey fringes with x in kHz; `freq_guess` in cycles/kHz.
pub fn fit_fringes(x: &[f64], y: &[f64], sigma: &[f64], freq_guess: f64) -> Result<FitResult> {
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
    let offset = 0.5 * (ymax + ymin);
    let amp = (0.5 * (ymax - ymin)).max(1e-6);
    // Seed the phase by projecting onto the guessed frequency.
    let (mut s, mut c) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let arg = 2.0 * std::f64::consts::PI * freq_guess * xi;
        s += (yi - offset) * arg.sin();
        c += (yi - offset) * arg.cos();
    }
    let phase = c.atan2(s);
    let model = FitModel::new(FitKind::Sine, &[amp, freq_guess, phase, offset])?;
    let r = fit_xy(x, y, sigma, &model, &FitOptions::default())?;
    if !r.converged {
        return Err(Error::Fit(format!("fringe fit failed: {}", r.message)));
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    /// Resonance at zero power, kHz.
    pub intercept: Estimate,
    /// kHz per unit power.
    pub slope: Estimate,
}

/// Weighted linear fit of resonance δ versus power; points are
/// (power, δ, σ_δ) with σ = 0 meaning unit weights.
pub fn light_shift_extrapolate(points: &[(f64, f64, f64)]) -> Result<ExtrapolationResult> {
    let mut powers: Vec<f64> = points.iter().map(|p| p.0).collect();
    powers.sort_by(f64::total_cmp);
    powers.dedup();
    if powers.len() < 2 {
        return Err(Error::Fit("extrapolation needs at least two distinct powers".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let s: Vec<f64> = points.iter().map(|p| p.2).collect();
    let est = if points.len() == 2 {
        // Exactly determined: the line through both points.
        let slope = (y[1] - y[0]) / (x[1] - x[0]);
        let intercept = y[0] - slope * x[0];
        let (s0, s1) = (s[0], s[1]);
        let dx = x[1] - x[0];
        ExtrapolationResult {
            intercept: Estimate::new(intercept, ((x[1] * s0).powi(2) + (x[0] * s1).powi(2)).sqrt() / dx.abs()),
            slope: Estimate::new(slope, s0.hypot(s1) / dx.abs()),
        }
    } else {
        let model = FitModel::new(FitKind::Linear, &[y[0], 0.0])?;
        let r = fit_xy(&x, &y, &s, &model, &FitOptions::default())?;
        if !r.converged {
            return Err(Error::Fit(format!("extrapolation fit failed: {}", r.message)));
        }
        ExtrapolationResult {
            intercept: Estimate::new(r.value("intercept"), r.sigma("intercept")),
            slope: Estimate::new(r.value("slope"), r.sigma("slope")),
        }
    };
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BThetaResult {
    /// kHz; `sigma` combines the statistical and C contributions.
    pub b: Estimate,
    pub sigma_b_stat: f64,
    pub sigma_b_from_c: f64,
    /// Atomic units.
    pub theta: Estimate,
}

/// One-parameter weighted fit of B in δₙ = B x⁶ + C x⁸ with x = n_ref/n and
/// C fixed, then Θ = B / (δ per unit Θ at n_ref). `deltas` holds
/// (n, δₙ, σ) in kHz; all-zero σ means unit weights with the statistical
/// error taken from the residual scatter. `extra_theta_sigma`, when given,
/// is added in quadrature to σ_Θ.
pub fn fit_b_extract_theta(
    deltas: &[(u32, f64, f64)],
    c: Estimate,
    model_ref: &ShiftModel,
    extra_theta_sigma: Option<f64>,
) -> Result<BThetaResult> {
    if deltas.is_empty() {
        return Err(Error::Fit("no δₙ values to fit".into()));
    }
    let mut ns: Vec<u32> = deltas.iter().map(|d| d.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() != deltas.len() {
        return Err(Error::Fit("n values must be distinct".into()));
    }
    if ns[0] < 2 {
        return Err(Error::Domain("n must be >= 2".into()));
    }
    let unit = deltas.iter().all(|d| d.2 == 0.0);
    if !unit && deltas.iter().any(|d| !(d.2 > 0.0)) {
        return Err(Error::Fit("errors must all be positive, or all zero".into()));
    }
    let nref = f64::from(model_ref.reference_n);
    let (mut s12, mut s14, mut sy) = (0.0, 0.0, 0.0);
    for &(n, delta, sigma) in deltas {
        let x = nref / f64::from(n);
        let w = if unit { 1.0 } else { 1.0 / (sigma * sigma) };
        s12 += w * x.powi(12);
        s14 += w * x.powi(14);
        sy += w * x.powi(6) * (delta - c.value * x.powi(8));
    }
    let b = sy / s12;
    let sigma_stat = if unit {
        let dof = deltas.len() as f64 - 1.0;
        if dof > 0.0 {
            let chi2: f64 = deltas
                .iter()
                .map(|&(n, delta, _)| {
                    let x = nref / f64::from(n);
                    (delta - b * x.powi(6) - c.value * x.powi(8)).powi(2)
                })
                .sum();
            (chi2 / dof / s12).sqrt()
        } else {
            0.0
        }
    } else {
        1.0 / s12.sqrt()
    };
    let sigma_c = (s14 / s12).abs() * c.sigma;
    let sigma_b = sigma_stat.hypot(sigma_c);
    let per_theta = quadrupole_delta(model_ref.reference_n, 1.0)?;
    let theta = b / per_theta;
    let mut sigma_theta = sigma_b / per_theta;
    if let Some(extra) = extra_theta_sigma {
        sigma_theta = sigma_theta.hypot(extra);
    }
    Ok(BThetaResult {
        b: Estimate::new(b, sigma_b),
        sigma_b_stat: sigma_stat,
        sigma_b_from_c: sigma_c,
        theta: Estimate::new(theta, sigma_theta),
    })
}
