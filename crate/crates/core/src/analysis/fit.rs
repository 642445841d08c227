use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequences::SpectrumDataset;
use crate::units::KHZ_US;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Functional form of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitKind {
    /// `offset + Σ area_k N(x; center_k, width)`; the width is the standard
    /// deviation, shared by all peaks unless `shared_width` is false.
    GaussianMulti { peaks: usize, shared_width: bool },
    /// `offset + amp Ω²/(Ω²+u²) sin²(π√(Ω²+u²) τ)` with u = x − center and
    /// the pulse duration τ (µs) fixed; x and Ω in kHz.
    RabiLineshape { duration: f64 },
    /// `offset + amp sin(2π freq x + phase)`.
    Sine,
    /// `intercept + slope x`.
    Linear,
}

impl FitKind {
    pub fn param_names(&self) -> Vec<String> {
        match *self {
            FitKind::GaussianMulti { peaks, shared_width } => {
                let mut v = vec!["offset".to_string()];
                if shared_width {
                    v.push("width".into());
                }
                for k in 1..=peaks {
                    v.push(format!("area_{k}"));
                    v.push(format!("center_{k}"));
                    if !shared_width {
                        v.push(format!("width_{k}"));
                    }
                }
                v
            }
            FitKind::RabiLineshape { .. } => {
                ["amp", "center", "offset", "rabi"].map(String::from).to_vec()
            }
            FitKind::Sine => ["amp", "freq", "phase", "offset"].map(String::from).to_vec(),
            FitKind::Linear => ["intercept", "slope"].map(String::from).to_vec(),
        }
    }

    /// Model value and gradient with respect to every parameter.
    pub fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        match *self {
            FitKind::GaussianMulti { peaks, shared_width } => {
                grad[0] = 1.0;
                let mut y = p[0];
                let stride = if shared_width { 2 } else { 3 };
                let base = if shared_width { 2 } else { 1 };
                if shared_width {
                    grad[1] = 0.0;
                }
                for k in 0..peaks {
                    let i = base + stride * k;
                    let (area, center) = (p[i], p[i + 1]);
                    let (w, wi) = if shared_width { (p[1], 1) } else { (p[i + 2], i + 2) };
                    let u = x - center;
                    let g = (-0.5 * (u / w).powi(2)).exp() / (w * SQRT_2PI);
                    y += area * g;
                    grad[i] = g;
                    grad[i + 1] = area * g * u / (w * w);
                    let dw = area * g * (u * u / (w * w * w) - 1.0 / w);
                    if shared_width {
                        grad[wi] += dw;
                    } else {
                        grad[wi] = dw;
                    }
                }
                y
            }
            FitKind::RabiLineshape { duration } => {
                let (amp, center, offset, rabi) = (p[0], p[1], p[2], p[3]);
                let t = std::f64::consts::PI * duration * KHZ_US;
                let u = x - center;
                let w2 = rabi * rabi + u * u;
                let (f, df_du, df_dr) = if w2 == 0.0 {
                    (0.0, 0.0, 0.0)
                } else {
                    let w = w2.sqrt();
                    let (s, c) = (t * w).sin_cos();
                    let ratio = rabi * rabi / w2;
                    let f = ratio * s * s;
                    let dsq_dw = 2.0 * s * c * t;
                    let df_du = -2.0 * rabi * rabi * u / (w2 * w2) * s * s + ratio * dsq_dw * u / w;
                    let df_dr = 2.0 * rabi * u * u / (w2 * w2) * s * s + ratio * dsq_dw * rabi / w;
                    (f, df_du, df_dr)
                };
                grad[0] = f;
                grad[1] = -amp * df_du;
                grad[2] = 1.0;
                grad[3] = amp * df_dr;
                offset + amp * f
            }
            FitKind::Sine => {
                let (amp, freq, phase, offset) = (p[0], p[1], p[2], p[3]);
                let arg = 2.0 * std::f64::consts::PI * freq * x + phase;
                let (s, c) = arg.sin_cos();
                grad[0] = s;
                grad[1] = amp * c * 2.0 * std::f64::consts::PI * x;
                grad[2] = amp * c;
                grad[3] = 1.0;
                offset + amp * s
            }
            FitKind::Linear => {
                grad[0] = 1.0;
                grad[1] = x;
                p[0] + p[1] * x
            }
        }
    }

    pub fn value(&self, x: f64, p: &[f64]) -> f64 {
        let mut g = vec![0.0; p.len()];
        self.eval(x, p, &mut g)
    }

    /// Bring equivalent solutions to one representative.
    fn canonicalize(&self, p: &mut [f64]) {
        match *self {
            FitKind::Sine => {
                if p[0] < 0.0 {
                    p[0] = -p[0];
                    p[2] += std::f64::consts::PI;
                }
                p[2] = wrap_phase(p[2]);
            }
            FitKind::RabiLineshape { .. } => p[3] = p[3].abs(),
            FitKind::GaussianMulti { peaks, shared_width } => {
                if shared_width {
                    p[1] = p[1].abs();
                } else {
                    for k in 0..peaks {
                        p[1 + 3 * k + 2] = p[1 + 3 * k + 2].abs();
                    }
                }
            }
            FitKind::Linear => {}
        }
    }
}

/// Wrap an angle into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut r = phi.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r -= tau;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
    #[serde(default)]
    pub fixed: bool,
    #[serde(default = "neg_inf")]
    pub lower: f64,
    #[serde(default = "pos_inf")]
    pub upper: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

/// A fit kind with initial values, fixed flags and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitModel {
    pub kind: FitKind,
    pub params: Vec<Param>,
}

impl FitModel {
    /// All parameters free and unbounded, starting at `init`.
    pub fn new(kind: FitKind, init: &[f64]) -> Result<Self> {
        let names = kind.param_names();
        if names.len() != init.len() {
            return Err(Error::Fit(format!(
                "{} parameters expected ({}), got {}",
                names.len(),
                names.join(", "),
                init.len()
            )));
        }
        let params = names
            .into_iter()
            .zip(init)
            .map(|(name, &value)| Param { name, value, fixed: false, lower: f64::NEG_INFINITY, upper: f64::INFINITY })
            .collect();
        Ok(Self { kind, params })
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::Fit(format!("no parameter named `{name}`")))
    }

    pub fn fix(mut self, name: &str, value: f64) -> Result<Self> {
        let i = self.position(name)?;
        self.params[i].value = value;
        self.params[i].fixed = true;
        Ok(self)
    }

    pub fn bound(mut self, name: &str, lower: f64, upper: f64) -> Result<Self> {
        let i = self.position(name)?;
        self.params[i].lower = lower;
        self.params[i].upper = upper;
        Ok(self)
    }

    pub fn n_free(&self) -> usize {
        self.params.iter().filter(|p| !p.fixed).count()
    }

    pub fn validate(&self) -> Result<()> {
        let names = self.kind.param_names();
        if self.params.len() != names.len() || self.params.iter().zip(&names).any(|(p, n)| &p.name != n) {
            return Err(Error::Fit(format!("parameters must be, in order: {}", names.join(", "))));
        }
        if self.n_free() == 0 {
            return Err(Error::Fit("at least one parameter must be free".into()));
        }
        for p in &self.params {
            if !(p.lower <= p.upper) {
                return Err(Error::Fit(format!("bounds of `{}` are inconsistent", p.name)));
            }
            if !p.value.is_finite() || p.value < p.lower || p.value > p.upper {
                return Err(Error::Fit(format!("initial `{}` = {} is outside its bounds", p.name, p.value)));
            }
        }
        if let FitKind::RabiLineshape { duration } = self.kind {
            if !(duration > 0.0) {
                return Err(Error::Fit("Rabi lineshape needs a positive pulse duration".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub sigma: f64,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: FitKind,
    pub params: Vec<ParamEstimate>,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
    /// Unweighted residual 2-norm.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Non-empty when the estimates are unreliable.
    pub message: String,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Result<&ParamEstimate> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Fit(format!("no parameter named `{name}`")))
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map(|p| p.value).unwrap_or(f64::NAN)
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name).map(|p| p.sigma).unwrap_or(f64::NAN)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.kind.value(x, &self.values())
    }

    /// Report entries with the stable schema (name, value, sigma, fixed).
    pub fn report(&self) -> Vec<ParamEstimate> {
        self.params.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative gradient-norm tolerance.
    pub gradient_tol: f64,
    /// Use a finite-difference Jacobian instead of the analytic one.
    pub numeric_jacobian: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 1000, gradient_tol: 1e-10, numeric_jacobian: false }
    }
}

/// Central-difference Jacobian of the model with respect to all parameters.
pub fn numeric_jacobian(kind: &FitKind, x: &[f64], p: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(1e-3);
        let mut hi = p.to_vec();
        let mut lo = p.to_vec();
        hi[k] += h;
        lo[k] -= h;
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = (kind.value(xi, &hi) - kind.value(xi, &lo)) / (2.0 * h);
        }
    }
    j
}

/// Analytic Jacobian of the model with respect to all parameters.
pub fn analytic_jacobian(kind: &FitKind, x: &[f64], p: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    let mut g = vec![0.0; p.len()];
    for (i, &xi) in x.iter().enumerate() {
        kind.eval(xi, p, &mut g);
        for k in 0..p.len() {
            j[(i, k)] = g[k];
        }
    }
    j
}

fn chi2(kind: &FitKind, x: &[f64], y: &[f64], w: &[f64], p: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((xi, yi), wi)| wi * (yi - kind.value(*xi, p)).powi(2))
        .sum()
}

/// Weighted least squares by damped Gauss-Newton (Levenberg-Marquardt).
/// `sigma` of zero everywhere means unit weights, with the covariance scaled
/// by the reduced χ²; otherwise weights are 1/σ² and the covariance is
/// (JᵀWJ)⁻¹.
pub fn fit_xy(x: &[f64], y: &[f64], sigma: &[f64], model: &FitModel, opts: &FitOptions) -> Result<FitResult> {
    model.validate()?;
    let n = x.len();
    if y.len() != n || sigma.len() != n {
        return Err(Error::Fit("x, y and sigma differ in length".into()));
    }
    let free: Vec<usize> = (0..model.params.len()).filter(|&i| !model.params[i].fixed).collect();
    let m = free.len();
    if n <= m {
        return Err(Error::Fit(format!("{n} points cannot constrain {m} free parameters")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite data".into()));
    }
    let unit = sigma.iter().all(|s| *s == 0.0);
    if !unit && sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Fit("errors must all be positive, or all zero for unit weights".into()));
    }
    let w: Vec<f64> = if unit { vec![1.0; n] } else { sigma.iter().map(|s| 1.0 / (s * s)).collect() };
    let kind = model.kind;
    let mut p: Vec<f64> = model.params.iter().map(|q| q.value).collect();
    let clamp = |p: &mut Vec<f64>| {
        for (v, q) in p.iter_mut().zip(&model.params) {
            *v = v.clamp(q.lower, q.upper);
        }
    };
    let jac = |p: &[f64]| -> DMatrix<f64> {
        let full = if opts.numeric_jacobian {
            numeric_jacobian(&kind, x, p)
        } else {
            analytic_jacobian(&kind, x, p)
        };
        DMatrix::from_fn(n, m, |i, k| full[(i, free[k])])
    };
    let y_scale = y.iter().zip(&w).map(|(v, wi)| wi * v * v).sum::<f64>().sqrt().max(1e-300);

    let mut cost = chi2(&kind, x, y, &w, &p);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut message = String::new();
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = jac(&p);
        let r = DVector::from_iterator(n, x.iter().zip(y).map(|(xi, yi)| yi - kind.value(*xi, &p)));
        let wd = DVector::from_vec(w.clone());
        let jw = DMatrix::from_fn(n, m, |i, k| j[(i, k)] * wd[i]);
        let a = j.transpose() * &jw;
        let g = jw.transpose() * &r;
        let j_norm = (0..m).map(|k| a[(k, k)]).sum::<f64>().sqrt();
        if g.norm() <= opts.gradient_tol * j_norm * y_scale || cost == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for k in 0..m {
                damped[(k, k)] += lambda * a[(k, k)].max(1e-300);
            }
            let Some(step) = damped.clone().cholesky().map(|c| c.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = p.clone();
            for k in 0..m {
                trial[free[k]] += step[k];
            }
            clamp(&mut trial);
            let trial_cost = chi2(&kind, x, y, &w, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let small = (0..m).all(|k| (trial[free[k]] - p[free[k]]).abs() <= 1e-14 * (p[free[k]].abs() + 1e-300));
                let stalled = cost - trial_cost <= 1e-15 * cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if small || stalled {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step at any damping: at a minimum to working precision.
            let rel = g.norm() / (j_norm * y_scale).max(1e-300);
            converged = rel <= 1e-6;
            if !converged {
                message = format!("no downhill step found (relative gradient {rel:.2e})");
            }
            break;
        }
    }
    if !converged && message.is_empty() {
        message = format!("iteration cap of {} reached", opts.max_iterations);
    }
    kind.canonicalize(&mut p);

    let j = jac(&p);
    let a = DMatrix::from_fn(m, m, |r, c| (0..n).map(|i| j[(i, r)] * w[i] * j[(i, c)]).sum::<f64>());
    let cov = a.clone().try_inverse();
    let mut sig = vec![0.0; model.params.len()];
    match cov {
        Some(cov) if cov.iter().all(|v| v.is_finite()) && rank_ok(&a) => {
            let scale = if unit { cost / (n - m) as f64 } else { 1.0 };
            for k in 0..m {
                sig[free[k]] = (cov[(k, k)] * scale).max(0.0).sqrt();
            }
        }
        _ => {
            converged = false;
            message = "degenerate Jacobian: parameters are not identifiable".into();
            sig.iter_mut().for_each(|s| *s = f64::NAN);
        }
    }
    let residual_norm = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - kind.value(*xi, &p)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(FitResult {
        kind,
        params: model
            .params
            .iter()
            .zip(p.iter().zip(&sig))
            .map(|(q, (&value, &sigma))| ParamEstimate { name: q.name.clone(), value, sigma, fixed: q.fixed })
            .collect(),
        chi2: cost,
        residual_norm,
        iterations,
        converged,
        message,
    })
}

fn rank_ok(a: &DMatrix<f64>) -> bool {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    max > 0.0 && min > 1e-14 * max
}

/// Fit a dataset using its values and errors.
pub fn fit(dataset: &SpectrumDataset, model: &FitModel) -> Result<FitResult> {
    dataset.validate()?;
    fit_xy(&dataset.axis.values, &dataset.values, &dataset.errors, model, &FitOptions::default())
}
