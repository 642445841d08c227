//! Independent reference calculations shared by the integration tests.
#![allow(dead_code)]

pub mod chains;

use std::f64::consts::PI;

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Composite Gauss–Legendre integral of `f` over [a, b].
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> f64 {
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + h * (p as f64 + 0.5);
        for &(x, w) in rule {
            total += 0.5 * h * w * f(mid + 0.5 * h * x);
        }
    }
    total
}

/// |⟨(3cos²θ − 1)/r³⟩| of the hydrogenic circular state nc by direct
/// quadrature of |ψ|² ∝ r^(2n−2) e^(−2r/n) sin^(2n−2)θ, in atomic units.
pub fn circular_gradient_quadrature(n: u32) -> f64 {
    let rule = gauss_legendre(24);
    let nf = f64::from(n);
    let l = nf - 1.0;
    // Radial weight r² R² ∝ r^(2n) e^(−2r/n); scale by its peak to stay finite.
    let peak = nf * nf;
    let log_w = |r: f64, power: f64| power * r.ln() - 2.0 * r / nf - (2.0 * nf * peak.ln() - 2.0 * peak / nf);
    let r_max = peak + 40.0 * nf.powf(1.5) + 60.0;
    let num = integrate(|r| if r > 0.0 { log_w(r, 2.0 * nf - 3.0).exp() } else { 0.0 }, 0.0, r_max, 400, &rule);
    let den = integrate(|r| if r > 0.0 { log_w(r, 2.0 * nf).exp() } else { 0.0 }, 0.0, r_max, 400, &rule);
    let ang_num = integrate(|x| (3.0 * x * x - 1.0) * (1.0 - x * x).powf(l), -1.0, 1.0, 200, &rule);
    let ang_den = integrate(|x| (1.0 - x * x).powf(l), -1.0, 1.0, 200, &rule);
    (num / den * ang_num / ang_den).abs()
}

/// Amplitude left in the initial state of a two-level system after a pulse
/// of Rabi frequency `rabi` (kHz) and duration `tau` (µs) at detuning `x`
/// (kHz), in the frame rotating at the drive.
pub fn two_level_return(rabi: f64, x: f64, tau: f64) -> Complex64 {
    let t = tau * 1e-3;
    let w = rabi.hypot(x);
    let (s, c) = (PI * w * t).sin_cos();
    Complex64::from_polar(1.0, -PI * x * t) * Complex64::new(c, x / w * s)
}

/// Detuning from the 49c line, near zero, at which the relative phase of
/// the 49c and 51c return amplitudes is π: the two-level picture of δ*.
pub fn two_level_delta_star_offset(rabi: f64, tau: f64, line_gap: f64) -> f64 {
    let g = |x: f64| {
        let r = two_level_return(rabi, x, tau) / two_level_return(rabi, x + line_gap, tau);
        (Complex64::from_polar(1.0, r.arg() - PI)).arg()
    };
    let xs: Vec<f64> = (0..=280).map(|k| -60.0 + 0.25 * k as f64).collect();
    let k = (0..xs.len() - 1)
        .filter(|&k| g(xs[k]) * g(xs[k + 1]) <= 0.0 && (g(xs[k]) - g(xs[k + 1])).abs() < 2.0)
        .min_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs()))
        .expect("no crossing");
    let (mut lo, mut hi) = (xs[k], xs[k + 1]);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Loose relative comparison helper.
pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
