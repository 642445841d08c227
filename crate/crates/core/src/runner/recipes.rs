use crate::analysis::{
    applied_offsets_khz, fit_b_extract_theta, fit_fringes, fit_raman_resonance, light_shift_extrapolate,
    mw_three_step_pipeline, wrap_phase, Estimate, FitResult,
};
use crate::atomic::{CoreLevel, CoreTerm};
use crate::dynamics::PulseSpec;
use crate::error::{Error, Result};
use crate::sequences::delta_star::{find_delta_star, DeltaStarOptions, DeltaStarResult};
use crate::sequences::presets::{
    filter_delay, mw_spectroscopy, purification_filter, raman_rabi_flop, raman_spectroscopy, ramsey_switch,
    FilterInput, MwSpectroscopyOptions, MwVariant, PurificationOptions, RamanSpectroscopyOptions, RamseyOptions,
};
use crate::sequences::{run_sequence, Axis, Physics, SequenceSpec, SpectrumDataset};
use crate::units::KHZ_US;

use super::config::ModelConfig;
use super::output::Artifacts;

pub const RECIPES: &[&str] = &["fig2", "fig3", "fig3-inset", "fig4", "figS1", "figS2", "figS3", "figS4"];

/// Shots per point of `reproduce` without `--noiseless`.
pub const DEFAULT_SHOTS: u32 = 1000;

const POWERS_INSET: [f64; 3] = [0.5, 1.0, 2.0];
const POWERS_S2: [f64; 5] = [0.25, 0.5, 1.0, 1.5, 2.0];
const RAMAN_PI_US: f64 = 17.0;
const S4_OFFSETS_KHZ: [f64; 4] = [20.0, 10.0, 0.0, -10.0];

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeSettings {
    pub model: ModelConfig,
    pub seed: u64,
    /// 0 gives noiseless expectation values.
    pub shots: u32,
}

impl RecipeSettings {
    /// The model and shot count used by `reproduce`.
    pub fn reproduction(seed: u64, noiseless: bool) -> Self {
        Self { model: ModelConfig::reproduction(), seed, shots: if noiseless { 0 } else { DEFAULT_SHOTS } }
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Pipeline { step: name.into(), reason: e.to_string() })
}

struct Ctx<'a> {
    physics: Physics,
    settings: &'a RecipeSettings,
    out: Artifacts,
}

impl Ctx<'_> {
    /// Run `spec` under `name` with the recipe's shots, seed and pumping leak.
    fn simulate(&mut self, name: &str, mut spec: SequenceSpec) -> Result<SpectrumDataset> {
        spec.id = name.into();
        spec.shots_per_point = self.settings.shots;
        for step in &mut spec.steps {
            if let PulseSpec::OpticalPump422(p) = &mut step.pulse {
                p.leak = self.settings.model.pumping_leak;
            }
        }
        let ds = stage(name, run_sequence(&spec, &self.physics, self.settings.seed))?;
        self.out.datasets.push((name.into(), ds.clone()));
        Ok(ds)
    }

    fn fit(&mut self, name: &str, r: FitResult) -> FitResult {
        self.out.fits.push((name.into(), r.clone()));
        r
    }

    fn raman_center(&mut self, n: u32, power: f64, scattering_on: bool, suffix: &str) -> Result<Estimate> {
        let duration = RAMAN_PI_US / power;
        let opts = RamanSpectroscopyOptions { scattering_on, ..Default::default() };
        let name = format!("raman_n{n}{suffix}");
        let spec = stage(&name, raman_spectroscopy(&self.physics, n, duration, power, &opts))?;
        let ds = self.simulate(&name, spec)?;
        let r = stage(&format!("{name} fit"), fit_raman_resonance(&ds, duration))?;
        let r = self.fit(&name, r);
        Ok(Estimate::new(r.value("center"), r.sigma("center")))
    }

    fn delta_star(&mut self) -> Result<DeltaStarResult> {
        let r = stage("delta_star search", find_delta_star(&self.physics, 1.0, &DeltaStarOptions::default()))?;
        self.out.row("delta_star", r.delta_star, None, "kHz");
        self.out.row("resonance_n49", r.resonance, None, "kHz");
        self.out.row("delta_star_offset", r.offset, None, "kHz");
        self.out.row("raman_2pi_duration", r.pulse_duration, None, "µs");
        Ok(r)
    }

    /// Simulate Ramsey fringes and fit them against applied-frequency kHz.
    fn fringes(&mut self, name: &str, raman: Option<f64>, opts: &RamseyOptions) -> Result<FitResult> {
        let spec = stage(name, ramsey_switch(&self.physics, raman.is_some(), raman.unwrap_or(0.0), opts))?;
        let nu32 = self.physics.structure.mw_line_ghz(51, 49, CoreLevel { term: CoreTerm::D32, two_mj: 3 })?;
        let ds = self.simulate(name, spec)?;
        let x = applied_offsets_khz(&ds, nu32);
        let r = stage(&format!("{name} fit"), fit_fringes(&x, &ds.values, &ds.errors, opts.separation * KHZ_US))?;
        Ok(self.fit(name, r))
    }
}

fn fig2(ctx: &mut Ctx) -> Result<()> {
    let opts = MwSpectroscopyOptions { jitter_khz: ctx.settings.model.mw_jitter_khz, ..Default::default() };
    let mut spectra = Vec::new();
    for (name, v) in [("black", MwVariant::NoPump), ("red", MwVariant::Pump), ("blue", MwVariant::PumpPlusRepump)] {
        let spec = stage(name, mw_spectroscopy(&ctx.physics, v, &opts))?;
        spectra.push(ctx.simulate(&format!("mw_{name}"), spec)?);
    }
    let r = stage("three-step analysis", mw_three_step_pipeline(&spectra[0], &spectra[1], &spectra[2]))?;
    for (step, f) in &r.fits {
        ctx.fit(&format!("mw_{step}"), f.clone());
    }
    let o = &mut ctx.out;
    o.estimate("nu0", r.nu0_ghz, "GHz");
    o.estimate("w0", r.w0_khz, "kHz");
    o.estimate("nu32", r.nu32_ghz, "GHz");
    o.estimate("nu12", r.nu12_ghz, "GHz");
    o.estimate("splitting", r.splitting_khz, "kHz");
    o.estimate("a0", r.a0, "kHz");
    o.estimate("a32", r.a32, "kHz");
    o.estimate("a12", r.a12, "kHz");
    o.estimate("a32_prime", r.a32_prime, "kHz");
    o.estimate("a0_prime", r.a0_prime, "kHz");
    o.estimate("a32_over_a0", r.a32_over_a0, "");
    o.estimate("a12_over_a0", r.a12_over_a0, "");
    o.estimate("a32_prime_over_a0", r.a32_prime_over_a0, "");
    o.estimate("a0_prime_over_a0", r.a0_prime_over_a0, "");
    let model = ctx.physics.structure.delta(49)? - ctx.physics.structure.delta(51)?;
    o.row("model_splitting", model, None, "kHz");
    Ok(())
}

fn fig3(ctx: &mut Ctx) -> Result<()> {
    let c51 = ctx.raman_center(51, 1.0, true, "")?;
    let c49 = ctx.raman_center(49, 1.0, true, "")?;
    for (n, c) in [(51, c51), (49, c49)] {
        ctx.out.estimate(format!("center_n{n}"), c, "kHz");
        let amp = ctx.out.fit(&format!("raman_n{n}")).map_or(f64::NAN, |f| f.value("amp"));
        ctx.out.row(format!("amp_n{n}"), amp, None, "");
    }
    ctx.out.estimate("line_separation", Estimate::new(c49.value - c51.value, c49.sigma.hypot(c51.sigma)), "kHz");
    Ok(())
}

/// Zero-power δₙ for each n from spectra at `powers`, scattering off.
fn extrapolated_deltas(ctx: &mut Ctx, ns: &[u32], powers: &[f64]) -> Result<Vec<(u32, Estimate)>> {
    let mut deltas = Vec::new();
    for &n in ns {
        let mut pts = Vec::new();
        for &p in powers {
            let c = ctx.raman_center(n, p, false, &format!("_p{p}"))?;
            pts.push((p, c.value, c.sigma));
        }
        let e = stage(&format!("n{n} extrapolation"), light_shift_extrapolate(&pts))?;
        let mut axis_ds = SpectrumDataset::new(
            Axis { name: "power".into(), unit: "".into(), values: pts.iter().map(|p| p.0).collect() },
            "center_khz",
            pts.iter().map(|p| p.1).collect(),
        )?;
        axis_ds.errors = pts.iter().map(|p| p.2).collect();
        axis_ds.metadata.insert("intercept_khz".into(), e.intercept.value.into());
        axis_ds.metadata.insert("slope_khz".into(), e.slope.value.into());
        ctx.out.datasets.push((format!("resonance_vs_power_n{n}"), axis_ds));
        ctx.out.estimate(format!("light_shift_slope_n{n}"), e.slope, "kHz");
        deltas.push((n, e.intercept));
    }
    Ok(deltas)
}

fn fig3_inset(ctx: &mut Ctx) -> Result<()> {
    let deltas = extrapolated_deltas(ctx, &[49, 51, 53], &POWERS_INSET)?;
    for (n, d) in &deltas {
        ctx.out.estimate(format!("delta_n{n}"), *d, "kHz");
    }
    let m = &ctx.settings.model;
    let c = Estimate::new(m.dipole_c_khz, m.dipole_c_sigma_khz);
    let pts: Vec<(u32, f64, f64)> = deltas.iter().map(|(n, d)| (*n, d.value, d.sigma)).collect();
    let r = stage("B fit", fit_b_extract_theta(&pts, c, &m.shift_model(), None))?;
    ctx.out.estimate("b", r.b, "kHz");
    ctx.out.row("sigma_b_stat", r.sigma_b_stat, None, "kHz");
    ctx.out.row("sigma_b_from_c", r.sigma_b_from_c, None, "kHz");
    ctx.out.estimate("theta", r.theta, "a.u.");
    Ok(())
}

fn fig_s2(ctx: &mut Ctx) -> Result<()> {
    for (n, d) in extrapolated_deltas(ctx, &[51, 49], &POWERS_S2)? {
        ctx.out.estimate(format!("delta_n{n}"), d, "kHz");
        let model = ctx.physics.structure.delta(n)?;
        ctx.out.row(format!("model_delta_n{n}"), model, None, "kHz");
    }
    Ok(())
}

fn fig4(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.delta_star()?;
    let opts = RamseyOptions { separation: ds.separation, ..Default::default() };
    let bare = ctx.fringes("ramsey_bare", None, &opts)?;
    let raman = ctx.fringes("ramsey_raman", Some(ds.delta_star), &opts)?;
    let coherent = ctx.fringes("ramsey_raman_no_scattering", Some(ds.delta_star), &RamseyOptions { scattering_on: false, ..opts })?;
    let o = &mut ctx.out;
    o.row("phase_shift", wrap_phase(raman.value("phase") - bare.value("phase")), Some(raman.sigma("phase").hypot(bare.sigma("phase"))), "rad");
    o.row("phase_shift_no_scattering", wrap_phase(coherent.value("phase") - bare.value("phase")), None, "rad");
    o.estimate("amp_bare", Estimate::new(bare.value("amp"), bare.sigma("amp")), "");
    o.estimate("amp_raman", Estimate::new(raman.value("amp"), raman.sigma("amp")), "");
    o.estimate("amp_raman_no_scattering", Estimate::new(coherent.value("amp"), coherent.sigma("amp")), "");
    Ok(())
}

fn fig_s1(ctx: &mut Ctx) -> Result<()> {
    let delay = filter_delay(&ctx.physics.structure)?;
    ctx.out.row("filter_delay", delay, None, "µs");
    let opts = PurificationOptions::default();
    let mut centre = Vec::new();
    for (name, input) in [("filter_ground", FilterInput::Ground), ("filter_d_mixture", FilterInput::DMixture)] {
        let spec = stage(name, purification_filter(&ctx.physics, input, &opts))?;
        let ds = ctx.simulate(name, spec)?;
        centre.push(ds.values[ds.len() / 2]);
    }
    // Channel 53 holds the circular 51c population scaled by the signal fraction.
    let signal = 1.0 - ctx.physics.detection.background;
    ctx.out.row("transfer_5s", 1.0 - centre[0] / signal, None, "");
    ctx.out.row("retention_4d", centre[1] / signal, None, "");
    Ok(())
}

fn fig_s3(ctx: &mut Ctx) -> Result<()> {
    let points = 81;
    for scattering_on in [true, false] {
        let opts = RamseyOptions { scattering_on, ..Default::default() };
        let suffix = if scattering_on { "" } else { "_no_scattering" };
        for n in [51, 49] {
            let name = format!("rabi_flop_n{n}{suffix}");
            let spec = stage(&name, raman_rabi_flop(&ctx.physics, n, &opts, 2.0, points))?;
            let ds = ctx.simulate(&name, spec)?;
            // Scan covers two 49c periods: index 20 is π, index 40 is 2π.
            ctx.out.row(format!("p32_n{n}_at_pi{suffix}"), ds.values[20], Some(ds.errors[20]), "");
            ctx.out.row(format!("p32_n{n}_at_2pi{suffix}"), ds.values[40], Some(ds.errors[40]), "");
        }
    }
    Ok(())
}

fn fig_s4(ctx: &mut Ctx) -> Result<()> {
    let ds = ctx.delta_star()?;
    let opts = RamseyOptions { separation: ds.separation, ..Default::default() };
    let bare = ctx.fringes("ramsey_bare", None, &opts)?;
    ctx.out.row("amp_bare", bare.value("amp"), Some(bare.sigma("amp")), "");
    for off in S4_OFFSETS_KHZ {
        let tag = if off < 0.0 { format!("minus{}", -off) } else { format!("plus{off}") };
        let r = ctx.fringes(&format!("ramsey_raman_{tag}"), Some(ds.delta_star + off), &opts)?;
        let shift = wrap_phase(r.value("phase") - bare.value("phase"));
        ctx.out.row(format!("phase_shift_{tag}"), shift, Some(r.sigma("phase").hypot(bare.sigma("phase"))), "rad");
        ctx.out.row(format!("amp_{tag}"), r.value("amp"), Some(r.sigma("amp")), "");
    }
    Ok(())
}

/// Run a shipped recipe.
pub fn run_recipe(name: &str, settings: &RecipeSettings) -> Result<Artifacts> {
    let physics = settings.model.physics()?;
    let mut ctx = Ctx { physics, settings, out: Artifacts::default() };
    let f: fn(&mut Ctx) -> Result<()> = match name {
        "fig2" => fig2,
        "fig3" => fig3,
        "fig3-inset" => fig3_inset,
        "fig4" => fig4,
        "figS1" => fig_s1,
        "figS2" => fig_s2,
        "figS3" => fig_s3,
        "figS4" => fig_s4,
        _ => {
            return Err(Error::Config(format!("unknown recipe `{name}`; known: {}", RECIPES.join(", "))));
        }
    };
    f(&mut ctx)?;
    Ok(ctx.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_recipe_is_a_config_error() {
        let e = run_recipe("fig7", &RecipeSettings::reproduction(0, true)).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }

    #[test]
    fn inset_recovers_the_model_b() {
        let a = run_recipe("fig3-inset", &RecipeSettings::reproduction(0, true)).unwrap();
        assert!((a.value("b") - 757.0).abs() < 0.1, "{}", a.value("b"));
        for n in [49, 51, 53] {
            assert!(a.dataset(&format!("resonance_vs_power_n{n}")).is_some());
        }
    }
}
