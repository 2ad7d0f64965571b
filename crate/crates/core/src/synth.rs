//! Seeded synthetic datasets with a known latent structure.
//!
//! Each manufacturing setting fixes nominal drug content, HPMC content and
//! compression force (normalized latents `d`, `h`, `f` on a 5-level grid).
//! Every tablet perturbs them slightly, draws its own hardness `k` in [0, 1)
//! and releases drug along a Weibull curve
//!
//! ```text
//! released(t) = 100 · (1 − exp(−(t/τ)^β))
//! τ = τ_min + (τ_max − τ_min) · (0.65 h + 0.35 f)
//! β = β_min + (β_max − β_min) · (d + k) / 2
//! ```
//!
//! so release slows with both HPMC and force.
//!
//! Informative spectra mix per-analyte templates weighted by `d`, `h` and `f`;
//! an informative compression curve scales its main pulse with `f`, its
//! relaxation tail with `h` and its pre-compression shoulder with `k`. Both
//! kinds therefore see τ, but only spectra see `d` and only the force curve
//! sees `k`. Each channel observes the latents with a per-tablet
//! heterogeneity error plus a per-spectrum sampling error.
//!
//! Uninformative channels carry latent-independent presentation variation
//! drawn per spectrum. Sampling error and presentation spread scale with the
//! channel's noise level relative to its default, so `noise_sd = 0` yields
//! identical replicate rows. Measurement noise is Gaussian with a standard
//! deviation proportional to the noise-free mean signal at each grid point.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kv::{parse_value, Entry, Section};
use crate::model::{
    time_grid, Dataset, MeasurementKind, SampleMeta, SpectralBlock, N_TIME_POINTS,
};
use crate::seed;

const LEVELS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub features: usize,
    /// Relative noise level.
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_settings: usize,
    pub tablets_per_setting: usize,
    pub replicates: usize,
    pub channels: BTreeMap<MeasurementKind, ChannelSpec>,
    pub informative: BTreeSet<MeasurementKind>,
    /// Tablet-to-tablet scatter of the latents around the setting's nominal values.
    pub tablet_jitter: f64,
    /// Per-tablet error with which a channel observes the latents.
    pub heterogeneity: f64,
    /// Per-spectrum observation error at the default noise level.
    pub sampling_sd: f64,
    pub tau_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub seed: u64,
}

fn default_noise(kind: MeasurementKind) -> f64 {
    match kind {
        MeasurementKind::CompressionForce => 0.01,
        _ => 0.004,
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig::full()
    }
}

impl GeneratorConfig {
    fn with_features(n_settings: usize, features: impl Fn(MeasurementKind) -> usize) -> Self {
        GeneratorConfig {
            n_settings,
            tablets_per_setting: 4,
            replicates: 2,
            channels: MeasurementKind::ALL
                .iter()
                .map(|&k| {
                    (
                        k,
                        ChannelSpec {
                            features: features(k),
                            noise_sd: default_noise(k),
                        },
                    )
                })
                .collect(),
            informative: [
                MeasurementKind::NirTransmission,
                MeasurementKind::CompressionForce,
            ]
            .into_iter()
            .collect(),
            tablet_jitter: 0.03,
            heterogeneity: 0.05,
            sampling_sd: 0.08,
            tau_range: (60.0, 1500.0),
            beta_range: (0.6, 1.4),
            seed: 0,
        }
    }

    /// 37 settings × 4 tablets × 2 spectra at full instrument resolution.
    pub fn full() -> Self {
        Self::with_features(37, MeasurementKind::default_features)
    }

    /// Full 296-sample design on 64-point grids.
    pub fn small() -> Self {
        Self::with_features(37, |_| 64)
    }

    /// 5 settings on 16-point grids, for fast checks.
    pub fn test() -> Self {
        Self::with_features(5, |_| 16)
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "full" | "paper" => Ok(Self::full()),
            "small" => Ok(Self::small()),
            "test" => Ok(Self::test()),
            other => Err(Error::BadConfig(format!(
                "unknown preset '{other}' (expected full, small or test)"
            ))),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n_settings * self.tablets_per_setting * self.replicates
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.n_settings == 0 || self.tablets_per_setting == 0 || self.replicates == 0 {
            return bad("settings, tablets and replicates must all be ≥ 1".into());
        }
        if self.n_settings > 37 {
            return bad(format!("n_settings {} exceeds 37", self.n_settings));
        }
        if self.replicates > 2 {
            return bad(format!("replicates {} exceeds 2", self.replicates));
        }
        if self.channels.is_empty() {
            return bad("no channels configured".into());
        }
        for (k, c) in &self.channels {
            if c.features == 0 {
                return bad(format!("{k}: features must be ≥ 1"));
            }
            if !(c.noise_sd >= 0.0 && c.noise_sd.is_finite()) {
                return bad(format!("{k}: noise_sd must be ≥ 0"));
            }
        }
        if let Some(k) = self.informative.iter().find(|k| !self.channels.contains_key(k)) {
            return bad(format!("informative channel {k} is not generated"));
        }
        for (name, v) in [
            ("tablet_jitter", self.tablet_jitter),
            ("heterogeneity", self.heterogeneity),
            ("sampling_sd", self.sampling_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be ≥ 0"));
            }
        }
        let (t0, t1) = self.tau_range;
        if !(t0 > 0.0 && t1 >= t0) {
            return bad("tau range must satisfy 0 < min ≤ max".into());
        }
        let (b0, b1) = self.beta_range;
        if !(b0 > 0.0 && b1 >= b0) {
            return bad("beta range must satisfy 0 < min ≤ max".into());
        }
        Ok(())
    }

    /// Applies one `[generator]` entry. Returns `false` for unknown keys.
    pub fn apply(&mut self, section: &str, e: &Entry) -> Result<bool> {
        let key = e.key.as_str();
        match key {
            "seed" => self.seed = parse_value(section, e)?,
            "n_settings" => self.n_settings = parse_value(section, e)?,
            "tablets_per_setting" => self.tablets_per_setting = parse_value(section, e)?,
            "replicates" => self.replicates = parse_value(section, e)?,
            "tablet_jitter" => self.tablet_jitter = parse_value(section, e)?,
            "heterogeneity" => self.heterogeneity = parse_value(section, e)?,
            "sampling_sd" => self.sampling_sd = parse_value(section, e)?,
            "tau_min" => self.tau_range.0 = parse_value(section, e)?,
            "tau_max" => self.tau_range.1 = parse_value(section, e)?,
            "beta_min" => self.beta_range.0 = parse_value(section, e)?,
            "beta_max" => self.beta_range.1 = parse_value(section, e)?,
            "channels" => {
                let kinds = parse_kinds(&e.value)?;
                let old = std::mem::take(&mut self.channels);
                for k in kinds {
                    let spec = old.get(&k).copied().unwrap_or(ChannelSpec {
                        features: 64,
                        noise_sd: default_noise(k),
                    });
                    self.channels.insert(k, spec);
                }
            }
            "informative" => {
                self.informative = if e.value.trim().is_empty() {
                    BTreeSet::new()
                } else {
                    parse_kinds(&e.value)?.into_iter().collect()
                };
            }
            "features" => {
                let n: usize = parse_value(section, e)?;
                self.channels.values_mut().for_each(|c| c.features = n);
            }
            _ => {
                if let Some((field, kind)) = key.split_once('.') {
                    let kind: MeasurementKind = kind.parse()?;
                    let spec = self.channels.get_mut(&kind).ok_or_else(|| {
                        Error::Config(format!("line {}: channel {kind} is not generated", e.line))
                    })?;
                    match field {
                        "features" => spec.features = parse_value(section, e)?,
                        "noise_sd" => spec.noise_sd = parse_value(section, e)?,
                        _ => return Ok(false),
                    }
                } else {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Fully resolved `[generator]` section.
    pub fn to_section(&self) -> Section {
        let mut s = Section::new(Some("generator"));
        s.push("seed", self.seed);
        s.push("n_settings", self.n_settings);
        s.push("tablets_per_setting", self.tablets_per_setting);
        s.push("replicates", self.replicates);
        s.push(
            "channels",
            self.channels.keys().map(|k| k.name()).collect::<Vec<_>>().join(","),
        );
        s.push(
            "informative",
            self.informative.iter().map(|k| k.name()).collect::<Vec<_>>().join(","),
        );
        s.push("tablet_jitter", format!("{:?}", self.tablet_jitter));
        s.push("heterogeneity", format!("{:?}", self.heterogeneity));
        s.push("sampling_sd", format!("{:?}", self.sampling_sd));
        s.push("tau_min", format!("{:?}", self.tau_range.0));
        s.push("tau_max", format!("{:?}", self.tau_range.1));
        s.push("beta_min", format!("{:?}", self.beta_range.0));
        s.push("beta_max", format!("{:?}", self.beta_range.1));
        for (k, c) in &self.channels {
            s.push(format!("features.{k}"), c.features);
            s.push(format!("noise_sd.{k}"), format!("{:?}", c.noise_sd));
        }
        s
    }

    pub fn from_section(section: &Section) -> Result<Self> {
        let mut cfg = GeneratorConfig::full();
        if let Some(preset) = section.get("preset") {
            cfg = GeneratorConfig::preset(preset)?;
        }
        for e in &section.entries {
            if e.key == "preset" {
                continue;
            }
            if !cfg.apply("generator", e)? {
                return Err(Error::Config(format!(
                    "line {}: unknown key '{}' in [generator]",
                    e.line, e.key
                )));
            }
        }
        Ok(cfg)
    }
}

pub fn parse_kinds(list: &str) -> Result<Vec<MeasurementKind>> {
    let mut kinds = list
        .split([',', '+'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<MeasurementKind>>>()?;
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

/// Per-sample quantities the generator used but which are not part of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub tau: Vec<f64>,
    pub beta: Vec<f64>,
    /// Actual (d, h, f, k) of each sample's tablet.
    pub latents: Vec<[f64; 4]>,
}

pub fn weibull_release(t: f64, tau: f64, beta: f64) -> f64 {
    100.0 * (1.0 - (-(t / tau).powf(beta)).exp())
}

#[derive(Clone, Copy)]
enum Analyte {
    Api,
    Hpmc,
    Density,
    Filler,
    Nuisance(u64),
}

impl Analyte {
    fn stream(self) -> u64 {
        match self {
            Analyte::Api => 1,
            Analyte::Hpmc => 2,
            Analyte::Density => 3,
            Analyte::Filler => 4,
            Analyte::Nuisance(i) => 16 + i,
        }
    }
}

/// Broad positive background plus a few Gaussian peaks on `[0, 1]`.
fn template(seed_base: u64, kind: MeasurementKind, analyte: Analyte, n: usize) -> Vec<f64> {
    let mut rng = seed::rng(seed_base, 0x5445_4d50 ^ ((kind.index() as u64) << 8) ^ analyte.stream());
    let bg_center: f64 = rng.random_range(0.2..0.8);
    let bg_level: f64 = rng.random_range(0.3..0.5);
    let n_peaks = rng.random_range(3..=5);
    let peaks: Vec<(f64, f64, f64)> = (0..n_peaks)
        .map(|_| {
            (
                rng.random_range(0.05..0.95),
                rng.random_range(0.02..0.08),
                rng.random_range(0.4..1.0),
            )
        })
        .collect();
    (0..n)
        .map(|i| {
            let u = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            let mut v = bg_level * (1.0 - 0.5 * (u - bg_center).powi(2));
            for &(c, w, a) in &peaks {
                v += a * (-0.5 * ((u - c) / w).powi(2)).exp();
            }
            v
        })
        .collect()
}

fn axis(kind: MeasurementKind, n: usize) -> Vec<f64> {
    match kind.wavenumber_range() {
        Some((lo, hi)) => (0..n)
            .map(|i| {
                if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
        None => (0..n).map(|i| i as f64).collect(),
    }
}

/// Compression force curve: pre-compression shoulder, main pulse (kN) and a
/// slower relaxation tail.
fn force_curve(n: usize, shoulder: f64, peak: f64, tail: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            let pre = (-0.5 * ((u - 0.2) / 0.08).powi(2)).exp();
            let main = (std::f64::consts::PI * u).sin().powi(2);
            let relax = (-0.5 * ((u - 0.7) / 0.2).powi(2)).exp();
            shoulder * pre + peak * main + tail * relax
        })
        .collect()
}

/// Noise-free signal of one channel for one tablet.
struct ChannelModel {
    kind: MeasurementKind,
    n: usize,
    informative: bool,
    templates: Vec<Vec<f64>>,
}

/// Variance scales of the independent components of uninformative spectra.
fn nuisance_scales(kind: MeasurementKind) -> &'static [f64] {
    match kind {
        MeasurementKind::RamanTransmission => &[1.0],
        MeasurementKind::RamanReflection => &[1.0, 0.12],
        MeasurementKind::NirReflection => &[1.0, 0.35, 0.25],
        _ => &[1.0, 0.3],
    }
}

impl ChannelModel {
    fn new(seed_base: u64, kind: MeasurementKind, n: usize, informative: bool) -> Self {
        let templates = if kind == MeasurementKind::CompressionForce {
            Vec::new()
        } else if informative {
            [Analyte::Api, Analyte::Hpmc, Analyte::Density, Analyte::Filler]
                .iter()
                .map(|&a| template(seed_base, kind, a, n))
                .collect()
        } else {
            (0..nuisance_scales(kind).len())
                .map(|i| template(seed_base, kind, Analyte::Nuisance(i as u64), n))
                .collect()
        };
        ChannelModel {
            kind,
            n,
            informative,
            templates,
        }
    }

    /// `observed` are the channel's view of (d, h, f, k); `nuisance` are
    /// latent-independent values centered on 0.5.
    fn signal(&self, observed: [f64; 4], nuisance: &[f64]) -> Vec<f64> {
        let [d, h, f, k] = observed;
        if self.kind == MeasurementKind::CompressionForce {
            let [k, f, h] = if self.informative {
                [k, f, h]
            } else {
                [nuisance[0], nuisance[1], nuisance[2]]
            };
            return force_curve(self.n, 1.0 + 3.0 * k, 5.0 + 15.0 * f, 1.0 + 4.0 * h);
        }
        let weights: Vec<f64> = if self.informative {
            vec![0.5 + d, 0.5 + h, 0.5 + f, 1.0]
        } else {
            nuisance_scales(self.kind)
                .iter()
                .zip(nuisance)
                .map(|(s, u)| 1.0 + s * (u - 0.5))
                .collect()
        };
        let mut out = vec![0.05; self.n];
        for (w, t) in weights.iter().zip(&self.templates) {
            out.iter_mut().zip(t).for_each(|(o, v)| *o += w * v);
        }
        out
    }

    /// Mean signal used to scale the noise: the signal at mid-range latents.
    fn reference(&self) -> Vec<f64> {
        self.signal([0.5; 4], &[0.5; 4])
    }
}

/// Latin-square style assignment of grid levels to settings.
fn setting_levels(cfg: &GeneratorConfig) -> Vec<[f64; 3]> {
    let mut rng = seed::rng(cfg.seed, 0x5345_5454);
    let mut cols: [Vec<f64>; 3] = Default::default();
    for col in cols.iter_mut() {
        while col.len() < cfg.n_settings {
            let mut block = LEVELS.to_vec();
            block.shuffle(&mut rng);
            col.extend(block);
        }
    }
    (0..cfg.n_settings)
        .map(|s| [cols[0][s], cols[1][s], cols[2][s]])
        .collect()
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Dataset> {
    generate_with_truth(cfg).map(|(ds, _)| ds)
}

pub fn generate_with_truth(cfg: &GeneratorConfig) -> Result<(Dataset, GroundTruth)> {
    cfg.validate()?;
    let n = cfg.n_samples();
    let levels = setting_levels(cfg);
    let models: Vec<ChannelModel> = cfg
        .channels
        .iter()
        .map(|(&k, spec)| ChannelModel::new(cfg.seed, k, spec.features, cfg.informative.contains(&k)))
        .collect();
    let references: Vec<Vec<f64>> = models.iter().map(ChannelModel::reference).collect();
    let mut values: Vec<DMatrix<f64>> = models.iter().map(|m| DMatrix::zeros(n, m.n)).collect();

    let grid = time_grid();
    let mut profiles = DMatrix::zeros(n, N_TIME_POINTS);
    let mut meta = Vec::with_capacity(n);
    let mut truth = GroundTruth {
        tau: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        latents: Vec::with_capacity(n),
    };
    let jitter = Normal::new(0.0, cfg.tablet_jitter.max(0.0)).expect("sd ≥ 0");
    let hetero = Normal::new(0.0, cfg.heterogeneity.max(0.0)).expect("sd ≥ 0");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let (t0, t1) = cfg.tau_range;
    let (b0, b1) = cfg.beta_range;

    let mut row = 0;
    for (s, nominal) in levels.iter().enumerate() {
        for tab in 0..cfg.tablets_per_setting {
            let tablet_index = s * cfg.tablets_per_setting + tab;
            let mut trng = seed::rng(cfg.seed, 0x1_0000_0000 + tablet_index as u64);
            let [d, h, f] = nominal.map(|v| v + jitter.sample(&mut trng));
            let k: f64 = trng.random();
            let actual = [d, h, f, k];
            let tau = t0 + (t1 - t0) * (0.65 * h + 0.35 * f).clamp(0.0, 1.0);
            let beta = b0 + (b1 - b0) * (0.5 * (d + k)).clamp(0.0, 1.0);
            // per-channel view of this tablet, shared by its replicate spectra
            let views: Vec<[f64; 4]> = models
                .iter()
                .map(|_| actual.map(|v| v + hetero.sample(&mut trng)))
                .collect();

            for rep in 0..cfg.replicates {
                for (c, t) in grid.as_slice().iter().enumerate() {
                    profiles[(row, c)] = weibull_release(*t, tau, beta);
                }
                for (ci, m) in models.iter().enumerate() {
                    let spec = cfg.channels[&m.kind];
                    let mut nrng = seed::rng(
                        cfg.seed,
                        0x2_0000_0000 + ((row as u64) << 4) + m.kind.index() as u64,
                    );
                    let spread = spec.noise_sd / default_noise(m.kind);
                    let nuisance: [f64; 4] =
                        std::array::from_fn(|_| 0.5 + spread * (nrng.random::<f64>() - 0.5));
                    let observed = views[ci]
                        .map(|v| v + spread * cfg.sampling_sd * unit.sample(&mut nrng));
                    let signal = m.signal(observed, &nuisance);
                    for j in 0..m.n {
                        let noise = if spec.noise_sd > 0.0 {
                            spec.noise_sd * references[ci][j] * unit.sample(&mut nrng)
                        } else {
                            0.0
                        };
                        values[ci][(row, j)] = (signal[j] + noise).max(0.0);
                    }
                }
                meta.push(SampleMeta {
                    sample_id: row as u64 + 1,
                    setting_id: s as u32 + 1,
                    tablet_id: tablet_index as u32 + 1,
                    replicate_id: rep as u32 + 1,
                    dr_content: 20.0 + 10.0 * nominal[0],
                    hpmc_content: 10.0 + 20.0 * nominal[1],
                    nominal_force: 5.0 + 15.0 * nominal[2],
                });
                truth.tau.push(tau);
                truth.beta.push(beta);
                truth.latents.push(actual);
                row += 1;
            }
        }
    }

    let blocks = models
        .iter()
        .zip(values)
        .map(|(m, v)| Ok((m.kind, SpectralBlock::new(m.kind, axis(m.kind, m.n), v)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let ds = Dataset {
        name: format!("synthetic-seed{}", cfg.seed),
        blocks,
        profiles,
        anchors: vec![0.0; n],
        meta,
    };
    Ok((ds, truth))
}
