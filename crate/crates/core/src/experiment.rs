//! Train/test split, per-channel feature pipelines, combination runs and the
//! ranked channel-combination sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mlp::{self, MlpConfig, MlpModel};
use crate::model::{Dataset, MeasurementKind, N_TIME_POINTS};
use crate::pca::{self, PcaModel, DEFAULT_THRESHOLD};
use crate::preprocess::{scaler_fit, ScalerModel};
use crate::seed;
use crate::similarity::{self, is_equivalent};

pub const DEFAULT_TEST_COUNT: usize = 49;

/// Networks fit released fractions; predictions are scaled back to percent.
pub const TARGET_SCALE: f64 = 100.0;

/// Penalty for combination runs, sized for fraction-scale targets.
pub const DEFAULT_L2_ALPHA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct CombinationSpec {
    /// Sorted in canonical order, no duplicates.
    pub channels: Vec<MeasurementKind>,
    pub pca_threshold: f64,
    /// Leading dissolution points used as inputs instead of targets.
    pub target_offset: usize,
    pub mlp: MlpConfig,
}

impl Default for CombinationSpec {
    fn default() -> Self {
        CombinationSpec {
            channels: vec![MeasurementKind::NirTransmission],
            pca_threshold: DEFAULT_THRESHOLD,
            target_offset: 0,
            mlp: MlpConfig {
                l2_alpha: DEFAULT_L2_ALPHA,
                ..MlpConfig::default()
            },
        }
    }
}

impl CombinationSpec {
    pub fn with_channels(&self, channels: &[MeasurementKind]) -> Self {
        let mut channels = channels.to_vec();
        channels.sort();
        channels.dedup();
        CombinationSpec {
            channels,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::BadSpec("combination has no channels".into()));
        }
        if self.channels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadSpec(
                "channels must be unique and in canonical order".into(),
            ));
        }
        if !(self.pca_threshold > 0.0 && self.pca_threshold <= 1.0) {
            return Err(Error::BadSpec(format!(
                "pca_threshold {} outside (0, 1]",
                self.pca_threshold
            )));
        }
        if self.target_offset >= N_TIME_POINTS {
            return Err(Error::BadSpec(format!(
                "target_offset {} leaves no target points",
                self.target_offset
            )));
        }
        self.mlp.validate()
    }

    pub fn label(&self) -> String {
        channels_label(&self.channels)
    }
}

pub fn channels_label(channels: &[MeasurementKind]) -> String {
    channels.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    #[default]
    SampleLevel,
    /// Both spectra of a tablet land on the same side.
    TabletLevel,
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grouping::SampleLevel => "sample",
            Grouping::TabletLevel => "tablet",
        })
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sample" | "samplelevel" | "sample_level" => Ok(Grouping::SampleLevel),
            "tablet" | "tabletlevel" | "tablet_level" => Ok(Grouping::TabletLevel),
            other => Err(Error::BadSpec(format!(
                "unknown grouping '{other}' (expected sample or tablet)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub test_count: usize,
    pub seed: u64,
    pub grouping: Grouping,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_count: DEFAULT_TEST_COUNT,
            seed: 0,
            grouping: Grouping::SampleLevel,
        }
    }
}

/// Sorted, disjoint row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let n = ds.n_samples();
    if spec.test_count == 0 || spec.test_count >= n {
        return Err(Error::BadSpec(format!(
            "test_count {} must be in 1..{}",
            spec.test_count, n
        )));
    }
    let mut rng = seed::rng(spec.seed, 0x5350_4c54);
    let mut is_test = vec![false; n];
    match spec.grouping {
        Grouping::SampleLevel => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            idx[..spec.test_count].iter().for_each(|&i| is_test[i] = true);
        }
        Grouping::TabletLevel => {
            let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for (i, m) in ds.meta.iter().enumerate() {
                groups.entry(m.tablet_id).or_default().push(i);
            }
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            let mut taken = 0;
            for g in &groups {
                if taken + g.len() <= spec.test_count {
                    g.iter().for_each(|&i| is_test[i] = true);
                    taken += g.len();
                }
                if taken == spec.test_count {
                    break;
                }
            }
            if taken == 0 || taken == n {
                return Err(Error::BadSpec(format!(
                    "tablet grouping cannot place {} samples in the test set",
                    spec.test_count
                )));
            }
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok(Split { train, test })
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    x.select_rows(rows)
}

/// One channel's train-only scaler and PCA, with both partitions projected.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFeatures {
    pub kind: MeasurementKind,
    pub scaler: ScalerModel,
    pub pca: PcaModel,
    pub train: DMatrix<f64>,
    pub test: DMatrix<f64>,
}

pub fn fit_channel(
    ds: &Dataset,
    kind: MeasurementKind,
    split: &Split,
    threshold: f64,
) -> Result<ChannelFeatures> {
    let block = ds.block(kind)?;
    let raw_train = select_rows(&block.values, &split.train);
    let raw_test = select_rows(&block.values, &split.test);
    let scaler = scaler_fit(&raw_train)?;
    let z_train = scaler.transform(&raw_train)?;
    let z_test = scaler.transform(&raw_test)?;
    let mut pca = pca::pca_fit(&z_train)?;
    pca.select_components(threshold)?;
    let train = pca.project(&z_train)?;
    let test = pca.project(&z_test)?;
    Ok(ChannelFeatures {
        kind,
        scaler,
        pca,
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    Score {
        kind: MeasurementKind,
        component: usize,
    },
    /// A leading dissolution point (index into the time grid).
    EarlyPoint(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub x_train: DMatrix<f64>,
    pub x_test: DMatrix<f64>,
    pub feature_map: Vec<FeatureSource>,
    /// Retained components per channel, canonical order.
    pub retained: Vec<(MeasurementKind, usize)>,
}

fn hcat(parts: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let width = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, width);
    let mut at = 0;
    for p in parts {
        out.columns_mut(at, p.ncols()).copy_from(*p);
        at += p.ncols();
    }
    out
}

fn assemble(
    ds: &Dataset,
    split: &Split,
    spec: &CombinationSpec,
    channels: &[&ChannelFeatures],
) -> Result<FeatureSet> {
    let mut train_parts: Vec<DMatrix<f64>> = Vec::new();
    let mut test_parts: Vec<DMatrix<f64>> = Vec::new();
    let mut feature_map = Vec::new();
    let mut retained = Vec::new();
    for cf in channels {
        train_parts.push(cf.train.clone());
        test_parts.push(cf.test.clone());
        retained.push((cf.kind, cf.train.ncols()));
        feature_map.extend((0..cf.train.ncols()).map(|component| FeatureSource::Score {
            kind: cf.kind,
            component,
        }));
    }
    if spec.target_offset > 0 {
        let early = ds.profiles.columns(0, spec.target_offset).into_owned();
        let tr = select_rows(&early, &split.train);
        let te = select_rows(&early, &split.test);
        let scaler = scaler_fit(&tr)?;
        train_parts.push(scaler.transform(&tr)?);
        test_parts.push(scaler.transform(&te)?);
        feature_map.extend((0..spec.target_offset).map(FeatureSource::EarlyPoint));
    }
    let x_train = hcat(&train_parts.iter().collect::<Vec<_>>(), split.train.len());
    let x_test = hcat(&test_parts.iter().collect::<Vec<_>>(), split.test.len());
    Ok(FeatureSet {
        x_train,
        x_test,
        feature_map,
        retained,
    })
}

/// Scores of every channel in `spec`, concatenated in canonical order.
pub fn build_features(ds: &Dataset, split: &Split, spec: &CombinationSpec) -> Result<FeatureSet> {
    spec.validate()?;
    let fitted = spec
        .channels
        .iter()
        .map(|&k| fit_channel(ds, k, split, spec.pca_threshold))
        .collect::<Result<Vec<_>>>()?;
    assemble(ds, split, spec, &fitted.iter().collect::<Vec<_>>())
}

/// Candidate network shapes and penalties, compared by training MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    pub hidden: Vec<Vec<usize>>,
    pub alphas: Vec<f64>,
}

impl Default for ModelGrid {
    fn default() -> Self {
        ModelGrid {
            hidden: vec![vec![64], vec![128, 64]],
            alphas: vec![0.1, 1.0],
        }
    }
}

impl ModelGrid {
    /// A grid holding only `cfg`'s shape and penalty.
    pub fn single(cfg: &MlpConfig) -> Self {
        ModelGrid {
            hidden: vec![cfg.hidden_layers.clone()],
            alphas: vec![cfg.l2_alpha],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.alphas.is_empty() {
            return Err(Error::BadSpec("model grid is empty".into()));
        }
        Ok(())
    }

    fn candidates(&self, base: &MlpConfig) -> Vec<MlpConfig> {
        self.hidden
            .iter()
            .flat_map(|h| {
                self.alphas.iter().map(move |&a| MlpConfig {
                    hidden_layers: h.clone(),
                    l2_alpha: a,
                    ..base.clone()
                })
            })
            .collect()
    }
}

/// One ranked combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub channels: Vec<MeasurementKind>,
    pub retained: Vec<usize>,
    pub mean_f2: f64,
    pub std_f2: f64,
    pub mean_f1: f64,
    pub train_loss: f64,
    pub n_iters: usize,
    pub converged: bool,
    pub hidden: Vec<usize>,
    pub l2_alpha: f64,
    pub equivalent: bool,
}

/// Test-set predictions plus the trained model behind a row.
#[derive(Debug, Clone)]
pub struct CombinationOutcome {
    pub row: ReportRow,
    pub model: MlpModel,
    pub predicted: DMatrix<f64>,
    pub actual: DMatrix<f64>,
    pub f2: Vec<f64>,
    pub f1: Vec<f64>,
}

fn targets(ds: &Dataset, rows: &[usize], offset: usize) -> DMatrix<f64> {
    let cols = ds.profiles.ncols() - offset;
    select_rows(&ds.profiles.columns(offset, cols).into_owned(), rows)
}

fn evaluate(
    ds: &Dataset,
    split: &Split,
    spec: &CombinationSpec,
    features: &FeatureSet,
    grid: &ModelGrid,
) -> Result<CombinationOutcome> {
    let y_train = targets(ds, &split.train, spec.target_offset) / TARGET_SCALE;
    let actual = targets(ds, &split.test, spec.target_offset);
    let mut best: Option<(f64, MlpModel)> = None;
    for cfg in grid.candidates(&spec.mlp) {
        let model = mlp::train(&cfg, &features.x_train, &y_train)?;
        let fit = mlp::mse(&model.predict(&features.x_train)?, &y_train);
        if best.as_ref().is_none_or(|(b, _)| fit < *b) {
            best = Some((fit, model));
        }
    }
    let (_, model) = best.ok_or_else(|| Error::BadSpec("model grid is empty".into()))?;
    let predicted = model.predict(&features.x_test)? * TARGET_SCALE;
    let mut f2 = Vec::with_capacity(actual.nrows());
    let mut f1 = Vec::with_capacity(actual.nrows());
    for i in 0..actual.nrows() {
        let r: Vec<f64> = actual.row(i).iter().copied().collect();
        let t: Vec<f64> = predicted.row(i).iter().copied().collect();
        f2.push(similarity::f2(&r, &t)?);
        f1.push(similarity::f1(&r, &t)?);
    }
    let (mean_f2, std_f2) = similarity::mean_std(&f2);
    let mean_f1 = f1.iter().sum::<f64>() / f1.len() as f64;
    let row = ReportRow {
        channels: spec.channels.clone(),
        retained: features.retained.iter().map(|(_, r)| *r).collect(),
        mean_f2,
        std_f2,
        mean_f1,
        train_loss: model.train_loss,
        n_iters: model.n_iters,
        converged: model.converged,
        hidden: model.config.hidden_layers.clone(),
        l2_alpha: model.config.l2_alpha,
        equivalent: is_equivalent(mean_f1, mean_f2),
    };
    Ok(CombinationOutcome {
        row,
        model,
        predicted,
        actual,
        f2,
        f1,
    })
}

/// Trains `spec.mlp` on one split and scores the test profiles.
pub fn run_combination(
    ds: &Dataset,
    split_spec: &SplitSpec,
    spec: &CombinationSpec,
) -> Result<CombinationOutcome> {
    run_selected(ds, split_spec, spec, &ModelGrid::single(&spec.mlp))
}

/// [`run_combination`] with model selection over `grid`.
pub fn run_selected(
    ds: &Dataset,
    split_spec: &SplitSpec,
    spec: &CombinationSpec,
    grid: &ModelGrid,
) -> Result<CombinationOutcome> {
    spec.validate()?;
    grid.validate()?;
    let s = split(ds, split_spec)?;
    let features = build_features(ds, &s, spec)?;
    evaluate(ds, &s, spec, &features, grid)
}

/// All subsets of `kinds` with sizes `1..=max_size`, by size then lexicographically.
pub fn combinations(kinds: &[MeasurementKind], max_size: usize) -> Vec<Vec<MeasurementKind>> {
    fn rec(
        kinds: &[MeasurementKind],
        start: usize,
        size: usize,
        cur: &mut Vec<MeasurementKind>,
        out: &mut Vec<Vec<MeasurementKind>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..kinds.len() {
            cur.push(kinds[i]);
            rec(kinds, i + 1, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for size in 1..=max_size.min(kinds.len()) {
        rec(kinds, 0, size, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub max_size: usize,
    pub grid: ModelGrid,
    /// Independent splits averaged per combination.
    pub repeats: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_size: 3,
            grid: ModelGrid::default(),
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Descending by `mean_f2`.
    pub rows: Vec<ReportRow>,
    pub seed: u64,
    pub fingerprint: String,
    /// Resolved settings echoed into the report header.
    pub header: Vec<(String, String)>,
}

/// Ranks every channel subset up to `max_size` with the default model grid.
pub fn sweep(
    ds: &Dataset,
    split_spec: &SplitSpec,
    base: &CombinationSpec,
    max_size: usize,
) -> Result<SweepReport> {
    sweep_with(
        ds,
        split_spec,
        base,
        &SweepOptions {
            max_size,
            ..SweepOptions::default()
        },
    )
}

pub fn sweep_with(
    ds: &Dataset,
    split_spec: &SplitSpec,
    base: &CombinationSpec,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    let kinds = ds.kinds();
    if opts.max_size == 0 || opts.max_size > MeasurementKind::ALL.len() {
        return Err(Error::BadSpec(format!(
            "max_size {} outside 1..=5",
            opts.max_size
        )));
    }
    if opts.max_size > kinds.len() {
        return Err(Error::BadSpec(format!(
            "max_size {} exceeds the {} channels in the dataset",
            opts.max_size,
            kinds.len()
        )));
    }
    if opts.repeats == 0 {
        return Err(Error::BadSpec("repeats must be ≥ 1".into()));
    }
    opts.grid.validate()?;
    base.with_channels(&kinds[..1]).validate()?;

    let combos = combinations(&kinds, opts.max_size);
    let mut per_repeat: Vec<Vec<CombinationOutcome>> = Vec::with_capacity(opts.repeats);
    for r in 0..opts.repeats {
        let split_r = SplitSpec {
            seed: if r == 0 {
                split_spec.seed
            } else {
                seed::mix(split_spec.seed, r as u64)
            },
            ..*split_spec
        };
        let s = split(ds, &split_r)?;
        let channel_features: BTreeMap<MeasurementKind, ChannelFeatures> = kinds
            .par_iter()
            .map(|&k| fit_channel(ds, k, &s, base.pca_threshold).map(|cf| (k, cf)))
            .collect::<Result<_>>()?;
        let outcomes = combos
            .par_iter()
            .enumerate()
            .map(|(job, channels)| {
                let mut spec = base.with_channels(channels);
                spec.mlp.seed = seed::mix(base.mlp.seed ^ split_r.seed, job as u64);
                let parts: Vec<&ChannelFeatures> =
                    channels.iter().map(|k| &channel_features[k]).collect();
                let features = assemble(ds, &s, &spec, &parts)?;
                evaluate(ds, &s, &spec, &features, &opts.grid)
            })
            .collect::<Result<Vec<_>>>()?;
        per_repeat.push(outcomes);
    }

    let mut rows: Vec<(usize, ReportRow)> = (0..combos.len())
        .map(|job| {
            let outs: Vec<&CombinationOutcome> = per_repeat.iter().map(|o| &o[job]).collect();
            (job, pool(&outs))
        })
        .collect();
    rows.sort_by(|(ja, a), (jb, b)| b.mean_f2.total_cmp(&a.mean_f2).then(ja.cmp(jb)));

    let header = vec![
        ("max_size".to_string(), opts.max_size.to_string()),
        ("repeats".into(), opts.repeats.to_string()),
        ("test_count".into(), split_spec.test_count.to_string()),
        ("grouping".into(), split_spec.grouping.to_string()),
        ("pca_threshold".into(), format!("{:?}", base.pca_threshold)),
        ("target_offset".into(), base.target_offset.to_string()),
        (
            "hidden_grid".into(),
            opts.grid
                .hidden
                .iter()
                .map(|h| mlp::hidden_tag(h))
                .collect::<Vec<_>>()
                .join(";"),
        ),
        (
            "alpha_grid".into(),
            opts.grid
                .alphas
                .iter()
                .map(|a| format!("{a:?}"))
                .collect::<Vec<_>>()
                .join(";"),
        ),
        ("max_iter".into(), base.mlp.max_iter.to_string()),
        ("grad_tol".into(), format!("{:?}", base.mlp.grad_tol)),
        ("history_size".into(), base.mlp.history_size.to_string()),
        ("mlp_seed".into(), base.mlp.seed.to_string()),
    ];
    Ok(SweepReport {
        rows: rows.into_iter().map(|(_, r)| r).collect(),
        seed: split_spec.seed,
        fingerprint: ds.fingerprint(),
        header,
    })
}

/// Pools the test pairs of several repeats into one row.
fn pool(outs: &[&CombinationOutcome]) -> ReportRow {
    let first = &outs[0].row;
    if outs.len() == 1 {
        return first.clone();
    }
    let f2: Vec<f64> = outs.iter().flat_map(|o| o.f2.iter().copied()).collect();
    let f1: Vec<f64> = outs.iter().flat_map(|o| o.f1.iter().copied()).collect();
    let (mean_f2, std_f2) = similarity::mean_std(&f2);
    let mean_f1 = f1.iter().sum::<f64>() / f1.len() as f64;
    ReportRow {
        mean_f2,
        std_f2,
        mean_f1,
        train_loss: outs.iter().map(|o| o.row.train_loss).sum::<f64>() / outs.len() as f64,
        n_iters: outs.iter().map(|o| o.row.n_iters).max().unwrap_or(0),
        converged: outs.iter().all(|o| o.row.converged),
        equivalent: is_equivalent(mean_f1, mean_f2),
        ..first.clone()
    }
}

pub const REPORT_COLUMNS: [&str; 13] = [
    "rank",
    "size",
    "channels",
    "retained",
    "mean_f2",
    "std_f2",
    "mean_f1",
    "train_loss",
    "n_iters",
    "converged",
    "hidden",
    "l2_alpha",
    "equivalent",
];

fn join_usize(v: &[usize], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn size_heading(size: usize) -> String {
    match size {
        1 => "Single measurements".into(),
        2 => "Pairs of measurements".into(),
        3 => "Triples of measurements".into(),
        k => format!("Combinations of {k} measurements"),
    }
}

impl SweepReport {
    pub fn best_of_size(&self, size: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.channels.len() == size)
    }

    pub fn row_for(&self, channels: &[MeasurementKind]) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.channels == channels)
    }

    /// `#`-prefixed provenance lines, then one CSV row per combination.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dataset_fingerprint={}", self.fingerprint);
        let _ = writeln!(out, "# seed={}", self.seed);
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(&REPORT_COLUMNS.join(","));
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{:?},{:?},{:?},{},{},{},{:?},{}",
                i + 1,
                r.channels.len(),
                channels_label(&r.channels),
                join_usize(&r.retained, "+"),
                r.mean_f2,
                r.std_f2,
                r.mean_f1,
                r.train_loss,
                r.n_iters,
                r.converged,
                mlp::hidden_tag(&r.hidden),
                r.l2_alpha,
                r.equivalent
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            file: "sweep_report.csv".into(),
            row: line,
            col: 0,
            msg,
        };
        let mut fingerprint = None;
        let mut seed_value = None;
        let mut header = Vec::new();
        let mut rows = Vec::new();
        let mut saw_columns = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| err(lineno, "header line without '='".into()))?;
                match k {
                    "dataset_fingerprint" => fingerprint = Some(v.to_string()),
                    "seed" => {
                        seed_value = Some(
                            v.parse::<u64>()
                                .map_err(|e| err(lineno, format!("seed: {e}")))?,
                        )
                    }
                    _ => header.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if !saw_columns {
                if fields != REPORT_COLUMNS {
                    return Err(err(lineno, "unexpected column header".into()));
                }
                saw_columns = true;
                continue;
            }
            if fields.len() != REPORT_COLUMNS.len() {
                return Err(err(
                    lineno,
                    format!("expected {} fields, got {}", REPORT_COLUMNS.len(), fields.len()),
                ));
            }
            let num = |j: usize| -> Result<f64> {
                fields[j]
                    .parse::<f64>()
                    .map_err(|e| err(lineno, format!("{}: {e}", REPORT_COLUMNS[j])))
            };
            let int = |j: usize| -> Result<usize> {
                fields[j]
                    .parse::<usize>()
                    .map_err(|e| err(lineno, format!("{}: {e}", REPORT_COLUMNS[j])))
            };
            let boolean = |j: usize| -> Result<bool> {
                fields[j]
                    .parse::<bool>()
                    .map_err(|e| err(lineno, format!("{}: {e}", REPORT_COLUMNS[j])))
            };
            let list = |j: usize, sep: char| -> Result<Vec<usize>> {
                fields[j]
                    .split(sep)
                    .map(|s| {
                        s.parse::<usize>()
                            .map_err(|e| err(lineno, format!("{}: {e}", REPORT_COLUMNS[j])))
                    })
                    .collect()
            };
            let channels = fields[2]
                .split('+')
                .map(str::parse)
                .collect::<Result<Vec<MeasurementKind>>>()?;
            if int(1)? != channels.len() {
                return Err(err(lineno, "size does not match channel count".into()));
            }
            let retained = list(3, '+')?;
            if retained.len() != channels.len() {
                return Err(err(lineno, "retained does not match channel count".into()));
            }
            rows.push(ReportRow {
                channels,
                retained,
                mean_f2: num(4)?,
                std_f2: num(5)?,
                mean_f1: num(6)?,
                train_loss: num(7)?,
                n_iters: int(8)?,
                converged: boolean(9)?,
                hidden: list(10, 'x')?,
                l2_alpha: num(11)?,
                equivalent: boolean(12)?,
            });
        }
        if !saw_columns {
            return Err(err(0, "missing column header".into()));
        }
        Ok(SweepReport {
            rows,
            seed: seed_value.ok_or_else(|| err(0, "missing seed".into()))?,
            fingerprint: fingerprint.ok_or_else(|| err(0, "missing dataset_fingerprint".into()))?,
            header,
        })
    }

    /// Ranked tables grouped by combination size.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Channel combination sweep\n\n");
        let _ = writeln!(out, "- dataset fingerprint: `{}`", self.fingerprint);
        let _ = writeln!(out, "- seed: {}", self.seed);
        for (k, v) in &self.header {
            let _ = writeln!(out, "- {k}: {v}");
        }
        let max = self.rows.iter().map(|r| r.channels.len()).max().unwrap_or(0);
        for size in 1..=max {
            let _ = write!(out, "\n## {}\n\n", size_heading(size));
            out.push_str("| Rank | Measurements | Retained | Mean f2 | SD f2 | Mean f1 | Hidden | alpha | Equivalent |\n");
            out.push_str("|---:|---|---|---:|---:|---:|---|---:|:---:|\n");
            for (i, r) in self.rows.iter().enumerate().filter(|(_, r)| r.channels.len() == size) {
                let labels: Vec<&str> = r.channels.iter().map(|k| k.label()).collect();
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.2} | {:.2} | {:.2} | {} | {} | {} |",
                    i + 1,
                    labels.join(" + "),
                    join_usize(&r.retained, "+"),
                    r.mean_f2,
                    r.std_f2,
                    r.mean_f1,
                    mlp::hidden_tag(&r.hidden),
                    r.l2_alpha,
                    if r.equivalent { "yes" } else { "no" }
                );
            }
        }
        out
    }
}
