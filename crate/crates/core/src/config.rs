//! Run configuration: one key-value file with `[generator]`, `[split]`,
//! `[mlp]` and `[sweep]` sections.
//!
//! ```text
//! seed = 7
//!
//! [generator]
//! preset = small
//! noise_sd.nir_tr = 0.01
//!
//! [split]
//! test_count = 49
//! grouping = tablet
//!
//! [mlp]
//! hidden_layers = 64
//! l2_alpha = 0.0001
//!
//! [sweep]
//! max_size = 3
//! hidden_grid = 64; 128; 128,64
//! alpha_grid = 0.0001; 0.001
//! ```
//!
//! Unknown sections and keys are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{CombinationSpec, ModelGrid, SplitSpec, SweepOptions};
use crate::kv::{parse_value, Document, Entry, Section};
use crate::synth::GeneratorConfig;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub split: SplitSpec,
    /// Channel list is filled per job; the rest applies to every combination.
    pub combination: CombinationSpec,
    pub sweep: SweepOptions,
}

fn unknown(section: &str, e: &Entry) -> Error {
    Error::Config(format!(
        "line {}: unknown key '{}' in [{section}]",
        e.line, e.key
    ))
}

/// `64,32` or `64x32`.
fn parse_layers(text: &str) -> Result<Vec<usize>> {
    text.split([',', 'x'])
        .map(str::trim)
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad layer width '{s}' in '{text}'")))
        })
        .collect()
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Config(format!("'{s}' is not a number")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let mut cfg = RunConfig::default();
        for e in &doc.root().entries {
            match e.key.as_str() {
                "seed" => cfg.seed = parse_value("root", e)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown top-level key '{}'",
                        e.line, e.key
                    )))
                }
            }
        }
        for section in doc.sections.iter().skip(1) {
            let name = section.name.as_deref().unwrap_or_default();
            match name {
                "generator" => cfg.generator = GeneratorConfig::from_section(section)?,
                "split" => cfg.apply_split(section)?,
                "mlp" => cfg.apply_mlp(section)?,
                "sweep" => cfg.apply_sweep(section)?,
                other => {
                    return Err(Error::Config(format!("unknown section [{other}]")));
                }
            }
        }
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn apply_split(&mut self, s: &Section) -> Result<()> {
        for e in &s.entries {
            match e.key.as_str() {
                "test_count" => self.split.test_count = parse_value("split", e)?,
                "grouping" => self.split.grouping = e.value.parse()?,
                _ => return Err(unknown("split", e)),
            }
        }
        Ok(())
    }

    fn apply_mlp(&mut self, s: &Section) -> Result<()> {
        let mlp = &mut self.combination.mlp;
        for e in &s.entries {
            match e.key.as_str() {
                "hidden_layers" => mlp.hidden_layers = parse_layers(&e.value)?,
                "l2_alpha" => mlp.l2_alpha = parse_value("mlp", e)?,
                "max_iter" => mlp.max_iter = parse_value("mlp", e)?,
                "grad_tol" => mlp.grad_tol = parse_value("mlp", e)?,
                "history_size" => mlp.history_size = parse_value("mlp", e)?,
                _ => return Err(unknown("mlp", e)),
            }
        }
        Ok(())
    }

    fn apply_sweep(&mut self, s: &Section) -> Result<()> {
        for e in &s.entries {
            match e.key.as_str() {
                "max_size" => self.sweep.max_size = parse_value("sweep", e)?,
                "repeats" => self.sweep.repeats = parse_value("sweep", e)?,
                "pca_threshold" => self.combination.pca_threshold = parse_value("sweep", e)?,
                "target_offset" => self.combination.target_offset = parse_value("sweep", e)?,
                "hidden_grid" => self.sweep.grid.hidden = parse_list(&e.value, parse_layers)?,
                "alpha_grid" => self.sweep.grid.alphas = parse_list(&e.value, parse_f64)?,
                _ => return Err(unknown("sweep", e)),
            }
        }
        Ok(())
    }

    /// Routes one seed to every randomized stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.generator.seed = seed;
        self.split.seed = seed;
        self.combination.mlp.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| Error::Config(e.to_string());
        self.generator.validate().map_err(as_config)?;
        self.combination.validate().map_err(as_config)?;
        self.sweep.grid.validate().map_err(as_config)?;
        for h in &self.sweep.grid.hidden {
            if h.is_empty() || h.contains(&0) {
                return Err(Error::Config(format!("bad hidden_grid entry {h:?}")));
            }
        }
        if self.sweep.grid.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("alpha_grid values must be ≥ 0".into()));
        }
        if !(1..=5).contains(&self.sweep.max_size) {
            return Err(Error::Config(format!(
                "max_size {} outside 1..=5",
                self.sweep.max_size
            )));
        }
        if self.sweep.repeats == 0 || self.split.test_count == 0 {
            return Err(Error::Config("repeats and test_count must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Fully resolved settings in the same file format.
    pub fn to_document(&self) -> Document {
        let mut root = Section::new(None);
        root.push("seed", self.seed);
        let mut split = Section::new(Some("split"));
        split.push("test_count", self.split.test_count);
        split.push("grouping", self.split.grouping);
        let mlp = &self.combination.mlp;
        let mut m = Section::new(Some("mlp"));
        m.push("hidden_layers", mlp.hidden_tag());
        m.push("l2_alpha", format!("{:?}", mlp.l2_alpha));
        m.push("max_iter", mlp.max_iter);
        m.push("grad_tol", format!("{:?}", mlp.grad_tol));
        m.push("history_size", mlp.history_size);
        let mut s = Section::new(Some("sweep"));
        s.push("max_size", self.sweep.max_size);
        s.push("repeats", self.sweep.repeats);
        s.push("pca_threshold", format!("{:?}", self.combination.pca_threshold));
        s.push("target_offset", self.combination.target_offset);
        s.push("hidden_grid", grid_text(&self.sweep.grid));
        s.push(
            "alpha_grid",
            self.sweep
                .grid
                .alphas
                .iter()
                .map(|a| format!("{a:?}"))
                .collect::<Vec<_>>()
                .join("; "),
        );
        Document {
            sections: vec![root, self.generator.to_section(), split, m, s],
        }
    }
}

fn grid_text(grid: &ModelGrid) -> String {
    grid.hidden
        .iter()
        .map(|h| h.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("; ")
}
