use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dissolve_core::config::RunConfig;
use dissolve_core::error::ErrorClass;
use dissolve_core::experiment::{self, ModelGrid, SweepReport};
use dissolve_core::ingest::{self, MANIFEST_FILE};
use dissolve_core::model::{self, Dataset};
use dissolve_core::pca;
use dissolve_core::preprocess;
use dissolve_core::synth::{self, parse_kinds, GeneratorConfig};
use dissolve_core::{Error, MeasurementKind, Result};

/// Predict tablet dissolution profiles from spectra and compression curves,
/// and rank measurement-channel combinations by f2.
#[derive(Debug, Parser)]
#[command(name = "dissolve", version)]
struct Cli {
    /// Key-value run configuration ([generator], [split], [mlp], [sweep]).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every randomized stage; overrides the config file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads (default: available cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(short = 'o', long = "out", global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset and its manifest (default output: ./data).
    Generate {
        /// full (296 samples, instrument resolution), small (296 samples,
        /// 64-point channels) or test (40 samples, 16-point channels).
        #[arg(long)]
        preset: Option<String>,
    },
    /// Check a dataset against the schema; optionally write a cleaned copy to -o.
    Validate {
        #[command(flatten)]
        data: DataArg,
        /// Clamp negative channel values and zero the time anchors, writing the result to -o.
        #[arg(long)]
        clean: bool,
    },
    /// Explained-variance analysis of one channel or all channels merged.
    Pca {
        #[command(flatten)]
        data: DataArg,
        /// Channel to analyze (nir_tr, nir_re, raman_re, raman_tr, compression).
        #[arg(long, conflicts_with = "merged", required_unless_present = "merged")]
        channel: Option<MeasurementKind>,
        /// Concatenate every standardized channel before the PCA.
        #[arg(long)]
        merged: bool,
        /// Cumulative explained-variance threshold for retention.
        #[arg(long, default_value_t = pca::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Also write the fitted model (mean, eigenvalues, components) to pca_<target>.csv.
        #[arg(long)]
        dump: bool,
    },
    /// Train one network on a channel combination and score the test split.
    Train {
        #[command(flatten)]
        data: DataArg,
        /// Comma-separated channels, e.g. nir_tr,compression.
        #[arg(long, value_name = "LIST")]
        channels: String,
    },
    /// Rank every channel combination up to --max-size by mean f2.
    Sweep {
        #[command(flatten)]
        data: DataArg,
        /// Largest combination size (1..=5).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        max_size: Option<u8>,
        /// Independent random splits averaged per combination.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        repeats: Option<u32>,
    },
    /// Re-render a sweep_report.csv as markdown.
    Report {
        /// Path to sweep_report.csv.
        csv: PathBuf,
    },
}

#[derive(Debug, Args)]
struct DataArg {
    /// Manifest file or the directory holding it.
    #[arg(value_name = "MANIFEST")]
    manifest: PathBuf,
}

impl DataArg {
    fn load(&self) -> Result<Dataset> {
        let path = if self.manifest.is_dir() {
            self.manifest.join(MANIFEST_FILE)
        } else {
            self.manifest.clone()
        };
        ingest::load_dataset(path)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn cmd_generate(cli: &Cli, cfg: &RunConfig, preset: Option<&str>) -> Result<()> {
    let mut gen = match preset {
        Some(p) => {
            let mut g = GeneratorConfig::preset(p)?;
            g.seed = cfg.generator.seed;
            g
        }
        None => cfg.generator.clone(),
    };
    if let Some(seed) = cli.seed {
        gen.seed = seed;
    }
    let ds = synth::generate(&gen)?;
    let dir = out_dir(cli, "data");
    let manifest = ingest::save_dataset_with(&ds, &dir, Some(gen.to_section()))?;
    println!(
        "wrote {} samples, {} channels to {}",
        manifest.n_samples,
        manifest.channels.len(),
        dir.display()
    );
    println!("fingerprint {}", ds.fingerprint());
    Ok(())
}

fn cmd_validate(cli: &Cli, data: &DataArg, clean: bool) -> Result<bool> {
    let ds = data.load()?;
    let report = model::validate(&ds);
    println!("{} samples, {} channels", ds.n_samples(), ds.blocks.len());
    for issue in &report.issues {
        println!("  {issue}");
    }
    if clean {
        let (cleaned, log) = model::clean(&ds)?;
        let dir = out_dir(cli, "cleaned");
        ingest::save_dataset(&cleaned, &dir)?;
        println!("cleaned {} cells, wrote {}", log.len(), dir.display());
        let remaining = model::validate(&cleaned);
        if !remaining.is_empty() {
            println!("{} issues remain after cleaning", remaining.issues.len());
            return Ok(false);
        }
        return Ok(true);
    }
    if report.is_empty() {
        println!("ok");
    } else {
        println!("{} issues", report.issues.len());
    }
    Ok(report.is_empty())
}

fn cmd_pca(
    cli: &Cli,
    data: &DataArg,
    channel: Option<MeasurementKind>,
    threshold: f64,
    dump: bool,
) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::BadSpec(format!("threshold {threshold} outside (0, 1]")));
    }
    let ds = data.load()?;
    let (target, z) = match channel {
        Some(kind) => {
            let x = &ds.block(kind)?.values;
            let scaler = preprocess::scaler_fit(x)?;
            (kind.name().to_string(), scaler.transform(x)?)
        }
        None => {
            let (z, _) = preprocess::merged_standardized(&ds, &ds.kinds())?;
            ("merged".to_string(), z)
        }
    };
    let mut model = pca::pca_fit(&z)?;
    let ratios = model.explained_ratios()?;
    let cumulative = pca::cumulative(&ratios);
    let retained = model.select_components(threshold)?;
    let mut csv = String::from("component,explained_ratio,cumulative_ratio\n");
    println!("{:>9}  {:>12}  {:>12}", "component", "explained", "cumulative");
    for (i, (r, c)) in ratios.iter().zip(&cumulative).enumerate() {
        csv.push_str(&format!("{},{r:?},{c:?}\n", i + 1));
        if i < retained.max(10) {
            println!("{:>9}  {:>12.6}  {:>12.6}", i + 1, r, c);
        }
    }
    println!("retained {retained} of {} components at threshold {threshold}", ratios.len());
    let dir = out_dir(cli, ".");
    let path = dir.join(format!("variance_{target}.csv"));
    write(&path, &csv)?;
    println!("wrote {}", path.display());
    if dump {
        let path = dir.join(format!("pca_{target}.csv"));
        write(&path, &model.to_dump())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_train(cli: &Cli, cfg: &RunConfig, data: &DataArg, channels: &str) -> Result<()> {
    let kinds = parse_kinds(channels).map_err(|e| Error::Config(e.to_string()))?;
    let ds = data.load()?;
    let spec = cfg.combination.with_channels(&kinds);
    let outcome = experiment::run_selected(&ds, &cfg.split, &spec, &ModelGrid::single(&spec.mlp))?;
    let row = &outcome.row;
    println!(
        "{}: retained {:?}, mean f2 {:.2} (sd {:.2}), mean f1 {:.2}, equivalent {}",
        spec.label(),
        row.retained,
        row.mean_f2,
        row.std_f2,
        row.mean_f1,
        row.equivalent
    );
    println!(
        "train loss {:.6} after {} iterations (converged {})",
        row.train_loss, row.n_iters, row.converged
    );
    let dir = out_dir(cli, ".");
    let path = dir.join(format!("mlp_{}_{}.csv", spec.label(), spec.mlp.hidden_tag()));
    write(&path, &outcome.model.to_dump())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(
    cli: &Cli,
    cfg: &RunConfig,
    data: &DataArg,
    max_size: Option<u8>,
    repeats: Option<u32>,
) -> Result<()> {
    let mut opts = cfg.sweep.clone();
    if let Some(m) = max_size {
        opts.max_size = m as usize;
    }
    if let Some(r) = repeats {
        opts.repeats = r as usize;
    }
    let ds = data.load()?;
    let report = experiment::sweep_with(&ds, &cfg.split, &cfg.combination, &opts)?;
    let dir = out_dir(cli, ".");
    write(&dir.join("sweep_report.csv"), &report.to_csv())?;
    write(&dir.join("sweep_report.md"), &report.to_markdown())?;
    if let Some(top) = report.rows.first() {
        println!(
            "top: {} mean f2 {:.2} (sd {:.2}), mean f1 {:.2}, equivalent {}",
            experiment::channels_label(&top.channels),
            top.mean_f2,
            top.std_f2,
            top.mean_f1,
            top.equivalent
        );
    }
    println!("{} combinations written to {}", report.rows.len(), dir.display());
    Ok(())
}

fn cmd_report(cli: &Cli, csv: &Path) -> Result<()> {
    let text = fs::read_to_string(csv).map_err(|e| io_err(csv, e))?;
    let report = SweepReport::from_csv(&text)?;
    let md = report.to_markdown();
    match &cli.out {
        Some(dir) => {
            let path = dir.join("sweep_report.md");
            write(&path, &md)?;
            println!("wrote {}", path.display());
        }
        None => print!("{md}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Generate { preset } => cmd_generate(cli, &cfg, preset.as_deref())?,
        Command::Validate { data, clean } => return cmd_validate(cli, data, *clean),
        Command::Pca {
            data,
            channel,
            threshold,
            dump,
            ..
        } => cmd_pca(cli, data, *channel, *threshold, *dump)?,
        Command::Train { data, channels } => cmd_train(cli, &cfg, data, channels)?,
        Command::Sweep {
            data,
            max_size,
            repeats,
        } => cmd_sweep(cli, &cfg, data, *max_size, *repeats)?,
        Command::Report { csv } => cmd_report(cli, csv)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            })
        }
    }
}
