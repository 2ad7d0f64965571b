//! Manifest + CSV persistence.
//!
//! Layout of a saved dataset directory:
//!
//! ```text
//! manifest.txt        key=value, sections [channel:<kind>], [profiles], [meta]
//! <kind>.csv          sample_id, then one column per grid point (no header)
//! <kind>.axis.csv     one row of axis values
//! profiles.csv        header `sample_id,2,5,...,1440`, 53 value columns
//! meta.csv            header + 7 columns per sample
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a save/load
//! cycle reproduces every value exactly.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kv::{Document, Section};
use crate::model::{time_grid, Dataset, MeasurementKind, SampleMeta, SpectralBlock};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const FORMAT_VERSION: u32 = 1;

const META_HEADER: [&str; 7] = [
    "sample_id",
    "setting_id",
    "tablet_id",
    "replicate_id",
    "dr_content",
    "hpmc_content",
    "nominal_force",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEntry {
    pub kind: MeasurementKind,
    pub file: PathBuf,
    pub axis_file: PathBuf,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dataset_name: String,
    pub n_samples: usize,
    pub format_version: u32,
    pub channels: Vec<ChannelEntry>,
    pub profiles_file: PathBuf,
    pub meta_file: PathBuf,
    /// Optional `[generator]` section, kept verbatim for provenance.
    pub generator: Option<Section>,
}

fn manifest_err(msg: impl Into<String>) -> Error {
    Error::Manifest(msg.into())
}

fn required<'a>(section: &'a Section, key: &str) -> Result<&'a str> {
    section.get(key).ok_or_else(|| {
        let where_ = section
            .name
            .as_deref()
            .map(|n| format!("[{n}]"))
            .unwrap_or_else(|| "top level".into());
        manifest_err(format!("missing key '{key}' in {where_}"))
    })
}

fn parse_num<T: std::str::FromStr>(section: &Section, key: &str) -> Result<T> {
    let raw = required(section, key)?;
    raw.parse()
        .map_err(|_| manifest_err(format!("'{key}' has invalid value '{raw}'")))
}

fn check_keys(section: &Section, allowed: &[&str]) -> Result<()> {
    for e in &section.entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(manifest_err(format!(
                "line {}: unknown key '{}'",
                e.line, e.key
            )));
        }
    }
    Ok(())
}

impl Manifest {
    /// Parses manifest text. Paths stay relative to the manifest directory.
    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text).map_err(|e| manifest_err(e.to_string()))?;
        let root = doc.root();
        check_keys(root, &["format_version", "dataset_name", "n_samples"])?;
        let format_version: u32 = parse_num(root, "format_version")?;
        if format_version != FORMAT_VERSION {
            return Err(manifest_err(format!(
                "unsupported format_version {format_version}"
            )));
        }
        let dataset_name = required(root, "dataset_name")?.to_string();
        let n_samples: usize = parse_num(root, "n_samples")?;

        let mut channels: Vec<ChannelEntry> = Vec::new();
        let mut profiles_file = None;
        let mut meta_file = None;
        let mut generator = None;
        for section in &doc.sections[1..] {
            let name = section.name.as_deref().unwrap_or_default();
            if let Some(kind) = name.strip_prefix("channel:") {
                check_keys(section, &["file", "axis", "n_features"])?;
                let kind: MeasurementKind = kind
                    .parse()
                    .map_err(|_| manifest_err(format!("unknown channel section [{name}]")))?;
                if channels.iter().any(|c| c.kind == kind) {
                    return Err(manifest_err(format!("channel {kind} listed twice")));
                }
                channels.push(ChannelEntry {
                    kind,
                    file: required(section, "file")?.into(),
                    axis_file: required(section, "axis")?.into(),
                    n_features: parse_num(section, "n_features")?,
                });
            } else if name == "profiles" {
                check_keys(section, &["file"])?;
                profiles_file = Some(PathBuf::from(required(section, "file")?));
            } else if name == "meta" {
                check_keys(section, &["file"])?;
                meta_file = Some(PathBuf::from(required(section, "file")?));
            } else if name == "generator" {
                generator = Some(section.clone());
            } else {
                return Err(manifest_err(format!("unknown section [{name}]")));
            }
        }
        channels.sort_by_key(|c| c.kind);
        Ok(Manifest {
            dataset_name,
            n_samples,
            format_version,
            channels,
            profiles_file: profiles_file.ok_or_else(|| manifest_err("missing [profiles]"))?,
            meta_file: meta_file.ok_or_else(|| manifest_err("missing [meta]"))?,
            generator,
        })
    }

    pub fn render(&self) -> String {
        let mut doc = Document::default();
        let mut root = Section::new(None);
        root.push("format_version", self.format_version);
        root.push("dataset_name", &self.dataset_name);
        root.push("n_samples", self.n_samples);
        doc.sections.push(root);
        for c in &self.channels {
            let mut s = Section::new(Some(&format!("channel:{}", c.kind)));
            s.push("file", c.file.display());
            s.push("axis", c.axis_file.display());
            s.push("n_features", c.n_features);
            doc.sections.push(s);
        }
        let mut p = Section::new(Some("profiles"));
        p.push("file", self.profiles_file.display());
        doc.sections.push(p);
        let mut m = Section::new(Some("meta"));
        m.push("file", self.meta_file.display());
        doc.sections.push(m);
        if let Some(g) = &self.generator {
            doc.sections.push(g.clone());
        }
        doc.render()
    }
}

/// Numeric CSV: optional header, first column an integer sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMatrix {
    pub header: Option<Vec<String>>,
    pub ids: Vec<u64>,
    pub values: DMatrix<f64>,
}

fn parse_err(file: &str, row: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        row,
        col,
        msg: msg.into(),
    }
}

fn parse_f64(file: &str, row: usize, col: usize, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(file, row, col, format!("'{cell}' is not a number")))
}

/// Parses an id-prefixed numeric CSV. Rows and columns in errors are 1-based
/// positions in the file.
pub fn parse_id_csv<R: Read>(reader: R, label: &str, has_header: bool) -> Result<IdMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut header = None;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| parse_err(label, row, 0, e.to_string()))?;
        if has_header && idx == 0 {
            header = Some(rec.iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        if rec.len() < 2 {
            return Err(parse_err(label, row, rec.len(), "row has no value columns"));
        }
        let w = rec.len() - 1;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::Shape(format!(
                    "{label}: row {row} has {w} value columns, earlier rows have {expected}"
                )))
            }
            _ => {}
        }
        let id_cell = rec.get(0).unwrap_or_default().trim();
        let id = id_cell
            .parse::<u64>()
            .map_err(|_| parse_err(label, row, 1, format!("'{id_cell}' is not a sample id")))?;
        ids.push(id);
        for (c, cell) in rec.iter().enumerate().skip(1) {
            data.push(parse_f64(label, row, c + 1, cell)?);
        }
    }
    let ncols = width.unwrap_or(0);
    let values = DMatrix::from_row_slice(ids.len(), ncols, &data);
    Ok(IdMatrix {
        header,
        ids,
        values,
    })
}

/// Parses a single-row CSV of axis values.
pub fn parse_axis_csv<R: Read>(reader: R, label: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let rec = match rows.next() {
        Some(r) => r.map_err(|e| parse_err(label, 1, 0, e.to_string()))?,
        None => return Err(parse_err(label, 1, 0, "empty axis file")),
    };
    if rows.next().is_some() {
        return Err(Error::Shape(format!("{label}: axis file has more than one row")));
    }
    rec.iter()
        .enumerate()
        .map(|(c, cell)| parse_f64(label, 1, c + 1, cell))
        .collect()
}

fn parse_meta_csv<R: Read>(reader: R, label: &str) -> Result<Vec<SampleMeta>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| parse_err(label, row, 0, e.to_string()))?;
        if idx == 0 {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got != META_HEADER {
                return Err(parse_err(label, 1, 1, "unexpected meta header"));
            }
            continue;
        }
        if rec.len() != META_HEADER.len() {
            return Err(Error::Shape(format!(
                "{label}: row {row} has {} columns, expected {}",
                rec.len(),
                META_HEADER.len()
            )));
        }
        let int = |c: usize| -> Result<u64> {
            let cell = rec[c].trim();
            cell.parse::<u64>()
                .map_err(|_| parse_err(label, row, c + 1, format!("'{cell}' is not an integer")))
        };
        let small = |c: usize| -> Result<u32> {
            u32::try_from(int(c)?)
                .map_err(|_| parse_err(label, row, c + 1, "integer out of range"))
        };
        out.push(SampleMeta {
            sample_id: int(0)?,
            setting_id: small(1)?,
            tablet_id: small(2)?,
            replicate_id: small(3)?,
            dr_content: parse_f64(label, row, 5, &rec[4])?,
            hpmc_content: parse_f64(label, row, 6, &rec[5])?,
            nominal_force: parse_f64(label, row, 7, &rec[6])?,
        });
    }
    Ok(out)
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn display_name(path: &Path) -> String {
    path.display().to_string()
}

fn check_ids(label: &str, ids: &[u64], meta_ids: &[u64]) -> Result<()> {
    if ids.len() != meta_ids.len() {
        return Err(Error::Shape(format!(
            "{label}: {} rows, manifest declares {}",
            ids.len(),
            meta_ids.len()
        )));
    }
    if let Some(row) = ids.iter().zip(meta_ids).position(|(a, b)| a != b) {
        return Err(Error::Shape(format!(
            "{label}: row {} has sample_id {}, expected {}",
            row + 1,
            ids[row],
            meta_ids[row]
        )));
    }
    Ok(())
}

fn load_channel(base: &Path, entry: &ChannelEntry, meta_ids: &[u64]) -> Result<SpectralBlock> {
    let path = base.join(&entry.file);
    let label = display_name(&path);
    let m = parse_id_csv(open(&path)?, &label, false)?;
    check_ids(&label, &m.ids, meta_ids)?;
    if m.values.ncols() != entry.n_features {
        return Err(Error::Shape(format!(
            "{label}: {} value columns, manifest declares {}",
            m.values.ncols(),
            entry.n_features
        )));
    }
    let axis_path = base.join(&entry.axis_file);
    let axis_label = display_name(&axis_path);
    let axis = parse_axis_csv(open(&axis_path)?, &axis_label)?;
    if axis.len() != entry.n_features {
        return Err(Error::Shape(format!(
            "{axis_label}: {} axis points, manifest declares {}",
            axis.len(),
            entry.n_features
        )));
    }
    SpectralBlock::new(entry.kind, axis, m.values)
}

/// Loads a dataset from its manifest. Rows keep file order, which must be
/// strictly ascending in `sample_id` and identical across files.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let mut text = String::new();
    open(manifest_path)?
        .read_to_string(&mut text)
        .map_err(|e| Error::io(manifest_path, e))?;
    let manifest = Manifest::parse(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let meta_path = base.join(&manifest.meta_file);
    let meta = parse_meta_csv(open(&meta_path)?, &display_name(&meta_path))?;
    if meta.len() != manifest.n_samples {
        return Err(Error::Shape(format!(
            "{}: {} rows, manifest declares {}",
            meta_path.display(),
            meta.len(),
            manifest.n_samples
        )));
    }
    let meta_ids: Vec<u64> = meta.iter().map(|m| m.sample_id).collect();
    if let Some(w) = meta_ids.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Shape(format!(
            "{}: sample_id not strictly ascending at row {}",
            meta_path.display(),
            w + 3
        )));
    }

    let blocks: Vec<SpectralBlock> = manifest
        .channels
        .par_iter()
        .map(|entry| load_channel(base, entry, &meta_ids))
        .collect::<Result<_>>()?;

    let prof_path = base.join(&manifest.profiles_file);
    let prof_label = display_name(&prof_path);
    let prof = parse_id_csv(open(&prof_path)?, &prof_label, true)?;
    check_ids(&prof_label, &prof.ids, &meta_ids)?;
    let header = prof.header.unwrap_or_default();
    let has_anchor = header.get(1).map(|h| h == "0").unwrap_or(false);
    let (anchors, profiles) = if has_anchor && prof.values.ncols() > 0 {
        let anchors = prof.values.column(0).iter().copied().collect();
        let rest = prof.values.columns(1, prof.values.ncols() - 1).into_owned();
        (anchors, rest)
    } else {
        (vec![0.0; prof.ids.len()], prof.values)
    };

    Ok(Dataset {
        name: manifest.dataset_name,
        blocks: blocks.into_iter().map(|b| (b.kind, b)).collect::<BTreeMap<_, _>>(),
        profiles,
        anchors,
        meta,
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

fn push_row(out: &mut String, id: u64, values: impl Iterator<Item = f64>) {
    use std::fmt::Write as _;
    let _ = write!(out, "{id}");
    for v in values {
        let _ = write!(out, ",{v:?}");
    }
    out.push('\n');
}

fn render_id_matrix(ids: &[u64], m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 20);
    for (r, &id) in ids.iter().enumerate() {
        push_row(&mut out, id, m.row(r).iter().copied());
    }
    out
}

/// Writes `ds` into `dir` (created if missing) and returns the manifest.
pub fn save_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<Manifest> {
    save_dataset_with(ds, dir, None)
}

/// Like [`save_dataset`], additionally recording a `[generator]` section.
pub fn save_dataset_with(
    ds: &Dataset,
    dir: impl AsRef<Path>,
    generator: Option<Section>,
) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ids: Vec<u64> = ds.meta.iter().map(|m| m.sample_id).collect();

    let mut channels = Vec::new();
    for (kind, block) in &ds.blocks {
        let file = PathBuf::from(format!("{kind}.csv"));
        let axis_file = PathBuf::from(format!("{kind}.axis.csv"));
        write_file(&dir.join(&file), &render_id_matrix(&ids, &block.values))?;
        let axis: Vec<String> = block.axis.iter().map(|v| format!("{v:?}")).collect();
        write_file(&dir.join(&axis_file), &(axis.join(",") + "\n"))?;
        channels.push(ChannelEntry {
            kind: *kind,
            file,
            axis_file,
            n_features: block.n_features(),
        });
    }

    let with_anchor = ds.anchors.iter().any(|&a| a != 0.0);
    let mut prof = String::from("sample_id");
    if with_anchor {
        prof.push_str(",0");
    }
    let grid = time_grid();
    for c in 0..ds.profiles.ncols() {
        match grid.as_slice().get(c) {
            Some(t) => prof.push_str(&format!(",{t}")),
            None => prof.push_str(&format!(",p{c}")),
        }
    }
    prof.push('\n');
    for (r, &id) in ids.iter().enumerate() {
        let anchor = with_anchor.then(|| ds.anchors[r]);
        push_row(
            &mut prof,
            id,
            anchor.into_iter().chain(ds.profiles.row(r).iter().copied()),
        );
    }
    let profiles_file = PathBuf::from("profiles.csv");
    write_file(&dir.join(&profiles_file), &prof)?;

    let mut meta = META_HEADER.join(",") + "\n";
    for m in &ds.meta {
        meta.push_str(&format!(
            "{},{},{},{},{:?},{:?},{:?}\n",
            m.sample_id,
            m.setting_id,
            m.tablet_id,
            m.replicate_id,
            m.dr_content,
            m.hpmc_content,
            m.nominal_force
        ));
    }
    let meta_file = PathBuf::from("meta.csv");
    write_file(&dir.join(&meta_file), &meta)?;

    let manifest = Manifest {
        dataset_name: ds.name.clone(),
        n_samples: ds.n_samples(),
        format_version: FORMAT_VERSION,
        channels,
        profiles_file,
        meta_file,
        generator,
    };
    write_file(&dir.join(MANIFEST_FILE), &manifest.render())?;
    Ok(manifest)
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::model::tests::tiny_dataset;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn save_load_exact(vals in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 12)) {
            let mut ds = tiny_dataset(4, 3);
            let block = ds.blocks.get_mut(&MeasurementKind::NirTransmission).unwrap();
            for (i, v) in vals.iter().enumerate() {
                block.values[(i / 3, i % 3)] = *v;
            }
            ds.profiles[(1, 5)] = vals[0];
            ds.meta[0].dr_content = vals[1];
            let dir = tempfile::tempdir().unwrap();
            save_dataset(&ds, dir.path()).unwrap();
            let back = load_dataset(dir.path().join(MANIFEST_FILE)).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
