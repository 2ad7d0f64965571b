//! Dataset schema: measurement channels, the dissolution time grid, per-sample
//! metadata, plus validation and cleaning of raw records.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of measured dissolution time points.
pub const N_TIME_POINTS: usize = 53;

/// Upper bound accepted for a measured release percentage.
pub const MAX_RELEASE_PCT: f64 = 110.0;

/// The five input channels.
///
/// Variant order is the canonical concatenation order: NIR transmission,
/// NIR reflection, Raman reflection, Raman transmission, compression force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MeasurementKind {
    NirTransmission,
    NirReflection,
    RamanReflection,
    RamanTransmission,
    CompressionForce,
}

impl MeasurementKind {
    pub const ALL: [MeasurementKind; 5] = [
        MeasurementKind::NirTransmission,
        MeasurementKind::NirReflection,
        MeasurementKind::RamanReflection,
        MeasurementKind::RamanTransmission,
        MeasurementKind::CompressionForce,
    ];

    /// Feature count of the instrument setup this pipeline was built around.
    pub fn default_features(self) -> usize {
        match self {
            MeasurementKind::NirReflection => 1556,
            MeasurementKind::NirTransmission => 714,
            MeasurementKind::RamanReflection | MeasurementKind::RamanTransmission => 1691,
            MeasurementKind::CompressionForce => 6037,
        }
    }

    /// Short machine name used in file names and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            MeasurementKind::NirTransmission => "nir_tr",
            MeasurementKind::NirReflection => "nir_re",
            MeasurementKind::RamanReflection => "raman_re",
            MeasurementKind::RamanTransmission => "raman_tr",
            MeasurementKind::CompressionForce => "compression",
        }
    }

    /// Human-readable label for reports.
    pub fn label(self) -> &'static str {
        match self {
            MeasurementKind::NirTransmission => "NIR TR",
            MeasurementKind::NirReflection => "NIR RE",
            MeasurementKind::RamanReflection => "Raman RE",
            MeasurementKind::RamanTransmission => "Raman TR",
            MeasurementKind::CompressionForce => "Compression",
        }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Axis range for spectra (wavenumbers, cm⁻¹); `None` for the force curve,
    /// whose axis is the sample index.
    pub fn wavenumber_range(self) -> Option<(f64, f64)> {
        match self {
            MeasurementKind::NirReflection => Some((4000.0, 10000.0)),
            MeasurementKind::NirTransmission => Some((4000.0, 15000.0)),
            MeasurementKind::RamanReflection | MeasurementKind::RamanTransmission => {
                Some((200.0, 1890.0))
            }
            MeasurementKind::CompressionForce => None,
        }
    }
}

impl fmt::Display for MeasurementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasurementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let kind = match key.as_str() {
            "nir_tr" | "nir_transmission" | "nirtransmission" => MeasurementKind::NirTransmission,
            "nir_re" | "nir_reflection" | "nirreflection" => MeasurementKind::NirReflection,
            "raman_re" | "raman_reflection" | "ramanreflection" => MeasurementKind::RamanReflection,
            "raman_tr" | "raman_transmission" | "ramantransmission" => {
                MeasurementKind::RamanTransmission
            }
            "compression" | "comp" | "compression_force" | "compressionforce" => {
                MeasurementKind::CompressionForce
            }
            _ => return Err(Error::Config(format!("unknown measurement channel '{s}'"))),
        };
        Ok(kind)
    }
}

/// One channel's sample × feature matrix with its axis grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBlock {
    pub kind: MeasurementKind,
    pub axis: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl SpectralBlock {
    pub fn new(kind: MeasurementKind, axis: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if axis.len() != values.ncols() {
            return Err(Error::Shape(format!(
                "{kind}: axis has {} points but values have {} columns",
                axis.len(),
                values.ncols()
            )));
        }
        Ok(SpectralBlock { kind, axis, values })
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }
}

/// Sampling times of the dissolution test, in minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid(Vec<f64>);

impl TimeGrid {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// 2, 5, 10, 15, 30, 45, 60 min, then every 30 min through 1440 min.
pub fn time_grid() -> TimeGrid {
    let mut t = vec![2.0, 5.0, 10.0, 15.0, 30.0, 45.0, 60.0];
    let mut next = 90.0;
    while next <= 1440.0 {
        t.push(next);
        next += 30.0;
    }
    debug_assert_eq!(t.len(), N_TIME_POINTS);
    TimeGrid(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub sample_id: u64,
    pub setting_id: u32,
    pub tablet_id: u32,
    pub replicate_id: u32,
    pub dr_content: f64,
    pub hpmc_content: f64,
    pub nominal_force: f64,
}

/// Aligned channel blocks, dissolution profiles and metadata. Every row index
/// refers to the same sample in all parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub blocks: BTreeMap<MeasurementKind, SpectralBlock>,
    /// `n_samples × 53`, % released at each grid time.
    pub profiles: DMatrix<f64>,
    /// Release at t = 0 per sample. Implicit; zero for clean data.
    pub anchors: Vec<f64>,
    pub meta: Vec<SampleMeta>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.meta.len()
    }

    pub fn block(&self, kind: MeasurementKind) -> Result<&SpectralBlock> {
        self.blocks.get(&kind).ok_or(Error::MissingChannel(kind))
    }

    pub fn kinds(&self) -> Vec<MeasurementKind> {
        self.blocks.keys().copied().collect()
    }

    fn check_structure(&self) -> Result<()> {
        let n = self.n_samples();
        let mut bad = Vec::new();
        for (kind, block) in &self.blocks {
            if block.values.nrows() != n {
                bad.push(format!("{kind} has {} rows", block.values.nrows()));
            }
        }
        if self.profiles.nrows() != n {
            bad.push(format!("profiles have {} rows", self.profiles.nrows()));
        }
        if self.anchors.len() != n {
            bad.push(format!("{} anchors", self.anchors.len()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::StructuralMismatch(format!(
                "{n} samples in metadata but {}",
                bad.join(", ")
            )))
        }
    }

    /// SHA-256 over every value, metadata field and channel layout, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let put_f64s = |h: &mut Sha256, xs: &[f64]| {
            for x in xs {
                h.update(x.to_bits().to_le_bytes());
            }
        };
        h.update((self.n_samples() as u64).to_le_bytes());
        for (kind, block) in &self.blocks {
            h.update(kind.name().as_bytes());
            h.update((block.n_features() as u64).to_le_bytes());
            put_f64s(&mut h, &block.axis);
            put_f64s(&mut h, block.values.as_slice());
        }
        h.update(b"profiles");
        h.update((self.profiles.ncols() as u64).to_le_bytes());
        put_f64s(&mut h, self.profiles.as_slice());
        put_f64s(&mut h, &self.anchors);
        for m in &self.meta {
            h.update(m.sample_id.to_le_bytes());
            h.update(m.setting_id.to_le_bytes());
            h.update(m.tablet_id.to_le_bytes());
            h.update(m.replicate_id.to_le_bytes());
            put_f64s(&mut h, &[m.dr_content, m.hpmc_content, m.nominal_force]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Where an issue or a fix was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Block(MeasurementKind),
    Profiles,
    Anchor,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Block(k) => write!(f, "{k}"),
            Location::Profiles => f.write_str("profiles"),
            Location::Anchor => f.write_str("t0 anchor"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    RowCount {
        location: Location,
        expected: usize,
        found: usize,
    },
    AxisLength {
        kind: MeasurementKind,
        axis: usize,
        columns: usize,
    },
    NonFinite {
        location: Location,
        row: usize,
        col: usize,
    },
    Negative {
        kind: MeasurementKind,
        row: usize,
        col: usize,
        value: f64,
    },
    GridLength {
        expected: usize,
        found: usize,
    },
    ProfileRange {
        row: usize,
        col: usize,
        value: f64,
    },
    AnchorNonZero {
        row: usize,
        value: f64,
    },
    Meta {
        row: usize,
        reason: String,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::RowCount {
                location,
                expected,
                found,
            } => write!(f, "{location}: expected {expected} rows, found {found}"),
            Issue::AxisLength {
                kind,
                axis,
                columns,
            } => write!(f, "{kind}: axis length {axis} != {columns} columns"),
            Issue::NonFinite { location, row, col } => {
                write!(f, "{location}: non-finite value at row {row}, column {col}")
            }
            Issue::Negative {
                kind,
                row,
                col,
                value,
            } => write!(f, "{kind}: negative value {value} at row {row}, column {col}"),
            Issue::GridLength { expected, found } => write!(
                f,
                "profiles: {found} time points, dissolution grid has {expected}"
            ),
            Issue::ProfileRange { row, col, value } => write!(
                f,
                "profiles: {value} at row {row}, column {col} outside [0, {MAX_RELEASE_PCT}]"
            ),
            Issue::AnchorNonZero { row, value } => {
                write!(f, "t0 anchor of row {row} is {value}, expected 0")
            }
            Issue::Meta { row, reason } => write!(f, "meta row {row}: {reason}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Lists every invariant violation. Never fails; an empty report means the
/// dataset is well formed.
pub fn validate(ds: &Dataset) -> ValidationReport {
    let mut issues = Vec::new();
    let n = ds.n_samples();

    for (kind, block) in &ds.blocks {
        let location = Location::Block(*kind);
        if block.values.nrows() != n {
            issues.push(Issue::RowCount {
                location,
                expected: n,
                found: block.values.nrows(),
            });
        }
        if block.axis.len() != block.values.ncols() {
            issues.push(Issue::AxisLength {
                kind: *kind,
                axis: block.axis.len(),
                columns: block.values.ncols(),
            });
        }
        let v = &block.values;
        for r in 0..v.nrows() {
            for c in 0..v.ncols() {
                let x = v[(r, c)];
                if !x.is_finite() {
                    issues.push(Issue::NonFinite {
                        location,
                        row: r,
                        col: c,
                    });
                } else if x < 0.0 {
                    issues.push(Issue::Negative {
                        kind: *kind,
                        row: r,
                        col: c,
                        value: x,
                    });
                }
            }
        }
    }

    if ds.profiles.nrows() != n {
        issues.push(Issue::RowCount {
            location: Location::Profiles,
            expected: n,
            found: ds.profiles.nrows(),
        });
    }
    if ds.profiles.ncols() != N_TIME_POINTS {
        issues.push(Issue::GridLength {
            expected: N_TIME_POINTS,
            found: ds.profiles.ncols(),
        });
    }
    let p = &ds.profiles;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let x = p[(r, c)];
            if !x.is_finite() {
                issues.push(Issue::NonFinite {
                    location: Location::Profiles,
                    row: r,
                    col: c,
                });
            } else if !(0.0..=MAX_RELEASE_PCT).contains(&x) {
                issues.push(Issue::ProfileRange {
                    row: r,
                    col: c,
                    value: x,
                });
            }
        }
    }

    if ds.anchors.len() != n {
        issues.push(Issue::RowCount {
            location: Location::Anchor,
            expected: n,
            found: ds.anchors.len(),
        });
    }
    for (row, &a) in ds.anchors.iter().enumerate() {
        if a != 0.0 {
            issues.push(Issue::AnchorNonZero { row, value: a });
        }
    }

    let mut seen = HashSet::new();
    let mut last_id = None;
    for (row, m) in ds.meta.iter().enumerate() {
        if let Some(prev) = last_id {
            if m.sample_id <= prev {
                issues.push(Issue::Meta {
                    row,
                    reason: format!("sample_id {} not ascending", m.sample_id),
                });
            }
        }
        last_id = Some(m.sample_id);
        if !(1..=37).contains(&m.setting_id) {
            issues.push(Issue::Meta {
                row,
                reason: format!("setting_id {} outside [1, 37]", m.setting_id),
            });
        }
        if !(1..=2).contains(&m.replicate_id) {
            issues.push(Issue::Meta {
                row,
                reason: format!("replicate_id {} outside {{1, 2}}", m.replicate_id),
            });
        }
        if !seen.insert((m.tablet_id, m.replicate_id)) {
            issues.push(Issue::Meta {
                row,
                reason: format!(
                    "duplicate (tablet {}, replicate {})",
                    m.tablet_id, m.replicate_id
                ),
            });
        }
        for (name, x) in [
            ("dr_content", m.dr_content),
            ("hpmc_content", m.hpmc_content),
            ("nominal_force", m.nominal_force),
        ] {
            if !x.is_finite() {
                issues.push(Issue::Meta {
                    row,
                    reason: format!("{name} is not finite"),
                });
            }
        }
    }

    ValidationReport { issues }
}

/// One modified cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFix {
    pub location: Location,
    pub row: usize,
    pub col: usize,
    pub old: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CleaningLog {
    pub fixes: Vec<CellFix>,
}

impl CleaningLog {
    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }
}

/// Clamps negative channel values to zero and forces the t = 0 anchor to zero.
/// Every other value is left bit-identical.
pub fn clean(ds: &Dataset) -> Result<(Dataset, CleaningLog)> {
    ds.check_structure()?;
    let mut out = ds.clone();
    let mut log = CleaningLog::default();
    for (kind, block) in out.blocks.iter_mut() {
        let (nr, nc) = block.values.shape();
        for c in 0..nc {
            for r in 0..nr {
                let x = block.values[(r, c)];
                if x < 0.0 {
                    log.fixes.push(CellFix {
                        location: Location::Block(*kind),
                        row: r,
                        col: c,
                        old: x,
                    });
                    block.values[(r, c)] = 0.0;
                }
            }
        }
    }
    for (row, a) in out.anchors.iter_mut().enumerate() {
        if *a != 0.0 {
            log.fixes.push(CellFix {
                location: Location::Anchor,
                row,
                col: 0,
                old: *a,
            });
            *a = 0.0;
        }
    }
    Ok((out, log))
}


#[cfg(test)]
mod props {
    use super::tests::tiny_dataset;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn clean_idempotent_and_nonnegative(
            cells in proptest::collection::vec((0usize..5, 0usize..6, 0usize..4, -5.0f64..5.0), 0..20),
            anchor in -1.0f64..1.0,
        ) {
            let mut ds = tiny_dataset(6, 4);
            for (k, r, c, v) in cells {
                ds.blocks.get_mut(&MeasurementKind::ALL[k]).unwrap().values[(r, c)] = v;
            }
            ds.anchors[0] = anchor;
            let (once, _) = clean(&ds).unwrap();
            let (twice, log2) = clean(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(log2.is_empty());
            let negative = validate(&once).issues.iter().any(|i| matches!(i, Issue::Negative { .. }));
            prop_assert!(!negative);
        }
    }
}
