//! Column standardization and channel concatenation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dataset, MeasurementKind};

/// Divisor used for the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdConvention {
    /// Divide by n.
    #[default]
    Population,
    /// Divide by n − 1.
    Sample,
}

/// Per-column mean and standard deviation, `(x − mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalerModel {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub n_fit: usize,
}

pub fn scaler_fit(x: &DMatrix<f64>) -> Result<ScalerModel> {
    scaler_fit_with(x, StdConvention::Population)
}

pub fn scaler_fit_with(x: &DMatrix<f64>, convention: StdConvention) -> Result<ScalerModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let denom = match convention {
        StdConvention::Population => n as f64,
        StdConvention::Sample => (n - 1) as f64,
    };
    let mut means = Vec::with_capacity(x.ncols());
    let mut stds = Vec::with_capacity(x.ncols());
    for col in x.column_iter() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        means.push(mean);
        stds.push((ss / denom).sqrt());
    }
    Ok(ScalerModel {
        means,
        stds,
        n_fit: n,
    })
}

impl ScalerModel {
    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    /// Zero-variance columns map to 0.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (mu, s) = (self.means[j], self.stds[j]);
            if s == 0.0 {
                col.fill(0.0);
            } else {
                col.apply(|v| *v = (*v - mu) / s);
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} columns, got {}",
                self.n_features(),
                z.ncols()
            )));
        }
        let mut out = z.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (mu, s) = (self.means[j], self.stds[j]);
            col.apply(|v| *v = *v * s + mu);
        }
        Ok(out)
    }
}

pub fn scaler_transform(m: &ScalerModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.transform(x)
}

/// Appends blocks side by side, left to right in the given order.
pub fn concat_rows(blocks: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = blocks.first() else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let n = first.nrows();
    if let Some(bad) = blocks.iter().position(|b| b.nrows() != n) {
        return Err(Error::Shape(format!(
            "block {bad} has {} rows, block 0 has {n}",
            blocks[bad].nrows()
        )));
    }
    let width = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, width);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(*b);
        offset += b.ncols();
    }
    Ok(out)
}

/// Standardizes each selected channel on its own, then concatenates them in
/// canonical channel order. Returns the merged matrix and each channel's
/// column width.
pub fn merged_standardized(
    ds: &Dataset,
    kinds: &[MeasurementKind],
) -> Result<(DMatrix<f64>, Vec<(MeasurementKind, usize)>)> {
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let mut scaled = Vec::with_capacity(kinds.len());
    for &k in &kinds {
        let block = ds.block(k)?;
        let model = scaler_fit(&block.values)?;
        scaled.push(model.transform(&block.values)?);
    }
    let refs: Vec<&DMatrix<f64>> = scaled.iter().collect();
    let widths = kinds.iter().zip(&scaled).map(|(k, m)| (*k, m.ncols())).collect();
    Ok((concat_rows(&refs)?, widths))
}
