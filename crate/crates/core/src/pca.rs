//! Principal component analysis.
//!
//! The covariance matrix `Σ = XᵀX / n` of the column-centered data defines
//! the components: its eigenvectors are the principal directions and its
//! eigenvalues the variance along each. When there are fewer rows than
//! columns the `n × n` Gram matrix `XXᵀ / n` is decomposed instead; it shares
//! the nonzero eigenvalues and maps its eigenvectors to directions via `Xᵀu`.
//! Directions for zero eigenvalues complete an orthonormal basis.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Default cumulative explained-variance threshold for retention.
pub const DEFAULT_THRESHOLD: f64 = 0.99;

/// Tolerance applied to the cumulative ratio when comparing against a threshold.
const CUMULATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `m × k`, unit-norm principal directions as columns, ordered by
    /// decreasing eigenvalue.
    pub components: DMatrix<f64>,
    /// Length `k = min(n, m)`, descending.
    pub eigenvalues: Vec<f64>,
    pub retained: usize,
}

/// `Σ[j][k] = (1/n) Σ_i x_ij x_ik` for an already centered matrix.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows().max(1) as f64;
    let mut s = x.tr_mul(x) / n;
    // symmetrize round-off
    let m = s.ncols();
    for j in 0..m {
        for k in (j + 1)..m {
            let v = 0.5 * (s[(j, k)] + s[(k, j)]);
            s[(j, k)] = v;
            s[(k, j)] = v;
        }
    }
    s
}

pub fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

fn center(x: &DMatrix<f64>, mean: &[f64]) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let mu = mean[j];
        col.apply(|v| *v -= mu);
    }
    c
}

/// Flips `v` so its largest-magnitude entry is positive (earliest index wins ties).
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Two passes of Gram-Schmidt against `basis`, then unit norm.
fn orthonormalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let start = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..2 {
        for b in basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm.is_nan() || norm <= 1e-8 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

/// Unit axis with the largest component outside `basis`, orthogonalized.
fn complete(basis: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut outside = vec![1.0; m];
    for b in basis {
        outside.iter_mut().zip(b).for_each(|(r, x)| *r -= x * x);
    }
    let j = descending(&outside)[0];
    let mut e = vec![0.0; m];
    e[j] = 1.0;
    orthonormalize(e, basis).expect("basis smaller than the dimension")
}

pub fn pca_fit(x: &DMatrix<f64>) -> Result<PcaModel> {
    let (n, m) = x.shape();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if m == 0 {
        return Err(Error::Shape("matrix has no columns".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("input contains non-finite values".into()));
    }
    let mean = column_means(x);
    let centered = center(x, &mean);

    let k = n.min(m);
    let (lambdas, directions) = if n >= m {
        let eig = SymmetricEigen::try_new(covariance(&centered), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Convergence("eigen iteration limit reached".into()))?;
        let order = descending(eig.eigenvalues.as_slice());
        let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let dirs: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect();
        (lambdas, dirs)
    } else {
        // n × n Gram matrix; a direction is Xᵀu / ‖Xᵀu‖.
        let gram = &centered * centered.transpose() / n as f64;
        let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Convergence("eigen iteration limit reached".into()))?;
        let order = descending(eig.eigenvalues.as_slice());
        let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let dirs: Vec<Vec<f64>> = order
            .iter()
            .map(|&i| (centered.tr_mul(&eig.eigenvectors.column(i))).iter().copied().collect())
            .collect();
        (lambdas, dirs)
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (lambda, v) in lambdas.into_iter().zip(directions) {
        let lambda = if lambda < EIGEN_FLOOR { 0.0 } else { lambda };
        let v = if lambda > 0.0 { orthonormalize(v, &basis) } else { None };
        eigenvalues.push(lambda);
        basis.push(match v {
            Some(v) => v,
            None => complete(&basis, m),
        });
    }

    let mut components = DMatrix::zeros(m, k);
    for (dst, mut v) in basis.into_iter().enumerate() {
        canonical_sign(&mut v);
        components.column_mut(dst).copy_from_slice(&v);
    }

    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        retained: k,
    })
}

impl PcaModel {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// `λ_j / Σλ`.
    pub fn explained_ratios(&self) -> Result<Vec<f64>> {
        explained_ratios(&self.eigenvalues)
    }

    /// Smallest count whose cumulative ratio reaches `threshold`; also stored
    /// as `retained`.
    pub fn select_components(&mut self, threshold: f64) -> Result<usize> {
        let ratios = self.explained_ratios()?;
        let v = select_count(&ratios, threshold)?;
        self.retained = v;
        Ok(v)
    }

    /// `(X − mean) · W[:, :retained]`.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "PCA fitted on {} columns, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let w = self.components.columns(0, self.retained);
        Ok(center(x, &self.mean) * w)
    }

    /// Maps scores back to feature space: `scores · Wᵀ + mean`.
    pub fn reconstruct(&self, scores: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if scores.ncols() != self.retained {
            return Err(Error::Shape(format!(
                "expected {} score columns, got {}",
                self.retained,
                scores.ncols()
            )));
        }
        let w = self.components.columns(0, self.retained);
        let mut out = scores * w.transpose();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let mu = self.mean[j];
            col.apply(|v| *v += mu);
        }
        Ok(out)
    }

    /// Text dump: `mean`, `eigenvalues`, `retained` rows, then one
    /// `component,<j>,...` row per principal direction.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, tag: &str, xs: &mut dyn Iterator<Item = f64>| {
            out.push_str(tag);
            for x in xs {
                let _ = write!(out, ",{x:?}");
            }
            out.push('\n');
        };
        row(&mut out, "mean", &mut self.mean.iter().copied());
        row(&mut out, "eigenvalues", &mut self.eigenvalues.iter().copied());
        let _ = writeln!(out, "retained,{}", self.retained);
        for (j, col) in self.components.column_iter().enumerate() {
            row(&mut out, &format!("component,{j}"), &mut col.iter().copied());
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            file: "pca dump".into(),
            row: line,
            col: 0,
            msg: msg.into(),
        };
        let floats = |line: usize, cells: &[&str]| -> Result<Vec<f64>> {
            cells
                .iter()
                .map(|c| c.trim().parse::<f64>().map_err(|_| bad(line, "bad number")))
                .collect()
        };
        let mut mean = None;
        let mut eigenvalues = None;
        let mut retained = None;
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            match cells[0].trim() {
                "mean" => mean = Some(floats(ln, &cells[1..])?),
                "eigenvalues" => eigenvalues = Some(floats(ln, &cells[1..])?),
                "retained" => {
                    let v = cells
                        .get(1)
                        .and_then(|c| c.trim().parse::<usize>().ok())
                        .ok_or_else(|| bad(ln, "bad retained count"))?;
                    retained = Some(v);
                }
                "component" => {
                    let idx = cells
                        .get(1)
                        .and_then(|c| c.trim().parse::<usize>().ok())
                        .ok_or_else(|| bad(ln, "bad component index"))?;
                    if idx != cols.len() {
                        return Err(bad(ln, "components out of order"));
                    }
                    cols.push(floats(ln, &cells[2..])?);
                }
                _ => return Err(bad(ln, "unknown row tag")),
            }
        }
        let mean = mean.ok_or_else(|| bad(0, "missing mean row"))?;
        let eigenvalues = eigenvalues.ok_or_else(|| bad(0, "missing eigenvalues row"))?;
        let retained = retained.ok_or_else(|| bad(0, "missing retained row"))?;
        let m = mean.len();
        if cols.len() != eigenvalues.len() || cols.iter().any(|c| c.len() != m) {
            return Err(Error::Shape("component rows disagree with mean/eigenvalues".into()));
        }
        if retained > eigenvalues.len() {
            return Err(Error::Shape("retained exceeds component count".into()));
        }
        let flat: Vec<f64> = cols.concat();
        Ok(PcaModel {
            components: DMatrix::from_vec(m, eigenvalues.len(), flat),
            mean,
            eigenvalues,
            retained,
        })
    }
}

pub fn explained_ratios(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateData("all eigenvalues are zero".into()));
    }
    Ok(eigenvalues.iter().map(|l| l / total).collect())
}

pub fn cumulative(ratios: &[f64]) -> Vec<f64> {
    ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// Smallest `v` with `Σ_{j<v} ratio_j ≥ threshold`.
pub fn select_count(ratios: &[f64], threshold: f64) -> Result<usize> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::BadSpec(format!(
            "retention threshold {threshold} outside (0, 1]"
        )));
    }
    let cum = cumulative(ratios);
    let v = cum
        .iter()
        .position(|&c| c >= threshold - CUMULATIVE_SLACK)
        .map(|i| i + 1)
        .unwrap_or(ratios.len());
    Ok(v.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_hand_cases() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        assert_eq!(covariance(&x), DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(covariance(&x), DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn covariance_matches_double_loop() {
        let mut x = DMatrix::from_fn(10, 4, |r, c| ((r * 7 + c * 3) as f64 * 0.37).sin());
        let mu = column_means(&x);
        x = center(&x, &mu);
        let s = covariance(&x);
        for j in 0..4 {
            for k in 0..4 {
                let mut acc = 0.0;
                for i in 0..10 {
                    acc += x[(i, j)] * x[(i, k)];
                }
                assert!((s[(j, k)] - acc / 10.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfectly_correlated() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let m = pca_fit(&x).unwrap();
        let r = m.explained_ratios().unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
        assert!(r[1].abs() < 1e-12);
    }

    #[test]
    fn symmetric_cross() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let r = pca_fit(&x).unwrap().explained_ratios().unwrap();
        assert!((r[0] - 0.5).abs() < 1e-12 && (r[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ratio_arithmetic() {
        assert_eq!(explained_ratios(&[3.0, 1.0]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(explained_ratios(&[2.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(
            explained_ratios(&[0.0, 0.0]),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn selection_rule() {
        assert_eq!(select_count(&[0.85, 0.10, 0.04, 0.01], 0.99).unwrap(), 3);
        assert_eq!(select_count(&[0.85, 0.10, 0.04, 0.01], 1.0).unwrap(), 4);
        assert_eq!(select_count(&[1.0], 0.5).unwrap(), 1);
        assert_eq!(select_count(&[1.0], 1.0).unwrap(), 1);
        assert!(select_count(&[1.0], 0.0).is_err());
        assert!(select_count(&[1.0], 1.5).is_err());
    }

    #[test]
    fn full_threshold_gives_rank() {
        // rank 2 in 3 dims (third column = first + second), 6 samples
        let x = DMatrix::from_fn(6, 3, |r, c| {
            let a = (r as f64 * 0.9).sin();
            let b = (r as f64 * 1.7).cos();
            [a, b, a + b][c]
        });
        let mut m = pca_fit(&x).unwrap();
        assert_eq!(m.select_components(1.0).unwrap(), 2);
        assert_eq!(m.retained, 2);
    }

    #[test]
    fn mean_row_projects_to_zero() {
        let x = DMatrix::from_fn(7, 4, |r, c| ((r + 1) as f64 * (c + 2) as f64).ln());
        let m = pca_fit(&x).unwrap();
        let mean = DMatrix::from_row_slice(1, 4, &m.mean);
        assert!(m.project(&mean).unwrap().amax() < 1e-12);
        assert!(matches!(m.project(&DMatrix::zeros(1, 3)), Err(Error::Shape(_))));
    }

    #[test]
    fn wide_and_tall_are_orthonormal() {
        for (n, m) in [(5, 12), (12, 5), (6, 6)] {
            let x = DMatrix::from_fn(n, m, |r, c| ((r * 31 + c * 17) as f64 * 0.1).sin());
            let model = pca_fit(&x).unwrap();
            let w = &model.components;
            let gram = w.tr_mul(w);
            let id = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
            assert!((gram - id).amax() < 1e-8, "{n}x{m}");
            assert_eq!(model.eigenvalues.len(), n.min(m));
            assert!(model.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        canonical_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        canonical_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(pca_fit(&DMatrix::zeros(1, 3)), Err(Error::TooFewRows(1))));
        let mut x = DMatrix::zeros(3, 2);
        x[(0, 0)] = f64::NAN;
        assert!(pca_fit(&x).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let x = DMatrix::from_fn(6, 4, |r, c| ((r * 5 + c) as f64 * 0.3).cos());
        let mut m = pca_fit(&x).unwrap();
        m.select_components(0.9).unwrap();
        let back = PcaModel::from_dump(&m.to_dump()).unwrap();
        assert_eq!(back, m);
        assert!(PcaModel::from_dump("mean,1\n").is_err());
        assert!(PcaModel::from_dump("what,1\n").is_err());
    }
}
