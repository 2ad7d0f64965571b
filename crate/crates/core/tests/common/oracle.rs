//! Independent reference implementations used only by tests.
#![allow(dead_code, clippy::needless_range_loop)]

/// Row-major dense matrix.
pub type Rows = Vec<Vec<f64>>;

pub fn column_means(x: &Rows) -> Vec<f64> {
    let n = x.len() as f64;
    let m = x[0].len();
    (0..m).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

/// Biased covariance `(1/n) Σ (x − μ)(x − μ)ᵀ`, element by element.
pub fn covariance(x: &Rows) -> Rows {
    let n = x.len();
    let m = x[0].len();
    let mu = column_means(x);
    let mut c = vec![vec![0.0; m]; m];
    for (j, cj) in c.iter_mut().enumerate() {
        for (k, cjk) in cj.iter_mut().enumerate() {
            let mut s = 0.0;
            for r in x {
                s += (r[j] - mu[j]) * (r[k] - mu[k]);
            }
            *cjk = s / n as f64;
        }
    }
    c
}

/// Cyclic Jacobi rotations. Returns eigenvalues (descending) and the
/// matching unit eigenvectors as columns of a row-major matrix.
pub fn jacobi_eigen(a: &Rows) -> (Vec<f64>, Rows) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&i| v[r][i]).collect()).collect();
    (values, vectors)
}

/// `50 · log10(100 / √(1 + mean squared difference))`.
pub fn f2(r: &[f64], t: &[f64]) -> f64 {
    let msd = r.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / r.len() as f64;
    50.0 * (100.0 / (1.0 + msd).sqrt()).log10()
}

pub fn f1(r: &[f64], t: &[f64]) -> f64 {
    let num: f64 = r.iter().zip(t).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = r.iter().map(|a| a.abs()).sum();
    100.0 * num / den
}

/// Population mean and standard deviation of one column.
pub fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Least-squares fit with intercept via normal equations solved by Gaussian
/// elimination with partial pivoting; returns R².
pub fn linear_r2(features: &Rows, y: &[f64]) -> f64 {
    let n = y.len();
    let p = features[0].len() + 1;
    let design: Rows = features
        .iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = (0..n).map(|r| design[r][i] * design[r][j]).sum();
        }
        a[i][p] = (0..n).map(|r| design[r][i] * y[r]).sum();
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in 0..p {
            if row != col {
                let factor = a[row][col] / d;
                for k in col..=p {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p)
        .map(|i| if a[i][i].abs() < 1e-300 { 0.0 } else { a[i][p] / a[i][i] })
        .collect();
    let (mean, _) = mean_std(y);
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = (0..n)
        .map(|r| {
            let pred: f64 = design[r].iter().zip(&beta).map(|(a, b)| a * b).sum();
            (y[r] - pred).powi(2)
        })
        .sum();
    1.0 - ss_res / ss_tot
}
