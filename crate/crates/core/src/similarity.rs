//! Dissolution-profile comparison: difference factor f1 and similarity factor f2.
//!
//! ```text
//! f1 = 100 · Σ|R_t − T_t| / Σ|R_t|
//! f2 = 50 · log10( 100 · [1 + (1/n) Σ (R_t − T_t)²]^(-1/2) )
//! ```
//!
//! Two profiles are considered equivalent when f1 ∈ [0, 15] and f2 ∈ [50, 100].

use crate::error::{Error, Result};

pub const F1_LIMIT: f64 = 15.0;
pub const F2_LIMIT: f64 = 50.0;

/// Which time points enter the sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Every point.
    #[default]
    None,
    /// Stop after the first point where both profiles reach 85 %.
    After85,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityResult {
    pub f1: f64,
    pub f2: f64,
    pub n_points: usize,
}

impl SimilarityResult {
    pub fn equivalent(&self) -> bool {
        is_equivalent(self.f1, self.f2)
    }
}

pub fn is_equivalent(f1: f64, f2: f64) -> bool {
    (0.0..=F1_LIMIT).contains(&f1) && (F2_LIMIT..=100.0).contains(&f2)
}

fn check(r: &[f64], t: &[f64]) -> Result<()> {
    if r.is_empty() || t.is_empty() {
        return Err(Error::EmptyProfile);
    }
    if r.len() != t.len() {
        return Err(Error::LengthMismatch(format!(
            "reference has {} points, test has {}",
            r.len(),
            t.len()
        )));
    }
    Ok(())
}

fn points(r: &[f64], t: &[f64], truncation: Truncation) -> usize {
    match truncation {
        Truncation::None => r.len(),
        Truncation::After85 => r
            .iter()
            .zip(t)
            .position(|(a, b)| *a >= 85.0 && *b >= 85.0)
            .map(|i| i + 1)
            .unwrap_or(r.len()),
    }
}

pub fn f1(r: &[f64], t: &[f64]) -> Result<f64> {
    f1_with(r, t, Truncation::None)
}

pub fn f1_with(r: &[f64], t: &[f64], truncation: Truncation) -> Result<f64> {
    check(r, t)?;
    let n = points(r, t, truncation);
    let num: f64 = r[..n].iter().zip(&t[..n]).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = r[..n].iter().map(|a| a.abs()).sum();
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * num / den)
}

pub fn f2(r: &[f64], t: &[f64]) -> Result<f64> {
    f2_with(r, t, Truncation::None)
}

pub fn f2_with(r: &[f64], t: &[f64], truncation: Truncation) -> Result<f64> {
    check(r, t)?;
    let n = points(r, t, truncation);
    let msd: f64 = r[..n]
        .iter()
        .zip(&t[..n])
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64;
    Ok(50.0 * (100.0 / (1.0 + msd).sqrt()).log10())
}

pub fn compare(r: &[f64], t: &[f64]) -> Result<SimilarityResult> {
    Ok(SimilarityResult {
        f1: f1(r, t)?,
        f2: f2(r, t)?,
        n_points: r.len(),
    })
}

/// Population mean and standard deviation of a sample.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and population standard deviation of the per-pair f2 values.
pub fn mean_f2<R, T>(refs: &[R], tests: &[T]) -> Result<(f64, f64)>
where
    R: AsRef<[f64]>,
    T: AsRef<[f64]>,
{
    if refs.len() != tests.len() {
        return Err(Error::LengthMismatch(format!(
            "{} reference profiles vs {} test profiles",
            refs.len(),
            tests.len()
        )));
    }
    if refs.is_empty() {
        return Err(Error::LengthMismatch("no profile pairs".into()));
    }
    let values = refs
        .iter()
        .zip(tests)
        .map(|(r, t)| f2(r.as_ref(), t.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_std(&values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(offset: f64) -> Vec<f64> {
        (0..53).map(|i| (i as f64 * 1.9 + offset).min(100.0)).collect()
    }

    #[test]
    fn identical_profiles() {
        let r = ramp(3.0);
        assert_eq!(f1(&r, &r).unwrap(), 0.0);
        assert_eq!(f2(&r, &r).unwrap(), 100.0);
    }

    #[test]
    fn hand_values() {
        assert!((f1(&[50.0, 100.0], &[45.0, 90.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!((f1(&[100.0], &[85.0]).unwrap() - 15.0).abs() < 1e-12);
        let r = vec![40.0; 53];
        let t10: Vec<f64> = r.iter().map(|v| v + 10.0).collect();
        let t2: Vec<f64> = r.iter().map(|v| v + 2.0).collect();
        let closed = |d: f64| 50.0 * (100.0 / (1.0 + d * d).sqrt()).log10();
        assert!((f2(&r, &t10).unwrap() - closed(10.0)).abs() < 1e-12);
        assert!((f2(&r, &t10).unwrap() - 49.89197).abs() < 1e-5);
        assert!((f2(&r, &t2).unwrap() - 82.5257).abs() < 1e-3);
    }

    #[test]
    fn band_edges() {
        assert!(is_equivalent(15.0, 50.0));
        assert!(is_equivalent(0.0, 100.0));
        assert!(!is_equivalent(15.01, 60.0));
        assert!(!is_equivalent(5.0, 49.99));
    }

    #[test]
    fn errors() {
        assert!(matches!(f2(&[], &[]), Err(Error::EmptyProfile)));
        assert!(matches!(f1(&[0.0, 0.0], &[1.0, 1.0]), Err(Error::ZeroReference)));
        assert!(matches!(f2(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(_))));
        assert!(mean_f2(&[vec![1.0]], &Vec::<Vec<f64>>::new()).is_err());
    }

    #[test]
    fn mean_f2_arithmetic() {
        let r = ramp(0.0);
        let (m, s) = mean_f2(&[r.clone(), r.clone()], &[r.clone(), r.clone()]).unwrap();
        assert_eq!((m, s), (100.0, 0.0));
        assert_eq!(mean_std(&[40.0, 60.0]), (50.0, 10.0));
        let t: Vec<f64> = r.iter().map(|v| v + 2.0).collect();
        let (m, s) = mean_f2(std::slice::from_ref(&r), std::slice::from_ref(&t)).unwrap();
        assert_eq!((m, s), (f2(&r, &t).unwrap(), 0.0));
    }

    #[test]
    fn truncation_after_85() {
        let r = vec![10.0, 50.0, 86.0, 95.0, 99.0];
        let t = vec![12.0, 55.0, 88.0, 60.0, 60.0];
        assert_eq!(points(&r, &t, Truncation::After85), 3);
        let short = f2(&r[..3], &t[..3]).unwrap();
        assert_eq!(f2_with(&r, &t, Truncation::After85).unwrap(), short);
        assert!(f2(&r, &t).unwrap() < short);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn profile() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..100.0, 53)
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(r in profile(), t in profile()) {
            let a = f2(&r, &t).unwrap();
            let b = f2(&t, &r).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a <= 100.0 + 1e-9);
            prop_assert!(f1(&r, &r).unwrap().abs() <= 1e-9);
            prop_assert!((f2(&r, &r).unwrap() - 100.0).abs() <= 1e-9);
        }

        #[test]
        fn decreasing_in_offset(r in profile(), d1 in 0.0f64..40.0, step in 0.01f64..20.0) {
            let t1: Vec<f64> = r.iter().map(|v| v + d1).collect();
            let t2: Vec<f64> = r.iter().map(|v| v - (d1 + step)).collect();
            prop_assert!(f2(&r, &t2).unwrap() < f2(&r, &t1).unwrap());
        }
    }
}
