//! Error metrics and summaries over per-sample test errors.

use crate::error::{Error, Result};

/// Euclidean norm of `prediction − target`.
pub fn l2_error(target: &[f64], prediction: &[f64]) -> Result<f64> {
    if target.len() != prediction.len() {
        return Err(Error::dims("l2_error prediction", target.len(), prediction.len()));
    }
    Ok(target.iter().zip(prediction).map(|(t, p)| (p - t) * (p - t)).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorSummary {
    pub mean: f64,
    /// Population (1/N) standard deviation.
    pub std_deviation: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Linear interpolation between order statistics of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_errors(errors: &[f64]) -> Result<ErrorSummary> {
    if errors.is_empty() {
        return Err(Error::Empty("error sequence"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("error sequence"));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ErrorSummary {
        mean,
        std_deviation: var.sqrt(),
        median: quantile_sorted(&sorted, 0.5),
        p25: quantile_sorted(&sorted, 0.25),
        p75: quantile_sorted(&sorted, 0.75),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `num_bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        self.edges.windows(2).zip(&self.counts).map(|(e, &c)| (e[0], e[1], c))
    }
}

/// Equal-width bins over `[min, max]`; every bin is half-open except the last.
/// Identical values all land in the first bin of a unit-width range.
pub fn histogram(values: &[f64], num_bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Empty("histogram values"));
    }
    if num_bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("histogram values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / num_bins as f64;
    let mut edges: Vec<f64> = (0..=num_bins).map(|i| lo + width * i as f64).collect();
    edges[num_bins] = hi;
    let mut counts = vec![0; num_bins];
    for &v in values {
        let bin = (((v - lo) / width) as usize).min(num_bins - 1);
        counts[bin] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_examples() {
        assert_eq!(l2_error(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(l2_error(&[1.5], &[-0.5]).unwrap(), 2.0);
        assert_eq!(l2_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(l2_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn summary_examples() {
        let s = summarize_errors(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.p25, 1.75);
        assert_eq!(s.p75, 3.25);
        assert!((s.std_deviation - 1.25f64.sqrt()).abs() < 1e-15);
        let c = summarize_errors(&[0.3; 7]).unwrap();
        assert_eq!((c.std_deviation, c.p25, c.median, c.p75), (0.0, 0.3, 0.3, 0.3));
        assert!(summarize_errors(&[]).is_err());
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[0.0, 0.5, 1.0], 2).unwrap();
        assert_eq!(h.counts, vec![1, 2]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
        let same = histogram(&[2.0; 5], 4).unwrap();
        assert_eq!(same.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(same.counts.iter().sum::<usize>(), 5);
        assert!(histogram(&[1.0], 0).is_err());
    }
}
