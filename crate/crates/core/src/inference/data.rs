use serde::{Deserialize, Serialize};

use crate::error::{EdmError, Result};

/// Frequencies `n_0..n_K` of the counts `0..K`. With `open_tail` the last
/// category means "K or more".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountDataset {
    name: String,
    counts: Vec<u64>,
    open_tail: bool,
}

impl CountDataset {
    pub fn new(name: impl Into<String>, counts: Vec<u64>, open_tail: bool) -> Result<Self> {
        if counts.is_empty() {
            return Err(EdmError::Dataset("no categories".into()));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(EdmError::Dataset("total frequency is zero".into()));
        }
        Ok(CountDataset {
            name: name.into(),
            counts,
            open_tail,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn open_tail(&self) -> bool {
        self.open_tail
    }

    /// `N`.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `K`, the largest listed count.
    pub fn max_count(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn observed(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// True when the open tail category actually holds observations.
    pub fn tail_censored(&self) -> bool {
        self.open_tail && *self.counts.last().expect("nonempty") > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub n: u64,
    pub mean: f64,
    /// With the `N/(N-1)` correction.
    pub variance: f64,
    pub third_moment: f64,
    /// `m_3 / s^3`; zero for a degenerate sample.
    pub skewness: f64,
    pub dispersion: f64,
    pub zero_fraction: f64,
}

pub fn empirical_stats(data: &CountDataset) -> Result<EmpiricalStats> {
    let n = data.total();
    if n < 2 {
        return Err(EdmError::Dataset(format!("need at least two observations, got {n}")));
    }
    if data.tail_censored() {
        return Err(EdmError::Dataset(format!(
            "moments undefined: the open category {}+ holds {} observations",
            data.max_count(),
            data.counts().last().unwrap()
        )));
    }
    let n_f = n as f64;
    let weighted = |f: &dyn Fn(f64) -> f64| -> f64 {
        data.counts()
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * f(k as f64))
            .sum::<f64>()
    };
    let mean = weighted(&|k| k) / n_f;
    let variance = weighted(&|k| (k - mean).powi(2)) / (n_f - 1.0);
    let third_moment = weighted(&|k| (k - mean).powi(3)) / n_f;
    let skewness = if variance > 0.0 {
        third_moment / variance.powf(1.5)
    } else {
        0.0
    };
    Ok(EmpiricalStats {
        n,
        mean,
        variance,
        third_moment,
        skewness,
        dispersion: variance / mean,
        zero_fraction: data.counts()[0] as f64 / n_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_summary() {
        let d = CountDataset::new("t1", vec![103704, 14075, 1766, 255, 45, 6, 2], false).unwrap();
        let s = empirical_stats(&d).unwrap();
        assert_eq!(s.n, 119853);
        assert!((s.zero_fraction - 0.8653).abs() < 5e-5);
        assert!((s.dispersion - 1.156).abs() < 5e-4);
    }

    #[test]
    fn degenerate_sample() {
        let d = CountDataset::new("pt", vec![0, 10], false).unwrap();
        let s = empirical_stats(&d).unwrap();
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.dispersion, 0.0);
        assert_eq!(s.skewness, 0.0);
    }

    #[test]
    fn open_tail_rules() {
        let ok = CountDataset::new("t6", vec![2659, 244, 19, 2, 0], true).unwrap();
        assert!(empirical_stats(&ok).is_ok());
        let bad = CountDataset::new("x", vec![10, 4, 2], true).unwrap();
        assert!(empirical_stats(&bad).is_err());
    }

    #[test]
    fn rejects_empty() {
        assert!(CountDataset::new("e", vec![], false).is_err());
        assert!(CountDataset::new("z", vec![0, 0], false).is_err());
        let one = CountDataset::new("one", vec![1], false).unwrap();
        assert!(empirical_stats(&one).is_err());
    }
}
