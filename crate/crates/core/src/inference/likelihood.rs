use serde::{Deserialize, Serialize};

use crate::distributions::{baseline_log_pmf, pmf_prefix_in, BaselineKind, ModelSpec};
use crate::error::{EdmError, Result};
use crate::scalar::Precision;

use super::data::CountDataset;

/// Absolute error budget on a log-likelihood before double precision is
/// abandoned.
pub const DEFAULT_LOGLIK_ERROR_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLikelihood {
    /// `-inf` when an observed category has zero model probability.
    pub value: f64,
    /// Error bound propagated from the per-term pmf estimates.
    pub abs_error: f64,
    /// Observed categories whose model probability underflowed to zero.
    pub zero_cells: Vec<usize>,
    pub precision: Precision,
}

impl LogLikelihood {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Model probabilities over the categories of a dataset plus the
/// log-likelihood they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryFit {
    /// `f(0)..f(K)`; with an open tail the last entry is `P(X >= K)`.
    pub probs: Vec<f64>,
    /// Mass beyond `K` (zero with an open tail).
    pub beyond: f64,
    pub loglik: LogLikelihood,
}

impl CategoryFit {
    /// `N f(k)` per category.
    pub fn expected(&self, total: u64) -> Vec<f64> {
        self.probs.iter().map(|p| total as f64 * p).collect()
    }

    /// Expected counts with the mass beyond `K` folded into the last cell.
    pub fn expected_with_tail(&self, total: u64) -> Vec<f64> {
        let mut e = self.expected(total);
        *e.last_mut().expect("nonempty") += total as f64 * self.beyond;
        e
    }
}

/// Per-category log probabilities with relative errors, for `k = 0..=K`.
struct RawTerms {
    log_probs: Vec<f64>,
    rel: Vec<f64>,
}

fn assemble(data: &CountDataset, raw: RawTerms, precision: Precision) -> CategoryFit {
    let k_max = data.max_count();
    let counts = data.counts();
    let mut probs: Vec<f64> = raw.log_probs.iter().map(|l| l.exp()).collect();
    let mut value = 0.0;
    let mut abs_error = 0.0;
    let mut zero_cells = Vec::new();
    let head = if data.open_tail() { k_max } else { k_max + 1 };
    for (k, &count) in counts.iter().enumerate().take(head) {
        let n = count as f64;
        if count == 0 {
            continue;
        }
        if raw.log_probs[k] == f64::NEG_INFINITY {
            zero_cells.push(k);
            continue;
        }
        value += n * raw.log_probs[k];
        abs_error += n * raw.rel[k];
    }
    let head_mass: f64 = probs[..head].iter().sum();
    let beyond = if data.open_tail() {
        let tail = (1.0 - head_mass).max(0.0);
        probs[k_max] = tail;
        let n = counts[k_max];
        if n > 0 {
            if tail > 0.0 {
                let head_err: f64 = probs[..head].iter().zip(&raw.rel).map(|(p, r)| p * r).sum();
                value += n as f64 * tail.ln();
                abs_error += n as f64 * (head_err + f64::EPSILON * head as f64) / tail;
            } else {
                zero_cells.push(k_max);
            }
        }
        0.0
    } else {
        (1.0 - head_mass).max(0.0)
    };
    if !zero_cells.is_empty() {
        value = f64::NEG_INFINITY;
    }
    CategoryFit {
        probs,
        beyond,
        loglik: LogLikelihood {
            value,
            abs_error,
            zero_cells,
            precision,
        },
    }
}

/// Fit of an EDM spec to the categories of `data`, in the given precision.
pub fn category_fit(spec: &ModelSpec<f64>, data: &CountDataset, precision: Precision) -> Result<CategoryFit> {
    let prefix = pmf_prefix_in(spec, data.max_count(), precision)?;
    let raw = RawTerms {
        log_probs: prefix.log_probs,
        rel: prefix.rel_error,
    };
    Ok(assemble(data, raw, precision))
}

/// Like [`category_fit`], but retries in extended precision when the
/// double result's error bound exceeds `limit`.
pub fn category_fit_auto(
    spec: &ModelSpec<f64>,
    data: &CountDataset,
    precision: Precision,
    escalate: bool,
    limit: f64,
) -> Result<CategoryFit> {
    let first = category_fit(spec, data, precision);
    let retry = match &first {
        Ok(fit) => fit.loglik.abs_error > limit,
        Err(EdmError::Precision { .. }) => true,
        Err(_) => false,
    };
    let fit = if retry && escalate && precision == Precision::Double {
        category_fit(spec, data, Precision::Extended)?
    } else {
        first?
    };
    if fit.loglik.abs_error > limit {
        return Err(EdmError::Precision {
            n: data.max_count(),
            detail: format!(
                "log-likelihood error bound {:e} exceeds {limit:e} in {} precision",
                fit.loglik.abs_error, fit.loglik.precision
            ),
        });
    }
    Ok(fit)
}

/// `sum_k n_k log f(k)`; an open last category contributes through the
/// complement mass `1 - sum_{k<K} f(k)`.
pub fn loglikelihood(spec: &ModelSpec<f64>, data: &CountDataset) -> Result<LogLikelihood> {
    category_fit_auto(spec, data, Precision::Double, true, DEFAULT_LOGLIK_ERROR_LIMIT).map(|f| f.loglik)
}

/// Poisson with mean `m`.
pub fn poisson_category_fit(m: f64, data: &CountDataset) -> Result<CategoryFit> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(EdmError::Domain {
            m,
            constraint: "m > 0".into(),
        });
    }
    let log_probs = (0..=data.max_count())
        .map(|k| baseline_log_pmf(BaselineKind::Poisson, m, k))
        .collect();
    let rel = (0..=data.max_count())
        .map(|k| 16.0 * f64::EPSILON * (k as f64 + 1.0))
        .collect();
    Ok(assemble(data, RawTerms { log_probs, rel }, Precision::Double))
}

/// Negative binomial with mean `m` and shape `p` (variance `m + m^2/p`).
pub fn negative_binomial_category_fit(m: f64, p: f64, data: &CountDataset) -> Result<CategoryFit> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(EdmError::Domain {
            m,
            constraint: "m > 0".into(),
        });
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(EdmError::InvalidParams(format!("p must be positive, got {p}")));
    }
    let kind = BaselineKind::NegativeBinomial { p };
    let log_probs = (0..=data.max_count()).map(|k| baseline_log_pmf(kind, m, k)).collect();
    let rel = (0..=data.max_count())
        .map(|k| 64.0 * f64::EPSILON * (k as f64 + p.abs().max(1.0).ln() + 1.0))
        .collect();
    Ok(assemble(data, RawTerms { log_probs, rel }, Precision::Double))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::psi_functions;
    use crate::series::VarianceParams;

    fn t1() -> CountDataset {
        CountDataset::new("t1", vec![103704, 14075, 1766, 255, 45, 6, 2], false).unwrap()
    }

    #[test]
    fn all_zero_dataset_reduces_to_psi1() {
        let data = CountDataset::new("z", vec![40], false).unwrap();
        let spec = ModelSpec::new(VarianceParams::lms(2, 3.0, 1.5).unwrap(), 0.7).unwrap();
        let l = loglikelihood(&spec, &data).unwrap();
        let psi1 = psi_functions(&spec).unwrap().psi1;
        assert!((l.value + 40.0 * psi1).abs() < 1e-12);
    }

    #[test]
    fn poisson_closed_form() {
        let data = CountDataset::new("d", vec![3, 2, 1], false).unwrap();
        let fit = poisson_category_fit(0.8, &data).unwrap();
        let want = 3.0 * (-0.8f64) + 2.0 * (0.8f64.ln() - 0.8) + (2.0 * 0.8f64.ln() - 0.8 - 2f64.ln());
        assert!((fit.loglik.value - want).abs() < 1e-13);
        assert!(fit.beyond > 0.0);
    }

    #[test]
    fn nb_matches_recurrence() {
        use crate::distributions::{baseline_pmf, BaselineKind};
        let data = t1();
        let fit = negative_binomial_category_fit(0.16, 1.3, &data).unwrap();
        let table = baseline_pmf(BaselineKind::NegativeBinomial { p: 1.3 }, 0.16).unwrap();
        for (a, b) in fit.probs.iter().zip(table.probs()) {
            assert!((a - b).abs() < 1e-14 * b.max(1e-300) + 1e-17, "{a} vs {b}");
        }
    }

    #[test]
    fn open_tail_uses_complement() {
        let closed = CountDataset::new("c", vec![50, 20, 5], false).unwrap();
        let open = CountDataset::new("o", vec![50, 20, 5], true).unwrap();
        let spec = ModelSpec::new(VarianceParams::abm(2, 1.0).unwrap(), 0.5).unwrap();
        let c = category_fit(&spec, &closed, Precision::Double).unwrap();
        let o = category_fit(&spec, &open, Precision::Double).unwrap();
        let tail = 1.0 - c.probs[0] - c.probs[1];
        assert!((o.probs[2] - tail).abs() < 1e-15);
        assert!(o.probs[2] > c.probs[2]);
        let diff = 5.0 * (tail.ln() - c.probs[2].ln());
        assert!((o.loglik.value - c.loglik.value - diff).abs() < 1e-10);
        assert_eq!(o.beyond, 0.0);
        let sum: f64 = o.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_probability_is_flagged() {
        // Complement mass rounds to zero while the open category is occupied.
        let data = CountDataset::new("o", vec![5, 1], true).unwrap();
        let fit = poisson_category_fit(1e-17, &data).unwrap();
        assert_eq!(fit.loglik.value, f64::NEG_INFINITY);
        assert_eq!(fit.loglik.zero_cells, vec![1]);
    }
}
