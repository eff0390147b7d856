//! The kernel `mu_n` of the family.
//!
//! `mu_n = [x^(n-1)] exp(H_n(x)) / n`. The production path exponentiates the
//! Taylor series of `H_n` with the standard recurrence
//! `a_k = (1/k) sum_{j=1..k} j b_j a_{k-j}`; the partition-sum oracle
//! expands the same coefficient through the multiplicity vectors of `n-1`.

use crate::error::{EdmError, Result};
use crate::scalar::Scalar;

use super::coefficients::{coefficients, h_deriv_scaled_from, taylor_coefficients, CoefficientSet};
use super::params::VarianceParams;
use super::partitions::enumerate_partitions;

/// Largest `n` accepted by [`kernel_mu_oracle`] by default.
pub const DEFAULT_ORACLE_CAP: usize = 20;

/// Largest tolerated a-posteriori relative error of a kernel entry.
pub const DEFAULT_MAX_RELATIVE_ERROR: f64 = 1e-6;

/// `mu_0..mu_N` together with a running relative-error estimate per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable<T> {
    params: VarianceParams<T>,
    mu: Vec<T>,
    log_mu: Vec<T>,
    rel_error: Vec<f64>,
}

impl<T: Scalar> KernelTable<T> {
    pub fn params(&self) -> &VarianceParams<T> {
        &self.params
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    /// `ln mu_n`; finite even where `mu_n` itself leaves the floating range.
    pub fn log_mu(&self) -> &[T] {
        &self.log_mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Estimated relative error of each `mu_n`.
    pub fn relative_error(&self) -> &[f64] {
        &self.rel_error
    }

    pub fn max_relative_error(&self) -> f64 {
        self.rel_error.iter().copied().fold(0.0, f64::max)
    }
}

/// Incremental kernel evaluation; `extend_to` appends entries on demand.
#[derive(Debug, Clone)]
pub(crate) struct KernelBuilder<T> {
    coeffs: CoefficientSet<T>,
    scale: T,
    table: KernelTable<T>,
    max_rel_error: f64,
}

impl<T: Scalar> KernelBuilder<T> {
    pub(crate) fn new(params: &VarianceParams<T>, max_rel_error: f64) -> Result<Self> {
        let coeffs = coefficients(params)?;
        let scale = params.series_scale();
        Ok(KernelBuilder {
            coeffs,
            scale,
            table: KernelTable {
                params: *params,
                mu: vec![T::one()],
                log_mu: vec![T::zero()],
                rel_error: vec![0.0],
            },
            max_rel_error,
        })
    }

    pub(crate) fn coefficients(&self) -> &CoefficientSet<T> {
        &self.coeffs
    }

    pub(crate) fn table(&self) -> &KernelTable<T> {
        &self.table
    }

    pub(crate) fn into_table(self) -> KernelTable<T> {
        self.table
    }

    /// Ensure `mu_0..=mu_n` are present.
    pub(crate) fn extend_to(&mut self, n_max: usize) -> Result<()> {
        while self.table.mu.len() <= n_max {
            let n = self.table.mu.len();
            let (log_mu, rel) = self.entry(n)?;
            self.table.mu.push(log_mu.exp());
            self.table.log_mu.push(log_mu);
            self.table.rel_error.push(rel);
        }
        Ok(())
    }

    /// `(ln mu_n, estimated relative error)`.
    fn entry(&self, n: usize) -> Result<(T, f64)> {
        let eps = T::epsilon().to_f64_lossy();
        // Taylor coefficients of H_n(s x) and the size of their unreduced terms.
        let (mut b, mut b_mag) = taylor_coefficients(&self.coeffs, n, self.scale);
        // Rescale the variable by a power of two t chosen so that the last
        // coefficient comes out near one, taking mu_{n-1} as the size guess.
        let shift = if n >= 3 {
            let prev = self.table.log_mu[n - 1].to_f64_lossy();
            let log_t = -((n as f64).ln() + prev) / (n - 1) as f64 - self.scale.to_f64_lossy().ln();
            (log_t / std::f64::consts::LN_2).round() as i32
        } else {
            0
        };
        let t = T::from_f64_lossy(2f64.powi(shift));
        let mut tj = T::one();
        for (v, mag) in b.iter_mut().zip(b_mag.iter_mut()) {
            tj = tj * t;
            *v = *v * tj;
            *mag *= tj.to_f64_lossy();
        }
        let k_max = n - 1;
        let mut a = Vec::with_capacity(n);
        a.push(T::one());
        // Worst cancellation ratio over all steps; sum |terms| / |sum|.
        let mut cond = 1.0f64;
        for k in 1..=k_max {
            let mut acc = T::zero();
            let mut spread = 0.0;
            for j in 1..=k {
                let jt = T::from_usize_lossy(j);
                let term = jt * b[j - 1] * a[k - j];
                acc = acc + term;
                spread += term.abs().to_f64_lossy() + j as f64 * b_mag[j - 1] * a[k - j].abs().to_f64_lossy();
            }
            let ratio = spread / acc.abs().to_f64_lossy();
            cond = if ratio.is_nan() { f64::INFINITY } else { cond.max(ratio) };
            a.push(acc / T::from_usize_lossy(k));
        }
        let top = a[k_max];
        if !top.is_finite() {
            return Err(EdmError::Precision {
                n,
                detail: "non-finite series coefficient".into(),
            });
        }
        // Running cancellation estimate; checked against double-double
        // references it overstates the observed error by two to three orders.
        let rel = (n + self.coeffs.basis_len()) as f64 * eps * cond;
        if !(top > T::zero()) {
            return Err(EdmError::Precision {
                n,
                detail: format!("kernel value {top} is not positive"),
            });
        }
        if rel > self.max_rel_error {
            return Err(EdmError::Precision {
                n,
                detail: format!("estimated relative error {rel:e} exceeds {:e}", self.max_rel_error),
            });
        }
        let n_t = T::from_usize_lossy(n);
        let log_mu = top.ln() - T::from_usize_lossy(k_max) * (self.scale * t).ln() - n_t.ln();
        if !log_mu.is_finite() {
            return Err(EdmError::Precision {
                n,
                detail: format!("kernel value out of range (log {log_mu})"),
            });
        }
        Ok((log_mu, rel))
    }
}

/// `mu_0..=mu_n_max` through the power-series recurrence.
pub fn kernel_table<T: Scalar>(params: &VarianceParams<T>, n_max: usize) -> Result<KernelTable<T>> {
    kernel_table_with_tolerance(params, n_max, DEFAULT_MAX_RELATIVE_ERROR)
}

pub fn kernel_table_with_tolerance<T: Scalar>(
    params: &VarianceParams<T>,
    n_max: usize,
    max_rel_error: f64,
) -> Result<KernelTable<T>> {
    let mut builder = KernelBuilder::new(params, max_rel_error)?;
    builder.extend_to(n_max)?;
    let table = builder.into_table();
    if let Some(n) = table.mu.iter().position(|mu| !mu.is_finite() || *mu <= T::zero()) {
        return Err(EdmError::Precision {
            n,
            detail: format!("mu_n = exp({}) is outside the floating range", table.log_mu[n]),
        });
    }
    Ok(table)
}

/// `mu_n` from the multiplicity-vector sum
/// `mu_n = (1/n) sum_k prod_j prod_{t=1..k_j} (H_n^(j)(0)/j!) / t`.
pub fn kernel_mu_oracle<T: Scalar>(params: &VarianceParams<T>, n: usize) -> Result<T> {
    kernel_mu_oracle_with_cap(params, n, DEFAULT_ORACLE_CAP)
}

pub fn kernel_mu_oracle_with_cap<T: Scalar>(params: &VarianceParams<T>, n: usize, cap: usize) -> Result<T> {
    if n > cap {
        return Err(EdmError::OracleCapExceeded { n, cap });
    }
    let set = coefficients(params)?;
    if n <= 1 {
        return Ok(T::one());
    }
    let h = h_deriv_scaled_from(&set, n);
    let mut sum = T::zero();
    for partition in enumerate_partitions(n - 1) {
        let mut prod = T::one();
        for (idx, &k) in partition.multiplicities().iter().enumerate() {
            let hj = h.get(idx + 1);
            for t in 1..=k as usize {
                prod = prod * hj / T::from_usize_lossy(t);
            }
        }
        sum = sum + prod;
    }
    Ok(sum / T::from_usize_lossy(n))
}
