use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{EdmError, Result};
use crate::scalar::{Precision, Scalar};
use crate::series::{KernelBuilder, VarianceParams};
use crate::special::ln_gamma;

use super::model::{psi_from, ModelSpec};

pub const DEFAULT_TAIL_EPS: f64 = 1e-10;
pub const DEFAULT_TERM_CAP: usize = 400;
/// Largest accepted estimated absolute error of the accumulated mass.
pub const DEFAULT_MAX_MASS_ERROR: f64 = 1e-8;
/// Mass above `1 + MASS_OVERSHOOT` means the kernel is corrupt.
const MASS_OVERSHOOT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfOptions {
    /// Stop once the accumulated mass reaches `1 - eps`.
    pub eps: f64,
    /// Hard cap on the largest `n` evaluated.
    pub cap: usize,
    pub max_mass_error: f64,
}

impl Default for PmfOptions {
    fn default() -> Self {
        PmfOptions {
            eps: DEFAULT_TAIL_EPS,
            cap: DEFAULT_TERM_CAP,
            max_mass_error: DEFAULT_MAX_MASS_ERROR,
        }
    }
}

/// The distribution a [`PmfTable`] was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PmfSource {
    Edm {
        class: crate::series::ClassId,
        r: u32,
        p: f64,
        b: Option<f64>,
    },
    Poisson,
    NegativeBinomial {
        p: f64,
    },
}

impl PmfSource {
    pub fn from_params<T: Scalar>(params: &VarianceParams<T>) -> Self {
        PmfSource::Edm {
            class: params.class(),
            r: params.r(),
            p: params.p().to_f64_lossy(),
            b: params.b().map(|b| b.to_f64_lossy()),
        }
    }
}

/// `f(0)..f(N)` plus the mass left beyond `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfTable {
    source: PmfSource,
    m: f64,
    probs: Vec<f64>,
    tail_mass: f64,
    mass_error: f64,
}

impl PmfTable {
    pub fn source(&self) -> &PmfSource {
        &self.source
    }

    pub fn mean_param(&self) -> f64 {
        self.m
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `sum f(n)` over the table.
    pub fn mass(&self) -> f64 {
        1.0 - self.tail_mass
    }

    /// Estimated absolute rounding error in the accumulated mass.
    pub fn mass_error(&self) -> f64 {
        self.mass_error
    }

    /// Largest `n` in the table.
    pub fn last_index(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Probabilities `f(0..=n_max)` and their estimated relative errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfPrefix {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rel_error: Vec<f64>,
}

struct Term<T> {
    log_f: T,
    rel_error: f64,
}

struct PmfStepper<T> {
    builder: KernelBuilder<T>,
    psi: T,
    psi1: T,
    psi_err: f64,
    psi1_err: f64,
}

impl<T: Scalar> PmfStepper<T> {
    fn new(spec: &ModelSpec<T>) -> Result<Self> {
        let builder = KernelBuilder::new(spec.params(), f64::INFINITY)?;
        let psi = psi_from(builder.coefficients(), spec.m());
        Ok(PmfStepper {
            builder,
            psi: psi.psi,
            psi1: psi.psi1,
            psi_err: psi.psi_abs_error,
            psi1_err: psi.psi1_abs_error,
        })
    }

    fn term(&mut self, n: usize) -> Result<Term<T>> {
        self.builder.extend_to(n)?;
        let table = self.builder.table();
        let log_f = table.log_mu()[n] + T::from_usize_lossy(n) * self.psi - self.psi1;
        let rel_error = table.relative_error()[n] + n as f64 * self.psi_err + self.psi1_err;
        Ok(Term { log_f, rel_error })
    }
}

/// `f(n) = mu_n exp(n psi(m) - psi_1(m))`, extended until the mass reaches
/// `1 - eps`.
pub fn pmf_table<T: Scalar>(spec: &ModelSpec<T>, eps: f64) -> Result<PmfTable> {
    pmf_table_with(
        spec,
        &PmfOptions {
            eps,
            ..PmfOptions::default()
        },
    )
}

pub fn pmf_table_with<T: Scalar>(spec: &ModelSpec<T>, opts: &PmfOptions) -> Result<PmfTable> {
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(EdmError::InvalidParams(format!(
            "eps must lie in (0, 1), got {}",
            opts.eps
        )));
    }
    let mut stepper = PmfStepper::new(spec)?;
    let target = T::one() - T::from_f64_lossy(opts.eps);
    let mut mass = T::zero();
    let mut mass_error = 0.0;
    let mut probs = Vec::new();
    for n in 0..=opts.cap {
        let term = stepper.term(n)?;
        let f = term.log_f.exp();
        let f64_val = f.to_f64_lossy();
        probs.push(f64_val);
        mass = mass + f;
        mass_error += f64_val * term.rel_error;
        if mass_error > opts.max_mass_error {
            return Err(EdmError::Precision {
                n,
                detail: format!(
                    "accumulated mass error {mass_error:e} exceeds {:e}",
                    opts.max_mass_error
                ),
            });
        }
        if mass.to_f64_lossy() > 1.0 + MASS_OVERSHOOT {
            return Err(EdmError::Precision {
                n,
                detail: format!("probability mass {} exceeds one", mass.to_f64_lossy()),
            });
        }
        if mass >= target {
            return Ok(PmfTable {
                source: PmfSource::from_params(spec.params()),
                m: spec.m().to_f64_lossy(),
                probs,
                tail_mass: (T::one() - mass).to_f64_lossy(),
                mass_error,
            });
        }
    }
    Err(EdmError::CapReached {
        cap: opts.cap,
        tail: (T::one() - mass).to_f64_lossy(),
        eps: opts.eps,
    })
}

/// Dispatch on the requested arithmetic.
pub fn pmf_table_in(spec: &ModelSpec<f64>, opts: &PmfOptions, precision: Precision) -> Result<PmfTable> {
    match precision {
        Precision::Double => pmf_table_with(spec, opts),
        Precision::Extended => pmf_table_with(&spec.cast::<DoubleDouble>(), opts),
    }
}

/// `f(0..=n_max)` with no tail criterion.
/// Double precision first, extended when double cannot meet the error budget.
pub fn pmf_table_auto(spec: &ModelSpec<f64>, opts: &PmfOptions) -> Result<PmfTable> {
    match pmf_table_with(spec, opts) {
        Err(EdmError::Precision { .. }) => pmf_table_with(&spec.cast::<DoubleDouble>(), opts),
        other => other,
    }
}

pub fn pmf_prefix<T: Scalar>(spec: &ModelSpec<T>, n_max: usize) -> Result<PmfPrefix> {
    let mut stepper = PmfStepper::new(spec)?;
    let mut out = PmfPrefix {
        probs: Vec::with_capacity(n_max + 1),
        log_probs: Vec::with_capacity(n_max + 1),
        rel_error: Vec::with_capacity(n_max + 1),
    };
    for n in 0..=n_max {
        let term = stepper.term(n)?;
        out.probs.push(term.log_f.exp().to_f64_lossy());
        out.log_probs.push(term.log_f.to_f64_lossy());
        out.rel_error.push(term.rel_error);
    }
    Ok(out)
}

pub fn pmf_prefix_in(spec: &ModelSpec<f64>, n_max: usize, precision: Precision) -> Result<PmfPrefix> {
    match precision {
        Precision::Double => pmf_prefix(spec, n_max),
        Precision::Extended => pmf_prefix(&spec.cast::<DoubleDouble>(), n_max),
    }
}

/// Mean and variance summed over the table.
pub fn numeric_moments(table: &PmfTable) -> Result<(f64, f64)> {
    if !(table.tail_mass < 1e-8) {
        return Err(EdmError::HeavyTail { tail: table.tail_mass });
    }
    let mean: f64 = table.probs.iter().enumerate().map(|(n, f)| n as f64 * f).sum();
    let var: f64 = table
        .probs
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let d = n as f64 - mean;
            d * d * f
        })
        .sum();
    Ok((mean, var))
}

/// The analytic `r = 0` and `r = 1` members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineKind {
    Poisson,
    /// Variance `m (1 + m/p)`.
    NegativeBinomial {
        p: f64,
    },
}

/// `log f(k)` for a baseline, from log-gamma so it never underflows.
pub fn baseline_log_pmf(kind: BaselineKind, m: f64, k: usize) -> f64 {
    let k = k as f64;
    match kind {
        BaselineKind::Poisson => k * m.ln() - m - ln_gamma(k + 1.0),
        BaselineKind::NegativeBinomial { p } => {
            ln_gamma(k + p) - ln_gamma(p) - ln_gamma(k + 1.0) + p * (p / (p + m)).ln() + k * (m / (p + m)).ln()
        }
    }
}

pub fn baseline_pmf(kind: BaselineKind, m: f64) -> Result<PmfTable> {
    baseline_pmf_with(kind, m, &PmfOptions::default())
}

pub fn baseline_pmf_with(kind: BaselineKind, m: f64, opts: &PmfOptions) -> Result<PmfTable> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(EdmError::Domain {
            m,
            constraint: "m > 0".into(),
        });
    }
    // f(n) = f(n-1) * ratio(n)
    let (f0, source): (f64, PmfSource) = match kind {
        BaselineKind::Poisson => ((-m).exp(), PmfSource::Poisson),
        BaselineKind::NegativeBinomial { p } => {
            if !(p > 0.0) || !p.is_finite() {
                return Err(EdmError::InvalidParams(format!("p must be positive, got {p}")));
            }
            ((p * (p / (p + m)).ln()).exp(), PmfSource::NegativeBinomial { p })
        }
    };
    let ratio = |n: usize| -> f64 {
        let n = n as f64;
        match kind {
            BaselineKind::Poisson => m / n,
            BaselineKind::NegativeBinomial { p } => (n - 1.0 + p) / n * (m / (p + m)),
        }
    };
    let mut probs = vec![f0];
    let mut mass = f0;
    let mut f = f0;
    let mut n = 0;
    while mass < 1.0 - opts.eps {
        n += 1;
        if n > opts.cap {
            return Err(EdmError::CapReached {
                cap: opts.cap,
                tail: 1.0 - mass,
                eps: opts.eps,
            });
        }
        f *= ratio(n);
        probs.push(f);
        mass += f;
    }
    Ok(PmfTable {
        source,
        m,
        probs,
        tail_mass: 1.0 - mass,
        mass_error: mass * f64::EPSILON * (n + 1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::variance_function;
    use crate::series::{ClassId, VarianceParams};

    fn spec(params: VarianceParams<f64>, m: f64) -> ModelSpec<f64> {
        ModelSpec::new(params, m).unwrap()
    }

    #[test]
    fn abm_r2_p1_m1_values() {
        // Generalized Poisson with theta = lambda = 1/2:
        // f(n) = theta (theta + n lambda)^(n-1) e^(-theta - n lambda) / n!
        let table = pmf_table(&spec(VarianceParams::abm(2, 1.0).unwrap(), 1.0), 1e-10).unwrap();
        let closed = |n: usize| {
            let n_f = n as f64;
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            0.5 * (0.5 + 0.5 * n_f).powi(n as i32 - 1) * (-0.5 - 0.5 * n_f).exp() / fact
        };
        for n in 0..40 {
            assert!((table.probs()[n] - closed(n)).abs() < 1e-14, "n={n}");
        }
        let head = [0.60653, 0.18394, 0.08367, 0.04511];
        for (n, want) in head.iter().enumerate() {
            assert!((table.probs()[n] - want).abs() < 5e-6, "n={n}: {}", table.probs()[n]);
        }
    }

    #[test]
    fn zero_term_is_exp_minus_psi1() {
        for params in crate::series::test_grid().into_iter().step_by(7) {
            let m = if params.class() == ClassId::Lmns {
                0.3 * params.p()
            } else {
                0.4
            };
            let s = spec(params, m);
            let psi = crate::distributions::psi_functions(&s).unwrap();
            let prefix = pmf_prefix(&s, 0).unwrap();
            assert!((prefix.probs[0] - (-psi.psi1).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn lmns_large_p_approaches_poisson() {
        let s = spec(VarianceParams::lmns(1, 1e4).unwrap(), 1.0);
        let table = pmf_table(&s, 1e-12).unwrap();
        let poisson = baseline_pmf(BaselineKind::Poisson, 1.0).unwrap();
        for n in 0..12 {
            assert!((table.probs()[n] - poisson.probs()[n]).abs() < 5e-4, "n={n}");
        }
    }

    #[test]
    fn abm_moments_match_mean_and_variance() {
        let s = spec(VarianceParams::abm(2, 1.0).unwrap(), 1.0);
        let table = pmf_table(&s, 1e-14).unwrap();
        let (mean, var) = numeric_moments(&table).unwrap();
        assert!((mean - 1.0).abs() < 1e-6);
        assert!((var / 4.0 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lms_moments_match_variance_function() {
        let s = spec(VarianceParams::lms(1, 3.0, 1.0).unwrap(), 0.2);
        let table = pmf_table(&s, 1e-14).unwrap();
        let (mean, var) = numeric_moments(&table).unwrap();
        assert!((mean - 0.2).abs() < 1e-9);
        let v = variance_function(&s);
        assert!((var / v - 1.0).abs() < 1e-6, "{var} vs {v}");
    }

    #[test]
    fn heavy_tail_refused_by_moments() {
        let s = spec(VarianceParams::abm(2, 1.0).unwrap(), 1.0);
        let table = pmf_table(&s, 1e-3).unwrap();
        assert!(matches!(numeric_moments(&table), Err(EdmError::HeavyTail { .. })));
    }

    #[test]
    fn cap_reached_is_reported() {
        let s = spec(VarianceParams::abm(6, 0.5).unwrap(), 2.0);
        let opts = PmfOptions {
            cap: 50,
            ..PmfOptions::default()
        };
        assert!(matches!(
            pmf_table_with(&s, &opts),
            Err(EdmError::CapReached { cap: 50, .. })
        ));
    }

    #[test]
    fn invalid_eps_rejected() {
        let s = spec(VarianceParams::abm(2, 1.0).unwrap(), 1.0);
        assert!(pmf_table(&s, 0.0).is_err());
        assert!(pmf_table(&s, 1.0).is_err());
    }

    #[test]
    fn poisson_baseline() {
        let t = baseline_pmf(BaselineKind::Poisson, 1.0).unwrap();
        assert!((t.probs()[0] - (-1f64).exp()).abs() < 1e-16);
        let t = baseline_pmf(BaselineKind::Poisson, 0.155).unwrap();
        assert!((t.probs()[0] - 0.8564).abs() < 1e-4);
        let t = baseline_pmf(BaselineKind::Poisson, 0.5).unwrap();
        let (mean, var) = numeric_moments(&t).unwrap();
        assert!((mean - 0.5).abs() < 1e-9 && (var - 0.5).abs() < 1e-8);
    }

    #[test]
    fn negative_binomial_baseline_variance() {
        let t = baseline_pmf(BaselineKind::NegativeBinomial { p: 1.0 }, 1.0).unwrap();
        let (mean, var) = numeric_moments(&t).unwrap();
        assert!((mean - 1.0).abs() < 1e-8);
        assert!((var - 2.0).abs() < 1e-7);
    }

    #[test]
    fn extended_dispatch_agrees() {
        let s = spec(VarianceParams::lms(2, 5.0, 0.5).unwrap(), 0.5);
        let a = pmf_table_in(&s, &PmfOptions::default(), Precision::Double).unwrap();
        let b = pmf_table_in(&s, &PmfOptions::default(), Precision::Extended).unwrap();
        assert_eq!(a.probs().len(), b.probs().len());
        for (x, y) in a.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() <= 1e-9 * y + 1e-15, "{x} vs {y}");
        }
    }
}
