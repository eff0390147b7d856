use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EdmError, Result};
use crate::scalar::Scalar;

/// Relative p/b gap below which LMS coefficients are treated as singular.
pub const DEFAULT_SINGULARITY_THRESHOLD: f64 = 1e-6;

/// The three variance-function classes.
///
/// * ABM: `V(m) = m (1 + m/p)^r`, `r >= 2`
/// * LMS: `V(m) = m (1 + m/b) (1 + m/p)^r`, `r >= 1`
/// * LMNS: `V(m) = m / (1 - m/p)^r`, `r >= 1`, mean domain `(0, p)`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassId {
    Abm,
    Lms,
    Lmns,
}

impl ClassId {
    pub const ALL: [ClassId; 3] = [ClassId::Abm, ClassId::Lms, ClassId::Lmns];

    pub fn min_power(self) -> u32 {
        match self {
            ClassId::Abm => 2,
            ClassId::Lms | ClassId::Lmns => 1,
        }
    }

    /// Number of dispersion parameters besides the mean.
    pub fn dispersion_params(self) -> usize {
        match self {
            ClassId::Lms => 2,
            ClassId::Abm | ClassId::Lmns => 1,
        }
    }

    /// Index of the last basis function for power `r`.
    pub(crate) fn basis_len(self, r: u32) -> usize {
        let r = r as usize;
        match self {
            ClassId::Abm => r,
            ClassId::Lms => r + 1,
            ClassId::Lmns => r + 2,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassId::Abm => "ABM",
            ClassId::Lms => "LMS",
            ClassId::Lmns => "LMNS",
        })
    }
}

impl FromStr for ClassId {
    type Err = EdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abm" => Ok(ClassId::Abm),
            "lms" => Ok(ClassId::Lms),
            "lmns" => Ok(ClassId::Lmns),
            other => Err(EdmError::InvalidParams(format!("unknown class '{other}'"))),
        }
    }
}

/// Class, power and dispersion parameters of a variance function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceParams<T> {
    class: ClassId,
    r: u32,
    p: T,
    b: Option<T>,
    singular_threshold: f64,
}

impl<T: Scalar> VarianceParams<T> {
    pub fn new(class: ClassId, r: u32, p: T, b: Option<T>) -> Result<Self> {
        if r < class.min_power() {
            return Err(EdmError::InvalidParams(format!(
                "{class} requires r >= {}, got r = {r}",
                class.min_power()
            )));
        }
        if !(p > T::zero()) || !p.is_finite() {
            return Err(EdmError::InvalidParams(format!(
                "p must be positive and finite, got {p}"
            )));
        }
        match (class, b) {
            (ClassId::Lms, Some(b)) => {
                if !(b > T::zero()) || !b.is_finite() {
                    return Err(EdmError::InvalidParams(format!(
                        "b must be positive and finite, got {b}"
                    )));
                }
            }
            (ClassId::Lms, None) => {
                return Err(EdmError::InvalidParams("LMS requires the parameter b".into()));
            }
            (_, Some(_)) => {
                return Err(EdmError::InvalidParams(format!("{class} takes no parameter b")));
            }
            (_, None) => {}
        }
        Ok(VarianceParams {
            class,
            r,
            p,
            b,
            singular_threshold: DEFAULT_SINGULARITY_THRESHOLD,
        })
    }

    pub fn abm(r: u32, p: T) -> Result<Self> {
        Self::new(ClassId::Abm, r, p, None)
    }

    pub fn lms(r: u32, p: T, b: T) -> Result<Self> {
        Self::new(ClassId::Lms, r, p, Some(b))
    }

    pub fn lmns(r: u32, p: T) -> Result<Self> {
        Self::new(ClassId::Lmns, r, p, None)
    }

    pub fn with_singularity_threshold(mut self, threshold: f64) -> Self {
        self.singular_threshold = threshold;
        self
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn b(&self) -> Option<T> {
        self.b
    }

    pub fn singularity_threshold(&self) -> f64 {
        self.singular_threshold
    }

    /// `|p - b| / max(p, b)` for LMS, `None` otherwise.
    pub fn relative_gap(&self) -> Option<f64> {
        self.b.map(|b| {
            let p = self.p.to_f64_lossy();
            let b = b.to_f64_lossy();
            (p - b).abs() / p.max(b)
        })
    }

    /// Distance from the origin to the nearest singularity of the
    /// primitives; the kernel recurrence runs in `m / scale`.
    pub(crate) fn series_scale(&self) -> T {
        match (self.class, self.b) {
            (ClassId::Lms, Some(b)) => {
                if b < self.p {
                    b
                } else {
                    self.p
                }
            }
            _ => self.p,
        }
    }

    /// Convert to another scalar type through `f64`.
    pub fn cast<U: Scalar>(&self) -> VarianceParams<U> {
        VarianceParams {
            class: self.class,
            r: self.r,
            p: U::from_f64_lossy(self.p.to_f64_lossy()),
            b: self.b.map(|b| U::from_f64_lossy(b.to_f64_lossy())),
            singular_threshold: self.singular_threshold,
        }
    }

    /// `V(m)`; the caller checks the mean domain.
    pub fn variance_at(&self, m: T) -> T {
        let one = T::one();
        let r = self.r as i32;
        match self.class {
            ClassId::Abm => m * (one + m / self.p).powi(r),
            ClassId::Lms => {
                let b = self.b.expect("validated LMS has b");
                m * (one + m / b) * (one + m / self.p).powi(r)
            }
            ClassId::Lmns => m / (one - m / self.p).powi(r),
        }
    }
}

impl<T: Scalar> fmt::Display for VarianceParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(r={}, p={}", self.class, self.r, self.p)?;
        if let Some(b) = self.b {
            write!(f, ", b={b}")?;
        }
        f.write_str(")")
    }
}
