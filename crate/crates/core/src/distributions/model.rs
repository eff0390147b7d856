use std::fmt;

use crate::error::{EdmError, Result};
use crate::scalar::Scalar;
use crate::series::{basis_value, coefficients, ClassId, CoefficientSet, VarianceParams};

/// A fully parameterized member of one of the classes: variance function
/// plus the mean `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec<T> {
    params: VarianceParams<T>,
    m: T,
}

impl<T: Scalar> ModelSpec<T> {
    pub fn new(params: VarianceParams<T>, m: T) -> Result<Self> {
        if !(m > T::zero()) || !m.is_finite() {
            return Err(EdmError::Domain {
                m: m.to_f64_lossy(),
                constraint: "m > 0".into(),
            });
        }
        if params.class() == ClassId::Lmns && !(m < params.p()) {
            return Err(EdmError::Domain {
                m: m.to_f64_lossy(),
                constraint: format!("LMNS requires m < p = {}", params.p()),
            });
        }
        Ok(ModelSpec { params, m })
    }

    pub fn params(&self) -> &VarianceParams<T> {
        &self.params
    }

    pub fn m(&self) -> T {
        self.m
    }

    pub fn cast<U: Scalar>(&self) -> ModelSpec<U> {
        ModelSpec {
            params: self.params.cast(),
            m: U::from_f64_lossy(self.m.to_f64_lossy()),
        }
    }
}

impl<T: Scalar> fmt::Display for ModelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at m={}", self.params, self.m)
    }
}

pub fn variance_function<T: Scalar>(spec: &ModelSpec<T>) -> T {
    spec.params.variance_at(spec.m)
}

/// `psi(m)`, `psi_0(m) = psi(m) - log m`, and `psi_1(m)` with absolute
/// error bounds for `psi` and `psi_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValues<T> {
    pub psi: T,
    pub psi0: T,
    pub psi1: T,
    pub psi_abs_error: f64,
    pub psi1_abs_error: f64,
}

pub fn psi_functions<T: Scalar>(spec: &ModelSpec<T>) -> Result<PsiValues<T>> {
    let set = coefficients(&spec.params)?;
    Ok(psi_from(&set, spec.m))
}

pub(crate) fn psi_from<T: Scalar>(set: &CoefficientSet<T>, m: T) -> PsiValues<T> {
    let params = set.params();
    let len = set.c_values().len();
    let eps = T::epsilon().to_f64_lossy();
    let mut psi0 = set.c0();
    let mut psi1 = set.d0();
    let mut mag0 = set.c0().abs().to_f64_lossy();
    let mut mag1 = set.d0().abs().to_f64_lossy();
    for i in 1..=len {
        let basis = basis_value(params, i, m);
        let basis_zero = basis_value(params, i, T::zero()).abs().to_f64_lossy();
        psi0 = psi0 + set.c(i) * basis;
        psi1 = psi1 + set.d(i) * basis;
        let bm = basis.abs().to_f64_lossy();
        mag0 += set.c_magnitude(i) * (bm + basis_zero);
        mag1 += set.d_magnitude(i) * (bm + basis_zero);
    }
    let log_m = m.ln();
    let factor = 8.0 * (len as f64 + 2.0) * eps;
    PsiValues {
        psi: psi0 + log_m,
        psi0,
        psi1,
        psi_abs_error: factor * (mag0 + log_m.abs().to_f64_lossy()),
        psi1_abs_error: factor * mag1,
    }
}
