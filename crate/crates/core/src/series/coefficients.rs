//! Per-class primitives of `1/V` and `m/V`, and the Taylor data of
//! `H_n(m) = psi_1(m) + log psi_1'(m) - n psi_0(m)` at the origin.
//!
//! Each class writes its primitives over a fixed list of basis functions:
//!
//! | class | `i = 1..`               | then                              |
//! |-------|-------------------------|-----------------------------------|
//! | ABM   | `(m+p)^-i`, `i < r`     | `log(m+p)` at `i = r`             |
//! | LMS   | `(m+p)^-i`, `i < r`     | `log(m+p)` at `r`, `log(m+b)` at `r+1` |
//! | LMNS  | `m^i`, `i <= r`         | `(p-m)^(r+1)` at `r+1`, `log(p-m)` at `r+2` |
//!
//! With `psi_0 = sum c_i B_i + c0`, `psi_1 = sum d_i B_i + d0` and
//! `log psi_1' = l0 + sum l_i B_i`, the `H_n` weights are simply
//! `q_i = d_i + l_i - n c_i`.

use crate::error::{EdmError, Result};
use crate::scalar::{binomial, Scalar};

use super::params::{ClassId, VarianceParams};

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet<T> {
    params: VarianceParams<T>,
    /// `c[i-1]` multiplies basis `i` in the zero-constant primitive of `psi_0`.
    c: Vec<T>,
    /// `d[i-1]` multiplies basis `i` in the zero-constant primitive of `psi_1`.
    d: Vec<T>,
    /// `log psi_1'` expressed over the same basis.
    log_slope: Vec<T>,
    log_slope0: T,
    c0: T,
    d0: T,
    /// Magnitude bounds of the unreduced terms that produced `c` and `d`,
    /// used for running error estimates.
    c_mag: Vec<f64>,
    d_mag: Vec<f64>,
}

impl<T: Scalar> CoefficientSet<T> {
    pub fn params(&self) -> &VarianceParams<T> {
        &self.params
    }

    /// Coefficient `c_i`, `i >= 1`; zero outside the class's range.
    pub fn c(&self, i: usize) -> T {
        self.c.get(i.wrapping_sub(1)).copied().unwrap_or_else(T::zero)
    }

    pub fn d(&self, i: usize) -> T {
        self.d.get(i.wrapping_sub(1)).copied().unwrap_or_else(T::zero)
    }

    pub fn c_values(&self) -> &[T] {
        &self.c
    }

    pub fn d_values(&self) -> &[T] {
        &self.d
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn d0(&self) -> T {
        self.d0
    }

    pub(crate) fn log_slope(&self, i: usize) -> T {
        self.log_slope[i - 1]
    }

    pub(crate) fn basis_len(&self) -> usize {
        self.c.len()
    }

    /// Upper bound on `|d_i| + |l_i| + n |c_i|` before cancellation.
    pub(crate) fn weight_magnitude(&self, i: usize, n: usize) -> f64 {
        self.d_mag[i - 1] + self.log_slope[i - 1].abs().to_f64_lossy() + n as f64 * self.c_mag[i - 1]
    }

    pub(crate) fn c_magnitude(&self, i: usize) -> f64 {
        self.c_mag[i - 1]
    }

    pub(crate) fn d_magnitude(&self, i: usize) -> f64 {
        self.d_mag[i - 1]
    }

    /// `psi~_0(0) = sum c_i B_i(0)`, evaluated from the primitive itself.
    pub fn psi0_primitive_at_zero(&self) -> T {
        (1..=self.basis_len())
            .map(|i| self.c(i) * basis_value(&self.params, i, T::zero()))
            .fold(T::zero(), |a, x| a + x)
    }

    /// `psi~_1(0) = sum d_i B_i(0)`.
    pub fn psi1_primitive_at_zero(&self) -> T {
        (1..=self.basis_len())
            .map(|i| self.d(i) * basis_value(&self.params, i, T::zero()))
            .fold(T::zero(), |a, x| a + x)
    }
}

/// Basis function `B_i(m)` of the class.
pub(crate) fn basis_value<T: Scalar>(params: &VarianceParams<T>, i: usize, m: T) -> T {
    let r = params.r() as usize;
    let p = params.p();
    match params.class() {
        ClassId::Abm | ClassId::Lms => {
            if i < r {
                (m + p).powi(-(i as i32))
            } else if i == r {
                (m + p).ln()
            } else {
                (m + params.b().expect("validated LMS has b")).ln()
            }
        }
        ClassId::Lmns => {
            if i <= r {
                m.powi(i as i32)
            } else if i == r + 1 {
                (p - m).powi(r as i32 + 1)
            } else {
                (p - m).ln()
            }
        }
    }
}

/// Integration constants and basis coefficients for `params`.
///
/// `c0` and `d0` come from closed forms and are cross-checked against the
/// primitives evaluated at zero.
pub fn coefficients<T: Scalar>(params: &VarianceParams<T>) -> Result<CoefficientSet<T>> {
    let r = params.r() as usize;
    let p = params.p();
    let len = params.class().basis_len(params.r());
    let zero = T::zero();
    let one = T::one();
    let ti = |i: usize| T::from_usize_lossy(i);

    let mut c = vec![zero; len];
    let mut d = vec![zero; len];
    let mut log_slope = vec![zero; len];
    let (log_slope0, c0, d0, c_mag, d_mag);

    match params.class() {
        ClassId::Abm => {
            for i in 1..r {
                c[i - 1] = p.powi(i as i32) / ti(i);
            }
            c[r - 1] = -one;
            d[r - 2] = -p.powi(r as i32) / ti(r - 1);
            log_slope[r - 1] = -ti(r);
            log_slope0 = ti(r) * p.ln();
            let harmonic = (1..r).fold(zero, |acc, i| acc + one / ti(i));
            c0 = p.ln() - harmonic;
            d0 = p / ti(r - 1);
            c_mag = c.iter().map(|x| x.abs().to_f64_lossy()).collect::<Vec<_>>();
            d_mag = d.iter().map(|x| x.abs().to_f64_lossy()).collect::<Vec<_>>();
        }
        ClassId::Lms => {
            let b = params.b().expect("validated LMS has b");
            let gap = params.relative_gap().unwrap_or(f64::INFINITY);
            if !(gap >= params.singularity_threshold()) {
                return Err(EdmError::SingularParams {
                    gap,
                    threshold: params.singularity_threshold(),
                });
            }
            let rho = p / (p - b);
            let rho_r = rho.powi(r as i32);
            let mut cm = vec![0.0; len];
            let mut dm = vec![0.0; len];
            for i in 1..r {
                let rho_ri = rho.powi((r - i) as i32);
                let base = p.powi(i as i32) / ti(i);
                c[i - 1] = base * (one - rho_ri);
                d[i - 1] = b * base * rho_ri;
                cm[i - 1] = (base.abs() * (one + rho_ri.abs())).to_f64_lossy();
                dm[i - 1] = d[i - 1].abs().to_f64_lossy();
            }
            c[r - 1] = rho_r - one;
            c[r] = -rho_r;
            d[r - 1] = -b * rho_r;
            d[r] = b * rho_r;
            cm[r - 1] = (rho_r.abs() + one).to_f64_lossy();
            cm[r] = rho_r.abs().to_f64_lossy();
            dm[r - 1] = d[r - 1].abs().to_f64_lossy();
            dm[r] = d[r].abs().to_f64_lossy();
            log_slope[r - 1] = -ti(r);
            log_slope[r] = -one;
            log_slope0 = b.ln() + ti(r) * p.ln();
            // psi~_0(0) = sum_{i<r} (1 - rho^(r-i))/i + (rho^r - 1) log p - rho^r log b
            let log_ratio = (p / b).ln();
            let tail_c = (1..r).fold(zero, |acc, i| acc + (rho.powi((r - i) as i32) - one) / ti(i));
            c0 = tail_c + p.ln() - rho_r * log_ratio;
            let tail_d = (1..r).fold(zero, |acc, i| acc + rho.powi((r - i) as i32) / ti(i));
            d0 = b * (rho_r * log_ratio - tail_d);
            c_mag = cm;
            d_mag = dm;
        }
        ClassId::Lmns => {
            for i in 1..=r {
                let sign = if i % 2 == 0 { one } else { -one };
                c[i - 1] = sign * binomial::<T>(r, i) / (ti(i) * p.powi(i as i32));
            }
            d[r] = -one / (ti(r + 1) * p.powi(r as i32));
            log_slope[r + 1] = ti(r);
            log_slope0 = -ti(r) * p.ln();
            c0 = zero;
            d0 = p / ti(r + 1);
            c_mag = c.iter().map(|x| x.abs().to_f64_lossy()).collect::<Vec<_>>();
            d_mag = d.iter().map(|x| x.abs().to_f64_lossy()).collect::<Vec<_>>();
        }
    }

    let set = CoefficientSet {
        params: *params,
        c,
        d,
        log_slope,
        log_slope0,
        c0,
        d0,
        c_mag,
        d_mag,
    };
    verify_constants(&set)?;
    Ok(set)
}

/// Cross-check the closed-form constants against `-psi~(0)`.
fn verify_constants<T: Scalar>(set: &CoefficientSet<T>) -> Result<()> {
    let eps = T::epsilon().to_f64_lossy();
    let zero = T::zero();
    let mut scale0 = set.c0.abs().to_f64_lossy();
    let mut scale1 = set.d0.abs().to_f64_lossy();
    for i in 1..=set.basis_len() {
        let bz = basis_value(&set.params, i, zero).abs().to_f64_lossy();
        scale0 += set.c_mag[i - 1] * bz;
        scale1 += set.d_mag[i - 1] * bz;
    }
    let tol = |scale: f64| 64.0 * eps * (scale + 1.0) * set.basis_len() as f64;
    let mismatch0 = (set.c0 + set.psi0_primitive_at_zero()).abs().to_f64_lossy();
    let mismatch1 = (set.d0 + set.psi1_primitive_at_zero()).abs().to_f64_lossy();
    if mismatch0 > tol(scale0) || mismatch1 > tol(scale1) || !mismatch0.is_finite() || !mismatch1.is_finite() {
        return Err(EdmError::Precision {
            n: 0,
            detail: format!("integration constants disagree with primitives at zero ({mismatch0:e}, {mismatch1:e})"),
        });
    }
    Ok(())
}

/// Weights `q_0..q_last` of `H_n` over the class basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QVector<T> {
    n: usize,
    q: Vec<T>,
}

impl<T: Scalar> QVector<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `q[0]` is the constant; `q[i]` multiplies basis `i`.
    pub fn q(&self) -> &[T] {
        &self.q
    }

    /// `H_n(0)` reassembled from the weights, and the largest term in the sum.
    pub fn h_at_zero(&self, params: &VarianceParams<T>) -> (T, T) {
        let mut total = self.q[0];
        let mut largest = self.q[0].abs();
        for i in 1..self.q.len() {
            let term = self.q[i] * basis_value(params, i, T::zero());
            largest = largest.max(term.abs());
            total = total + term;
        }
        (total, largest)
    }
}

pub fn q_vector<T: Scalar>(params: &VarianceParams<T>, n: usize) -> Result<QVector<T>> {
    let set = coefficients(params)?;
    Ok(q_vector_from(&set, n))
}

pub(crate) fn q_vector_from<T: Scalar>(set: &CoefficientSet<T>, n: usize) -> QVector<T> {
    let tn = T::from_usize_lossy(n);
    let mut q = Vec::with_capacity(set.basis_len() + 1);
    q.push(set.d0 + set.log_slope0 - tn * set.c0);
    for i in 1..=set.basis_len() {
        q.push(set.d(i) + set.log_slope(i) - tn * set.c(i));
    }
    QVector { n, q }
}

/// `h(i, j) = B_i^(j)(0) / j!`.
pub fn h_coefficient<T: Scalar>(params: &VarianceParams<T>, i: usize, j: usize) -> T {
    scaled_h(params, i, j, T::one())
}

/// `h(i, j) * s^j`, arranged so no power of `p` or `b` above `s` is formed.
pub(crate) fn scaled_h<T: Scalar>(params: &VarianceParams<T>, i: usize, j: usize, s: T) -> T {
    let r = params.r() as usize;
    let p = params.p();
    let one = T::one();
    let alt = |k: usize| if k.is_multiple_of(2) { one } else { -one };
    let inv_j = one / T::from_usize_lossy(j);
    match params.class() {
        ClassId::Abm | ClassId::Lms => {
            if i < r {
                alt(j) * binomial::<T>(j + i - 1, j) * p.powi(-(i as i32)) * (s / p).powi(j as i32)
            } else if i == r {
                alt(j - 1) * inv_j * (s / p).powi(j as i32)
            } else {
                let b = params.b().expect("validated LMS has b");
                alt(j - 1) * inv_j * (s / b).powi(j as i32)
            }
        }
        ClassId::Lmns => {
            if i <= r {
                if i == j {
                    s.powi(j as i32)
                } else {
                    T::zero()
                }
            } else if i == r + 1 {
                if j <= r + 1 {
                    alt(j) * binomial::<T>(r + 1, j) * p.powi((r + 1) as i32) * (s / p).powi(j as i32)
                } else {
                    T::zero()
                }
            } else {
                -inv_j * (s / p).powi(j as i32)
            }
        }
    }
}

/// `H_n^(j)(0) / j!` for `j = 1..n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HDerivScaled<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> HDerivScaled<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `values()[j-1]` holds the entry for derivative order `j`.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, j: usize) -> T {
        self.values[j - 1]
    }
}

pub fn h_deriv_scaled<T: Scalar>(params: &VarianceParams<T>, n: usize) -> Result<HDerivScaled<T>> {
    let set = coefficients(params)?;
    Ok(h_deriv_scaled_from(&set, n))
}

pub(crate) fn h_deriv_scaled_from<T: Scalar>(set: &CoefficientSet<T>, n: usize) -> HDerivScaled<T> {
    let (values, _) = taylor_coefficients(set, n, T::one());
    HDerivScaled { n, values }
}

/// Taylor coefficients of `H_n(s x)` in `x` for orders `1..n-1`, with a
/// magnitude bound on the unreduced terms of each.
pub(crate) fn taylor_coefficients<T: Scalar>(set: &CoefficientSet<T>, n: usize, s: T) -> (Vec<T>, Vec<f64>) {
    let q = q_vector_from(set, n);
    let params = set.params();
    let len = set.basis_len();
    let weights_mag: Vec<f64> = (1..=len).map(|i| set.weight_magnitude(i, n)).collect();
    let mut values = Vec::with_capacity(n.saturating_sub(1));
    let mut mags = Vec::with_capacity(n.saturating_sub(1));
    for j in 1..n {
        let mut acc = T::zero();
        let mut mag = 0.0;
        for i in 1..=len {
            let h = scaled_h(params, i, j, s);
            acc = acc + q.q[i] * h;
            mag += weights_mag[i - 1] * h.abs().to_f64_lossy();
        }
        values.push(acc);
        mags.push(mag);
    }
    (values, mags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DoubleDouble;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn abm_r2_p1_coefficients() {
        let params = VarianceParams::abm(2, 1.0).unwrap();
        let set = coefficients(&params).unwrap();
        assert_eq!(set.c(1), 1.0);
        assert_eq!(set.c(2), -1.0);
        assert_eq!(set.d(1), -1.0);
        assert!(close(set.psi0_primitive_at_zero(), 1.0, 1e-15));
        assert!(close(set.c0(), -1.0, 1e-15));
        assert!(close(set.psi1_primitive_at_zero(), -1.0, 1e-15));
        assert!(close(set.d0(), 1.0, 1e-15));
    }

    #[test]
    fn abm_general_coefficients() {
        for r in 2..=7u32 {
            for &p in &[0.5, 1.0, 3.0, 20.0] {
                let set = coefficients(&VarianceParams::abm(r, p).unwrap()).unwrap();
                for i in 1..r as usize {
                    assert!(close(set.c(i), p.powi(i as i32) / i as f64, 1e-14));
                }
                assert_eq!(set.c(r as usize), -1.0);
                assert!(close(
                    set.d(r as usize - 1),
                    -p.powi(r as i32) / (r as f64 - 1.0),
                    1e-14
                ));
                let h: f64 = (1..r).map(|i| 1.0 / i as f64).sum();
                assert!(close(set.c0(), p.ln() - h, 1e-14));
                assert!(close(set.d0(), p / (r as f64 - 1.0), 1e-14));
            }
        }
    }

    #[test]
    fn lmns_r1_p2_coefficients() {
        let set = coefficients(&VarianceParams::lmns(1, 2.0).unwrap()).unwrap();
        assert!(close(set.c(1), -0.5, 1e-15));
        assert!(close(set.d(2), -0.25, 1e-15));
        assert_eq!(set.c0(), 0.0);
        assert!(close(set.d0(), 1.0, 1e-15));
    }

    #[test]
    fn lms_constants_match_primitives() {
        for r in 1..=6u32 {
            for &(p, b) in &[(0.5, 2.0), (5.0, 0.5), (20.0, 2.0), (1.0, 0.5)] {
                let set = coefficients(&VarianceParams::lms(r, p, b).unwrap()).unwrap();
                assert!(close(set.c0(), -set.psi0_primitive_at_zero(), 1e-12));
                assert!(close(set.d0(), -set.psi1_primitive_at_zero(), 1e-12));
            }
        }
    }

    #[test]
    fn lms_r1_partial_fractions() {
        // b p / ((m+b)(m+p)) = b p/(p-b) [1/(m+b) - 1/(m+p)]
        let (p, b) = (3.0, 1.0);
        let set = coefficients(&VarianceParams::lms(1, p, b).unwrap()).unwrap();
        assert!(close(set.d(1), -b * p / (p - b), 1e-15));
        assert!(close(set.d(2), b * p / (p - b), 1e-15));
    }

    #[test]
    fn lms_singularity_rejected() {
        let params = VarianceParams::lms(2, 1.0, 1.0 + 1e-8).unwrap();
        assert!(matches!(coefficients(&params), Err(EdmError::SingularParams { .. })));
        // Below the default band the constants only survive in extended precision.
        let relaxed = params.with_singularity_threshold(1e-9);
        assert!(matches!(coefficients(&relaxed), Err(EdmError::Precision { .. })));
        assert!(coefficients(&relaxed.cast::<crate::DoubleDouble>()).is_ok());
    }

    #[test]
    fn q_vector_abm_r2_p1() {
        let params = VarianceParams::abm(2, 1.0).unwrap();
        let q = q_vector(&params, 2).unwrap();
        assert!(close(q.q()[0], 3.0, 1e-15));
        assert!(close(q.q()[1], -3.0, 1e-15));
        assert_eq!(q.q()[2], 0.0);
        let (h0, _) = q.h_at_zero(&params);
        assert!(h0.abs() < 1e-15);

        let q3 = q_vector(&params, 3).unwrap();
        assert!(close(q3.q()[0], 4.0, 1e-15));
        assert!(close(q3.q()[1], -4.0, 1e-15));
        assert!(close(q3.q()[2], 1.0, 1e-15));
    }

    #[test]
    fn q_vector_abm_middle_weights() {
        let params = VarianceParams::abm(6, 2.5).unwrap();
        let set = coefficients(&params).unwrap();
        for n in 1..8 {
            let q = q_vector(&params, n).unwrap();
            for i in 1..=4 {
                assert!(close(q.q()[i], -(n as f64) * set.c(i), 1e-15));
            }
        }
    }

    #[test]
    fn q_vector_lmns_log_weight() {
        let q = q_vector(&VarianceParams::lmns(1, 2.0).unwrap(), 1).unwrap();
        assert_eq!(q.q()[3], 1.0);
    }

    #[test]
    fn h_coefficient_examples() {
        let abm = VarianceParams::abm(2, 1.0).unwrap();
        assert_eq!(h_coefficient(&abm, 1, 1), -1.0);
        assert!(close(h_coefficient(&abm, 2, 2), -0.5, 1e-15));
        let lmns = VarianceParams::lmns(1, 2.0).unwrap();
        for j in 3..10 {
            assert_eq!(h_coefficient(&lmns, 2, j), 0.0);
        }
        assert_eq!(h_coefficient(&lmns, 1, 1), 1.0);
        assert_eq!(h_coefficient(&lmns, 1, 2), 0.0);
    }

    #[test]
    fn h_coefficient_matches_finite_differences() {
        // Central differences of B_i around 0 for j = 1, 2.
        let cases = [
            VarianceParams::abm(3, 1.7).unwrap(),
            VarianceParams::lms(2, 2.0, 0.8).unwrap(),
            VarianceParams::lmns(2, 3.0).unwrap(),
        ];
        let step = 1e-4;
        for params in &cases {
            for i in 1..=params.class().basis_len(params.r()) {
                let f = |x: f64| basis_value(params, i, x);
                let d1 = (f(step) - f(-step)) / (2.0 * step);
                let d2 = (f(step) - 2.0 * f(0.0) + f(-step)) / (step * step) / 2.0;
                assert!(close(h_coefficient(params, i, 1), d1, 1e-6), "{params} i={i}");
                assert!(close(h_coefficient(params, i, 2), d2, 1e-5), "{params} i={i}");
            }
        }
    }

    #[test]
    fn h_deriv_scaled_abm_r2() {
        let params = VarianceParams::abm(2, 1.0).unwrap();
        let h2 = h_deriv_scaled(&params, 2).unwrap();
        assert_eq!(h2.values().len(), 1);
        assert!(close(h2.get(1), 3.0, 1e-15));
        let h3 = h_deriv_scaled(&params, 3).unwrap();
        assert!(close(h3.get(1), 5.0, 1e-15));
        assert!(close(h3.get(2), -4.5, 1e-15));
    }

    #[test]
    fn h_at_zero_vanishes_on_grid() {
        for params in crate::series::test_grid() {
            let set = coefficients(&params).unwrap();
            for n in 1..=50 {
                let q = q_vector_from(&set, n);
                let (h0, largest) = q.h_at_zero(&params);
                assert!(
                    h0.abs() <= 1e-10 * largest.max(1.0),
                    "{params} n={n} H={h0} scale={largest}"
                );
            }
        }
    }

    #[test]
    fn extended_constants_agree_with_double() {
        let p = VarianceParams::<DoubleDouble>::lms(3, DoubleDouble::new(4.0), DoubleDouble::new(1.5)).unwrap();
        let ext = coefficients(&p).unwrap();
        let dbl = coefficients(&p.cast::<f64>()).unwrap();
        assert!(close(ext.c0().to_f64_lossy(), dbl.c0(), 1e-13));
        assert!(close(ext.d0().to_f64_lossy(), dbl.d0(), 1e-13));
    }
}
