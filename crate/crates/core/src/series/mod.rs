//! Coefficient systems, Taylor data of `H_n`, and the kernel sequence.

mod coefficients;
mod kernel;
mod params;
mod partitions;

pub(crate) use coefficients::basis_value;
pub use coefficients::{coefficients, h_coefficient, h_deriv_scaled, q_vector, CoefficientSet, HDerivScaled, QVector};
pub(crate) use kernel::KernelBuilder;
pub use kernel::{
    kernel_mu_oracle, kernel_mu_oracle_with_cap, kernel_table, kernel_table_with_tolerance, KernelTable,
    DEFAULT_MAX_RELATIVE_ERROR, DEFAULT_ORACLE_CAP,
};
pub use params::{ClassId, VarianceParams, DEFAULT_SINGULARITY_THRESHOLD};
pub use partitions::{enumerate_partitions, PartitionMultiset};

/// Every class, `r` from the class minimum to 6, `p` in {0.5, 1, 5, 20},
/// and `b` in {0.5, 2} for LMS with `p != b`.
#[cfg(test)]
pub(crate) fn test_grid() -> Vec<VarianceParams<f64>> {
    let mut out = Vec::new();
    for class in ClassId::ALL {
        for r in class.min_power()..=6 {
            for &p in &[0.5, 1.0, 5.0, 20.0] {
                match class {
                    ClassId::Lms => {
                        for &b in &[0.5, 2.0] {
                            if b != p {
                                out.push(VarianceParams::lms(r, p, b).unwrap());
                            }
                        }
                    }
                    _ => out.push(VarianceParams::new(class, r, p, None).unwrap()),
                }
            }
        }
    }
    out
}
