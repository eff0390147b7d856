//! Mean-parameterized densities `f_m(n) = mu_n exp(n psi(m) - psi_1(m))`.

mod model;
mod pmf;

pub use model::{psi_functions, variance_function, ModelSpec, PsiValues};
pub use pmf::{
    baseline_log_pmf, baseline_pmf, baseline_pmf_with, numeric_moments, pmf_prefix, pmf_prefix_in, pmf_table,
    pmf_table_auto, pmf_table_in, pmf_table_with, BaselineKind, PmfOptions, PmfPrefix, PmfSource, PmfTable,
    DEFAULT_MAX_MASS_ERROR, DEFAULT_TAIL_EPS, DEFAULT_TERM_CAP,
};
