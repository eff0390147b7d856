use approx::assert_relative_eq;
use edm_core::distributions::{pmf_prefix, pmf_table, psi_functions, variance_function};
use edm_core::series::{kernel_mu_oracle, kernel_table};
use edm_core::{ClassId, DoubleDouble, EdmError, ModelSpec64, Scalar, VarianceParams};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = VarianceParams<f64>> {
    (0usize..3, 1u32..6, 0.3f64..30.0, 0.3f64..30.0).prop_filter_map("singular LMS", |(c, r, p, b)| {
        let class = ClassId::ALL[c];
        let r = r.max(class.min_power());
        let b = (class == ClassId::Lms).then_some(b);
        VarianceParams::new(class, r, p, b).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Near the LMS p = b ridge double precision loses digits; the table's
    // own error estimate has to cover what is lost.
    #[test]
    fn recurrence_matches_partition_sum(params in params()) {
        let oracle = params.cast::<DoubleDouble>();
        let (mu, est): (Vec<f64>, Vec<f64>) = match kernel_table(&params, 10) {
            Ok(t) => (t.mu().to_vec(), t.relative_error().to_vec()),
            // Refused in double; extended has to succeed.
            Err(EdmError::Precision { .. }) => {
                let t = kernel_table(&oracle, 10).unwrap();
                (t.mu().iter().map(|m| m.to_f64_lossy()).collect(), t.relative_error().to_vec())
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        for (n, (&mu, &est)) in mu.iter().zip(&est).enumerate() {
            let want = kernel_mu_oracle(&oracle, n).unwrap().to_f64_lossy();
            let rel = ((mu - want) / want).abs();
            prop_assert!(rel <= est + 1e-15, "n={} {} vs {}", n, mu, want);
            prop_assert!(mu > 0.0);
        }
    }

    #[test]
    fn probabilities_are_a_subprobability(params in params(), frac in 0.05f64..0.9) {
        // Stay inside the LMNS mean domain.
        let m = if params.class() == ClassId::Lmns { frac * params.p() } else { 2.0 * frac };
        let spec = ModelSpec64::new(params, m).unwrap();
        let prefix = pmf_prefix(&spec, 25).unwrap();
        prop_assert!(prefix.probs.iter().all(|&f| f >= 0.0));
        let slack: f64 = prefix.probs.iter().zip(&prefix.rel_error).map(|(f, e)| f * e).sum();
        prop_assert!(prefix.probs.iter().sum::<f64>() <= 1.0 + slack + 1e-12);
        let psi = psi_functions(&spec).unwrap();
        assert_relative_eq!(prefix.probs[0], (-psi.psi1).exp(), max_relative = 1e-12);
        prop_assert!(variance_function(&spec) > m);
    }
}

#[test]
fn light_tailed_members_normalize() {
    for (params, m) in [
        (VarianceParams::abm(2, 1.0).unwrap(), 1.0),
        (VarianceParams::lms(1, 5.0, 2.0).unwrap(), 0.5),
        (VarianceParams::lmns(3, 20.0).unwrap(), 2.0),
    ] {
        let spec = ModelSpec64::new(params, m).unwrap();
        let table = pmf_table(&spec, 1e-12).unwrap();
        let probs = table.probs();
        let mean: f64 = probs.iter().enumerate().map(|(n, f)| n as f64 * f).sum();
        let var: f64 = probs
            .iter()
            .enumerate()
            .map(|(n, f)| (n as f64 - mean).powi(2) * f)
            .sum();
        assert_relative_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(mean, m, max_relative = 1e-8);
        assert_relative_eq!(var, variance_function(&spec), max_relative = 1e-6);
    }
}
