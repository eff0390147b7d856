use edm_core::distributions::{pmf_table, ModelSpec};
use edm_core::gof::PoolingRule;
use edm_core::inference::{
    fit_mle, fit_negative_binomial, fit_poisson, loglikelihood, select_model, CountDataset, FitConfig, FittedModel,
};
use edm_core::{ClassId, VarianceParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(params: VarianceParams<f64>, m: f64, draws: usize, seed: u64) -> CountDataset {
    let table = pmf_table(&ModelSpec::new(params, m).unwrap(), 1e-13).unwrap();
    let mut cdf = Vec::new();
    let mut acc = 0.0;
    for &f in table.probs() {
        acc += f;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..draws {
        let u = rng.gen::<f64>() * acc;
        counts[cdf.partition_point(|&c| c < u).min(cdf.len() - 1)] += 1;
    }
    while counts.last() == Some(&0) {
        counts.pop();
    }
    CountDataset::new("sim", counts, false).unwrap()
}

#[test]
fn recovers_lmns_dispersion() {
    let data = sample(VarianceParams::lmns(2, 3.0).unwrap(), 1.0, 50_000, 7);
    let fit = fit_mle(ClassId::Lmns, 2, &data, &FitConfig::default()).unwrap();
    let FittedModel::Edm { p, .. } = fit.model else {
        panic!()
    };
    assert!((p - 3.0).abs() < 0.3, "p = {p}");
    assert!(fit.converged);
}

#[test]
fn fitted_likelihood_beats_the_truth() {
    let truth = VarianceParams::abm(3, 2.0).unwrap();
    let data = sample(truth, 0.8, 20_000, 11);
    let fit = fit_mle(ClassId::Abm, 3, &data, &FitConfig::default()).unwrap();
    let m = fit.model.mean();
    let at_truth = loglikelihood(&ModelSpec::new(truth, m).unwrap(), &data).unwrap();
    assert!(fit.loglik >= at_truth.value - 1e-9);
}

#[test]
fn extra_parameters_never_lower_the_likelihood() {
    let data = sample(VarianceParams::abm(2, 1.0).unwrap(), 1.0, 5_000, 3);
    let cfg = FitConfig {
        pooling: PoolingRule::default(),
        ..FitConfig::default()
    };
    let poisson = fit_poisson(&data, &cfg).unwrap();
    let nb = fit_negative_binomial(&data, &cfg).unwrap();
    assert!(nb.loglik >= poisson.loglik);
    let sel = select_model(ClassId::Abm, &data, &cfg).unwrap();
    assert_eq!(sel.candidates.len(), 8);
    assert!(sel
        .candidates
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .all(|f| f.gof.p_value <= sel.best.gof.p_value));
}
