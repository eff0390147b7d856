//! Empirical statistics, likelihood, maximum-likelihood fits and model
//! selection with the mean fixed at the sample mean.

mod data;
mod fit;
mod likelihood;

pub use data::{empirical_stats, CountDataset, EmpiricalStats};
pub use fit::{
    fit_mle, fit_negative_binomial, fit_poisson, select_model, Candidate, FitConfig, FitResult, FittedModel, Selection,
};
pub use likelihood::{
    category_fit, category_fit_auto, loglikelihood, negative_binomial_category_fit, poisson_category_fit, CategoryFit,
    LogLikelihood, DEFAULT_LOGLIK_ERROR_LIMIT,
};
