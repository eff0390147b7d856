use std::cell::Cell;
use std::fmt;

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::brent::BrentOpt;
use argmin::solver::neldermead::NelderMead;
use serde::{Deserialize, Serialize};

use crate::distributions::ModelSpec;
use crate::error::{EdmError, Result};
use crate::gof::{goodness_of_fit, GofReport, PoolingRule};
use crate::scalar::Precision;
use crate::series::{ClassId, VarianceParams};

use super::data::{empirical_stats, CountDataset};
use super::likelihood::{
    category_fit_auto, negative_binomial_category_fit, poisson_category_fit, CategoryFit, DEFAULT_LOGLIK_ERROR_LIMIT,
};

/// Stand-in cost for points where the likelihood cannot be evaluated.
/// Finite so the interpolating steps never see NaN.
const PENALTY: f64 = 1e100;
const MAX_RESTARTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub r_max: u32,
    /// Convergence tolerance on the log-scale search coordinates.
    pub tolerance: f64,
    pub max_iters: u64,
    /// Search box for `log(p / xbar)` (LMNS: `log((p - xbar) / xbar)`) and
    /// `log(b / xbar)`.
    pub log_bounds: (f64, f64),
    /// Starting dispersion parameters as multiples of the sample mean.
    pub start_multipliers: Vec<f64>,
    pub pooling: PoolingRule,
    pub precision: Precision,
    /// Retry a likelihood evaluation in extended precision when the double
    /// error bound is too large.
    pub escalate: bool,
    pub loglik_error_limit: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            r_max: 9,
            tolerance: 1e-8,
            max_iters: 2000,
            log_bounds: (-12.0, 16.0),
            start_multipliers: vec![1.0, 10.0, 100.0],
            pooling: PoolingRule::default(),
            precision: Precision::Double,
            escalate: true,
            loglik_error_limit: DEFAULT_LOGLIK_ERROR_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Edm {
        class: ClassId,
        r: u32,
        m: f64,
        p: f64,
        b: Option<f64>,
    },
    Poisson {
        m: f64,
    },
    NegativeBinomial {
        m: f64,
        p: f64,
    },
}

impl FittedModel {
    pub fn spec(&self) -> Option<ModelSpec<f64>> {
        match *self {
            FittedModel::Edm { class, r, m, p, b } => {
                let params = VarianceParams::new(class, r, p, b).ok()?;
                ModelSpec::new(params, m).ok()
            }
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            FittedModel::Edm { m, .. } | FittedModel::Poisson { m } | FittedModel::NegativeBinomial { m, .. } => m,
        }
    }

    /// Free parameters, the mean included.
    pub fn n_params(&self) -> usize {
        match self {
            FittedModel::Edm { class, .. } => 1 + class.dispersion_params(),
            FittedModel::Poisson { .. } => 1,
            FittedModel::NegativeBinomial { .. } => 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FittedModel::Edm { class, r, .. } => format!("{class}(r={r})"),
            FittedModel::Poisson { .. } => "Poisson".into(),
            FittedModel::NegativeBinomial { .. } => "NB".into(),
        }
    }
}

impl fmt::Display for FittedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FittedModel::Edm { m, p, b: Some(b), .. } => write!(f, "{} m={m} p={p} b={b}", self.label()),
            FittedModel::Edm { m, p, .. } | FittedModel::NegativeBinomial { m, p } => {
                write!(f, "{} m={m} p={p}", self.label())
            }
            FittedModel::Poisson { m } => write!(f, "Poisson m={m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    pub loglik: f64,
    pub loglik_error: f64,
    pub precision: Precision,
    /// `N f(k)` for `k = 0..K`; an open last category holds `N P(X >= K)`.
    pub expected: Vec<f64>,
    pub gof: GofReport,
    pub converged: bool,
    /// The best point sits on the edge of the search box.
    pub at_bound: bool,
    pub evaluations: u64,
}

/// Maps search coordinates to a model and scores it.
struct Objective<'a> {
    data: &'a CountDataset,
    cfg: &'a FitConfig,
    build: &'a dyn Fn(&[f64]) -> Result<FittedModel>,
    evaluations: Cell<u64>,
}

impl Objective<'_> {
    fn category_fit(&self, model: &FittedModel) -> Result<CategoryFit> {
        match *model {
            FittedModel::Edm { .. } => {
                let spec = model
                    .spec()
                    .ok_or_else(|| EdmError::InvalidParams(format!("{model}")))?;
                category_fit_auto(
                    &spec,
                    self.data,
                    self.cfg.precision,
                    self.cfg.escalate,
                    self.cfg.loglik_error_limit,
                )
            }
            FittedModel::Poisson { m } => poisson_category_fit(m, self.data),
            FittedModel::NegativeBinomial { m, p } => negative_binomial_category_fit(m, p, self.data),
        }
    }

    fn in_bounds(&self, x: &[f64]) -> bool {
        let (lo, hi) = self.cfg.log_bounds;
        x.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12)
    }

    /// Negative log-likelihood, or [`PENALTY`] where undefined.
    fn cost_at(&self, x: &[f64]) -> f64 {
        self.evaluations.set(self.evaluations.get() + 1);
        if !self.in_bounds(x) {
            return PENALTY;
        }
        match (self.build)(x).and_then(|m| self.category_fit(&m)) {
            Ok(fit) if fit.loglik.value.is_finite() => -fit.loglik.value,
            _ => PENALTY,
        }
    }
}

struct Scalar1<'a, 'b>(&'a Objective<'b>);

impl CostFunction for Scalar1<'_, '_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, u: &f64) -> std::result::Result<f64, ArgminError> {
        Ok(self.0.cost_at(&[*u]))
    }
}

struct Simplex<'a, 'b>(&'a Objective<'b>);

impl CostFunction for Simplex<'_, '_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, ArgminError> {
        Ok(self.0.cost_at(x))
    }
}

struct Incumbent {
    x: Vec<f64>,
    cost: f64,
    converged: bool,
}

fn better(a: Option<Incumbent>, b: Incumbent) -> Option<Incumbent> {
    match a {
        Some(a) if a.cost <= b.cost => Some(a),
        _ => Some(b),
    }
}

/// Walk downhill from `u0` with growing steps until the cost rises again.
/// Returns the bracket `(a, c)` or the boundary point the walk ran into.
fn bracket(obj: &Objective<'_>, u0: f64) -> std::result::Result<(f64, f64), (f64, f64)> {
    const GROW: f64 = 1.618_033_988_749_895;
    let (lo, hi) = obj.cfg.log_bounds;
    let f = |u: f64| obj.cost_at(&[u]);
    let u0 = u0.clamp(lo, hi);
    let f0 = f(u0);
    let h = 0.5;
    let (up, down) = ((u0 + h).min(hi), (u0 - h).max(lo));
    let (f_up, f_down) = (f(up), f(down));
    if f_up >= f0 && f_down >= f0 && f0 < PENALTY {
        return Ok((down, up));
    }
    let (dir, mut prev, mut cur, mut f_cur) = if f_up < f_down {
        (1.0, u0, up, f_up)
    } else {
        (-1.0, u0, down, f_down)
    };
    let mut step = h;
    loop {
        step *= GROW;
        let next = (cur + dir * step).clamp(lo, hi);
        if next == cur {
            return Err((cur, f_cur));
        }
        let f_next = f(next);
        if f_next > f_cur && f_cur < PENALTY {
            return Ok(if dir > 0.0 { (prev, next) } else { (next, prev) });
        }
        prev = cur;
        cur = next;
        f_cur = f_next;
    }
}

fn search_1d(obj: &Objective<'_>, starts: &[f64]) -> Option<Incumbent> {
    let mut best: Option<Incumbent> = None;
    for &u0 in starts {
        match bracket(obj, u0) {
            Err((u, cost)) => {
                if cost < PENALTY {
                    best = better(
                        best,
                        Incumbent {
                            x: vec![u],
                            cost,
                            converged: true,
                        },
                    );
                }
            }
            Ok((a, c)) => {
                let solver = BrentOpt::new(a, c).set_tolerance(0.0, obj.cfg.tolerance);
                let run = Executor::new(Scalar1(obj), solver)
                    .configure(|s| s.max_iters(obj.cfg.max_iters))
                    .run();
                if let Ok(res) = run {
                    let state = res.state();
                    let converged = matches!(
                        state.get_termination_status(),
                        TerminationStatus::Terminated(TerminationReason::SolverConverged)
                    );
                    if let Some(&u) = state.get_best_param() {
                        let cost = state.get_best_cost();
                        if cost < PENALTY {
                            best = better(
                                best,
                                Incumbent {
                                    x: vec![u],
                                    cost,
                                    converged,
                                },
                            );
                        }
                    }
                }
            }
        }
    }
    best
}

fn nelder_mead(obj: &Objective<'_>, x0: &[f64], step: f64) -> Option<Incumbent> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-12).ok()?;
    let res = Executor::new(Simplex(obj), solver)
        .configure(|s| s.max_iters(obj.cfg.max_iters))
        .run()
        .ok()?;
    let state = res.state();
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    let x = state.get_best_param()?.clone();
    Some(Incumbent {
        x,
        cost: state.get_best_cost(),
        converged,
    })
}

/// Simplex search restarted from its own optimum until a fresh simplex
/// neither moves the point by more than the tolerance nor improves the cost.
fn search_2d(obj: &Objective<'_>, starts: &[Vec<f64>]) -> Option<Incumbent> {
    let mut best: Option<Incumbent> = None;
    for x0 in starts {
        if obj.cost_at(x0) >= PENALTY {
            continue;
        }
        let Some(mut cur) = nelder_mead(obj, x0, 0.5) else {
            continue;
        };
        let mut settled = false;
        for _ in 0..MAX_RESTARTS {
            let Some(next) = nelder_mead(obj, &cur.x, 0.05) else {
                break;
            };
            let moved = next
                .x
                .iter()
                .zip(&cur.x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let gain = cur.cost - next.cost;
            let done = moved <= obj.cfg.tolerance.max(1e-6) || gain <= 1e-9 * (1.0 + cur.cost.abs()) * 1e-3;
            if next.cost <= cur.cost {
                cur = next;
            }
            if done {
                settled = cur.converged;
                break;
            }
        }
        cur.converged = settled;
        if cur.cost < PENALTY {
            best = better(best, cur);
        }
    }
    best
}

fn finish(obj: &Objective<'_>, model: FittedModel, x: &[f64], converged: bool) -> Result<FitResult> {
    let fit = obj.category_fit(&model)?;
    let total = obj.data.total();
    let expected = fit.expected(total);
    let chi2_expected = fit.expected_with_tail(total);
    let gof = goodness_of_fit(
        &obj.data.observed(),
        &expected,
        &chi2_expected,
        model.n_params(),
        &obj.cfg.pooling,
    )?;
    let (lo, hi) = obj.cfg.log_bounds;
    let edge = 1e-6 * (hi - lo);
    Ok(FitResult {
        model,
        loglik: fit.loglik.value,
        loglik_error: fit.loglik.abs_error,
        precision: fit.loglik.precision,
        expected,
        gof,
        converged,
        at_bound: x.iter().any(|&v| v <= lo + edge || v >= hi - edge),
        evaluations: obj.evaluations.get(),
    })
}

fn sample_mean(data: &CountDataset) -> Result<f64> {
    let stats = empirical_stats(data)?;
    if !(stats.mean > 0.0) {
        return Err(EdmError::Dataset("sample mean is zero".into()));
    }
    Ok(stats.mean)
}

fn check_config(cfg: &FitConfig) -> Result<()> {
    let (lo, hi) = cfg.log_bounds;
    if !(lo < hi) || !(cfg.tolerance > 0.0) || cfg.start_multipliers.iter().any(|&s| !(s > 0.0)) {
        return Err(EdmError::InvalidParams(
            "fit config needs lo < hi, a positive tolerance and positive start multipliers".into(),
        ));
    }
    if cfg.start_multipliers.is_empty() {
        return Err(EdmError::InvalidParams("fit config has no start points".into()));
    }
    Ok(())
}

/// Maximum likelihood for `p` (and `b` for LMS) with the mean fixed at the
/// sample mean.
pub fn fit_mle(class: ClassId, r: u32, data: &CountDataset, cfg: &FitConfig) -> Result<FitResult> {
    check_config(cfg)?;
    if r < class.min_power() {
        return Err(EdmError::InvalidParams(format!(
            "{class} needs r >= {}, got {r}",
            class.min_power()
        )));
    }
    let m = sample_mean(data)?;
    let log_m = m.ln();
    let build = move |x: &[f64]| -> Result<FittedModel> {
        let (p, b) = match class {
            ClassId::Abm => ((x[0] + log_m).exp(), None),
            ClassId::Lmns => (m + (x[0] + log_m).exp(), None),
            ClassId::Lms => ((x[0] + log_m).exp(), Some((x[1] + log_m).exp())),
        };
        // Validate eagerly so the singular band and bad values surface here.
        VarianceParams::new(class, r, p, b)?;
        Ok(FittedModel::Edm { class, r, m, p, b })
    };
    let obj = Objective {
        data,
        cfg,
        build: &build,
        evaluations: Cell::new(0),
    };
    let logs: Vec<f64> = cfg.start_multipliers.iter().map(|s| s.ln()).collect();
    let best = match class {
        ClassId::Lms => {
            // Start on both sides of the p = b ridge.
            let starts: Vec<Vec<f64>> = logs
                .iter()
                .flat_map(|&u| [vec![u, u - 1.0], vec![u, u + 1.0]])
                .collect();
            search_2d(&obj, &starts)
        }
        _ => search_1d(&obj, &logs),
    };
    let Some(best) = best else {
        return Err(EdmError::NonConvergence {
            model: format!("{class}(r={r})"),
            best_loglik: f64::NEG_INFINITY,
        });
    };
    let model = build(&best.x)?;
    finish(&obj, model, &best.x, best.converged)
}

/// Poisson fit: the mean is the only parameter.
pub fn fit_poisson(data: &CountDataset, cfg: &FitConfig) -> Result<FitResult> {
    let m = sample_mean(data)?;
    let build = |_: &[f64]| -> Result<FittedModel> { Ok(FittedModel::Poisson { m }) };
    let obj = Objective {
        data,
        cfg,
        build: &build,
        evaluations: Cell::new(1),
    };
    finish(&obj, FittedModel::Poisson { m }, &[0.0], true)
}

/// Negative binomial fit of the shape `p` at the sample mean.
pub fn fit_negative_binomial(data: &CountDataset, cfg: &FitConfig) -> Result<FitResult> {
    check_config(cfg)?;
    let m = sample_mean(data)?;
    let log_m = m.ln();
    let build = move |x: &[f64]| -> Result<FittedModel> {
        Ok(FittedModel::NegativeBinomial {
            m,
            p: (x[0] + log_m).exp(),
        })
    };
    let obj = Objective {
        data,
        cfg,
        build: &build,
        evaluations: Cell::new(0),
    };
    let logs: Vec<f64> = cfg.start_multipliers.iter().map(|s| s.ln()).collect();
    let best = search_1d(&obj, &logs).ok_or_else(|| EdmError::NonConvergence {
        model: "NB".into(),
        best_loglik: f64::NEG_INFINITY,
    })?;
    let model = build(&best.x)?;
    finish(&obj, model, &best.x, best.converged)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub r: u32,
    pub outcome: std::result::Result<FitResult, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: FitResult,
    pub candidates: Vec<Candidate>,
}

impl Selection {
    pub fn failures(&self) -> impl Iterator<Item = (u32, &str)> {
        self.candidates
            .iter()
            .filter_map(|c| c.outcome.as_ref().err().map(|e| (c.r, e.as_str())))
    }
}

/// Fits every `r` from the class minimum to `cfg.r_max` concurrently and
/// keeps the largest chi-square p-value; ties go to the smaller `r`.
pub fn select_model(class: ClassId, data: &CountDataset, cfg: &FitConfig) -> Result<Selection> {
    let lo = class.min_power();
    if cfg.r_max < lo {
        return Err(EdmError::InvalidParams(format!(
            "r_max {} below the {class} minimum {lo}",
            cfg.r_max
        )));
    }
    let candidates: Vec<Candidate> = std::thread::scope(|scope| {
        let handles: Vec<_> = (lo..=cfg.r_max)
            .map(|r| (r, scope.spawn(move || fit_mle(class, r, data, cfg))))
            .collect();
        handles
            .into_iter()
            .map(|(r, h)| {
                let outcome = match h.join() {
                    Ok(res) => res.map_err(|e| e.to_string()),
                    Err(_) => Err("fit panicked".to_string()),
                };
                Candidate { r, outcome }
            })
            .collect()
    });
    let mut best: Option<&FitResult> = None;
    for c in &candidates {
        if let Ok(fit) = &c.outcome {
            if best.is_none_or(|b| fit.gof.p_value > b.gof.p_value) {
                best = Some(fit);
            }
        }
    }
    let Some(best) = best.cloned() else {
        let reasons: Vec<String> = candidates
            .iter()
            .map(|c| format!("r={}: {}", c.r, c.outcome.as_ref().err().map_or("", |s| s.as_str())))
            .collect();
        return Err(EdmError::NonConvergence {
            model: format!("{class} for every r ({})", reasons.join("; ")),
            best_loglik: f64::NEG_INFINITY,
        });
    };
    Ok(Selection { best, candidates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{numeric_moments, pmf_table};

    fn t4() -> CountDataset {
        CountDataset::new("t4", vec![70, 38, 17, 10, 9, 3, 2, 1, 0], false).unwrap()
    }

    fn t1() -> CountDataset {
        CountDataset::new("t1", vec![103704, 14075, 1766, 255, 45, 6, 2], false).unwrap()
    }

    #[test]
    fn abm_r2_on_red_mites() {
        let fit = fit_mle(ClassId::Abm, 2, &t4(), &FitConfig::default()).unwrap();
        let want = [68.85, 38.90, 20.04, 10.35, 5.43, 2.90, 1.57, 0.86, 0.48];
        for (e, w) in fit.expected.iter().zip(want) {
            assert!((e - w).abs() < 0.5, "{e} vs {w}");
        }
        assert!((fit.loglik + 222.75).abs() < 0.1);
        assert!(fit.converged && !fit.at_bound);
        assert!(fit.expected.iter().sum::<f64>() <= 150.0 + 1e-6);
    }

    #[test]
    fn optimum_is_local_maximum() {
        let data = t1();
        let fit = fit_mle(ClassId::Lmns, 1, &data, &FitConfig::default()).unwrap();
        let FittedModel::Edm { m, p, .. } = fit.model else {
            panic!()
        };
        for scale in [1.0 - 1e-3, 1.0 + 1e-3] {
            let spec = ModelSpec::new(VarianceParams::lmns(1, p * scale).unwrap(), m).unwrap();
            let l = super::super::loglikelihood(&spec, &data).unwrap().value;
            assert!(l <= fit.loglik + 1e-6, "{l} > {}", fit.loglik);
        }
    }

    #[test]
    fn mean_is_held_at_sample_mean() {
        let data = t4();
        let xbar = empirical_stats(&data).unwrap().mean;
        let fit = fit_mle(ClassId::Abm, 2, &data, &FitConfig::default()).unwrap();
        let table = pmf_table(&fit.model.spec().unwrap(), 1e-12).unwrap();
        let (mean, _) = numeric_moments(&table).unwrap();
        assert!((mean - xbar).abs() < 1e-6);
    }

    #[test]
    fn deterministic() {
        let a = fit_mle(ClassId::Lms, 1, &t4(), &FitConfig::default()).unwrap();
        let b = fit_mle(ClassId::Lms, 1, &t4(), &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_binomial_nests_poisson() {
        let data = t1();
        let cfg = FitConfig::default();
        let nb = fit_negative_binomial(&data, &cfg).unwrap();
        let po = fit_poisson(&data, &cfg).unwrap();
        assert!(nb.loglik > po.loglik);
        assert!(nb.converged && !nb.at_bound);
        let FittedModel::NegativeBinomial { m, p } = nb.model else {
            panic!()
        };
        for scale in [1.0 - 1e-3, 1.0 + 1e-3] {
            let l = negative_binomial_category_fit(m, p * scale, &data)
                .unwrap()
                .loglik
                .value;
            assert!(l <= nb.loglik + 1e-6);
        }
    }

    #[test]
    fn poisson_baseline() {
        let fit = fit_poisson(&t4(), &FitConfig::default()).unwrap();
        assert_eq!(fit.model.n_params(), 1);
        assert!(fit.loglik < -222.75);
    }

    #[test]
    fn selection_on_red_mites() {
        let sel = select_model(ClassId::Abm, &t4(), &FitConfig::default()).unwrap();
        assert!(matches!(sel.best.model, FittedModel::Edm { r: 2, .. }));
        assert_eq!(sel.candidates.len(), 8);
        assert_eq!(sel.failures().count(), 0);
    }

    #[test]
    fn bad_inputs() {
        let cfg = FitConfig::default();
        assert!(fit_mle(ClassId::Abm, 1, &t4(), &cfg).is_err());
        let zero = CountDataset::new("z", vec![10], false).unwrap();
        assert!(fit_mle(ClassId::Abm, 2, &zero, &cfg).is_err());
        let low = FitConfig {
            r_max: 1,
            ..FitConfig::default()
        };
        assert!(select_model(ClassId::Abm, &t4(), &low).is_err());
    }
}
