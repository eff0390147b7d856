//! The subcommands, as functions from requests to report documents.

use std::path::PathBuf;

use edm_core::distributions::{
    baseline_log_pmf, baseline_pmf_with, pmf_prefix_in, pmf_table_in, BaselineKind, ModelSpec, PmfOptions,
};
use edm_core::gof::PoolingRule;
use edm_core::inference::{
    empirical_stats, fit_mle, fit_negative_binomial, fit_poisson, select_model, CountDataset, FitConfig, FitResult,
};
use edm_core::{ClassId, EdmError, Precision, VarianceParams};
use thiserror::Error;

use crate::builtin::{builtin, builtin_table, dataset_digest, Builtin, Printed, BUILTINS};
use crate::dataset::{read_dataset, ParseError};
use crate::report::{Check, DatasetInfo, FitRow, PmfReport, PmfRow, ReferenceRow, ReportDocument};

pub const COUNT_TOL: f64 = 0.5;
pub const LOGLIK_TOL: f64 = 0.1;
pub const CHI2_TOL: f64 = 0.05;
pub const P_VALUE_TOL: f64 = 0.01;
pub const RMSE_TOL: f64 = 0.1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compute(#[from] EdmError),
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

impl CliError {
    /// 2 for bad input, 3 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Compute(_) | CliError::Write { .. } => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    Abm,
    Lms,
    Lmns,
    Poisson,
    Nb,
}

impl Family {
    pub fn class(self) -> Option<ClassId> {
        match self {
            Family::Abm => Some(ClassId::Abm),
            Family::Lms => Some(ClassId::Lms),
            Family::Lmns => Some(ClassId::Lmns),
            Family::Poisson | Family::Nb => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetRef {
    Builtin(String),
    File(PathBuf),
}

pub struct Loaded {
    pub data: CountDataset,
    pub builtin: Option<&'static Builtin>,
}

impl Loaded {
    fn info(&self) -> DatasetInfo {
        DatasetInfo {
            name: self.data.name().to_string(),
            source: self.builtin.map(|b| b.source.to_string()),
            counts: self.data.counts().to_vec(),
            open_tail: self.data.open_tail(),
            sha256: dataset_digest(&self.data),
        }
    }
}

pub fn load(src: &DatasetRef) -> CliResult<Loaded> {
    match src {
        DatasetRef::Builtin(name) => {
            let b = builtin(name).ok_or_else(|| {
                let names: Vec<&str> = BUILTINS.iter().map(|b| b.name).collect();
                CliError::Usage(format!("unknown built-in dataset '{name}' (have {})", names.join(", ")))
            })?;
            Ok(Loaded {
                data: b.dataset(),
                builtin: Some(b),
            })
        }
        DatasetRef::File(path) => Ok(Loaded {
            data: read_dataset(path)?,
            builtin: None,
        }),
    }
}

pub fn stats(src: &DatasetRef) -> CliResult<ReportDocument> {
    let loaded = load(src)?;
    let mut doc = ReportDocument::new(format!("Empirical statistics: {}", loaded.data.name()));
    doc.stats = Some(empirical_stats(&loaded.data)?);
    doc.dataset = Some(loaded.info());
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfRequest {
    pub family: Family,
    pub r: Option<u32>,
    pub p: Option<f64>,
    pub b: Option<f64>,
    pub m: f64,
    /// Largest `n`; without it the table runs until the mass reaches `1 - eps`.
    pub n_max: Option<usize>,
    pub eps: f64,
    pub precision: Precision,
}

pub fn pmf(req: &PmfRequest) -> CliResult<ReportDocument> {
    let opts = PmfOptions {
        eps: req.eps,
        ..PmfOptions::default()
    };
    let (label, probs) = match req.family.class() {
        Some(class) => {
            let r = req.r.ok_or_else(|| CliError::Usage(format!("{class} needs -r")))?;
            let p = req.p.ok_or_else(|| CliError::Usage(format!("{class} needs -p")))?;
            if class == ClassId::Lms && req.b.is_none() {
                return Err(CliError::Usage("LMS needs -b".into()));
            }
            let b = if class == ClassId::Lms { req.b } else { None };
            let spec = ModelSpec::new(VarianceParams::new(class, r, p, b)?, req.m)?;
            let probs = match req.n_max {
                Some(n) => pmf_prefix_in(&spec, n, req.precision)?.probs,
                None => pmf_table_in(&spec, &opts, req.precision)?.probs().to_vec(),
            };
            let label = match b {
                Some(b) => format!("{class}(r={r}) p={p} b={b}"),
                None => format!("{class}(r={r}) p={p}"),
            };
            (label, probs)
        }
        None => {
            let kind = match req.family {
                Family::Nb => BaselineKind::NegativeBinomial {
                    p: req.p.ok_or_else(|| CliError::Usage("NB needs -p".into()))?,
                },
                _ => BaselineKind::Poisson,
            };
            // Validates m and p even when a prefix is requested.
            let table = baseline_pmf_with(kind, req.m, &opts)?;
            let probs = match req.n_max {
                Some(n) => (0..=n).map(|k| baseline_log_pmf(kind, req.m, k).exp()).collect(),
                None => table.probs().to_vec(),
            };
            let label = match kind {
                BaselineKind::NegativeBinomial { p } => format!("NB p={p}"),
                BaselineKind::Poisson => "Poisson".to_string(),
            };
            (label, probs)
        }
    };
    let mut total = 0.0;
    let rows = probs
        .iter()
        .enumerate()
        .map(|(n, &f)| {
            total += f;
            PmfRow {
                n,
                f,
                cumulative: total,
            }
        })
        .collect();
    let mut doc = ReportDocument::new(format!("Probability mass function: {label}"));
    doc.pmf = Some(PmfReport {
        model: label,
        m: req.m,
        precision: req.precision,
        rows,
    });
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRequest {
    pub family: Family,
    pub r: Option<u32>,
    pub select: bool,
    pub r_max: u32,
    pub min_expected: Option<f64>,
    pub cut: Option<usize>,
    pub precision: Precision,
}

pub fn fit(src: &DatasetRef, req: &FitRequest) -> CliResult<ReportDocument> {
    let loaded = load(src)?;
    let class = req.family.class();
    let mut pooling = match loaded.builtin {
        Some(b) => b.pooling(class),
        None => PoolingRule::default(),
    };
    if let Some(cut) = req.cut {
        pooling.explicit_cut = Some(cut);
    }
    if let Some(min) = req.min_expected {
        pooling.min_expected = min;
    }
    let cfg = FitConfig {
        r_max: req.r_max,
        pooling,
        precision: req.precision,
        ..FitConfig::default()
    };
    let data = &loaded.data;
    let row = match (class, req.select, req.r) {
        (None, true, _) => return Err(CliError::Usage("--select applies to abm, lms and lmns".into())),
        (None, false, _) if req.family == Family::Poisson => {
            let f = fit_poisson(data, &cfg)?;
            FitRow::new(f.model.label(), &f)
        }
        (None, false, _) => {
            let f = fit_negative_binomial(data, &cfg)?;
            FitRow::new(f.model.label(), &f)
        }
        (Some(_), true, Some(_)) => return Err(CliError::Usage("give either -r or --select, not both".into())),
        (Some(c), true, None) => {
            let sel = select_model(c, data, &cfg)?;
            FitRow::from_selection(format!("{} selected", sel.best.model.label()), &sel)
        }
        (Some(c), false, Some(r)) => {
            let f = fit_mle(c, r, data, &cfg)?;
            FitRow::new(f.model.label(), &f)
        }
        (Some(c), false, None) => return Err(CliError::Usage(format!("{c} needs -r or --select"))),
    };
    let mut doc = ReportDocument::new(format!("Fit: {} to {}", row.label, data.name()));
    doc.stats = empirical_stats(data).ok();
    doc.dataset = Some(loaded.info());
    if !row.converged {
        doc.notes
            .push(format!("{} did not converge; the incumbent is shown", row.label));
    }
    doc.fits.push(row);
    Ok(doc)
}

fn reference_row(c: &crate::builtin::ReferenceColumn) -> ReferenceRow {
    ReferenceRow {
        label: c.label.to_string(),
        counts: c.counts.iter().map(|p| p.0.to_string()).collect(),
        loglik: c.loglik.0.into(),
        chi2: c.chi2.0.into(),
        df: c.df,
        p_value: c.p_value.0.into(),
        rmse: c.rmse.0.into(),
    }
}

fn push_check(out: &mut Vec<Check>, column: &str, quantity: &str, printed: Printed, computed: f64, tol: f64) {
    if let Some(want) = printed.value() {
        out.push(Check::new(column, quantity, printed.0, want, computed, tol));
    }
}

/// Deltas of one fitted column against its published values.
pub fn column_checks(c: &crate::builtin::ReferenceColumn, fit: &FitResult) -> Vec<Check> {
    let mut out = Vec::new();
    for (k, (printed, &e)) in c.counts.iter().zip(&fit.expected).enumerate() {
        push_check(&mut out, c.label, &format!("n={k}"), *printed, e, COUNT_TOL);
    }
    push_check(&mut out, c.label, "L", c.loglik, fit.loglik, LOGLIK_TOL);
    push_check(&mut out, c.label, "chi2", c.chi2, fit.gof.chi2, CHI2_TOL);
    out.push(Check::new(
        c.label,
        "df",
        &c.df.to_string(),
        c.df as f64,
        fit.gof.df as f64,
        0.0,
    ));
    push_check(&mut out, c.label, "p-value", c.p_value, fit.gof.p_value, P_VALUE_TOL);
    push_check(
        &mut out,
        c.label,
        "RMSE",
        c.rmse,
        fit.gof.rmse,
        c.rmse_tol.unwrap_or(RMSE_TOL),
    );
    out
}

pub fn reproduce(table: u8, precision: Precision) -> CliResult<ReportDocument> {
    let b = builtin_table(table).ok_or_else(|| CliError::Usage(format!("unknown table {table}; tables are 1 to 6")))?;
    let data = b.dataset();
    let columns: Vec<_> = b.model_columns().collect();
    let fits: Vec<Result<FitResult, EdmError>> = std::thread::scope(|s| {
        let handles: Vec<_> = columns
            .iter()
            .map(|&(_, class, r)| {
                let cfg = FitConfig {
                    pooling: b.pooling(Some(class)),
                    precision,
                    ..FitConfig::default()
                };
                let data = &data;
                s.spawn(move || fit_mle(class, r, data, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });
    let mut doc = ReportDocument::new(format!("Table {table}: {}", b.source));
    doc.stats = empirical_stats(&data).ok();
    doc.dataset = Some(
        Loaded {
            data: data.clone(),
            builtin: Some(b),
        }
        .info(),
    );
    doc.references = b.columns.iter().map(reference_row).collect();
    for (&(col, _, _), fit) in columns.iter().zip(&fits) {
        match fit {
            Ok(f) => {
                doc.fits.push(FitRow::new(col.label, f));
                doc.checks.extend(column_checks(col, f));
            }
            Err(e) => doc.errors.push(format!("{}: {e}", col.label)),
        }
    }
    Ok(doc)
}

/// Recomputes the built-in digests.
pub fn self_check() -> CliResult<ReportDocument> {
    let mut doc = ReportDocument::new("Built-in dataset self-check");
    for b in &BUILTINS {
        let digest = b.digest();
        let same = digest == b.sha256;
        doc.checks.push(Check::new(
            b.name,
            "sha256",
            &b.sha256[..12],
            1.0,
            same as u8 as f64,
            0.0,
        ));
        if !same {
            doc.notes
                .push(format!("{}: digest {digest}, pinned {}", b.name, b.sha256));
        }
    }
    Ok(doc)
}
