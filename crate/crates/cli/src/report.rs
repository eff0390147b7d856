//! Report documents: a fixed-width text rendering for people and a JSON form
//! that round-trips exactly.

use std::fmt::Write as _;

use edm_core::inference::{EmpiricalStats, FitResult, FittedModel, Selection};
use edm_core::Precision;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub source: Option<String>,
    pub counts: Vec<u64>,
    pub open_tail: bool,
    pub sha256: String,
}

/// Outcome of one `r` during model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub r: u32,
    pub loglik: Option<f64>,
    pub p_value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub label: String,
    pub model: FittedModel,
    pub loglik: f64,
    pub loglik_error: f64,
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
    pub rmse: f64,
    /// Fitted counts `N f(k)`; with an open tail the last is `N P(X >= K)`.
    pub expected: Vec<f64>,
    /// Pooled chi-square cells as `(first, last)` category ranges.
    pub cells: Vec<(usize, usize)>,
    pub precision: Precision,
    pub converged: bool,
    pub at_bound: bool,
    pub evaluations: u64,
    pub candidates: Vec<CandidateRow>,
}

impl FitRow {
    pub fn new(label: impl Into<String>, fit: &FitResult) -> Self {
        FitRow {
            label: label.into(),
            model: fit.model,
            loglik: fit.loglik,
            loglik_error: fit.loglik_error,
            chi2: fit.gof.chi2,
            df: fit.gof.df,
            p_value: fit.gof.p_value,
            rmse: fit.gof.rmse,
            expected: fit.expected.clone(),
            cells: fit.gof.cells.iter().map(|c| (c.first, c.last)).collect(),
            precision: fit.precision,
            converged: fit.converged,
            at_bound: fit.at_bound,
            evaluations: fit.evaluations,
            candidates: Vec::new(),
        }
    }

    pub fn from_selection(label: impl Into<String>, sel: &Selection) -> Self {
        let mut row = FitRow::new(label, &sel.best);
        row.candidates = sel
            .candidates
            .iter()
            .map(|c| match &c.outcome {
                Ok(f) => CandidateRow {
                    r: c.r,
                    loglik: Some(f.loglik),
                    p_value: Some(f.gof.p_value),
                    error: None,
                },
                Err(e) => CandidateRow {
                    r: c.r,
                    loglik: None,
                    p_value: None,
                    error: Some(e.clone()),
                },
            })
            .collect();
        row
    }
}

/// A published column shown as printed, never recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub counts: Vec<String>,
    pub loglik: String,
    pub chi2: String,
    pub df: u32,
    pub p_value: String,
    pub rmse: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub n: usize,
    pub f: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfReport {
    pub model: String,
    pub m: f64,
    pub precision: Precision,
    pub rows: Vec<PmfRow>,
}

/// One comparison of a computed value against a published one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub column: String,
    pub quantity: String,
    pub published: String,
    pub computed: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(column: &str, quantity: &str, published: &str, want: f64, computed: f64, tolerance: f64) -> Self {
        let delta = computed - want;
        Check {
            column: column.into(),
            quantity: quantity.into(),
            published: published.into(),
            computed,
            delta,
            tolerance,
            pass: delta.abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub title: String,
    pub dataset: Option<DatasetInfo>,
    pub stats: Option<EmpiricalStats>,
    pub references: Vec<ReferenceRow>,
    pub fits: Vec<FitRow>,
    pub pmf: Option<PmfReport>,
    pub checks: Vec<Check>,
    /// Operations that failed outright.
    pub errors: Vec<String>,
    pub notes: Vec<String>,
}

impl ReportDocument {
    pub fn new(title: impl Into<String>) -> Self {
        ReportDocument {
            title: title.into(),
            ..ReportDocument::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are finite")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.pmf {
            // Plain CSV so the output can be piped.
            let _ = writeln!(out, "# {}", self.title);
            render_pmf(&mut out, p);
            return out;
        }
        let _ = writeln!(out, "{}", self.title);
        if let Some(d) = &self.dataset {
            let tail = if d.open_tail { ", open tail" } else { "" };
            let _ = writeln!(out, "dataset {} ({} categories{tail})", d.name, d.counts.len());
            if let Some(src) = &d.source {
                let _ = writeln!(out, "source  {src}");
            }
        }
        if let Some(s) = &self.stats {
            render_stats(&mut out, s);
        }
        if !self.fits.is_empty() || !self.references.is_empty() {
            render_table(&mut out, self);
        }
        for f in &self.fits {
            render_fit_details(&mut out, f);
        }
        if !self.checks.is_empty() {
            render_checks(&mut out, &self.checks);
        }
        for e in &self.errors {
            let _ = writeln!(out, "error: {e}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "note: {n}");
        }
        out
    }
}

/// `x` to `sig` significant figures, in fixed notation.
pub fn sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn render_stats(out: &mut String, s: &EmpiricalStats) {
    let _ = writeln!(out, "N        {}", s.n);
    let _ = writeln!(out, "mean     {:.6}", s.mean);
    let _ = writeln!(out, "variance {:.6}", s.variance);
    let _ = writeln!(out, "skewness {:.4}", s.skewness);
    let _ = writeln!(out, "D        {:.3}", s.dispersion);
    let _ = writeln!(out, "p0       {:.4}", s.zero_fraction);
}

fn precision_name(p: Precision) -> &'static str {
    match p {
        Precision::Double => "double",
        Precision::Extended => "extended",
    }
}

fn render_pmf(out: &mut String, p: &PmfReport) {
    let _ = writeln!(out, "# m={} {} precision", p.m, precision_name(p.precision));
    let _ = writeln!(out, "n,f,cumulative");
    for r in &p.rows {
        let _ = writeln!(out, "{},{:.10e},{:.12}", r.n, r.f, r.cumulative);
    }
}

/// `[3]` from `[3] ABM(r=9)`.
fn tag(label: &str) -> &str {
    match label.find(']') {
        Some(i) if label.starts_with('[') => &label[..=i],
        _ => label,
    }
}

fn render_table(out: &mut String, doc: &ReportDocument) {
    let rows = doc
        .dataset
        .as_ref()
        .map(|d| d.counts.len())
        .or_else(|| doc.fits.first().map(|f| f.expected.len()))
        .unwrap_or(0);
    let mut headers = vec!["count".to_string(), "observed".to_string()];
    let mut cols: Vec<Vec<String>> = Vec::new();
    let mut label_col = vec![];
    for k in 0..rows {
        let plus = doc.dataset.as_ref().is_some_and(|d| d.open_tail && k + 1 == rows);
        label_col.push(format!("{k}{}", if plus { "+" } else { "" }));
    }
    label_col.extend(["L", "chi2", "df", "p-value", "RMSE"].map(String::from));
    let observed: Vec<String> = match &doc.dataset {
        Some(d) => d
            .counts
            .iter()
            .map(|n| n.to_string())
            .chain((0..5).map(|_| String::new()))
            .collect(),
        None => vec![String::new(); rows + 5],
    };
    let mut legend = Vec::new();
    for r in &doc.references {
        headers.push(format!("{} pub", tag(&r.label)));
        legend.push(r.label.as_str());
        let mut c = r.counts.clone();
        c.extend([
            r.loglik.clone(),
            r.chi2.clone(),
            r.df.to_string(),
            r.p_value.clone(),
            r.rmse.clone(),
        ]);
        cols.push(c);
    }
    for f in &doc.fits {
        headers.push(if doc.references.is_empty() {
            f.label.clone()
        } else {
            format!("{} fit", tag(&f.label))
        });
        let mut c: Vec<String> = f.expected.iter().map(|e| format!("{e:.2}")).collect();
        c.resize(rows, String::new());
        c.extend([
            format!("{:.2}", f.loglik),
            sig(f.chi2, 4),
            f.df.to_string(),
            format!("{:.4}", f.p_value),
            sig(f.rmse, 4),
        ]);
        cols.push(c);
    }
    let mut all = vec![label_col, observed];
    all.extend(cols);
    let widths: Vec<usize> = all
        .iter()
        .zip(&headers)
        .map(|(c, h)| c.iter().map(String::len).chain([h.len()]).max().unwrap_or(0))
        .collect();
    let _ = writeln!(out);
    for l in legend {
        let _ = writeln!(out, "{l}");
    }
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "{h:>w$}  ");
    }
    let _ = writeln!(out);
    for i in 0..rows + 5 {
        for (c, w) in all.iter().zip(&widths) {
            let _ = write!(out, "{:>w$}  ", c.get(i).map(String::as_str).unwrap_or(""));
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out);
}

fn render_fit_details(out: &mut String, f: &FitRow) {
    let _ = writeln!(out, "{}: {}", f.label, f.model);
    let cells: Vec<String> = f
        .cells
        .iter()
        .map(|&(a, b)| if a == b { a.to_string() } else { format!("{a}-{b}") })
        .collect();
    let _ = writeln!(
        out,
        "  cells [{}], L error {:.1e}, {} precision, {} evaluations{}{}",
        cells.join(" "),
        f.loglik_error,
        precision_name(f.precision),
        f.evaluations,
        if f.converged { "" } else { ", NOT converged" },
        if f.at_bound { ", at search bound" } else { "" },
    );
    for c in &f.candidates {
        match (&c.error, c.loglik, c.p_value) {
            (Some(e), ..) => {
                let _ = writeln!(out, "  r={}: failed: {e}", c.r);
            }
            (None, Some(l), Some(p)) => {
                let _ = writeln!(out, "  r={}: L={l:.2} p-value={p:.4}", c.r);
            }
            _ => {}
        }
    }
}

fn render_checks(out: &mut String, checks: &[Check]) {
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<24} {:>8} {:>12} {:>14} {:>10} {:>8}",
        "column", "row", "published", "computed", "delta", "tol"
    );
    for c in checks {
        if c.quantity == "sha256" {
            let verdict = if c.pass { "match ok" } else { "differs FAIL" };
            let _ = writeln!(out, "{:<24} {:>8} {:>12} {verdict}", c.column, c.quantity, c.published);
            continue;
        }
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>12} {:>14.4} {:>+10.4} {:>8} {}",
            c.column,
            c.quantity,
            c.published,
            c.computed,
            c.delta,
            c.tolerance,
            if c.pass { "ok" } else { "FAIL" }
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(out, "{} checks, {failed} failed", checks.len());
}
