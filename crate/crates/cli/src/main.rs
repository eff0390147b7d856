use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edm_cli::commands::{self, CliError, CliResult, DatasetRef, Family, FitRequest, PmfRequest};
use edm_cli::report::ReportDocument;
use edm_cli::svg;
use edm_core::Precision;

/// Discrete exponential dispersion models: pmfs, fits and table reproduction.
#[derive(Parser)]
#[command(name = "edm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Empirical statistics of a dataset.
    Stats {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print f(n) and the cumulative mass as CSV.
    Pmf {
        #[arg(long, value_enum)]
        class: Family,
        #[arg(short)]
        r: Option<u32>,
        #[arg(short, allow_negative_numbers = true)]
        p: Option<f64>,
        #[arg(short, allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(short, allow_negative_numbers = true)]
        m: f64,
        /// Largest n; by default the table stops once the mass reaches 1 - eps.
        #[arg(short = 'n')]
        n_max: Option<usize>,
        #[arg(long, default_value_t = edm_core::distributions::DEFAULT_TAIL_EPS)]
        eps: f64,
        #[command(flatten)]
        precision: PrecisionArg,
        /// Also write a bar-chart histogram.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit one model, or select r by the chi-square p-value.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        class: Family,
        #[arg(short)]
        r: Option<u32>,
        #[arg(long)]
        select: bool,
        #[arg(long, default_value_t = 9)]
        rmax: u32,
        #[arg(long)]
        min_expected: Option<f64>,
        /// Pool every category at or above this count into one cell.
        #[arg(long)]
        cut: Option<usize>,
        #[command(flatten)]
        precision: PrecisionArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Refit the model columns of a built-in table and compare with the published values.
    Reproduce {
        table: u8,
        #[command(flatten)]
        precision: PrecisionArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Verify the built-in datasets against their pinned digests.
    SelfCheck {
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DataArgs {
    /// One of set1..set6.
    #[arg(long)]
    builtin: Option<String>,
    /// A `count,frequency` file.
    #[arg(long)]
    file: Option<PathBuf>,
}

impl DataArgs {
    fn source(&self) -> DatasetRef {
        match (&self.builtin, &self.file) {
            (Some(name), _) => DatasetRef::Builtin(name.clone()),
            (None, Some(path)) => DatasetRef::File(path.clone()),
            (None, None) => unreachable!("clap requires one of --builtin, --file"),
        }
    }
}

#[derive(Args)]
struct PrecisionArg {
    #[arg(long, env = "EDM_PRECISION", default_value = "double")]
    precision: Precision,
}

#[derive(Args)]
struct OutArgs {
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn emit(doc: &ReportDocument, out: &OutArgs) -> CliResult<()> {
    print!("{}", doc.render());
    if let Some(path) = &out.json {
        write_file(path, &doc.to_json())?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<ReportDocument> {
    match cli.command {
        Command::Stats { data, out } => {
            let doc = commands::stats(&data.source())?;
            emit(&doc, &out)?;
            Ok(doc)
        }
        Command::Pmf {
            class,
            r,
            p,
            b,
            m,
            n_max,
            eps,
            precision,
            svg: svg_path,
            out,
        } => {
            let doc = commands::pmf(&PmfRequest {
                family: class,
                r,
                p,
                b,
                m,
                n_max,
                eps,
                precision: precision.precision,
            })?;
            emit(&doc, &out)?;
            if let (Some(path), Some(pmf)) = (svg_path, &doc.pmf) {
                let probs: Vec<f64> = pmf.rows.iter().map(|r| r.f).collect();
                write_file(&path, &svg::histogram(&format!("{} m={}", pmf.model, pmf.m), &probs))?;
            }
            Ok(doc)
        }
        Command::Fit {
            data,
            class,
            r,
            select,
            rmax,
            min_expected,
            cut,
            precision,
            out,
        } => {
            let doc = commands::fit(
                &data.source(),
                &FitRequest {
                    family: class,
                    r,
                    select,
                    r_max: rmax,
                    min_expected,
                    cut,
                    precision: precision.precision,
                },
            )?;
            emit(&doc, &out)?;
            Ok(doc)
        }
        Command::Reproduce { table, precision, out } => {
            let doc = commands::reproduce(table, precision.precision)?;
            emit(&doc, &out)?;
            Ok(doc)
        }
        Command::SelfCheck { out } => {
            let doc = commands::self_check()?;
            emit(&doc, &out)?;
            Ok(doc)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(doc) if !doc.errors.is_empty() => ExitCode::from(3),
        Ok(doc) if !doc.passed() => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
