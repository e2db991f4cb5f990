//! `mvindep`: rank-based and Gaussian tests of independence between two
//! groups of variables, their asymptotic efficiencies and Monte Carlo
//! studies.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when the data are too
//! degenerate for the requested computation, 1 otherwise.

mod dataset;
mod render;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvindep::efficiency::{
    are_vdw, are_wilcoxon, bound_trend, hl_lower_bound, table1, table2, table3, AreMethod,
    TABLE_DIMS, TABLE_NUS,
};
use mvindep::montecarlo::{run_power_curve, run_study, SimConfig};
use mvindep::radial::RadialFamily;
use mvindep::ranksigns::Estimator;
use mvindep::testing::{run_test, Method, PairedSample};
use serde::Serialize;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: String) -> Self {
        CliError { code: 2, message }
    }
}

impl From<mvindep::Error> for CliError {
    fn from(e: mvindep::Error) -> Self {
        use mvindep::Error as E;
        let code = match &e {
            _ if e.is_degenerate() => 3,
            E::Domain(_) | E::Model(_) | E::Range(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "mvindep",
    version,
    about = "Tests of independence between two random vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Test independence of the first `p` columns from the rest.
    Test {
        /// Comma-separated data file, one observation per row.
        path: PathBuf,
        #[arg(long = "p")]
        p: usize,
        /// wilks, sign, wilcoxon or vdw.
        #[arg(long, default_value = "vdw")]
        method: Method,
        /// tyler or moment; ignored by wilks.
        #[arg(long, default_value = "tyler")]
        estimator: Estimator,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Asymptotic relative efficiency against Wilks' test.
    Are {
        #[arg(long = "p")]
        p: usize,
        /// Radial family of the first block: gauss[:a], t:<nu>, extremal[:sigma].
        #[arg(long = "f")]
        f: RadialFamily,
        #[arg(long = "q")]
        q: usize,
        /// Radial family of the second block.
        #[arg(long = "g")]
        g: RadialFamily,
        /// vdw or wilcoxon.
        #[arg(long, default_value = "vdw")]
        method: AreMethod,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Efficiency grids: 1 = van der Waerden, 2 = Wilcoxon, 3 = lower bounds.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        which: u8,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: TableFormat,
    },
    /// Hodges–Lehmann lower bound for the Wilcoxon test.
    Bound {
        #[arg(long = "p", required_unless_present = "trend")]
        p: Option<usize>,
        #[arg(long = "q", required_unless_present = "trend")]
        q: Option<usize>,
        /// Print the diagonal bounds (k, k) for k = 1..=TREND instead.
        #[arg(long, conflicts_with_all = ["p", "q"])]
        trend: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Monte Carlo size or power study described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated deltas; runs a power curve and writes an array.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Test {
            path,
            p,
            method,
            estimator,
            alpha,
            format,
        } => cmd_test(&path, p, method, estimator, alpha, format),
        Command::Are {
            p,
            f,
            q,
            g,
            method,
            format,
        } => cmd_are(p, &f, q, &g, method, format),
        Command::Tables { which, out, format } => cmd_tables(which, out.as_deref(), format),
        Command::Bound {
            p,
            q,
            trend,
            format,
        } => cmd_bound(p, q, trend, format),
        Command::Simulate {
            config,
            out,
            seed,
            deltas,
        } => cmd_simulate(&config, out.as_deref(), seed, deltas.as_deref()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError {
                code: 1,
                message: format!("cannot write to standard output: {e}"),
            })
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TestReport {
    method: Method,
    estimator: Option<Estimator>,
    n: usize,
    p: usize,
    q: usize,
    statistic: f64,
    df: usize,
    p_value: f64,
    alpha: f64,
    reject: bool,
}

fn cmd_test(
    path: &Path,
    p: usize,
    method: Method,
    estimator: Estimator,
    alpha: f64,
    format: ReportFormat,
) -> CliResult<()> {
    let ds = dataset::read_dataset(path)?;
    let cols = ds.columns();
    if p == 0 || p >= cols {
        return Err(CliError::input(format!(
            "--p must satisfy 1 <= p < {cols} (the number of columns), got {p}"
        )));
    }
    let sample = PairedSample::from_columns(&ds.data, p)?;
    let r = run_test(&sample, method, estimator, alpha)?;
    let report = TestReport {
        method,
        estimator: (method != Method::Wilks).then_some(estimator),
        n: sample.n(),
        p,
        q: sample.q(),
        statistic: r.statistic,
        df: r.df,
        p_value: r.p_value,
        alpha,
        reject: r.reject,
    };
    let text = match format {
        ReportFormat::Json => to_json(&report),
        ReportFormat::Text => {
            let est = report
                .estimator
                .map(|e| format!(" ({e} standardization)"))
                .unwrap_or_default();
            let decision = if r.reject {
                "reject independence"
            } else {
                "do not reject independence"
            };
            format!(
                "test        {method}{est}\n\
                 n           {}\n\
                 p, q        {p}, {}\n\
                 statistic   {}\n\
                 df          {}\n\
                 p-value     {}\n\
                 alpha       {alpha}\n\
                 decision    {decision}\n",
                report.n, report.q, r.statistic, r.df, r.p_value
            )
        }
    };
    emit(None, &text)
}

fn cmd_are(
    p: usize,
    f: &RadialFamily,
    q: usize,
    g: &RadialFamily,
    method: AreMethod,
    format: ReportFormat,
) -> CliResult<()> {
    let r = match method {
        AreMethod::Vdw => are_vdw(p, f, q, g)?,
        AreMethod::Wilcoxon => are_wilcoxon(p, f, q, g)?,
    };
    let text = match format {
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                f: &'a RadialFamily,
                g: &'a RadialFamily,
                #[serde(flatten)]
                result: mvindep::efficiency::AreResult,
            }
            to_json(&Out { f, g, result: r })
        }
        ReportFormat::Text => format!(
            "{method} vs Wilks, p = {p} ({f}), q = {q} ({g})\n\
             ARE         {:.3}\n\
             exact       {}\n\
             C_p, D_p    {:.9}, {:.9}\n\
             C_q, D_q    {:.9}, {:.9}\n\
             A, B        {:.9}, {:.9}\n",
            r.value, r.value, r.c_p, r.d_p, r.c_q, r.d_q, r.a, r.b
        ),
    };
    emit(None, &text)
}

fn cmd_tables(which: u8, out: Option<&Path>, format: TableFormat) -> CliResult<()> {
    let text = match which {
        1 | 2 => {
            let t = if which == 1 {
                table1(&TABLE_DIMS, &TABLE_NUS)?
            } else {
                table2(&TABLE_DIMS, &TABLE_NUS)?
            };
            match format {
                TableFormat::Csv => render::are_csv(&t),
                TableFormat::Markdown => render::are_markdown(&t),
            }
        }
        _ => {
            let t = table3(&TABLE_DIMS)?;
            match format {
                TableFormat::Csv => render::bound_csv(&t),
                TableFormat::Markdown => render::bound_markdown(&t),
            }
        }
    };
    emit(out, &text)
}

fn cmd_bound(
    p: Option<usize>,
    q: Option<usize>,
    trend: Option<usize>,
    format: ReportFormat,
) -> CliResult<()> {
    if let Some(max_k) = trend {
        if max_k == 0 {
            return Err(CliError::input("--trend must be at least 1".into()));
        }
        let rows = bound_trend(max_k)?;
        let text = match format {
            ReportFormat::Json => to_json(&rows),
            ReportFormat::Text => render::trend_markdown(&rows),
        };
        return emit(None, &text);
    }
    let (p, q) = (p.unwrap_or(0), q.unwrap_or(0));
    if p == 0 || q == 0 {
        return Err(CliError::input(format!(
            "--p and --q must be positive, got {p} and {q}"
        )));
    }
    let b = hl_lower_bound(p, q)?;
    let text = match format {
        ReportFormat::Json => to_json(&b),
        ReportFormat::Text => format!(
            "p, q        {p}, {q}\n\
             c_p, c_q    {}, {}\n\
             ω_p, ω_q    {}, {}\n\
             bound       {:.3}\n\
             exact       {}\n",
            b.c_p, b.c_q, b.omega_p, b.omega_q, b.bound, b.bound
        ),
    };
    emit(None, &text)
}

fn cmd_simulate(
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    deltas: Option<&[f64]>,
) -> CliResult<()> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg: SimConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("invalid config {}: {e}", config.display())))?;
    cfg.seed = seed.unwrap_or(cfg.seed);
    let json = match deltas {
        Some(d) => to_json(&run_power_curve(&cfg, d)?),
        None => to_json(&run_study(&cfg)?),
    };
    emit(out, &json)
}
