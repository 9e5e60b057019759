use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, ValueEnum};

use lancaster::bootstrap::BootstrapMethod;
use lancaster::experiment::{
    run_experiment, run_single_test, BandwidthRule, ExperimentKind, ExperimentSpec, ResultRow,
    SingleTestReport,
};
use lancaster::hypothesis::{Correction, TestConfig};
use lancaster::kernels::KernelSpec;
use lancaster::report::{emit_plot, ingest_returns_csv, results_to_csv, IngestOptions};
use lancaster::statistics::KernelTriple;
use lancaster::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ExperimentArg {
    PowerWeakPairwise,
    PowerStrongPairwise,
    FprStudy,
    SingleTest,
}

impl From<ExperimentArg> for ExperimentKind {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::PowerWeakPairwise => ExperimentKind::PowerWeakPairwise,
            ExperimentArg::PowerStrongPairwise => ExperimentKind::PowerStrongPairwise,
            ExperimentArg::FprStudy => ExperimentKind::FprStudy,
            ExperimentArg::SingleTest => ExperimentKind::SingleTest,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CorrectionArg {
    Simple,
    Hb,
}

impl From<CorrectionArg> for Correction {
    fn from(c: CorrectionArg) -> Self {
        match c {
            CorrectionArg::Simple => Correction::Simple,
            CorrectionArg::Hb => Correction::HolmBonferroni,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Wild,
    Perm,
}

impl From<MethodArg> for BootstrapMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Wild => BootstrapMethod::Wild,
            MethodArg::Perm => BootstrapMethod::Permutation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Three-variable interaction tests for time series.
///
/// Simulation experiments (power_weak_pairwise, power_strong_pairwise,
/// fpr_study) write one row per (coefficient, method, correction). Both
/// corrections are always computed on the same datasets; `--correction` and
/// `--method` only filter the rows written.
///
/// single_test reads three price columns from `--input`, converts each to
/// returns x_t - x_{t-1} divided by their sample standard deviation (n - 1
/// denominator), and runs the Lancaster, 3-way HSIC and pairwise HSIC tests.
#[derive(Debug, Parser)]
#[command(name = "lancaster", version, about, long_about)]
struct Cli {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,

    /// Comma-separated coefficient grid (defaults depend on the experiment).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,

    /// Series length.
    #[arg(long)]
    n: Option<usize>,

    /// Datasets per grid point.
    #[arg(long)]
    reps: Option<usize>,

    /// Bootstrap draws per sub-test.
    #[arg(long)]
    bootstraps: Option<usize>,

    /// Dependence length of the wild multiplier process.
    #[arg(long, default_value_t = 20.0)]
    ln: f64,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    #[arg(long, value_enum)]
    correction: Option<CorrectionArg>,

    #[arg(long, value_enum)]
    method: Option<MethodArg>,

    #[arg(long, conflicts_with = "median_heuristic")]
    sigma_x: Option<f64>,

    #[arg(long, conflicts_with = "median_heuristic")]
    sigma_y: Option<f64>,

    #[arg(long, conflicts_with = "median_heuristic")]
    sigma_z: Option<f64>,

    /// Per-variable bandwidth from the median pairwise distance.
    #[arg(long, action = ArgAction::SetTrue)]
    median_heuristic: bool,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Smaller preset (n = 600, 100 reps, 200 bootstraps; 500/200 for fpr_study).
    #[arg(long, action = ArgAction::SetTrue)]
    desk: bool,

    /// Samples discarded at the start of each simulated series.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,

    /// Fill the `seconds` column (makes output run-dependent).
    #[arg(long, action = ArgAction::SetTrue)]
    timing: bool,

    /// Also write an SVG line chart of the rows.
    #[arg(long)]
    plot: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    /// Input CSV for single_test.
    #[arg(long)]
    input: Option<PathBuf>,

    /// Column names for X, Y, Z.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    columns: Option<Vec<String>>,

    /// Window of the processed returns, `start:len` (0-based).
    #[arg(long)]
    rows: Option<String>,

    /// Extra offset for one variable, `column:offset`; the column is a name
    /// from `--columns` or x, y, z. Repeatable.
    #[arg(long)]
    shift: Vec<String>,
}

fn input_error(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn kernels(cli: &Cli) -> lancaster::Result<KernelTriple> {
    let k = |s: Option<f64>| KernelSpec::gaussian(s.unwrap_or(1.0));
    Ok(KernelTriple::new(k(cli.sigma_x)?, k(cli.sigma_y)?, k(cli.sigma_z)?))
}

fn experiment_spec(cli: &Cli, kind: ExperimentKind) -> lancaster::Result<ExperimentSpec> {
    let mut spec = if cli.desk {
        ExperimentSpec::desk(kind)
    } else {
        ExperimentSpec::paper(kind)
    };
    if let Some(g) = &cli.grid {
        spec.grid = g.clone();
    }
    if let Some(n) = cli.n {
        spec.n = n;
    }
    if let Some(r) = cli.reps {
        spec.replications = r;
    }
    if let Some(b) = cli.bootstraps {
        spec.bootstraps = b;
    }
    spec.l_n = cli.ln;
    spec.alpha = cli.alpha;
    spec.bandwidth = if cli.median_heuristic {
        BandwidthRule::MedianHeuristic
    } else {
        BandwidthRule::Fixed(kernels(cli)?)
    };
    spec.burn_in = cli.burn_in;
    spec.seed = cli.seed;
    spec.record_timing = cli.timing;
    spec.validate()?;
    Ok(spec)
}

fn ingest_options(cli: &Cli) -> lancaster::Result<IngestOptions> {
    let cols = cli
        .columns
        .as_ref()
        .ok_or_else(|| input_error("single_test needs --columns X,Y,Z"))?;
    let [x, y, z] = cols.as_slice() else {
        return Err(input_error(format!("--columns needs 3 names, got {}", cols.len())));
    };
    let mut opts = IngestOptions::columns(x, y, z);
    if let Some(rows) = &cli.rows {
        let (start, len) = rows
            .split_once(':')
            .ok_or_else(|| input_error(format!("--rows `{rows}`: expected start:len")))?;
        opts.start = start
            .parse()
            .map_err(|_| input_error(format!("--rows: bad start `{start}`")))?;
        opts.len = Some(
            len.parse()
                .map_err(|_| input_error(format!("--rows: bad length `{len}`")))?,
        );
    }
    for s in &cli.shift {
        let (col, off) = s
            .rsplit_once(':')
            .ok_or_else(|| input_error(format!("--shift `{s}`: expected column:offset")))?;
        let offset: usize = off
            .parse()
            .map_err(|_| input_error(format!("--shift `{s}`: bad offset")))?;
        let v = match col {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            name => opts
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| input_error(format!("--shift: unknown column `{name}`")))?,
        };
        opts.shifts[v] = offset;
    }
    Ok(opts)
}

/// One row per composite test and per pairwise HSIC test; the rejection
/// rate is the 0/1 decision of the single dataset.
fn single_test_rows(r: &SingleTestReport, cfg: &TestConfig) -> Vec<ResultRow> {
    let row = |method: String, correction: &str, reject: bool, stat: f64| ResultRow {
        experiment: ExperimentKind::SingleTest.id().to_string(),
        coefficient: 0.0,
        method,
        correction: correction.to_string(),
        rejection_rate: if reject { 1.0 } else { 0.0 },
        replications: 1,
        mean_statistic: stat,
        seconds: 0.0,
    };
    let mut rows = Vec::new();
    for (name, res) in [("lancaster", &r.lancaster), ("3way-hsic", &r.threeway_hsic)] {
        let stat = res.sub.iter().map(|s| s.statistic).sum::<f64>() / 3.0;
        rows.push(row(
            name.to_string(),
            cfg.correction.label(),
            res.rejects_with(cfg.correction, cfg.alpha),
            stat,
        ));
    }
    for p in &r.pairwise_hsic {
        rows.push(row(
            format!("hsic-{}", p.pair),
            "none",
            p.result.p <= cfg.alpha,
            p.result.statistic,
        ));
    }
    rows
}

fn write_output(cli: &Cli, text: &str) -> lancaster::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render_rows(cli: &Cli, rows: &[ResultRow]) -> lancaster::Result<String> {
    if rows.is_empty() {
        return Err(input_error("the row filters leave nothing to write"));
    }
    match cli.format {
        FormatArg::Csv => results_to_csv(rows),
        FormatArg::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

fn run_single(cli: &Cli) -> lancaster::Result<()> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| input_error("single_test needs --input"))?;
    let data = ingest_returns_csv(path, &ingest_options(cli)?)?;
    let kernels = if cli.median_heuristic {
        BandwidthRule::MedianHeuristic.resolve(&data)?
    } else {
        kernels(cli)?
    };
    let cfg = TestConfig {
        kernels,
        bootstraps: cli.bootstraps.unwrap_or(250),
        l_n: cli.ln,
        alpha: cli.alpha,
        correction: cli.correction.map_or(Correction::Simple, Into::into),
        method: cli.method.map_or(BootstrapMethod::Wild, Into::into),
        seed: cli.seed,
    };
    let report = run_single_test(&data, &cfg)?;
    let p = report.lancaster.p_values();
    eprintln!(
        "n = {}; lancaster p-values (x, y, z) = ({:.4}, {:.4}, {:.4}); reject = {}",
        report.n,
        p[0],
        p[1],
        p[2],
        report.lancaster.rejects_with(cfg.correction, cfg.alpha)
    );
    let rows = single_test_rows(&report, &cfg);
    let text = match cli.format {
        FormatArg::Csv => results_to_csv(&rows)?,
        FormatArg::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    write_output(cli, &text)?;
    if let Some(plot) = &cli.plot {
        emit_plot(&rows, plot)?;
    }
    Ok(())
}

fn run_simulation(cli: &Cli, kind: ExperimentKind) -> lancaster::Result<()> {
    for flag in [("--input", cli.input.is_some()), ("--columns", cli.columns.is_some())] {
        if flag.1 {
            return Err(input_error(format!("{} only applies to single_test", flag.0)));
        }
    }
    let spec = experiment_spec(cli, kind)?;
    let mut rows = run_experiment(&spec)?.rows;
    if let Some(c) = cli.correction {
        let label = Correction::from(c).label();
        rows.retain(|r| r.correction == label);
    }
    if let Some(m) = cli.method {
        let perm = matches!(m, MethodArg::Perm);
        rows.retain(|r| r.method.ends_with("-permutation") == perm);
    }
    write_output(cli, &render_rows(cli, &rows)?)?;
    if let Some(plot) = &cli.plot {
        emit_plot(&rows, plot)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> lancaster::Result<()> {
    match ExperimentKind::from(cli.experiment) {
        ExperimentKind::SingleTest => run_single(cli),
        kind => run_simulation(cli, kind),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
