//! Command-line front end: `analyze` a CSV dataset, `simulate` a study file,
//! `calibrate` the effect spans of a study.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 data error,
//! 4 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ortrend::dist::Sides;
use ortrend::estimators::{summarize, HcKind, Studentization, VarianceMode};
use ortrend::procedures::{
    mct_with_contrasts, run_test, EvalOptions, TestFamily, TestReport, TestSpec,
};
use ortrend::sim::{run_study, Study};
use ortrend::{Direction, ErrorClass};

pub mod ingest;
pub mod render;

use render::Analysis;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<ortrend::Error> for CliError {
    fn from(e: ortrend::Error) -> Self {
        match e.class() {
            ErrorClass::Data => CliError::Data(e.to_string()),
            ErrorClass::Numeric => CliError::Numeric(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ortrend", version, about = "Order-restricted trend tests for one-way layouts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run trend tests on a long-format CSV dataset.
    Analyze(AnalyzeArgs),
    /// Run a Monte Carlo size/power study.
    Simulate(SimulateArgs),
    /// Find the effect spans of a study's calibrated scenarios.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SidesArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarianceArg {
    Pooled,
    Sandwich,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HcArg {
    Hc0,
    Hc1,
    Hc2,
    Hc3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StudentizeArg {
    Full,
    SigmaOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ContrastsArg {
    Grandmean,
    Williams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
    Csv,
}

/// Options shared by the subcommands.
#[derive(Debug, Args)]
pub struct Shared {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Direction of the ordered alternative.
    #[arg(long, value_enum, default_value = "up")]
    pub direction: DirectionArg,
    /// One- or two-sided contrast tests.
    #[arg(long, value_enum, default_value = "1")]
    pub sides: SidesArg,
    /// Variance estimator of the contrast tests.
    #[arg(long, value_enum, default_value = "pooled")]
    pub variance: VarianceArg,
    /// Sandwich flavor.
    #[arg(long, value_enum, default_value = "hc3")]
    pub hc: HcArg,
    /// Absolute error target of the multivariate t integrator.
    #[arg(long)]
    pub mvt_tol: Option<f64>,
    /// Seed of the multivariate t lattice shifts.
    #[arg(long)]
    pub mvt_seed: Option<u64>,
    /// Seed of the permutation test.
    #[arg(long)]
    pub perm_seed: Option<u64>,
    /// Write a JSON rendering to this path as well.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV file with one observation per row.
    pub input: PathBuf,
    /// Column holding the group (dose level) labels.
    #[arg(long, default_value = "group")]
    pub group: String,
    /// Column holding the responses.
    #[arg(long, default_value = "response")]
    pub response: String,
    /// Comma-separated level order, lowest dose first.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<String>>,
    /// Comma-separated tests: aov, mct, mcte, williams, e2, or table names
    /// such as heMCT1 or MCTEho1.
    #[arg(long, value_delimiter = ',', default_value = "aov,mct,mcte,williams")]
    pub tests: Vec<String>,
    /// Contrast family of the `mct` test.
    #[arg(long, value_enum, default_value = "grandmean")]
    pub contrasts: ContrastsArg,
    /// Custom contrast matrix for the `mct` test (rows of k reals).
    #[arg(long)]
    pub contrast_file: Option<PathBuf>,
    /// Studentization of the contrast statistics.
    #[arg(long, value_enum, default_value = "full")]
    pub studentize: StudentizeArg,
    /// Permutations of the E2 test.
    #[arg(long, default_value_t = 10_000)]
    pub permutations: usize,
    /// Output format on standard output.
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    #[command(flatten)]
    pub shared: Shared,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Study file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write the result table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Replaces the study's default seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replaces the study's significance level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Replaces the study's integrator tolerance.
    #[arg(long)]
    pub mvt_tol: Option<f64>,
    /// Output format on standard output.
    #[arg(long, value_enum, default_value = "text")]
    pub format: FormatArg,
    /// Write the table as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Study file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write a copy of the study with the calibrated spans filled in.
    #[arg(long)]
    pub write: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Replaces the study's default seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let text = match cli.command {
        Command::Analyze(args) => analyze(&args)?,
        Command::Simulate(args) => simulate(&args)?,
        Command::Calibrate(args) => calibrate(&args)?,
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Config(format!("cannot write output: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn eval_options(shared: &Shared) -> Result<EvalOptions, CliError> {
    let mut opts = EvalOptions::default();
    if let Some(tol) = shared.mvt_tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Config(format!("--mvt-tol must lie in (0, 1), got {tol}")));
        }
        opts.mvt = opts.mvt.with_tolerance(tol);
    }
    if let Some(seed) = shared.mvt_seed {
        opts.mvt = opts.mvt.with_seed(seed);
    }
    if let Some(seed) = shared.perm_seed {
        opts.perm_seed = seed;
    }
    Ok(opts)
}

fn direction(arg: DirectionArg) -> Direction {
    match arg {
        DirectionArg::Up => Direction::Increasing,
        DirectionArg::Down => Direction::Decreasing,
    }
}

/// Builds the requested tests. Keywords take the shared sidedness and
/// variance options; table names fix their own.
fn test_specs(args: &AnalyzeArgs) -> Result<Vec<(TestSpec, bool)>, CliError> {
    let s = &args.shared;
    let sides = match s.sides {
        SidesArg::One => Sides::OneSided,
        SidesArg::Two => Sides::TwoSided,
    };
    let variance = match s.variance {
        VarianceArg::Pooled => VarianceMode::Pooled,
        VarianceArg::Sandwich => VarianceMode::Sandwich,
    };
    let hc = match s.hc {
        HcArg::Hc0 => HcKind::Hc0,
        HcArg::Hc1 => HcKind::Hc1,
        HcArg::Hc2 => HcKind::Hc2,
        HcArg::Hc3 => HcKind::Hc3,
    };
    let studentization = match args.studentize {
        StudentizeArg::Full => Studentization::Full,
        StudentizeArg::SigmaOnly => Studentization::SigmaOnly,
    };
    if studentization == Studentization::SigmaOnly && variance == VarianceMode::Sandwich {
        return Err(CliError::Config(
            "--studentize sigma-only divides by the pooled S and cannot be combined with --variance sandwich".into(),
        ));
    }
    let finish = |spec: TestSpec| {
        spec.alpha(s.alpha)
            .direction(direction(s.direction))
            .permutations(args.permutations)
            .hc(hc)
    };
    let with_shared = |family| {
        finish(TestSpec::new(family))
            .sides(sides)
            .variance(variance)
            .studentization(studentization)
    };
    let mut specs = Vec::new();
    for name in &args.tests {
        let name = name.trim();
        // The boolean marks a custom-contrast request.
        let entry = match name.to_ascii_lowercase().as_str() {
            "aov" | "anova" | "f" => (finish(TestSpec::new(TestFamily::AnovaF)), false),
            "e2" => (finish(TestSpec::new(TestFamily::BartholomewPermutation)), false),
            "mcte" => (with_shared(TestFamily::GrandMeanMCTPava), false),
            "williams" => (with_shared(TestFamily::WilliamsMCT), false),
            "mct" => match (&args.contrast_file, args.contrasts) {
                (Some(_), _) => (with_shared(TestFamily::CustomMCT), true),
                (None, ContrastsArg::Grandmean) => (with_shared(TestFamily::GrandMeanMCT), false),
                (None, ContrastsArg::Williams) => (with_shared(TestFamily::WilliamsMCT), false),
            },
            _ => match TestSpec::from_short_name(name) {
                Some(spec) => (finish(spec).studentization(studentization), false),
                None => {
                    return Err(CliError::Config(format!(
                        "unknown test '{name}' (use aov, mct, mcte, williams, e2 or a table name such as MCTEho1)"
                    )))
                }
            },
        };
        specs.push(entry);
    }
    if specs.is_empty() {
        return Err(CliError::Config("no tests selected".into()));
    }
    Ok(specs)
}

pub fn analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let s = &args.shared;
    if !(s.alpha > 0.0 && s.alpha < 1.0) {
        return Err(CliError::Config(format!("--alpha must lie in (0, 1), got {}", s.alpha)));
    }
    if args.permutations == 0 {
        return Err(CliError::Config("--permutations must be >= 1".into()));
    }
    let opts = eval_options(s)?;
    let specs = test_specs(args)?;
    let layout = ingest::ingest_csv(
        &args.input,
        &args.group,
        &args.response,
        args.levels.as_deref(),
    )?;
    let custom = match &args.contrast_file {
        Some(path) if specs.iter().any(|(_, c)| *c) => {
            Some(ingest::read_contrast_file(path, &layout.group_sizes())?)
        }
        _ => None,
    };
    let reports = specs
        .iter()
        .map(|(spec, is_custom)| -> Result<TestReport, CliError> {
            Ok(match (&custom, is_custom) {
                (Some(cm), true) => mct_with_contrasts(&layout, spec, cm, &opts)?,
                _ => run_test(&layout, spec, &opts)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let est = summarize(&layout, VarianceMode::Pooled)?;
    let analysis = Analysis {
        input: args.input.display().to_string(),
        group_column: args.group.clone(),
        response_column: args.response.clone(),
        direction: direction(s.direction),
        groups: render::group_summaries(&layout, direction(s.direction))?,
        pooled_variance: est.pooled_s2,
        df: est.df,
        reports,
    };
    if let Some(path) = &s.json {
        write_file(path, &render::analysis_json(&analysis)?)?;
    }
    match args.format {
        FormatArg::Text => Ok(render::analysis_text(&analysis)),
        FormatArg::Json => render::analysis_json(&analysis),
        FormatArg::Csv => render::analysis_csv(&analysis),
    }
}

fn load_study(path: &Path, seed: Option<u64>) -> Result<Study, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let study = Study::from_json(&text).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(match seed {
        Some(s) => study.with_seed(s),
        None => study,
    })
}

fn config_error(e: ortrend::Error) -> CliError {
    match e {
        ortrend::Error::InvalidInput(m) => CliError::Config(m),
        other => other.into(),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let mut study = load_study(&args.config, args.seed)?;
    if let Some(alpha) = args.alpha {
        study.defaults.alpha = alpha;
    }
    if let Some(tol) = args.mvt_tol {
        study.defaults.mvt_tolerance = tol;
    }
    let (scenarios, calibrations) = study.resolve(args.parallel).map_err(config_error)?;
    let mut table = run_study(&scenarios, args.parallel)?;
    if let Some(pair) = &study.pitman {
        table.add_pitman(pair);
    }
    let csv = render::simulation_csv(&table)?;
    if let Some(path) = &args.out {
        write_file(path, &csv)?;
    }
    let json = || {
        serde_json::to_string_pretty(&table)
            .map(|s| s + "\n")
            .map_err(|e| CliError::Config(format!("cannot serialize table: {e}")))
    };
    if let Some(path) = &args.json {
        write_file(path, &json()?)?;
    }
    Ok(match args.format {
        FormatArg::Text => {
            let mut text = String::new();
            if let Some(name) = &study.name {
                text.push_str(&format!("{name}\n"));
            }
            for c in &calibrations {
                text.push_str(&format!(
                    "calibrated '{}': span {:.6} gives AOV rate {:.3} (target {:.3})\n",
                    c.label, c.span, c.achieved, c.target
                ));
            }
            if !text.is_empty() {
                text.push('\n');
            }
            text + &table.render_text()
        }
        FormatArg::Csv => csv,
        FormatArg::Json => json()?,
    })
}

pub fn calibrate(args: &CalibrateArgs) -> Result<String, CliError> {
    let mut study = load_study(&args.config, args.seed)?;
    let (_, calibrations) = study.resolve(args.parallel).map_err(config_error)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Config(format!("cannot write CSV: {e}"));
    w.write_record(["label", "target", "span", "achieved"]).map_err(csv_err)?;
    for c in &calibrations {
        w.write_record([
            c.label.clone(),
            render::sig12(c.target),
            render::sig12(c.span),
            render::sig12(c.achieved),
        ])
        .map_err(csv_err)?;
        if let Some(entry) = study.scenarios.iter_mut().find(|e| e.label == c.label) {
            entry.span = Some(c.span);
            entry.calibrate_aov = None;
        }
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(path) = &args.write {
        let json = serde_json::to_string_pretty(&study)
            .map_err(|e| CliError::Config(format!("cannot serialize study: {e}")))?;
        write_file(path, &(json + "\n"))?;
    }
    Ok(text)
}
