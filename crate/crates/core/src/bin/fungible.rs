use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};

use fungible::contour::{
    axis_widths_exact, axis_widths_quadratic, f_target, fpe_sample, AxisWidths, ContourTarget, Focal, Scaling,
    TargetMode, DEFAULT_DIRECTIONS,
};
use fungible::discrepancy::{rmsea_from_f, RmseaScale};
use fungible::fit::{fit_ml, FitOptions, FitResult};
use fungible::model::{
    builtin_conditions, misspecify_to_epsilon, symmetrize_checked, ConditionLabel, ModelFile, ModelSpec,
};
use fungible::simstudy::{published_table, run_design, table_check, StudyDesign, StudyTable, TableFormat};
use fungible::Error;

#[derive(Parser)]
#[command(name = "fungible", version, about = "ML fitting, fungible parameter estimates and confidence-set widths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a covariance matrix and print estimates and fit.
    Fit(FitArgs),
    /// Trace a contour and write its points.
    Fpe(FpeArgs),
    /// Quadratic and exact axis widths of a confidence set.
    Confset(ConfsetArgs),
    /// Run the Monte Carlo study and write the widths table.
    Study(StudyArgs),
    /// Check the N-scaling of confidence-set widths in a table.
    TableCheck(TableCheckArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Model description (JSON).
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    model: Option<PathBuf>,
    /// Use a builtin population condition (sigma1..sigma4) instead of a model file.
    #[arg(long)]
    builtin: Option<ConditionLabel>,
    /// Population misfit of the builtin condition.
    #[arg(long, requires = "builtin", default_value_t = 0.0)]
    epsilon: f64,
    /// Covariance matrix (CSV, no header). Defaults to the builtin population covariance.
    #[arg(long, required_unless_present = "builtin")]
    cov: Option<PathBuf>,
    /// Sample size.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    /// Start values: one number per line, or `name,value` lines.
    #[arg(long)]
    start: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    DeltaF,
    EpsTilde,
    Confset,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    Raw,
    Likelihood,
    Relative,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Raw => Scaling::Raw,
            ScalingArg::Likelihood => Scaling::Likelihood,
            ScalingArg::Relative => Scaling::Relative,
        }
    }
}

#[derive(Args)]
struct FocalArgs {
    /// Focal parameters by name or index, comma separated.
    #[arg(long, value_delimiter = ',')]
    focal: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_DIRECTIONS)]
    directions: usize,
}

#[derive(Args)]
struct FpeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    focal: FocalArgs,
    #[arg(long, value_enum, default_value = "delta-f")]
    mode: ModeArg,
    #[arg(long, default_value_t = 0.05)]
    delta_f: f64,
    #[arg(long, default_value_t = 0.005)]
    eps_tilde: f64,
    /// Confidence level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value = "relative")]
    scaling: ScalingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfsetArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    focal: FocalArgs,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study design (JSON); omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-cell results with replication counts (CSV).
    #[arg(long)]
    cells: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    Paper,
}

#[derive(Args)]
struct TableCheckArgs {
    #[arg(long, value_enum, conflicts_with = "table", required_unless_present = "table")]
    fixture: Option<FixtureArg>,
    /// Table file (CSV or markdown) as written by `study`.
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long, default_value_t = 0.015)]
    tolerance: f64,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Domain(format!("cannot write output: {e}"))),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes())
}

fn parse_number(field: &str) -> CliResult<f64> {
    field.parse().map_err(|_| Failure::Domain(format!("not a number: '{field}'")))
}

fn parse_covariance(text: &str) -> CliResult<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in csv_reader(text).records() {
        let rec = rec.map_err(|e| Failure::Domain(format!("covariance: {e}")))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(parse_number).collect::<CliResult<_>>()?);
    }
    let p = rows.len();
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Failure::Domain("covariance must be a square p x p matrix".into()));
    }
    let m = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
    Ok(symmetrize_checked(&m, 1e-10)?)
}

fn parse_start(text: &str, model: &ModelSpec<f64>, s: &DMatrix<f64>) -> CliResult<DVector<f64>> {
    let mut positional = Vec::new();
    let mut named = Vec::new();
    for rec in csv_reader(text).records() {
        let rec = rec.map_err(|e| Failure::Domain(format!("start values: {e}")))?;
        let fields: Vec<&str> = rec.iter().filter(|f| !f.is_empty()).collect();
        match fields.as_slice() {
            [] => {}
            [name, value] if name.parse::<f64>().is_err() => named.push((name.to_string(), parse_number(value)?)),
            values => {
                for v in values {
                    positional.push(parse_number(v)?);
                }
            }
        }
    }
    if !named.is_empty() {
        if !positional.is_empty() {
            return Err(Failure::Domain("start values mix named and positional entries".into()));
        }
        let mut theta = model.start_values(Some(s));
        for (name, value) in named {
            let k = model
                .param_index(&name)
                .ok_or_else(|| Failure::Domain(format!("start values: unknown parameter '{name}'")))?;
            theta[k] = value;
        }
        return Ok(theta);
    }
    if positional.len() != model.q() {
        return Err(Failure::Domain(format!(
            "start values: expected {} numbers, found {}",
            model.q(),
            positional.len()
        )));
    }
    Ok(DVector::from_vec(positional))
}

struct Problem {
    model: ModelSpec<f64>,
    fit: FitResult<f64>,
    default_focal: Option<Vec<String>>,
}

fn load_and_fit(args: &InputArgs) -> CliResult<Problem> {
    let (model, builtin_sigma, default_focal) = match (&args.model, args.builtin) {
        (Some(path), _) => (ModelFile::from_json(&read(path)?)?.to_spec::<f64>()?, None, None),
        (None, Some(label)) => {
            let base = builtin_conditions::<f64>(label.variant());
            let cond = misspecify_to_epsilon(&base, args.epsilon, base.model.df())?;
            (cond.model, Some(cond.sigma_pop), Some(vec!["b1".to_string(), "b2".to_string()]))
        }
        (None, None) => return Err(Failure::Usage("one of --model or --builtin is required".into())),
    };
    let s = match (&args.cov, builtin_sigma) {
        (Some(path), _) => parse_covariance(&read(path)?)?,
        (None, Some(sigma)) => sigma,
        (None, None) => return Err(Failure::Usage("--cov is required with --model".into())),
    };
    if s.nrows() != model.n_observed() {
        return Err(Failure::Domain(format!(
            "covariance is {0} x {0} but the model has {1} observed variables",
            s.nrows(),
            model.n_observed()
        )));
    }
    if args.n < 2 {
        return Err(Failure::Usage("--n must be at least 2".into()));
    }
    let start = match &args.start {
        Some(path) => Some(parse_start(&read(path)?, &model, &s)?),
        None => None,
    };
    let opts = FitOptions { max_iter: args.max_iter, grad_tol: args.grad_tol, start, ..FitOptions::default() };
    let fit = fit_ml(&model, &s, args.n, &opts)?;
    Ok(Problem { model, fit, default_focal })
}

fn resolve_focal(problem: &Problem, args: &FocalArgs) -> CliResult<Focal> {
    let names: Vec<String> = if !args.focal.is_empty() {
        args.focal.clone()
    } else if let Some(default) = &problem.default_focal {
        default.clone()
    } else if problem.model.q() <= 2 {
        problem.model.theta_names().to_vec()
    } else {
        return Err(Failure::Usage("--focal is required for models with more than two parameters".into()));
    };
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(Focal::from_names(&problem.model, &refs)?)
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let p = load_and_fit(&args.input)?;
    let df = p.model.df();
    let mut out = String::from("name,value\n");
    for (name, value) in p.model.theta_names().iter().zip(p.fit.theta_hat.iter()) {
        out += &format!("{name},{value}\n");
    }
    let eps_hat = if df > 0 { rmsea_from_f(p.fit.f_hat, df, RmseaScale::Sample { n: p.fit.n }) } else { 0.0 };
    out += &format!("f_hat,{}\n", p.fit.f_hat);
    out += &format!("epsilon_hat,{eps_hat}\n");
    out += &format!("df,{df}\n");
    out += &format!("iterations,{}\n", p.fit.iterations);
    out += &format!("grad_norm,{:e}\n", p.fit.grad_norm);
    out += &format!("improper,{}\n", p.fit.improper);
    emit(args.out.as_deref(), &out)
}

fn cmd_fpe(args: &FpeArgs) -> CliResult<()> {
    let p = load_and_fit(&args.input)?;
    let focal = resolve_focal(&p, &args.focal)?;
    let target = match args.mode {
        ModeArg::DeltaF => ContourTarget::delta_f(args.delta_f, args.scaling.into()),
        ModeArg::EpsTilde => ContourTarget::epsilon_tilde(args.eps_tilde),
        ModeArg::Confset => ContourTarget::confidence_set(args.level),
    };
    validate_target(&target)?;
    let points = fpe_sample(&p.model, &p.fit, &target, &focal, args.focal.directions)?;
    let mut out = String::from("angle,r");
    for k in 1..=p.model.q() {
        out += &format!(",theta_{k}");
    }
    out += ",f_value\n";
    for pt in points {
        out += &format!("{},{}", pt.angle, pt.r);
        for v in pt.theta.iter() {
            out += &format!(",{v}");
        }
        out += &format!(",{}\n", pt.f_value);
    }
    emit(args.out.as_deref(), &out)
}

fn validate_target(target: &ContourTarget<f64>) -> CliResult<()> {
    let ok = match target.mode {
        TargetMode::DeltaF => target.delta_f >= 0.0,
        TargetMode::EpsilonTilde => target.epsilon_tilde >= 0.0,
        TargetMode::ConfidenceSet => target.confidence > 0.0 && target.confidence < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::Usage("contour level out of range".into()))
    }
}

fn widths_row(method: &str, w: &AxisWidths<f64>) -> String {
    format!("{method},{},{},{},{}\n", w.major, w.minor, w.skipped, w.partial)
}

fn cmd_confset(args: &ConfsetArgs) -> CliResult<()> {
    let p = load_and_fit(&args.input)?;
    let focal = resolve_focal(&p, &args.focal)?;
    let target = ContourTarget::confidence_set(args.level);
    validate_target(&target)?;
    let t = f_target(&target, &p.fit, p.model.df(), focal.len());
    let quadratic = axis_widths_quadratic(&p.fit, t, &focal)?;
    let mut out = String::from("method,major,minor,skipped,partial\n");
    out += &widths_row("quadratic", &quadratic);
    if focal.len() == 2 {
        let exact = axis_widths_exact(&p.model, &p.fit, t, &focal, args.focal.directions)?;
        out += &widths_row("exact", &exact);
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_study(args: &StudyArgs) -> CliResult<()> {
    let mut design = match &args.config {
        Some(path) => StudyDesign::from_json(&read(path)?)?,
        None => StudyDesign::default(),
    };
    if let Some(seed) = args.seed {
        design.seed = seed;
    }
    if let Some(r) = args.replications {
        design.replications = r;
    }
    if let Some(d) = args.directions {
        design.directions = d;
    }
    design.validate()?;
    let table = run_design(&design)?;
    if let Some(path) = &args.cells {
        emit(Some(path), &table.cells_csv())?;
    }
    emit(args.out.as_deref(), &table.emit(args.format))
}

fn cmd_table_check(args: &TableCheckArgs) -> CliResult<bool> {
    let table = match (&args.table, args.fixture) {
        (Some(path), _) => StudyTable::parse(&read(path)?)?,
        (None, Some(FixtureArg::Paper)) => published_table(),
        (None, None) => return Err(Failure::Usage("one of --fixture or --table is required".into())),
    };
    let report = table_check(&table, args.tolerance);
    println!("{report}");
    Ok(report.all_pass())
}

fn configure_threads() -> CliResult<()> {
    if let Ok(value) = std::env::var("FC_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("FC_THREADS must be a positive integer, got '{value}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Domain(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<bool> {
    configure_threads()?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a).map(|_| true),
        Command::Fpe(a) => cmd_fpe(a).map(|_| true),
        Command::Confset(a) => cmd_confset(a).map(|_| true),
        Command::Study(a) => cmd_study(a).map(|_| true),
        Command::TableCheck(a) => cmd_table_check(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
