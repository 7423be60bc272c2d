use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use trimol::experiments::{
    compare, estimate_with, figure_records, fit_pooled, read_records_from, write_records,
    write_records_to, CompareSettings, EstimateOptions, Estimator, Experiment, ExperimentRecord,
    FigureOptions, FitPoint, DEFAULT_FIGURE_TRIALS, DEFAULT_SEED, FIGURE_TAGS,
};
use trimol::formulas;
use trimol::oracle::{InitialDistribution, Oracle, StepLaw};
use trimol::{Boundary, DiffusionRates, Error, RateScaling, ReactionScheme, Result, Variant};

#[derive(Parser)]
#[command(
    name = "trimol",
    version,
    about = "Collision and reaction times of lattice reaction-diffusion models"
)]
struct Cli {
    /// File of `key = value` lines supplying default flag values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed-form estimate.
    Formula(FormulaArgs),
    /// Monte Carlo estimate of a mean first-passage time.
    Mc(McArgs),
    /// Exact mean first-passage time on a small lattice.
    Oracle(OracleArgs),
    /// Re-fit a constant from CSV records with the log term pinned.
    Fit(FitArgs),
    /// Write the CSV data of a figure.
    Figure(FigureArgs),
    /// Compare formula, Monte Carlo and oracle rows of a CSV file.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// Two walkers on a square lattice (Du, Dv).
    Bimol2d,
    /// Two walkers on a chain (Dv, Dw).
    Bimol1d,
    /// Three walkers on a chain.
    Trimol,
    /// One reacting triplet on a chain.
    Reaction,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bc {
    Periodic,
    Reflective,
}

impl From<Bc> for Boundary {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Periodic => Boundary::Periodic,
            Bc::Reflective => Boundary::Reflective,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scaling {
    #[value(name = "1d")]
    OneD,
    #[value(name = "3d")]
    Macro3D,
}

#[derive(Args, Clone)]
struct PointArgs {
    #[arg(long, value_enum, default_value = "trimol")]
    model: Model,
    /// Domain length.
    #[arg(long = "L", default_value_t = 1.0)]
    length: f64,
    /// Compartments per axis.
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    #[arg(long, value_enum, default_value = "periodic")]
    bc: Bc,
    #[arg(long = "Du")]
    du: Option<f64>,
    #[arg(long = "Dv")]
    dv: Option<f64>,
    #[arg(long = "Dw")]
    dw: Option<f64>,
    /// Reaction rate under the one-dimensional scaling.
    #[arg(long, conflicts_with = "k")]
    k1d: Option<f64>,
    /// Reaction rate under the scaling given by --scaling (3d by default).
    #[arg(long = "k")]
    k_rate: Option<f64>,
    #[arg(long, value_enum)]
    scaling: Option<Scaling>,
}

impl PointArgs {
    fn rate(&self, name: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| Error::InvalidArgument(format!("--{name} is required for this model")))
    }

    fn scheme(&self) -> Result<ReactionScheme> {
        let (rate, scaling) = match (self.k1d, self.k_rate) {
            (Some(k), None) => {
                if self.scaling == Some(Scaling::Macro3D) {
                    return Err(Error::InvalidArgument("--k1d implies --scaling 1d".into()));
                }
                (k, RateScaling::OneD)
            }
            (None, Some(k)) => (
                k,
                match self.scaling.unwrap_or(Scaling::Macro3D) {
                    Scaling::OneD => RateScaling::OneD,
                    Scaling::Macro3D => RateScaling::Macro3D,
                },
            ),
            _ => {
                return Err(Error::InvalidArgument(
                    "give exactly one of --k1d or --k".into(),
                ))
            }
        };
        ReactionScheme::new(Variant::UPlusVPlusW, rate, scaling)
    }

    fn experiment(&self) -> Result<Experiment> {
        let bc = self.bc.into();
        let (l, k) = (self.length, self.k);
        match self.model {
            Model::Bimol2d => Experiment::bimol_2d(
                l,
                k,
                bc,
                self.rate("Du", self.du)?,
                self.rate("Dv", self.dv)?,
            ),
            Model::Bimol1d => Experiment::bimol_1d(
                l,
                k,
                bc,
                self.rate("Dv", self.dv)?,
                self.rate("Dw", self.dw)?,
            ),
            Model::Trimol => Experiment::trimol(l, k, bc, self.rates()?),
            Model::Reaction => Experiment::reaction(l, k, bc, self.rates()?, self.scheme()?),
        }
    }

    fn rates(&self) -> Result<DiffusionRates> {
        DiffusionRates::new(
            self.rate("Du", self.du)?,
            self.rate("Dv", self.dv)?,
            self.rate("Dw", self.dw)?,
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormulaKind {
    /// The mean time of --model.
    Point,
    /// Expansion coefficients of the mean hitting steps for rates (Du, Dv, Dw).
    Montroll,
    /// Mean hitting steps of the simple walk on --K x --K sites.
    Steps,
    /// Anisotropic two-axis walker with rates (Du, Dv).
    Anisotropic,
    /// Mean exit time from an L x L square for diffusion Du.
    ExitMean,
    /// Mean encounter time of two molecules with diffusion Du on [0, L].
    Encounter,
}

#[derive(Args)]
struct FormulaArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, value_enum, default_value = "point")]
    kind: FormulaKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    point: PointArgs,
    #[arg(long, default_value_t = DEFAULT_FIGURE_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Init {
    All,
    NonTarget,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Solve the discrete-time step count of the pseudo-walker instead.
    #[arg(long)]
    steps: bool,
    #[arg(long, value_enum, default_value = "all")]
    init: Init,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitKind {
    /// Two walkers on a square lattice; fits the constant of L^2/(Du+Dv).
    Bimol2d,
    /// Three walkers on a reflective chain; fits the constant of L^2/(Dv+Dw).
    Trimol,
    /// Two walkers on a chain; fits b in mean = b L^2/(Dv+Dw).
    Encounter,
}

#[derive(Args)]
struct FitArgs {
    /// CSV file written by `figure`, `mc` or `oracle`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: FitKind,
    #[arg(long, value_enum, default_value = "reflective")]
    bc: Bc,
    /// Which rows to fit: mc or oracle.
    #[arg(long, default_value = "mc")]
    estimator: String,
}

#[derive(Args)]
struct FigureArgs {
    /// Figure tag, or `all`.
    #[arg(long)]
    tag: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FIGURE_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Only formula and oracle rows.
    #[arg(long)]
    no_mc: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.10)]
    tolerance: f64,
    #[arg(long, default_value_t = 3.0)]
    z: f64,
}

fn emit(out: Option<&Path>, records: &[ExperimentRecord]) -> Result<()> {
    match out {
        Some(path) => write_records_to(path, records),
        None => write_records(std::io::stdout().lock(), records),
    }
}

fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_formula(a: &FormulaArgs) -> Result<()> {
    let p = &a.point;
    let text = match a.kind {
        FormulaKind::Point => {
            let e = p.experiment()?;
            let mut r = e.record("cli-001", "cli", Estimator::Formula);
            r.mean = Some(e.formula()?);
            return emit(a.out.as_deref(), &[r]);
        }
        FormulaKind::Montroll => {
            let c = formulas::MontrollCoefficients::from_rates(&p.rates()?)?;
            let steps = formulas::mean_steps_to_origin((p.k * p.k) as f64, &c)?;
            format!(
                "sigma1_sq = {}\nsigma2_sq = {}\nsigma3_sq = {}\neta = {}\nr = {}\nhat_sigma = {}\nc1 = {}\nc2 = {}\nc3 = {}\nsteps = {}\n",
                c.sigma1_sq, c.sigma2_sq, c.sigma3_sq, c.eta, c.r, c.hat_sigma, c.c1, c.c2, c.c3, steps
            )
        }
        FormulaKind::Steps => format!("steps = {}\n", formulas::nsteps_2d(p.k * p.k)?),
        FormulaKind::Anisotropic => {
            let t = formulas::anisotropic_collision_2d(
                p.length,
                p.length / p.k as f64,
                p.rate("Du", p.du)?,
                p.rate("Dv", p.dv)?,
            )?;
            format!("time = {t}\n")
        }
        FormulaKind::ExitMean => format!(
            "time = {}\n",
            formulas::mean_exit_time_square(p.length, p.rate("Du", p.du)?)?
        ),
        FormulaKind::Encounter => format!(
            "time = {}\n",
            formulas::encounter_time_1d_equal_rates(p.length, p.rate("Du", p.du)?)?
        ),
    };
    emit_text(a.out.as_deref(), &text)
}

fn run_mc(a: &McArgs) -> Result<()> {
    let e = a.point.experiment()?;
    let options = EstimateOptions {
        workers: a.workers,
        ..Default::default()
    };
    let s = estimate_with(&e.sampler(), a.trials, a.seed, options)?;
    if s.n_capped > 0 {
        eprintln!(
            "warning: {} trials hit the event cap and were excluded",
            s.n_capped
        );
    }
    let mut r = e.record("cli-001", "cli", Estimator::Mc);
    r.mean = Some(s.mean);
    r.std_error = Some(s.std_error);
    r.n_trials = Some(s.n_trials);
    r.seed = Some(a.seed);
    emit(a.out.as_deref(), &[r])
}

fn run_oracle(a: &OracleArgs) -> Result<()> {
    let oracle = Oracle::default();
    let init = match a.init {
        Init::All => InitialDistribution::UniformAll,
        Init::NonTarget => InitialDistribution::UniformNonTarget,
    };
    if a.steps {
        let law = StepLaw::from_rates(&a.point.rates()?);
        let r = oracle.expected_steps_discrete_2d(a.point.k, &law, init)?;
        return emit_text(
            a.out.as_deref(),
            &format!(
                "steps = {}\nresidual = {:e}\nstates = {}\n",
                r.expected_time, r.residual, r.states
            ),
        );
    }
    let e = a.point.experiment()?;
    let mean = match init {
        InitialDistribution::UniformAll => e.oracle(&oracle)?,
        InitialDistribution::UniformNonTarget => {
            return Err(Error::InvalidArgument(
                "--init non-target is only available with --steps".into(),
            ))
        }
    };
    let mut r = e.record("cli-001", "cli", Estimator::Oracle);
    r.mean = Some(mean);
    emit(a.out.as_deref(), &[r])
}

fn run_fit(a: &FitArgs) -> Result<()> {
    let estimator: Estimator = a.estimator.parse()?;
    let boundary: Boundary = a.bc.into();
    let records = read_records_from(&a.input)?;
    let mut points = Vec::new();
    for r in records
        .iter()
        .filter(|r| r.estimator == estimator && r.boundary == boundary)
    {
        let Some(mean) = r.mean else { continue };
        let h = r.h();
        let point = match (a.kind, Experiment::from_record(r)?) {
            (FitKind::Bimol2d, Experiment::Bimol2D { du, dv, .. }) => {
                FitPoint::bimolecular_2d(r.length, h, du, dv, mean)
            }
            (FitKind::Trimol, Experiment::Trimol { rates, .. }) => {
                FitPoint::trimolecular_reflective(r.length, h, &rates, mean)
            }
            (FitKind::Encounter, Experiment::Bimol1D { dv, dw, .. }) => {
                FitPoint::encounter_1d(r.length, dv, dw, mean)
            }
            _ => continue,
        };
        points.push(point);
    }
    let fit = fit_pooled(&points)?;
    println!(
        "fixed_slope = {}\nfitted_intercept_coefficient = {}\nresidual_rms = {}\nn_points = {}",
        fit.fixed_slope, fit.fitted_intercept_coefficient, fit.residual_rms, fit.n_points
    );
    Ok(())
}

fn run_figure(a: &FigureArgs) -> Result<()> {
    let options = FigureOptions {
        trials: a.trials,
        seed: a.seed,
        estimate: EstimateOptions {
            workers: a.workers,
            ..Default::default()
        },
        skip_mc: a.no_mc,
    };
    let tags: Vec<&str> = if a.tag == "all" {
        FIGURE_TAGS.to_vec()
    } else {
        vec![a.tag.as_str()]
    };
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    for tag in tags {
        let records = figure_records(tag, &options)?;
        let path = a.out.join(format!("{tag}.csv"));
        write_records_to(&path, &records)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run_compare(a: &CompareArgs) -> Result<()> {
    let records = read_records_from(&a.input)?;
    let settings = CompareSettings {
        formula_tolerance: a.tolerance,
        z: a.z,
    };
    let rows = compare(&records, &settings)?;
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    let mut out = std::io::stdout().lock();
    let io = |e| Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    writeln!(out, "experiment_id,formula,mc,mc_se,oracle,formula_vs_oracle,formula_vs_mc,mc_vs_oracle_z,result").map_err(io)?;
    let mut failed = 0;
    for c in &rows {
        failed += usize::from(!c.pass);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.experiment_id,
            fmt(c.formula),
            fmt(c.mc.map(|m| m.0)),
            fmt(c.mc.map(|m| m.1)),
            fmt(c.oracle),
            fmt(c.formula_vs_oracle),
            fmt(c.formula_vs_mc),
            fmt(c.mc_vs_oracle_z),
            if c.pass { "pass" } else { "FAIL" }
        )
        .map_err(io)?;
    }
    eprintln!("{} of {} points pass", rows.len() - failed, rows.len());
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::StateSpaceCap { .. } => 3,
        Error::Io { .. } => 4,
        Error::Csv(c) if c.is_io_error() => 4,
        Error::Csv(_) => 2,
        e if e.is_validation() => 2,
        _ => 1,
    }
}

/// Reads `key = value` lines, skipping blanks and `#` comments.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                n + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).map(PathBuf::from)
        } else {
            a.strip_prefix("--config=").map(PathBuf::from)
        }
    })
}

/// Appends config values as flags for every option the subcommand accepts
/// and the command line does not already set.
fn merge_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let config = read_config(&path)?;
    let root = Cli::command();
    let Some(sub) = args
        .iter()
        .skip(1)
        .find_map(|a| root.find_subcommand(a))
        .cloned()
    else {
        return Ok(args);
    };
    let given = |name: &str, args: &[String]| {
        args.iter()
            .any(|a| a == &format!("--{name}") || a.starts_with(&format!("--{name}=")))
    };
    for (key, value) in config {
        // Keys for other subcommands are ignored so one file can serve all of them.
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            continue;
        };
        if given(&key, &args) {
            continue;
        }
        if matches!(arg.get_action(), clap::ArgAction::SetTrue) {
            if value == "true" {
                args.push(format!("--{key}"));
            }
        } else {
            args.push(format!("--{key}={value}"));
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = Cli::parse_from(args);
    let result = match &cli.command {
        Command::Formula(a) => run_formula(a),
        Command::Mc(a) => run_mc(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Fit(a) => run_fit(a),
        Command::Figure(a) => run_figure(a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
